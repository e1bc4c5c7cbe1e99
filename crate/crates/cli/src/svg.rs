//! Standalone SVG renderings of output tables.

use std::collections::BTreeMap;
use std::fmt::Write;

use ddlab_core::engine::{PHASE_Q_RANGE, PHASE_R_RANGE};
use ddlab_core::table::Table;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Lines,
    Heatmap,
    Phase,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("table has no rows")]
    Empty,
    #[error("table does not fit a {kind} plot: {reason}")]
    Schema { kind: &'static str, reason: String },
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];
/// Columns that are coordinates or bookkeeping, never plotted as a series.
const NON_SERIES: [&str; 5] = ["t", "kappa", "seeds", "lambda", "inv_lambda"];

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    log_x: bool,
    log_y: bool,
}

impl Frame {
    fn tx(&self, v: f64) -> f64 {
        let (a, b, v) = if self.log_x { (self.x.0.log10(), self.x.1.log10(), v.log10()) } else { (self.x.0, self.x.1, v) };
        LEFT + (v - a) / span(a, b) * (WIDTH - LEFT - RIGHT)
    }

    fn ty(&self, v: f64) -> f64 {
        let (a, b, v) = if self.log_y { (self.y.0.log10(), self.y.1.log10(), v.log10()) } else { (self.y.0, self.y.1, v) };
        HEIGHT - BOTTOM - (v - a) / span(a, b) * (HEIGHT - TOP - BOTTOM)
    }
}

fn span(a: f64, b: f64) -> f64 {
    if b > a { b - a } else { 1.0 }
}

fn schema(kind: &'static str, reason: impl Into<String>) -> RenderError {
    RenderError::Schema { kind, reason: reason.into() }
}

fn column<'a>(table: &'a Table, kind: &'static str, names: &[&str]) -> Result<(usize, &'a str), RenderError> {
    names
        .iter()
        .find_map(|n| table.column_index(n).map(|i| (i, table.columns[i].name.as_str())))
        .ok_or_else(|| schema(kind, format!("missing column {}", names.join(" or "))))
}

fn finite_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.filter(|v| v.is_finite()).fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

/// Blue (low) to red (high).
fn ramp(f: f64) -> String {
    let f = f.clamp(0.0, 1.0);
    let r = (40.0 + 215.0 * f) as u8;
    let g = (60.0 + 120.0 * (1.0 - (2.0 * f - 1.0).abs())) as u8;
    let b = (255.0 - 215.0 * f) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn open(out: &mut String) {
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
}

fn axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(out, r#"<path d="M{x0} {y0} L{x0} {y1} L{x1} {y1}" fill="none" stroke="black"/>"#);
    for (pos, value) in ticks(frame.x, frame.log_x) {
        let x = frame.tx(pos);
        let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{value}</text>"#, y1 + 5.0, y1 + 18.0);
    }
    for (pos, value) in ticks(frame.y, frame.log_y) {
        let y = frame.ty(pos);
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{value}</text>"#, x0 - 5.0, x0 - 8.0, y + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#, (x0 + x1) / 2.0, HEIGHT - 10.0);
    let _ = writeln!(out, r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{y_label}</text>"#, (y0 + y1) / 2.0, (y0 + y1) / 2.0);
}

fn ticks(range: (f64, f64), log: bool) -> Vec<(f64, String)> {
    if log {
        let (a, b) = (range.0.log10().ceil() as i32, range.1.log10().floor() as i32);
        let step = ((b - a) / 8).max(1);
        (a..=b).step_by(step as usize).map(|e| (10f64.powi(e), format!("1e{e}"))).collect()
    } else {
        (0..=4).map(|k| {
            let v = range.0 + (range.1 - range.0) * k as f64 / 4.0;
            (v, format!("{v:.3}"))
        }).collect()
    }
}

fn legend(out: &mut String, row: usize, color: &str, label: &str) {
    let y = TOP + 10.0 + 18.0 * row as f64;
    let x = WIDTH - RIGHT + 12.0;
    let _ = writeln!(out, r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{label}</text>"#, x + 20.0, x + 26.0, y + 4.0);
}

fn polyline(out: &mut String, frame: &Frame, points: &[(f64, f64)], color: &str) {
    let coords: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", frame.tx(x), frame.ty(y))).collect();
    let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, coords.join(" "));
}

fn group_by_kappa(table: &Table) -> BTreeMap<u64, (f64, Vec<usize>)> {
    let mut groups: BTreeMap<u64, (f64, Vec<usize>)> = BTreeMap::new();
    let kappa = table.column_index("kappa");
    for (i, row) in table.rows.iter().enumerate() {
        let k = kappa.map_or(f64::NAN, |j| row[j]);
        groups.entry(k.to_bits()).or_insert((k, Vec::new())).1.push(i);
    }
    groups
}

pub fn render_svg(table: &Table, kind: PlotKind) -> Result<String, RenderError> {
    if table.is_empty() {
        return Err(RenderError::Empty);
    }
    match kind {
        PlotKind::Lines => render_lines(table),
        PlotKind::Heatmap => render_heatmap(table),
        PlotKind::Phase => render_phase(table),
    }
}

fn render_lines(table: &Table) -> Result<String, RenderError> {
    let (t_col, _) = column(table, "lines", &["t"])?;
    let series: Vec<usize> = (0..table.columns.len()).filter(|&j| !NON_SERIES.contains(&table.columns[j].name.as_str())).collect();
    if series.is_empty() {
        return Err(schema("lines", "no value columns"));
    }
    let positive = finite_range(table.rows.iter().map(|r| r[t_col]).filter(|&t| t > 0.0));
    let all = finite_range(table.rows.iter().map(|r| r[t_col])).ok_or_else(|| schema("lines", "no finite t"))?;
    let log_x = matches!(positive, Some((lo, hi)) if hi / lo >= 100.0);
    let x = if log_x { positive.unwrap() } else { all };
    let y = finite_range(table.rows.iter().flat_map(|r| series.iter().map(move |&j| r[j]))).ok_or_else(|| schema("lines", "no finite values"))?;
    let frame = Frame { x, y, log_x, log_y: false };

    let mut out = String::new();
    open(&mut out);
    axes(&mut out, &frame, if log_x { "t (log)" } else { "t" }, "value");
    let groups = group_by_kappa(table);
    let mut entry = 0;
    for (kappa, rows) in groups.values() {
        for &j in &series {
            let color = PALETTE[entry % PALETTE.len()];
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .map(|&i| (table.rows[i][t_col], table.rows[i][j]))
                .filter(|&(t, v)| v.is_finite() && t.is_finite() && (!log_x || t > 0.0))
                .collect();
            polyline(&mut out, &frame, &pts, color);
            let name = &table.columns[j].name;
            let label = if kappa.is_nan() { name.clone() } else { format!("{name} κ={kappa}") };
            legend(&mut out, entry, color, &label);
            entry += 1;
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn render_heatmap(table: &Table) -> Result<String, RenderError> {
    let (t_col, _) = column(table, "heatmap", &["t"])?;
    let (l_col, l_name) = column(table, "heatmap", &["inv_lambda", "lambda"])?;
    let (v_col, v_name) = column(table, "heatmap", &["L_G_theory", "L_G", "L_G_exact", "L_G_sim"])?;

    let sorted_unique = |col: usize| {
        let mut v: Vec<f64> = table.rows.iter().map(|r| r[col]).filter(|x| *x > 0.0 && x.is_finite()).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let ts = sorted_unique(t_col);
    let ls = sorted_unique(l_col);
    if ts.is_empty() || ls.is_empty() {
        return Err(schema("heatmap", "t and lambda must be positive"));
    }
    let (lo, hi) = finite_range(table.rows.iter().map(|r| r[v_col])).ok_or_else(|| schema("heatmap", "no finite values"))?;
    // Cells are drawn on index coordinates so any grid spacing tiles.
    let cell_w = (WIDTH - LEFT - RIGHT) / ts.len() as f64;
    let cell_h = (HEIGHT - TOP - BOTTOM) / ls.len() as f64;

    let mut out = String::new();
    open(&mut out);
    for row in &table.rows {
        let (Some(i), Some(j)) = (
            ts.iter().position(|&t| t == row[t_col]),
            ls.iter().position(|&l| l == row[l_col]),
        ) else {
            continue;
        };
        let f = if hi > lo { (row[v_col] - lo) / (hi - lo) } else { 0.5 };
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            LEFT + i as f64 * cell_w,
            HEIGHT - BOTTOM - (j + 1) as f64 * cell_h,
            cell_w + 0.3,
            cell_h + 0.3,
            ramp(f)
        );
    }
    let _ = writeln!(out, r#"<path d="M{LEFT} {TOP} L{LEFT} {} L{} {}" fill="none" stroke="black"/>"#, HEIGHT - BOTTOM, WIDTH - RIGHT, HEIGHT - BOTTOM);
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t ({} points)</text>"#, (LEFT + WIDTH - RIGHT) / 2.0, HEIGHT - 10.0, ts.len());
    let _ = writeln!(out, r#"<text x="16" y="{0:.2}" text-anchor="middle" transform="rotate(-90 16 {0:.2})">{l_name} ({1} points)</text>"#, (TOP + HEIGHT - BOTTOM) / 2.0, ls.len());
    color_legend(&mut out, v_name, lo, hi);
    out.push_str("</svg>\n");
    Ok(out)
}

fn color_legend(out: &mut String, name: &str, lo: f64, hi: f64) {
    let x = WIDTH - RIGHT + 20.0;
    let steps = 20;
    let h = (HEIGHT - TOP - BOTTOM) / steps as f64;
    for k in 0..steps {
        let f = 1.0 - k as f64 / (steps - 1) as f64;
        let _ = writeln!(out, r#"<rect x="{x}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#, TOP + k as f64 * h, h + 0.3, ramp(f));
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}">{name} max {hi:.4}</text>"#, x + 20.0, TOP + 10.0);
    let _ = writeln!(out, r#"<text x="{}" y="{}">min {lo:.4}</text>"#, x + 20.0, HEIGHT - BOTTOM);
}

fn render_phase(table: &Table) -> Result<String, RenderError> {
    let (r_col, _) = column(table, "phase", &["R"])?;
    let (q_col, _) = column(table, "phase", &["Q"])?;
    let frame = Frame { x: PHASE_R_RANGE, y: PHASE_Q_RANGE, log_x: false, log_y: false };
    let (nr, nq) = (40, 48);
    let dr = (PHASE_R_RANGE.1 - PHASE_R_RANGE.0) / nr as f64;
    let dq = (PHASE_Q_RANGE.1 - PHASE_Q_RANGE.0) / nq as f64;
    // L_G = (1 + Q − 2R)/2 over the visible box spans [-0.5, 1.1].
    let (lo, hi) = (-0.5, 1.1);

    let mut out = String::new();
    open(&mut out);
    for i in 0..nr {
        for j in 0..nq {
            let r = PHASE_R_RANGE.0 + (i as f64 + 0.5) * dr;
            let q = PHASE_Q_RANGE.0 + (j as f64 + 0.5) * dq;
            let lg = 0.5 * (1.0 + q - 2.0 * r);
            let x = frame.tx(r - 0.5 * dr);
            let y = frame.ty(q + 0.5 * dq);
            let _ = writeln!(
                out,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}" fill-opacity="0.55"/>"#,
                frame.tx(r + 0.5 * dr) - x + 0.3,
                frame.ty(q - 0.5 * dq) - y + 0.3,
                ramp((lg - lo) / (hi - lo))
            );
        }
    }
    axes(&mut out, &frame, "R", "Q");
    for (entry, (_, (kappa, rows))) in group_by_kappa(table).iter().enumerate() {
        let color = PALETTE[entry % PALETTE.len()];
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .map(|&i| (table.rows[i][r_col], table.rows[i][q_col]))
            .filter(|&(r, q)| r.is_finite() && q.is_finite())
            .map(|(r, q)| (r.clamp(PHASE_R_RANGE.0, PHASE_R_RANGE.1), q.clamp(PHASE_Q_RANGE.0, PHASE_Q_RANGE.1)))
            .collect();
        polyline(&mut out, &frame, &pts, color);
        let label = if kappa.is_nan() { "trajectory".to_string() } else { format!("κ={kappa}") };
        legend(&mut out, entry, color, &label);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ddlab_core::table::Column;

    fn heat() -> Table {
        let mut t = Table::new(["t", "lambda", "inv_lambda", "L_G_theory"].map(Column::plain).to_vec());
        for &l in &[0.1, 1.0, 10.0] {
            for &s in &[1.0, 10.0, 100.0, 1000.0] {
                t.push_row(vec![s, l, 1.0 / l, 0.1 * s.log10() + l]).unwrap();
            }
        }
        t
    }

    #[test]
    fn empty_table_is_rejected() {
        let t = Table::with_names(&["t", "L_G"]);
        assert_eq!(render_svg(&t, PlotKind::Lines), Err(RenderError::Empty));
    }

    #[test]
    fn heatmap_has_one_rect_per_cell() {
        let svg = render_svg(&heat(), PlotKind::Heatmap).unwrap();
        let cells = svg.lines().filter(|l| l.starts_with("<rect") && !l.contains("width=\"16\"") && !l.contains("fill=\"white\"")).count();
        assert_eq!(cells, 12);
        assert!(svg.contains("max") && svg.contains("min"));
    }

    #[test]
    fn phase_has_trajectories_and_labels() {
        let mut t = Table::with_names(&["kappa", "t", "R", "Q", "L_G"]);
        for k in [10.0, 100.0] {
            for s in 0..5 {
                t.push_row(vec![k, s as f64, 0.1 * s as f64, 0.05 * s as f64, 0.4]).unwrap();
            }
        }
        let svg = render_svg(&t, PlotKind::Phase).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">R</text>") && svg.contains(">Q</text>"));
    }

    #[test]
    fn lines_use_log_axis_for_wide_grids() {
        let mut t = Table::with_names(&["t", "R", "Q", "L_G"]);
        for e in 0..8 {
            t.push_row(vec![10f64.powi(e), 0.1, 0.2, 0.3]).unwrap();
        }
        let svg = render_svg(&t, PlotKind::Lines).unwrap();
        assert!(svg.contains("t (log)"));
        assert_eq!(svg.matches("<polyline").count(), 3);
    }

    #[test]
    fn schema_mismatch() {
        let t = {
            let mut t = Table::with_names(&["x"]);
            t.push_row(vec![1.0]).unwrap();
            t
        };
        assert!(matches!(render_svg(&t, PlotKind::Heatmap), Err(RenderError::Schema { .. })));
        assert!(matches!(render_svg(&t, PlotKind::Phase), Err(RenderError::Schema { .. })));
    }
}
