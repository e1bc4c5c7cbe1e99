//! `ddlab`: command-line front end. Every subcommand reads a flat config,
//! applies flag overrides, computes all tables and only then writes files.

pub mod config;
pub mod output;
pub mod selfcheck;
pub mod svg;
pub mod tgrid;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use ddlab_core::engine::{run_comparison, run_heatmap, run_phase, run_r_decomposition, EngineKind};
use ddlab_core::{CurveShape, Table};

use config::{parse_config, ConfigError, Format, Settings, Subcommand};
use output::{write_csv, write_json, OutputTable, Provenance};
use svg::{render_svg, PlotKind};

pub const THREADS_ENV: &str = "DDLAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "ddlab", version, about = "Epoch-wise double descent: theory, exact dynamics and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, ClapSubcommand)]
pub enum Command {
    /// Replica-theory learning curve.
    TheoryCurve(RunArgs),
    /// Closed-form gradient-descent curve, averaged over label noise.
    ExactCurve(RunArgs),
    /// Seed-averaged iterative gradient descent.
    Simulate(RunArgs),
    /// Theory against simulation and the exact curve.
    Compare(RunArgs),
    /// Generalization error over training time and ridge strength.
    Heatmap(RunArgs),
    /// Trajectories in the (R, Q) plane.
    Phase(RunArgs),
    /// Per-block alignment of the bipartite model.
    Rdecomp(RunArgs),
    /// Oracle-equivalence checks.
    Selfcheck,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment file with `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// csv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// Also write an SVG plot next to each table.
    #[arg(long)]
    pub svg: bool,
    /// Worker threads (0 = all cores). Falls back to DDLAB_THREADS.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Base seed.
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    /// Condition number, or a comma-separated list.
    #[arg(long)]
    pub kappa: Option<String>,
    #[arg(long = "sigma-eps")]
    pub sigma_eps: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub eta: Option<String>,
    /// `log|lin:<min>:<max>:<count>`
    #[arg(long = "t-grid")]
    pub t_grid: Option<String>,
    #[arg(long)]
    pub seeds: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        [
            ("train.base_seed", &self.seed),
            ("dims.d", &self.d),
            ("dims.n", &self.n),
            ("dims.p", &self.p),
            ("modulation.kappa", &self.kappa),
            ("noise.sigma_eps", &self.sigma_eps),
            ("train.lambda", &self.lambda),
            ("train.eta", &self.eta),
            ("sweep.t_grid", &self.t_grid),
            ("train.seeds", &self.seeds),
            ("output.format", &self.format),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }
}

/// Failure of a run, mapped onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or input: exit 1.
    Config(String),
    /// Numerical or output failure: exit 2.
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<ddlab_core::Error> for Failure {
    fn from(e: ddlab_core::Error) -> Self {
        if e.is_input_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

/// Resolves defaults, the config file and flag overrides, in that order.
pub fn resolve_settings(cmd: Subcommand, args: &RunArgs) -> Result<Settings, Failure> {
    let mut settings = Settings::defaults(cmd);
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        settings.apply_entries(&parse_config(&text)?)?;
    }
    for (key, value) in args.overrides() {
        settings.apply(key, value)?;
    }
    if args.svg {
        settings.svg = true;
    }
    settings.validate()?;
    Ok(settings)
}

fn thread_budget(args: &RunArgs) -> Result<usize, Failure> {
    if let Some(n) = args.threads {
        return Ok(n);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Config(format!("{THREADS_ENV}: `{v}` is not a thread count"))),
        Err(_) => Ok(0),
    }
}

/// One file to be written: stem, table and optional plot kind.
struct Artifact {
    stem: &'static str,
    table: Table,
    plot: Option<PlotKind>,
}

fn artifact(stem: &'static str, table: Table, plot: Option<PlotKind>) -> Artifact {
    Artifact { stem, table, plot }
}

fn drop_column(table: Table, name: &str) -> Table {
    let Some(idx) = table.column_index(name) else { return table };
    let keep = |row: &Vec<f64>| row.iter().enumerate().filter(|(i, _)| *i != idx).map(|(_, &v)| v).collect();
    Table {
        columns: table.columns.iter().enumerate().filter(|(i, _)| *i != idx).map(|(_, c)| c.clone()).collect(),
        rows: table.rows.iter().map(keep).collect(),
    }
}

fn rename_columns(mut table: Table, from_prefix: &str) -> Table {
    for c in &mut table.columns {
        if let Some(rest) = c.name.strip_prefix(from_prefix) {
            c.name = rest.to_string();
        }
    }
    table
}

fn print_shapes(shapes: &[(f64, CurveShape)]) {
    for (kappa, shape) in shapes {
        println!("kappa = {kappa}: {}", shape.classification.name());
    }
}

fn compute(cmd: Subcommand, settings: &Settings, threads: usize) -> Result<Vec<Artifact>, Failure> {
    let mut spec = settings.sweep(threads);
    let single = settings.kappas.len() == 1;
    let squeeze = |t: Table| if single { drop_column(t, "kappa") } else { t };
    let lines = Some(PlotKind::Lines);
    let mut out = Vec::new();
    match cmd {
        Subcommand::TheoryCurve => {
            spec.engines = vec![EngineKind::Theory];
            let res = run_comparison(&spec)?;
            print_shapes(&res.shapes);
            out.push(artifact("theory_curve", squeeze(res.theory.expect("theory engine enabled")), lines));
        }
        Subcommand::ExactCurve => {
            spec.engines = vec![EngineKind::Exact];
            let res = run_comparison(&spec)?;
            let mean = rename_columns(res.sim_mean.expect("exact engine enabled"), "exact_");
            out.push(artifact("exact_curve", squeeze(mean), lines));
            if settings.seeds > 1 {
                let std = rename_columns(res.sim_std.expect("exact engine enabled"), "exact_");
                out.push(artifact("exact_curve_std", squeeze(std), None));
            }
        }
        Subcommand::Simulate => {
            spec.engines = vec![EngineKind::Simulate];
            let res = run_comparison(&spec)?;
            out.push(artifact("simulate_mean", squeeze(res.sim_mean.expect("simulation enabled")), lines));
            out.push(artifact("simulate_std", squeeze(res.sim_std.expect("simulation enabled")), None));
            if !res.flagged.is_empty() {
                out.push(artifact("flagged", res.flagged, None));
            }
        }
        Subcommand::Compare => {
            let res = run_comparison(&spec)?;
            print_shapes(&res.shapes);
            if let Some(t) = res.theory {
                out.push(artifact("theory", t, lines));
            }
            if let Some(t) = res.sim_mean {
                out.push(artifact("sim_mean", t, lines));
            }
            if let Some(t) = res.sim_std {
                out.push(artifact("sim_std", t, None));
            }
            if !res.flagged.is_empty() {
                out.push(artifact("flagged", res.flagged, None));
            }
        }
        Subcommand::Heatmap => {
            out.push(artifact("heatmap", run_heatmap(&spec)?, Some(PlotKind::Heatmap)));
        }
        Subcommand::Phase => {
            let res = run_phase(&spec, settings.r_points, settings.q_points)?;
            print_shapes(&res.shapes);
            out.push(artifact("phase_trajectories", res.trajectories, Some(PlotKind::Phase)));
            out.push(artifact("phase_background", res.background, None));
        }
        Subcommand::Rdecomp => {
            out.push(artifact("rdecomp", run_r_decomposition(&spec)?, lines));
        }
        Subcommand::Selfcheck => unreachable!("selfcheck has no tables"),
    }
    Ok(out)
}

/// Writes every artifact; on failure the files already written are removed.
fn write_all(dir: &Path, artifacts: &[Artifact], provenance: &Provenance, settings: &Settings) -> Result<Vec<PathBuf>, Failure> {
    let mut rendered: Vec<(PathBuf, String)> = Vec::new();
    for a in artifacts {
        let table = OutputTable { provenance: provenance.clone(), table: a.table.clone() };
        let (ext, text) = match settings.format {
            Format::Csv => ("csv", write_csv(&table)),
            Format::Json => ("json", write_json(&table)),
        };
        rendered.push((dir.join(format!("{}.{ext}", a.stem)), text));
        if let (true, Some(kind)) = (settings.svg, a.plot) {
            let svg = render_svg(&a.table, kind).map_err(|e| Failure::Runtime(format!("{}: {e}", a.stem)))?;
            rendered.push((dir.join(format!("{}.svg", a.stem)), svg));
        }
    }

    let mut written = Vec::new();
    let result = fs::create_dir_all(dir)
        .map_err(|e| format!("cannot create {}: {e}", dir.display()))
        .and_then(|()| {
            for (path, text) in &rendered {
                fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
                written.push(path.clone());
            }
            Ok(())
        });
    if let Err(message) = result {
        for path in &written {
            let _ = fs::remove_file(path);
        }
        return Err(Failure::Runtime(message));
    }
    Ok(written)
}

fn run_tables(cmd: Subcommand, args: &RunArgs) -> Result<(), Failure> {
    let settings = resolve_settings(cmd, args)?;
    let threads = thread_budget(args)?;
    log::info!("{}: {} condition number(s), {} thread(s)", cmd.name(), settings.kappas.len(), threads);
    let artifacts = compute(cmd, &settings, threads)?;
    let provenance = Provenance {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: cmd.name().to_string(),
        seed: settings.base_seed,
        echo: settings.echo(),
    };
    for path in write_all(&args.out, &artifacts, &provenance, &settings)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_selfcheck() -> Result<(), Failure> {
    let checks = selfcheck::run_checks()?;
    let mut failed = 0;
    for c in &checks {
        println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}

/// Runs the tool on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::TheoryCurve(a) => run_tables(Subcommand::TheoryCurve, a),
        Command::ExactCurve(a) => run_tables(Subcommand::ExactCurve, a),
        Command::Simulate(a) => run_tables(Subcommand::Simulate, a),
        Command::Compare(a) => run_tables(Subcommand::Compare, a),
        Command::Heatmap(a) => run_tables(Subcommand::Heatmap, a),
        Command::Phase(a) => run_tables(Subcommand::Phase, a),
        Command::Rdecomp(a) => run_tables(Subcommand::Rdecomp, a),
        Command::Selfcheck => run_selfcheck(),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ddlab_core::Column;

    fn table(names: &[&str], rows: Vec<Vec<f64>>) -> Table {
        Table { columns: names.iter().map(|n| Column::plain(n)).collect(), rows }
    }

    #[test]
    fn drops_and_renames_columns() {
        let t = table(&["kappa", "t", "exact_R"], vec![vec![1.0, 2.0, 3.0]]);
        let t = rename_columns(drop_column(t, "kappa"), "exact_");
        assert_eq!(t.columns.iter().map(|c| c.name.as_str()).collect::<Vec<_>>(), ["t", "R"]);
        assert_eq!(t.rows, vec![vec![2.0, 3.0]]);
    }

    #[test]
    fn flags_override_config() {
        let cli = Cli::try_parse_from(["ddlab", "theory-curve", "--kappa", "10", "--d", "40", "--p", "20"]).unwrap();
        let Command::TheoryCurve(args) = cli.command else { panic!() };
        let s = resolve_settings(Subcommand::TheoryCurve, &args).unwrap();
        assert_eq!((s.kappas.as_slice(), s.d, s.p), (&[10.0][..], 40, 20));
    }

    #[test]
    fn bad_flag_value_is_a_config_failure() {
        let cli = Cli::try_parse_from(["ddlab", "compare", "--eta=-1"]).unwrap();
        let Command::Compare(args) = cli.command else { panic!() };
        let err = resolve_settings(Subcommand::Compare, &args).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.message().contains("train.eta"));
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["ddlab", "frobnicate"]), 1);
        assert_eq!(run(["ddlab", "--version"]), 0);
    }
}
