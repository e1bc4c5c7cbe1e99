//! Parameter sweeps that turn the three engines into figure-ready tables, and
//! a shape classifier for learning curves.

use rayon::prelude::*;

use crate::error::{check_param, Error, Result};
use crate::exact::{cache_curve, Averaging, ExactOptions, SpectralCache};
use crate::model::{generate_instance, MacroObservables, ModelDims, ModulationSpec};
use crate::replica::{theory_curve_detailed, ReplicaInputs};
use crate::rng::hash64;
use crate::sim::{instance_seed, train, MeanStd, TrainConfig};
use crate::table::{Column, Table};

pub const DEFAULT_PROMINENCE: f64 = 0.01;
/// Default label noise; large enough for the error bump to be visible.
pub const DEFAULT_NOISE_STD: f64 = 0.3;
pub const DEFAULT_PHASE_KAPPAS: [f64; 4] = [10.0, 1e2, 1e3, 1e5];
/// Background of the phase plot, `(R, Q) ∈ [0, 1] × [0, 1.2]`.
pub const PHASE_R_RANGE: (f64, f64) = (0.0, 1.0);
pub const PHASE_Q_RANGE: (f64, f64) = (0.0, 1.2);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub scale: Scale,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(name: &str, scale: Scale, min: f64, max: f64, count: usize) -> Result<Self> {
        let axis = Axis { name: name.to_string(), scale, min, max, count };
        axis.validate()?;
        Ok(axis)
    }

    /// `t` log-spaced over `10⁰…10⁷`, 60 points.
    pub fn default_time() -> Self {
        Axis { name: "t".into(), scale: Scale::Log, min: 1.0, max: 1e7, count: 60 }
    }

    /// `λ` log-spaced over `10⁻⁶…10¹`, 40 points.
    pub fn default_lambda() -> Self {
        Axis { name: "lambda".into(), scale: Scale::Log, min: 1e-6, max: 1e1, count: 40 }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidGrid(format!("axis {}: {msg}", self.name)));
        if self.count < 2 {
            return fail("needs at least 2 points");
        }
        if !(self.min.is_finite() && self.max.is_finite()) {
            return fail("bounds must be finite");
        }
        if !(self.min < self.max) {
            return fail("min must be below max");
        }
        if self.scale == Scale::Log && !(self.min > 0.0) {
            return fail("log scale needs positive bounds");
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    return self.max;
                }
                let f = i as f64 / last;
                match self.scale {
                    Scale::Linear => self.min + f * (self.max - self.min),
                    Scale::Log => (self.min.ln() + f * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }

    /// Values rounded to whole steps, duplicates removed.
    pub fn integer_values(&self) -> Vec<u64> {
        let mut out: Vec<u64> = self.values().iter().map(|v| v.round().max(0.0) as u64).collect();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EngineKind {
    Theory,
    Exact,
    Simulate,
}

impl EngineKind {
    pub fn name(&self) -> &'static str {
        match self {
            EngineKind::Theory => "theory",
            EngineKind::Exact => "exact",
            EngineKind::Simulate => "simulate",
        }
    }
}

/// Parameters shared by every cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedParams {
    pub d: usize,
    pub p: usize,
    pub n: usize,
    pub sigma1: f64,
    pub eta: f64,
    pub lambda: f64,
    pub noise_std: f64,
    pub include_test_noise: bool,
}

impl FixedParams {
    /// `d = 100, p = 70, n = 150`, `η = 0.1`, `λ = 10⁻⁴`, `σ_ε = 0.3`.
    pub fn standard() -> Self {
        FixedParams {
            d: 100,
            p: 70,
            n: 150,
            sigma1: 1.0,
            eta: 0.1,
            lambda: 1e-4,
            noise_std: DEFAULT_NOISE_STD,
            include_test_noise: false,
        }
    }

    pub fn dims(&self) -> Result<ModelDims> {
        ModelDims::new(self.d, self.p, self.n)
    }

    fn sigma2(&self, kappa: f64) -> f64 {
        self.sigma1 / kappa
    }

    pub fn replica_inputs(&self, kappa: f64, lambda: f64) -> Result<ReplicaInputs> {
        let inputs = ReplicaInputs {
            dims: self.dims()?,
            sigma1: self.sigma1,
            sigma2: self.sigma2(kappa),
            eta: self.eta,
            lambda,
            noise_std: self.noise_std,
            t: 1.0,
            include_test_noise: self.include_test_noise,
        };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn modulation(&self, kappa: f64) -> Result<ModulationSpec> {
        ModulationSpec::bipartite(self.d, self.p, self.sigma1, self.sigma2(kappa))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub fixed: FixedParams,
    pub kappas: Vec<f64>,
    pub t_axis: Axis,
    pub lambda_axis: Axis,
    pub engines: Vec<EngineKind>,
    pub num_seeds: usize,
    pub base_seed: u64,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    pub prominence: f64,
}

impl SweepSpec {
    pub fn new(fixed: FixedParams, kappas: Vec<f64>) -> Self {
        SweepSpec {
            fixed,
            kappas,
            t_axis: Axis::default_time(),
            lambda_axis: Axis::default_lambda(),
            engines: vec![EngineKind::Theory, EngineKind::Exact, EngineKind::Simulate],
            num_seeds: 100,
            base_seed: 0,
            threads: 0,
            prominence: DEFAULT_PROMINENCE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.fixed.dims()?;
        if self.kappas.is_empty() {
            return Err(Error::InvalidGrid("kappa list is empty".into()));
        }
        for &k in &self.kappas {
            check_param("kappa", k, k >= 1.0 && k.is_finite(), "must be finite and >= 1")?;
        }
        check_param("sigma1", self.fixed.sigma1, self.fixed.sigma1 > 0.0 && self.fixed.sigma1.is_finite(), "must be positive and finite")?;
        check_param("eta", self.fixed.eta, self.fixed.eta > 0.0 && self.fixed.eta.is_finite(), "must be positive and finite")?;
        check_param("lambda", self.fixed.lambda, self.fixed.lambda >= 0.0 && self.fixed.lambda.is_finite(), "must be finite and >= 0")?;
        check_param("sigma_eps", self.fixed.noise_std, self.fixed.noise_std >= 0.0 && self.fixed.noise_std.is_finite(), "must be finite and >= 0")?;
        check_param("seeds", self.num_seeds as f64, self.num_seeds >= 1, "must be at least 1")?;
        check_param("prominence", self.prominence, self.prominence > 0.0 && self.prominence < 1.0, "must lie in (0, 1)")?;
        self.t_axis.validate()?;
        self.lambda_axis.validate()
    }

    pub fn runs(&self, engine: EngineKind) -> bool {
        self.engines.contains(&engine)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::InvalidGrid(format!("cannot build thread pool: {e}")))
    }

    /// Base seed of sweep cell `cell`; seeds within it are `hash64(cell seed, s)`.
    pub fn cell_seed(&self, cell: usize) -> u64 {
        hash64(&[self.base_seed, cell as u64])
    }
}

/// Tiny negative roundoff in `L_G` is reported as 0.
pub fn clamp_gen_error(value: f64) -> f64 {
    if (-1e-12..0.0).contains(&value) {
        0.0
    } else {
        value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Monotone,
    SingleDescent,
    DoubleDescent,
    Other,
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::Monotone => "monotone",
            Classification::SingleDescent => "single_descent",
            Classification::DoubleDescent => "double_descent",
            Classification::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    Minimum,
    Maximum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub kind: ExtremumKind,
    pub index: usize,
    pub t: f64,
    /// Smoothed value at the extremum.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveShape {
    pub classification: Classification,
    /// Turning points in time order; the last point is included when the
    /// curve ends on a descent.
    pub extrema: Vec<Extremum>,
}

pub const MIN_CLASSIFY_POINTS: usize = 8;

fn median3(a: f64, b: f64, c: f64) -> f64 {
    a.max(b).min(a.min(b).max(c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    Up,
    Down,
}

/// Classifies `L_G(t)` by its sequence of significant moves.
///
/// Values are median-smoothed over 3 points; a turning point counts once the
/// curve has moved back from it by `prominence` times the smoothed range.
pub fn classify_curve(points: &[(f64, f64)], prominence: f64) -> Result<CurveShape> {
    if points.len() < MIN_CLASSIFY_POINTS {
        return Err(Error::TooFewPoints { required: MIN_CLASSIFY_POINTS, found: points.len() });
    }
    check_param("prominence", prominence, prominence > 0.0, "must be positive")?;
    if points.windows(2).any(|w| !(w[0].0 < w[1].0)) {
        return Err(Error::InvalidGrid("curve times must be strictly increasing".into()));
    }
    if points.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::InvalidGrid("curve values must be finite".into()));
    }

    let n = points.len();
    let raw: Vec<f64> = points.iter().map(|p| p.1).collect();
    let mut s = raw.clone();
    for i in 1..n - 1 {
        s[i] = median3(raw[i - 1], raw[i], raw[i + 1]);
    }
    let (lo, hi) = s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let threshold = prominence * (hi - lo);
    if !(threshold > 0.0) {
        return Ok(CurveShape { classification: Classification::Monotone, extrema: Vec::new() });
    }

    let mut moves = Vec::new();
    let mut extrema = Vec::new();
    let mut trend: Option<Move> = None;
    // Candidate extreme of the current move (or the running min/max before
    // the first move is established).
    let (mut lo_i, mut hi_i) = (0usize, 0usize);
    let mut ext = 0usize;
    let extremum = |kind, i: usize| Extremum { kind, index: i, t: points[i].0, value: s[i] };

    for i in 1..n {
        let v = s[i];
        match trend {
            None => {
                if v < s[lo_i] {
                    lo_i = i;
                }
                if v > s[hi_i] {
                    hi_i = i;
                }
                if v - s[lo_i] >= threshold {
                    trend = Some(Move::Up);
                    if lo_i > 0 {
                        extrema.push(extremum(ExtremumKind::Minimum, lo_i));
                    }
                    ext = i;
                } else if s[hi_i] - v >= threshold {
                    trend = Some(Move::Down);
                    if hi_i > 0 {
                        extrema.push(extremum(ExtremumKind::Maximum, hi_i));
                    }
                    ext = i;
                }
                if let Some(m) = trend {
                    moves.push(m);
                }
            }
            Some(Move::Up) => {
                if v > s[ext] {
                    ext = i;
                } else if s[ext] - v >= threshold {
                    extrema.push(extremum(ExtremumKind::Maximum, ext));
                    moves.push(Move::Down);
                    trend = Some(Move::Down);
                    ext = i;
                }
            }
            Some(Move::Down) => {
                if v < s[ext] {
                    ext = i;
                } else if v - s[ext] >= threshold {
                    extrema.push(extremum(ExtremumKind::Minimum, ext));
                    moves.push(Move::Up);
                    trend = Some(Move::Up);
                    ext = i;
                }
            }
        }
    }
    // The end of a final descent is the second minimum.
    if trend == Some(Move::Down) && ext + 1 == n {
        extrema.push(extremum(ExtremumKind::Minimum, ext));
    }

    use Move::{Down, Up};
    let classification = match moves.as_slice() {
        [] | [Down] | [Up] => Classification::Monotone,
        [Down, Up] => Classification::SingleDescent,
        [Down, Up, Down] | [Down, Up, Down, Up] => Classification::DoubleDescent,
        _ => Classification::Other,
    };
    Ok(CurveShape { classification, extrema })
}

/// Runs `f` over `items` on the spec's pool and returns results in input order.
fn par_ordered<T: Sync, R: Send>(pool: &rayon::ThreadPool, items: &[T], f: impl Fn(usize, &T) -> Result<R> + Sync) -> Result<Vec<R>> {
    pool.install(|| items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect::<Vec<_>>())
        .into_iter()
        .collect()
}

/// Seed-averaged noise-expected exact curve.
fn exact_mean_curve(fixed: &FixedParams, modulation: &ModulationSpec, lambda: f64, grid: &[u64], num_seeds: usize, base_seed: u64) -> Result<Vec<[MeanStd; 3]>> {
    let dims = fixed.dims()?;
    let options = ExactOptions { averaging: Averaging::NoiseExpectation, include_test_noise: fixed.include_test_noise, ..Default::default() };
    let curves: Vec<Vec<MacroObservables>> = (0..num_seeds)
        .into_par_iter()
        .map(|s| {
            let instance = generate_instance(dims, modulation, fixed.noise_std, instance_seed(base_seed, s))?;
            let cache = SpectralCache::new(&instance)?;
            Ok(cache_curve(&cache, fixed.eta, lambda, grid, options))
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<_>>()?;
    Ok((0..grid.len())
        .map(|k| {
            let stat = |f: fn(&MacroObservables) -> f64| MeanStd::of(&curves.iter().map(|c| f(&c[k])).collect::<Vec<_>>());
            [stat(|m| m.r), stat(|m| m.q), stat(|m| m.gen_error)]
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonResult {
    /// `kappa, t, R, Q, L_G` from the replica theory.
    pub theory: Option<Table>,
    /// Seed means of the simulated and/or exact curves.
    pub sim_mean: Option<Table>,
    /// Seed standard deviations, same layout as `sim_mean`.
    pub sim_std: Option<Table>,
    /// `kappa, seed, diverged_at` for every diverged simulation seed.
    pub flagged: Table,
    /// Shape of each theory curve, in `kappas` order.
    pub shapes: Vec<(f64, CurveShape)>,
}

fn stat_columns(simulate: bool, exact: bool) -> Vec<Column> {
    let mut cols = vec![Column::plain("kappa"), Column::new("t", "steps")];
    if simulate {
        cols.extend(["R", "Q", "L_G", "L_T"].map(Column::plain));
    }
    if exact {
        cols.extend(["exact_R", "exact_Q", "exact_L_G"].map(Column::plain));
    }
    cols.push(Column::new("seeds", "count"));
    cols
}

/// Theory vs. seed-averaged GD (and the exact closed form) on one time grid,
/// one block of rows per condition number.
pub fn run_comparison(spec: &SweepSpec) -> Result<ComparisonResult> {
    spec.validate()?;
    let pool = spec.pool()?;
    let fixed = spec.fixed;
    let (theory_on, exact_on, sim_on) = (spec.runs(EngineKind::Theory), spec.runs(EngineKind::Exact), spec.runs(EngineKind::Simulate));
    let grid = spec.t_axis.integer_values();
    // Theory alone may use the real-valued grid; otherwise all engines share integer steps.
    let grid_f: Vec<f64> = if exact_on || sim_on { grid.iter().map(|&t| t as f64).collect() } else { spec.t_axis.values() };

    let mut theory = theory_on.then(|| Table::new(vec![Column::plain("kappa"), Column::new("t", "steps"), Column::plain("R"), Column::plain("Q"), Column::plain("L_G")]));
    let stats_on = exact_on || sim_on;
    let mut sim_mean = stats_on.then(|| Table::new(stat_columns(sim_on, exact_on)));
    let mut sim_std = stats_on.then(|| Table::new(stat_columns(sim_on, exact_on)));
    let mut flagged = Table::new(vec![Column::plain("kappa"), Column::new("seed", "index"), Column::new("diverged_at", "steps")]);
    let mut shapes = Vec::new();

    for (cell, &kappa) in spec.kappas.iter().enumerate() {
        let inputs = fixed.replica_inputs(kappa, fixed.lambda)?;
        let modulation = fixed.modulation(kappa)?;
        let seed = spec.cell_seed(cell);

        let curve = theory_curve_detailed(&inputs, &grid_f)?;
        let on_grid: Vec<&MacroObservables> = curve.iter().map(|(_, m)| m).filter(|m| grid_f.first() == Some(&0.0) || m.t > 0.0).collect();
        let pts: Vec<(f64, f64)> = on_grid.iter().map(|m| (m.t, m.gen_error)).collect();
        if pts.len() >= MIN_CLASSIFY_POINTS {
            shapes.push((kappa, classify_curve(&pts, spec.prominence)?));
        }
        if let Some(table) = theory.as_mut() {
            for m in &on_grid {
                table.push_row(vec![kappa, m.t, m.r, m.q, clamp_gen_error(m.gen_error)])?;
            }
        }

        let sim = if sim_on {
            let mut config = TrainConfig::new(fixed.eta, fixed.lambda, grid.clone());
            config.num_seeds = spec.num_seeds;
            config.base_seed = seed;
            config.include_test_noise = fixed.include_test_noise;
            config.keep_curves = true;
            let dims = fixed.dims()?;
            let stats = pool.install(|| train(dims, &modulation, fixed.noise_std, &config))?;
            if let Some(runs) = &stats.curves {
                for run in runs.iter().filter(|r| r.diverged_at.is_some()) {
                    flagged.push_row(vec![kappa, run.seed_index as f64, run.diverged_at.unwrap() as f64])?;
                }
            }
            Some(stats)
        } else {
            None
        };
        let exact = if exact_on {
            Some(pool.install(|| exact_mean_curve(&fixed, &modulation, fixed.lambda, &grid, spec.num_seeds, seed))?)
        } else {
            None
        };

        if let (Some(mean), Some(std)) = (sim_mean.as_mut(), sim_std.as_mut()) {
            for (k, &t) in grid.iter().enumerate() {
                let mut m_row = vec![kappa, t as f64];
                let mut s_row = vec![kappa, t as f64];
                let mut seeds = spec.num_seeds;
                if let Some(stats) = &sim {
                    let c = &stats.checkpoints[k];
                    m_row.extend([c.r.mean, c.q.mean, clamp_gen_error(c.gen_error.mean), c.train_loss.mean]);
                    s_row.extend([c.r.std, c.q.std, c.gen_error.std, c.train_loss.std]);
                    seeds = stats.num_used;
                }
                if let Some(ex) = &exact {
                    let [r, q, g] = ex[k];
                    m_row.extend([r.mean, q.mean, clamp_gen_error(g.mean)]);
                    s_row.extend([r.std, q.std, g.std]);
                }
                m_row.push(seeds as f64);
                s_row.push(seeds as f64);
                mean.push_row(m_row)?;
                std.push_row(s_row)?;
            }
        }
    }
    Ok(ComparisonResult { theory, sim_mean, sim_std, flagged, shapes })
}

/// `L_G` over the `(t, λ)` plane for the first condition number, long format
/// with `λ` outermost.
pub fn run_heatmap(spec: &SweepSpec) -> Result<Table> {
    spec.validate()?;
    let pool = spec.pool()?;
    let fixed = spec.fixed;
    let kappa = spec.kappas[0];
    let (exact_on, sim_on) = (spec.runs(EngineKind::Exact), spec.runs(EngineKind::Simulate));
    let integer_grid = spec.t_axis.integer_values();
    let times: Vec<f64> = if exact_on || sim_on {
        integer_grid.iter().map(|&t| t as f64).collect()
    } else {
        spec.t_axis.values()
    };
    let lambdas = spec.lambda_axis.values();
    let modulation = fixed.modulation(kappa)?;

    let mut columns = vec![Column::new("t", "steps"), Column::plain("lambda"), Column::plain("inv_lambda"), Column::plain("L_G_theory")];
    if exact_on {
        columns.push(Column::plain("L_G_exact"));
    }
    if sim_on {
        columns.push(Column::plain("L_G_sim"));
    }

    let blocks = par_ordered(&pool, &lambdas, |cell, &lambda| {
        let inputs = fixed.replica_inputs(kappa, lambda)?;
        let theory = theory_curve_detailed(&inputs, &times)?;
        let theory: Vec<f64> = theory.iter().filter(|(_, m)| times[0] == 0.0 || m.t > 0.0).map(|(_, m)| m.gen_error).collect();
        let seed = spec.cell_seed(cell);
        let exact = if exact_on {
            Some(exact_mean_curve(&fixed, &modulation, lambda, &integer_grid, spec.num_seeds, seed)?)
        } else {
            None
        };
        let sim = if sim_on {
            let mut config = TrainConfig::new(fixed.eta, lambda, integer_grid.clone());
            config.num_seeds = spec.num_seeds;
            config.base_seed = seed;
            config.include_test_noise = fixed.include_test_noise;
            Some(train(fixed.dims()?, &modulation, fixed.noise_std, &config)?)
        } else {
            None
        };
        let mut rows = Vec::with_capacity(times.len());
        for (k, &t) in times.iter().enumerate() {
            let mut row = vec![t, lambda, 1.0 / lambda, clamp_gen_error(theory[k])];
            if let Some(ex) = &exact {
                row.push(clamp_gen_error(ex[k][2].mean));
            }
            if let Some(stats) = &sim {
                row.push(clamp_gen_error(stats.checkpoints[k].gen_error.mean));
            }
            rows.push(row);
        }
        Ok(rows)
    })?;

    let mut table = Table::new(columns);
    for row in blocks.into_iter().flatten() {
        table.push_row(row)?;
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseResult {
    /// `kappa, t, R, Q, L_G`, each trajectory starting at the origin.
    pub trajectories: Table,
    /// `R, Q, L_G` on a regular grid.
    pub background: Table,
    pub shapes: Vec<(f64, CurveShape)>,
}

/// Theory trajectories in the `(R, Q)` plane over the `L_G` landscape.
pub fn run_phase(spec: &SweepSpec, background_r: usize, background_q: usize) -> Result<PhaseResult> {
    spec.validate()?;
    if background_r < 2 || background_q < 2 {
        return Err(Error::InvalidGrid("phase background needs at least 2 points per axis".into()));
    }
    let fixed = spec.fixed;
    let times = spec.t_axis.values();
    let mut trajectories = Table::new(vec![Column::plain("kappa"), Column::new("t", "steps"), Column::plain("R"), Column::plain("Q"), Column::plain("L_G")]);
    let mut shapes = Vec::new();
    for &kappa in &spec.kappas {
        let curve = theory_curve_detailed(&fixed.replica_inputs(kappa, fixed.lambda)?, &times)?;
        for (_, m) in &curve {
            trajectories.push_row(vec![kappa, m.t, m.r, m.q, clamp_gen_error(m.gen_error)])?;
        }
        let pts: Vec<(f64, f64)> = curve.iter().map(|(_, m)| (m.t, m.gen_error)).collect();
        shapes.push((kappa, classify_curve(&pts, spec.prominence)?));
    }

    let test_noise = if fixed.include_test_noise { fixed.noise_std * fixed.noise_std } else { 0.0 };
    let mut background = Table::new(vec![Column::plain("R"), Column::plain("Q"), Column::plain("L_G")]);
    let r_axis = Axis::new("R", Scale::Linear, PHASE_R_RANGE.0, PHASE_R_RANGE.1, background_r)?.values();
    let q_axis = Axis::new("Q", Scale::Linear, PHASE_Q_RANGE.0, PHASE_Q_RANGE.1, background_q)?.values();
    for &q in &q_axis {
        for &r in &r_axis {
            background.push_row(vec![r, q, 0.5 * (1.0 + test_noise + q - 2.0 * r)])?;
        }
    }
    Ok(PhaseResult { trajectories, background, shapes })
}

/// Per-block alignments `R₁(t)`, `R₂(t)` and their sum for the first
/// condition number.
pub fn run_r_decomposition(spec: &SweepSpec) -> Result<Table> {
    spec.validate()?;
    let fixed = spec.fixed;
    let curve = theory_curve_detailed(&fixed.replica_inputs(spec.kappas[0], fixed.lambda)?, &spec.t_axis.values())?;
    let mut table = Table::new(vec![Column::new("t", "steps"), Column::plain("R1"), Column::plain("R2"), Column::plain("R")]);
    for (p, m) in &curve {
        table.push_row(vec![m.t, p.r[0], p.r[1], p.r_total()])?;
    }
    Ok(table)
}
