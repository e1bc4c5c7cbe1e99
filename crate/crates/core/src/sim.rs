//! Iterative full-batch gradient descent, the ground truth the closed forms
//! are checked against.
//!
//! The update uses the unnormalized gradient of `½‖y − XŴ‖² + ½λ‖Ŵ‖²`:
//!
//! ```text
//! Ŵ ← Ŵ − η(−Xᵀ(y − XŴ) + λŴ) + ξ
//! ```

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{check_param, Error, Result};
use crate::exact::check_integer_grid;
use crate::model::{
    gen_error_from_rq, generate_instance, measure_rq, MacroObservables, ModelDims, ModulationSpec, ProblemInstance,
};
use crate::rng::{self, hash64, TAG_UPDATE_NOISE};

/// Literal steps are taken up to this many iterations in `Auto` mode.
pub const STEPWISE_LIMIT: u64 = 4096;

/// How the iterate is carried from one checkpoint to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Propagation {
    /// Literal steps up to [`STEPWISE_LIMIT`], doubling beyond.
    #[default]
    Auto,
    Stepwise,
    /// Jumps by powers of two of the affine step map `w ↦ Mw + c`.
    Doubling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub eta: f64,
    pub lambda: f64,
    /// Standard deviation of the isotropic per-step noise `ξ`.
    pub sgd_noise_std: f64,
    pub checkpoints: Vec<u64>,
    pub base_seed: u64,
    pub num_seeds: usize,
    pub propagation: Propagation,
    pub include_test_noise: bool,
    /// Keep every seed's curve in [`TrajectoryStats::curves`].
    pub keep_curves: bool,
}

impl TrainConfig {
    pub fn new(eta: f64, lambda: f64, checkpoints: Vec<u64>) -> Self {
        TrainConfig {
            eta,
            lambda,
            sgd_noise_std: 0.0,
            checkpoints,
            base_seed: 0,
            num_seeds: 1,
            propagation: Propagation::Auto,
            include_test_noise: false,
            keep_curves: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_param("eta", self.eta, self.eta > 0.0 && self.eta.is_finite(), "must be positive and finite")?;
        check_param("lambda", self.lambda, self.lambda >= 0.0 && self.lambda.is_finite(), "must be finite and >= 0")?;
        check_param(
            "sgd_noise_std",
            self.sgd_noise_std,
            self.sgd_noise_std >= 0.0 && self.sgd_noise_std.is_finite(),
            "must be finite and >= 0",
        )?;
        check_param("num_seeds", self.num_seeds as f64, self.num_seeds >= 1, "must be at least 1")?;
        check_integer_grid(&self.checkpoints)
    }
}

/// One checkpoint of one run, with the training loss alongside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainPoint {
    pub obs: MacroObservables,
    /// `(‖y − XŴ‖² + λ‖Ŵ‖²) / (2n)`.
    pub train_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed_index: usize,
    pub instance_seed: u64,
    pub points: Vec<TrainPoint>,
    /// First checkpoint at which the run had blown up, if any.
    pub diverged_at: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (`n − 1` denominator, 0 for one seed).
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanStd { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, std }
    }

    pub fn std_error(&self, n: usize) -> f64 {
        self.std / (n as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointStats {
    pub t: u64,
    pub r: MeanStd,
    pub q: MeanStd,
    pub gen_error: MeanStd,
    pub train_loss: MeanStd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStats {
    pub checkpoints: Vec<CheckpointStats>,
    /// Seeds that entered the averages.
    pub num_used: usize,
    /// Indices of seeds excluded because they diverged.
    pub diverged: Vec<usize>,
    pub curves: Option<Vec<SeedRun>>,
}

/// The iterate is declared divergent beyond `1e6 √d`.
pub fn divergence_bound(d: usize) -> f64 {
    1e6 * (d as f64).sqrt()
}

struct Stepper<'a> {
    instance: &'a ProblemInstance,
    eta: f64,
    lambda: f64,
    xty: DVector<f64>,
    /// `(M^(2^k), c_(2^k))`, built on demand.
    powers: Vec<(DMatrix<f64>, DVector<f64>)>,
}

impl<'a> Stepper<'a> {
    fn new(instance: &'a ProblemInstance, eta: f64, lambda: f64) -> Self {
        Stepper { instance, eta, lambda, xty: instance.x.tr_mul(&instance.y), powers: Vec::new() }
    }

    fn step(&self, w: &mut DVector<f64>) {
        let x = &self.instance.x;
        let residual = &self.instance.y - x * &*w;
        let grad = -x.tr_mul(&residual) + &*w * self.lambda;
        w.axpy(-self.eta, &grad, 1.0);
    }

    fn power(&mut self, k: usize) -> &(DMatrix<f64>, DVector<f64>) {
        if self.powers.is_empty() {
            let d = self.instance.dims.d;
            let xtx = self.instance.x.tr_mul(&self.instance.x);
            let m = DMatrix::identity(d, d) * (1.0 - self.eta * self.lambda) - xtx * self.eta;
            self.powers.push((m, &self.xty * self.eta));
        }
        while self.powers.len() <= k {
            let (m, c) = self.powers.last().unwrap();
            let next = (m * m, m * c + c);
            self.powers.push(next);
        }
        &self.powers[k]
    }

    /// Advances by `steps` through binary jumps.
    fn jump(&mut self, w: &mut DVector<f64>, steps: u64) {
        let mut remaining = steps;
        let mut k = 0;
        while remaining > 0 {
            if remaining & 1 == 1 {
                let (m, c) = self.power(k);
                *w = m * &*w + c;
            }
            remaining >>= 1;
            k += 1;
        }
    }
}

fn train_loss(instance: &ProblemInstance, w: &DVector<f64>, lambda: f64) -> f64 {
    let residual = &instance.y - &instance.x * w;
    (residual.norm_squared() + lambda * w.norm_squared()) / (2.0 * instance.dims.n as f64)
}

fn run_instance(instance: &ProblemInstance, config: &TrainConfig, noise_seed: Option<u64>) -> Result<SeedRun> {
    let d = instance.dims.d;
    let bound = divergence_bound(d);
    let mut stepper = Stepper::new(instance, config.eta, config.lambda);
    let mut update_noise = noise_seed.map(|s| rng::stream(s, TAG_UPDATE_NOISE));
    let stepwise_only = update_noise.is_some() || config.propagation == Propagation::Stepwise;

    let mut w = DVector::zeros(d);
    let mut now = 0u64;
    let mut points = Vec::with_capacity(config.checkpoints.len());
    let mut diverged_at = None;

    for &target in &config.checkpoints {
        if diverged_at.is_none() {
            while now < target {
                let literal = stepwise_only || (config.propagation == Propagation::Auto && now < STEPWISE_LIMIT);
                if literal {
                    let stop = if stepwise_only { target } else { target.min(STEPWISE_LIMIT) };
                    while now < stop {
                        stepper.step(&mut w);
                        if let Some(rng) = update_noise.as_mut() {
                            for wi in w.iter_mut() {
                                *wi += config.sgd_noise_std * rng.sample::<f64, _>(StandardNormal);
                            }
                        }
                        now += 1;
                        if !(w.norm() <= bound) {
                            break;
                        }
                    }
                    if !(w.norm() <= bound) {
                        break;
                    }
                } else {
                    stepper.jump(&mut w, target - now);
                    now = target;
                }
            }
            if !(w.norm() <= bound) {
                diverged_at = Some(target);
            }
        }
        let (obs, loss) = if diverged_at.is_some() {
            (MacroObservables { t: target as f64, r: f64::NAN, q: f64::NAN, gen_error: f64::NAN }, f64::NAN)
        } else {
            let (r, q) = measure_rq(instance, &w)?;
            let gen_error = gen_error_from_rq(r, q, instance.noise_std, config.include_test_noise);
            (MacroObservables { t: target as f64, r, q, gen_error }, train_loss(instance, &w, config.lambda))
        };
        points.push(TrainPoint { obs, train_loss: loss });
    }
    Ok(SeedRun { seed_index: 0, instance_seed: instance.seed, points, diverged_at })
}

/// Noise-free GD on a given instance; `sgd_noise_std`, `num_seeds` and
/// `base_seed` of the config are ignored.
pub fn train_single(instance: &ProblemInstance, config: &TrainConfig) -> Result<Vec<MacroObservables>> {
    Ok(train_single_run(instance, config)?.points.into_iter().map(|p| p.obs).collect())
}

/// As [`train_single`], keeping the training loss and divergence flag.
pub fn train_single_run(instance: &ProblemInstance, config: &TrainConfig) -> Result<SeedRun> {
    let config = TrainConfig { sgd_noise_std: 0.0, ..config.clone() };
    config.validate()?;
    run_instance(instance, &config, None)
}

/// Instance seed of seed index `s`.
pub fn instance_seed(base_seed: u64, seed_index: usize) -> u64 {
    hash64(&[base_seed, seed_index as u64])
}

/// Runs `num_seeds` independent instances on the current rayon pool and
/// averages them in seed order.
pub fn train(dims: ModelDims, modulation: &ModulationSpec, noise_std: f64, config: &TrainConfig) -> Result<TrajectoryStats> {
    config.validate()?;
    dims.validate()?;
    let runs: Vec<Result<SeedRun>> = (0..config.num_seeds)
        .into_par_iter()
        .map(|s| {
            let seed = instance_seed(config.base_seed, s);
            let instance = generate_instance(dims, modulation, noise_std, seed)?;
            let noise_seed = (config.sgd_noise_std > 0.0).then_some(seed);
            let mut run = run_instance(&instance, config, noise_seed)?;
            run.seed_index = s;
            Ok(run)
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    aggregate(runs, config)
}

fn aggregate(runs: Vec<SeedRun>, config: &TrainConfig) -> Result<TrajectoryStats> {
    let diverged: Vec<usize> = runs.iter().filter(|r| r.diverged_at.is_some()).map(|r| r.seed_index).collect();
    for &s in &diverged {
        log::warn!("seed {s} diverged; excluded from averages");
    }
    let used: Vec<&SeedRun> = runs.iter().filter(|r| r.diverged_at.is_none()).collect();
    if used.is_empty() {
        return Err(Error::AllSeedsDiverged { count: runs.len() });
    }
    let checkpoints = config
        .checkpoints
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let col = |f: &dyn Fn(&TrainPoint) -> f64| MeanStd::of(&used.iter().map(|r| f(&r.points[k])).collect::<Vec<_>>());
            CheckpointStats {
                t,
                r: col(&|p| p.obs.r),
                q: col(&|p| p.obs.q),
                gen_error: col(&|p| p.obs.gen_error),
                train_loss: col(&|p| p.train_loss),
            }
        })
        .collect();
    let num_used = used.len();
    Ok(TrajectoryStats {
        checkpoints,
        num_used,
        diverged,
        curves: config.keep_curves.then_some(runs),
    })
}
