//! Quick oracle-equivalence checks run by `ddlab selfcheck`.

use ddlab_core::exact::{exact_curve, gd_iterate_closed_form, SpectralCache, TimeMode};
use ddlab_core::model::{generate_instance, measure_rq, ModelDims, ModulationSpec, ProblemInstance};
use ddlab_core::replica::{bipartite_prediction, block_a, saddle_oracle, single_block_prediction, ReplicaInputs};
use ddlab_core::sim::{train_single, TrainConfig};
use ddlab_core::{Error, MacroObservables};
use reference::gd_loop;

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tolerance: f64) -> Check {
    Check { name, passed: worst <= tolerance, detail: format!("worst {worst:.3e}, tolerance {tolerance:.0e}") }
}

fn instance(seed: u64, noise: f64) -> Result<ProblemInstance, Error> {
    let dims = ModelDims::new(20, 10, 30)?;
    let f = ModulationSpec::bipartite(20, 10, 1.5, 0.5)?;
    generate_instance(dims, &f, noise, seed)
}

mod reference {
    use ddlab_core::ProblemInstance;

    /// Explicit GD steps on plain slices, independent of the closed form.
    pub fn gd_loop(inst: &ProblemInstance, eta: f64, lambda: f64, t: u64) -> Vec<f64> {
        let (n, d) = (inst.dims.n, inst.dims.d);
        let mut w = vec![0.0; d];
        for _ in 0..t {
            let mut grad: Vec<f64> = w.iter().map(|wi| lambda * wi).collect();
            for i in 0..n {
                let pred: f64 = (0..d).map(|j| inst.x[(i, j)] * w[j]).sum();
                let r = inst.y[i] - pred;
                for (j, g) in grad.iter_mut().enumerate() {
                    *g -= inst.x[(i, j)] * r;
                }
            }
            for (wj, g) in w.iter_mut().zip(&grad) {
                *wj -= eta * g;
            }
        }
        w
    }
}

pub fn run_checks() -> Result<Vec<Check>, Error> {
    let mut checks = Vec::new();

    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let inst = instance(seed, 0.5)?;
        for &lambda in &[0.0, 0.1] {
            for &t in &[1u64, 10, 100] {
                let closed = gd_iterate_closed_form(&inst, 0.05, lambda, t)?;
                let iter = gd_loop(&inst, 0.05, lambda, t);
                let scale = iter.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let dev = closed.iter().zip(&iter).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                worst = worst.max(dev / scale);
            }
        }
    }
    checks.push(check("closed form vs explicit GD steps", worst, 1e-8));

    let mut worst: f64 = 0.0;
    for seed in 10..15 {
        let inst = instance(seed, 0.0)?;
        let cache = SpectralCache::new(&inst)?;
        for &t in &[1u64, 10, 100, 10_000] {
            let w = cache.iterate(0.05, 0.01, t, TimeMode::Discrete);
            let (r, q) = measure_rq(&inst, &w)?;
            worst = worst.max((cache.r_trace(0.05, 0.01, t, TimeMode::Discrete) - r).abs());
            worst = worst.max((cache.q_trace(0.05, 0.01, 0.0, t, TimeMode::Discrete) - q).abs());
        }
    }
    checks.push(check("trace formulas vs measured overlaps", worst, 1e-10));

    let mut worst: f64 = 0.0;
    for &alpha in &[0.25, 0.5, 1.0, 2.0, 5.0] {
        for &lt in &[1e-3, 1e-1, 10.0] {
            let s = saddle_oracle(alpha, lt, 0.3, 1e8)?;
            let c = single_block_prediction(alpha, lt, 0.3)?;
            worst = worst.max((s.r - c.r).abs()).max((s.q - c.q).abs());
        }
    }
    checks.push(check("saddle point vs closed form", worst, 1e-10));

    let worst = [0.25, 0.5, 0.9, 1.1, 2.0, 5.0]
        .iter()
        .map(|&a: &f64| (block_a(a, 1e-12) - a.max(1.0)).abs())
        .fold(0.0, f64::max);
    checks.push(check("a -> max(1, alpha) as the ridge vanishes", worst, 1e-6));

    let mut worst: f64 = 0.0;
    for seed in 20..23 {
        let inst = instance(seed, 0.3)?;
        let grid = [0u64, 1, 10, 100, 1000, 10_000];
        let sim = train_single(&inst, &TrainConfig::new(0.05, 0.0, grid.to_vec()))?;
        let exact = exact_curve(&inst, 0.05, 0.0, &grid)?;
        for (a, b) in sim.iter().zip(&exact) {
            worst = worst.max((a.gen_error - b.gen_error).abs());
        }
    }
    checks.push(check("iterative trainer vs closed-form curve", worst, 1e-8));

    let origin = MacroObservables { t: 0.0, r: 0.0, q: 0.0, gen_error: 0.5 };
    let inst = instance(30, 0.3)?;
    let sim = train_single(&inst, &TrainConfig::new(0.05, 0.0, vec![0]))?[0];
    let exact = exact_curve(&inst, 0.05, 0.0, &[0])?[0];
    let inputs = ReplicaInputs {
        dims: inst.dims,
        sigma1: 1.5,
        sigma2: 0.5,
        eta: 0.05,
        lambda: 0.0,
        noise_std: 0.3,
        t: 0.0,
        include_test_noise: false,
    };
    let (_, theory) = bipartite_prediction(&inputs)?;
    let passed = sim == origin && exact == origin && theory == origin;
    checks.push(Check { name: "untrained point in all three engines", passed, detail: "exact (0, 0, 0.5)".into() });

    Ok(checks)
}
