//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any fails. Reference values come from independent
//! computations in this file (plain GD loops, Monte Carlo averages, direct
//! overlap sums) rather than from the library routines under test.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use ddlab::output::parse_csv;
use ddlab_core::engine::{classify_curve, run_heatmap, run_phase, Axis, Classification, EngineKind, FixedParams, Scale, SweepSpec, DEFAULT_PROMINENCE};
use ddlab_core::exact::{exact_curve, gd_iterate_closed_form, q_trace, r_trace, ridge_solution, SpectralCache};
use ddlab_core::model::{generate_instance, MacroObservables, ModelDims, ModulationSpec, ProblemInstance};
use ddlab_core::replica::{bipartite_prediction, block_a, effective_ridge, saddle_oracle, single_block_prediction, ReplicaInputs};
use ddlab_core::rng::hash64;
use ddlab_core::sim::{train_single, TrainConfig};
use ddlab_core::Table;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;

struct Report {
    failures: usize,
}

impl Report {
    fn record(&mut self, id: u32, title: &str, limit: Duration, run: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (mut ok, mut detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        if elapsed > limit {
            ok = false;
            detail.push_str(&format!("; over the {:.0} s budget", limit.as_secs_f64()));
        }
        println!("{} {id:>2} {title}: {detail} [{:.2} s]", if ok { "PASS" } else { "FAIL" }, elapsed.as_secs_f64());
        self.failures += usize::from(!ok);
    }
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok { Ok(detail) } else { Err(detail) }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    format!("error: {e}")
}

/// Plain-slice gradient descent on `(‖y − Xw‖² + λ‖w‖²)/2`.
fn gd_loop(x: &DMatrix<f64>, y: &DVector<f64>, eta: f64, lambda: f64, steps: u64) -> Vec<f64> {
    let (n, d) = x.shape();
    let mut w = vec![0.0; d];
    for _ in 0..steps {
        let residual: Vec<f64> = (0..n).map(|i| y[i] - (0..d).map(|j| x[(i, j)] * w[j]).sum::<f64>()).collect();
        for j in 0..d {
            let grad = lambda * w[j] - (0..n).map(|i| x[(i, j)] * residual[i]).sum::<f64>();
            w[j] -= eta * grad;
        }
    }
    w
}

/// `(WᵀFw/d, ‖Fw‖²/d)` by direct summation.
fn overlaps(inst: &ProblemInstance, w: &[f64]) -> (f64, f64) {
    let f = inst.modulation.matrix();
    let d = inst.dims.d;
    let fw: Vec<f64> = (0..d).map(|i| (0..d).map(|j| f[(i, j)] * w[j]).sum()).collect();
    let r = (0..d).map(|i| inst.teacher[i] * fw[i]).sum::<f64>() / d as f64;
    let q = fw.iter().map(|v| v * v).sum::<f64>() / d as f64;
    (r, q)
}

fn loss(r: f64, q: f64) -> f64 {
    0.5 * (1.0 + q - 2.0 * r)
}

/// Identity plus a small Gaussian perturbation: dense and well conditioned.
fn general_modulation(d: usize, seed: u64) -> ModulationSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::from_fn(d, d, |i, j| {
        let g: f64 = StandardNormal.sample(&mut rng);
        f64::from(u8::from(i == j)) + 0.25 * g / (d as f64).sqrt()
    });
    ModulationSpec::general(m).expect("perturbed identity is invertible")
}

fn criterion_1() -> Outcome {
    let dims = ModelDims::new(20, 10, 30).map_err(fail)?;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for seed in 0..5u64 {
        let f = general_modulation(20, 100 + seed);
        for &noise in &[0.0, 0.5] {
            let inst = generate_instance(dims, &f, noise, seed).map_err(fail)?;
            for &lambda in &[0.0, 0.1] {
                count += 1;
                for &t in &[1u64, 10, 100] {
                    let closed = gd_iterate_closed_form(&inst, 0.05, lambda, t).map_err(fail)?;
                    let reference = gd_loop(&inst.x, &inst.y, 0.05, lambda, t);
                    for (a, b) in closed.iter().zip(&reference) {
                        worst = worst.max((a - b).abs() / b.abs().max(f64::MIN_POSITIVE));
                    }
                }
            }
        }
    }
    verdict(worst <= 1e-8, format!("{count} instances, max elementwise relative deviation {worst:.2e} (limit 1e-8)"))
}

fn criterion_2() -> Outcome {
    let dims = ModelDims::new(20, 10, 30).map_err(fail)?;
    let f = ModulationSpec::bipartite(20, 10, 1.0, 0.2).map_err(fail)?;
    let (eta, lambdas, times) = (0.05, [0.0, 0.1], [1u64, 10, 100]);

    let mut worst_clean: f64 = 0.0;
    for seed in 0..5 {
        let inst = generate_instance(dims, &f, 0.0, 1000 + seed).map_err(fail)?;
        let cache = SpectralCache::new(&inst).map_err(fail)?;
        for &lambda in &lambdas {
            for &t in &times {
                let w = gd_iterate_closed_form(&inst, eta, lambda, t).map_err(fail)?;
                let (r, q) = overlaps(&inst, w.as_slice());
                worst_clean = worst_clean.max((r_trace(&cache, eta, lambda, t).map_err(fail)? - r).abs());
                worst_clean = worst_clean.max((q_trace(&cache, eta, lambda, 0.0, t).map_err(fail)? - q).abs());
            }
        }
    }

    let (noise, redraws) = (0.5, 500);
    let mut worst_z: f64 = 0.0;
    let mut misses = 0;
    let mut comparisons = 0;
    for seed in 0..2 {
        let inst = generate_instance(dims, &f, noise, 2000 + seed).map_err(fail)?;
        let cache = SpectralCache::new(&inst).map_err(fail)?;
        for &lambda in &lambdas {
            for &t in &times {
                let mut rs = Vec::with_capacity(redraws);
                let mut qs = Vec::with_capacity(redraws);
                for k in 0..redraws {
                    let redrawn = inst.with_noise_redrawn(hash64(&[seed, k as u64, 77]));
                    let w = gd_iterate_closed_form(&redrawn, eta, lambda, t).map_err(fail)?;
                    let (r, q) = overlaps(&redrawn, w.as_slice());
                    rs.push(r);
                    qs.push(q);
                }
                let targets = [
                    (rs, r_trace(&cache, eta, lambda, t).map_err(fail)?),
                    (qs, q_trace(&cache, eta, lambda, noise, t).map_err(fail)?),
                ];
                for (samples, target) in targets {
                    let n = samples.len() as f64;
                    let mean = samples.iter().sum::<f64>() / n;
                    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                    let z = (mean - target).abs() / (var / n).sqrt();
                    worst_z = worst_z.max(z);
                    misses += usize::from(z > 3.0);
                    comparisons += 1;
                }
            }
        }
    }
    verdict(
        worst_clean <= 1e-10 && misses == 0,
        format!(
            "noiseless max deviation {worst_clean:.2e} (limit 1e-10); noisy: {misses}/{comparisons} outside 3 SE, worst {worst_z:.2} SE"
        ),
    )
}

fn log_grid(min: f64, max: f64, count: usize) -> Vec<f64> {
    Axis::new("x", Scale::Log, min, max, count).expect("valid grid").values()
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    for &alpha in &log_grid(0.25, 5.0, 6) {
        for &lt in &log_grid(1e-3, 10.0, 6) {
            let s = saddle_oracle(alpha, lt, 0.3, 1e8).map_err(fail)?;
            let c = single_block_prediction(alpha, lt, 0.3).map_err(fail)?;
            worst = worst.max((s.r - c.r).abs()).max((s.q - c.q).abs()).max((loss(s.r, s.q) - loss(c.r, c.q)).abs());
        }
    }
    verdict(worst <= 1e-10, format!("6x6 grid, max deviation in R, Q, L_G {worst:.2e} (limit 1e-10)"))
}

fn criterion_4() -> Outcome {
    let worst = [0.25, 0.5, 0.9, 1.1, 2.0, 5.0]
        .iter()
        .map(|&a: &f64| (block_a(a, 1e-12) - a.max(1.0)).abs())
        .fold(0.0, f64::max);
    verdict(worst <= 1e-6, format!("max |a - max(1, alpha)| {worst:.2e} (limit 1e-6)"))
}

fn standard_inputs(kappa: f64, t: f64) -> ReplicaInputs {
    let f = FixedParams::standard();
    ReplicaInputs {
        dims: f.dims().expect("valid dims"),
        sigma1: f.sigma1,
        sigma2: f.sigma1 / kappa,
        eta: f.eta,
        lambda: f.lambda,
        noise_std: f.noise_std,
        t,
        include_test_noise: false,
    }
}

fn criterion_5() -> Outcome {
    let f = FixedParams::standard();
    let alpha = f.n as f64 / f.d as f64;
    let mut worst: f64 = 0.0;
    let mut worst_t = 0.0;
    for &t in &log_grid(1.0, 1e7, 40) {
        let (_, merged) = bipartite_prediction(&standard_inputs(1.0, t)).map_err(fail)?;
        let single = single_block_prediction(alpha, effective_ridge(f.eta, f.lambda, t).map_err(fail)?, f.noise_std).map_err(fail)?;
        let dev = (merged.r - single.r).abs().max((merged.q - single.q).abs()).max((merged.gen_error - single.gen_error).abs());
        if dev > worst {
            worst = dev;
            worst_t = t;
        }
    }
    verdict(worst <= 1e-10, format!("40-point grid, max deviation {worst:.2e} at t = {worst_t:.3e} (limit 1e-10)"))
}

struct CompareFiles {
    dir: PathBuf,
}

impl CompareFiles {
    fn read(&self, stem: &str) -> Result<Table, String> {
        let text = fs::read_to_string(self.dir.join(format!("{stem}.csv"))).map_err(fail)?;
        Ok(parse_csv(&text).map_err(fail)?.table)
    }
}

fn column(t: &Table, name: &str) -> Result<Vec<f64>, String> {
    t.column(name).ok_or_else(|| format!("missing column {name}"))
}

/// Rows of `table` whose kappa equals `kappa`, as `(t, value)`.
fn series(table: &Table, kappa: f64, name: &str) -> Result<Vec<(f64, f64)>, String> {
    let (k, t, v) = (column(table, "kappa")?, column(table, "t")?, column(table, name)?);
    Ok((0..k.len()).filter(|&i| k[i] == kappa).map(|i| (t[i], v[i])).collect())
}

fn criterion_6(files: &CompareFiles) -> Outcome {
    let (theory, mean, std) = (files.read("theory")?, files.read("sim_mean")?, files.read("sim_std")?);
    let mut ok = true;
    let mut parts = Vec::new();
    for kappa in [1.0, 10.0, 100.0] {
        let th = series(&theory, kappa, "L_G")?;
        let sm = series(&mean, kappa, "L_G")?;
        let sd = series(&std, kappa, "L_G")?;
        let seeds = series(&mean, kappa, "seeds")?;
        if th.len() != sm.len() || th.is_empty() {
            return Err(format!("kappa {kappa}: theory and simulation grids differ"));
        }
        let mad = th.iter().zip(&sm).map(|(a, b)| (a.1 - b.1).abs()).sum::<f64>() / th.len() as f64;
        let covered = (0..th.len())
            .filter(|&i| (th[i].1 - sm[i].1).abs() <= 3.0 * sd[i].1 / seeds[i].1.sqrt())
            .count();
        let coverage = covered as f64 / th.len() as f64;
        ok &= mad <= 0.05 && coverage >= 0.9;
        parts.push(format!("kappa {kappa}: MAD {mad:.4}, within 3 SE {:.0}%", 100.0 * coverage));
    }
    verdict(ok, format!("{} (limits 0.05, 90%)", parts.join("; ")))
}

fn criterion_7(files: &CompareFiles) -> Outcome {
    let theory = files.read("theory")?;
    let shape = |kappa: f64| -> Result<Classification, String> {
        Ok(classify_curve(&series(&theory, kappa, "L_G")?, DEFAULT_PROMINENCE).map_err(fail)?.classification)
    };
    let (high, low) = (shape(100.0)?, shape(1.0)?);
    let mut spec = SweepSpec::new(FixedParams::standard(), vec![1e5]);
    spec.t_axis = Axis::default_time();
    let phase = run_phase(&spec, 2, 2).map_err(fail)?;
    let extreme = phase.shapes[0].1.classification;
    let ok = high == Classification::DoubleDescent
        && matches!(low, Classification::Monotone | Classification::SingleDescent)
        && extreme == Classification::SingleDescent;
    verdict(ok, format!("kappa 100: {}, kappa 1: {}, kappa 1e5: {}", high.name(), low.name(), extreme.name()))
}

fn criterion_8() -> Outcome {
    let (d, p, n, kappa, noise, eta) = (50, 35, 100, 10.0, 0.3, 0.1);
    let dims = ModelDims::new(d, p, n).map_err(fail)?;
    let f = ModulationSpec::bipartite(d, p, 1.0, 1.0 / kappa).map_err(fail)?;
    let inst = generate_instance(dims, &f, noise, 8).map_err(fail)?;
    let mut worst: f64 = 0.0;
    let mut worst_t = 0.0;
    for t in log_grid(1e1, 1e5, 20) {
        let steps = t.round() as u64;
        let gd = gd_iterate_closed_form(&inst, eta, 0.0, steps).map_err(fail)?;
        let ridge = ridge_solution(&inst, 1.0 / (eta * steps as f64)).map_err(fail)?;
        let (rg, qg) = overlaps(&inst, gd.as_slice());
        let (rr, qr) = overlaps(&inst, ridge.as_slice());
        let rel = (loss(rr, qr) - loss(rg, qg)).abs() / loss(rg, qg).abs();
        if rel > worst {
            worst = rel;
            worst_t = t;
        }
    }
    verdict(worst <= 0.1, format!("max relative L_G gap {:.1}% at t = {worst_t:.3e} (limit 10%)", 100.0 * worst))
}

fn criterion_9() -> Outcome {
    let fixed = FixedParams::standard();
    let origin = MacroObservables { t: 0.0, r: 0.0, q: 0.0, gen_error: 0.5 };
    let inst = generate_instance(fixed.dims().map_err(fail)?, &fixed.modulation(100.0).map_err(fail)?, fixed.noise_std, 9).map_err(fail)?;
    let sim = train_single(&inst, &TrainConfig::new(fixed.eta, fixed.lambda, vec![0])).map_err(fail)?[0];
    let exact = exact_curve(&inst, fixed.eta, fixed.lambda, &[0]).map_err(fail)?[0];
    let (_, theory) = bipartite_prediction(&standard_inputs(100.0, 0.0)).map_err(fail)?;
    let origin_ok = sim == origin && exact == origin && theory == origin;

    let mut spec = SweepSpec::new(fixed, vec![100.0]);
    spec.engines = vec![EngineKind::Theory];
    spec.t_axis = Axis::default_time();
    spec.lambda_axis = Axis::new("lambda", Scale::Log, 1.0, 1e12, 4).map_err(fail)?;
    let heat = run_heatmap(&spec).map_err(fail)?;
    let (lam, lg) = (column(&heat, "lambda")?, column(&heat, "L_G_theory")?);
    let top = lam.iter().cloned().fold(f64::MIN, f64::max);
    let edge = (0..lam.len()).filter(|&i| lam[i] == top).map(|i| (lg[i] - 0.5).abs()).fold(0.0, f64::max);

    verdict(
        origin_ok && edge <= 1e-6,
        format!(
            "t = 0 exact origin in theory/exact/simulation: {origin_ok}; lambda = {top:.0e} column max |L_G - 0.5| {edge:.2e} (limit 1e-6)"
        ),
    )
}

fn run_compare(config: &Path, out: &Path, threads: usize) -> Result<(), String> {
    let args = ["ddlab", "compare", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", &threads.to_string()];
    match ddlab::run(args) {
        0 => Ok(()),
        code => Err(format!("compare exited with {code}")),
    }
}

fn criterion_10(first: &Path, runs: &[PathBuf]) -> Outcome {
    let mut names: Vec<_> = fs::read_dir(first).map_err(fail)?.filter_map(|e| e.ok()).map(|e| e.file_name()).collect();
    names.sort();
    if names.is_empty() {
        return Err("no output files".into());
    }
    for other in runs {
        for name in &names {
            let a = fs::read(first.join(name)).map_err(fail)?;
            let b = fs::read(other.join(name)).map_err(fail)?;
            if a != b {
                return Err(format!("{} differs from {}", other.join(name).display(), first.join(name).display()));
            }
        }
    }
    verdict(true, format!("{} files identical across threads 1, 8 and a repeat run", names.len()))
}

fn main() {
    let mut report = Report { failures: 0 };
    let secs = Duration::from_secs;
    report.record(1, "closed form vs iterative GD", secs(5), criterion_1);
    report.record(2, "trace formulas vs measured overlaps", secs(30), criterion_2);
    report.record(3, "saddle point vs closed form", secs(5), criterion_3);
    report.record(4, "ridge-free limit of a", secs(1), criterion_4);
    report.record(5, "kappa = 1 merges into one block", secs(1), criterion_5);

    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/compare.cfg");
    let scratch = tempfile::tempdir().expect("temporary directory");
    let dirs: Vec<PathBuf> = ["threads1", "threads8", "repeat"].iter().map(|n| scratch.path().join(n)).collect();
    report.record(6, "theory vs simulation", secs(600), || {
        run_compare(&config, &dirs[0], 1)?;
        criterion_6(&CompareFiles { dir: dirs[0].clone() })
    });
    report.record(7, "double-descent shapes", secs(5), || criterion_7(&CompareFiles { dir: dirs[0].clone() }));
    report.record(8, "early stopping vs ridge", secs(10), criterion_8);
    report.record(9, "boundary values", Duration::MAX, criterion_9);
    report.record(10, "determinism", Duration::MAX, || {
        for (dir, threads) in [(&dirs[1], 8), (&dirs[2], 8)] {
            run_compare(&config, dir, threads)?;
        }
        criterion_10(&dirs[0], &dirs[1..])
    });

    println!("{} of 10 criteria passed", 10 - report.failures);
    if report.failures > 0 {
        std::process::exit(1);
    }
}
