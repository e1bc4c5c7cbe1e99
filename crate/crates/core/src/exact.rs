//! Closed-form gradient-descent dynamics in the eigenbasis of `XᵀX`.
//!
//! With `XᵀX = V Λ Vᵀ`, full-batch GD from `Ŵ₀ = 0` reaches
//!
//! ```text
//! Ŵ_t = V diag(D_i / (Λ_i + λ)) Vᵀ Xᵀ y,     D_i = 1 − (1 − ηλ − ηΛ_i)^t
//! ```
//!
//! so one eigendecomposition gives every point of a learning curve.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_param, Error, Result};
use crate::model::{gen_error_from_rq, MacroObservables, ProblemInstance};

/// How the scalar filter `1 − (1 − x)^t` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeMode {
    /// Integer steps of discrete GD.
    #[default]
    Discrete,
    /// Gradient flow, `1 − exp(−x t)`.
    Continuous,
}

/// Which quantity a curve reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Averaging {
    /// `R`, `Q` of the iterate trained on the instance's own labels.
    #[default]
    Realized,
    /// Expectation over the label noise with teacher and inputs held fixed.
    NoiseExpectation,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExactOptions {
    pub time_mode: TimeMode,
    pub averaging: Averaging,
    pub include_test_noise: bool,
}

/// `1 − (1 − x)^t` for integer `t`.
pub fn learning_filter(x: f64, t: u64) -> f64 {
    if t == 0 {
        return 0.0;
    }
    if (0.0..1.0).contains(&x) {
        // Cancellation-free when x is tiny and t is huge.
        -(t as f64 * (-x).ln_1p()).exp_m1()
    } else {
        1.0 - powu(1.0 - x, t)
    }
}

/// `1 − exp(−x t)`, the gradient-flow filter.
pub fn continuous_filter(x: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    -(-x * t).exp_m1()
}

/// `base^exp` by repeated squaring.
pub fn powu(mut base: f64, mut exp: u64) -> f64 {
    let mut acc = 1.0;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        base *= base;
        exp >>= 1;
    }
    acc
}

/// Eigendecomposition of `XᵀX` plus everything the trace formulas reuse.
#[derive(Debug, Clone)]
pub struct SpectralCache {
    /// Eigenvectors, columns ordered like `lambda`.
    pub v: DMatrix<f64>,
    /// Eigenvalues, descending, roundoff negatives clamped to 0.
    pub lambda: DVector<f64>,
    /// `F̃ = F V`.
    pub f_tilde: DMatrix<f64>,
    /// `F̃⁻¹ = Vᵀ F⁻¹`.
    pub f_tilde_inv: DMatrix<f64>,
    /// `F̃ᵀ F̃`.
    pub gram: DMatrix<f64>,
    /// `Vᵀ Xᵀ y`.
    pub data_proj: DVector<f64>,
    /// `F̃⁻¹ W`.
    pub teacher_proj: DVector<f64>,
    /// `F̃ᵀ W`.
    pub teacher_mod: DVector<f64>,
    /// Eigenvalues at or below this magnitude are treated as exact zeros.
    pub threshold: f64,
    pub noise_std: f64,
    d: usize,
}

impl SpectralCache {
    pub fn new(instance: &ProblemInstance) -> Result<Self> {
        let d = instance.dims.d;
        let xtx = instance.x.tr_mul(&instance.x);
        let eig = SymmetricEigen::new(xtx);

        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let lambda_max = eig.eigenvalues[order[0]].max(0.0);
        let threshold = d as f64 * f64::EPSILON * lambda_max;

        let mut lambda = DVector::zeros(d);
        let mut v = DMatrix::zeros(d, d);
        for (k, &i) in order.iter().enumerate() {
            let value = eig.eigenvalues[i];
            // A Gram matrix cannot be this negative; something upstream is broken.
            if value < -f64::EPSILON.sqrt() * lambda_max.max(f64::MIN_POSITIVE) {
                return Err(Error::NotPositiveSemidefinite { eigenvalue: value, threshold });
            }
            lambda[k] = if value.abs() <= threshold { 0.0 } else { value.max(0.0) };
            v.set_column(k, &eig.eigenvectors.column(i));
        }

        let f_tilde = instance.modulation.matrix() * &v;
        let f_tilde_inv = v.transpose() * instance.modulation.inverse();
        let gram = f_tilde.tr_mul(&f_tilde);
        let data_proj = v.tr_mul(&instance.x.tr_mul(&instance.y));
        let teacher_proj = &f_tilde_inv * &instance.teacher;
        let teacher_mod = f_tilde.tr_mul(&instance.teacher);

        Ok(SpectralCache {
            v,
            lambda,
            f_tilde,
            f_tilde_inv,
            gram,
            data_proj,
            teacher_proj,
            teacher_mod,
            threshold,
            noise_std: instance.noise_std,
            d,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda[0]
    }

    /// GD contracts every eigendirection iff `η(Λ_max + λ) < 2`.
    pub fn is_stable(&self, eta: f64, lambda: f64) -> bool {
        eta * (self.lambda_max() + lambda) < 2.0
    }

    fn warn_if_unstable(&self, eta: f64, lambda: f64) {
        if !self.is_stable(eta, lambda) {
            log::warn!(
                "eta * (lambda_max + lambda) = {:.4} >= 2: gradient descent diverges",
                eta * (self.lambda_max() + lambda)
            );
        }
    }

    /// `D_i` for every eigenvalue.
    pub fn filters(&self, eta: f64, lambda: f64, t: u64, mode: TimeMode) -> DVector<f64> {
        self.lambda.map(|l| {
            let x = eta * (lambda + l);
            match mode {
                TimeMode::Discrete => learning_filter(x, t),
                TimeMode::Continuous => continuous_filter(x, t as f64),
            }
        })
    }

    /// `φ_i = D_i / (Λ_i + λ)`, with null directions (`Λ_i + λ = 0`) left at 0.
    fn gains(&self, filters: &DVector<f64>, lambda: f64) -> DVector<f64> {
        DVector::from_fn(self.d, |i, _| {
            let denom = self.lambda[i] + lambda;
            if denom > 0.0 {
                filters[i] / denom
            } else {
                0.0
            }
        })
    }

    /// Converged gains `1 / (Λ_i + λ)`, pseudo-inverse on null directions.
    fn ridge_gains(&self, lambda: f64) -> DVector<f64> {
        self.lambda.map(|l| if l + lambda > 0.0 { 1.0 / (l + lambda) } else { 0.0 })
    }

    fn weights_from_gains(&self, gains: &DVector<f64>) -> DVector<f64> {
        &self.v * gains.component_mul(&self.data_proj)
    }

    /// `t`-th GD iterate.
    pub fn iterate(&self, eta: f64, lambda: f64, t: u64, mode: TimeMode) -> DVector<f64> {
        self.warn_if_unstable(eta, lambda);
        self.weights_from_gains(&self.gains(&self.filters(eta, lambda, t, mode), lambda))
    }

    /// `(XᵀX + λI)⁺ Xᵀ y`.
    pub fn ridge(&self, lambda: f64) -> DVector<f64> {
        self.weights_from_gains(&self.ridge_gains(lambda))
    }

    /// `(R, Q)` of the weights `V (c ⊙ b)`, without leaving the eigenbasis.
    fn rq_of_coefficients(&self, coeffs: &DVector<f64>) -> (f64, f64) {
        let d = self.d as f64;
        let r = self.teacher_mod.dot(coeffs) / d;
        let q = coeffs.dot(&(&self.gram * coeffs)) / d;
        (r, q)
    }

    /// Realized `(R, Q)` of the `t`-th iterate.
    pub fn realized_rq(&self, eta: f64, lambda: f64, t: u64, mode: TimeMode) -> (f64, f64) {
        let gains = self.gains(&self.filters(eta, lambda, t, mode), lambda);
        self.rq_of_coefficients(&gains.component_mul(&self.data_proj))
    }

    /// Realized `(R, Q)` of the ridge minimizer.
    pub fn ridge_rq(&self, lambda: f64) -> (f64, f64) {
        self.rq_of_coefficients(&self.ridge_gains(lambda).component_mul(&self.data_proj))
    }

    /// Signal factor `M_i = D_i Λ_i / (Λ_i + λ)` and noise factor
    /// `s_i = D_i √Λ_i / (Λ_i + λ)`; both vanish on null eigenvalues.
    fn signal_noise_factors(&self, filters: &DVector<f64>, lambda: f64) -> (DVector<f64>, DVector<f64>) {
        let gains = self.gains(filters, lambda);
        let m = gains.component_mul(&self.lambda);
        let s = DVector::from_fn(self.d, |i, _| gains[i] * self.lambda[i].sqrt());
        (m, s)
    }

    /// `E_ε[R(t)] = (1/d) Wᵀ A W` with `A = F̃ diag(M) F̃⁻¹`.
    pub fn r_trace(&self, eta: f64, lambda: f64, t: u64, mode: TimeMode) -> f64 {
        let (m, _) = self.signal_noise_factors(&self.filters(eta, lambda, t, mode), lambda);
        self.teacher_mod.dot(&m.component_mul(&self.teacher_proj)) / self.d as f64
    }

    /// `E_ε[Q(t)] = (1/d) Wᵀ AᵀA W + (σ_ε²/d) Tr[BᵀB]` with `B = F̃ diag(s)`.
    pub fn q_trace(&self, eta: f64, lambda: f64, noise_std: f64, t: u64, mode: TimeMode) -> f64 {
        let (m, s) = self.signal_noise_factors(&self.filters(eta, lambda, t, mode), lambda);
        let mg = m.component_mul(&self.teacher_proj);
        let signal = mg.dot(&(&self.gram * &mg));
        let noise: f64 = (0..self.d).map(|i| s[i] * s[i] * self.gram[(i, i)]).sum();
        (signal + noise_std * noise_std * noise) / self.d as f64
    }

    /// The traces averaged over the teacher as well (`W Wᵀ → I`):
    /// `R = Tr[A]/d`, `Q = (Tr[AᵀA] + σ_ε² Tr[BᵀB])/d`.
    pub fn teacher_averaged_rq(&self, eta: f64, lambda: f64, noise_std: f64, t: u64, mode: TimeMode) -> (f64, f64) {
        let p = self.propagators(eta, lambda, t, mode);
        let d = self.d as f64;
        let r = p.a.trace() / d;
        let q = (p.a.norm_squared() + noise_std * noise_std * p.b.norm_squared()) / d;
        (r, q)
    }

    /// The propagators in the original coordinates.
    pub fn propagators(&self, eta: f64, lambda: f64, t: u64, mode: TimeMode) -> PropagatorMatrices {
        let filters = self.filters(eta, lambda, t, mode);
        let (m, s) = self.signal_noise_factors(&filters, lambda);
        let mut scaled = self.f_tilde.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= m[j];
        }
        let a = scaled * &self.f_tilde_inv;
        let mut b = self.f_tilde.clone();
        for (j, mut col) in b.column_iter_mut().enumerate() {
            col *= s[j];
        }
        PropagatorMatrices { d: DMatrix::from_diagonal(&filters), a, b }
    }
}

/// `D` is diagonal in the eigenbasis; `A` maps the teacher to the modulated
/// student (`FŴ = A W` without noise) and `B` carries the whitened label noise.
#[derive(Debug, Clone)]
pub struct PropagatorMatrices {
    pub d: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

fn check_rates(eta: f64, lambda: f64) -> Result<()> {
    check_param("eta", eta, eta > 0.0 && eta.is_finite(), "must be positive and finite")?;
    check_param("lambda", lambda, lambda >= 0.0, "must be >= 0")
}

/// `(XᵀX + λI)⁻¹ Xᵀ y`, minimum-norm at `λ = 0`.
pub fn ridge_solution(instance: &ProblemInstance, lambda: f64) -> Result<DVector<f64>> {
    check_param("lambda", lambda, lambda >= 0.0, "must be >= 0")?;
    if lambda.is_infinite() {
        return Ok(DVector::zeros(instance.dims.d));
    }
    Ok(SpectralCache::new(instance)?.ridge(lambda))
}

/// The `t`-th full-batch GD iterate from `Ŵ₀ = 0`.
pub fn gd_iterate_closed_form(instance: &ProblemInstance, eta: f64, lambda: f64, t: u64) -> Result<DVector<f64>> {
    check_rates(eta, lambda)?;
    Ok(SpectralCache::new(instance)?.iterate(eta, lambda, t, TimeMode::Discrete))
}

/// Noise-averaged `R(t)` for this teacher and these inputs.
pub fn r_trace(cache: &SpectralCache, eta: f64, lambda: f64, t: u64) -> Result<f64> {
    check_rates(eta, lambda)?;
    Ok(cache.r_trace(eta, lambda, t, TimeMode::Discrete))
}

/// Noise-averaged `Q(t)` for this teacher and these inputs.
pub fn q_trace(cache: &SpectralCache, eta: f64, lambda: f64, noise_std: f64, t: u64) -> Result<f64> {
    check_rates(eta, lambda)?;
    check_param("sigma_eps", noise_std, noise_std >= 0.0, "must be >= 0")?;
    Ok(cache.q_trace(eta, lambda, noise_std, t, TimeMode::Discrete))
}

pub(crate) fn check_integer_grid(t_grid: &[u64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidGrid("time grid is empty".into()));
    }
    if t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Learning curve of one instance.
pub fn exact_curve(instance: &ProblemInstance, eta: f64, lambda: f64, t_grid: &[u64]) -> Result<Vec<MacroObservables>> {
    exact_curve_with(instance, eta, lambda, t_grid, ExactOptions::default())
}

pub fn exact_curve_with(
    instance: &ProblemInstance,
    eta: f64,
    lambda: f64,
    t_grid: &[u64],
    options: ExactOptions,
) -> Result<Vec<MacroObservables>> {
    check_rates(eta, lambda)?;
    check_integer_grid(t_grid)?;
    let cache = SpectralCache::new(instance)?;
    cache.warn_if_unstable(eta, lambda);
    Ok(cache_curve(&cache, eta, lambda, t_grid, options))
}

pub(crate) fn cache_curve(
    cache: &SpectralCache,
    eta: f64,
    lambda: f64,
    t_grid: &[u64],
    options: ExactOptions,
) -> Vec<MacroObservables> {
    t_grid
        .iter()
        .map(|&t| {
            if t == 0 {
                return MacroObservables::origin(cache.noise_std, options.include_test_noise);
            }
            let (r, q) = match options.averaging {
                Averaging::Realized => cache.realized_rq(eta, lambda, t, options.time_mode),
                Averaging::NoiseExpectation => (
                    cache.r_trace(eta, lambda, t, options.time_mode),
                    cache.q_trace(eta, lambda, cache.noise_std, t, options.time_mode),
                ),
            };
            MacroObservables {
                t: t as f64,
                r,
                q,
                gen_error: gen_error_from_rq(r, q, cache.noise_std, options.include_test_noise),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_instance, measure_rq, ModelDims, ModulationSpec};
    use proptest::prelude::*;

    fn instance(d: usize, n: usize, noise: f64, seed: u64) -> ProblemInstance {
        let dims = ModelDims::new(d, d / 2, n).unwrap();
        let f = ModulationSpec::bipartite(d, d / 2, 1.5, 0.5).unwrap();
        generate_instance(dims, &f, noise, seed).unwrap()
    }

    /// Plain GD loop, the oracle for the closed form.
    fn gd_steps(inst: &ProblemInstance, eta: f64, lambda: f64, t: u64) -> DVector<f64> {
        let mut w = DVector::zeros(inst.dims.d);
        for _ in 0..t {
            let residual = &inst.y - &inst.x * &w;
            let grad = -inst.x.tr_mul(&residual) + &w * lambda;
            w -= grad * eta;
        }
        w
    }

    fn rel_dev(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a - b).amax() / b.amax().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn powu_matches_powi() {
        for &b in &[0.3, -0.7, 1.0001, 2.0] {
            for e in 0..40u64 {
                let want = f64::powi(b, e as i32);
                assert!((powu(b, e) - want).abs() <= 1e-14 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn filter_is_accurate_for_tiny_rates() {
        let x = 1e-12;
        let t = 1_000u64;
        let want = 1e-9 - 499_500.0 * 1e-24;
        assert!((learning_filter(x, t) - want).abs() < 1e-22);
        assert_eq!(learning_filter(0.3, 0), 0.0);
        assert!((learning_filter(1.5, 3) - (1.0 - (-0.5f64).powi(3))).abs() < 1e-15);
    }

    #[test]
    fn eigendecomposition_reconstructs_gram() {
        let inst = instance(16, 24, 0.1, 3);
        let cache = SpectralCache::new(&inst).unwrap();
        let xtx = inst.x.tr_mul(&inst.x);
        let rebuilt = &cache.v * DMatrix::from_diagonal(&cache.lambda) * cache.v.transpose();
        let norm = xtx.clone().svd(false, false).singular_values.max();
        let resid = (rebuilt - &xtx).svd(false, false).singular_values.max();
        assert!(resid <= 1e-10 * norm);
        assert!(cache.lambda.as_slice().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rank_deficient_gram_has_exact_zeros() {
        let inst = instance(20, 8, 0.0, 1);
        let cache = SpectralCache::new(&inst).unwrap();
        assert_eq!(cache.lambda.iter().filter(|&&l| l == 0.0).count(), 12);
    }

    #[test]
    fn zero_time_is_zero() {
        let inst = instance(10, 15, 0.2, 2);
        assert_eq!(gd_iterate_closed_form(&inst, 0.05, 0.1, 0).unwrap(), DVector::zeros(10));
        let cache = SpectralCache::new(&inst).unwrap();
        assert_eq!(r_trace(&cache, 0.05, 0.0, 0).unwrap(), 0.0);
        assert_eq!(q_trace(&cache, 0.05, 0.0, 0.2, 0).unwrap(), 0.0);
        let curve = exact_curve(&inst, 0.05, 0.0, &[0]).unwrap();
        assert_eq!(curve[0], MacroObservables { t: 0.0, r: 0.0, q: 0.0, gen_error: 0.5 });
    }

    #[test]
    fn closed_form_matches_explicit_steps() {
        for seed in 0..4 {
            let inst = instance(20, 30, 0.5, seed);
            for &lambda in &[0.0, 0.1] {
                for &t in &[1u64, 10, 100] {
                    let closed = gd_iterate_closed_form(&inst, 0.05, lambda, t).unwrap();
                    let iter = gd_steps(&inst, 0.05, lambda, t);
                    assert!(rel_dev(&closed, &iter) <= 1e-8, "seed {seed} λ {lambda} t {t}");
                }
            }
        }
    }

    #[test]
    fn long_horizon_reaches_ridge() {
        let inst = instance(20, 30, 0.3, 9);
        let cache = SpectralCache::new(&inst).unwrap();
        let eta = 0.9 / cache.lambda_max();
        let w_inf = cache.iterate(eta, 0.05, 10_000_000, TimeMode::Discrete);
        let ridge = ridge_solution(&inst, 0.05).unwrap();
        assert!(rel_dev(&w_inf, &ridge) < 1e-8);
    }

    #[test]
    fn noiseless_overdetermined_ridge_recovers_teacher() {
        let inst = instance(20, 40, 0.0, 5);
        let w = ridge_solution(&inst, 0.0).unwrap();
        let target = inst.modulation.inverse() * &inst.teacher;
        assert!(rel_dev(&w, &target) < 1e-8);
    }

    #[test]
    fn ridge_solution_is_stationary() {
        let inst = instance(20, 30, 0.4, 6);
        for &lambda in &[0.0, 0.3] {
            let w = ridge_solution(&inst, lambda).unwrap();
            let grad = -inst.x.tr_mul(&(&inst.y - &inst.x * &w)) + &w * lambda;
            assert!(grad.norm() <= 1e-8);
        }
        assert_eq!(ridge_solution(&inst, f64::INFINITY).unwrap(), DVector::zeros(20));
        assert!(ridge_solution(&inst, 1e12).unwrap().amax() < 1e-9);
    }

    #[test]
    fn underdetermined_ridgeless_is_minimum_norm() {
        let inst = instance(20, 10, 0.2, 8);
        let w = ridge_solution(&inst, 0.0).unwrap();
        let pinv = inst.x.clone().pseudo_inverse(1e-12).unwrap() * &inst.y;
        assert!(rel_dev(&w, &pinv) < 1e-8);
    }

    #[test]
    fn traces_equal_measured_overlaps_without_noise() {
        let inst = instance(20, 30, 0.0, 11);
        let cache = SpectralCache::new(&inst).unwrap();
        for &t in &[1u64, 7, 100, 5000] {
            let w = cache.iterate(0.05, 0.01, t, TimeMode::Discrete);
            let (r, q) = measure_rq(&inst, &w).unwrap();
            assert!((cache.r_trace(0.05, 0.01, t, TimeMode::Discrete) - r).abs() < 1e-10);
            assert!((cache.q_trace(0.05, 0.01, 0.0, t, TimeMode::Discrete) - q).abs() < 1e-10);
            let (rr, qr) = cache.realized_rq(0.05, 0.01, t, TimeMode::Discrete);
            assert!((rr - r).abs() < 1e-12 && (qr - q).abs() < 1e-12);
        }
    }

    #[test]
    fn converged_noiseless_traces() {
        let inst = instance(20, 40, 0.0, 12);
        let cache = SpectralCache::new(&inst).unwrap();
        let eta = 1.0 / cache.lambda_max();
        let r = cache.r_trace(eta, 0.0, u64::MAX / 2, TimeMode::Discrete);
        let q = cache.q_trace(eta, 0.0, 0.0, u64::MAX / 2, TimeMode::Discrete);
        assert!((r - inst.teacher_norm_sq()).abs() < 1e-9);
        assert!((q - inst.teacher_norm_sq()).abs() < 1e-9);
        let p = cache.propagators(eta, 0.0, u64::MAX / 2, TimeMode::Discrete);
        assert!((p.a - DMatrix::<f64>::identity(20, 20)).amax() < 1e-9);
    }

    #[test]
    fn teacher_average_matches_quadratic_form_mean() {
        // Averaging Wᵀ A W over many teachers approaches Tr[A].
        let inst = instance(12, 20, 0.3, 13);
        let cache = SpectralCache::new(&inst).unwrap();
        let p = cache.propagators(0.1, 0.0, 30, TimeMode::Discrete);
        let (r_avg, _) = cache.teacher_averaged_rq(0.1, 0.0, 0.3, 30, TimeMode::Discrete);
        assert!((r_avg - p.a.trace() / 12.0).abs() < 1e-14);
        let w = inst.teacher.clone();
        let r_inst = w.dot(&(&p.a * &w)) / 12.0;
        assert!((r_inst - cache.r_trace(0.1, 0.0, 30, TimeMode::Discrete)).abs() < 1e-12);
    }

    #[test]
    fn continuous_mode_tracks_discrete_for_small_steps() {
        let inst = instance(10, 20, 0.0, 14);
        let cache = SpectralCache::new(&inst).unwrap();
        let eta = 1e-4;
        let t = 20_000;
        let a = cache.r_trace(eta, 0.0, t, TimeMode::Discrete);
        let b = cache.r_trace(eta, 0.0, t, TimeMode::Continuous);
        assert!((a - b).abs() < 1e-3);
    }

    #[test]
    fn grid_must_increase() {
        let inst = instance(10, 20, 0.0, 14);
        assert!(matches!(exact_curve(&inst, 0.1, 0.0, &[3, 3]), Err(Error::InvalidGrid(_))));
        assert!(matches!(exact_curve(&inst, 0.1, 0.0, &[]), Err(Error::InvalidGrid(_))));
        assert!(exact_curve(&inst, -0.1, 0.0, &[1]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn filters_are_bounded_and_monotone(seed in 0u64..1000, lambda in 0.0f64..0.5, t in 0u64..5000) {
            let inst = instance(12, 18, 0.1, seed);
            let cache = SpectralCache::new(&inst).unwrap();
            let eta = 0.95 / (cache.lambda_max() + lambda);
            let now = cache.filters(eta, lambda, t, TimeMode::Discrete);
            let next = cache.filters(eta, lambda, t + 1, TimeMode::Discrete);
            for i in 0..12 {
                prop_assert!((0.0..=1.0).contains(&now[i]));
                prop_assert!(next[i] >= now[i]);
            }
            // Each summand of the teacher-averaged R grows with t.
            let (r_now, _) = cache.teacher_averaged_rq(eta, lambda, 0.1, t, TimeMode::Discrete);
            let (r_next, _) = cache.teacher_averaged_rq(eta, lambda, 0.1, t + 1, TimeMode::Discrete);
            prop_assert!(r_next + 1e-14 >= r_now);
            prop_assert!(cache.q_trace(eta, lambda, 0.1, t, TimeMode::Discrete) >= 0.0);
        }
    }
}
