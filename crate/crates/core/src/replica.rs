//! Zero-temperature replica predictions for `R`, `Q` and `L_G`.
//!
//! Training time enters only through the effective ridge `λ̃ = λ + 1/(ηt)`.
//! A single isotropic block is described by one scalar `a`, the root above 1 of
//!
//! ```text
//! a² − (1 + α + λ̃) a + α = 0
//! ```
//!
//! and the two-block modulation couples two such roots through a 2×2 linear
//! system for `Q₁`, `Q₂`.

use crate::error::{check_param, Error, Result};
use crate::model::{MacroObservables, ModelDims};

/// `λ + 1/(ηt)`; the ridge whose minimizer mimics the `t`-th GD iterate.
pub fn effective_ridge(eta: f64, lambda: f64, t: f64) -> Result<f64> {
    check_param("eta", eta, eta > 0.0, "must be positive")?;
    check_param("t", t, t > 0.0, "must be positive")?;
    Ok(lambda + 1.0 / (eta * t))
}

/// Root `a ≥ 1` of `a² − (1 + α + λ̃)a + α = 0`; `max(1, α)` at `λ̃ = 0`.
pub fn block_a(alpha: f64, lambda_tilde: f64) -> f64 {
    if lambda_tilde == 0.0 {
        return alpha.max(1.0);
    }
    if lambda_tilde.is_infinite() {
        return f64::INFINITY;
    }
    let s = 1.0 - alpha - lambda_tilde;
    let root = s.hypot(2.0 * lambda_tilde.sqrt());
    if s >= 0.0 {
        1.0 + 2.0 * lambda_tilde / (s + root)
    } else {
        // s + root cancels here; the conjugate form does not.
        1.0 + 0.5 * (root - s)
    }
}

fn check_alpha_ridge(alpha: f64, lambda_tilde: f64) -> Result<()> {
    check_param("alpha", alpha, alpha > 0.0 && alpha.is_finite(), "must be positive and finite")?;
    check_param("lambda_tilde", lambda_tilde, lambda_tilde >= 0.0, "must be >= 0")
}

/// Isotropic (`F = I`) prediction at sample ratio `α = n/d`.
///
/// The returned `t` is NaN; callers that know the training time fill it in.
pub fn single_block_prediction(alpha: f64, lambda_tilde: f64, noise_std: f64) -> Result<MacroObservables> {
    single_block_prediction_with(alpha, lambda_tilde, noise_std, false)
}

pub fn single_block_prediction_with(
    alpha: f64,
    lambda_tilde: f64,
    noise_std: f64,
    include_test_noise: bool,
) -> Result<MacroObservables> {
    check_alpha_ridge(alpha, lambda_tilde)?;
    check_param("sigma_eps", noise_std, noise_std >= 0.0, "must be >= 0")?;
    if lambda_tilde.is_infinite() {
        return Ok(MacroObservables { t: f64::NAN, ..MacroObservables::origin(noise_std, include_test_noise) });
    }
    let a = block_a(alpha, lambda_tilde);
    let pole = a * a - alpha;
    if !(pole > 0.0) {
        return Err(Error::BlockPole { block: 0, a, alpha });
    }
    let g = 1.0 + noise_std * noise_std;
    let r = alpha / a;
    let q = alpha / pole * (g - alpha * (2.0 - a) / a);
    Ok(MacroObservables::from_rq(f64::NAN, r, q, noise_std, include_test_noise))
}

/// Inputs of the two-block prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicaInputs {
    pub dims: ModelDims,
    pub sigma1: f64,
    pub sigma2: f64,
    pub eta: f64,
    pub lambda: f64,
    pub noise_std: f64,
    /// Training time; `0` gives the untrained student, `∞` the ridge limit.
    pub t: f64,
    pub include_test_noise: bool,
}

impl ReplicaInputs {
    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        check_param("sigma2", self.sigma2, self.sigma2 > 0.0 && self.sigma2.is_finite(), "must be positive and finite")?;
        check_param("sigma1", self.sigma1, self.sigma1 >= self.sigma2 && self.sigma1.is_finite(), "must be finite and >= sigma2")?;
        check_param("eta", self.eta, self.eta > 0.0 && self.eta.is_finite(), "must be positive and finite")?;
        check_param("lambda", self.lambda, self.lambda >= 0.0, "must be >= 0")?;
        check_param("sigma_eps", self.noise_std, self.noise_std >= 0.0 && self.noise_std.is_finite(), "must be finite and >= 0")?;
        check_param("t", self.t, self.t >= 0.0, "must be >= 0")
    }

    pub fn at(&self, t: f64) -> Self {
        ReplicaInputs { t, ..*self }
    }
}

/// Per-block scalars of the two-block solution; index 0 is the `σ₁` block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicaParams {
    pub alpha: [f64; 2],
    pub lambda_tilde: [f64; 2],
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub c: [f64; 2],
    pub r: [f64; 2],
    pub q: [f64; 2],
}

impl ReplicaParams {
    pub fn r_total(&self) -> f64 {
        self.r[0] + self.r[1]
    }

    pub fn q_total(&self) -> f64 {
        self.q[0] + self.q[1]
    }

    fn untrained(alpha: [f64; 2]) -> Self {
        ReplicaParams {
            alpha,
            lambda_tilde: [f64::INFINITY; 2],
            a: [f64::INFINITY; 2],
            b: [0.0; 2],
            c: [f64::NAN; 2],
            r: [0.0; 2],
            q: [0.0; 2],
        }
    }
}

/// Two-block prediction at `inputs.t`.
pub fn bipartite_prediction(inputs: &ReplicaInputs) -> Result<(ReplicaParams, MacroObservables)> {
    inputs.validate()?;
    let ModelDims { d, p, n } = inputs.dims;
    let (d, n) = (d as f64, n as f64);
    let sizes = [p as f64, d - p as f64];
    let alpha = [n / sizes[0], n / sizes[1]];

    let base_ridge = if inputs.t == 0.0 {
        f64::INFINITY
    } else if inputs.t.is_infinite() {
        inputs.lambda
    } else {
        effective_ridge(inputs.eta, inputs.lambda, inputs.t)?
    };
    if base_ridge.is_infinite() {
        let obs = MacroObservables::origin(inputs.noise_std, inputs.include_test_noise);
        return Ok((ReplicaParams::untrained(alpha), MacroObservables { t: inputs.t, ..obs }));
    }

    let sigmas = [inputs.sigma1, inputs.sigma2];
    let mut lambda_tilde = [0.0; 2];
    let mut a = [0.0; 2];
    let mut b = [0.0; 2];
    let mut r = [0.0; 2];
    for i in 0..2 {
        lambda_tilde[i] = d / sizes[i] * base_ridge / (sigmas[i] * sigmas[i]);
        a[i] = block_a(alpha[i], lambda_tilde[i]);
        let pole = a[i] * a[i] - alpha[i];
        if !(pole > 0.0) {
            return Err(Error::BlockPole { block: i + 1, a: a[i], alpha: alpha[i] });
        }
        b[i] = alpha[i] / pole;
        r[i] = n / (a[i] * d);
    }
    // The other block's unexplained signal acts as extra label noise.
    let g = 1.0 + inputs.noise_std * inputs.noise_std;
    let c = [
        g - 2.0 * r[1] - n / d * (2.0 - a[0]) / a[0],
        g - 2.0 * r[0] - n / d * (2.0 - a[1]) / a[1],
    ];
    let product = b[0] * b[1];
    if !(product < 1.0) {
        return Err(Error::CoupledSingularity { b1: b[0], b2: b[1], product });
    }
    let det = 1.0 - product;
    let q = [(product * c[1] + b[0] * c[0]) / det, (product * c[0] + b[1] * c[1]) / det];

    let params = ReplicaParams { alpha, lambda_tilde, a, b, c, r, q };
    let obs = MacroObservables::from_rq(inputs.t, params.r_total(), params.q_total(), inputs.noise_std, inputs.include_test_noise);
    Ok((params, obs))
}

/// Prediction over a grid of times, with the untrained point prepended
/// unless the grid already starts at 0.
pub fn theory_curve(inputs: &ReplicaInputs, t_grid: &[f64]) -> Result<Vec<MacroObservables>> {
    Ok(theory_curve_detailed(inputs, t_grid)?.into_iter().map(|(_, obs)| obs).collect())
}

pub fn theory_curve_detailed(inputs: &ReplicaInputs, t_grid: &[f64]) -> Result<Vec<(ReplicaParams, MacroObservables)>> {
    check_real_grid(t_grid)?;
    let mut times = Vec::with_capacity(t_grid.len() + 1);
    if t_grid[0] != 0.0 {
        times.push(0.0);
    }
    times.extend_from_slice(t_grid);
    times.iter().map(|&t| bipartite_prediction(&inputs.at(t))).collect()
}

pub(crate) fn check_real_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidGrid("time grid is empty".into()));
    }
    if t_grid.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::InvalidGrid("times must be non-negative".into()));
    }
    if t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidGrid("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Settings of the damped fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleOptions {
    /// Weight of the new iterate, in `(0, 1]`.
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SaddleOptions {
    fn default() -> Self {
        SaddleOptions { damping: 0.5, tolerance: 1e-12, max_iterations: 100_000 }
    }
}

/// Converged order parameters of the isotropic saddle point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleState {
    pub r: f64,
    pub q: f64,
    pub q0: f64,
    pub beta: f64,
    /// Second moment of the training labels, `1 + σ_ε²`.
    pub g: f64,
    /// Teacher–label overlap, 1.
    pub h: f64,
    /// Free energy per degree of freedom.
    pub free_energy: f64,
    /// `1 + 1/(β(Q₀ − Q))`.
    pub a: f64,
    pub iterations: usize,
}

/// `−βf` of the isotropic ridge student, with `x = β(Q₀ − Q)`.
#[allow(clippy::too_many_arguments)]
fn neg_beta_free_energy(alpha: f64, lambda_tilde: f64, g: f64, h: f64, beta: f64, r: f64, q: f64, x: f64) -> f64 {
    let delta = x / beta;
    let q0 = q + delta;
    0.5 * (q - r * r) / delta + 0.5 * delta.ln() - 0.5 * alpha * x.ln_1p()
        - 0.5 * alpha * beta * (g - 2.0 * h * r + q) / (1.0 + x)
        - 0.5 * beta * lambda_tilde * q0
}

pub fn saddle_oracle(alpha: f64, lambda_tilde: f64, noise_std: f64, beta: f64) -> Result<SaddleState> {
    saddle_oracle_with(alpha, lambda_tilde, noise_std, beta, SaddleOptions::default())
}

/// Solves the stationarity conditions of the free energy by damped
/// iteration from `(R, Q, Q₀) = (0, 0, 1)`.
pub fn saddle_oracle_with(
    alpha: f64,
    lambda_tilde: f64,
    noise_std: f64,
    beta: f64,
    options: SaddleOptions,
) -> Result<SaddleState> {
    check_alpha_ridge(alpha, lambda_tilde)?;
    check_param("beta", beta, beta > 0.0 && beta.is_finite(), "must be positive and finite")?;
    check_param("damping", options.damping, options.damping > 0.0 && options.damping <= 1.0, "must lie in (0, 1]")?;
    let g = 1.0 + noise_std * noise_std;
    let h = 1.0;
    let w = options.damping;

    // State (R, Q, x) with x = β(Q₀ − Q); Q₀ itself would lose every digit
    // of Q₀ − Q at large β.
    let (mut r, mut q) = (0.0, 0.0);
    let mut x = beta * 1.0;
    let mut residual = f64::INFINITY;
    for it in 1..=options.max_iterations {
        let kernel = x / (1.0 + x);
        let x_new = 1.0 / (alpha / (1.0 + x) + lambda_tilde);
        let r_new = alpha * h * kernel;
        let q_new = r * r + alpha * kernel * kernel * (g - 2.0 * h * r + q);

        let next = ((1.0 - w) * r + w * r_new, (1.0 - w) * q + w * q_new, (1.0 - w) * x + w * x_new);
        // x is compared through a = 1 + 1/x, the quantity the closed form uses.
        residual = (next.0 - r).abs().max((next.1 - q).abs()).max((1.0 / next.2 - 1.0 / x).abs());
        (r, q, x) = next;
        if !(r.is_finite() && q.is_finite() && x.is_finite()) {
            break;
        }
        if residual < options.tolerance {
            let delta = x / beta;
            return Ok(SaddleState {
                r,
                q,
                q0: q + delta,
                beta,
                g,
                h,
                free_energy: -neg_beta_free_energy(alpha, lambda_tilde, g, h, beta, r, q, x) / beta,
                a: 1.0 + 1.0 / x,
                iterations: it,
            });
        }
    }
    Err(Error::SaddleNotConverged { iterations: options.max_iterations, residual })
}
