//! Teacher–student data model and macroscopic observables.
//!
//! The teacher labels latent inputs `z` with `y = zᵀW + ε`; the student only
//! sees the modulated inputs `x = Fᵀz` and predicts `ŷ = xᵀŴ`. Everything the
//! engines report is expressed through the overlaps
//!
//! ```text
//! R = (1/d) Wᵀ F Ŵ        Q = (1/d) Ŵᵀ Fᵀ F Ŵ        L_G = (1 + Q − 2R) / 2
//! ```

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_param, Error, Result};
use crate::rng::{self, TAG_INPUTS, TAG_NOISE, TAG_ROTATION_U, TAG_ROTATION_V, TAG_TEACHER, TAG_TEST_SET};

/// Problem dimensions: input dimension `d`, size `p` of the first singular
/// block and number of training examples `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub d: usize,
    pub p: usize,
    pub n: usize,
}

impl ModelDims {
    pub fn new(d: usize, p: usize, n: usize) -> Result<Self> {
        let dims = ModelDims { d, p, n };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        check_param("d", self.d as f64, self.d >= 2, "must be at least 2")?;
        check_param("n", self.n as f64, self.n >= 1, "must be at least 1")?;
        check_param("p", self.p as f64, self.p >= 1 && self.p < self.d, "must satisfy 1 <= p <= d-1")?;
        Ok(())
    }

    /// Samples per dimension, `n/d`.
    pub fn alpha(&self) -> f64 {
        self.n as f64 / self.d as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Modulation {
    Identity,
    /// `diag(σ1·1_p, σ2·1_{d−p})`, optionally rotated as `U Σ Vᵀ` with Haar
    /// orthogonal `U`, `V` drawn from `rotation_seed`.
    Bipartite {
        p: usize,
        sigma1: f64,
        sigma2: f64,
        rotation_seed: Option<u64>,
    },
    General,
}

/// The modulation matrix `F` together with its inverse and extreme singular
/// values.
#[derive(Debug, Clone)]
pub struct ModulationSpec {
    kind: Modulation,
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    sigma_max: f64,
    sigma_min: f64,
}

impl ModulationSpec {
    pub fn identity(d: usize) -> Self {
        ModulationSpec {
            kind: Modulation::Identity,
            matrix: DMatrix::identity(d, d),
            inverse: DMatrix::identity(d, d),
            sigma_max: 1.0,
            sigma_min: 1.0,
        }
    }

    pub fn bipartite(d: usize, p: usize, sigma1: f64, sigma2: f64) -> Result<Self> {
        Self::check_bipartite(d, p, sigma1, sigma2)?;
        let diag = DVector::from_fn(d, |i, _| if i < p { sigma1 } else { sigma2 });
        Ok(ModulationSpec {
            kind: Modulation::Bipartite { p, sigma1, sigma2, rotation_seed: None },
            matrix: DMatrix::from_diagonal(&diag),
            inverse: DMatrix::from_diagonal(&diag.map(|s| 1.0 / s)),
            sigma_max: sigma1,
            sigma_min: sigma2,
        })
    }

    /// Bipartite spectrum with random orthogonal singular vectors. Only meant
    /// for robustness checks; the replica predictions assume `U = V = I`.
    pub fn bipartite_rotated(d: usize, p: usize, sigma1: f64, sigma2: f64, rotation_seed: u64) -> Result<Self> {
        Self::check_bipartite(d, p, sigma1, sigma2)?;
        let u = haar_orthogonal(d, rotation_seed, TAG_ROTATION_U);
        let v = haar_orthogonal(d, rotation_seed, TAG_ROTATION_V);
        let diag = DVector::from_fn(d, |i, _| if i < p { sigma1 } else { sigma2 });
        let matrix = &u * DMatrix::from_diagonal(&diag) * v.transpose();
        let inverse = &v * DMatrix::from_diagonal(&diag.map(|s| 1.0 / s)) * u.transpose();
        Ok(ModulationSpec {
            kind: Modulation::Bipartite { p, sigma1, sigma2, rotation_seed: Some(rotation_seed) },
            matrix,
            inverse,
            sigma_max: sigma1,
            sigma_min: sigma2,
        })
    }

    /// Arbitrary square matrix; rejected unless numerically invertible.
    pub fn general(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                what: "modulation columns",
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let d = matrix.nrows();
        let singular = matrix.clone().svd(false, false).singular_values;
        let sigma_max = singular.max();
        let sigma_min = singular.min();
        let tolerance = d as f64 * f64::EPSILON * sigma_max;
        if !(sigma_min > tolerance) {
            return Err(Error::SingularModulation { smallest: sigma_min, tolerance });
        }
        let inverse = matrix
            .clone()
            .lu()
            .try_inverse()
            .ok_or(Error::SingularModulation { smallest: sigma_min, tolerance })?;
        Ok(ModulationSpec { kind: Modulation::General, matrix, inverse, sigma_max, sigma_min })
    }

    fn check_bipartite(d: usize, p: usize, sigma1: f64, sigma2: f64) -> Result<()> {
        check_param("p", p as f64, p >= 1 && p < d, "must satisfy 1 <= p <= d-1")?;
        check_param("sigma2", sigma2, sigma2 > 0.0 && sigma2.is_finite(), "must be positive and finite")?;
        check_param("sigma1", sigma1, sigma1 >= sigma2 && sigma1.is_finite(), "must be finite and >= sigma2")
    }

    pub fn kind(&self) -> &Modulation {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// Largest singular value (σ1 for bipartite modulation).
    pub fn sigma1(&self) -> f64 {
        self.sigma_max
    }

    /// Smallest singular value (σ2 for bipartite modulation).
    pub fn sigma2(&self) -> f64 {
        self.sigma_min
    }

    /// Condition number σ1/σ2.
    pub fn kappa(&self) -> f64 {
        self.sigma_max / self.sigma_min
    }
}

fn haar_orthogonal(d: usize, seed: u64, tag: u64) -> DMatrix<f64> {
    let mut rng = rng::stream(seed, tag);
    let values: Vec<f64> = (0..d * d).map(|_| rng.sample(StandardNormal)).collect();
    let qr = DMatrix::from_row_slice(d, d, &values).qr();
    let mut q = qr.q();
    let r = qr.r();
    // Sign fix makes the distribution exactly Haar.
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// One realization of the teacher, the training inputs and the labels.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub dims: ModelDims,
    pub modulation: ModulationSpec,
    /// Teacher weights `W`, entries i.i.d. N(0, 1).
    pub teacher: DVector<f64>,
    /// Teacher inputs, `n × d`, entries N(0, 1/d).
    pub z: DMatrix<f64>,
    /// Student inputs `X = Z F`.
    pub x: DMatrix<f64>,
    pub y_star: DVector<f64>,
    pub y: DVector<f64>,
    pub noise_std: f64,
    pub seed: u64,
}

fn gaussian_vec(len: usize, scale: f64, rng: &mut impl Rng) -> Vec<f64> {
    (0..len).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Draws a fresh instance. `W`, `Z` and `ε` come from independent streams of
/// `seed`, so the result is a pure function of the arguments.
pub fn generate_instance(
    dims: ModelDims,
    modulation: &ModulationSpec,
    noise_std: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    dims.validate()?;
    if modulation.dim() != dims.d {
        return Err(Error::DimensionMismatch { what: "modulation", expected: dims.d, found: modulation.dim() });
    }
    if let Modulation::Bipartite { p, .. } = modulation.kind() {
        if *p != dims.p {
            return Err(Error::DimensionMismatch { what: "bipartite block size p", expected: dims.p, found: *p });
        }
    }
    check_param("noise_std", noise_std, noise_std >= 0.0 && noise_std.is_finite(), "must be finite and >= 0")?;

    let ModelDims { d, n, .. } = dims;
    let teacher = DVector::from_vec(gaussian_vec(d, 1.0, &mut rng::stream(seed, TAG_TEACHER)));
    let z_values = gaussian_vec(n * d, 1.0 / (d as f64).sqrt(), &mut rng::stream(seed, TAG_INPUTS));
    let z = DMatrix::from_row_slice(n, d, &z_values);
    let x = &z * modulation.matrix();
    let y_star = &z * &teacher;
    let y = add_label_noise(&y_star, noise_std, seed);
    Ok(ProblemInstance { dims, modulation: modulation.clone(), teacher, z, x, y_star, y, noise_std, seed })
}

fn add_label_noise(y_star: &DVector<f64>, noise_std: f64, seed: u64) -> DVector<f64> {
    if noise_std == 0.0 {
        return y_star.clone();
    }
    let eps = gaussian_vec(y_star.len(), noise_std, &mut rng::stream(seed, TAG_NOISE));
    y_star + DVector::from_vec(eps)
}

impl ProblemInstance {
    /// Same teacher and inputs, label noise redrawn from `noise_seed`.
    pub fn with_noise_redrawn(&self, noise_seed: u64) -> ProblemInstance {
        ProblemInstance { y: add_label_noise(&self.y_star, self.noise_std, noise_seed), ..self.clone() }
    }

    /// ‖W‖²/d; equals 1 only in expectation.
    pub fn teacher_norm_sq(&self) -> f64 {
        self.teacher.norm_squared() / self.dims.d as f64
    }

    fn check_student(&self, student: &DVector<f64>) -> Result<()> {
        if student.len() != self.dims.d {
            return Err(Error::DimensionMismatch { what: "student weights", expected: self.dims.d, found: student.len() });
        }
        Ok(())
    }
}

/// A point on a learning curve.
///
/// `t` is a step count for the iterative and exact engines, a real training
/// time for the replica predictions, and `f64::INFINITY` for the converged
/// limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroObservables {
    pub t: f64,
    pub r: f64,
    pub q: f64,
    pub gen_error: f64,
}

impl MacroObservables {
    pub fn from_rq(t: f64, r: f64, q: f64, noise_std: f64, include_test_noise: bool) -> Self {
        MacroObservables { t, r, q, gen_error: gen_error_from_rq(r, q, noise_std, include_test_noise) }
    }

    /// The untrained student: `(0, 0, 0, 1/2)` (plus the test noise term if requested).
    pub fn origin(noise_std: f64, include_test_noise: bool) -> Self {
        Self::from_rq(0.0, 0.0, 0.0, noise_std, include_test_noise)
    }
}

/// `(R, Q)` of a student weight vector.
pub fn measure_rq(instance: &ProblemInstance, student: &DVector<f64>) -> Result<(f64, f64)> {
    instance.check_student(student)?;
    let d = instance.dims.d as f64;
    let modulated = instance.modulation.matrix() * student;
    Ok((instance.teacher.dot(&modulated) / d, modulated.norm_squared() / d))
}

/// `L_G = (1 + ν σ_ε² + Q − 2R) / 2`, with `ν = 1` only when the test labels
/// carry the same noise as the training labels.
pub fn gen_error_from_rq(r: f64, q: f64, noise_std: f64, include_test_noise: bool) -> f64 {
    let test_noise = if include_test_noise { noise_std * noise_std } else { 0.0 };
    0.5 * (1.0 + test_noise + q - 2.0 * r)
}

/// Exact noiseless test error of a student for this particular teacher,
/// `‖W − FŴ‖² / (2d)`. Differs from [`gen_error_from_rq`] by
/// `(‖W‖²/d − 1)/2`.
pub fn analytic_test_error(instance: &ProblemInstance, student: &DVector<f64>) -> Result<f64> {
    instance.check_student(student)?;
    let residual = &instance.teacher - instance.modulation.matrix() * student;
    Ok(0.5 * residual.norm_squared() / instance.dims.d as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Half the mean squared error on `num_test` fresh noiseless teacher samples.
pub fn monte_carlo_test_error(
    instance: &ProblemInstance,
    student: &DVector<f64>,
    num_test: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    instance.check_student(student)?;
    check_param("num_test", num_test as f64, num_test >= 1, "must be at least 1")?;
    let d = instance.dims.d;
    let residual = &instance.teacher - instance.modulation.matrix() * student;
    let scale = 1.0 / (d as f64).sqrt();
    let mut rng = rng::stream(seed, TAG_TEST_SET);

    // Welford running moments of the per-sample loss.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 0..num_test {
        let mut err = 0.0;
        for j in 0..d {
            let zj: f64 = rng.sample(StandardNormal);
            err += scale * zj * residual[j];
        }
        let loss = 0.5 * err * err;
        let delta = loss - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (loss - mean);
    }
    let std_error = if num_test > 1 {
        (m2 / (num_test - 1) as f64 / num_test as f64).sqrt()
    } else {
        0.0
    };
    Ok(MonteCarloEstimate { mean, std_error, samples: num_test })
}
