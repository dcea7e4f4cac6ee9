//! Unnormalized target densities, their gradients and known ground truth.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::counters::EvalCounters;
use crate::error::{check_dim, Error, Result};
use crate::math::{log_sum_exp, LN_2PI};

/// A log-density that can be evaluated with its gradient.
///
/// Implementations are immutable and shared between threads.
pub trait LogDensity: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn log_density(&self, x: &[f64]) -> f64;

    /// Writes the gradient of the log-density into `grad` and returns the log-density.
    fn log_density_and_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

/// Result of [`TargetDensity::evaluate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub log_pi: f64,
    pub grad: Option<Vec<f64>>,
}

/// An unnormalized target `π` together with whatever ground truth is known about it.
#[derive(Clone)]
pub struct TargetDensity {
    name: String,
    density: Arc<dyn LogDensity>,
    log_scale: f64,
    true_mean: Option<Vec<f64>>,
    true_log_z: Option<f64>,
}

impl fmt::Debug for TargetDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetDensity")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("log_scale", &self.log_scale)
            .field("true_mean", &self.true_mean)
            .field("true_log_z", &self.true_log_z)
            .finish()
    }
}

impl TargetDensity {
    pub fn new(name: impl Into<String>, density: Arc<dyn LogDensity>) -> Self {
        Self {
            name: name.into(),
            density,
            log_scale: 0.0,
            true_mean: None,
            true_log_z: None,
        }
    }

    pub fn with_true_mean(mut self, mean: Vec<f64>) -> Self {
        self.true_mean = Some(mean);
        self
    }

    pub fn with_true_log_z(mut self, log_z: f64) -> Self {
        self.true_log_z = Some(log_z);
        self
    }

    /// The same target with its unnormalized density multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "scale factor must be positive, got {c}"
            )));
        }
        let mut out = self.clone();
        out.log_scale += c.ln();
        out.true_log_z = out.true_log_z.map(|z| z + c.ln());
        Ok(out)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.density.dim()
    }

    pub fn true_mean(&self) -> Option<&[f64]> {
        self.true_mean.as_deref()
    }

    pub fn true_log_z(&self) -> Option<f64> {
        self.true_log_z
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        if x.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidInput(
                "NaN coordinate in target argument".into(),
            ));
        }
        Ok(())
    }

    /// `log π(x)`, counted as one density evaluation.
    pub fn log_density(&self, x: &[f64], counters: &mut EvalCounters) -> Result<f64> {
        self.check(x)?;
        counters.target_density += 1;
        Ok(self.density.log_density(x) + self.log_scale)
    }

    /// Writes `∇ log π(x)` into `grad`, counted as one gradient evaluation.
    ///
    /// The returned log-density is a by-product and is not counted; a caller
    /// that consumes it as a density value records that itself.
    pub fn gradient(
        &self,
        x: &[f64],
        grad: &mut [f64],
        counters: &mut EvalCounters,
    ) -> Result<f64> {
        self.check(x)?;
        check_dim(self.dim(), grad.len())?;
        counters.target_gradient += 1;
        Ok(self.density.log_density_and_grad(x, grad) + self.log_scale)
    }

    pub fn evaluate(
        &self,
        x: &[f64],
        want_grad: bool,
        counters: &mut EvalCounters,
    ) -> Result<Evaluation> {
        if want_grad {
            let mut grad = vec![0.0; self.dim()];
            let log_pi = self.gradient(x, &mut grad, counters)?;
            counters.target_density += 1;
            Ok(Evaluation {
                log_pi,
                grad: Some(grad),
            })
        } else {
            Ok(Evaluation {
                log_pi: self.log_density(x, counters)?,
                grad: None,
            })
        }
    }
}

/// `log π ≡ 0` on all of `R^d`.
#[derive(Debug, Clone, Copy)]
pub struct Flat {
    pub dim: usize,
}

impl LogDensity for Flat {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn log_density_and_grad(&self, _x: &[f64], grad: &mut [f64]) -> f64 {
        grad.fill(0.0);
        0.0
    }
}

/// Weights, means and covariances of a Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixtureSpec {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
}

impl GaussianMixtureSpec {
    pub fn new(
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        covariances: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let spec = Self {
            weights,
            means,
            covariances,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Equal-weight mixture of isotropic components `N(mean_i, variance·I)`.
    pub fn isotropic(means: Vec<Vec<f64>>, variance: f64) -> Result<Self> {
        let dim = means.first().map_or(0, Vec::len);
        let n = means.len();
        let cov = DMatrix::identity(dim, dim) * variance;
        Self::new(vec![1.0 / n as f64; n], means, vec![cov; n])
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.weights.len();
        if n == 0 {
            return Err(Error::InvalidSpec(
                "mixture needs at least one component".into(),
            ));
        }
        if self.means.len() != n || self.covariances.len() != n {
            return Err(Error::InvalidSpec(
                "weights, means and covariances differ in length".into(),
            ));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidSpec(
                "mixture weights must be non-negative".into(),
            ));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        let d = self.means[0].len();
        if d == 0 {
            return Err(Error::InvalidSpec(
                "mixture dimension must be positive".into(),
            ));
        }
        for (m, c) in self.means.iter().zip(&self.covariances) {
            if m.len() != d || c.nrows() != d || c.ncols() != d {
                return Err(Error::InvalidSpec(
                    "inconsistent component dimensions".into(),
                ));
            }
            if (c - c.transpose()).amax() > 1e-12 * c.amax().max(1.0) {
                return Err(Error::InvalidSpec("covariance is not symmetric".into()));
            }
            if c.clone().cholesky().is_none() {
                return Err(Error::InvalidSpec(
                    "covariance is not positive definite".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Precision {
    Isotropic(f64),
    Full(DMatrix<f64>),
}

#[derive(Debug, Clone)]
struct Component {
    /// `log w_i - ½ log((2π)^d det Σ_i)`
    log_coef: f64,
    mean: Vec<f64>,
    precision: Precision,
}

impl Component {
    /// Quadratic form `(x-μ)ᵀ Σ⁻¹ (x-μ)`; optionally writes `Σ⁻¹(x-μ)` into `out`.
    fn quad(&self, x: &[f64], out: Option<&mut [f64]>) -> f64 {
        match &self.precision {
            Precision::Isotropic(p) => {
                let mut q = 0.0;
                match out {
                    Some(out) => {
                        for ((o, xi), mi) in out.iter_mut().zip(x).zip(&self.mean) {
                            let r = xi - mi;
                            *o = p * r;
                            q += r * r;
                        }
                    }
                    None => {
                        for (xi, mi) in x.iter().zip(&self.mean) {
                            let r = xi - mi;
                            q += r * r;
                        }
                    }
                }
                p * q
            }
            Precision::Full(prec) => {
                let r =
                    DVector::from_iterator(x.len(), x.iter().zip(&self.mean).map(|(a, b)| a - b));
                let pr = prec * &r;
                if let Some(out) = out {
                    out.copy_from_slice(pr.as_slice());
                }
                r.dot(&pr)
            }
        }
    }
}

/// Compiled Gaussian mixture density `Σ_i w_i N(x; μ_i, Σ_i)`.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    dim: usize,
    components: Vec<Component>,
}

impl GaussianMixture {
    pub fn new(spec: &GaussianMixtureSpec) -> Result<Self> {
        spec.validate()?;
        let dim = spec.dim();
        let components = spec
            .weights
            .iter()
            .zip(&spec.means)
            .zip(&spec.covariances)
            .map(|((&w, mean), cov)| {
                let chol = cov.clone().cholesky().expect("validated positive definite");
                let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
                let off_diag_zero =
                    (0..dim).all(|i| (0..dim).all(|j| i == j || cov[(i, j)] == 0.0));
                let diag_const = (0..dim).all(|i| cov[(i, i)] == cov[(0, 0)]);
                let precision = if off_diag_zero && diag_const {
                    Precision::Isotropic(1.0 / cov[(0, 0)])
                } else {
                    Precision::Full(chol.inverse())
                };
                Component {
                    log_coef: w.ln() - 0.5 * (dim as f64 * LN_2PI + log_det),
                    mean: mean.clone(),
                    precision,
                }
            })
            .collect();
        Ok(Self { dim, components })
    }
}

/// Log-sum-exp over terms accumulated in sorted order, so the value does not
/// depend on the order of the mixture components.
fn sorted_log_sum_exp(terms: &mut [f64]) -> f64 {
    terms.sort_by(|a, b| a.total_cmp(b));
    log_sum_exp(terms)
}

impl LogDensity for GaussianMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let mut terms: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.log_coef - 0.5 * c.quad(x, None))
            .collect();
        sorted_log_sum_exp(&mut terms)
    }

    fn log_density_and_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let mut scratch = vec![0.0; self.dim];
        let mut terms = Vec::with_capacity(self.components.len());
        let mut directions = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let q = c.quad(x, Some(&mut scratch));
            terms.push(c.log_coef - 0.5 * q);
            directions.push(scratch.clone());
        }
        let log_pi = sorted_log_sum_exp(&mut terms.clone());
        grad.fill(0.0);
        if log_pi == f64::NEG_INFINITY {
            return log_pi;
        }
        for (t, dir) in terms.iter().zip(&directions) {
            let resp = (t - log_pi).exp();
            if resp > 0.0 {
                for (g, d) in grad.iter_mut().zip(dir) {
                    *g -= resp * d;
                }
            }
        }
        log_pi
    }
}

/// `log Σ_i w_i N(x; μ_i, Σ_i)` for a mixture spec.
pub fn log_mixture_density(spec: &GaussianMixtureSpec, x: &[f64]) -> Result<f64> {
    let mixture = GaussianMixture::new(spec)?;
    check_dim(mixture.dim, x.len())?;
    Ok(mixture.log_density(x))
}

/// Curvature `b`, scale `σ` and dimension of the banana-shaped density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BananaSpec {
    pub b: f64,
    pub sigma: f64,
    pub dim: usize,
}

impl Default for BananaSpec {
    fn default() -> Self {
        Self {
            b: 3.0,
            sigma: 1.0,
            dim: 2,
        }
    }
}

impl BananaSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "banana sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.dim < 2 {
            return Err(Error::InvalidSpec(format!(
                "banana dimension must be at least 2, got {}",
                self.dim
            )));
        }
        if !self.b.is_finite() {
            return Err(Error::InvalidSpec("banana curvature must be finite".into()));
        }
        Ok(())
    }
}

/// `log π(x) = -x₁²/2σ² - (x₂ + b(x₁² - σ²))²/2σ² - Σ_{i≥3} x_i²/2σ²`
#[derive(Debug, Clone, Copy)]
pub struct Banana {
    spec: BananaSpec,
}

impl Banana {
    pub fn new(spec: BananaSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec })
    }

    fn bent(&self, x: &[f64]) -> f64 {
        let s2 = self.spec.sigma * self.spec.sigma;
        x[1] + self.spec.b * (x[0] * x[0] - s2)
    }
}

impl LogDensity for Banana {
    fn dim(&self) -> usize {
        self.spec.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let s2 = self.spec.sigma * self.spec.sigma;
        let u = self.bent(x);
        let rest: f64 = x[2..].iter().map(|v| v * v).sum();
        -(x[0] * x[0] + u * u + rest) / (2.0 * s2)
    }

    fn log_density_and_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let s2 = self.spec.sigma * self.spec.sigma;
        let u = self.bent(x);
        grad[0] = -(x[0] + 2.0 * self.spec.b * x[0] * u) / s2;
        grad[1] = -u / s2;
        for (g, v) in grad[2..].iter_mut().zip(&x[2..]) {
            *g = -v / s2;
        }
        self.log_density(x)
    }
}

/// Named benchmark targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum BenchmarkTarget {
    /// Five well-separated bivariate Gaussians with full covariances.
    Toy5,
    /// Equal mixture of `N(separation·1, variance·I)` and `N(-separation·1, variance·I)`.
    Bimodal20 {
        dim: usize,
        separation: f64,
        variance: f64,
    },
    Banana(BananaSpec),
    /// Normalized isotropic Gaussian `N(mean·1, sd²·I)`.
    Gaussian {
        dim: usize,
        mean: f64,
        sd: f64,
    },
}

impl BenchmarkTarget {
    pub fn bimodal20() -> Self {
        Self::Bimodal20 {
            dim: 20,
            separation: 8.0,
            variance: 5.0,
        }
    }

    pub fn banana(dim: usize) -> Self {
        Self::Banana(BananaSpec {
            dim,
            ..BananaSpec::default()
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Toy5 => 2,
            Self::Bimodal20 { dim, .. } | Self::Gaussian { dim, .. } => *dim,
            Self::Banana(spec) => spec.dim,
        }
    }

    /// Mixture spec for the targets that are Gaussian mixtures.
    pub fn mixture_spec(&self) -> Option<GaussianMixtureSpec> {
        match self {
            Self::Toy5 => Some(toy5_spec()),
            Self::Bimodal20 {
                dim,
                separation,
                variance,
            } => GaussianMixtureSpec::isotropic(
                vec![vec![*separation; *dim], vec![-separation; *dim]],
                *variance,
            )
            .ok(),
            Self::Gaussian { dim, mean, sd } => {
                GaussianMixtureSpec::isotropic(vec![vec![*mean; *dim]], sd * sd).ok()
            }
            Self::Banana(_) => None,
        }
    }

    pub fn build(&self) -> Result<TargetDensity> {
        match self {
            Self::Banana(spec) => {
                let banana = Banana::new(*spec)?;
                let log_z = 0.5 * spec.dim as f64 * (LN_2PI + 2.0 * spec.sigma.ln());
                Ok(TargetDensity::new("banana", Arc::new(banana))
                    .with_true_mean(vec![0.0; spec.dim])
                    .with_true_log_z(log_z))
            }
            other => {
                if let Self::Bimodal20 { dim, variance, .. }
                | Self::Gaussian {
                    dim, sd: variance, ..
                } = other
                {
                    if *dim == 0 || !(*variance > 0.0) {
                        return Err(Error::InvalidSpec(format!(
                            "invalid target parameters: {other:?}"
                        )));
                    }
                }
                let spec = other.mixture_spec().ok_or_else(|| {
                    Error::InvalidSpec(format!("invalid target parameters: {other:?}"))
                })?;
                let d = spec.dim();
                let mean = (0..d)
                    .map(|j| {
                        spec.weights
                            .iter()
                            .zip(&spec.means)
                            .map(|(w, m)| w * m[j])
                            .sum()
                    })
                    .collect();
                let name = match other {
                    Self::Toy5 => "toy5",
                    Self::Bimodal20 { .. } => "bimodal20",
                    _ => "gaussian",
                };
                Ok(
                    TargetDensity::new(name, Arc::new(GaussianMixture::new(&spec)?))
                        .with_true_mean(mean)
                        .with_true_log_z(0.0),
                )
            }
        }
    }
}

/// Means and covariances of the five-mode bivariate mixture.
pub fn toy5_spec() -> GaussianMixtureSpec {
    let means = vec![
        vec![-10.0, -10.0],
        vec![0.0, 16.0],
        vec![13.0, 8.0],
        vec![-9.0, 7.0],
        vec![14.0, -14.0],
    ];
    let covs = [
        [2.0, 0.6, 0.6, 1.0],
        [2.0, -0.4, -0.4, 2.0],
        [2.0, 0.8, 0.8, 2.0],
        [3.0, 0.0, 0.0, 0.5],
        [2.0, -0.1, -0.1, 2.0],
    ]
    .iter()
    .map(|c| DMatrix::from_row_slice(2, 2, c))
    .collect();
    GaussianMixtureSpec::new(vec![0.2; 5], means, covs).expect("toy5 spec is valid")
}

/// Shorthand for [`BenchmarkTarget::build`].
pub fn build_benchmark_target(target: &BenchmarkTarget) -> Result<TargetDensity> {
    target.build()
}
