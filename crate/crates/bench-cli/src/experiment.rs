//! Replicated runs, MSE aggregation and the mode-discovery metric.

use hpmc::targets::GaussianMixtureSpec;
use hpmc::{run, EvalCounters, RngFactory, RunOutput, TargetDensity};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::spec::{ExperimentSpec, Metric, Variant};

/// One aggregated metric of one variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub algorithm: String,
    pub n: usize,
    pub k: usize,
    pub sigma: f64,
    pub epsilon_or_lambda: Option<f64>,
    pub metric: String,
    /// `None` when no replicate produced an estimate.
    pub value: Option<f64>,
    pub stderr: Option<f64>,
    pub replicates: usize,
    /// Fresh target-density evaluations of one replicate.
    pub target_evals: u64,
    /// Proposal evaluations of one replicate spent on sample weights.
    pub proposal_evals: u64,
    pub seed_base: u64,
    pub d_x: usize,
    pub variant: String,
}

/// Mean squared error over replicates and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mse {
    pub mse: f64,
    pub stderr: f64,
}

/// MSE of per-replicate estimates against `truth`.
///
/// Vector estimates are averaged over coordinates first; the standard error
/// is the sample standard deviation of the per-replicate squared errors over √R.
pub fn compute_mse(estimates: &[Vec<f64>], truth: &[f64]) -> Result<Mse> {
    if estimates.is_empty() {
        return Err(BenchError::Spec("MSE needs at least one replicate".into()));
    }
    let errors = estimates
        .iter()
        .map(|e| {
            if e.len() != truth.len() || truth.is_empty() {
                return Err(BenchError::Spec(format!(
                    "estimate of dimension {} against truth of dimension {}",
                    e.len(),
                    truth.len()
                )));
            }
            Ok(e.iter()
                .zip(truth)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                / truth.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let r = errors.len() as f64;
    let mse = errors.iter().sum::<f64>() / r;
    let stderr = if errors.len() > 1 {
        (errors.iter().map(|e| (e - mse).powi(2)).sum::<f64>() / (r - 1.0)).sqrt() / r.sqrt()
    } else {
        0.0
    };
    Ok(Mse { mse, stderr })
}

/// Scalar form of [`compute_mse`].
pub fn compute_mse_scalar(estimates: &[f64], truth: f64) -> Result<Mse> {
    let v: Vec<Vec<f64>> = estimates.iter().map(|&e| vec![e]).collect();
    compute_mse(&v, &[truth])
}

/// Whether some location lies within Mahalanobis distance `radius` of each component.
pub fn modes_discovered(
    spec: &GaussianMixtureSpec,
    locations: &[Vec<f64>],
    radius: f64,
) -> Vec<bool> {
    spec.means
        .iter()
        .zip(&spec.covariances)
        .map(|(mean, cov)| {
            locations
                .iter()
                .any(|x| mahalanobis(x, mean, cov).is_some_and(|d| d <= radius))
        })
        .collect()
}

/// Mahalanobis distance of `x` from `mean` under `cov`; `None` if `cov` is not positive definite.
pub fn mahalanobis(x: &[f64], mean: &[f64], cov: &DMatrix<f64>) -> Option<f64> {
    let chol = cov.clone().cholesky()?;
    let d = DVector::from_iterator(mean.len(), x.iter().zip(mean).map(|(a, b)| a - b));
    Some(chol.l().solve_lower_triangular(&d)?.norm())
}

/// Seed of replicate `r`: a counter-derived child stream of `seed_base`.
pub fn replicate_seed(seed_base: u64, r: usize) -> u64 {
    RngFactory::new(seed_base).child(r as u64).seed()
}

/// Runs `replicates` independent replicates of one variant.
pub fn run_replicates(
    variant: &Variant,
    target: &TargetDensity,
    t: usize,
    seed_base: u64,
    replicates: usize,
    record_locations: bool,
) -> Result<Vec<RunOutput>> {
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut c = variant.sampler_config(t, replicate_seed(seed_base, r));
            c.record_locations = record_locations;
            Ok(run(&c, target)?)
        })
        .collect()
}

/// Aggregated rows of one variant.
pub fn aggregate(
    spec: &ExperimentSpec,
    variant: &Variant,
    target: &TargetDensity,
    outputs: &[RunOutput],
) -> Result<Vec<ResultRow>> {
    let first: EvalCounters = outputs.first().map(|o| o.counters).unwrap_or_default();
    let row = |metric: &str, value: Option<f64>, stderr: Option<f64>| ResultRow {
        algorithm: variant.algorithm.id().to_string(),
        n: variant.n,
        k: variant.k,
        sigma: variant.sigma,
        epsilon_or_lambda: variant.epsilon_or_lambda(),
        metric: metric.to_string(),
        value,
        stderr,
        replicates: outputs.len(),
        target_evals: first.target_density,
        proposal_evals: first.proposal,
        seed_base: spec.seed_base,
        d_x: target.dim(),
        variant: variant.name.clone(),
    };
    let mut rows = Vec::new();
    for metric in &spec.metrics {
        match metric {
            Metric::MseMean => {
                let truth = target.true_mean().expect("validated");
                let estimates: Option<Vec<Vec<f64>>> =
                    outputs.iter().map(|o| o.mean.clone()).collect();
                rows.push(match estimates {
                    Some(e) => {
                        let m = compute_mse(&e, truth)?;
                        row(metric.id(), Some(m.mse), Some(m.stderr))
                    }
                    None => row(metric.id(), None, None),
                });
            }
            Metric::MseZ => {
                let z = target.true_log_z().expect("validated").exp();
                let with: Vec<f64> = outputs.iter().map(|o| o.z()).collect();
                let without: Vec<f64> = outputs
                    .iter()
                    .map(|o| o.z_without_mixture_factor())
                    .collect();
                let m = compute_mse_scalar(&with, z)?;
                rows.push(row(metric.id(), Some(m.mse), Some(m.stderr)));
                let m = compute_mse_scalar(&without, z)?;
                rows.push(row("mse_z_sum_mixture", Some(m.mse), Some(m.stderr)));
            }
            Metric::ModeDiscovery => {
                let mixture = spec.target.mixture_spec().expect("validated");
                let snapshot = spec.mode_iteration - 1;
                let hits: Vec<f64> = outputs
                    .iter()
                    .map(|o| {
                        let all = modes_discovered(&mixture, &o.locations[snapshot], 3.0)
                            .into_iter()
                            .all(|b| b);
                        f64::from(u8::from(all))
                    })
                    .collect();
                let r = hits.len() as f64;
                let p = hits.iter().sum::<f64>() / r;
                rows.push(row(metric.id(), Some(p), Some((p * (1.0 - p) / r).sqrt())));
            }
        }
    }
    Ok(rows)
}

/// All rows of an experiment: `replicates` runs per variant, each with T
/// derived from the shared budget.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let target = spec.target.build()?;
    let record = spec.metrics.contains(&Metric::ModeDiscovery);
    let mut rows = Vec::new();
    for v in &spec.variants {
        let t = v.iterations(spec.budget)?;
        let outputs = run_replicates(v, &target, t, spec.seed_base, spec.replicates, record)?;
        rows.extend(aggregate(spec, v, &target, &outputs)?);
    }
    Ok(rows)
}

/// Rows of the experiment repeated at every dimension of `spec.dims`.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for &d in &spec.dims {
        rows.extend(run_experiment(&spec.at_dimension(d)?)?);
    }
    Ok(rows)
}
