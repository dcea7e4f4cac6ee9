//! Importance weights (deterministic-mixture and standard), normalization and
//! the streaming estimators built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counters::EvalCounters;
use crate::error::{check_dim, Error, Result};
use crate::math::log_sum_exp;
use crate::proposals::{Draw, ProposalPopulation};
use crate::targets::TargetDensity;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub x: Vec<f64>,
    /// Raw log-weight; `-inf` for zero target density.
    pub log_w: f64,
    pub proposal_index: usize,
    pub iteration: usize,
    pub cached_log_pi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// `π(x) / [(1/N) Σ_j q_j(x)]`
    Dm,
    /// `π(x) / q_n(x)` for the proposal `n` that generated `x`.
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormScope {
    /// One group holding every sample.
    Global,
    /// One group per proposal index.
    Local,
}

/// Raw log-weights for draws from `pop`.
///
/// Counts one target evaluation per draw and `N` (DM) or 1 (standard)
/// proposal evaluations per draw.
pub fn compute_weights(
    draws: &[Draw],
    pop: &ProposalPopulation,
    target: &TargetDensity,
    scheme: WeightScheme,
    counters: &mut EvalCounters,
) -> Result<Vec<WeightedSample>> {
    let n = pop.len();
    for d in draws {
        check_dim(pop.dim(), d.x.len())?;
        if d.proposal >= n {
            return Err(Error::InvalidInput(format!(
                "draw from proposal {} of {n}",
                d.proposal
            )));
        }
    }
    let out = draws
        .par_iter()
        .map(|d| {
            let log_pi = target.log_density(&d.x, &mut EvalCounters::new())?;
            let log_q = match scheme {
                WeightScheme::Dm => pop.log_mixture_raw(&d.x),
                WeightScheme::Standard => pop.proposals[d.proposal].log_pdf(&d.x),
            };
            Ok(WeightedSample {
                x: d.x.clone(),
                log_w: log_weight(log_pi, log_q),
                proposal_index: d.proposal,
                iteration: pop.iteration,
                cached_log_pi: log_pi,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let m = draws.len() as u64;
    counters.target_density += m;
    counters.proposal += match scheme {
        WeightScheme::Dm => m * n as u64,
        WeightScheme::Standard => m,
    };
    Ok(out)
}

pub(crate) fn log_weight(log_pi: f64, log_q: f64) -> f64 {
    if log_pi == f64::NEG_INFINITY || log_pi.is_nan() {
        f64::NEG_INFINITY
    } else {
        log_pi - log_q
    }
}

/// Normalizes one group of log-weights in the log domain.
///
/// Fails with [`Error::DegenerateWeights`] when no weight is positive.
pub fn normalize_log_weights(log_w: &[f64]) -> Result<Vec<f64>> {
    let lse = log_sum_exp(log_w);
    if !lse.is_finite() {
        return Err(Error::DegenerateWeights { group: 0 });
    }
    Ok(log_w
        .iter()
        .map(|l| if l.is_nan() { 0.0 } else { (l - lse).exp() })
        .collect())
}

/// Like [`normalize_log_weights`] but falls back to uniform weights for a
/// degenerate group; the flag reports whether the fallback was used.
pub fn normalize_or_uniform(log_w: &[f64]) -> (Vec<f64>, bool) {
    match normalize_log_weights(log_w) {
        Ok(w) => (w, false),
        Err(_) => (vec![1.0 / log_w.len() as f64; log_w.len()], true),
    }
}

/// Normalized weights plus the groups that fell back to uniform weights.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedWeights {
    pub weights: Vec<f64>,
    pub degenerate_groups: Vec<usize>,
}

/// Normalizes over all samples (`Global`) or within each proposal's samples (`Local`).
pub fn normalize(samples: &[WeightedSample], scope: NormScope) -> NormalizedWeights {
    let log_w: Vec<f64> = samples.iter().map(|s| s.log_w).collect();
    match scope {
        NormScope::Global => {
            let (weights, degenerate) = normalize_or_uniform(&log_w);
            NormalizedWeights {
                weights,
                degenerate_groups: if degenerate { vec![0] } else { vec![] },
            }
        }
        NormScope::Local => {
            let groups = samples
                .iter()
                .map(|s| s.proposal_index)
                .max()
                .map_or(0, |m| m + 1);
            let mut members: Vec<Vec<usize>> = vec![Vec::new(); groups];
            for (i, s) in samples.iter().enumerate() {
                members[s.proposal_index].push(i);
            }
            let mut weights = vec![0.0; samples.len()];
            let mut degenerate_groups = Vec::new();
            for (g, idx) in members
                .iter()
                .enumerate()
                .filter(|(_, idx)| !idx.is_empty())
            {
                let lw: Vec<f64> = idx.iter().map(|&i| log_w[i]).collect();
                let (w, degenerate) = normalize_or_uniform(&lw);
                if degenerate {
                    degenerate_groups.push(g);
                }
                for (&i, wi) in idx.iter().zip(w) {
                    weights[i] = wi;
                }
            }
            NormalizedWeights {
                weights,
                degenerate_groups,
            }
        }
    }
}

/// Streaming sums of `w`, `w·x` and the sample count.
///
/// Sums are kept relative to the largest log-weight seen so far, so the
/// self-normalized mean stays exact even when every raw weight underflows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateAccumulator {
    dim: usize,
    log_shift: f64,
    sum_w: f64,
    sum_wx: Vec<f64>,
    count: u64,
}

impl EstimateAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            log_shift: f64::NEG_INFINITY,
            sum_w: 0.0,
            sum_wx: vec![0.0; dim],
            count: 0,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    fn rescale(&mut self, new_shift: f64) {
        if self.log_shift != f64::NEG_INFINITY {
            let f = (self.log_shift - new_shift).exp();
            self.sum_w *= f;
            self.sum_wx.iter_mut().for_each(|v| *v *= f);
        }
        self.log_shift = new_shift;
    }

    pub fn absorb(&mut self, x: &[f64], log_w: f64) {
        debug_assert_eq!(x.len(), self.dim);
        self.count += 1;
        if log_w == f64::NEG_INFINITY || log_w.is_nan() {
            return;
        }
        if log_w > self.log_shift {
            self.rescale(log_w);
        }
        let w = (log_w - self.log_shift).exp();
        self.sum_w += w;
        for (s, xi) in self.sum_wx.iter_mut().zip(x) {
            *s += w * xi;
        }
    }

    pub fn absorb_all(&mut self, samples: &[WeightedSample]) {
        for s in samples {
            self.absorb(&s.x, s.log_w);
        }
    }

    pub fn merge(&mut self, other: &Self) {
        debug_assert_eq!(self.dim, other.dim);
        self.count += other.count;
        if other.log_shift == f64::NEG_INFINITY {
            return;
        }
        let mut o = other.clone();
        if o.log_shift > self.log_shift {
            self.rescale(o.log_shift);
        } else {
            o.rescale(self.log_shift);
        }
        self.sum_w += o.sum_w;
        for (s, v) in self.sum_wx.iter_mut().zip(&o.sum_wx) {
            *s += v;
        }
    }

    /// `Σ w x / Σ w`.
    pub fn snis_estimate(&self) -> Result<Vec<f64>> {
        if self.sum_w <= 0.0 || !self.sum_w.is_finite() {
            return Err(Error::DegenerateEstimate);
        }
        Ok(self.sum_wx.iter().map(|v| v / self.sum_w).collect())
    }

    /// `log Ẑ`; `-inf` when every absorbed weight is zero.
    pub fn log_z_estimate(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::DegenerateEstimate);
        }
        if self.sum_w <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.log_shift + self.sum_w.ln() - (self.count as f64).ln())
    }

    /// `Ẑ = (1/M) Σ w`; 0 when every absorbed weight is zero.
    pub fn z_estimate(&self) -> Result<f64> {
        self.log_z_estimate().map(f64::exp)
    }

    /// `(1/(M·Z)) Σ w x` for a known `log Z`.
    pub fn uis_estimate(&self, log_z: f64) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::DegenerateEstimate);
        }
        if self.sum_w <= 0.0 {
            return Ok(vec![0.0; self.dim]);
        }
        let scale = (self.log_shift - (self.count as f64).ln() - log_z).exp();
        Ok(self.sum_wx.iter().map(|v| v * scale).collect())
    }
}

/// Free-function forms of the accumulator estimators.
pub fn snis_estimate(acc: &EstimateAccumulator) -> Result<Vec<f64>> {
    acc.snis_estimate()
}

pub fn z_estimate(acc: &EstimateAccumulator) -> Result<f64> {
    acc.z_estimate()
}

pub fn uis_estimate(acc: &EstimateAccumulator, log_z: f64) -> Result<Vec<f64>> {
    acc.uis_estimate(log_z)
}
