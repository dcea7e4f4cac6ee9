//! Multinomial resampling and the local / global schemes built on it.

use rand::Rng;

use crate::error::{Error, Result};
use crate::weighting::{normalize_or_uniform, WeightedSample};

/// Weighted point masses `Σ_i w̄_i δ(· - atom_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomMeasure<A> {
    atoms: Vec<A>,
    weights: Vec<f64>,
}

impl<A> RandomMeasure<A> {
    pub fn new(atoms: Vec<A>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if atoms.is_empty() {
            return Err(Error::InvalidInput("random measure has no atoms".into()));
        }
        validate_weights(&weights)?;
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "measure weights sum to {total}"
            )));
        }
        Ok(Self { atoms, weights })
    }

    /// Measure from raw log-weights; degenerate sets get uniform weights.
    pub fn from_log_weights(atoms: Vec<A>, log_w: &[f64]) -> Result<Self> {
        let (weights, _) = normalize_or_uniform(log_w);
        Self::new(atoms, weights)
    }

    pub fn atoms(&self) -> &[A] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

fn validate_weights(weights: &[f64]) -> Result<()> {
    if weights
        .iter()
        .any(|w| w.is_nan() || *w < 0.0 || w.is_infinite())
    {
        return Err(Error::InvalidInput(
            "resampling weights must be finite and non-negative".into(),
        ));
    }
    Ok(())
}

/// `count` i.i.d. indices from the categorical distribution `weights`.
///
/// Inverse CDF with one uniform per draw: the chosen index is the first whose
/// cumulative weight exceeds the uniform, so zero-weight atoms are never hit
/// and ties go to the lower index.
pub fn multinomial_draw<R: Rng + ?Sized>(
    weights: &[f64],
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    validate_weights(weights)?;
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cdf.push(acc);
    }
    if !(acc > 0.0) {
        return Err(Error::DegenerateWeights { group: 0 });
    }
    Ok((0..count)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            cdf.partition_point(|&c| c <= u).min(weights.len() - 1)
        })
        .collect())
}

/// One location chosen by local resampling.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampledLocation {
    pub x: Vec<f64>,
    pub log_pi: f64,
    /// Index into the sample list the location was taken from.
    pub sample_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalResample {
    /// One location per proposal, in proposal order.
    pub locations: Vec<ResampledLocation>,
    /// Proposals whose samples all had zero weight (resampled uniformly).
    pub degenerate_groups: Vec<usize>,
}

/// For each proposal, one draw among its own samples using weights normalized
/// within that proposal's group.
pub fn local_resample<R: Rng + ?Sized>(
    samples: &[WeightedSample],
    rng: &mut R,
) -> Result<LocalResample> {
    let groups = samples
        .iter()
        .map(|s| s.proposal_index)
        .max()
        .map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); groups];
    for (i, s) in samples.iter().enumerate() {
        members[s.proposal_index].push(i);
    }
    let mut locations = Vec::with_capacity(groups);
    let mut degenerate_groups = Vec::new();
    for (n, idx) in members.iter().enumerate() {
        if idx.is_empty() {
            return Err(Error::InvalidInput(format!("proposal {n} has no samples")));
        }
        let log_w: Vec<f64> = idx.iter().map(|&i| samples[i].log_w).collect();
        let (w, degenerate) = normalize_or_uniform(&log_w);
        if degenerate {
            degenerate_groups.push(n);
        }
        let pick = idx[multinomial_draw(&w, 1, rng)?[0]];
        locations.push(ResampledLocation {
            x: samples[pick].x.clone(),
            log_pi: samples[pick].cached_log_pi,
            sample_index: pick,
        });
    }
    Ok(LocalResample {
        locations,
        degenerate_groups,
    })
}

/// `n` i.i.d. draws over all atoms jointly; indices into the measure.
pub fn global_resample_indices<A, R: Rng + ?Sized>(
    measure: &RandomMeasure<A>,
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    multinomial_draw(&measure.weights, n, rng)
}

/// `n` unweighted atoms drawn i.i.d. from the measure.
pub fn global_resample<A: Clone, R: Rng + ?Sized>(
    measure: &RandomMeasure<A>,
    n: usize,
    rng: &mut R,
) -> Result<Vec<A>> {
    Ok(global_resample_indices(measure, n, rng)?
        .into_iter()
        .map(|i| measure.atoms[i].clone())
        .collect())
}
