//! Location adaptation: preliminary locations from weighted samples (P) and
//! from HMC chains (Q), their deterministic-mixture weights, and the two
//! cooperation schemes that turn `C = P ∪ Q` into the next N locations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::counters::EvalCounters;
use crate::error::{Error, Result};
use crate::hmc::{hmc_step, ChainState, HmcParams};
use crate::math::LogSumExp;
use crate::proposals::{GaussianProposal, ProposalPopulation};
use crate::resampling::{global_resample_indices, local_resample, multinomial_draw, RandomMeasure};
use crate::targets::TargetDensity;
use crate::weighting::{log_weight, normalize_or_uniform, WeightedSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Locally resampled from the proposal's own weighted samples (set P).
    Samples,
    /// Position of the proposal's HMC chain (set Q).
    Chains,
    /// Candidate accepted by mixture-model cooperation.
    Mixture,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreliminaryLocation {
    pub x: Vec<f64>,
    pub log_pi: f64,
    pub provenance: Provenance,
    /// Proposal the location was generated from.
    pub slot: usize,
}

/// The candidate set `C`, P locations first and Q locations after them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PreliminaryLocationSet {
    pub locations: Vec<PreliminaryLocation>,
    /// Raw DM log-weights, filled by [`weight_preliminary`].
    pub dm_log_weights: Vec<f64>,
    /// Normalized weights over all of `C`, filled by [`weight_preliminary`].
    pub weights: Vec<f64>,
}

impl PreliminaryLocationSet {
    pub fn new(p: Vec<PreliminaryLocation>, q: Vec<PreliminaryLocation>) -> Self {
        let mut locations = p;
        locations.extend(q);
        Self {
            locations,
            dm_log_weights: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    fn require_weights(&self) -> Result<()> {
        if self.weights.len() != self.locations.len() || self.locations.is_empty() {
            return Err(Error::InvalidInput(
                "preliminary locations are not weighted".into(),
            ));
        }
        Ok(())
    }
}

/// P: one location per proposal, locally resampled from its own samples.
///
/// Uses the cached log-densities of the samples; no target evaluations.
/// Returns the locations and the proposals whose local weights were degenerate.
pub fn preliminary_from_samples<R: Rng + ?Sized>(
    samples: &[WeightedSample],
    rng: &mut R,
) -> Result<(Vec<PreliminaryLocation>, Vec<usize>)> {
    let lr = local_resample(samples, rng)?;
    let locations = lr
        .locations
        .into_iter()
        .enumerate()
        .map(|(n, l)| PreliminaryLocation {
            x: l.x,
            log_pi: l.log_pi,
            provenance: Provenance::Samples,
            slot: n,
        })
        .collect();
    Ok((locations, lr.degenerate_groups))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainAdvance {
    pub locations: Vec<PreliminaryLocation>,
    pub accepted: usize,
    pub diverged: usize,
}

/// Q: advances every chain by one HMC transition; chain `n` draws from `rng_for(n)`.
pub fn preliminary_from_locations<R, F>(
    chains: &mut [ChainState],
    target: &TargetDensity,
    params: &HmcParams,
    mut rng_for: F,
    counters: &mut EvalCounters,
) -> Result<ChainAdvance>
where
    R: Rng,
    F: FnMut(usize) -> R,
{
    let mut accepted = 0;
    let mut diverged = 0;
    let mut locations = Vec::with_capacity(chains.len());
    for (n, chain) in chains.iter_mut().enumerate() {
        let mut rng = rng_for(n);
        let t = hmc_step(chain, target, params, &mut rng, counters)?;
        accepted += usize::from(t.accepted);
        diverged += usize::from(t.diverged);
        *chain = t.state;
        locations.push(PreliminaryLocation {
            x: chain.position.clone(),
            log_pi: chain.cached_log_pi,
            provenance: Provenance::Chains,
            slot: n,
        });
    }
    Ok(ChainAdvance {
        locations,
        accepted,
        diverged,
    })
}

/// DM weights of the preliminary locations against the iteration-t population:
/// `w_i = π(μ_i*) / [(1/N) Σ_n q_n(μ_i*)]`, then normalized over `C`.
///
/// Returns `true` when every weight was zero and the uniform fallback was used.
pub fn weight_preliminary(
    set: &mut PreliminaryLocationSet,
    pop: &ProposalPopulation,
    counters: &mut EvalCounters,
) -> Result<bool> {
    if set.is_empty() {
        return Err(Error::InvalidInput(
            "no preliminary locations to weight".into(),
        ));
    }
    set.dm_log_weights = set
        .locations
        .iter()
        .map(|l| {
            crate::error::check_dim(pop.dim(), l.x.len())?;
            Ok(log_weight(l.log_pi, pop.log_mixture_raw(&l.x)))
        })
        .collect::<Result<_>>()?;
    counters.adaptation_proposal += (set.len() * pop.len()) as u64;
    counters.target_cache_hits += set.len() as u64;
    let (w, degenerate) = normalize_or_uniform(&set.dm_log_weights);
    set.weights = w;
    Ok(degenerate)
}

/// Cooperation by resampling: N unweighted draws from `Σ_i w̄_i δ(μ - μ_i*)`.
pub fn cooperate_resample<R: Rng + ?Sized>(
    set: &PreliminaryLocationSet,
    n: usize,
    rng: &mut R,
) -> Result<Vec<PreliminaryLocation>> {
    set.require_weights()?;
    let measure = RandomMeasure::new((0..set.len()).collect::<Vec<_>>(), set.weights.clone())?;
    Ok(global_resample_indices(&measure, n, rng)?
        .into_iter()
        .map(|i| set.locations[i].clone())
        .collect())
}

/// Which member of `C` a cooperation candidate competes against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncumbentPairing {
    /// Slot `j` is held by the j-th HMC-chain location.
    #[default]
    ChainSet,
    /// Slot `j` is held by the j-th location of `C` in listed order.
    FirstN,
}

/// Weighted Gaussian kernel mixture `ψ(μ) = Σ_i w̄_i N(μ; μ_i*, s_i² I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMixture {
    kernels: Vec<GaussianProposal>,
    log_weights: Vec<f64>,
    weights: Vec<f64>,
}

impl KernelMixture {
    pub fn new(centers: &[Vec<f64>], scales: &[f64], weights: &[f64]) -> Result<Self> {
        if centers.len() != scales.len() || centers.len() != weights.len() || centers.is_empty() {
            return Err(Error::InvalidInput(
                "kernel centers, scales and weights differ in length".into(),
            ));
        }
        let kernels = centers
            .iter()
            .zip(scales)
            .map(|(c, &s)| GaussianProposal::new(c.clone(), s))
            .collect::<Result<_>>()?;
        Ok(Self {
            kernels,
            log_weights: weights.iter().map(|w| w.ln()).collect(),
            weights: weights.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let mut acc = LogSumExp::new();
        for (k, lw) in self.kernels.iter().zip(&self.log_weights) {
            if *lw > f64::NEG_INFINITY {
                acc.push(lw + k.log_pdf(x));
            }
        }
        acc.value()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let i = multinomial_draw(&self.weights, 1, rng)?[0];
        Ok(self.kernels[i].sample(rng))
    }
}

/// `log α` for a candidate against an incumbent in mixture cooperation,
/// i.e. `min(0, log[π(μ')ψ(μ*) / (π(μ*)ψ(μ'))])`.
pub fn mixture_log_acceptance(
    log_pi_candidate: f64,
    log_psi_candidate: f64,
    log_pi_incumbent: f64,
    log_psi_incumbent: f64,
) -> f64 {
    if log_pi_candidate == f64::NEG_INFINITY || log_pi_candidate.is_nan() {
        return f64::NEG_INFINITY;
    }
    if log_pi_incumbent == f64::NEG_INFINITY || log_pi_incumbent.is_nan() {
        return 0.0;
    }
    let r = (log_pi_candidate + log_psi_incumbent) - (log_pi_incumbent + log_psi_candidate);
    if r.is_nan() {
        f64::NEG_INFINITY
    } else {
        r.min(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureCooperation {
    pub locations: Vec<PreliminaryLocation>,
    pub accepted: usize,
}

/// Cooperation by weighted mixture model: for each of the N slots, draw a
/// candidate from ψ and accept it against the slot's incumbent with an
/// independence Metropolis step.
///
/// `kernel_scales[i]` is the kernel scale of location `i`. Counts N target
/// evaluations (the candidates) and `2N|C|` kernel evaluations.
pub fn cooperate_mixture<R: Rng + ?Sized>(
    set: &PreliminaryLocationSet,
    n: usize,
    kernel_scales: &[f64],
    target: &TargetDensity,
    pairing: IncumbentPairing,
    rng: &mut R,
    counters: &mut EvalCounters,
) -> Result<MixtureCooperation> {
    set.require_weights()?;
    let centers: Vec<Vec<f64>> = set.locations.iter().map(|l| l.x.clone()).collect();
    let psi = KernelMixture::new(&centers, kernel_scales, &set.weights)?;
    let chain_idx: Vec<usize> = (0..set.len())
        .filter(|&i| set.locations[i].provenance == Provenance::Chains)
        .collect();
    let mut locations = Vec::with_capacity(n);
    let mut accepted = 0;
    for j in 0..n {
        let inc = match pairing {
            IncumbentPairing::ChainSet if !chain_idx.is_empty() => chain_idx[j % chain_idx.len()],
            _ => j % set.len(),
        };
        let incumbent = &set.locations[inc];
        let candidate = psi.sample(rng)?;
        let log_pi_c = target.log_density(&candidate, counters)?;
        let log_psi_c = psi.log_density(&candidate);
        let log_psi_i = psi.log_density(&incumbent.x);
        counters.adaptation_proposal += 2 * psi.len() as u64;
        let log_alpha = mixture_log_acceptance(log_pi_c, log_psi_c, incumbent.log_pi, log_psi_i);
        let log_u = rng.random::<f64>().ln();
        if log_u < log_alpha {
            accepted += 1;
            locations.push(PreliminaryLocation {
                x: candidate,
                log_pi: log_pi_c,
                provenance: Provenance::Mixture,
                slot: j,
            });
        } else {
            locations.push(incumbent.clone());
        }
    }
    Ok(MixtureCooperation {
        locations,
        accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, RngFactory};
    use crate::targets::BenchmarkTarget;

    fn rng(i: u64) -> crate::rng::StreamRng {
        RngFactory::new(23).stream(Purpose::Test, i, 0)
    }

    fn loc(x: f64, log_pi: f64, provenance: Provenance, slot: usize) -> PreliminaryLocation {
        PreliminaryLocation {
            x: vec![x],
            log_pi,
            provenance,
            slot,
        }
    }

    fn ws(x: f64, log_w: f64, n: usize) -> WeightedSample {
        WeightedSample {
            x: vec![x],
            log_w,
            proposal_index: n,
            iteration: 1,
            cached_log_pi: 2.0 * x,
        }
    }

    #[test]
    fn p_with_one_sample_per_proposal_is_the_samples() {
        let s = vec![
            ws(1.0, -5.0, 0),
            ws(2.0, 7.0, 1),
            ws(3.0, f64::NEG_INFINITY, 2),
        ];
        let (p, degenerate) = preliminary_from_samples(&s, &mut rng(0)).unwrap();
        assert_eq!(
            p.iter().map(|l| l.x[0]).collect::<Vec<_>>(),
            vec![1.0, 2.0, 3.0]
        );
        assert_eq!(
            p.iter().map(|l| l.log_pi).collect::<Vec<_>>(),
            vec![2.0, 4.0, 6.0]
        );
        assert_eq!(degenerate, vec![2]);
    }

    #[test]
    fn single_location_gets_all_weight() {
        let pop = ProposalPopulation::new(vec![GaussianProposal::new(vec![0.0], 1.0).unwrap()], 1)
            .unwrap();
        let mut set =
            PreliminaryLocationSet::new(vec![loc(0.3, -1.0, Provenance::Samples, 0)], vec![]);
        let mut c = EvalCounters::new();
        assert!(!weight_preliminary(&mut set, &pop, &mut c).unwrap());
        assert_eq!(set.weights, vec![1.0]);
        assert_eq!(
            (c.adaptation_proposal, c.target_cache_hits, c.target_density),
            (1, 1, 0)
        );
    }

    #[test]
    fn two_locations_closed_form() {
        let pop = ProposalPopulation::new(
            vec![
                GaussianProposal::new(vec![0.0], 1.0).unwrap(),
                GaussianProposal::new(vec![3.0], 2.0).unwrap(),
            ],
            1,
        )
        .unwrap();
        let npdf = |x: f64, m: f64, s: f64| {
            (-(x - m).powi(2) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
        };
        let pis = [(0.5, 0.2f64), (2.0, 0.05)];
        let raw: Vec<f64> = pis
            .iter()
            .map(|&(x, p)| p / (0.5 * (npdf(x, 0.0, 1.0) + npdf(x, 3.0, 2.0))))
            .collect();
        let mut set = PreliminaryLocationSet::new(
            vec![loc(0.5, 0.2f64.ln(), Provenance::Samples, 0)],
            vec![loc(2.0, 0.05f64.ln(), Provenance::Chains, 0)],
        );
        weight_preliminary(&mut set, &pop, &mut EvalCounters::new()).unwrap();
        let total: f64 = raw.iter().sum();
        for i in 0..2 {
            assert!((set.dm_log_weights[i].exp() / raw[i] - 1.0).abs() < 1e-12);
            assert!((set.weights[i] - raw[i] / total).abs() < 1e-12);
        }
    }

    #[test]
    fn resample_point_mass_and_null_support() {
        let mut set = PreliminaryLocationSet::new(
            vec![
                loc(1.0, 0.0, Provenance::Samples, 0),
                loc(2.0, 0.0, Provenance::Samples, 1),
            ],
            vec![
                loc(3.0, 0.0, Provenance::Chains, 0),
                loc(4.0, 0.0, Provenance::Chains, 1),
            ],
        );
        set.weights = vec![0.0, 0.0, 1.0, 0.0];
        let out = cooperate_resample(&set, 2, &mut rng(1)).unwrap();
        assert!(out.iter().all(|l| l.x == vec![3.0]));
        set.weights = vec![0.5, 0.0, 0.5, 0.0];
        for i in 0..50 {
            let out = cooperate_resample(&set, 2, &mut rng(i)).unwrap();
            assert!(out.iter().all(|l| l.x != vec![2.0] && l.x != vec![4.0]));
        }
    }

    #[test]
    fn unweighted_set_is_rejected() {
        let set = PreliminaryLocationSet::new(vec![loc(1.0, 0.0, Provenance::Samples, 0)], vec![]);
        assert!(cooperate_resample(&set, 1, &mut rng(0)).is_err());
    }

    #[test]
    fn mixture_acceptance_bounds() {
        assert_eq!(mixture_log_acceptance(-1.0, -2.0, -1.0, -2.0), 0.0);
        assert_eq!(mixture_log_acceptance(0.0, -3.0, -1.0, -2.0), 0.0);
        assert!((mixture_log_acceptance(-2.0, -1.0, -1.0, -1.0) + 1.0).abs() < 1e-15);
        assert_eq!(
            mixture_log_acceptance(-1.0, -1.0, f64::NEG_INFINITY, -1.0),
            0.0
        );
        assert_eq!(
            mixture_log_acceptance(f64::NEG_INFINITY, -1.0, -1.0, -1.0),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn mixture_counts_and_incumbents() {
        let target = BenchmarkTarget::Gaussian {
            dim: 1,
            mean: 0.0,
            sd: 1.0,
        }
        .build()
        .unwrap();
        let mut set = PreliminaryLocationSet::new(
            vec![
                loc(5.0, -12.5, Provenance::Samples, 0),
                loc(6.0, -18.0, Provenance::Samples, 1),
            ],
            vec![
                loc(0.1, -0.005, Provenance::Chains, 0),
                loc(-0.2, -0.02, Provenance::Chains, 1),
            ],
        );
        set.weights = vec![0.25; 4];
        let mut c = EvalCounters::new();
        let out = cooperate_mixture(
            &set,
            2,
            &[1.0; 4],
            &target,
            IncumbentPairing::ChainSet,
            &mut rng(2),
            &mut c,
        )
        .unwrap();
        assert_eq!(out.locations.len(), 2);
        assert_eq!(c.target_density, 2);
        assert_eq!(c.adaptation_proposal, 2 * 2 * 4);
        for (j, l) in out.locations.iter().enumerate() {
            if l.provenance != Provenance::Mixture {
                assert_eq!(l, &set.locations[2 + j]);
            }
        }
    }
}
