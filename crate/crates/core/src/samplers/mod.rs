//! Full sampler runs: HPMC and the baseline adaptive importance samplers,
//! all under instrumented evaluation counters.

mod amis;
mod hpmc;
mod layered;
mod pmc;

use serde::{Deserialize, Serialize};

use crate::adaptation::IncumbentPairing;
use crate::counters::EvalCounters;
use crate::error::{Error, Result};
use crate::hmc::HmcParams;
use crate::proposals::{init_population, ProposalPopulation};
use crate::rng::{Purpose, RngFactory};
use crate::targets::TargetDensity;
use crate::weighting::{EstimateAccumulator, WeightedSample};

pub use amis::run_amis;
pub use hpmc::run_hpmc;
pub use layered::run_layered;
pub use pmc::run_pmc_variant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    HpmcResample,
    HpmcMixture,
    PmcStandard,
    DmPmc,
    LrPmc,
    GrPmc,
    Amis,
    PiMais,
    Hais,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Self::HpmcResample,
        Self::HpmcMixture,
        Self::PmcStandard,
        Self::DmPmc,
        Self::LrPmc,
        Self::GrPmc,
        Self::Amis,
        Self::PiMais,
        Self::Hais,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Self::HpmcResample => "hpmc_resample",
            Self::HpmcMixture => "hpmc_mixture",
            Self::PmcStandard => "pmc_standard",
            Self::DmPmc => "dm_pmc",
            Self::LrPmc => "lr_pmc",
            Self::GrPmc => "gr_pmc",
            Self::Amis => "amis",
            Self::PiMais => "pi_mais",
            Self::Hais => "hais",
        }
    }

    pub fn uses_dm_weights(&self) -> bool {
        !matches!(self, Self::PmcStandard)
    }

    pub fn uses_hmc(&self) -> bool {
        matches!(self, Self::HpmcResample | Self::HpmcMixture | Self::Hais)
    }

    /// Target evaluations per iteration charged by the budget equalizer.
    pub fn cost_per_iteration(&self, n: usize, k: usize) -> u64 {
        let (n, k) = (n as u64, k as u64);
        match self {
            Self::PmcStandard | Self::DmPmc | Self::LrPmc | Self::GrPmc => k * n,
            Self::Amis => k,
            Self::PiMais | Self::Hais => k * n + n,
            Self::HpmcMixture => k * n + 3 * n,
            Self::HpmcResample => k * n + 2 * n,
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown algorithm '{s}'")))
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// Where each HPMC chain starts its transition at iteration t.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainStart {
    /// Chain n continues from its own previous state.
    #[default]
    Persistent,
    /// Chain n restarts from the proposal location μ_n of iteration t.
    Location,
}

/// Iterations `T` that fit into `budget` target evaluations.
pub fn budget_iterations(algorithm: Algorithm, n: usize, k: usize, budget: u64) -> Result<usize> {
    let per = algorithm.cost_per_iteration(n, k);
    if per == 0 || budget < per {
        return Err(Error::InvalidBudget {
            budget,
            per_iteration: per,
        });
    }
    Ok((budget / per) as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub algorithm: Algorithm,
    /// Number of proposals.
    pub n: usize,
    /// Samples per proposal and iteration.
    pub k: usize,
    /// Iterations.
    pub t: usize,
    /// Isotropic proposal scale.
    pub sigma: f64,
    pub init_low: f64,
    pub init_high: f64,
    pub hmc: HmcParams,
    /// Random-walk scale of the PI-MAIS upper layer.
    pub mh_scale: f64,
    pub seed: u64,
    pub chain_start: ChainStart,
    pub pairing: IncumbentPairing,
    /// Leading iterations whose samples are left out of the estimates.
    pub burn_in_iterations: usize,
    /// HPMC only: skip the locally resampled set P.
    pub skip_sample_locations: bool,
    /// HPMC only: skip cooperation and move proposals to the chain positions.
    pub skip_cooperation: bool,
    pub record_locations: bool,
    pub archive_samples: bool,
}

impl SamplerConfig {
    pub fn new(algorithm: Algorithm, n: usize, k: usize, t: usize, sigma: f64) -> Self {
        Self {
            algorithm,
            n,
            k,
            t,
            sigma,
            init_low: -4.0,
            init_high: 4.0,
            hmc: HmcParams {
                step_size: 0.1,
                n_leapfrog: 50,
            },
            mh_scale: 5.0,
            seed: 0,
            chain_start: ChainStart::default(),
            pairing: IncumbentPairing::default(),
            burn_in_iterations: 0,
            skip_sample_locations: false,
            skip_cooperation: false,
            record_locations: false,
            archive_samples: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 {
            return Err(Error::InvalidSpec("N and K must be at least 1".into()));
        }
        if self.t == 0 {
            return Err(Error::InvalidSpec("T must be at least 1".into()));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "proposal scale must be positive, got {}",
                self.sigma
            )));
        }
        if !(self.init_low <= self.init_high) {
            return Err(Error::InvalidSpec("initialization box is empty".into()));
        }
        if self.algorithm.uses_hmc() {
            self.hmc.validate()?;
        }
        if self.algorithm == Algorithm::PiMais && !(self.mh_scale > 0.0) {
            return Err(Error::InvalidSpec(
                "PI-MAIS needs a positive random-walk scale".into(),
            ));
        }
        if self.algorithm == Algorithm::Amis && self.n != 1 {
            return Err(Error::InvalidSpec(
                "AMIS runs a single proposal (N = 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Iterations whose global sample weights were all zero.
    pub degenerate_weight_iterations: usize,
    /// Proposal groups that fell back to uniform local weights.
    pub degenerate_local_groups: usize,
    /// Iterations where the population was kept because adaptation had no usable weights.
    pub skipped_adaptations: usize,
    pub hmc_proposed: usize,
    pub hmc_accepted: usize,
    pub hmc_divergences: usize,
    pub mh_proposed: usize,
    pub mh_accepted: usize,
    pub cooperation_proposed: usize,
    pub cooperation_accepted: usize,
}

impl Diagnostics {
    pub fn hmc_acceptance_rate(&self) -> Option<f64> {
        (self.hmc_proposed > 0).then(|| self.hmc_accepted as f64 / self.hmc_proposed as f64)
    }
}

/// Estimates after one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub mean: Option<Vec<f64>>,
    pub log_z: f64,
    /// Cumulative counters at the end of the iteration.
    pub counters: EvalCounters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub algorithm: Algorithm,
    pub n: usize,
    pub k: usize,
    pub t: usize,
    /// Self-normalized estimate of the target mean; `None` if every weight was zero.
    pub mean: Option<Vec<f64>>,
    /// `log Ẑ` with the `1/N` mixture factor in the DM denominator.
    pub log_z: f64,
    pub counters: EvalCounters,
    pub diagnostics: Diagnostics,
    pub trace: Vec<IterationSummary>,
    /// Proposal locations after the adaptation of each iteration (when recorded).
    pub locations: Vec<Vec<Vec<f64>>>,
    /// Every weighted sample (when archived).
    pub samples: Vec<WeightedSample>,
}

impl RunOutput {
    pub fn z(&self) -> f64 {
        self.log_z.exp()
    }

    /// `Ẑ` under the convention that omits the `1/N` factor from the DM
    /// denominator; differs from [`RunOutput::z`] by the factor N.
    pub fn z_without_mixture_factor(&self) -> f64 {
        if self.algorithm.uses_dm_weights() && self.algorithm != Algorithm::Amis {
            (self.log_z - (self.n as f64).ln()).exp()
        } else {
            self.z()
        }
    }
}

/// Dispatches to the runner for `config.algorithm`.
pub fn run(config: &SamplerConfig, target: &TargetDensity) -> Result<RunOutput> {
    match config.algorithm {
        Algorithm::HpmcResample | Algorithm::HpmcMixture => run_hpmc(config, target),
        Algorithm::PmcStandard | Algorithm::DmPmc | Algorithm::LrPmc | Algorithm::GrPmc => {
            run_pmc_variant(config, target)
        }
        Algorithm::Amis => run_amis(config, target),
        Algorithm::PiMais | Algorithm::Hais => run_layered(config, target),
    }
}

/// Shared bookkeeping of the population-based runners.
struct RunState<'a> {
    config: &'a SamplerConfig,
    rngs: RngFactory,
    counters: EvalCounters,
    diagnostics: Diagnostics,
    acc: EstimateAccumulator,
    trace: Vec<IterationSummary>,
    locations: Vec<Vec<Vec<f64>>>,
    samples: Vec<WeightedSample>,
}

impl<'a> RunState<'a> {
    fn new(config: &'a SamplerConfig, target: &TargetDensity) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            rngs: RngFactory::new(config.seed),
            counters: EvalCounters::new(),
            diagnostics: Diagnostics::default(),
            acc: EstimateAccumulator::new(target.dim()),
            trace: Vec::with_capacity(config.t),
            locations: Vec::new(),
            samples: Vec::new(),
        })
    }

    fn initial_population(&self, dim: usize) -> Result<ProposalPopulation> {
        let c = self.config;
        let mut rng = self.rngs.stream(Purpose::Init, 0, 0);
        init_population(c.n, dim, c.init_low, c.init_high, c.sigma, &mut rng)
    }

    fn absorb(&mut self, iteration: usize, samples: Vec<WeightedSample>) {
        if iteration > self.config.burn_in_iterations {
            self.acc.absorb_all(&samples);
        }
        if samples
            .iter()
            .all(|s| s.log_w == f64::NEG_INFINITY || s.log_w.is_nan())
        {
            self.diagnostics.degenerate_weight_iterations += 1;
        }
        if self.config.archive_samples {
            self.samples.extend(samples);
        }
    }

    fn end_iteration(&mut self, locations: &[Vec<f64>]) {
        self.trace.push(IterationSummary {
            mean: self.acc.snis_estimate().ok(),
            log_z: self.acc.log_z_estimate().unwrap_or(f64::NEG_INFINITY),
            counters: self.counters,
        });
        if self.config.record_locations {
            self.locations.push(locations.to_vec());
        }
    }

    fn finish(self) -> RunOutput {
        let c = self.config;
        RunOutput {
            algorithm: c.algorithm,
            n: c.n,
            k: c.k,
            t: c.t,
            mean: self.acc.snis_estimate().ok(),
            log_z: self.acc.log_z_estimate().unwrap_or(f64::NEG_INFINITY),
            counters: self.counters,
            diagnostics: self.diagnostics,
            trace: self.trace,
            locations: self.locations,
            samples: self.samples,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_formulas() {
        assert_eq!(
            budget_iterations(Algorithm::DmPmc, 100, 5, 200_000).unwrap(),
            400
        );
        assert_eq!(
            budget_iterations(Algorithm::HpmcResample, 100, 5, 200_000).unwrap(),
            285
        );
        assert_eq!(
            budget_iterations(Algorithm::PmcStandard, 100, 1, 200_000).unwrap(),
            2000
        );
        assert_eq!(
            budget_iterations(Algorithm::HpmcMixture, 100, 5, 200_000).unwrap(),
            250
        );
        assert_eq!(
            budget_iterations(Algorithm::Hais, 250, 2, 200_000).unwrap(),
            266
        );
        assert_eq!(
            budget_iterations(Algorithm::Amis, 1, 500, 200_000).unwrap(),
            400
        );
        assert_eq!(
            budget_iterations(Algorithm::DmPmc, 100, 5, 499),
            Err(Error::InvalidBudget {
                budget: 499,
                per_iteration: 500
            })
        );
    }

    #[test]
    fn algorithm_ids_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.id().parse::<Algorithm>().unwrap(), a);
        }
        assert!("nope".parse::<Algorithm>().is_err());
    }
}
