//! Hybrid population Monte Carlo (HPMC) and baseline adaptive importance
//! samplers.
//!
//! A population of N isotropic Gaussian proposals is adapted over T
//! iterations. Each iteration draws K samples per proposal, weights them with
//! deterministic-mixture (DM) weights, and moves the proposal locations using
//! two sets of preliminary locations: one resampled locally from the weighted
//! samples, one produced by an HMC transition per proposal. A cooperation step
//! over both sets picks the next N locations.
//!
//! ```
//! use hpmc::{run, Algorithm, BenchmarkTarget, SamplerConfig};
//!
//! let target = BenchmarkTarget::Gaussian { dim: 2, mean: 1.0, sd: 1.0 }.build().unwrap();
//! let mut config = SamplerConfig::new(Algorithm::HpmcResample, 10, 5, 20, 1.0);
//! config.hmc.step_size = 0.2;
//! config.hmc.n_leapfrog = 10;
//! let out = run(&config, &target).unwrap();
//! let mean = out.mean.unwrap();
//! assert!((mean[0] - 1.0).abs() < 0.3);
//! ```

pub mod adaptation;
pub mod counters;
pub mod error;
pub mod hmc;
pub mod math;
pub mod proposals;
pub mod resampling;
pub mod rng;
pub mod samplers;
pub mod targets;
pub mod weighting;

pub use counters::EvalCounters;
pub use error::{Error, Result};
pub use hmc::{ChainState, HmcParams};
pub use proposals::{GaussianProposal, ProposalPopulation};
pub use rng::RngFactory;
pub use samplers::{budget_iterations, run, Algorithm, ChainStart, RunOutput, SamplerConfig};
pub use targets::{BananaSpec, BenchmarkTarget, GaussianMixtureSpec, TargetDensity};
pub use weighting::{EstimateAccumulator, WeightScheme, WeightedSample};
