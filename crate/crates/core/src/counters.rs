//! Evaluation counters owned by a sampler context.
//!
//! Targets and proposals are immutable and never count anything themselves;
//! every counted call takes a `&mut EvalCounters` from its caller.

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounters {
    /// Fresh calls of the target log-density.
    pub target_density: u64,
    /// Fresh calls of the target gradient (never part of the target-evaluation audit).
    pub target_gradient: u64,
    /// Reuses of a cached log-density at a preliminary location.
    pub target_cache_hits: u64,
    /// Single-proposal pdf evaluations made while weighting the drawn samples.
    pub proposal: u64,
    /// Single-proposal pdf or kernel evaluations made during adaptation
    /// (weights of preliminary locations, cooperation mixture densities).
    pub adaptation_proposal: u64,
}

impl EvalCounters {
    pub fn new() -> Self {
        Self::default()
    }
}

impl AddAssign for EvalCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.target_density += rhs.target_density;
        self.target_gradient += rhs.target_gradient;
        self.target_cache_hits += rhs.target_cache_hits;
        self.proposal += rhs.proposal;
        self.adaptation_proposal += rhs.adaptation_proposal;
    }
}

impl Add for EvalCounters {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}
