//! Counter audit against the complexity formulas of each algorithm.

use hpmc::{Algorithm, EvalCounters, RunOutput};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::experiment::run_replicates;
use crate::spec::{ExperimentSpec, Variant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub variant: String,
    pub algorithm: Algorithm,
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub measured: EvalCounters,
    /// `KN²T` for DM weights, `KNT` for standard weights, `KT²` for AMIS.
    pub expected_proposal: u64,
    pub proposal_ok: bool,
    /// Fresh density calls the caching policy predicts.
    pub expected_target_fresh: u64,
    pub target_fresh_ok: bool,
    /// Budget-equalizer charge: per-iteration cost times T.
    pub budget_target: u64,
    /// Fresh calls plus cache hits at preliminary locations.
    pub table_equivalent_target: u64,
    /// `table_equivalent_target - budget_target`.
    pub residual: i64,
    pub note: String,
}

impl AuditEntry {
    pub fn passed(&self) -> bool {
        self.proposal_ok && self.target_fresh_ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(AuditEntry::passed)
    }

    /// One line per variant.
    pub fn lines(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| {
                format!(
                    "{} {} (N={}, K={}, T={}): proposal {} / expected {}; target fresh {} / expected {}; \
                     budget {} vs fresh+cached {} (residual {}){}",
                    if e.passed() { "PASS" } else { "FAIL" },
                    e.variant,
                    e.n,
                    e.k,
                    e.t,
                    e.measured.proposal,
                    e.expected_proposal,
                    e.measured.target_density,
                    e.expected_target_fresh,
                    e.budget_target,
                    e.table_equivalent_target,
                    e.residual,
                    if e.note.is_empty() { String::new() } else { format!("; {}", e.note) },
                )
            })
            .collect()
    }
}

/// Expected sample-weighting proposal evaluations over T iterations.
pub fn expected_proposal_evals(algorithm: Algorithm, n: usize, k: usize, t: usize) -> u64 {
    let (n, k, t) = (n as u64, k as u64, t as u64);
    match algorithm {
        Algorithm::PmcStandard => k * n * t,
        Algorithm::Amis => k * t * t,
        _ => k * n * n * t,
    }
}

/// Fresh target-density calls under the caching policy: weights reuse the
/// sampling-step value, HMC reuses the value from its last gradient call,
/// preliminary locations carry their cached value. Chains cost one density
/// call each at start-up.
pub fn expected_target_fresh(algorithm: Algorithm, n: usize, k: usize, t: usize) -> u64 {
    let (n, k, t) = (n as u64, k as u64, t as u64);
    match algorithm {
        Algorithm::PmcStandard | Algorithm::DmPmc | Algorithm::LrPmc | Algorithm::GrPmc => {
            k * n * t
        }
        Algorithm::Amis => k * t,
        Algorithm::PiMais | Algorithm::Hais | Algorithm::HpmcResample => n + (k * n + n) * t,
        Algorithm::HpmcMixture => n + (k * n + 2 * n) * t,
    }
}

fn note(algorithm: Algorithm, residual: i64) -> String {
    if residual == 0 {
        return String::new();
    }
    match algorithm {
        Algorithm::HpmcResample | Algorithm::HpmcMixture => format!(
            "caching residual {residual}: chain start-up plus cached log-densities at the 2N preliminary locations"
        ),
        _ => format!("residual {residual}: one density call per chain at start-up"),
    }
}

/// Audit of already completed runs of `variant`.
pub fn verify_counters(variant: &Variant, outputs: &[RunOutput]) -> Vec<AuditEntry> {
    outputs
        .iter()
        .map(|o| {
            let expected_proposal = expected_proposal_evals(o.algorithm, o.n, o.k, o.t);
            let expected_fresh = expected_target_fresh(o.algorithm, o.n, o.k, o.t);
            let budget = o.algorithm.cost_per_iteration(o.n, o.k) * o.t as u64;
            let equivalent = o.counters.target_density + o.counters.target_cache_hits;
            let residual = equivalent as i64 - budget as i64;
            AuditEntry {
                variant: variant.name.clone(),
                algorithm: o.algorithm,
                n: o.n,
                k: o.k,
                t: o.t,
                measured: o.counters,
                expected_proposal,
                proposal_ok: o.counters.proposal == expected_proposal,
                expected_target_fresh: expected_fresh,
                target_fresh_ok: o.counters.target_density == expected_fresh,
                budget_target: budget,
                table_equivalent_target: equivalent,
                residual,
                note: note(o.algorithm, residual),
            }
        })
        .collect()
}

/// One replicate per variant (seeded like replicate 0 of `run`), audited.
pub fn audit_experiment(spec: &ExperimentSpec) -> Result<AuditReport> {
    spec.validate()?;
    let target = spec.target.build()?;
    let mut entries = Vec::new();
    for v in &spec.variants {
        let t = v.iterations(spec.budget)?;
        let outputs = run_replicates(v, &target, t, spec.seed_base, 1, false)?;
        entries.extend(verify_counters(v, &outputs));
    }
    Ok(AuditReport { entries })
}
