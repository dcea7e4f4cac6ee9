use crate::error::{Error, Result};
use crate::math::{squared_distance, LogSumExp};
use crate::proposals::{sample_population, GaussianProposal, ProposalPopulation};
use crate::rng::Purpose;
use crate::targets::TargetDensity;
use crate::weighting::{log_weight, normalize_or_uniform, EstimateAccumulator, WeightedSample};

use super::{Algorithm, RunOutput, RunState, SamplerConfig};

struct Stored {
    x: Vec<f64>,
    log_pi: f64,
    /// `log Σ_τ q_τ(x)` over every proposal used so far.
    log_q_sum: LogSumExp,
    iteration: usize,
}

/// Adaptive multiple importance sampling with a single isotropic proposal.
///
/// Every past draw is reweighted against the temporal mixture
/// `(1/t) Σ_τ q_τ` of all proposals used so far, and the next proposal's
/// location and scale are matched to the weighted moments of all draws.
/// Each iteration evaluates the K new draws against all t proposals and the
/// old draws against the newest one, `KT²` proposal evaluations in total.
pub fn run_amis(config: &SamplerConfig, target: &TargetDensity) -> Result<RunOutput> {
    if config.algorithm != Algorithm::Amis {
        return Err(Error::InvalidSpec(format!(
            "{} is not AMIS",
            config.algorithm
        )));
    }
    let mut st = RunState::new(config, target)?;
    let dim = target.dim();
    let mut pop = st.initial_population(dim)?;
    let mut history: Vec<GaussianProposal> = Vec::new();
    let mut stored: Vec<Stored> = Vec::new();

    for t in 1..=config.t {
        let it = t as u64;
        let q = pop.proposals[0].clone();
        for s in stored.iter_mut() {
            s.log_q_sum.push(q.log_pdf(&s.x));
        }
        st.counters.proposal += stored.len() as u64;
        history.push(q.clone());

        let draws = sample_population(
            &pop,
            config.k,
            &mut st.rngs.stream(Purpose::Sampling, it, 0),
        )?;
        for d in draws {
            let log_pi = target.log_density(&d.x, &mut st.counters)?;
            let mut log_q_sum = LogSumExp::new();
            for h in &history {
                log_q_sum.push(h.log_pdf(&d.x));
            }
            st.counters.proposal += history.len() as u64;
            stored.push(Stored {
                x: d.x,
                log_pi,
                log_q_sum,
                iteration: t,
            });
        }

        let log_t = (t as f64).ln();
        let log_w: Vec<f64> = stored
            .iter()
            .map(|s| log_weight(s.log_pi, s.log_q_sum.value() - log_t))
            .collect();
        let (w, degenerate) = normalize_or_uniform(&log_w);
        if degenerate {
            st.diagnostics.degenerate_weight_iterations += 1;
        }

        let mut acc = EstimateAccumulator::new(dim);
        for (s, lw) in stored.iter().zip(&log_w) {
            if s.iteration > config.burn_in_iterations {
                acc.absorb(&s.x, *lw);
            }
        }
        st.acc = acc;

        if degenerate {
            st.diagnostics.skipped_adaptations += 1;
            pop.iteration += 1;
        } else {
            let mut mean = vec![0.0; dim];
            for (s, wi) in stored.iter().zip(&w) {
                for (m, xi) in mean.iter_mut().zip(&s.x) {
                    *m += wi * xi;
                }
            }
            let var: f64 = stored
                .iter()
                .zip(&w)
                .map(|(s, wi)| wi * squared_distance(&s.x, &mean))
                .sum::<f64>()
                / dim as f64;
            let scale = if var > 0.0 && var.is_finite() {
                var.sqrt()
            } else {
                q.scale
            };
            pop = ProposalPopulation::new(vec![GaussianProposal::new(mean, scale)?], t + 1)?;
        }
        st.end_iteration(&pop.locations());
    }

    if config.archive_samples {
        let log_t = (config.t as f64).ln();
        st.samples = stored
            .iter()
            .map(|s| WeightedSample {
                x: s.x.clone(),
                log_w: log_weight(s.log_pi, s.log_q_sum.value() - log_t),
                proposal_index: 0,
                iteration: s.iteration,
                cached_log_pi: s.log_pi,
            })
            .collect();
    }
    Ok(st.finish())
}
