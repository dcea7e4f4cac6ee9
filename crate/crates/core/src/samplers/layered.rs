use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::hmc::{hmc_step, ChainState};
use crate::proposals::sample_population;
use crate::rng::Purpose;
use crate::targets::TargetDensity;
use crate::weighting::{compute_weights, WeightScheme};

use super::{Algorithm, RunOutput, RunState, SamplerConfig};

/// Two-layer samplers: an upper layer of N Markov chains supplies the
/// proposal locations, the lower layer draws and DM-weights K samples per
/// proposal. `hais` moves the chains with one HMC transition per iteration,
/// `pi_mais` with one random-walk Metropolis step of scale λ.
pub fn run_layered(config: &SamplerConfig, target: &TargetDensity) -> Result<RunOutput> {
    if !matches!(config.algorithm, Algorithm::Hais | Algorithm::PiMais) {
        return Err(Error::InvalidSpec(format!(
            "{} is not a layered sampler",
            config.algorithm
        )));
    }
    let mut st = RunState::new(config, target)?;
    let mut pop = st.initial_population(target.dim())?;

    let mut chains = pop
        .locations()
        .into_iter()
        .map(|x| {
            if config.algorithm == Algorithm::Hais {
                ChainState::new(x, target, &mut st.counters)
            } else {
                let log_pi = target.log_density(&x, &mut st.counters)?;
                Ok(ChainState {
                    position: x,
                    cached_log_pi: log_pi,
                    cached_grad: Vec::new(),
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;

    for t in 1..=config.t {
        let it = t as u64;
        let draws = sample_population(
            &pop,
            config.k,
            &mut st.rngs.stream(Purpose::Sampling, it, 0),
        )?;
        let samples = compute_weights(&draws, &pop, target, WeightScheme::Dm, &mut st.counters)?;
        st.absorb(t, samples);

        for (c, chain) in chains.iter_mut().enumerate() {
            match config.algorithm {
                Algorithm::Hais => {
                    let mut rng = st.rngs.stream(Purpose::Hmc, it, c as u64);
                    let step = hmc_step(chain, target, &config.hmc, &mut rng, &mut st.counters)?;
                    st.diagnostics.hmc_proposed += 1;
                    st.diagnostics.hmc_accepted += usize::from(step.accepted);
                    st.diagnostics.hmc_divergences += usize::from(step.diverged);
                    *chain = step.state;
                }
                _ => {
                    let mut rng = st.rngs.stream(Purpose::Metropolis, it, c as u64);
                    if rw_metropolis_step(
                        chain,
                        target,
                        config.mh_scale,
                        &mut rng,
                        &mut st.counters,
                    )? {
                        st.diagnostics.mh_accepted += 1;
                    }
                    st.diagnostics.mh_proposed += 1;
                }
            }
        }
        pop = pop.relocated(chains.iter().map(|c| c.position.clone()).collect())?;
        st.end_iteration(&pop.locations());
    }
    Ok(st.finish())
}

/// One Gaussian random-walk Metropolis step of scale `scale`; one counted
/// target evaluation. Returns whether the move was accepted.
pub(crate) fn rw_metropolis_step<R: Rng + ?Sized>(
    chain: &mut ChainState,
    target: &TargetDensity,
    scale: f64,
    rng: &mut R,
    counters: &mut crate::counters::EvalCounters,
) -> Result<bool> {
    let candidate: Vec<f64> = chain
        .position
        .iter()
        .map(|m| {
            let z: f64 = StandardNormal.sample(rng);
            m + scale * z
        })
        .collect();
    let log_pi = target.log_density(&candidate, counters)?;
    let log_u = rng.random::<f64>().ln();
    let accept = log_pi > f64::NEG_INFINITY
        && (chain.cached_log_pi == f64::NEG_INFINITY || log_u < log_pi - chain.cached_log_pi);
    if accept {
        chain.position = candidate;
        chain.cached_log_pi = log_pi;
    }
    Ok(accept)
}
