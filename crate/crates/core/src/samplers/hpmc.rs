use crate::adaptation::{
    cooperate_mixture, cooperate_resample, preliminary_from_locations, preliminary_from_samples,
    weight_preliminary, PreliminaryLocation, PreliminaryLocationSet, Provenance,
};
use crate::error::{Error, Result};
use crate::hmc::ChainState;
use crate::proposals::sample_population;
use crate::rng::Purpose;
use crate::targets::TargetDensity;
use crate::weighting::{compute_weights, WeightScheme};

use super::{Algorithm, ChainStart, RunOutput, RunState, SamplerConfig};

/// Hybrid population Monte Carlo.
///
/// Per iteration: K draws per proposal, DM weights, then the two preliminary
/// sets (P by local resampling, Q by one HMC transition per chain) and
/// cooperation over `C = P ∪ Q` by global resampling or by the weighted
/// kernel mixture. Scales stay fixed; only locations move.
pub fn run_hpmc(config: &SamplerConfig, target: &TargetDensity) -> Result<RunOutput> {
    if !matches!(
        config.algorithm,
        Algorithm::HpmcResample | Algorithm::HpmcMixture
    ) {
        return Err(Error::InvalidSpec(format!(
            "{} is not an HPMC variant",
            config.algorithm
        )));
    }
    let mut st = RunState::new(config, target)?;
    let mut pop = st.initial_population(target.dim())?;
    let n = config.n;

    let mut chains = pop
        .locations()
        .into_iter()
        .map(|x| ChainState::new(x, target, &mut st.counters))
        .collect::<Result<Vec<_>>>()?;

    for t in 1..=config.t {
        let it = t as u64;
        let draws = sample_population(
            &pop,
            config.k,
            &mut st.rngs.stream(Purpose::Sampling, it, 0),
        )?;
        let samples = compute_weights(&draws, &pop, target, WeightScheme::Dm, &mut st.counters)?;

        let p = if config.skip_sample_locations {
            Vec::new()
        } else {
            let (p, degenerate) = preliminary_from_samples(
                &samples,
                &mut st.rngs.stream(Purpose::LocalResample, it, 0),
            )?;
            st.diagnostics.degenerate_local_groups += degenerate.len();
            p
        };
        st.absorb(t, samples);

        let rngs = st.rngs;
        let advance = preliminary_from_locations(
            &mut chains,
            target,
            &config.hmc,
            |c| rngs.stream(Purpose::Hmc, it, c as u64),
            &mut st.counters,
        )?;
        st.diagnostics.hmc_proposed += n;
        st.diagnostics.hmc_accepted += advance.accepted;
        st.diagnostics.hmc_divergences += advance.diverged;

        let next: Option<Vec<PreliminaryLocation>> = if config.skip_cooperation {
            Some(advance.locations)
        } else {
            let mut set = PreliminaryLocationSet::new(p, advance.locations);
            if weight_preliminary(&mut set, &pop, &mut st.counters)? {
                None
            } else {
                let mut rng = st.rngs.stream(Purpose::Cooperation, it, 0);
                Some(match config.algorithm {
                    Algorithm::HpmcResample => cooperate_resample(&set, n, &mut rng)?,
                    _ => {
                        let scales: Vec<f64> = set
                            .locations
                            .iter()
                            .map(|l| pop.proposals[l.slot].scale)
                            .collect();
                        let out = cooperate_mixture(
                            &set,
                            n,
                            &scales,
                            target,
                            config.pairing,
                            &mut rng,
                            &mut st.counters,
                        )?;
                        st.diagnostics.cooperation_proposed += n;
                        st.diagnostics.cooperation_accepted += out.accepted;
                        out.locations
                    }
                })
            }
        };

        match next {
            Some(next) => {
                if config.chain_start == ChainStart::Location {
                    chains = next
                        .iter()
                        .map(|l| match l.provenance {
                            Provenance::Chains => Ok(chains[l.slot].clone()),
                            _ => ChainState::with_cached_log_pi(
                                l.x.clone(),
                                l.log_pi,
                                target,
                                &mut st.counters,
                            ),
                        })
                        .collect::<Result<_>>()?;
                }
                pop = pop.relocated(next.into_iter().map(|l| l.x).collect())?;
            }
            None => {
                st.diagnostics.skipped_adaptations += 1;
                pop.iteration += 1;
            }
        }
        st.end_iteration(&pop.locations());
    }
    Ok(st.finish())
}
