use crate::error::{Error, Result};
use crate::proposals::sample_population;
use crate::resampling::{local_resample, multinomial_draw};
use crate::rng::Purpose;
use crate::targets::TargetDensity;
use crate::weighting::{compute_weights, normalize, NormScope, WeightScheme};

use super::{Algorithm, RunOutput, RunState, SamplerConfig};

/// Population Monte Carlo with resampled locations.
///
/// `pmc_standard` weights each draw by its own proposal; the other variants
/// use DM weights. `lr_pmc` picks each new location among that proposal's own
/// draws, the rest resample N locations from all KN draws at once.
pub fn run_pmc_variant(config: &SamplerConfig, target: &TargetDensity) -> Result<RunOutput> {
    let scheme = match config.algorithm {
        Algorithm::PmcStandard => WeightScheme::Standard,
        Algorithm::DmPmc | Algorithm::LrPmc | Algorithm::GrPmc => WeightScheme::Dm,
        other => return Err(Error::InvalidSpec(format!("{other} is not a PMC variant"))),
    };
    let mut st = RunState::new(config, target)?;
    let mut pop = st.initial_population(target.dim())?;

    for t in 1..=config.t {
        let it = t as u64;
        let draws = sample_population(
            &pop,
            config.k,
            &mut st.rngs.stream(Purpose::Sampling, it, 0),
        )?;
        let samples = compute_weights(&draws, &pop, target, scheme, &mut st.counters)?;

        let next: Option<Vec<Vec<f64>>> = if config.algorithm == Algorithm::LrPmc {
            let lr = local_resample(&samples, &mut st.rngs.stream(Purpose::LocalResample, it, 0))?;
            st.diagnostics.degenerate_local_groups += lr.degenerate_groups.len();
            Some(lr.locations.into_iter().map(|l| l.x).collect())
        } else {
            let w = normalize(&samples, NormScope::Global);
            if w.degenerate_groups.is_empty() {
                let mut rng = st.rngs.stream(Purpose::GlobalResample, it, 0);
                let idx = multinomial_draw(&w.weights, config.n, &mut rng)?;
                Some(idx.into_iter().map(|i| samples[i].x.clone()).collect())
            } else {
                None
            }
        };
        st.absorb(t, samples);

        match next {
            Some(locs) => pop = pop.relocated(locs)?,
            None => {
                st.diagnostics.skipped_adaptations += 1;
                pop.iteration += 1;
            }
        }
        st.end_iteration(&pop.locations());
    }
    Ok(st.finish())
}
