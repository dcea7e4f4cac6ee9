//! Isotropic Gaussian proposals and populations of them.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::counters::EvalCounters;
use crate::error::{check_dim, Error, Result};
use crate::math::{squared_distance, LogSumExp, LN_2PI};

/// `q(x) = N(x; location, scale²·I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianProposal {
    pub location: Vec<f64>,
    pub scale: f64,
}

impl GaussianProposal {
    pub fn new(location: Vec<f64>, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "proposal scale must be positive, got {scale}"
            )));
        }
        if location.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec(
                "proposal location must be finite".into(),
            ));
        }
        Ok(Self { location, scale })
    }

    pub fn dim(&self) -> usize {
        self.location.len()
    }

    /// Normalized log-density; not counted.
    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        let d = self.location.len() as f64;
        let s2 = self.scale * self.scale;
        -0.5 * (d * (LN_2PI + s2.ln()) + squared_distance(x, &self.location) / s2)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.location
            .iter()
            .map(|m| {
                let z: f64 = StandardNormal.sample(rng);
                m + self.scale * z
            })
            .collect()
    }
}

/// `log q(x)` counted as one proposal evaluation.
pub fn log_proposal_pdf(
    p: &GaussianProposal,
    x: &[f64],
    counters: &mut EvalCounters,
) -> Result<f64> {
    check_dim(p.dim(), x.len())?;
    counters.proposal += 1;
    Ok(p.log_pdf(x))
}

/// One draw `x ~ q_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub proposal: usize,
    pub x: Vec<f64>,
}

/// The N proposals of one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalPopulation {
    pub proposals: Vec<GaussianProposal>,
    pub iteration: usize,
}

impl ProposalPopulation {
    pub fn new(proposals: Vec<GaussianProposal>, iteration: usize) -> Result<Self> {
        let Some(first) = proposals.first() else {
            return Err(Error::InvalidSpec(
                "population needs at least one proposal".into(),
            ));
        };
        let d = first.dim();
        if proposals.iter().any(|p| p.dim() != d) {
            return Err(Error::InvalidSpec("proposals differ in dimension".into()));
        }
        Ok(Self {
            proposals,
            iteration,
        })
    }

    pub fn len(&self) -> usize {
        self.proposals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proposals.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.proposals[0].dim()
    }

    pub fn locations(&self) -> Vec<Vec<f64>> {
        self.proposals.iter().map(|p| p.location.clone()).collect()
    }

    pub fn scales(&self) -> Vec<f64> {
        self.proposals.iter().map(|p| p.scale).collect()
    }

    /// Next population: same scales, new locations, iteration + 1.
    pub fn relocated(&self, locations: Vec<Vec<f64>>) -> Result<Self> {
        if locations.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} locations, got {}",
                self.len(),
                locations.len()
            )));
        }
        let proposals = self
            .proposals
            .iter()
            .zip(locations)
            .map(|(p, loc)| {
                check_dim(p.dim(), loc.len())?;
                Ok(GaussianProposal {
                    location: loc,
                    scale: p.scale,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            proposals,
            iteration: self.iteration + 1,
        })
    }

    /// Uncounted `log[(1/N) Σ_j q_j(x)]`.
    pub(crate) fn log_mixture_raw(&self, x: &[f64]) -> f64 {
        let mut acc = LogSumExp::new();
        for p in &self.proposals {
            acc.push(p.log_pdf(x));
        }
        acc.value() - (self.len() as f64).ln()
    }
}

/// `N` locations drawn uniformly from `[box_low, box_high]^dim`, each with scale `sigma`.
pub fn init_population<R: Rng + ?Sized>(
    n: usize,
    dim: usize,
    box_low: f64,
    box_high: f64,
    sigma: f64,
    rng: &mut R,
) -> Result<ProposalPopulation> {
    if n == 0 || dim == 0 {
        return Err(Error::InvalidSpec(
            "population size and dimension must be positive".into(),
        ));
    }
    if !(box_low <= box_high) || !box_low.is_finite() || !box_high.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "invalid initialization box [{box_low}, {box_high}]"
        )));
    }
    let proposals = (0..n)
        .map(|_| {
            let loc = (0..dim)
                .map(|_| {
                    if box_low == box_high {
                        box_low
                    } else {
                        rng.random_range(box_low..=box_high)
                    }
                })
                .collect();
            GaussianProposal::new(loc, sigma)
        })
        .collect::<Result<_>>()?;
    ProposalPopulation::new(proposals, 1)
}

/// `K` draws from every proposal, ordered proposal-major (`n·K + k`).
pub fn sample_population<R: Rng + ?Sized>(
    pop: &ProposalPopulation,
    k: usize,
    rng: &mut R,
) -> Result<Vec<Draw>> {
    if k == 0 {
        return Err(Error::InvalidSpec(
            "samples per proposal must be at least 1".into(),
        ));
    }
    let mut draws = Vec::with_capacity(pop.len() * k);
    for (n, p) in pop.proposals.iter().enumerate() {
        for _ in 0..k {
            draws.push(Draw {
                proposal: n,
                x: p.sample(rng),
            });
        }
    }
    Ok(draws)
}

/// `log[(1/N) Σ_j q_j(x)]`, counted as N proposal evaluations.
pub fn log_population_mixture(
    pop: &ProposalPopulation,
    x: &[f64],
    counters: &mut EvalCounters,
) -> Result<f64> {
    check_dim(pop.dim(), x.len())?;
    counters.proposal += pop.len() as u64;
    Ok(pop.log_mixture_raw(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, RngFactory};

    fn rng() -> crate::rng::StreamRng {
        RngFactory::new(7).stream(Purpose::Test, 0, 0)
    }

    #[test]
    fn degenerate_box_gives_exact_location() {
        let pop = init_population(1, 3, 0.0, 0.0, 1.0, &mut rng()).unwrap();
        assert_eq!(pop.proposals[0].location, vec![0.0; 3]);
        assert_eq!(pop.iteration, 1);
    }

    #[test]
    fn init_within_box() {
        let pop = init_population(100, 2, -4.0, 4.0, 5.0, &mut rng()).unwrap();
        assert!(pop
            .locations()
            .iter()
            .flatten()
            .all(|v| (-4.0..=4.0).contains(v)));
    }

    #[test]
    fn init_rejects_bad_args() {
        assert!(init_population(0, 2, -1.0, 1.0, 1.0, &mut rng()).is_err());
        assert!(init_population(2, 2, 1.0, -1.0, 1.0, &mut rng()).is_err());
        assert!(init_population(2, 2, -1.0, 1.0, 0.0, &mut rng()).is_err());
    }

    #[test]
    fn vanishing_scale_samples_stay_at_location() {
        let p = GaussianProposal::new(vec![1.0, -2.0], 1e-8).unwrap();
        let pop = ProposalPopulation::new(vec![p], 1).unwrap();
        let draws = sample_population(&pop, 50, &mut rng()).unwrap();
        for d in draws {
            assert!(squared_distance(&d.x, &[1.0, -2.0]).sqrt() < 1e-6);
        }
    }

    #[test]
    fn draw_count_and_order() {
        let pop = init_population(100, 2, -4.0, 4.0, 5.0, &mut rng()).unwrap();
        let draws = sample_population(&pop, 5, &mut rng()).unwrap();
        assert_eq!(draws.len(), 500);
        assert!(draws.iter().enumerate().all(|(i, d)| d.proposal == i / 5));
        assert!(sample_population(&pop, 0, &mut rng()).is_err());
    }

    #[test]
    fn log_pdf_at_mode() {
        let p = GaussianProposal::new(vec![0.3, 0.7], 1.0).unwrap();
        let mut c = EvalCounters::new();
        let v = log_proposal_pdf(&p, &[0.3, 0.7], &mut c).unwrap();
        assert!((v + (2.0 * std::f64::consts::PI).ln()).abs() < 1e-15);
        assert_eq!(c.proposal, 1);
        assert!(log_proposal_pdf(&p, &[0.3], &mut c).is_err());
    }

    #[test]
    fn mixture_counts_and_collapse() {
        let p = GaussianProposal::new(vec![1.0, 2.0], 0.7).unwrap();
        let pop = ProposalPopulation::new(vec![p.clone(); 4], 1).unwrap();
        let mut c = EvalCounters::new();
        for x in [[1.0, 2.0], [5.0, -3.0], [0.0, 0.0]] {
            let m = log_population_mixture(&pop, &x, &mut c).unwrap();
            assert!((m - p.log_pdf(&x)).abs() < 1e-13);
        }
        assert_eq!(c.proposal, 12);
    }

    #[test]
    fn mixture_matches_direct_average() {
        let pop = ProposalPopulation::new(
            vec![
                GaussianProposal::new(vec![0.0, 0.0], 1.0).unwrap(),
                GaussianProposal::new(vec![2.0, -1.0], 0.5).unwrap(),
                GaussianProposal::new(vec![-3.0, 4.0], 2.0).unwrap(),
            ],
            1,
        )
        .unwrap();
        for x in [[0.1, 0.2], [2.0, -1.1], [-2.0, 3.0]] {
            let direct: f64 = pop
                .proposals
                .iter()
                .map(|p| {
                    let s2 = p.scale * p.scale;
                    let r2 = (x[0] - p.location[0]).powi(2) + (x[1] - p.location[1]).powi(2);
                    (-r2 / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2)
                })
                .sum::<f64>()
                / 3.0;
            let m = log_population_mixture(&pop, &x, &mut EvalCounters::new()).unwrap();
            assert!((m - direct.ln()).abs() < 1e-12);
        }
    }
}
