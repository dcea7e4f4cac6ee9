use hpmc::proposals::{sample_population, Draw};
use hpmc::rng::{Purpose, RngFactory};
use hpmc::weighting::{compute_weights, normalize, NormScope};
use hpmc::{
    BenchmarkTarget, EstimateAccumulator, EvalCounters, GaussianProposal, ProposalPopulation,
    WeightScheme,
};
use proptest::prelude::*;

fn population(locations: &[f64], scale: f64) -> ProposalPopulation {
    ProposalPopulation::new(
        locations
            .iter()
            .map(|&m| GaussianProposal::new(vec![m, -m], scale).unwrap())
            .collect(),
        1,
    )
    .unwrap()
}

proptest! {
    #[test]
    fn normalized_weights_sum_to_one(
        locs in prop::collection::vec(-5.0f64..5.0, 1..6),
        scale in 0.3f64..4.0,
        k in 1usize..5,
        seed in 0u64..1000,
    ) {
        let target = BenchmarkTarget::Toy5.build().unwrap();
        let pop = population(&locs, scale);
        let draws = sample_population(&pop, k, &mut RngFactory::new(seed).stream(Purpose::Test, 0, 0)).unwrap();
        for scheme in [WeightScheme::Dm, WeightScheme::Standard] {
            let s = compute_weights(&draws, &pop, &target, scheme, &mut EvalCounters::new()).unwrap();
            let g = normalize(&s, NormScope::Global);
            prop_assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let l = normalize(&s, NormScope::Local);
            for n in 0..locs.len() {
                let sum: f64 = s.iter().zip(&l.weights).filter(|(x, _)| x.proposal_index == n).map(|(_, w)| w).sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn snis_is_invariant_to_target_scale(
        locs in prop::collection::vec(-3.0f64..3.0, 1..5),
        c in 1e-6f64..1e6,
        seed in 0u64..1000,
    ) {
        let target = BenchmarkTarget::Gaussian { dim: 2, mean: 0.5, sd: 1.5 }.build().unwrap();
        let scaled = target.scaled(c).unwrap();
        let pop = population(&locs, 2.0);
        let draws = sample_population(&pop, 3, &mut RngFactory::new(seed).stream(Purpose::Test, 0, 0)).unwrap();
        let a = compute_weights(&draws, &pop, &target, WeightScheme::Dm, &mut EvalCounters::new()).unwrap();
        let b = compute_weights(&draws, &pop, &scaled, WeightScheme::Dm, &mut EvalCounters::new()).unwrap();
        let (wa, wb) = (normalize(&a, NormScope::Global).weights, normalize(&b, NormScope::Global).weights);
        for (x, y) in wa.iter().zip(&wb) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        let mut acc_a = EstimateAccumulator::new(2);
        let mut acc_b = EstimateAccumulator::new(2);
        acc_a.absorb_all(&a);
        acc_b.absorb_all(&b);
        let (ma, mb) = (acc_a.snis_estimate().unwrap(), acc_b.snis_estimate().unwrap());
        for (x, y) in ma.iter().zip(&mb) {
            prop_assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()));
        }
        let ratio = acc_b.log_z_estimate().unwrap() - acc_a.log_z_estimate().unwrap();
        prop_assert!((ratio - c.ln()).abs() < 1e-9);
    }

    #[test]
    fn dm_weights_do_not_depend_on_proposal_order(
        locs in prop::collection::vec(-3.0f64..3.0, 2..5),
        x0 in -4.0f64..4.0,
        x1 in -4.0f64..4.0,
    ) {
        let target = BenchmarkTarget::Toy5.build().unwrap();
        let pop = population(&locs, 1.5);
        let mut rev_locs = locs.clone();
        rev_locs.reverse();
        let rev = population(&rev_locs, 1.5);
        let d = [Draw { proposal: 0, x: vec![x0, x1] }];
        let a = compute_weights(&d, &pop, &target, WeightScheme::Dm, &mut EvalCounters::new()).unwrap();
        let b = compute_weights(&d, &rev, &target, WeightScheme::Dm, &mut EvalCounters::new()).unwrap();
        prop_assert!((a[0].log_w - b[0].log_w).abs() < 1e-10);
    }
}

/// Standard normal target against `N(0, 1)`: every weight is `√(2π)`.
#[test]
fn matched_unnormalized_gaussian_gives_root_two_pi() {
    let target = BenchmarkTarget::Gaussian {
        dim: 1,
        mean: 0.0,
        sd: 1.0,
    }
    .build()
    .unwrap()
    .scaled((2.0 * std::f64::consts::PI).sqrt())
    .unwrap();
    let pop =
        ProposalPopulation::new(vec![GaussianProposal::new(vec![0.0], 1.0).unwrap()], 1).unwrap();
    let draws = sample_population(
        &pop,
        1000,
        &mut RngFactory::new(1).stream(Purpose::Test, 0, 0),
    )
    .unwrap();
    let s = compute_weights(
        &draws,
        &pop,
        &target,
        WeightScheme::Standard,
        &mut EvalCounters::new(),
    )
    .unwrap();
    for w in &s {
        assert!((w.log_w.exp() - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }
}

/// `exp(-x²/2)` target with an `N(0.5, 1.3²)` proposal: `Ẑ` lies within three
/// standard errors of `√(2π)`.
#[test]
fn evidence_estimate_within_three_standard_errors() {
    let target = BenchmarkTarget::Gaussian {
        dim: 1,
        mean: 0.0,
        sd: 1.0,
    }
    .build()
    .unwrap()
    .scaled((2.0 * std::f64::consts::PI).sqrt())
    .unwrap();
    let pop =
        ProposalPopulation::new(vec![GaussianProposal::new(vec![0.5], 1.3).unwrap()], 1).unwrap();
    let draws = sample_population(
        &pop,
        20_000,
        &mut RngFactory::new(2).stream(Purpose::Test, 0, 0),
    )
    .unwrap();
    let s = compute_weights(
        &draws,
        &pop,
        &target,
        WeightScheme::Dm,
        &mut EvalCounters::new(),
    )
    .unwrap();
    let w: Vec<f64> = s.iter().map(|s| s.log_w.exp()).collect();
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let sd = (w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut acc = EstimateAccumulator::new(1);
    acc.absorb_all(&s);
    let z = acc.z_estimate().unwrap();
    assert!((z - mean).abs() < 1e-9 * mean);
    assert!(
        (z - (2.0 * std::f64::consts::PI).sqrt()).abs() < 3.0 * sd / n.sqrt(),
        "Ẑ = {z}"
    );
}

/// Two proposals on a Gaussian target, one sample each: the DM estimator of
/// `Z` has no larger variance than the standard-weight estimator.
#[test]
fn dm_variance_not_larger_than_standard() {
    let target = BenchmarkTarget::Gaussian {
        dim: 1,
        mean: 0.0,
        sd: 1.0,
    }
    .build()
    .unwrap();
    let pop = ProposalPopulation::new(
        vec![
            GaussianProposal::new(vec![-1.5], 1.0).unwrap(),
            GaussianProposal::new(vec![2.0], 0.8).unwrap(),
        ],
        1,
    )
    .unwrap();
    let factory = RngFactory::new(3);
    let reps = 10_000;
    let mut dm = Vec::with_capacity(reps);
    let mut std_w = Vec::with_capacity(reps);
    for r in 0..reps {
        let draws =
            sample_population(&pop, 1, &mut factory.stream(Purpose::Test, r as u64, 0)).unwrap();
        let z = |scheme| {
            let s =
                compute_weights(&draws, &pop, &target, scheme, &mut EvalCounters::new()).unwrap();
            s.iter().map(|s| s.log_w.exp()).sum::<f64>() / s.len() as f64
        };
        dm.push(z(WeightScheme::Dm));
        std_w.push(z(WeightScheme::Standard));
    }
    let var = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    let (vd, vs) = (var(&dm), var(&std_w));
    // Standard error of a sample variance: spread of the squared deviations over √R.
    let se = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let d: Vec<f64> = v.iter().map(|x| (x - m).powi(2)).collect();
        (var(&d) / v.len() as f64).sqrt()
    };
    assert!(
        vd <= vs + 2.0 * (se(&dm).powi(2) + se(&std_w).powi(2)).sqrt(),
        "dm {vd} vs standard {vs}"
    );
}

#[test]
fn counters_per_scheme() {
    let target = BenchmarkTarget::Toy5.build().unwrap();
    let pop = population(&[0.0, 1.0, 2.0], 1.0);
    let draws =
        sample_population(&pop, 4, &mut RngFactory::new(4).stream(Purpose::Test, 0, 0)).unwrap();
    let mut c = EvalCounters::new();
    compute_weights(&draws, &pop, &target, WeightScheme::Dm, &mut c).unwrap();
    assert_eq!((c.target_density, c.proposal), (12, 36));
    let mut c = EvalCounters::new();
    compute_weights(&draws, &pop, &target, WeightScheme::Standard, &mut c).unwrap();
    assert_eq!((c.target_density, c.proposal), (12, 12));
}
