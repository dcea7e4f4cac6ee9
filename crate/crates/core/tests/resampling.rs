use hpmc::resampling::{global_resample_indices, local_resample, multinomial_draw, RandomMeasure};
use hpmc::rng::{Purpose, RngFactory};
use hpmc::WeightedSample;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

proptest! {
    #[test]
    fn zero_weight_atoms_are_never_drawn(
        raw in prop::collection::vec(prop_oneof![Just(0.0), 0.01f64..1.0], 2..12),
        seed in 0u64..1000,
    ) {
        prop_assume!(raw.iter().any(|w| *w > 0.0));
        let idx = multinomial_draw(&raw, 200, &mut RngFactory::new(seed).stream(Purpose::Test, 0, 0)).unwrap();
        for i in idx {
            prop_assert!(raw[i] > 0.0);
        }
    }

    #[test]
    fn local_resample_picks_from_own_group(
        n in 1usize..6, k in 1usize..6, seed in 0u64..1000,
    ) {
        let samples: Vec<WeightedSample> = (0..n * k)
            .map(|i| WeightedSample {
                x: vec![i as f64],
                log_w: ((i * 7919) % 13) as f64 - 6.0,
                proposal_index: i / k,
                iteration: 1,
                cached_log_pi: -(i as f64),
            })
            .collect();
        let out = local_resample(&samples, &mut RngFactory::new(seed).stream(Purpose::Test, 0, 0)).unwrap();
        prop_assert_eq!(out.locations.len(), n);
        for (g, l) in out.locations.iter().enumerate() {
            prop_assert_eq!(samples[l.sample_index].proposal_index, g);
            prop_assert_eq!(l.log_pi, samples[l.sample_index].cached_log_pi);
        }
    }
}

/// Expected copy count of atom `i` in `n` draws is `n·w̄_i`.
#[test]
fn copy_counts_are_unbiased() {
    let weights = [0.05, 0.3, 0.15, 0.0, 0.4, 0.1];
    let measure =
        RandomMeasure::new((0..weights.len()).collect::<Vec<_>>(), weights.to_vec()).unwrap();
    let (n, reps) = (10, 5000);
    let factory = RngFactory::new(12);
    let mut counts = vec![Vec::with_capacity(reps); weights.len()];
    for r in 0..reps {
        let idx =
            global_resample_indices(&measure, n, &mut factory.stream(Purpose::Test, r as u64, 0))
                .unwrap();
        let mut c = vec![0.0; weights.len()];
        for i in idx {
            c[i] += 1.0;
        }
        for (acc, v) in counts.iter_mut().zip(c) {
            acc.push(v);
        }
    }
    for (i, c) in counts.iter().enumerate() {
        let m = c.iter().sum::<f64>() / reps as f64;
        let var = c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        let expected = n as f64 * weights[i];
        if weights[i] == 0.0 {
            assert_eq!(m, 0.0);
        } else {
            assert!(
                (m - expected).abs() < 4.0 * se,
                "atom {i}: {m} vs {expected}"
            );
        }
    }
}

/// Draw frequencies do not depend on where an atom sits in the list:
/// permuted weights give the permuted frequencies (chi-square goodness of fit).
#[test]
fn frequencies_follow_weights_under_permutation() {
    let weights = [0.1, 0.2, 0.3, 0.4];
    let perms = [[0, 1, 2, 3], [3, 2, 1, 0], [2, 0, 3, 1]];
    let draws = 40_000;
    let chi = ChiSquared::new(3.0).unwrap();
    for (p, perm) in perms.iter().enumerate() {
        let w: Vec<f64> = perm.iter().map(|&i| weights[i]).collect();
        let idx = multinomial_draw(
            &w,
            draws,
            &mut RngFactory::new(13).stream(Purpose::Test, p as u64, 0),
        )
        .unwrap();
        let mut obs = [0.0; 4];
        for i in idx {
            obs[perm[i]] += 1.0;
        }
        let stat: f64 = (0..4)
            .map(|i| {
                let e = weights[i] * draws as f64;
                (obs[i] - e).powi(2) / e
            })
            .sum();
        let p_value = 1.0 - chi.cdf(stat);
        assert!(
            p_value > 0.001,
            "permutation {perm:?}: chi-square {stat}, p = {p_value}"
        );
    }
}
