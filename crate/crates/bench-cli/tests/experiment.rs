use hpmc::{Algorithm, BenchmarkTarget};
use hpmc_bench::{compute_mse, run_experiment, ExperimentSpec, Metric, Variant};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

fn noisy(truth: f64, sd: f64, r: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sd).unwrap();
    (0..r)
        .map(|_| vec![truth + noise.sample(&mut rng)])
        .collect()
}

/// Proposal equal to the normalized target: every weight is 1, `Ẑ = 1`.
#[test]
fn identity_configuration_has_no_evidence_error() {
    let mut v = Variant::new(Algorithm::PmcStandard, 1, 50, 1.0);
    v.init_low = 0.0;
    v.init_high = 0.0;
    v.iterations = Some(1);
    let mut spec = ExperimentSpec::new(
        "identity",
        BenchmarkTarget::Gaussian {
            dim: 1,
            mean: 0.0,
            sd: 1.0,
        },
        vec![v],
        vec![Metric::MseZ],
    );
    spec.replicates = 1;
    let rows = run_experiment(&spec).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].metric, "mse_z");
    assert!(rows[0].value.unwrap() < 1e-2);
    assert_eq!(rows[0].replicates, 1);
}

#[test]
fn known_noise_mse_within_three_standard_errors() {
    let m = compute_mse(&noisy(3.0, 0.1, 10_000, 1), &[3.0]).unwrap();
    assert!(
        (m.mse - 0.01).abs() < 3.0 * m.stderr,
        "{} ± {}",
        m.mse,
        m.stderr
    );
}

#[test]
fn stderr_halves_when_replicates_quadruple() {
    let a = compute_mse(&noisy(0.0, 1.0, 2_000, 2), &[0.0]).unwrap();
    let b = compute_mse(&noisy(0.0, 1.0, 8_000, 3), &[0.0]).unwrap();
    let ratio = a.stderr / b.stderr;
    assert!((ratio / 2.0 - 1.0).abs() < 0.25, "ratio {ratio}");
}

#[test]
fn experiments_are_reproducible() {
    let variants = vec![
        Variant::new(Algorithm::LrPmc, 8, 3, 2.0),
        Variant::new(Algorithm::PiMais, 8, 3, 2.0),
        Variant::new(Algorithm::HpmcMixture, 8, 3, 2.0),
    ];
    let mut spec = ExperimentSpec::new(
        "r",
        BenchmarkTarget::Toy5,
        variants,
        vec![Metric::ModeDiscovery, Metric::MseZ],
    );
    spec.replicates = 4;
    spec.budget = 3000;
    let a = run_experiment(&spec).unwrap();
    assert_eq!(a, run_experiment(&spec).unwrap());
    let discovery = a.iter().filter(|r| r.metric == "mode_discovery").count();
    assert_eq!(discovery, 3);
    spec.seed_base = 1;
    assert_ne!(a, run_experiment(&spec).unwrap());
}
