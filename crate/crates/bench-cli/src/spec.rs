//! Experiment specs: a flat key-value file with one `[target]` section and
//! one `[[variant]]` section per sampler configuration.

use std::path::{Path, PathBuf};

use hpmc::adaptation::IncumbentPairing;
use hpmc::{Algorithm, BananaSpec, BenchmarkTarget, ChainStart, HmcParams, SamplerConfig};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// Dimension grid of the banana sweep.
pub const DEFAULT_SWEEP_DIMS: [usize; 8] = [2, 5, 10, 15, 20, 30, 40, 50];

pub const DEFAULT_REPLICATES: usize = 50;
pub const DEFAULT_BUDGET: u64 = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Squared error of the mean estimate, averaged over coordinates.
    MseMean,
    /// Squared error of `Ẑ` (DM denominator with the `1/N` factor).
    MseZ,
    /// Fraction of replicates whose locations cover every mixture component.
    ModeDiscovery,
}

impl Metric {
    pub fn id(&self) -> &'static str {
        match self {
            Self::MseMean => "mse_mean",
            Self::MseZ => "mse_z",
            Self::ModeDiscovery => "mode_discovery",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

/// How the `epsilon` key of a variant maps to the leapfrog step size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonScope {
    /// `epsilon` is the step size of one leapfrog step.
    #[default]
    Step,
    /// `epsilon` is the integration time of a trajectory; step size `epsilon / leapfrog`.
    Trajectory,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    name: Option<String>,
    replicates: Option<usize>,
    budget: Option<u64>,
    seed_base: Option<u64>,
    metrics: Vec<Metric>,
    mode_iteration: Option<usize>,
    format: Option<Format>,
    out: Option<PathBuf>,
    plot_data: Option<PathBuf>,
    dims: Option<Vec<usize>>,
    target: RawTarget,
    #[serde(default)]
    variant: Vec<RawVariant>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTarget {
    name: String,
    dim: Option<usize>,
    separation: Option<f64>,
    variance: Option<f64>,
    b: Option<f64>,
    sigma: Option<f64>,
    mean: Option<f64>,
    sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVariant {
    name: Option<String>,
    algorithm: String,
    n: usize,
    k: usize,
    sigma: f64,
    epsilon: Option<f64>,
    leapfrog: Option<usize>,
    epsilon_scope: Option<EpsilonScope>,
    lambda: Option<f64>,
    iterations: Option<usize>,
    chain_start: Option<ChainStart>,
    pairing: Option<IncumbentPairing>,
    burn_in: Option<usize>,
    init_low: Option<f64>,
    init_high: Option<f64>,
}

/// One sampler configuration of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    pub algorithm: Algorithm,
    pub n: usize,
    pub k: usize,
    pub sigma: f64,
    /// `ε` as written in the spec (HMC-based algorithms).
    pub epsilon: Option<f64>,
    pub epsilon_scope: EpsilonScope,
    pub hmc: HmcParams,
    /// Random-walk scale `λ` (PI-MAIS).
    pub lambda: Option<f64>,
    /// Fixed T; when absent T follows from the budget.
    pub iterations: Option<usize>,
    pub chain_start: ChainStart,
    pub pairing: IncumbentPairing,
    pub burn_in: usize,
    pub init_low: f64,
    pub init_high: f64,
}

impl Variant {
    pub fn new(algorithm: Algorithm, n: usize, k: usize, sigma: f64) -> Self {
        let base = SamplerConfig::new(algorithm, n, k, 1, sigma);
        Self {
            name: algorithm.id().to_string(),
            algorithm,
            n,
            k,
            sigma,
            epsilon: algorithm.uses_hmc().then_some(base.hmc.step_size),
            epsilon_scope: EpsilonScope::Step,
            hmc: base.hmc,
            lambda: (algorithm == Algorithm::PiMais).then_some(base.mh_scale),
            iterations: None,
            chain_start: base.chain_start,
            pairing: base.pairing,
            burn_in: base.burn_in_iterations,
            init_low: base.init_low,
            init_high: base.init_high,
        }
    }

    /// Sets `ε` and `L`, resolving the step size through `scope`.
    pub fn with_hmc(mut self, epsilon: f64, leapfrog: usize, scope: EpsilonScope) -> Self {
        self.epsilon = Some(epsilon);
        self.epsilon_scope = scope;
        let step = match scope {
            EpsilonScope::Step => epsilon,
            EpsilonScope::Trajectory => epsilon / leapfrog.max(1) as f64,
        };
        self.hmc = HmcParams {
            step_size: step,
            n_leapfrog: leapfrog,
        };
        self
    }

    /// The `ε` or `λ` value reported next to results.
    pub fn epsilon_or_lambda(&self) -> Option<f64> {
        if self.algorithm.uses_hmc() {
            self.epsilon
        } else if self.algorithm == Algorithm::PiMais {
            self.lambda
        } else {
            None
        }
    }

    /// Iterations under `budget` target evaluations, or the fixed override.
    pub fn iterations(&self, budget: u64) -> Result<usize> {
        match self.iterations {
            Some(0) => Err(BenchError::Spec(format!(
                "variant {}: iterations must be positive",
                self.name
            ))),
            Some(t) => Ok(t),
            None => Ok(hpmc::budget_iterations(
                self.algorithm,
                self.n,
                self.k,
                budget,
            )?),
        }
    }

    pub fn sampler_config(&self, t: usize, seed: u64) -> SamplerConfig {
        let mut c = SamplerConfig::new(self.algorithm, self.n, self.k, t, self.sigma);
        c.hmc = self.hmc;
        if let Some(l) = self.lambda {
            c.mh_scale = l;
        }
        c.seed = seed;
        c.chain_start = self.chain_start;
        c.pairing = self.pairing;
        c.burn_in_iterations = self.burn_in;
        c.init_low = self.init_low;
        c.init_high = self.init_high;
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub target: BenchmarkTarget,
    pub variants: Vec<Variant>,
    pub replicates: usize,
    /// Total target evaluations E shared by all variants.
    pub budget: u64,
    pub seed_base: u64,
    pub metrics: Vec<Metric>,
    /// Snapshot (number of completed adaptations) checked by `mode_discovery`.
    pub mode_iteration: usize,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub plot_data: Option<PathBuf>,
    /// Dimensions visited by `sweep`.
    pub dims: Vec<usize>,
}

impl ExperimentSpec {
    pub fn new(
        name: impl Into<String>,
        target: BenchmarkTarget,
        variants: Vec<Variant>,
        metrics: Vec<Metric>,
    ) -> Self {
        Self {
            name: name.into(),
            target,
            variants,
            replicates: DEFAULT_REPLICATES,
            budget: DEFAULT_BUDGET,
            seed_base: 0,
            metrics,
            mode_iteration: 3,
            format: Format::Csv,
            out: None,
            plot_data: None,
            dims: DEFAULT_SWEEP_DIMS.to_vec(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let default_name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        Self::parse(&text, default_name)
    }

    pub fn parse(text: &str, default_name: Option<String>) -> Result<Self> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| BenchError::Spec(e.to_string()))?;
        let target = parse_target(&raw.target)?;
        let variants = raw
            .variant
            .iter()
            .map(parse_variant)
            .collect::<Result<Vec<_>>>()?;
        let spec = Self {
            name: raw
                .name
                .or(default_name)
                .unwrap_or_else(|| "experiment".into()),
            target,
            variants,
            replicates: raw.replicates.unwrap_or(DEFAULT_REPLICATES),
            budget: raw.budget.unwrap_or(DEFAULT_BUDGET),
            seed_base: raw.seed_base.unwrap_or(0),
            metrics: raw.metrics,
            mode_iteration: raw.mode_iteration.unwrap_or(3),
            format: raw.format.unwrap_or_default(),
            out: raw.out,
            plot_data: raw.plot_data,
            dims: raw.dims.unwrap_or_else(|| DEFAULT_SWEEP_DIMS.to_vec()),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(BenchError::Spec(m));
        if self.replicates == 0 {
            return err("replicates must be at least 1".into());
        }
        if self.metrics.is_empty() {
            return err("no metrics requested; the result table would be empty".into());
        }
        if self.variants.is_empty() {
            return err("no [[variant]] sections".into());
        }
        if self.dims.iter().any(|&d| d == 0) {
            return err("sweep dimensions must be positive".into());
        }
        let target = self.target.build()?;
        for m in &self.metrics {
            match m {
                Metric::MseMean if target.true_mean().is_none() => {
                    return err("target has no known mean".into())
                }
                Metric::MseZ if target.true_log_z().is_none() => {
                    return err("target has no known Z".into())
                }
                Metric::ModeDiscovery if self.target.mixture_spec().is_none() => {
                    return err("mode_discovery needs a Gaussian-mixture target".into())
                }
                _ => {}
            }
        }
        for v in &self.variants {
            let t = v.iterations(self.budget)?;
            if self.metrics.contains(&Metric::ModeDiscovery) && t < self.mode_iteration {
                return err(format!(
                    "variant {}: T = {t} is below mode_iteration",
                    v.name
                ));
            }
            v.sampler_config(t, 0).validate()?;
        }
        Ok(())
    }

    /// The same experiment on the target family at another dimension.
    pub fn at_dimension(&self, dim: usize) -> Result<Self> {
        let target = match &self.target {
            BenchmarkTarget::Banana(b) => BenchmarkTarget::Banana(BananaSpec { dim, ..*b }),
            BenchmarkTarget::Bimodal20 {
                separation,
                variance,
                ..
            } => BenchmarkTarget::Bimodal20 {
                dim,
                separation: *separation,
                variance: *variance,
            },
            BenchmarkTarget::Gaussian { mean, sd, .. } => BenchmarkTarget::Gaussian {
                dim,
                mean: *mean,
                sd: *sd,
            },
            BenchmarkTarget::Toy5 => {
                return Err(BenchError::Spec("toy5 has a fixed dimension".into()))
            }
        };
        Ok(Self {
            target,
            ..self.clone()
        })
    }
}

fn parse_target(raw: &RawTarget) -> Result<BenchmarkTarget> {
    let unused = |allowed: &[&str]| -> Result<()> {
        let given = [
            ("dim", raw.dim.is_some()),
            ("separation", raw.separation.is_some()),
            ("variance", raw.variance.is_some()),
            ("b", raw.b.is_some()),
            ("sigma", raw.sigma.is_some()),
            ("mean", raw.mean.is_some()),
            ("sd", raw.sd.is_some()),
        ];
        match given.iter().find(|(k, set)| *set && !allowed.contains(k)) {
            Some((k, _)) => Err(BenchError::Spec(format!(
                "target {} takes no '{k}' key",
                raw.name
            ))),
            None => Ok(()),
        }
    };
    let target = match raw.name.as_str() {
        "toy5" => {
            unused(&[])?;
            BenchmarkTarget::Toy5
        }
        "bimodal20" => {
            unused(&["dim", "separation", "variance"])?;
            let BenchmarkTarget::Bimodal20 {
                dim,
                separation,
                variance,
            } = BenchmarkTarget::bimodal20()
            else {
                unreachable!()
            };
            BenchmarkTarget::Bimodal20 {
                dim: raw.dim.unwrap_or(dim),
                separation: raw.separation.unwrap_or(separation),
                variance: raw.variance.unwrap_or(variance),
            }
        }
        "banana" => {
            unused(&["dim", "b", "sigma"])?;
            let d = BananaSpec::default();
            BenchmarkTarget::Banana(BananaSpec {
                dim: raw.dim.unwrap_or(d.dim),
                b: raw.b.unwrap_or(d.b),
                sigma: raw.sigma.unwrap_or(d.sigma),
            })
        }
        "gaussian" => {
            unused(&["dim", "mean", "sd"])?;
            BenchmarkTarget::Gaussian {
                dim: raw.dim.unwrap_or(1),
                mean: raw.mean.unwrap_or(0.0),
                sd: raw.sd.unwrap_or(1.0),
            }
        }
        other => return Err(BenchError::Spec(format!("unknown target '{other}'"))),
    };
    target.build()?;
    Ok(target)
}

fn parse_variant(raw: &RawVariant) -> Result<Variant> {
    let algorithm: Algorithm = raw
        .algorithm
        .parse()
        .map_err(|e: hpmc::Error| BenchError::Spec(e.to_string()))?;
    let mut v = Variant::new(algorithm, raw.n, raw.k, raw.sigma);
    if let Some(name) = &raw.name {
        v.name = name.clone();
    }
    let hmc_keys = raw.epsilon.is_some() || raw.leapfrog.is_some() || raw.epsilon_scope.is_some();
    if algorithm.uses_hmc() {
        let epsilon = raw.epsilon.unwrap_or(v.hmc.step_size);
        let leapfrog = raw.leapfrog.unwrap_or(v.hmc.n_leapfrog);
        v = v.with_hmc(epsilon, leapfrog, raw.epsilon_scope.unwrap_or_default());
    } else if hmc_keys {
        return Err(BenchError::Spec(format!(
            "variant {}: {algorithm} takes no HMC keys",
            v.name
        )));
    }
    match (algorithm, raw.lambda) {
        (Algorithm::PiMais, Some(l)) => v.lambda = Some(l),
        (Algorithm::PiMais, None) => {}
        (_, Some(_)) => {
            return Err(BenchError::Spec(format!(
                "variant {}: only pi_mais takes 'lambda'",
                v.name
            )))
        }
        _ => {}
    }
    v.iterations = raw.iterations;
    v.chain_start = raw.chain_start.unwrap_or(v.chain_start);
    v.pairing = raw.pairing.unwrap_or(v.pairing);
    v.burn_in = raw.burn_in.unwrap_or(v.burn_in);
    v.init_low = raw.init_low.unwrap_or(v.init_low);
    v.init_high = raw.init_high.unwrap_or(v.init_high);
    Ok(v)
}
