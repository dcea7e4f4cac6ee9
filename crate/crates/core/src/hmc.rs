//! Leapfrog integration and single Hamiltonian Monte Carlo transitions with
//! unit mass.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::counters::EvalCounters;
use crate::error::{Error, Result};
use crate::targets::TargetDensity;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HmcParams {
    pub step_size: f64,
    pub n_leapfrog: usize,
}

impl HmcParams {
    pub fn new(step_size: f64, n_leapfrog: usize) -> Result<Self> {
        let p = Self {
            step_size,
            n_leapfrog,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "step size must be positive, got {}",
                self.step_size
            )));
        }
        if self.n_leapfrog == 0 {
            return Err(Error::InvalidSpec(
                "at least one leapfrog step is required".into(),
            ));
        }
        Ok(())
    }
}

/// Position of one chain with the target log-density and gradient cached there.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub position: Vec<f64>,
    pub cached_log_pi: f64,
    pub cached_grad: Vec<f64>,
}

impl ChainState {
    /// Evaluates density and gradient at `position` (one of each, counted).
    pub fn new(
        position: Vec<f64>,
        target: &TargetDensity,
        counters: &mut EvalCounters,
    ) -> Result<Self> {
        let eval = target.evaluate(&position, true, counters)?;
        Ok(Self {
            position,
            cached_log_pi: eval.log_pi,
            cached_grad: eval.grad.expect("gradient requested"),
        })
    }

    /// Chain state built from an already-known log-density; only the gradient is evaluated.
    pub fn with_cached_log_pi(
        position: Vec<f64>,
        log_pi: f64,
        target: &TargetDensity,
        counters: &mut EvalCounters,
    ) -> Result<Self> {
        let mut grad = vec![0.0; position.len()];
        target.gradient(&position, &mut grad, counters)?;
        counters.target_cache_hits += 1;
        Ok(Self {
            position,
            cached_log_pi: log_pi,
            cached_grad: grad,
        })
    }
}

/// End point of a leapfrog trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub position: Vec<f64>,
    pub momentum: Vec<f64>,
    /// Log-density at `position`, produced by the last gradient call.
    pub log_pi: f64,
    pub grad: Vec<f64>,
    /// A non-finite position, gradient or log-density was met; the trajectory stopped there.
    pub diverged: bool,
}

/// `L` half-kick / drift / half-kick steps with unit mass.
///
/// `grad_at_q` is the cached gradient at the start; `grad_fn(x, out)` writes
/// `∇ log π(x)` into `out` and returns `log π(x)`. It is called exactly `L` times
/// unless the trajectory diverges.
pub fn leapfrog<F>(
    q: &[f64],
    p: &[f64],
    grad_at_q: &[f64],
    params: &HmcParams,
    mut grad_fn: F,
) -> Trajectory
where
    F: FnMut(&[f64], &mut [f64]) -> Option<f64>,
{
    let eps = params.step_size;
    let mut q = q.to_vec();
    let mut p = p.to_vec();
    let mut g = grad_at_q.to_vec();
    let mut log_pi = f64::NAN;
    for (pi, gi) in p.iter_mut().zip(&g) {
        *pi += 0.5 * eps * gi;
    }
    for step in 0..params.n_leapfrog {
        for (qi, pi) in q.iter_mut().zip(&p) {
            *qi += eps * pi;
        }
        let ok = q.iter().all(|v| v.is_finite())
            && match grad_fn(&q, &mut g) {
                Some(lp) => {
                    log_pi = lp;
                    g.iter().all(|v| v.is_finite()) && !lp.is_nan()
                }
                None => false,
            };
        if !ok {
            return Trajectory {
                position: q,
                momentum: p,
                log_pi: f64::NAN,
                grad: g,
                diverged: true,
            };
        }
        let kick = if step + 1 == params.n_leapfrog {
            0.5 * eps
        } else {
            eps
        };
        for (pi, gi) in p.iter_mut().zip(&g) {
            *pi += kick * gi;
        }
    }
    let diverged = !log_pi.is_finite() || p.iter().any(|v| !v.is_finite());
    Trajectory {
        position: q,
        momentum: p,
        log_pi,
        grad: g,
        diverged,
    }
}

fn kinetic(p: &[f64]) -> f64 {
    0.5 * p.iter().map(|v| v * v).sum::<f64>()
}

/// `H(q, p) = -log π(q) + ½|p|²`
pub fn hamiltonian(log_pi: f64, p: &[f64]) -> f64 {
    -log_pi + kinetic(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HmcTransition {
    pub state: ChainState,
    pub accepted: bool,
    pub diverged: bool,
}

/// One HMC transition: fresh momentum, `L` leapfrog steps, Metropolis correction.
///
/// Counts `L` gradient evaluations and one density evaluation (the proposal's
/// log-density, taken from the last gradient call). A rejected or divergent
/// step returns the input state unchanged.
pub fn hmc_step<R: Rng + ?Sized>(
    state: &ChainState,
    target: &TargetDensity,
    params: &HmcParams,
    rng: &mut R,
    counters: &mut EvalCounters,
) -> Result<HmcTransition> {
    if state.position.len() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: state.position.len(),
        });
    }
    let p0: Vec<f64> = (0..state.position.len())
        .map(|_| StandardNormal.sample(rng))
        .collect();
    let traj = leapfrog(&state.position, &p0, &state.cached_grad, params, |x, g| {
        target.gradient(x, g, counters).ok()
    });
    counters.target_density += 1;
    let log_u: f64 = rng.random::<f64>().ln();
    if traj.diverged {
        return Ok(HmcTransition {
            state: state.clone(),
            accepted: false,
            diverged: true,
        });
    }
    let h0 = hamiltonian(state.cached_log_pi, &p0);
    let h1 = hamiltonian(traj.log_pi, &traj.momentum);
    let log_accept = if h0.is_finite() {
        h0 - h1
    } else {
        f64::INFINITY
    };
    if log_u < log_accept {
        Ok(HmcTransition {
            state: ChainState {
                position: traj.position,
                cached_log_pi: traj.log_pi,
                cached_grad: traj.grad,
            },
            accepted: true,
            diverged: false,
        })
    } else {
        Ok(HmcTransition {
            state: state.clone(),
            accepted: false,
            diverged: false,
        })
    }
}
