//! Simulation of a switched system under a periodic signal, batch runs and
//! trajectory-versus-certificate checks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::DynamicsFamily;
use crate::error::{invalid, Error, Result};
use crate::graph::NodeId;
use crate::lyapunov::{norm, uniform, LyapunovProfile, PsiParams};
use crate::schedule::PeriodicSignal;

/// Trajectories whose state norm exceeds this are stopped and flagged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Relative slack allowed by [`check_against_bound`].
pub const BOUND_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputSignal {
    Zero,
    Constant { value: Vec<f64> },
    /// Independent per-step draws, each component uniform on its interval.
    Uniform { bounds: Vec<(f64, f64)>, seed: u64 },
    Explicit { values: Vec<Vec<f64>> },
}

impl InputSignal {
    /// Input values `v(0), ..., v(horizon - 1)`.
    pub fn realize(&self, dim: usize, horizon: u64) -> Result<Vec<Vec<f64>>> {
        let seed = match self {
            Self::Uniform { seed, .. } => *seed,
            _ => 0,
        };
        self.realize_with(dim, horizon, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    fn realize_with(&self, dim: usize, horizon: u64, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
        let check_dim = |got: usize| {
            if got == dim {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected: dim, got })
            }
        };
        let h = horizon as usize;
        match self {
            Self::Zero => Ok(vec![vec![0.0; dim]; h]),
            Self::Constant { value } => {
                check_dim(value.len())?;
                Ok(vec![value.clone(); h])
            }
            Self::Uniform { bounds, .. } => {
                check_dim(bounds.len())?;
                for &(lo, hi) in bounds {
                    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                        return Err(invalid("input", format!("bad interval [{lo}, {hi}]")));
                    }
                }
                Ok((0..h)
                    .map(|_| bounds.iter().map(|&(lo, hi)| uniform(rng, lo, hi)).collect())
                    .collect())
            }
            Self::Explicit { values } => {
                if values.len() < h {
                    return Err(invalid(
                        "input",
                        format!("{} explicit values for horizon {horizon}", values.len()),
                    ));
                }
                for v in &values[..h] {
                    check_dim(v.len())?;
                }
                Ok(values[..h].to_vec())
            }
        }
    }
}

/// Stored run: `states[t + 1] = f_{modes[t]}(states[t], inputs[t])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub modes: Vec<NodeId>,
    pub norms: Vec<f64>,
    /// First `t` with `||x(t)||` above the divergence threshold; the run
    /// stops there.
    pub diverged_at: Option<u64>,
}

impl Trajectory {
    /// Number of steps actually taken.
    pub fn steps(&self) -> usize {
        self.modes.len()
    }

    /// `||v||_t`: sup of input norms over steps `0..t`.
    pub fn input_sup(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.states.len());
        let mut m: f64 = 0.0;
        out.push(0.0);
        for v in &self.inputs {
            m = m.max(norm(v));
            out.push(m);
        }
        out
    }
}

pub fn simulate(
    fam: &DynamicsFamily,
    signal: &PeriodicSignal,
    x0: &[f64],
    input: &InputSignal,
    horizon: u64,
) -> Result<Trajectory> {
    let inputs = input.realize(fam.input_dim(), horizon)?;
    run(fam, signal, x0, inputs, horizon)
}

fn run(
    fam: &DynamicsFamily,
    signal: &PeriodicSignal,
    x0: &[f64],
    mut inputs: Vec<Vec<f64>>,
    horizon: u64,
) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(invalid("horizon", "must be at least 1"));
    }
    if x0.len() != fam.state_dim() {
        return Err(Error::DimensionMismatch { expected: fam.state_dim(), got: x0.len() });
    }
    for &v in &signal.base().vertices()[..signal.period()] {
        fam.map(v)?;
    }
    let mut states = vec![x0.to_vec()];
    let mut norms = vec![norm(x0)];
    let mut modes = Vec::with_capacity(horizon as usize);
    let mut diverged_at = (norms[0] > DIVERGENCE_THRESHOLD).then_some(0);
    if diverged_at.is_none() {
        for t in 0..horizon {
            let i = signal.at(t);
            let next = fam
                .step(i, &states[t as usize], &inputs[t as usize])
                .map_err(|e| match e {
                    Error::NonFinite { context } => Error::NonFinite {
                        context: format!("at t = {}: {context}", t + 1),
                    },
                    other => other,
                })?;
            modes.push(i);
            norms.push(norm(&next));
            states.push(next);
            if norms[t as usize + 1] > DIVERGENCE_THRESHOLD {
                diverged_at = Some(t + 1);
                break;
            }
        }
    }
    inputs.truncate(modes.len());
    Ok(Trajectory { states, inputs, modes, norms, diverged_at })
}

/// Re-steps a stored trajectory and reports whether every state is
/// reproduced bit for bit.
pub fn replay_matches(fam: &DynamicsFamily, traj: &Trajectory) -> Result<bool> {
    for (t, &i) in traj.modes.iter().enumerate() {
        if fam.step(i, &traj.states[t], &traj.inputs[t])? != traj.states[t + 1] {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Axis-aligned box of initial conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateBox(pub Vec<(f64, f64)>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub index: usize,
    pub x0: Vec<f64>,
    pub sup_norm: f64,
    /// Max of `||x(t)||` over the last `ceil(T / 4)` recorded states.
    pub tail_norm: f64,
    pub final_norm: f64,
    pub diverged: bool,
    pub diverged_at: Option<u64>,
}

impl TrajectorySummary {
    fn of(index: usize, traj: &Trajectory, horizon: u64) -> Self {
        let tail = (horizon as usize).div_ceil(4).max(1);
        let n = traj.norms.len();
        let tail_norm = traj.norms[n.saturating_sub(tail)..].iter().copied().fold(0.0, f64::max);
        Self {
            index,
            x0: traj.states[0].clone(),
            sup_norm: traj.norms.iter().copied().fold(0.0, f64::max),
            tail_norm,
            final_norm: traj.norms[n - 1],
            diverged: traj.diverged_at.is_some(),
            diverged_at: traj.diverged_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub trajectories: Vec<Trajectory>,
    pub summaries: Vec<TrajectorySummary>,
}

/// Runs `count` trajectories. Trajectory `i` uses one stream seeded with
/// `seed + i`, drawing its initial state first and then its inputs; a
/// uniform input's own seed is ignored here.
pub fn batch_simulate(
    fam: &DynamicsFamily,
    signal: &PeriodicSignal,
    x0_box: &StateBox,
    count: usize,
    input: &InputSignal,
    horizon: u64,
    seed: u64,
) -> Result<Batch> {
    if count == 0 {
        return Err(invalid("count", "must be at least 1"));
    }
    if x0_box.0.len() != fam.state_dim() {
        return Err(Error::DimensionMismatch { expected: fam.state_dim(), got: x0_box.0.len() });
    }
    for &(lo, hi) in &x0_box.0 {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(invalid("x0_box", format!("bad interval [{lo}, {hi}]")));
        }
    }
    let trajectories = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let x0: Vec<f64> = x0_box.0.iter().map(|&(lo, hi)| uniform(&mut rng, lo, hi)).collect();
            let inputs = input.realize_with(fam.input_dim(), horizon, &mut rng)?;
            run(fam, signal, &x0, inputs, horizon)
        })
        .collect::<Result<Vec<_>>>()?;
    let summaries = trajectories
        .iter()
        .enumerate()
        .map(|(i, tr)| TrajectorySummary::of(i, tr, horizon))
        .collect();
    Ok(Batch { trajectories, summaries })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub ok: bool,
    pub worst_ratio: f64,
    pub worst_t: u64,
}

/// Certified bound at every recorded `t`, using `||x(0)||` and `||v||_t`.
pub fn bound_series(traj: &Trajectory, prof: &LyapunovProfile, p: &PsiParams) -> Vec<f64> {
    let x0 = traj.norms[0];
    traj.input_sup()
        .iter()
        .enumerate()
        .map(|(t, &vs)| p.certified_state_bound(t as u64, x0, vs, prof))
        .collect()
}

/// `ok` iff `||x(t)|| <= (1 + 1e-8) * bound(t)` at every recorded `t`.
pub fn check_against_bound(traj: &Trajectory, prof: &LyapunovProfile, p: &PsiParams) -> Result<BoundCheck> {
    let bounds = bound_series(traj, prof, p);
    let mut worst_ratio = 0.0;
    let mut worst_t = 0;
    for (t, (&n, &b)) in traj.norms.iter().zip(&bounds).enumerate() {
        let ratio = if n == 0.0 {
            0.0
        } else if b == 0.0 {
            return Err(Error::ZeroBound { t: t as u64, norm: n });
        } else {
            n / b
        };
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_t = t as u64;
        }
    }
    Ok(BoundCheck { ok: worst_ratio <= 1.0 + BOUND_SLACK, worst_ratio, worst_t })
}
