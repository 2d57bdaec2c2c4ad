//! Periodic switching signals built by repeating a closed walk, plus the
//! counting functions used by dwell-time style conditions.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{NodeId, SwitchedDigraph, Walk};

/// `sigma(t) = base[t mod |base|]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicSignal {
    base: Walk,
}

impl PeriodicSignal {
    pub fn from_closed_walk(w: Walk) -> Result<Self> {
        if !w.is_closed() {
            return Err(Error::OpenWalk);
        }
        Ok(Self { base: w })
    }

    pub fn base(&self) -> &Walk {
        &self.base
    }

    pub fn period(&self) -> usize {
        self.base.len()
    }

    pub fn at(&self, t: u64) -> NodeId {
        self.base.vertices()[(t % self.period() as u64) as usize]
    }

    /// `sigma(0), ..., sigma(horizon - 1)`.
    pub fn values(&self, horizon: u64) -> Vec<NodeId> {
        (0..horizon).map(|t| self.at(t)).collect()
    }

    /// The prefix `sigma(0), ..., sigma(len)` read as a walk of `len` edges.
    pub fn prefix_walk(&self, len: u64) -> Walk {
        Walk::new(self.values(len + 1)).expect("nonempty")
    }

    pub fn is_jump(&self, t: u64) -> bool {
        t >= 1 && self.at(t) != self.at(t - 1)
    }

    /// Switching instants `0 = tau_0 < tau_1 < ...` that matter at `horizon`:
    /// zero plus every jump in `[1, horizon - 1]`.
    pub fn switching_record(&self, horizon: u64) -> Result<SwitchRecord> {
        if horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        let mut instants = vec![0];
        instants.extend((1..horizon).filter(|&t| self.is_jump(t)));
        let active = instants.iter().map(|&t| self.at(t)).collect();
        Ok(SwitchRecord {
            horizon,
            instants,
            active,
        })
    }

    /// `N_sigma(s, t)`: jumps in `(s, t]`.
    pub fn switch_count(&self, s: u64, t: u64) -> Result<u64> {
        check_interval(s, t)?;
        Ok(((s + 1)..=t).filter(|&u| self.is_jump(u)).count() as u64)
    }

    /// `T^U(s, t)`: steps `u` in `(s, t]` with an unstable mode active.
    pub fn unstable_activation(&self, g: &SwitchedDigraph, s: u64, t: u64) -> Result<u64> {
        check_interval(s, t)?;
        let mut unstable = Vec::with_capacity(self.period());
        for &v in &self.base.vertices()[..self.period()] {
            unstable.push(g.is_unstable(v)?);
        }
        let n = self.period() as u64;
        Ok(((s + 1)..=t)
            .filter(|&u| unstable[(u % n) as usize])
            .count() as u64)
    }

    /// Checks the average-dwell-time and unstable-activation bounds on every
    /// interval `(s, t]` with `0 <= s < t <= horizon`.
    pub fn adt_check(&self, g: &SwitchedDigraph, p: &AdtParams, horizon: u64) -> Result<Vec<AdtViolation>> {
        p.validate()?;
        if horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        let n = self.period() as u64;
        let mut unstable = Vec::with_capacity(n as usize);
        for &v in &self.base.vertices()[..n as usize] {
            unstable.push(g.is_unstable(v)?);
        }
        // Prefix sums: jumps[t] = jumps in (0, t], active[t] = unstable steps in (0, t].
        let mut jumps = vec![0u64; horizon as usize + 1];
        let mut active = vec![0u64; horizon as usize + 1];
        for t in 1..=horizon {
            let i = t as usize;
            jumps[i] = jumps[i - 1] + u64::from(self.is_jump(t));
            active[i] = active[i - 1] + u64::from(unstable[(t % n) as usize]);
        }

        let mut out = Vec::new();
        for s in 0..horizon {
            for t in (s + 1)..=horizon {
                let len = (t - s) as f64;
                let switches = jumps[t as usize] - jumps[s as usize];
                let switch_limit = p.n0 + len / p.tau_a;
                if switches as f64 > switch_limit {
                    out.push(AdtViolation {
                        s,
                        t,
                        kind: AdtViolationKind::SwitchCount,
                        observed: switches,
                        limit: switch_limit,
                    });
                }
                let unstable_steps = active[t as usize] - active[s as usize];
                let activation_limit = p.t0 + p.rho_bar * len;
                if unstable_steps as f64 > activation_limit {
                    out.push(AdtViolation {
                        s,
                        t,
                        kind: AdtViolationKind::UnstableActivation,
                        observed: unstable_steps,
                        limit: activation_limit,
                    });
                }
            }
        }
        Ok(out)
    }
}

fn check_interval(s: u64, t: u64) -> Result<()> {
    if s >= t {
        return Err(Error::InvalidInterval { s, t });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchRecord {
    pub horizon: u64,
    pub instants: Vec<u64>,
    /// Mode active on `[instants[i], instants[i + 1])`.
    pub active: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdtParams {
    pub n0: f64,
    pub tau_a: f64,
    pub t0: f64,
    pub rho_bar: f64,
}

impl AdtParams {
    fn validate(&self) -> Result<()> {
        if !(self.n0 >= 0.0 && self.n0.is_finite()) {
            return Err(invalid("n0", "must be finite and >= 0"));
        }
        if !(self.tau_a > 0.0 && self.tau_a.is_finite()) {
            return Err(invalid("tau_a", "must be finite and > 0"));
        }
        if !(self.t0 >= 0.0 && self.t0.is_finite()) {
            return Err(invalid("t0", "must be finite and >= 0"));
        }
        if !(self.rho_bar > 0.0 && self.rho_bar < 1.0) {
            return Err(invalid("rho_bar", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdtViolationKind {
    SwitchCount,
    UnstableActivation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdtViolation {
    pub s: u64,
    pub t: u64,
    pub kind: AdtViolationKind,
    pub observed: u64,
    pub limit: f64,
}
