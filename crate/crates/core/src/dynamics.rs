//! Subsystem update maps `x(t+1) = f_i(x(t), v(t))`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::NodeId;

/// First map of the two-mode nonlinear benchmark.
pub fn nonlinear_pair_f1(x: &[f64], v: &[f64]) -> Vec<f64> {
    let (x1, x2, v) = (x[0], x[1], v[0]);
    vec![
        1.05 * x2 + 0.05 * x2 * (-x2.abs()).exp() + (-x1.abs()).exp() * v,
        0.7 * x1 + (-x2.abs()).exp() * v,
    ]
}

/// Second map of the two-mode nonlinear benchmark.
pub fn nonlinear_pair_f2(x: &[f64], v: &[f64]) -> Vec<f64> {
    let (x1, x2, v) = (x[0], x[1], v[0]);
    vec![
        2.0 * x1 * x1.sin() + (-x1.abs()).exp() * v,
        6f64.sqrt() * x2 + (-x2.abs()).exp() * v,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubsystemMap {
    /// `x -> A x + B v`.
    Linear { a: Vec<Vec<f64>>, b: Vec<Vec<f64>> },
    /// `x -> a x + v` on scalars.
    Scalar { a: f64 },
    NonlinearPairF1,
    NonlinearPairF2,
}

impl SubsystemMap {
    pub fn state_dim(&self) -> usize {
        match self {
            Self::Linear { a, .. } => a.len(),
            Self::Scalar { .. } => 1,
            Self::NonlinearPairF1 | Self::NonlinearPairF2 => 2,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Self::Linear { b, .. } => b.first().map_or(0, Vec::len),
            _ => 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Self::Linear { a, b } = self {
            let n = a.len();
            if n == 0 || a.iter().any(|r| r.len() != n) {
                return Err(invalid("a", "must be square and nonempty"));
            }
            if b.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: b.len() });
            }
            let m = b[0].len();
            if b.iter().any(|r| r.len() != m) {
                return Err(invalid("b", "rows must have equal length"));
            }
            if a.iter().chain(b).flatten().any(|x| !x.is_finite()) {
                return Err(invalid("linear", "entries must be finite"));
            }
        }
        if let Self::Scalar { a } = self {
            if !a.is_finite() {
                return Err(invalid("a", "must be finite"));
            }
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        match self {
            Self::Linear { a, b } => a
                .iter()
                .zip(b)
                .map(|(ar, br)| {
                    ar.iter().zip(x).map(|(p, q)| p * q).sum::<f64>()
                        + br.iter().zip(v).map(|(p, q)| p * q).sum::<f64>()
                })
                .collect(),
            Self::Scalar { a } => vec![a * x[0] + v[0]],
            Self::NonlinearPairF1 => nonlinear_pair_f1(x, v),
            Self::NonlinearPairF2 => nonlinear_pair_f2(x, v),
        }
    }
}

/// A family of update maps keyed by subsystem id, all sharing state and
/// input dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsFamily {
    maps: BTreeMap<NodeId, SubsystemMap>,
    state_dim: usize,
    input_dim: usize,
}

impl DynamicsFamily {
    pub fn new(maps: BTreeMap<NodeId, SubsystemMap>) -> Result<Self> {
        let first = maps
            .values()
            .next()
            .ok_or_else(|| invalid("dynamics", "family has no subsystems"))?;
        let (state_dim, input_dim) = (first.state_dim(), first.input_dim());
        for m in maps.values() {
            m.validate()?;
            if m.state_dim() != state_dim {
                return Err(Error::DimensionMismatch { expected: state_dim, got: m.state_dim() });
            }
            if m.input_dim() != input_dim {
                return Err(Error::DimensionMismatch { expected: input_dim, got: m.input_dim() });
            }
        }
        Ok(Self { maps, state_dim, input_dim })
    }

    /// Two-mode benchmark: mode 1 is the contracting map, mode 2 the
    /// expanding one.
    pub fn nonlinear_pair() -> Self {
        let maps = [(1, SubsystemMap::NonlinearPairF1), (2, SubsystemMap::NonlinearPairF2)];
        Self::new(maps.into_iter().collect()).expect("builtin family is valid")
    }

    /// `x -> a_i x + v` for each `(i, a_i)`.
    pub fn scalar(coefs: &[(NodeId, f64)]) -> Result<Self> {
        Self::new(coefs.iter().map(|&(i, a)| (i, SubsystemMap::Scalar { a })).collect())
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.maps.keys().copied()
    }

    pub fn map(&self, i: NodeId) -> Result<&SubsystemMap> {
        self.maps.get(&i).ok_or(Error::UnknownSubsystem(i))
    }

    pub fn step(&self, i: NodeId, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let f = self.map(i)?;
        if x.len() != self.state_dim {
            return Err(Error::DimensionMismatch { expected: self.state_dim, got: x.len() });
        }
        if v.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, got: v.len() });
        }
        let next = f.apply(x, v);
        if next.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("in f_{i} at state {x:?}, input {v:?}"),
            });
        }
        Ok(next)
    }
}
