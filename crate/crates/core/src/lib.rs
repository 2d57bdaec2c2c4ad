//! Synthesis of periodic switching signals that keep a discrete-time
//! switched system input-to-state stable.
//!
//! Each subsystem is a vertex weighted by its Lyapunov rate and each
//! admissible switch an edge weighted by its comparison factor. A closed walk
//! whose total weight is negative, repeated forever, is a stabilizing signal.
//! The crate finds such walks, certifies the resulting bounds and checks them
//! by simulation.

pub mod commands;
pub mod config;
pub mod cycles;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod lyapunov;
pub mod schedule;
pub mod sim;

pub use cycles::{find_contractive_circuit, find_negative_cycle, min_mean_cycle, CycleReport};
pub use error::{Error, Result};
pub use graph::{NodeId, StabilityClass, SubsystemNode, SwitchedDigraph, TransitionEdge, Walk};
pub use lyapunov::{psi2_bound, LyapunovProfile, PsiParams};
pub use schedule::PeriodicSignal;
