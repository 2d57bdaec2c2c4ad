//! Weighted digraph of a switched system and the walk algebra on it.
//!
//! Vertices are subsystems carrying a Lyapunov rate `lambda`; edges are
//! admissible switches (self-loops mean "may dwell") carrying a comparison
//! factor `mu`. The weight of an edge `(k, l)` is
//! `ln mu_kl - |ln lambda_k|` when `k` is stable and
//! `ln mu_kl + |ln lambda_k|` when `k` is unstable, and the contractivity
//! functional of a walk is the sum of its edge weights.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = u32;

/// Default strictness margin for [`SwitchedDigraph::is_contractive`].
pub const DEFAULT_CONTRACTIVE_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilityClass {
    #[serde(alias = "STABLE", alias = "S")]
    Stable,
    #[serde(alias = "UNSTABLE", alias = "U")]
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsystemNode {
    pub id: NodeId,
    pub lambda: f64,
    pub class: StabilityClass,
}

impl SubsystemNode {
    pub fn new(id: NodeId, lambda: f64, class: StabilityClass) -> Self {
        Self { id, lambda, class }
    }

    pub fn stable(id: NodeId, lambda: f64) -> Self {
        Self::new(id, lambda, StabilityClass::Stable)
    }

    pub fn unstable(id: NodeId, lambda: f64) -> Self {
        Self::new(id, lambda, StabilityClass::Unstable)
    }

    /// `|ln lambda|`, the vertex weight.
    pub fn log_rate(&self) -> f64 {
        self.lambda.ln().abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub mu: f64,
}

impl TransitionEdge {
    pub fn new(from: NodeId, to: NodeId, mu: f64) -> Self {
        Self { from, to, mu }
    }
}

/// Validated weighted digraph `G(P, E(P))`.
///
/// Nodes and edges are stored in id order, so every iteration over the graph
/// is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedDigraph {
    nodes: BTreeMap<NodeId, SubsystemNode>,
    edges: BTreeMap<(NodeId, NodeId), TransitionEdge>,
}

impl SwitchedDigraph {
    pub fn new(nodes: &[SubsystemNode], edges: &[TransitionEdge]) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut node_map = BTreeMap::new();
        for node in nodes {
            validate_node(node)?;
            if node_map.insert(node.id, *node).is_some() {
                return Err(Error::DuplicateNode(node.id));
            }
        }
        let mut edge_map = BTreeMap::new();
        for edge in edges {
            for end in [edge.from, edge.to] {
                if !node_map.contains_key(&end) {
                    return Err(Error::DanglingEdge {
                        from: edge.from,
                        to: edge.to,
                        missing: end,
                    });
                }
            }
            validate_edge(edge)?;
            if edge_map.insert((edge.from, edge.to), *edge).is_some() {
                return Err(Error::DuplicateEdge(edge.from, edge.to));
            }
        }
        Ok(Self {
            nodes: node_map,
            edges: edge_map,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &SubsystemNode> + '_ {
        self.nodes.values()
    }

    /// Edges ordered by `(from, to)`.
    pub fn edges(&self) -> impl Iterator<Item = &TransitionEdge> + '_ {
        self.edges.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn node(&self, id: NodeId) -> Result<&SubsystemNode> {
        self.nodes.get(&id).ok_or(Error::UnknownVertex(id))
    }

    pub fn edge(&self, from: NodeId, to: NodeId) -> Result<&TransitionEdge> {
        self.edges
            .get(&(from, to))
            .ok_or(Error::MissingEdge(from, to))
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.edges.contains_key(&(from, to))
    }

    pub fn out_edges(&self, from: NodeId) -> impl Iterator<Item = &TransitionEdge> + '_ {
        self.edges
            .range((from, NodeId::MIN)..=(from, NodeId::MAX))
            .map(|(_, e)| e)
    }

    pub fn is_unstable(&self, id: NodeId) -> Result<bool> {
        Ok(self.node(id)?.class == StabilityClass::Unstable)
    }

    /// Weight of edge `(from, to)`: the per-edge summand of the contractivity
    /// functional.
    pub fn edge_weight(&self, from: NodeId, to: NodeId) -> Result<f64> {
        let edge = self.edge(from, to)?;
        let node = self.node(from)?;
        Ok(weight_of(node, edge))
    }

    /// Contractivity functional `Xi(W)`: sum of edge weights along the walk,
    /// counting repetitions. The final vertex contributes nothing.
    pub fn xi(&self, walk: &Walk) -> Result<f64> {
        if walk.len() == 0 {
            return Err(Error::ZeroLengthWalk);
        }
        walk.edges().try_fold(0.0, |acc, (k, l)| {
            Ok(acc + self.edge_weight(k, l)?)
        })
    }

    /// `Xi` evaluated from edge counts rather than edge by edge.
    pub fn xi_from_counts(&self, counts: &BTreeMap<(NodeId, NodeId), u64>) -> Result<f64> {
        counts.iter().try_fold(0.0, |acc, (&(k, l), &n)| {
            Ok(acc + self.edge_weight(k, l)? * n as f64)
        })
    }

    pub fn is_contractive(&self, walk: &Walk) -> Result<bool> {
        self.is_contractive_with_margin(walk, DEFAULT_CONTRACTIVE_MARGIN)
    }

    /// A closed walk is contractive when `Xi(W) <= -margin`.
    pub fn is_contractive_with_margin(&self, walk: &Walk, margin: f64) -> Result<bool> {
        if !walk.is_closed() {
            return Err(Error::OpenWalk);
        }
        Ok(self.xi(walk)? <= -margin)
    }

    /// Checks that every consecutive pair of the walk is an edge.
    pub fn validate_walk(&self, walk: &Walk) -> Result<()> {
        for &v in walk.vertices() {
            self.node(v)?;
        }
        for (k, l) in walk.edges() {
            self.edge(k, l)?;
        }
        Ok(())
    }
}

fn weight_of(node: &SubsystemNode, edge: &TransitionEdge) -> f64 {
    match node.class {
        StabilityClass::Stable => edge.mu.ln() - node.log_rate(),
        StabilityClass::Unstable => edge.mu.ln() + node.log_rate(),
    }
}

fn validate_node(node: &SubsystemNode) -> Result<()> {
    let bad = |reason| Error::InvalidLambda {
        id: node.id,
        lambda: node.lambda,
        reason,
    };
    if !node.lambda.is_finite() || node.lambda <= 0.0 {
        return Err(bad("must be finite and positive"));
    }
    if node.lambda == 1.0 {
        return Err(bad("lambda = 1 is neither stable nor unstable"));
    }
    match node.class {
        StabilityClass::Stable if node.lambda > 1.0 => Err(bad("stable node needs lambda < 1")),
        StabilityClass::Unstable if node.lambda < 1.0 => {
            Err(bad("unstable node needs lambda > 1"))
        }
        _ => Ok(()),
    }
}

fn validate_edge(edge: &TransitionEdge) -> Result<()> {
    let bad = |reason| Error::InvalidMu {
        from: edge.from,
        to: edge.to,
        mu: edge.mu,
        reason,
    };
    if !edge.mu.is_finite() || edge.mu <= 0.0 {
        return Err(bad("must be finite and positive"));
    }
    if edge.from == edge.to && edge.mu != 1.0 {
        return Err(bad("self-loop requires mu = 1"));
    }
    Ok(())
}

/// A walk as its vertex sequence `v0, v1, ..., vl`; edges are implied.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Walk {
    vertices: Vec<NodeId>,
}

impl Walk {
    pub fn new(vertices: Vec<NodeId>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::EmptyWalk);
        }
        Ok(Self { vertices })
    }

    /// Builds the walk and checks it against `graph`.
    pub fn on(graph: &SwitchedDigraph, vertices: Vec<NodeId>) -> Result<Self> {
        let walk = Self::new(vertices)?;
        graph.validate_walk(&walk)?;
        Ok(walk)
    }

    pub fn single(v: NodeId) -> Self {
        Self { vertices: vec![v] }
    }

    pub fn vertices(&self) -> &[NodeId] {
        &self.vertices
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn first(&self) -> NodeId {
        self.vertices[0]
    }

    pub fn last(&self) -> NodeId {
        *self.vertices.last().expect("walk is never empty")
    }

    pub fn is_closed(&self) -> bool {
        self.len() >= 1 && self.first() == self.last()
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    /// `#{k -> l}_W`.
    pub fn edge_count(&self, from: NodeId, to: NodeId) -> usize {
        self.edges().filter(|&e| e == (from, to)).count()
    }

    pub fn edge_counts(&self) -> BTreeMap<(NodeId, NodeId), u64> {
        let mut counts = BTreeMap::new();
        for e in self.edges() {
            *counts.entry(e).or_insert(0) += 1;
        }
        counts
    }

    /// Closed walk starting at position `k mod |W|` with the same cyclic
    /// edge sequence.
    pub fn rotate(&self, k: usize) -> Result<Walk> {
        if !self.is_closed() {
            return Err(Error::OpenWalk);
        }
        let n = self.len();
        let k = k % n;
        let cyc = &self.vertices[..n];
        let mut vertices = Vec::with_capacity(n + 1);
        vertices.extend_from_slice(&cyc[k..]);
        vertices.extend_from_slice(&cyc[..k]);
        vertices.push(cyc[k]);
        Ok(Walk { vertices })
    }

    pub fn concat(&self, other: &Walk) -> Result<Walk> {
        if self.last() != other.first() {
            return Err(Error::EndpointMismatch {
                end: self.last(),
                start: other.first(),
            });
        }
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices[1..]);
        Ok(Walk { vertices })
    }

    /// True when no vertex repeats except `first == last`.
    pub fn is_simple_cycle(&self) -> bool {
        if !self.is_closed() {
            return false;
        }
        let body = &self.vertices[..self.len()];
        let mut seen = body.to_vec();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }
}

impl fmt::Display for Walk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.vertices.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Two-mode example: stable 1 (0.815), unstable 2 (1.2), unit mu, dwell on 2.
    pub fn example_graph() -> SwitchedDigraph {
        SwitchedDigraph::new(
            &[SubsystemNode::stable(1, 0.815), SubsystemNode::unstable(2, 1.2)],
            &[
                TransitionEdge::new(1, 2, 1.0),
                TransitionEdge::new(2, 1, 1.0),
                TransitionEdge::new(2, 2, 1.0),
            ],
        )
        .unwrap()
    }

    pub fn walk(v: &[NodeId]) -> Walk {
        Walk::new(v.to_vec()).unwrap()
    }
}
