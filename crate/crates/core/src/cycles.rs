//! Contractive cycle and circuit construction.
//!
//! A contractive closed walk exists iff a contractive circuit exists iff a
//! contractive simple cycle exists, and a contractive simple cycle is just a
//! negative cycle under the edge weights of [`SwitchedDigraph::edge_weight`].
//! So detection is negative-cycle detection; no linear program is needed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, SwitchedDigraph, Walk};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub cycle: Walk,
    pub xi_value: f64,
    pub mean_weight: f64,
}

impl CycleReport {
    fn from_cycle(g: &SwitchedDigraph, cycle: Walk) -> Result<Self> {
        let xi_value = g.xi(&cycle)?;
        let mean_weight = xi_value / cycle.len() as f64;
        Ok(Self {
            cycle,
            xi_value,
            mean_weight,
        })
    }
}

/// Edge multiplicities of a candidate circulation (the `eta` vector).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeMultiplicity {
    pub counts: BTreeMap<(NodeId, NodeId), u64>,
}

impl EdgeMultiplicity {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, from: NodeId, to: NodeId, count: u64) -> Self {
        self.counts.insert((from, to), count);
        self
    }

    pub fn of_walk(w: &Walk) -> Self {
        Self {
            counts: w.edge_counts(),
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circulation {
    pub conserved: bool,
    pub xi_total: f64,
}

/// Dense view of the graph: vertices in id order plus weighted edge list.
struct Dense {
    ids: Vec<NodeId>,
    edges: Vec<(usize, usize, f64)>,
}

impl Dense {
    fn new(g: &SwitchedDigraph) -> Self {
        let ids: Vec<NodeId> = g.node_ids().collect();
        let index: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let edges = g
            .edges()
            .map(|e| {
                let w = g.edge_weight(e.from, e.to).expect("edge from graph");
                (index[&e.from], index[&e.to], w)
            })
            .collect();
        Self { ids, edges }
    }

    fn walk(&self, cycle: &[usize]) -> Walk {
        let mut v: Vec<NodeId> = cycle.iter().map(|&i| self.ids[i]).collect();
        v.push(v[0]);
        canonical_rotation(Walk::new(v).expect("nonempty"))
    }
}

/// Rotates a closed walk so it starts at its smallest vertex id; among equal
/// starts, the lexicographically smallest vertex sequence wins.
pub fn canonical_rotation(w: Walk) -> Walk {
    if !w.is_closed() {
        return w;
    }
    (0..w.len())
        .map(|k| w.rotate(k).expect("closed"))
        .min_by(|a, b| a.vertices().cmp(b.vertices()))
        .expect("nonzero length")
}

/// Finds a simple cycle with negative weight (a contractive cycle), if any.
///
/// Label-correcting sweep from a virtual source joined to every vertex by a
/// zero-weight edge; a relaxation in round `|P|` proves a negative cycle,
/// which is recovered from the parent pointers.
pub fn find_negative_cycle(g: &SwitchedDigraph) -> Option<CycleReport> {
    let dense = Dense::new(g);
    let n = dense.ids.len();
    let mut dist = vec![0.0f64; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];

    for round in 1..=n {
        let mut last = None;
        for &(u, v, w) in &dense.edges {
            let cand = dist[u] + w;
            if cand < dist[v] {
                dist[v] = cand;
                parent[v] = Some(u);
                last = Some(v);
            }
        }
        let x = last?;
        if round < n {
            continue;
        }
        if let Some(cycle) = parent_cycle(&parent, x, n) {
            if let Ok(report) = CycleReport::from_cycle(g, dense.walk(&cycle)) {
                if report.xi_value < 0.0 {
                    return Some(report);
                }
            }
        }
    }
    // Round-off can make the sweep flag a cycle whose recomputed weight is
    // not negative; defer to the exact minimum-mean search in that case.
    min_mean_cycle(g).filter(|r| r.xi_value < 0.0)
}

/// Walks parent pointers back `n` steps from `x` (landing on the parent
/// cycle) and returns that cycle in forward order.
fn parent_cycle(parent: &[Option<usize>], x: usize, n: usize) -> Option<Vec<usize>> {
    let mut y = x;
    for _ in 0..n {
        y = parent[y]?;
    }
    let mut cycle = vec![y];
    let mut cur = parent[y]?;
    while cur != y {
        if cycle.len() > n {
            return None;
        }
        cycle.push(cur);
        cur = parent[cur]?;
    }
    cycle.reverse();
    Some(cycle)
}

/// Karp's minimum mean cycle. `None` iff the graph is acyclic.
pub fn min_mean_cycle(g: &SwitchedDigraph) -> Option<CycleReport> {
    let dense = Dense::new(g);
    let n = dense.ids.len();
    // best[k][v]: minimum weight of a walk with exactly k edges ending at v.
    let mut best = vec![vec![f64::INFINITY; n]; n + 1];
    let mut pred = vec![vec![usize::MAX; n]; n + 1];
    best[0].iter_mut().for_each(|d| *d = 0.0);
    for k in 1..=n {
        for &(u, v, w) in &dense.edges {
            let prev = best[k - 1][u];
            if prev.is_finite() && prev + w < best[k][v] {
                best[k][v] = prev + w;
                pred[k][v] = u;
            }
        }
    }

    let mut argmin: Option<(usize, f64)> = None;
    for v in 0..n {
        if !best[n][v].is_finite() {
            continue;
        }
        let worst = (0..n)
            .filter(|&k| best[k][v].is_finite())
            .map(|k| (best[n][v] - best[k][v]) / (n - k) as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        if argmin.is_none_or(|(_, m)| worst < m) {
            argmin = Some((v, worst));
        }
    }
    let (end, _) = argmin?;

    let mut walk = vec![end; n + 1];
    for k in (1..=n).rev() {
        walk[k - 1] = pred[k][walk[k]];
    }

    // Split the n-edge walk into simple cycles; the minimum-mean one is
    // optimal over the whole graph.
    let mut best_report: Option<CycleReport> = None;
    for cycle in simple_cycles_of(&walk) {
        let report = CycleReport::from_cycle(g, dense.walk(&cycle)).ok()?;
        let better = match &best_report {
            None => true,
            Some(b) => {
                report.mean_weight < b.mean_weight
                    || (report.mean_weight == b.mean_weight
                        && report.cycle.vertices() < b.cycle.vertices())
            }
        };
        if better {
            best_report = Some(report);
        }
    }
    best_report
}

fn simple_cycles_of(walk: &[usize]) -> Vec<Vec<usize>> {
    let mut stack: Vec<usize> = Vec::new();
    let mut cycles = Vec::new();
    for &v in walk {
        if let Some(pos) = stack.iter().position(|&x| x == v) {
            cycles.push(stack.split_off(pos));
        }
        stack.push(v);
    }
    cycles
}

pub fn check_circulation(g: &SwitchedDigraph, m: &EdgeMultiplicity) -> Result<Circulation> {
    let mut balance: BTreeMap<NodeId, i128> = BTreeMap::new();
    for (&(from, to), &count) in &m.counts {
        g.edge(from, to)?;
        *balance.entry(from).or_default() += count as i128;
        *balance.entry(to).or_default() -= count as i128;
    }
    let xi_total = g.xi_from_counts(&m.counts)?;
    Ok(Circulation {
        conserved: balance.values().all(|&b| b == 0),
        xi_total,
    })
}

/// Hierholzer's algorithm: a closed walk using each edge exactly as often as
/// its multiplicity says.
pub fn assemble_circuit(g: &SwitchedDigraph, m: &EdgeMultiplicity) -> Result<Walk> {
    let circ = check_circulation(g, m)?;
    if !circ.conserved {
        let mut balance: BTreeMap<NodeId, i128> = BTreeMap::new();
        for (&(from, to), &count) in &m.counts {
            *balance.entry(from).or_default() += count as i128;
            *balance.entry(to).or_default() -= count as i128;
        }
        let bad = balance
            .into_iter()
            .find(|&(_, b)| b != 0)
            .map(|(v, _)| v)
            .expect("unbalanced vertex");
        return Err(Error::NotConserved(bad));
    }
    let total = m.total();
    if total == 0 {
        return Err(Error::EmptyCirculation);
    }

    // Remaining out-edges per vertex, targets in ascending id order.
    let mut remaining: BTreeMap<NodeId, Vec<(NodeId, u64)>> = BTreeMap::new();
    for (&(from, to), &count) in &m.counts {
        if count > 0 {
            remaining.entry(from).or_default().push((to, count));
        }
    }
    let start = *remaining.keys().next().expect("nonzero total");

    let mut stack = vec![start];
    let mut circuit = Vec::with_capacity(total as usize + 1);
    while let Some(&v) = stack.last() {
        let next = remaining.get_mut(&v).and_then(|outs| {
            let slot = outs.iter_mut().find(|(_, c)| *c > 0)?;
            slot.1 -= 1;
            Some(slot.0)
        });
        match next {
            Some(to) => stack.push(to),
            None => circuit.push(stack.pop().expect("nonempty stack")),
        }
    }
    if circuit.len() as u64 != total + 1 {
        return Err(Error::DisconnectedSupport);
    }
    circuit.reverse();
    Walk::new(circuit)
}

/// A contractive circuit, taken to be a contractive simple cycle (every cycle
/// is a circuit).
pub fn find_contractive_circuit(g: &SwitchedDigraph) -> Option<Walk> {
    find_negative_cycle(g).map(|r| r.cycle)
}

/// Every simple cycle of `g` (self-loops included), each once, in canonical
/// rotation. Exponential; meant for small graphs and cross-checks.
pub fn enumerate_simple_cycles(g: &SwitchedDigraph) -> Vec<Walk> {
    let ids: Vec<NodeId> = g.node_ids().collect();
    let mut out = Vec::new();
    for (i, &start) in ids.iter().enumerate() {
        // Only cycles whose smallest vertex is `start`.
        let allowed = &ids[i..];
        let mut path = vec![start];
        extend_paths(g, start, allowed, &mut path, &mut out);
    }
    out
}

fn extend_paths(
    g: &SwitchedDigraph,
    start: NodeId,
    allowed: &[NodeId],
    path: &mut Vec<NodeId>,
    out: &mut Vec<Walk>,
) {
    let last = *path.last().expect("nonempty path");
    for e in g.out_edges(last) {
        if e.to == start {
            let mut v = path.clone();
            v.push(start);
            out.push(Walk::new(v).expect("nonempty"));
        } else if allowed.contains(&e.to) && !path.contains(&e.to) {
            path.push(e.to);
            extend_paths(g, start, allowed, path, out);
            path.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{example_graph, walk};
    use crate::graph::{SubsystemNode, TransitionEdge};

    const XI_EXAMPLE: f64 = -0.022_245_608_947_319_806;
    const W12: f64 = -0.204_567_165_741_274_4;
    const W22: f64 = 0.182_321_556_793_954_6;

    #[test]
    fn negative_cycle_on_example() {
        let g = example_graph();
        let r = find_negative_cycle(&g).unwrap();
        assert_eq!(r.cycle, walk(&[1, 2, 1]));
        assert!((r.xi_value - XI_EXAMPLE).abs() < 1e-12);
        assert_eq!(find_contractive_circuit(&g), Some(walk(&[1, 2, 1])));
    }

    #[test]
    fn no_negative_cycle_when_all_unstable() {
        let g = SwitchedDigraph::new(
            &[SubsystemNode::unstable(1, 1.1), SubsystemNode::unstable(2, 3.0)],
            &[
                TransitionEdge::new(1, 2, 1.0),
                TransitionEdge::new(2, 1, 1.5),
                TransitionEdge::new(1, 1, 1.0),
            ],
        )
        .unwrap();
        assert_eq!(find_negative_cycle(&g), None);
        assert_eq!(find_contractive_circuit(&g), None);
        assert!(min_mean_cycle(&g).unwrap().mean_weight > 0.0);
    }

    #[test]
    fn single_stable_self_loop_is_found() {
        let g = SwitchedDigraph::new(
            &[SubsystemNode::stable(4, 0.3)],
            &[TransitionEdge::new(4, 4, 1.0)],
        )
        .unwrap();
        let r = find_negative_cycle(&g).unwrap();
        assert_eq!(r.cycle, walk(&[4, 4]));
        assert!((r.xi_value + 0.3f64.ln().abs()).abs() < 1e-15);
    }

    #[test]
    fn min_mean_on_example() {
        let g = example_graph();
        // Enumeration: {1,2,1} mean XI/2, {2,2} mean W22 > 0.
        let cycles = enumerate_simple_cycles(&g);
        assert_eq!(cycles, vec![walk(&[1, 2, 1]), walk(&[2, 2])]);
        let r = min_mean_cycle(&g).unwrap();
        assert_eq!(r.cycle, walk(&[1, 2, 1]));
        assert!((r.mean_weight - XI_EXAMPLE / 2.0).abs() < 1e-12);
    }

    #[test]
    fn min_mean_acyclic_and_zero_boundary() {
        let acyclic = SwitchedDigraph::new(
            &[SubsystemNode::stable(1, 0.5), SubsystemNode::unstable(2, 2.0)],
            &[TransitionEdge::new(1, 2, 1.0)],
        )
        .unwrap();
        assert_eq!(min_mean_cycle(&acyclic), None);
        assert_eq!(find_negative_cycle(&acyclic), None);

        // Only cycle 1,2,1 with weight ln 0.5 + ln 2 = 0 exactly.
        let zero = SwitchedDigraph::new(
            &[SubsystemNode::stable(1, 0.5), SubsystemNode::unstable(2, 2.0)],
            &[TransitionEdge::new(1, 2, 1.0), TransitionEdge::new(2, 1, 1.0)],
        )
        .unwrap();
        let r = min_mean_cycle(&zero).unwrap();
        assert_eq!(r.cycle, walk(&[1, 2, 1]));
        assert_eq!(r.mean_weight, 0.0);
        assert_eq!(find_negative_cycle(&zero), None);
    }

    #[test]
    fn circulation_checks() {
        let g = example_graph();
        let eta = EdgeMultiplicity::new().with(1, 2, 1).with(2, 1, 1).with(2, 2, 0);
        let c = check_circulation(&g, &eta).unwrap();
        assert!(c.conserved);
        assert!((c.xi_total - XI_EXAMPLE).abs() < 1e-12);

        let zero = EdgeMultiplicity::new().with(1, 2, 0);
        let c = check_circulation(&g, &zero).unwrap();
        assert!(c.conserved);
        assert_eq!(c.xi_total, 0.0);

        let half = EdgeMultiplicity::new().with(1, 2, 1);
        assert!(!check_circulation(&g, &half).unwrap().conserved);

        let unknown = EdgeMultiplicity::new().with(1, 1, 1);
        assert_eq!(check_circulation(&g, &unknown), Err(Error::MissingEdge(1, 1)));

        // Self-loops never break conservation.
        let looped = EdgeMultiplicity::new().with(2, 2, 7);
        assert!(check_circulation(&g, &looped).unwrap().conserved);
    }

    #[test]
    fn hierholzer_assembly() {
        let g = example_graph();
        let eta = EdgeMultiplicity::new().with(1, 2, 1).with(2, 1, 1);
        assert_eq!(assemble_circuit(&g, &eta).unwrap(), walk(&[1, 2, 1]));

        let looped = EdgeMultiplicity::new().with(2, 2, 1);
        assert_eq!(assemble_circuit(&g, &looped).unwrap(), walk(&[2, 2]));

        let mixed = EdgeMultiplicity::new().with(1, 2, 1).with(2, 1, 1).with(2, 2, 1);
        let w = assemble_circuit(&g, &mixed).unwrap();
        assert_eq!(w, walk(&[1, 2, 2, 1]));
        let xi = g.xi(&w).unwrap();
        assert!((xi - (XI_EXAMPLE + W22)).abs() < 1e-12);
        assert!((g.edge_weight(1, 2).unwrap() - W12).abs() < 1e-12);

        assert_eq!(
            assemble_circuit(&g, &EdgeMultiplicity::new().with(1, 2, 1)),
            Err(Error::NotConserved(1))
        );
        assert_eq!(
            assemble_circuit(&g, &EdgeMultiplicity::new().with(1, 2, 0)),
            Err(Error::EmptyCirculation)
        );
    }

    #[test]
    fn hierholzer_rejects_disconnected_support() {
        let g = SwitchedDigraph::new(
            &[SubsystemNode::stable(1, 0.5), SubsystemNode::stable(2, 0.5)],
            &[TransitionEdge::new(1, 1, 1.0), TransitionEdge::new(2, 2, 1.0)],
        )
        .unwrap();
        let m = EdgeMultiplicity::new().with(1, 1, 1).with(2, 2, 1);
        assert_eq!(assemble_circuit(&g, &m), Err(Error::DisconnectedSupport));
    }

    #[test]
    fn assembled_walk_revalidates() {
        let g = example_graph();
        let m = EdgeMultiplicity::new().with(1, 2, 3).with(2, 1, 3).with(2, 2, 5);
        let w = assemble_circuit(&g, &m).unwrap();
        assert!(w.is_closed());
        assert_eq!(EdgeMultiplicity::of_walk(&w), m);
        let c = check_circulation(&g, &EdgeMultiplicity::of_walk(&w)).unwrap();
        assert!(c.conserved);
        assert!((c.xi_total - g.xi(&w).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn canonical_rotation_picks_smallest_start() {
        assert_eq!(canonical_rotation(walk(&[3, 1, 2, 3])), walk(&[1, 2, 3, 1]));
        assert_eq!(canonical_rotation(walk(&[1, 2])), walk(&[1, 2]));
    }

    #[test]
    fn deterministic_across_runs() {
        let g = example_graph();
        let a = find_negative_cycle(&g);
        let b = find_negative_cycle(&g);
        assert_eq!(a, b);
        assert_eq!(min_mean_cycle(&g), min_mean_cycle(&g));
    }
}
