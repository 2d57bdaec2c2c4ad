//! Python bindings: graph analysis, periodic signals, the psi quantities and
//! a scalar simulator.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use contrawalk::cycles::{self, CycleReport, EdgeMultiplicity};
use contrawalk::dynamics::DynamicsFamily;
use contrawalk::graph::{self, NodeId, StabilityClass, SubsystemNode, TransitionEdge, Walk};
use contrawalk::lyapunov::{self, ClassK};
use contrawalk::schedule;
use contrawalk::sim::{self, InputSignal};

fn py_err(e: contrawalk::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn walk(vertices: Vec<NodeId>) -> PyResult<Walk> {
    Walk::new(vertices).map_err(py_err)
}

fn class_k((coef, exponent): (f64, f64)) -> PyResult<ClassK> {
    ClassK::new(coef, exponent).map_err(py_err)
}

fn report<'py>(py: Python<'py>, r: &CycleReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("cycle", r.cycle.vertices().to_vec())?;
    d.set_item("xi", r.xi_value)?;
    d.set_item("mean", r.mean_weight)?;
    Ok(d)
}

/// Weighted digraph of a switched system.
///
/// `nodes` holds `(id, lambda, class)` with class `"stable"` or
/// `"unstable"`; `edges` holds `(from, to, mu)`.
#[pyclass(name = "SwitchedDigraph", module = "contrawalk", frozen)]
struct PyDigraph {
    inner: graph::SwitchedDigraph,
}

#[pymethods]
impl PyDigraph {
    #[new]
    fn new(nodes: Vec<(NodeId, f64, String)>, edges: Vec<(NodeId, NodeId, f64)>) -> PyResult<Self> {
        let nodes = nodes
            .into_iter()
            .map(|(id, lambda, class)| {
                let class = match class.to_ascii_lowercase().as_str() {
                    "stable" | "s" => StabilityClass::Stable,
                    "unstable" | "u" => StabilityClass::Unstable,
                    other => return Err(PyValueError::new_err(format!("unknown class {other:?}"))),
                };
                Ok(SubsystemNode::new(id, lambda, class))
            })
            .collect::<PyResult<Vec<_>>>()?;
        let edges: Vec<TransitionEdge> = edges.into_iter().map(|(a, b, mu)| TransitionEdge::new(a, b, mu)).collect();
        Ok(Self { inner: graph::SwitchedDigraph::new(&nodes, &edges).map_err(py_err)? })
    }

    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn edge_weight(&self, from: NodeId, to: NodeId) -> PyResult<f64> {
        self.inner.edge_weight(from, to).map_err(py_err)
    }

    fn xi(&self, vertices: Vec<NodeId>) -> PyResult<f64> {
        self.inner.xi(&walk(vertices)?).map_err(py_err)
    }

    #[pyo3(signature = (vertices, margin = graph::DEFAULT_CONTRACTIVE_MARGIN))]
    fn is_contractive(&self, vertices: Vec<NodeId>, margin: f64) -> PyResult<bool> {
        self.inner.is_contractive_with_margin(&walk(vertices)?, margin).map_err(py_err)
    }

    fn find_negative_cycle<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyDict>>> {
        cycles::find_negative_cycle(&self.inner).map(|r| report(py, &r)).transpose()
    }

    fn min_mean_cycle<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyDict>>> {
        cycles::min_mean_cycle(&self.inner).map(|r| report(py, &r)).transpose()
    }

    fn simple_cycles(&self) -> Vec<Vec<NodeId>> {
        cycles::enumerate_simple_cycles(&self.inner).iter().map(|w| w.vertices().to_vec()).collect()
    }

    /// Closed walk using each edge `(from, to)` exactly `counts[(from, to)]`
    /// times.
    fn assemble_circuit(&self, counts: BTreeMap<(NodeId, NodeId), u64>) -> PyResult<Vec<NodeId>> {
        let m = EdgeMultiplicity { counts };
        Ok(cycles::assemble_circuit(&self.inner, &m).map_err(py_err)?.vertices().to_vec())
    }

    fn psi2_bound(&self, vertices: Vec<NodeId>) -> PyResult<f64> {
        lyapunov::psi2_bound(&walk(vertices)?, &self.inner).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("SwitchedDigraph(nodes={}, edges={})", self.inner.node_count(), self.inner.edge_count())
    }
}

/// Signal repeating a closed walk.
#[pyclass(name = "PeriodicSignal", module = "contrawalk", frozen)]
struct PySignal {
    inner: schedule::PeriodicSignal,
}

#[pymethods]
impl PySignal {
    #[new]
    fn new(vertices: Vec<NodeId>) -> PyResult<Self> {
        Ok(Self { inner: schedule::PeriodicSignal::from_closed_walk(walk(vertices)?).map_err(py_err)? })
    }

    #[getter]
    fn period(&self) -> usize {
        self.inner.period()
    }

    fn at(&self, t: u64) -> NodeId {
        self.inner.at(t)
    }

    fn values(&self, horizon: u64) -> Vec<NodeId> {
        self.inner.values(horizon)
    }

    fn switching_instants(&self, horizon: u64) -> PyResult<Vec<u64>> {
        Ok(self.inner.switching_record(horizon).map_err(py_err)?.instants)
    }

    fn switch_count(&self, s: u64, t: u64) -> PyResult<u64> {
        self.inner.switch_count(s, t).map_err(py_err)
    }
}

/// `psi1`, `psi2` and the certified state bound for a signal on a graph.
#[pyclass(name = "PsiParams", module = "contrawalk", frozen)]
struct PyPsi {
    inner: lyapunov::PsiParams,
}

#[pymethods]
impl PyPsi {
    #[new]
    fn new(graph: PyRef<'_, PyDigraph>, vertices: Vec<NodeId>) -> PyResult<Self> {
        let signal = schedule::PeriodicSignal::from_closed_walk(walk(vertices)?).map_err(py_err)?;
        Ok(Self { inner: lyapunov::PsiParams::new(&graph.inner, signal).map_err(py_err)? })
    }

    fn psi1(&self, t: u64) -> f64 {
        self.inner.psi1(t)
    }

    fn psi2(&self, t: u64) -> f64 {
        self.inner.psi2(t)
    }

    fn g(&self, s: u64, t: u64) -> PyResult<f64> {
        self.inner.g_decomposition(s, t).map_err(py_err)
    }

    /// Class-K functions are `(coef, exponent)` power laws.
    #[pyo3(signature = (t, x0_norm, v_sup, alpha_lower = (1.0, 1.0), alpha_upper = (1.0, 1.0), gamma = (1.0, 1.0)))]
    fn certified_state_bound(
        &self,
        t: u64,
        x0_norm: f64,
        v_sup: f64,
        alpha_lower: (f64, f64),
        alpha_upper: (f64, f64),
        gamma: (f64, f64),
    ) -> PyResult<f64> {
        let (lo, hi, g) = (class_k(alpha_lower)?, class_k(alpha_upper)?, class_k(gamma)?);
        Ok(lo.inverse(self.inner.psi1(t) * hi.eval(x0_norm) + g.eval(v_sup) * self.inner.psi2(t)))
    }
}

/// Simulates `x(t+1) = a_{sigma(t)} x(t) + v(t)` under the signal repeating
/// `vertices`, one step per entry of `inputs`; returns the states.
#[pyfunction]
fn simulate_scalar(coefs: BTreeMap<NodeId, f64>, vertices: Vec<NodeId>, x0: f64, inputs: Vec<f64>) -> PyResult<Vec<f64>> {
    let coefs: Vec<(NodeId, f64)> = coefs.into_iter().collect();
    let fam = DynamicsFamily::scalar(&coefs).map_err(py_err)?;
    let signal = schedule::PeriodicSignal::from_closed_walk(walk(vertices)?).map_err(py_err)?;
    let horizon = inputs.len() as u64;
    let input = InputSignal::Explicit { values: inputs.into_iter().map(|v| vec![v]).collect() };
    let tr = sim::simulate(&fam, &signal, &[x0], &input, horizon).map_err(py_err)?;
    Ok(tr.states.into_iter().map(|s| s[0]).collect())
}

#[pymodule(name = "contrawalk")]
fn contrawalk_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDigraph>()?;
    m.add_class::<PySignal>()?;
    m.add_class::<PyPsi>()?;
    m.add_function(wrap_pyfunction!(simulate_scalar, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
