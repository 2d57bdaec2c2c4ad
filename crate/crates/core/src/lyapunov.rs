//! Lyapunov certificates: sampled checks of the sandwich, decay and
//! comparison inequalities, the state-propagation factor `psi1`, the
//! input-accumulation factor `psi2`, its closed-form bound for periodic
//! signals, and the resulting certified bound on `||x(t)||`.
//!
//! Sampling can refute an inequality but never prove it: an empty violation
//! list means "holds on these samples", nothing more.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{NodeId, StabilityClass, SwitchedDigraph, Walk};
use crate::schedule::PeriodicSignal;

/// Default absolute tolerance on verification residuals.
pub const DEFAULT_VERIFY_TOL: f64 = 1e-9;

/// Power-law comparison function `s -> coef * s^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassK {
    pub coef: f64,
    pub exponent: f64,
}

impl ClassK {
    pub fn new(coef: f64, exponent: f64) -> Result<Self> {
        if !(coef > 0.0 && coef.is_finite()) {
            return Err(invalid("coef", format!("{coef} is not a finite positive number")));
        }
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(invalid("exponent", format!("{exponent} is not a finite positive number")));
        }
        Ok(Self { coef, exponent })
    }

    pub fn identity() -> Self {
        Self { coef: 1.0, exponent: 1.0 }
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        self.coef * s.powf(self.exponent)
    }

    pub fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        (y / self.coef).powf(1.0 / self.exponent)
    }
}

/// Input gain shared by the whole family: the pointwise maximum of the
/// per-subsystem gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Gain {
    terms: Vec<ClassK>,
}

impl Gain {
    pub fn new(terms: Vec<ClassK>) -> Result<Self> {
        if terms.is_empty() {
            return Err(invalid("gamma", "at least one gain term is required"));
        }
        Ok(Self { terms })
    }

    pub fn single(k: ClassK) -> Self {
        Self { terms: vec![k] }
    }

    pub fn terms(&self) -> &[ClassK] {
        &self.terms
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.terms.iter().map(|k| k.eval(s)).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LyapunovFunction {
    /// `x' P x` with `P` symmetric positive definite.
    Quadratic { matrix: Vec<Vec<f64>> },
    /// `coef * |x|` on scalar states.
    Abs { coef: f64 },
}

impl LyapunovFunction {
    pub fn quadratic(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let f = Self::Quadratic { matrix };
        f.validate()?;
        Ok(f)
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| if i == j { diag[i] } else { 0.0 }).collect())
            .collect();
        Self::quadratic(matrix)
    }

    pub fn abs(coef: f64) -> Result<Self> {
        let f = Self::Abs { coef };
        f.validate()?;
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Quadratic { matrix } => matrix.len(),
            Self::Abs { .. } => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Abs { coef } => {
                if !(*coef > 0.0 && coef.is_finite()) {
                    return Err(invalid("coef", "absolute-value Lyapunov function needs coef > 0"));
                }
            }
            Self::Quadratic { matrix } => {
                let n = matrix.len();
                if n == 0 || matrix.iter().any(|row| row.len() != n) {
                    return Err(invalid("matrix", "must be square and nonempty"));
                }
                for i in 0..n {
                    for j in 0..n {
                        if !matrix[i][j].is_finite() || matrix[i][j] != matrix[j][i] {
                            return Err(invalid("matrix", "must be finite and symmetric"));
                        }
                    }
                }
                if !is_positive_definite(matrix) {
                    return Err(invalid("matrix", "must be positive definite"));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Self::Abs { coef } => coef * x[0].abs(),
            Self::Quadratic { matrix } => matrix
                .iter()
                .zip(x)
                .map(|(row, xi)| xi * row.iter().zip(x).map(|(p, xj)| p * xj).sum::<f64>())
                .sum(),
        }
    }
}

fn is_positive_definite(m: &[Vec<f64>]) -> bool {
    // Cholesky without storing the factor's transpose.
    let n = m.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = m[i][i] - s;
                if d <= 0.0 {
                    return false;
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (m[i][j] - s) / l[j][j];
            }
        }
    }
    true
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub state: Vec<f64>,
    pub input: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub state: Vec<(f64, f64)>,
    pub input: Vec<(f64, f64)>,
}

/// Deterministic grid over the state box plus seeded uniform points over
/// state x input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub bounds: Option<SampleBox>,
    pub grid_per_axis: usize,
    pub random_count: usize,
    pub seed: u64,
    pub points: Vec<Sample>,
}

impl SampleSet {
    /// Grid points take the input closest to zero inside the input box;
    /// random points draw state and input uniformly.
    pub fn grid_and_random(
        bounds: SampleBox,
        grid_per_axis: usize,
        random_count: usize,
        seed: u64,
    ) -> Result<Self> {
        for &(lo, hi) in bounds.state.iter().chain(&bounds.input) {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(invalid("box", format!("bad interval [{lo}, {hi}]")));
            }
        }
        if bounds.state.is_empty() {
            return Err(invalid("box", "state box must have at least one axis"));
        }
        let mut points = Vec::new();
        if grid_per_axis > 0 {
            let input: Vec<f64> = bounds.input.iter().map(|&(lo, hi)| 0.0f64.clamp(lo, hi)).collect();
            let axes: Vec<Vec<f64>> = bounds
                .state
                .iter()
                .map(|&(lo, hi)| linspace(lo, hi, grid_per_axis))
                .collect();
            let total = grid_per_axis.pow(axes.len() as u32);
            for mut idx in 0..total {
                let mut state = Vec::with_capacity(axes.len());
                for axis in &axes {
                    state.push(axis[idx % grid_per_axis]);
                    idx /= grid_per_axis;
                }
                points.push(Sample {
                    state,
                    input: input.clone(),
                });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..random_count {
            let state = bounds.state.iter().map(|&(lo, hi)| uniform(&mut rng, lo, hi)).collect();
            let input = bounds.input.iter().map(|&(lo, hi)| uniform(&mut rng, lo, hi)).collect();
            points.push(Sample { state, input });
        }
        if points.is_empty() {
            return Err(invalid("samples", "sample set is empty"));
        }
        Ok(Self {
            bounds: Some(bounds),
            grid_per_axis,
            random_count,
            seed,
            points,
        })
    }

    pub fn from_points(points: Vec<Sample>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("samples", "sample set is empty"));
        }
        Ok(Self {
            bounds: None,
            grid_per_axis: 0,
            random_count: 0,
            seed: 0,
            points,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub(crate) fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { hi } else { lo + step * i as f64 }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub state: Vec<f64>,
    pub input: Vec<f64>,
    pub residual: f64,
}

/// Outcome of one sampled inequality check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub violations: Vec<Violation>,
    pub max_residual: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluates `residual(sample)` on every sample in parallel; violations are
/// the samples with residual above `tol`, in sample order.
fn run_check<F>(samples: &SampleSet, tol: f64, residual: F) -> Result<Check>
where
    F: Fn(&Sample) -> Result<f64> + Sync,
{
    let residuals: Vec<f64> = samples
        .points
        .par_iter()
        .map(&residual)
        .collect::<Result<Vec<_>>>()?;
    let violations = residuals
        .iter()
        .enumerate()
        .filter(|(_, &r)| r > tol)
        .map(|(index, &residual)| Violation {
            index,
            state: samples.points[index].state.clone(),
            input: samples.points[index].input.clone(),
            residual,
        })
        .collect();
    let max_residual = residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Check {
        violations,
        max_residual,
    })
}

fn finite(x: f64, what: &str, s: &Sample) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite {
            context: format!("{what} at state {:?}, input {:?}", s.state, s.input),
        })
    }
}

/// Decay inequality `V(f(x, v)) <= lambda V(x) + gamma(|v|)`.
pub fn verify_decay<F>(
    f: F,
    v: &LyapunovFunction,
    lambda: f64,
    gamma: &Gain,
    samples: &SampleSet,
    tol: f64,
) -> Result<Check>
where
    F: Fn(&[f64], &[f64]) -> Vec<f64> + Sync,
{
    run_check(samples, tol, |s| {
        let next = f(&s.state, &s.input);
        if next.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("dynamics output at state {:?}, input {:?}", s.state, s.input),
            });
        }
        let r = v.eval(&next) - lambda * v.eval(&s.state) - gamma.eval(norm(&s.input));
        finite(r, "decay residual", s)
    })
}

/// Sandwich `alpha_lower(|x|) <= V(x) <= alpha_upper(|x|)`; the residual is
/// the larger of the two one-sided excesses.
pub fn verify_sandwich(
    v: &LyapunovFunction,
    alpha_lower: &ClassK,
    alpha_upper: &ClassK,
    samples: &SampleSet,
    tol: f64,
) -> Result<Check> {
    run_check(samples, tol, |s| {
        let n = norm(&s.state);
        let val = v.eval(&s.state);
        let r = (alpha_lower.eval(n) - val).max(val - alpha_upper.eval(n));
        finite(r, "sandwich residual", s)
    })
}

/// Comparison `V_j(x) <= mu V_i(x)`.
pub fn verify_mu(
    v_from: &LyapunovFunction,
    v_to: &LyapunovFunction,
    mu: f64,
    samples: &SampleSet,
    tol: f64,
) -> Result<Check> {
    run_check(samples, tol, |s| {
        let r = v_to.eval(&s.state) - mu * v_from.eval(&s.state);
        finite(r, "comparison residual", s)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub lambda_hat: f64,
    pub gamma_hat: ClassK,
}

/// Smallest `lambda` and power-law `gamma` (fixed exponent) consistent with
/// the decay inequality on the samples.
pub fn fit_rates<F>(
    f: F,
    v: &LyapunovFunction,
    samples: &SampleSet,
    gamma_exponent: f64,
) -> Result<RateFit>
where
    F: Fn(&[f64], &[f64]) -> Vec<f64> + Sync,
{
    if !(gamma_exponent > 0.0) {
        return Err(invalid("gamma_exponent", "must be positive"));
    }
    let mut lambda_hat = f64::NEG_INFINITY;
    for s in &samples.points {
        let vx = v.eval(&s.state);
        if norm(&s.input) == 0.0 && vx > 0.0 {
            let ratio = v.eval(&f(&s.state, &s.input)) / vx;
            lambda_hat = lambda_hat.max(finite(ratio, "decay ratio", s)?);
        }
    }
    if lambda_hat == f64::NEG_INFINITY {
        return Err(invalid(
            "samples",
            "need at least one sample with zero input and nonzero state",
        ));
    }
    let mut coef: f64 = 0.0;
    for s in &samples.points {
        let n = norm(&s.input);
        if n > 0.0 {
            let excess = v.eval(&f(&s.state, &s.input)) - lambda_hat * v.eval(&s.state);
            coef = coef.max(finite(excess / n.powf(gamma_exponent), "gain ratio", s)?);
        }
    }
    Ok(RateFit {
        lambda_hat,
        gamma_hat: ClassK {
            coef: coef.max(f64::MIN_POSITIVE),
            exponent: gamma_exponent,
        },
    })
}

/// Lyapunov data for a whole family. Rates and comparison factors are taken
/// from the graph so the two always agree.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovProfile {
    pub functions: BTreeMap<NodeId, LyapunovFunction>,
    pub alpha_lower: ClassK,
    pub alpha_upper: ClassK,
    pub gamma: Gain,
    pub lambdas: BTreeMap<NodeId, f64>,
    pub mus: BTreeMap<(NodeId, NodeId), f64>,
}

impl LyapunovProfile {
    pub fn new(
        g: &SwitchedDigraph,
        functions: BTreeMap<NodeId, LyapunovFunction>,
        alpha_lower: ClassK,
        alpha_upper: ClassK,
        gamma: Gain,
    ) -> Result<Self> {
        for id in g.node_ids() {
            if !functions.contains_key(&id) {
                return Err(invalid("profile", format!("no Lyapunov function for node {id}")));
            }
        }
        for (id, f) in &functions {
            g.node(*id)?;
            f.validate()?;
        }
        let dims: BTreeSet<usize> = functions.values().map(LyapunovFunction::dim).collect();
        if dims.len() > 1 {
            return Err(invalid("profile", "Lyapunov functions disagree on state dimension"));
        }
        Ok(Self {
            functions,
            alpha_lower,
            alpha_upper,
            gamma,
            lambdas: g.nodes().map(|n| (n.id, n.lambda)).collect(),
            mus: g.edges().map(|e| ((e.from, e.to), e.mu)).collect(),
        })
    }

    pub fn function(&self, id: NodeId) -> Result<&LyapunovFunction> {
        self.functions.get(&id).ok_or(Error::UnknownSubsystem(id))
    }
}

/// Everything `psi1`/`psi2` need: the signal plus per-mode rates and
/// per-switch factors.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiParams {
    signal: PeriodicSignal,
    lambdas: BTreeMap<NodeId, f64>,
    mus: BTreeMap<(NodeId, NodeId), f64>,
}

/// Maximal constant stretch of the signal: `mode` active on
/// `[start, start + len)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    mode: NodeId,
    len: u64,
}

impl PsiParams {
    pub fn new(g: &SwitchedDigraph, signal: PeriodicSignal) -> Result<Self> {
        g.validate_walk(signal.base())?;
        Ok(Self {
            signal,
            lambdas: g.nodes().map(|n| (n.id, n.lambda)).collect(),
            mus: g.edges().map(|e| ((e.from, e.to), e.mu)).collect(),
        })
    }

    pub fn signal(&self) -> &PeriodicSignal {
        &self.signal
    }

    fn lambda(&self, v: NodeId) -> f64 {
        self.lambdas[&v]
    }

    fn mu(&self, from: NodeId, to: NodeId) -> f64 {
        self.mus[&(from, to)]
    }

    /// Segments between the switching instants in `[1, t - 1]`, the last one
    /// closed at `t`.
    fn segments(&self, t: u64) -> Vec<Segment> {
        if t == 0 {
            return Vec::new();
        }
        let rec = self.signal.switching_record(t).expect("t >= 1");
        let mut ends = rec.instants[1..].to_vec();
        ends.push(t);
        rec.instants
            .iter()
            .zip(&ends)
            .zip(&rec.active)
            .map(|((&start, &end), &mode)| Segment {
                mode,
                len: end - start,
            })
            .collect()
    }

    /// `psi1(t) = prod_i lambda_{sigma(tau_i)}^{tau_{i+1} - tau_i} * prod_i mu_{sigma(tau_i) sigma(tau_{i+1})}`
    /// with `tau_{N+1} := t`; `psi1(0) = 1`.
    pub fn psi1(&self, t: u64) -> f64 {
        let segs = self.segments(t);
        let mut p = 1.0;
        for (i, s) in segs.iter().enumerate() {
            p *= self.lambda(s.mode).powi(s.len as i32);
            if let Some(next) = segs.get(i + 1) {
                p *= self.mu(s.mode, next.mode);
            }
        }
        p
    }

    /// Input accumulation factor:
    /// `psi2(t) = sum_i [prod_{j>i} lambda_j^{L_j}] [prod_{j=i}^{N-1} mu_{j,j+1}] sum_{k<L_i} lambda_i^k`.
    ///
    /// The switch factor leaving segment `i` is part of segment `i`'s term, so
    /// the value coincides with chaining the decay and comparison
    /// inequalities one step at a time. `psi2(0) = 0`.
    pub fn psi2(&self, t: u64) -> f64 {
        let segs = self.segments(t);
        let mut total = 0.0;
        // Running product of everything after segment i.
        let mut tail = 1.0;
        for i in (0..segs.len()).rev() {
            let s = segs[i];
            let lam = self.lambda(s.mode);
            let mut geometric = 0.0;
            let mut pow = 1.0;
            for _ in 0..s.len {
                geometric += pow;
                pow *= lam;
            }
            total += tail * geometric;
            tail *= lam.powi(s.len as i32);
            if i > 0 {
                tail *= self.mu(segs[i - 1].mode, s.mode);
            }
        }
        total
    }

    /// `g(s, t)`: log-growth accumulated over `(s, t]`. Steps `u` in
    /// `[s, t - 1]` contribute `ln lambda_{sigma(u)}`, and switches at instants
    /// in `[s + 1, t - 1]` contribute `ln mu`. So `g(0, t) = ln psi1(t)`, and
    /// over `n` whole periods `g` equals `n * Xi(base)` less the log factor of
    /// the closing edge.
    pub fn g_decomposition(&self, s: u64, t: u64) -> Result<f64> {
        if s > t {
            return Err(Error::InvalidInterval { s, t });
        }
        let mut counts: BTreeMap<NodeId, u64> = BTreeMap::new();
        let mut switches: BTreeMap<(NodeId, NodeId), u64> = BTreeMap::new();
        for u in s..t {
            *counts.entry(self.signal.at(u)).or_default() += 1;
            if u > s && self.signal.is_jump(u) {
                *switches
                    .entry((self.signal.at(u - 1), self.signal.at(u)))
                    .or_default() += 1;
            }
        }
        let mut g = 0.0;
        for (&k, &n) in &counts {
            let lam = self.lambda(k);
            let sign = if lam < 1.0 { -1.0 } else { 1.0 };
            g += sign * lam.ln().abs() * n as f64;
        }
        for (&(m, n), &c) in &switches {
            g += self.mu(m, n).ln() * c as f64;
        }
        Ok(g)
    }

    /// `alpha_lower^{-1}(psi1(t) alpha_upper(|x0|) + gamma(v_sup) psi2(t))`.
    pub fn certified_state_bound(
        &self,
        t: u64,
        x0_norm: f64,
        v_sup: f64,
        prof: &LyapunovProfile,
    ) -> f64 {
        let rhs = self.psi1(t) * prof.alpha_upper.eval(x0_norm)
            + prof.gamma.eval(v_sup) * self.psi2(t);
        prof.alpha_lower.inverse(rhs)
    }
}

/// Closed-form bound on `sup_t psi2(t)` for the signal repeating `base`.
///
/// With `eps = -Xi(base)`, `n = |base|` and `a` the largest
/// `|ln mu_ij + |ln lambda_j||` over edges of `base`, returns
/// `C / (1 - e^{-eps}) * ((n-1) e^{(n-1)a} + (n-2) e^{(n-2)a})` where
/// `C = sum over modes k of base of 1/|1 - lambda_k|`. A length-1 base
/// (a stable self-loop) gives the geometric limit `1 / (1 - lambda)`.
pub fn psi2_bound(base: &Walk, g: &SwitchedDigraph) -> Result<f64> {
    if !base.is_closed() {
        return Err(Error::OpenWalk);
    }
    let xi = g.xi(base)?;
    if !(xi < 0.0) {
        return Err(Error::NotContractive(xi));
    }
    let n = base.len();
    if n == 1 {
        let node = g.node(base.first())?;
        debug_assert_eq!(node.class, StabilityClass::Stable);
        return Ok(1.0 / (1.0 - node.lambda));
    }
    let eps = -xi;
    let mut a: f64 = 0.0;
    for (i, j) in base.edges() {
        let term = g.edge(i, j)?.mu.ln() + g.node(j)?.log_rate();
        a = a.max(term.abs());
    }
    let modes: BTreeSet<NodeId> = base.vertices().iter().copied().collect();
    let mut c = 0.0;
    for m in modes {
        c += 1.0 / (1.0 - g.node(m)?.lambda).abs();
    }
    let n1 = (n - 1) as f64;
    let n2 = n.saturating_sub(2) as f64;
    Ok(c / (1.0 - (-eps).exp()) * (n1 * (n1 * a).exp() + n2 * (n2 * a).exp()))
}

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub subsystem: String,
    pub inequality: String,
    pub samples: usize,
    pub seed: u64,
    pub violations: Vec<Violation>,
    pub max_residual: f64,
}

impl VerificationReport {
    pub fn new(subsystem: String, inequality: &str, samples: &SampleSet, check: Check) -> Self {
        Self {
            subsystem,
            inequality: inequality.to_string(),
            samples: samples.len(),
            seed: samples.seed,
            violations: check.violations,
            max_residual: check.max_residual,
        }
    }
}
