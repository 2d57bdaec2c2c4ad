//! The five command workflows behind the binary. Each returns a serializable
//! report plus an exit code, and writes its files when given an output
//! directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{ConfigError, SystemConfig};
use crate::cycles::{find_negative_cycle, min_mean_cycle};
use crate::error::Error;
use crate::graph::{NodeId, SwitchedDigraph, Walk};
use crate::lyapunov::{
    psi2_bound, verify_decay, verify_mu, verify_sandwich, LyapunovProfile, PsiParams, SampleSet, VerificationReport,
};
use crate::schedule::PeriodicSignal;
use crate::sim::{batch_simulate, bound_series, check_against_bound, Trajectory, TrajectorySummary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NO_CERTIFICATE: i32 = 3;
pub const EXIT_VIOLATIONS: i32 = 4;

/// Relative rounding slack when comparing `psi2` with its bound.
pub const PSI2_BOUND_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message}")]
pub struct CommandError {
    pub code: i32,
    pub message: String,
}

impl CommandError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        Self { code: EXIT_FAILURE, message: message.into() }
    }

    fn no_certificate(message: impl Into<String>) -> Self {
        Self { code: EXIT_NO_CERTIFICATE, message: message.into() }
    }
}

impl From<ConfigError> for CommandError {
    fn from(e: ConfigError) -> Self {
        Self::input(e.to_string())
    }
}

fn input_err(e: Error) -> CommandError {
    CommandError::input(e.to_string())
}

fn fail_err(e: Error) -> CommandError {
    CommandError::failure(e.to_string())
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CommandError {
    CommandError::failure(format!("{}: {e}", path.display()))
}

pub type CommandResult<T> = std::result::Result<Outcome<T>, CommandError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome<T> {
    pub code: i32,
    pub report: T,
}

/// Command-line overrides of config values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub verify_tol: Option<f64>,
    pub margin: Option<f64>,
    pub horizon: Option<u64>,
    pub t_max: Option<u64>,
    pub signal: Option<PathBuf>,
}

impl Overrides {
    fn margin(&self, cfg: &SystemConfig) -> f64 {
        self.margin.unwrap_or(cfg.tolerances.contractive_margin)
    }

    fn verify_tol(&self, cfg: &SystemConfig) -> f64 {
        self.verify_tol.unwrap_or(cfg.tolerances.verify)
    }
}

fn walk_ids(w: &Walk) -> Vec<NodeId> {
    w.vertices().to_vec()
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CommandError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(&path, e))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| io_err(&path, e))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CommandError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| io_err(&path, e))
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> Result<String, CommandError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CommandError::failure(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| CommandError::failure(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CommandError::failure(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

// ---------------------------------------------------------------- analyze

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeReport {
    pub contractive: bool,
    pub cycle: Option<Vec<NodeId>>,
    pub xi: Option<f64>,
    pub mean: Option<f64>,
    /// Minimum cycle mean; nonnegative values certify that no contractive
    /// walk exists.
    pub min_mean: Option<f64>,
    pub min_mean_cycle: Option<Vec<NodeId>>,
    pub margin: f64,
}

impl AnalyzeReport {
    pub fn human(&self) -> String {
        let mut s = String::new();
        match (&self.cycle, self.xi, self.mean) {
            (Some(c), Some(xi), Some(mean)) if self.contractive => {
                let _ = writeln!(s, "contractive cycle: {}", join(c));
                let _ = writeln!(s, "xi = {xi:.10}");
                let _ = writeln!(s, "mean weight = {mean:.10}");
            }
            _ => {
                let _ = writeln!(s, "no contractive cycle");
                match self.min_mean {
                    Some(m) => {
                        let _ = writeln!(s, "minimum cycle mean = {m:.10}");
                    }
                    None => {
                        let _ = writeln!(s, "graph has no cycles");
                    }
                }
            }
        }
        s
    }
}

fn join(v: &[NodeId]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn analyze(cfg: &SystemConfig, ov: &Overrides, out: Option<&Path>) -> CommandResult<AnalyzeReport> {
    let g = cfg.build_graph().map_err(input_err)?;
    let margin = ov.margin(cfg);
    let mm = min_mean_cycle(&g);
    let found = find_negative_cycle(&g).filter(|r| r.xi_value <= -margin);
    let report = AnalyzeReport {
        contractive: found.is_some(),
        cycle: found.as_ref().map(|r| walk_ids(&r.cycle)),
        xi: found.as_ref().map(|r| r.xi_value),
        mean: found.as_ref().map(|r| r.mean_weight),
        min_mean: mm.as_ref().map(|r| r.mean_weight),
        min_mean_cycle: mm.as_ref().map(|r| walk_ids(&r.cycle)),
        margin,
    };
    if let Some(dir) = out {
        write_json(dir, "analyze.json", &report)?;
    }
    let code = if report.contractive { EXIT_OK } else { EXIT_NO_CERTIFICATE };
    Ok(Outcome { code, report })
}

// ---------------------------------------------------------------- base walk

/// Base walk for signal-driven commands: a `--signal` file, else the
/// config's `[signal]` block, else a freshly found contractive cycle.
fn base_walk(cfg: &SystemConfig, ov: &Overrides, g: &SwitchedDigraph) -> Result<(Walk, f64), CommandError> {
    let margin = ov.margin(cfg);
    let w = if let Some(path) = &ov.signal {
        read_signal_file(path)?.0
    } else if let Some(w) = cfg.fixed_walk() {
        w.map_err(input_err)?
    } else {
        return find_negative_cycle(g)
            .filter(|r| r.xi_value <= -margin)
            .map(|r| (r.cycle, r.xi_value))
            .ok_or_else(|| CommandError::no_certificate("no contractive cycle"));
    };
    g.validate_walk(&w).map_err(input_err)?;
    if !w.is_closed() {
        return Err(CommandError::input(format!("base walk {w} is not closed")));
    }
    let xi = g.xi(&w).map_err(input_err)?;
    if xi > -margin {
        return Err(CommandError::no_certificate(format!("base walk {w} is not contractive (xi = {xi})")));
    }
    Ok((w, xi))
}

/// Reads a file written by [`synthesize`]: the base walk from its
/// `# base_walk=` header, checked against the listed values.
pub fn read_signal_file(path: &Path) -> Result<(Walk, Vec<NodeId>), CommandError> {
    let text = fs::read_to_string(path).map_err(|e| CommandError::input(format!("{}: {e}", path.display())))?;
    let bad = |msg: String| CommandError::input(format!("{}: {msg}", path.display()));
    let base: Vec<NodeId> = text
        .lines()
        .find_map(|l| l.strip_prefix("# base_walk="))
        .ok_or_else(|| bad("missing '# base_walk=' header".into()))?
        .split(',')
        .map(|s| s.trim().parse::<NodeId>().map_err(|e| bad(format!("bad base walk entry {s:?}: {e}"))))
        .collect::<Result<_, _>>()?;
    let walk = Walk::new(base).map_err(|e| bad(e.to_string()))?;
    let signal = PeriodicSignal::from_closed_walk(walk.clone()).map_err(|e| bad(e.to_string()))?;

    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let mut values = Vec::new();
    for (row, rec) in reader.deserialize::<(u64, NodeId)>().enumerate() {
        let (t, sigma) = rec.map_err(|e| bad(e.to_string()))?;
        if t != row as u64 {
            return Err(bad(format!("row {row} has t = {t}")));
        }
        if sigma != signal.at(t) {
            return Err(bad(format!("sigma({t}) = {sigma} does not repeat the base walk")));
        }
        values.push(sigma);
    }
    Ok((walk, values))
}

// ---------------------------------------------------------------- synthesize

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesizeReport {
    pub base_walk: Vec<NodeId>,
    pub xi: f64,
    pub horizon: u64,
    pub values: Vec<NodeId>,
}

impl SynthesizeReport {
    pub fn to_csv(&self) -> Result<String, CommandError> {
        let rows: Vec<Vec<String>> =
            self.values.iter().enumerate().map(|(t, v)| vec![t.to_string(), v.to_string()]).collect();
        let body = csv_text(&["t".into(), "sigma".into()], &rows)?;
        Ok(format!("# base_walk={}\n# xi={}\n{body}", join(&self.base_walk), self.xi))
    }

    pub fn human(&self) -> String {
        format!(
            "base walk: {}\nxi = {:.10}\nsigma(0..{}) = {}\n",
            join(&self.base_walk),
            self.xi,
            self.horizon,
            join(&self.values)
        )
    }
}

pub fn synthesize(cfg: &SystemConfig, ov: &Overrides, out: Option<&Path>) -> CommandResult<SynthesizeReport> {
    let g = cfg.build_graph().map_err(input_err)?;
    let horizon = ov
        .horizon
        .or(cfg.simulation.as_ref().map(|s| s.horizon))
        .ok_or_else(|| CommandError::input("no horizon given"))?;
    if horizon == 0 {
        return Err(CommandError::input("horizon must be at least 1"));
    }
    let (w, xi) = base_walk(cfg, ov, &g)?;
    let signal = PeriodicSignal::from_closed_walk(w.clone()).map_err(input_err)?;
    let report = SynthesizeReport { base_walk: walk_ids(&w), xi, horizon, values: signal.values(horizon) };
    if let Some(dir) = out {
        write_text(dir, "signal.csv", &report.to_csv()?)?;
    }
    Ok(Outcome { code: EXIT_OK, report })
}

// ---------------------------------------------------------------- verify

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub total_violations: usize,
    pub records: Vec<VerificationReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.total_violations == 0
    }

    pub fn human(&self) -> String {
        let mut s = format!("verified on {} samples (seed {})\n", self.samples, self.seed);
        for r in &self.records {
            let _ = writeln!(
                s,
                "{:<10} {:<9} {:>7} violations, max residual {:.3e}",
                r.subsystem,
                r.inequality,
                r.violations.len(),
                r.max_residual
            );
        }
        s
    }
}

fn run_verification(
    cfg: &SystemConfig,
    g: &SwitchedDigraph,
    prof: &LyapunovProfile,
    samples: &SampleSet,
    tol: f64,
) -> Result<VerifyReport, CommandError> {
    let fam = cfg.build_family()?;
    let bounds = samples.bounds.as_ref().expect("config samples carry a box");
    if bounds.state.len() != fam.state_dim() {
        return Err(input_err(Error::DimensionMismatch { expected: fam.state_dim(), got: bounds.state.len() }));
    }
    if bounds.input.len() != fam.input_dim() {
        return Err(input_err(Error::DimensionMismatch { expected: fam.input_dim(), got: bounds.input.len() }));
    }
    let mut records = Vec::new();
    for node in g.nodes() {
        let id = node.id;
        let v = prof.function(id).map_err(input_err)?;
        let map = fam.map(id).map_err(input_err)?;
        let name = format!("f{id}");
        let c = verify_sandwich(v, &prof.alpha_lower, &prof.alpha_upper, samples, tol).map_err(fail_err)?;
        records.push(VerificationReport::new(name.clone(), "sandwich", samples, c));
        let c = verify_decay(|x, u| map.apply(x, u), v, node.lambda, &prof.gamma, samples, tol).map_err(fail_err)?;
        records.push(VerificationReport::new(name, "decay", samples, c));
    }
    for e in g.edges() {
        let c = verify_mu(prof.function(e.from).map_err(input_err)?, prof.function(e.to).map_err(input_err)?, e.mu, samples, tol)
            .map_err(fail_err)?;
        records.push(VerificationReport::new(format!("{}->{}", e.from, e.to), "mu", samples, c));
    }
    Ok(VerifyReport {
        samples: samples.len(),
        seed: samples.seed,
        tolerance: tol,
        total_violations: records.iter().map(|r| r.violations.len()).sum(),
        records,
    })
}

fn verification_inputs(cfg: &SystemConfig, ov: &Overrides) -> Result<(SwitchedDigraph, LyapunovProfile, SampleSet), CommandError> {
    let g = cfg.build_graph().map_err(input_err)?;
    cfg.build_family()?;
    let prof = cfg.build_profile(&g)?;
    let mut cfg_seeded;
    let cfg = match (ov.seed, &cfg.verification) {
        (Some(seed), Some(v)) => {
            cfg_seeded = cfg.clone();
            let mut v = v.clone();
            v.seed = seed;
            cfg_seeded.verification = Some(v);
            &cfg_seeded
        }
        _ => cfg,
    };
    let samples = cfg.build_samples()?;
    Ok((g, prof, samples))
}

pub fn verify(cfg: &SystemConfig, ov: &Overrides, out: Option<&Path>) -> CommandResult<VerifyReport> {
    let (g, prof, samples) = verification_inputs(cfg, ov)?;
    let report = run_verification(cfg, &g, &prof, &samples, ov.verify_tol(cfg))?;
    if let Some(dir) = out {
        write_json(dir, "verify.json", &report)?;
    }
    let code = if report.passed() { EXIT_OK } else { EXIT_VIOLATIONS };
    Ok(Outcome { code, report })
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheckEntry {
    pub index: usize,
    pub ok: bool,
    pub worst_ratio: Option<f64>,
    pub worst_t: Option<u64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationOutcome {
    pub passed: bool,
    pub samples: usize,
    pub total_violations: usize,
    pub failing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateReport {
    pub base_walk: Vec<NodeId>,
    pub xi: f64,
    pub seed: u64,
    pub horizon: u64,
    pub count: usize,
    pub input: String,
    pub diverged: usize,
    pub trajectories: Vec<TrajectorySummary>,
    pub bound_checks: Option<Vec<BoundCheckEntry>>,
    pub all_bounds_ok: Option<bool>,
    pub verification: Option<VerificationOutcome>,
}

impl SimulateReport {
    pub fn human(&self) -> String {
        let mut s = format!(
            "{} trajectories, horizon {}, seed {}, base walk {}\n",
            self.count,
            self.horizon,
            self.seed,
            join(&self.base_walk)
        );
        let sup = self.trajectories.iter().map(|t| t.sup_norm).fold(0.0, f64::max);
        let tail = self.trajectories.iter().map(|t| t.tail_norm).fold(0.0, f64::max);
        let _ = writeln!(s, "max sup-norm {sup:.6e}, max tail-norm {tail:.6e}, diverged {}", self.diverged);
        if let Some(ok) = self.all_bounds_ok {
            let _ = writeln!(s, "certified bound respected by every trajectory: {ok}");
        }
        if let Some(v) = &self.verification {
            let _ = writeln!(s, "sampled verification passed: {} ({} violations)", v.passed, v.total_violations);
        }
        s
    }
}

fn trajectory_csv(tr: &Trajectory, m: usize, bounds: Option<&[f64]>) -> Result<String, CommandError> {
    let d = tr.states[0].len();
    let mut header = vec!["t".to_string(), "sigma".to_string()];
    header.extend((1..=m).map(|i| format!("v{i}")));
    header.extend((1..=d).map(|i| format!("x{i}")));
    header.push("norm".into());
    if bounds.is_some() {
        header.push("bound".into());
    }
    let rows: Vec<Vec<String>> = (0..tr.states.len())
        .map(|t| {
            let mut r = vec![t.to_string()];
            match tr.modes.get(t) {
                Some(i) => {
                    r.push(i.to_string());
                    r.extend(tr.inputs[t].iter().map(f64::to_string));
                }
                None => r.extend(std::iter::repeat_n(String::new(), 1 + m)),
            }
            r.extend(tr.states[t].iter().map(f64::to_string));
            r.push(tr.norms[t].to_string());
            if let Some(b) = bounds {
                r.push(b[t].to_string());
            }
            r
        })
        .collect();
    csv_text(&header, &rows)
}

pub fn simulate(cfg: &SystemConfig, ov: &Overrides, out: Option<&Path>) -> CommandResult<SimulateReport> {
    let g = cfg.build_graph().map_err(input_err)?;
    let fam = cfg.build_family()?;
    let sim = cfg.simulation()?;
    let seed = ov.seed.unwrap_or(sim.seed);
    let horizon = ov.horizon.unwrap_or(sim.horizon);
    if sim.count == 0 {
        return Err(CommandError::input("simulation count must be at least 1"));
    }
    if horizon == 0 {
        return Err(CommandError::input("horizon must be at least 1"));
    }
    let (w, xi) = base_walk(cfg, ov, &g)?;
    let signal = PeriodicSignal::from_closed_walk(w.clone()).map_err(input_err)?;
    let input = sim.input.signal(seed);
    let batch = batch_simulate(&fam, &signal, &cfg.x0_box()?, sim.count, &input, horizon, seed).map_err(|e| match e {
        Error::NonFinite { .. } => fail_err(e),
        other => input_err(other),
    })?;

    let profile = match &cfg.profile {
        Some(_) => Some(cfg.build_profile(&g)?),
        None => None,
    };
    let psi = PsiParams::new(&g, signal).map_err(input_err)?;
    let mut bound_checks = None;
    let mut bound_cols: Vec<Option<Vec<f64>>> = vec![None; batch.trajectories.len()];
    if let Some(prof) = &profile {
        let mut checks = Vec::new();
        for (i, tr) in batch.trajectories.iter().enumerate() {
            bound_cols[i] = Some(bound_series(tr, prof, &psi));
            checks.push(match check_against_bound(tr, prof, &psi) {
                Ok(c) => BoundCheckEntry { index: i, ok: c.ok, worst_ratio: Some(c.worst_ratio), worst_t: Some(c.worst_t), error: None },
                Err(e) => BoundCheckEntry { index: i, ok: false, worst_ratio: None, worst_t: None, error: Some(e.to_string()) },
            });
        }
        bound_checks = Some(checks);
    }
    let verification = match (&profile, &cfg.verification) {
        (Some(prof), Some(_)) => {
            let samples = cfg.build_samples()?;
            let r = run_verification(cfg, &g, prof, &samples, ov.verify_tol(cfg))?;
            Some(VerificationOutcome {
                passed: r.passed(),
                samples: r.samples,
                total_violations: r.total_violations,
                failing: r
                    .records
                    .iter()
                    .filter(|x| !x.violations.is_empty())
                    .map(|x| format!("{} {}", x.subsystem, x.inequality))
                    .collect(),
            })
        }
        _ => None,
    };
    let report = SimulateReport {
        base_walk: walk_ids(&w),
        xi,
        seed,
        horizon,
        count: sim.count,
        input: serde_json::to_string(&sim.input).expect("input config serializes"),
        diverged: batch.summaries.iter().filter(|s| s.diverged).count(),
        all_bounds_ok: bound_checks.as_ref().map(|c| c.iter().all(|e| e.ok)),
        bound_checks,
        trajectories: batch.summaries,
        verification,
    };
    if let Some(dir) = out {
        let width = (sim.count - 1).to_string().len().max(3);
        for (i, tr) in batch.trajectories.iter().enumerate() {
            let text = trajectory_csv(tr, fam.input_dim(), bound_cols[i].as_deref())?;
            write_text(dir, &format!("trajectory_{i:0width$}.csv"), &text)?;
        }
        write_json(dir, "summary.json", &report)?;
    }
    Ok(Outcome { code: EXIT_OK, report })
}

// ---------------------------------------------------------------- bound

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRow {
    pub t: u64,
    pub psi1: f64,
    pub psi2: f64,
    pub state_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub base_walk: Vec<NodeId>,
    pub xi: f64,
    pub x0_norm: f64,
    pub v_sup: f64,
    pub psi2_bound: f64,
    pub psi2_within_bound: bool,
    pub rows: Vec<BoundRow>,
}

impl BoundReport {
    pub fn to_csv(&self) -> Result<String, CommandError> {
        let header: Vec<String> = ["t", "psi1", "psi2", "state_bound"].iter().map(|s| s.to_string()).collect();
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| vec![r.t.to_string(), r.psi1.to_string(), r.psi2.to_string(), r.state_bound.to_string()])
            .collect();
        csv_text(&header, &rows)
    }

    pub fn human(&self) -> String {
        let mut s = format!(
            "base walk {}, xi = {:.10}, psi2 bound = {:.6}\n{:>6} {:>14} {:>14} {:>14}\n",
            join(&self.base_walk),
            self.xi,
            self.psi2_bound,
            "t",
            "psi1",
            "psi2",
            "bound"
        );
        for r in &self.rows {
            let _ = writeln!(s, "{:>6} {:>14.8} {:>14.8} {:>14.8}", r.t, r.psi1, r.psi2, r.state_bound);
        }
        s
    }
}

pub fn bound(cfg: &SystemConfig, ov: &Overrides, out: Option<&Path>) -> CommandResult<BoundReport> {
    let g = cfg.build_graph().map_err(input_err)?;
    let prof = cfg.build_profile(&g)?;
    let b = cfg.bound.ok_or(ConfigError::Missing("bound"))?;
    if !(b.x0_norm >= 0.0 && b.v_sup >= 0.0) {
        return Err(CommandError::input("x0_norm and v_sup must be nonnegative"));
    }
    let t_max = ov.t_max.unwrap_or(b.t_max);
    let (w, xi) = base_walk(cfg, ov, &g)?;
    let cap = psi2_bound(&w, &g).map_err(|e| match e {
        Error::NotContractive(_) => CommandError::no_certificate(e.to_string()),
        other => input_err(other),
    })?;
    let psi = PsiParams::new(&g, PeriodicSignal::from_closed_walk(w.clone()).map_err(input_err)?).map_err(input_err)?;
    let rows: Vec<BoundRow> = (0..=t_max)
        .map(|t| BoundRow {
            t,
            psi1: psi.psi1(t),
            psi2: psi.psi2(t),
            state_bound: psi.certified_state_bound(t, b.x0_norm, b.v_sup, &prof),
        })
        .collect();
    let report = BoundReport {
        base_walk: walk_ids(&w),
        xi,
        x0_norm: b.x0_norm,
        v_sup: b.v_sup,
        psi2_bound: cap,
        psi2_within_bound: rows.iter().all(|r| r.psi2 <= cap * (1.0 + PSI2_BOUND_RTOL)),
        rows,
    };
    if let Some(dir) = out {
        write_text(dir, "bound.csv", &report.to_csv()?)?;
        write_json(dir, "bound.json", &report)?;
    }
    let code = if report.psi2_within_bound { EXIT_OK } else { EXIT_VIOLATIONS };
    Ok(Outcome { code, report })
}
