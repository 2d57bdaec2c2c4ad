//! End-to-end acceptance criteria. Each test prints one `PASS`/`FAIL` line
//! with its runtime; run with `--nocapture` to see them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use contrawalk::cycles::{find_negative_cycle, min_mean_cycle};
use contrawalk::dynamics::{nonlinear_pair_f1, nonlinear_pair_f2, DynamicsFamily};
use contrawalk::graph::{NodeId, SubsystemNode, SwitchedDigraph, TransitionEdge, Walk};
use contrawalk::lyapunov::{
    psi2_bound, verify_decay, ClassK, Gain, LyapunovFunction, LyapunovProfile, PsiParams, SampleBox, SampleSet,
};
use contrawalk::schedule::{AdtParams, PeriodicSignal};
use contrawalk::sim::{batch_simulate, check_against_bound, InputSignal, StateBox};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const XI_PAIR: f64 = -0.022_245_608_947_319_806;

fn criterion(n: u32, name: &str, budget: Duration, body: impl FnOnce() -> Result<(), String>) {
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    let outcome = outcome.and_then(|_| {
        if elapsed <= budget {
            Ok(())
        } else {
            Err(format!("took {elapsed:?}, budget {budget:?}"))
        }
    });
    match &outcome {
        Ok(()) => println!("criterion {n}: PASS  {name} ({:.3}s)", elapsed.as_secs_f64()),
        Err(e) => println!("criterion {n}: FAIL  {name} ({:.3}s): {e}", elapsed.as_secs_f64()),
    }
    if let Err(e) = outcome {
        panic!("criterion {n} failed: {e}");
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn pair_graph() -> SwitchedDigraph {
    SwitchedDigraph::new(
        &[SubsystemNode::stable(1, 0.815), SubsystemNode::unstable(2, 1.2)],
        &[TransitionEdge::new(1, 2, 1.0), TransitionEdge::new(2, 1, 1.0), TransitionEdge::new(2, 2, 1.0)],
    )
    .unwrap()
}

fn pair_signal() -> PeriodicSignal {
    PeriodicSignal::from_closed_walk(Walk::new(vec![1, 2, 1]).unwrap()).unwrap()
}

fn scalar_graph() -> SwitchedDigraph {
    SwitchedDigraph::new(
        &[SubsystemNode::stable(1, 0.5), SubsystemNode::unstable(2, 1.25)],
        &[TransitionEdge::new(1, 2, 1.0), TransitionEdge::new(2, 1, 1.0)],
    )
    .unwrap()
}

fn scalar_family() -> DynamicsFamily {
    DynamicsFamily::scalar(&[(1, 0.5), (2, 1.25)]).unwrap()
}

#[test]
fn criterion_1_cycle_reproduction() {
    criterion(1, "contractive cycle 1,2,1 on the two-mode benchmark", Duration::from_secs(1), || {
        let out = Command::new(env!("CARGO_BIN_EXE_contrawalk"))
            .args(["analyze", "--json"])
            .arg(config("nonlinear_pair.toml"))
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.code() == Some(0), format!("exit status {:?}", out.status))?;
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
        let cycle: Vec<u64> = v["cycle"].as_array().ok_or("no cycle")?.iter().filter_map(|x| x.as_u64()).collect();
        ensure(cycle == [1, 2, 1], format!("cycle {cycle:?}"))?;
        let xi = v["xi"].as_f64().ok_or("no xi")?;
        ensure((xi - -0.0222459).abs() <= 1e-6, format!("xi = {xi}"))
    });
}

/// Exhaustive simple-cycle search written independently of the library.
fn brute_force_cycles(ids: &[NodeId], w: &BTreeMap<(NodeId, NodeId), f64>) -> Vec<(f64, usize)> {
    fn extend(
        start: NodeId,
        path: &mut Vec<NodeId>,
        allowed: &[NodeId],
        w: &BTreeMap<(NodeId, NodeId), f64>,
        out: &mut Vec<(f64, usize)>,
    ) {
        let last = *path.last().unwrap();
        for &next in allowed {
            let Some(_) = w.get(&(last, next)) else { continue };
            if next == start {
                let mut cyc = path.clone();
                cyc.push(start);
                let total: f64 = cyc.windows(2).map(|e| w[&(e[0], e[1])]).sum();
                out.push((total, path.len()));
            } else if !path.contains(&next) {
                path.push(next);
                extend(start, path, allowed, w, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    for (i, &s) in ids.iter().enumerate() {
        extend(s, &mut vec![s], &ids[i..], w, &mut out);
    }
    out
}

#[test]
fn criterion_2_oracle_equivalence() {
    criterion(2, "negative-cycle and min-mean match exhaustive enumeration", Duration::from_secs(5), || {
        let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
        for case in 0..100 {
            let n = rng.gen_range(1..=5u32);
            let nodes: Vec<SubsystemNode> = (1..=n)
                .map(|id| {
                    let mut l: f64 = rng.gen_range(0.2..5.0);
                    while l == 1.0 {
                        l = rng.gen_range(0.2..5.0);
                    }
                    if l < 1.0 {
                        SubsystemNode::stable(id, l)
                    } else {
                        SubsystemNode::unstable(id, l)
                    }
                })
                .collect();
            let mut edges = Vec::new();
            let mut weights = BTreeMap::new();
            for a in 1..=n {
                for b in 1..=n {
                    if rng.gen_bool(0.45) {
                        let mu = if a == b { 1.0 } else { rng.gen_range(0.5..2.0) };
                        edges.push(TransitionEdge::new(a, b, mu));
                        let l: f64 = nodes[(a - 1) as usize].lambda;
                        let sign = if l < 1.0 { -1.0 } else { 1.0 };
                        weights.insert((a, b), mu.ln() + sign * l.ln().abs());
                    }
                }
            }
            let g = SwitchedDigraph::new(&nodes, &edges).map_err(|e| e.to_string())?;
            let ids: Vec<NodeId> = (1..=n).collect();
            let cycles = brute_force_cycles(&ids, &weights);

            let exists = cycles.iter().any(|&(xi, _)| xi < 0.0);
            let found = find_negative_cycle(&g);
            ensure(found.is_some() == exists, format!("case {case}: existence {exists} vs {found:?}"))?;
            if let Some(r) = &found {
                ensure(r.xi_value < 0.0 && r.cycle.is_simple_cycle(), format!("case {case}: bad cycle {:?}", r))?;
            }

            let best = cycles.iter().map(|&(xi, len)| xi / len as f64).fold(f64::INFINITY, f64::min);
            match min_mean_cycle(&g) {
                None => ensure(cycles.is_empty(), format!("case {case}: karp found nothing"))?,
                Some(r) => ensure(
                    (r.mean_weight - best).abs() <= 1e-12,
                    format!("case {case}: mean {} vs {best}", r.mean_weight),
                )?,
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_3_psi1_periodicity() {
    criterion(3, "psi1(2n) = exp(n xi) for n <= 100", Duration::from_secs(1), || {
        let p = PsiParams::new(&pair_graph(), pair_signal()).map_err(|e| e.to_string())?;
        for n in 0..=100u64 {
            let expected = (n as f64 * XI_PAIR).exp();
            let rel = (p.psi1(2 * n) - expected).abs() / expected;
            ensure(rel <= 1e-10, format!("n = {n}: relative error {rel:e}"))?;
        }
        Ok(())
    });
}

#[test]
fn criterion_4_psi2_recursion_and_bound() {
    criterion(4, "psi2 matches one-step recursion and stays below its bound", Duration::from_secs(1), || {
        let g = pair_graph();
        let s = pair_signal();
        let p = PsiParams::new(&g, s.clone()).map_err(|e| e.to_string())?;
        let cap = psi2_bound(s.base(), &g).map_err(|e| e.to_string())?;
        let lambda = |v: NodeId| g.node(v).unwrap().lambda;
        let mut rec = 0.0;
        for t in 0..=1000u64 {
            let direct = p.psi2(t);
            ensure((direct - rec).abs() <= 1e-10 * rec.max(1.0), format!("t = {t}: {direct} vs {rec}"))?;
            ensure(direct <= cap, format!("t = {t}: psi2 = {direct} exceeds bound {cap}"))?;
            let switch = if t >= 1 && s.at(t) != s.at(t - 1) { g.edge(s.at(t - 1), s.at(t)).unwrap().mu } else { 1.0 };
            rec = lambda(s.at(t)) * switch * rec + 1.0;
        }
        Ok(())
    });
}

fn scalar_profile(g: &SwitchedDigraph) -> LyapunovProfile {
    let v = LyapunovFunction::abs(1.0).unwrap();
    LyapunovProfile::new(
        g,
        [(1, v.clone()), (2, v)].into_iter().collect(),
        ClassK::identity(),
        ClassK::identity(),
        Gain::single(ClassK::identity()),
    )
    .unwrap()
}

#[test]
fn criterion_5_verified_family_iss_bound() {
    criterion(5, "scalar family trajectories respect the certified bound", Duration::from_secs(5), || {
        let g = scalar_graph();
        let s = pair_signal();
        let xi = g.xi(s.base()).map_err(|e| e.to_string())?;
        ensure((xi - (-(2f64.ln()) + 1.25f64.ln())).abs() < 1e-12, format!("xi = {xi}"))?;
        ensure((xi - -0.4700036).abs() < 1e-7, format!("xi = {xi}"))?;
        let p = PsiParams::new(&g, s.clone()).map_err(|e| e.to_string())?;
        let prof = scalar_profile(&g);
        let input = InputSignal::Uniform { bounds: vec![(0.0, 1.0)], seed: 0 };
        let batch = batch_simulate(&scalar_family(), &s, &StateBox(vec![(-100.0, 100.0)]), 50, &input, 200, 5)
            .map_err(|e| e.to_string())?;
        for (i, tr) in batch.trajectories.iter().enumerate() {
            let c = check_against_bound(tr, &prof, &p).map_err(|e| e.to_string())?;
            ensure(c.ok && c.worst_ratio <= 1.0 + 1e-8, format!("trajectory {i}: {c:?}"))?;
        }
        Ok(())
    });
}

#[test]
fn criterion_6_gas_specialization() {
    criterion(6, "zero-input trajectories decay to 1e-12 relative", Duration::from_secs(2), || {
        let batch = batch_simulate(
            &scalar_family(),
            &pair_signal(),
            &StateBox(vec![(-100.0, 100.0)]),
            50,
            &InputSignal::Zero,
            200,
            6,
        )
        .map_err(|e| e.to_string())?;
        for (i, tr) in batch.trajectories.iter().enumerate() {
            let x0 = tr.states[0][0].abs();
            let last = tr.states[200][0].abs();
            ensure(last <= 1e-12 * x0.max(1.0), format!("trajectory {i}: |x(200)| = {last:e}"))?;
        }
        Ok(())
    });
}

#[test]
fn criterion_7_sampled_verification() {
    criterion(7, "decay verified for mode 1, refuted near (pi/2, 0) for mode 2", Duration::from_secs(5), || {
        let bounds = SampleBox { state: vec![(-50.0, 50.0); 2], input: vec![(0.0, 0.0)] };
        let samples = SampleSet::grid_and_random(bounds, 100, 10_000, 42).map_err(|e| e.to_string())?;
        ensure(samples.len() == 20_000, format!("{} samples", samples.len()))?;
        let v = LyapunovFunction::diagonal(&[2.0, 3.0]).map_err(|e| e.to_string())?;
        let gamma = Gain::single(ClassK::identity());
        let c1 = verify_decay(nonlinear_pair_f1, &v, 0.815, &gamma, &samples, 1e-9).map_err(|e| e.to_string())?;
        ensure(c1.violations.is_empty(), format!("{} violations for mode 1", c1.violations.len()))?;
        let c2 = verify_decay(nonlinear_pair_f2, &v, 1.2, &gamma, &samples, 1e-9).map_err(|e| e.to_string())?;
        let near = c2
            .violations
            .iter()
            .any(|x| (x.state[0] - std::f64::consts::FRAC_PI_2).hypot(x.state[1]) < 1.0);
        ensure(!c2.violations.is_empty() && near, "no mode-2 violation near (pi/2, 0)")
    });
}

fn run_simulate(dir: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_contrawalk"))
        .arg("simulate")
        .arg(config("nonlinear_pair.toml"))
        .arg("--out")
        .arg(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), format!("simulate exited with {:?}: {}", out.status, String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn criterion_8_benchmark_scenario() {
    criterion(8, "50-trajectory benchmark scenario is byte-reproducible", Duration::from_secs(10), || {
        let a = tempfile::tempdir().map_err(|e| e.to_string())?;
        let b = tempfile::tempdir().map_err(|e| e.to_string())?;
        run_simulate(a.path())?;
        run_simulate(b.path())?;
        let tables = std::fs::read_dir(a.path())
            .map_err(|e| e.to_string())?
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().starts_with("trajectory_"))
            .count();
        ensure(tables == 50, format!("{tables} trajectory tables"))?;
        let sa = std::fs::read(a.path().join("summary.json")).map_err(|e| e.to_string())?;
        let sb = std::fs::read(b.path().join("summary.json")).map_err(|e| e.to_string())?;
        ensure(sa == sb, "summaries differ between runs")?;
        let v: serde_json::Value = serde_json::from_slice(&sa).map_err(|e| e.to_string())?;
        ensure(v["trajectories"].as_array().map(Vec::len) == Some(50), "summary does not list 50 trajectories")?;
        ensure(v["horizon"] == 300 && v["count"] == 50, "summary metadata mismatch")
    });
}

#[test]
fn criterion_9_adt_comparison() {
    criterion(9, "average dwell time check on the periodic signal", Duration::from_secs(1), || {
        let g = pair_graph();
        let s = pair_signal();
        let loose = AdtParams { n0: 1.0, tau_a: 1.0, t0: 1.0, rho_bar: 0.5 };
        let v = s.adt_check(&g, &loose, 50).map_err(|e| e.to_string())?;
        ensure(v.is_empty(), format!("{} violations with rho_bar = 0.5", v.len()))?;
        let tight = AdtParams { n0: 1.0, tau_a: 1.0, t0: 0.0, rho_bar: 0.4 };
        let v = s.adt_check(&g, &tight, 50).map_err(|e| e.to_string())?;
        let hit = v.iter().find(|x| x.s == 0 && x.t == 10).ok_or("no violation at (0, 10)")?;
        ensure(hit.observed == 5 && (hit.limit - 4.0).abs() < 1e-12, format!("{hit:?}"))
    });
}
