use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str], cfg: &Path, extra: &[&std::ffi::OsStr]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_contrawalk"))
        .arg(args[0])
        .arg(cfg)
        .args(&args[1..])
        .args(extra)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("system.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn analyze_without_contractive_cycle_exits_3() {
    let out = run(&["analyze", "--json"], &config("all_unstable.toml"), &[]);
    assert_eq!(out.status.code(), Some(3));
    let v = json(&out);
    assert_eq!(v["contractive"], false);
    assert!(v["min_mean"].as_f64().unwrap() >= 0.0);
    let human = run(&["analyze"], &config("all_unstable.toml"), &[]);
    assert!(String::from_utf8_lossy(&human.stdout).contains("no contractive cycle"));
}

#[test]
fn malformed_config_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[graph]\nnodes = [\n  { id = 1, lambda = }\n]\nedges = []\n");
    let out = run(&["analyze"], &cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn invalid_graph_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[graph]\nnodes = [{ id = 1, lambda = 1.0, class = \"stable\" }]\nedges = []\n",
    );
    assert_eq!(run(&["analyze"], &cfg, &[]).status.code(), Some(2));
    assert_eq!(run(&["verify"], &config("all_unstable.toml"), &[]).status.code(), Some(2));
}

#[test]
fn synthesize_emits_repeated_walk() {
    let out = run(&["synthesize", "--json", "--horizon", "6"], &config("nonlinear_pair.toml"), &[]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["values"], serde_json::json!([1, 2, 1, 2, 1, 2]));
    assert_eq!(v["base_walk"], serde_json::json!([1, 2, 1]));

    let out = run(&["synthesize", "--json", "--horizon", "3"], &config("single_stable.toml"), &[]);
    assert_eq!(json(&out)["values"], serde_json::json!([4, 4, 4]));

    let out = run(&["synthesize", "--horizon", "0"], &config("single_stable.toml"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(run(&["synthesize", "--horizon", "5"], &config("all_unstable.toml"), &[]).status.code(), Some(3));
}

#[test]
fn signal_file_round_trips_through_simulate_and_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["synthesize", "--horizon", "12", "--out"], &config("nonlinear_pair.toml"), &[dir.path().as_os_str()]);
    assert!(out.status.success());
    let signal = dir.path().join("signal.csv");
    let text = std::fs::read_to_string(&signal).unwrap();
    assert!(text.starts_with("# base_walk=1,2,1\n# xi="));
    assert!(text.contains("t,sigma\n0,1\n1,2\n"));

    let (walk, values) = contrawalk::commands::read_signal_file(&signal).unwrap();
    assert_eq!(walk.vertices(), &[1, 2, 1]);
    assert_eq!(values, vec![1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2]);

    let sim_dir = dir.path().join("sim");
    let out = run(
        &["simulate", "--horizon", "12", "--signal"],
        &config("nonlinear_pair.toml"),
        &[signal.as_os_str(), "--out".as_ref(), sim_dir.as_os_str()],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(sim_dir.join("trajectory_000.csv")).unwrap();
    let sigmas: Vec<u32> = table
        .lines()
        .skip(1)
        .filter_map(|l| l.split(',').nth(1).and_then(|s| s.parse().ok()))
        .collect();
    assert_eq!(&sigmas[..], &values[..sigmas.len()]);

    let out = run(&["bound", "--json", "--signal"], &config("nonlinear_pair.toml"), &[signal.as_os_str()]);
    assert_eq!(json(&out)["base_walk"], serde_json::json!([1, 2, 1]));
}

#[test]
fn tampered_signal_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("signal.csv");
    std::fs::write(&p, "# base_walk=1,2,1\n# xi=-0.02\nt,sigma\n0,1\n1,1\n").unwrap();
    let out = run(&["bound", "--signal"], &config("nonlinear_pair.toml"), &[p.as_os_str()]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(&p, "# base_walk=2,2\nt,sigma\n0,2\n").unwrap();
    let out = run(&["bound", "--signal"], &config("nonlinear_pair.toml"), &[p.as_os_str()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_exit_codes() {
    assert_eq!(run(&["verify"], &config("scalar_verified.toml"), &[]).status.code(), Some(0));

    let out = run(&["verify", "--json"], &config("nonlinear_pair.toml"), &[]);
    assert_eq!(out.status.code(), Some(4));
    let v = json(&out);
    let failing: Vec<String> = v["records"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| !r["violations"].as_array().unwrap().is_empty())
        .map(|r| format!("{} {}", r["subsystem"].as_str().unwrap(), r["inequality"].as_str().unwrap()))
        .collect();
    assert_eq!(failing, vec!["f2 decay"]);

    let text = std::fs::read_to_string(config("scalar_verified.toml"))
        .unwrap()
        .replace("alpha_lower = { coef = 1.0, exponent = 1.0 }", "alpha_lower = { coef = 1.5, exponent = 1.0 }");
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &text);
    assert_eq!(run(&["verify"], &cfg, &[]).status.code(), Some(4));
}

#[test]
fn simulate_verified_scalar_reports_bounds_ok() {
    let out = run(&["simulate", "--json"], &config("scalar_verified.toml"), &[]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["all_bounds_ok"], true);
    assert_eq!(v["verification"]["passed"], true);
    assert_eq!(v["diverged"], 0);
}

#[test]
fn simulate_count_zero_is_an_input_error() {
    let text = std::fs::read_to_string(config("scalar_verified.toml")).unwrap().replace("count = 50", "count = 0");
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &text);
    assert_eq!(run(&["simulate"], &cfg, &[]).status.code(), Some(2));
}

#[test]
fn seed_override_changes_summary() {
    let a = json(&run(&["simulate", "--json", "--seed", "1"], &config("scalar_verified.toml"), &[]));
    let b = json(&run(&["simulate", "--json", "--seed", "2"], &config("scalar_verified.toml"), &[]));
    assert_eq!(a["seed"], 1);
    assert_ne!(a["trajectories"], b["trajectories"]);
}

#[test]
fn bound_table() {
    let out = run(&["bound", "--json"], &config("nonlinear_pair.toml"), &[]);
    assert!(out.status.success());
    let v = json(&out);
    let row = &v["rows"][2];
    assert!((row["psi1"].as_f64().unwrap() - 0.978).abs() < 1e-12);
    assert!((row["psi2"].as_f64().unwrap() - 2.2).abs() < 1e-12);
    assert_eq!(v["psi2_within_bound"], true);

    let dir = tempfile::tempdir().unwrap();
    let out = run(&["bound", "--t-max", "0", "--out"], &config("nonlinear_pair.toml"), &[dir.path().as_os_str()]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("bound.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,psi1,psi2,state_bound");
    assert!(lines[1].starts_with("0,1,0,"));
    assert_eq!(lines.len(), 2);

    let out = run(&["bound", "--json"], &config("scalar_verified.toml"), &[]);
    let rows = json(&out)["rows"].as_array().unwrap().clone();
    assert!(rows.iter().all(|r| r["state_bound"].as_f64().unwrap() > 0.0));
    assert_eq!(run(&["bound"], &config("all_unstable.toml"), &[]).status.code(), Some(2));
}
