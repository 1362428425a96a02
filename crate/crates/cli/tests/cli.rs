use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn tradepost(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tradepost"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const ONE_VS_TWO: &str = r#"
[agent.1]
side = "one"
endowment = 4.0
terms = [[1.0, "x", 0.0, 1.0], [1.0, "y", 0.0, 0.5]]

[agent.2]
side = "two"
endowment = 4.0
terms = [[1.0, "x", 0.0, 0.5], [1.0, "y", 0.0, 1.0]]

[agent.3]
side = "two"
endowment = 4.0
terms = [[1.0, "x", 0.0, 0.5], [1.0, "y", 0.0, 1.0]]
"#;

#[test]
fn validate_names_the_violated_assumption() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("small.toml");
    fs::write(&path, ONE_VS_TWO).unwrap();
    let o = tradepost(&["validate", "--economy", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    assert!(stdout(&o).contains("assumption1"), "{}", stdout(&o));
    let report = fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(report.contains("\"passes\": false"));
}

#[test]
fn validate_builtin_succeeds() {
    let dir = TempDir::new().unwrap();
    let o = tradepost(&["validate", "--economy", "builtin:example2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("Spiteful"));
}

#[test]
fn parse_errors_exit_two_with_location() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(
        &path,
        "[agent.1]\nside = \"one\"\nendowment = 4.0\nterms = []\nweight = 2\n",
    )
    .unwrap();
    let o = tradepost(&["solve", "--economy", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("weight") && err.contains("line 5"), "{err}");

    let o = tradepost(&["solve", "--economy", "builtin:nothing"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solve_corollary_trades_and_is_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let o = tradepost(&["solve", "--economy", "builtin:corollary"], a.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("classification: Trade"), "{}", stdout(&o));
    tradepost(&["solve", "--economy", "builtin:corollary"], b.path());
    for name in ["trace.csv", "allocation.csv", "report.json"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }
    let trace = fs::read_to_string(a.path().join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        "epsilon,iterations,converged,residual,price,A,B,offer_1,offer_2,offer_3,offer_4"
    );
    assert_eq!(lines.count(), 9);
}

#[test]
fn schedule_flag_overrides_config_file() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        "economy = \"builtin:theorem\"\nepsilon_schedule = [0.5, 0.05]\n[solver]\nbr_damping = 0.7\n",
    )
    .unwrap();
    let o = tradepost(&["solve", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 3);
    let report = fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(report.contains("\"br_damping\": 0.7"));

    let o = tradepost(
        &[
            "solve",
            "--config",
            config.to_str().unwrap(),
            "--epsilon-schedule",
            "1,0.1,0.01,0.001",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 5);
}

#[test]
fn bad_schedule_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = tradepost(
        &["solve", "--economy", "builtin:theorem", "--epsilon-schedule", "0.1,0.5"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("decreasing"));
}

#[test]
fn non_convergence_exits_three() {
    let dir = TempDir::new().unwrap();
    let o = tradepost(&["solve", "--economy", "builtin:example3"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(stdout(&o).contains("Failed"));
}

#[test]
fn verify_reports_stationary_non_equilibrium() {
    let dir = TempDir::new().unwrap();
    let o = tradepost(
        &[
            "verify",
            "--economy",
            "builtin:example3",
            "--profile",
            "3.097,3.673,0.460,0.460",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("not an equilibrium"), "{out}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report["kkt"]["max_residual"].as_f64().unwrap() < 1e-2);
    assert!(report["deviation_gain"].as_f64().unwrap() > 0.01);
}

#[test]
fn verify_autarky_writes_nan_as_string() {
    let dir = TempDir::new().unwrap();
    let o = tradepost(
        &["verify", "--economy", "builtin:example1", "--profile", "0,0,0,0"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let report = fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(report.contains("\"max_residual\": \"NaN\""), "{report}");
}

#[test]
fn verify_rejects_infeasible_profile() {
    let dir = TempDir::new().unwrap();
    let o = tradepost(
        &["verify", "--economy", "builtin:example1", "--profile", "5,0,0,0"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("agent 1"), "{}", stderr(&o));
}

#[test]
fn scan_writes_curve() {
    let dir = TempDir::new().unwrap();
    let o = tradepost(
        &[
            "scan",
            "--economy",
            "builtin:example3",
            "--agent",
            "1",
            "--profile",
            "3.097,3.673,0.460,0.460",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let curve = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert_eq!(curve.lines().next(), Some("offer,payoff"));
    assert_eq!(curve.lines().count(), 401);
    let o = tradepost(
        &[
            "scan",
            "--economy",
            "builtin:example3",
            "--agent",
            "9",
            "--profile",
            "1,1,1,1",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn certify_example_one() {
    let dir = TempDir::new().unwrap();
    let o = tradepost(
        &["certify", "--economy", "builtin:example1", "--resolution", "0.25"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("certificate: NoTradeUnique"), "{}", stdout(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["kind"], "NoTradeUnique");
}

#[test]
fn repro_single_scenario_and_unknown_name() {
    let dir = TempDir::new().unwrap();
    let o = tradepost(&["repro", "corollary"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("0 mismatch(es)"));
    assert!(dir.path().join("corollary").join("trace.csv").exists());
    let o = tradepost(&["repro", "example9"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn repro_example3_emits_curve() {
    let dir = TempDir::new().unwrap();
    let o = tradepost(&["repro", "example3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let curve = fs::read_to_string(dir.path().join("example3").join("curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 401);
}

#[test]
fn random_economy_follows_seed() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    tradepost(&["repro", "random", "--seed", "5"], a.path());
    tradepost(&["repro", "random", "--seed", "5"], b.path());
    let x = fs::read(a.path().join("random").join("economy.toml")).unwrap();
    let y = fs::read(b.path().join("random").join("economy.toml")).unwrap();
    assert_eq!(x, y);
    let c = TempDir::new().unwrap();
    tradepost(&["repro", "random", "--seed", "6"], c.path());
    assert_ne!(x, fs::read(c.path().join("random").join("economy.toml")).unwrap());
}
