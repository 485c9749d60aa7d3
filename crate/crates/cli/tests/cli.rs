use std::path::PathBuf;
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn fbvp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbvp")).args(args).output().expect("binary runs")
}

fn run(cmd: &str, cfg: &str, extra: &[&str]) -> Output {
    let path = config(cfg);
    let mut args = vec![cmd, "--config", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    fbvp(&args)
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn constants_for_the_thermostat_example() {
    let out = run("constants", "thermostat_example.json", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = json(&out);
    assert_eq!(r["c1"], 0.125);
    assert_eq!(r["c2"], 0.25);
    assert_eq!(r["c"], 0.125);
    // exact sup of the absolute kernel integral is 49/256 at t = 7/8
    assert!((r["reciprocal_m"].as_f64().unwrap() - 49.0 / 256.0).abs() < 1e-12);
    assert!((r["reciprocal_big_m"].as_f64().unwrap() - 3.0 / 640.0).abs() < 1e-12);
}

#[test]
fn constants_for_dirichlet() {
    let out = run("constants", "dirichlet_constant.json", &[]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["c"], 0.25);
}

#[test]
fn malformed_and_missing_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"schema\": 1, ").unwrap();
    let out = fbvp(&["constants", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = fbvp(&["certify", "--config", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn certify_finds_s2() {
    let out = run("certify", "thermostat_example.json", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let cert = json(&out);
    assert_eq!(cert["pattern"], "S2");
    assert_eq!(cert["ladder"][0]["rho"], 1.0);
    assert!(cert["ladder"][1]["rho"].as_f64().unwrap() > (640.0 / 3.0) / 0.5);
}

#[test]
fn certify_without_forcing_term_finds_nothing() {
    let out = run("certify", "dirichlet_zero.json", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out)["pattern"].is_null());
}

#[test]
fn long_delay_names_c8() {
    for cmd in ["certify", "constants", "validate", "solve"] {
        let out = run(cmd, "thermostat_example_long_delay.json", &[]);
        assert_eq!(out.status.code(), Some(3), "{cmd}");
        assert!(stderr(&out).contains("C8"), "{cmd}: {}", stderr(&out));
    }
}

#[test]
fn validate_passes_on_examples() {
    for cfg in ["thermostat_example.json", "dirichlet_constant.json"] {
        let out = run("validate", cfg, &[]);
        assert_eq!(out.status.code(), Some(0), "{cfg}: {}", stderr(&out));
    }
}

#[test]
fn solve_constant_load_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("sol.json");
    let out = run("solve", "dirichlet_constant.json", &["--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("sol.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# residual="), "{header}");
    assert!(header.contains("verdict=in_positive_cone"));
    assert!(header.contains("norm_split="));
    assert_eq!(lines.next(), Some("t,u"));
    let mid = lines
        .map(|l| l.split_once(',').unwrap())
        .find(|(t, _)| *t == "0.5")
        .map(|(_, u)| u.parse::<f64>().unwrap())
        .expect("t = 0.5 is a node");
    assert!((mid - 0.125).abs() < 1e-12, "{mid}");
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(rep["outcome"], "nontrivial");
}

#[test]
fn solve_zero_load_is_trivial_only() {
    let out = run("solve", "dirichlet_zero.json", &["--grid", "65"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert_eq!(json(&out)["outcome"], "trivial_only");
}

#[test]
fn solve_reports_no_convergence_with_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("capped.json");
    let cfg = r#"{
  "schema": 1,
  "kernel": {"variant": "dirichlet", "mode": "non_negative"},
  "interval": [0.25, 0.75],
  "F": {"form": "delay", "expr": "1 + u*u + v*v", "r": 0.25},
  "solver": {"grid": 65, "max_iter": 1, "strategy": "picard"}
}"#;
    std::fs::write(&path, cfg).unwrap();
    let out = fbvp(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    let rep = json(&out);
    assert_eq!(rep["outcome"], "no_convergence");
    assert!(rep["multistart"]["runs"].as_array().unwrap().iter().all(|r| r["converged"] == false));
}

#[test]
fn reports_are_deterministic() {
    let a = run("certify", "thermostat_example.json", &["--rho-max", "600"]);
    let b = run("certify", "thermostat_example.json", &["--rho-max", "600"]);
    assert_eq!(a.stdout, b.stdout);
    let a = run("solve", "dirichlet_constant.json", &["--grid", "129", "--seed", "3"]);
    let b = run("solve", "dirichlet_constant.json", &["--grid", "129", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn reproduce_table_rows() {
    let out = fbvp(&["reproduce"]);
    let table = String::from_utf8_lossy(&out.stdout).into_owned();
    for row in ["c1, thermostat", "c2, thermostat", "c = min(a, 1-b)", "c1 = min(a, 1-b/(beta+eta))"] {
        let line = table.lines().find(|l| l.starts_with(row)).unwrap();
        assert!(line.ends_with("PASS"), "{line}");
    }
    // the exact sup is 49/256, so the 17/16 row is the one that differs
    let sup = table.lines().find(|l| l.starts_with("1/m")).unwrap();
    assert!(sup.ends_with("FAIL") && sup.contains("0.19140625"), "{sup}");
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn crippled_quadrature_moves_the_sup_row() {
    let good = fbvp(&["reproduce"]);
    let bad = fbvp(&["reproduce", "--debug-quadrature-panels", "2"]);
    let row = |o: &Output| {
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .find(|l| l.starts_with("1/m"))
            .unwrap()
            .to_string()
    };
    assert_ne!(row(&good), row(&bad));
    assert!(row(&bad).ends_with("FAIL"));
    assert_eq!(bad.status.code(), Some(1));
}
