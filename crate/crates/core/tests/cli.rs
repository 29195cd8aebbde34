use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn repgame(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repgame"))
        .args(args)
        .env("REPGAME_OUT", out)
        .output()
        .expect("binary runs")
}

fn json(out: &Path, command: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join(format!("{command}.json"))).unwrap()).unwrap()
}

#[test]
fn solve_static_reports_the_fairness_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let game = example("fig1.game");
    let o = repgame(
        &["solve-static", game.to_str().unwrap(), "--kind", "cce", "--fairness", "10*log(1+u1)+log(1+u2)"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(dir.path(), "solve-static");
    let u: Vec<f64> = serde_json::from_value(r["results"]["utilities"].clone()).unwrap();
    assert!((u[0] - 3.7323).abs() < 1e-3 && (u[1] - 5.9091).abs() < 1e-3, "{u:?}");
}

#[test]
fn silhouette_csv_has_one_row_per_direction() {
    let dir = tempfile::tempdir().unwrap();
    let game = example("fig1.game");
    let o = repgame(&["silhouette", game.to_str().unwrap(), "--kind", "cce", "--directions", "64"], dir.path());
    assert!(o.status.success());
    let mut r = csv::Reader::from_path(dir.path().join("silhouette.csv")).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["dx", "dy", "u1", "u2"]);
    assert_eq!(r.records().count(), 64);
    let hull: Vec<[f64; 2]> = serde_json::from_value(json(dir.path(), "silhouette")["results"]["hull"].clone()).unwrap();
    for v in [[3.5, 2.4], [3.5, 9.3], [3.8773, 3.7914]] {
        assert!(hull.iter().any(|h| (h[0] - v[0]).abs() < 1e-3 && (h[1] - v[1]).abs() < 1e-3), "{hull:?}");
    }
}

#[test]
fn identical_runs_give_identical_bytes() {
    let game = example("fig1.game");
    let args = ["run-dpp", game.to_str().unwrap(), "--V", "100", "--T", "3000", "--seed", "7"];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(repgame(&args, a.path()).status.success());
    assert!(repgame(&args, b.path()).status.success());
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read(a.path(), "trace.csv"), read(b.path(), "trace.csv"));
    let strip = |d: &Path| {
        let mut v = json(d, "run-dpp");
        v["outputs"] = serde_json::Value::Null;
        v
    };
    assert_eq!(strip(a.path()), strip(b.path()));
    let rows = csv::Reader::from_path(a.path().join("trace.csv")).unwrap().records().count();
    assert_eq!(rows, 3000);
}

#[test]
fn run_dpp_meets_the_utility_bound() {
    let dir = tempfile::tempdir().unwrap();
    let game = example("fig1.game");
    let o = repgame(&["run-dpp", game.to_str().unwrap(), "--V", "100", "--T", "100000", "--seed", "7"], dir.path());
    assert!(o.status.success());
    let r = json(dir.path(), "run-dpp");
    let phi = r["results"]["summary"]["phi_gamma_bar"].as_f64().unwrap();
    let lb = r["results"]["bounds"]["utility_lower_bound"].as_f64().unwrap();
    assert!(phi >= lb);
    for e in r["results"]["envelope"].as_array().unwrap() {
        assert!(e["norm_rate"].as_f64().unwrap() <= e["envelope"].as_f64().unwrap());
    }
}

#[test]
fn extracted_policy_certifies_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let game = example("signals.game");
    let g = game.to_str().unwrap();
    assert!(repgame(&["extract-policy", g, "--V", "200", "--T", "50000"], dir.path()).status.success());
    let policy = dir.path().join("policy.csv");
    let o = repgame(&["certify", g, "--kind", "cce", "--policy", policy.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    let worst = json(dir.path(), "certify")["results"]["report"]["worst_violation"].as_f64().unwrap();
    assert!(worst <= 0.05 * 10.0, "{worst}");
}

#[test]
fn sweep_and_multi_seed_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let game = example("fig1.game");
    let g = game.to_str().unwrap();
    assert!(repgame(&["sweep-v", g, "--V", "10,40", "--T", "2000", "--seeds", "2"], dir.path()).status.success());
    assert_eq!(csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap().records().count(), 2);
    let o = repgame(&["run-dpp", g, "--T", "2000", "--seeds", "3", "--engine", "special"], dir.path());
    assert!(o.status.success());
    assert_eq!(csv::Reader::from_path(dir.path().join("seeds.csv")).unwrap().records().count(), 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let code = |o: Output| o.status.code().unwrap();

    assert_eq!(code(repgame(&["solve-static"], d)), 2);
    let bad = d.join("bad.game");
    std::fs::write(&bad, "[[players]]\nname = \"a\"\nactions = [\"x\"]\n[utilities.a]\ntable = [1, 2]\n").unwrap();
    let o = repgame(&["validate", bad.to_str().unwrap()], d);
    assert!(String::from_utf8_lossy(&o.stderr).contains("utilities.a.table"));
    assert_eq!(code(o), 2);

    let neg = d.join("neg.game");
    std::fs::write(&neg, "[[players]]\nname = \"a\"\nactions = [\"x\"]\n[utilities.a]\ntable = [-1]\n").unwrap();
    assert_eq!(code(repgame(&["validate", neg.to_str().unwrap()], d)), 3);

    let game = example("signals.game");
    assert_eq!(code(repgame(&["run-dpp", game.to_str().unwrap(), "--engine", "special"], d)), 3);

    // Seven players with eight actions each: 2^21 joint actions.
    let mut big = String::new();
    for i in 0..7 {
        big += &format!("[[players]]\nname = \"p{i}\"\nactions = [\"a\",\"b\",\"c\",\"d\",\"e\",\"f\",\"g\",\"h\"]\n");
    }
    for i in 0..7 {
        big += &format!("[utilities.p{i}]\ndefault = 1\n");
    }
    let big_path = d.join("big.game");
    std::fs::write(&big_path, big).unwrap();
    let o = repgame(&["run-dpp", big_path.to_str().unwrap(), "--T", "1"], d);
    assert!(String::from_utf8_lossy(&o.stderr).contains("size-cap"));
    assert_eq!(code(o), 5);
}
