use std::path::Path;
use std::process::{Command, Output};

fn helson(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_helson"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env_remove("HELSON_OUT")
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn csv_column(text: &str, col: &str) -> Vec<String> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == col).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

#[test]
fn simulate_shapes_and_manifest_replay() {
    let a = tempfile::tempdir().unwrap();
    let o = helson(a.path(), &["simulate", "--map", "mul", "--dist", "gaussian", "--n", "60", "--reps", "5", "--seed", "7"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(a.path(), "eigenvalues.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 5);
    assert!(lines.iter().all(|l| l.split(',').count() == 60));

    let b = tempfile::tempdir().unwrap();
    let manifest = a.path().join("manifest.json");
    let o = helson(b.path(), &["simulate", "--config", manifest.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["eigenvalues.csv", "summary.json", "histogram.svg", "manifest.json"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f} differs on replay");
    }

    let c = tempfile::tempdir().unwrap();
    let o = helson(c.path(), &["simulate", "--config", manifest.to_str().unwrap(), "--sequential"]);
    assert!(o.status.success());
    assert_eq!(read(a.path(), "eigenvalues.csv"), read(c.path(), "eigenvalues.csv"));
}

#[test]
fn flags_override_config_file() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n": 20, "reps": 2, "seed": 3}"#).unwrap();
    let out = d.path().join("out");
    let o = helson(&out, &["simulate", "--config", cfg.to_str().unwrap(), "--reps", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_str(&read(&out, "manifest.json")).unwrap();
    assert_eq!(m["config"]["n"], 20);
    assert_eq!(m["config"]["reps"], 3);
    assert_eq!(m["config"]["seed"], 3);
    assert_eq!(m["config"]["bins"], 50);
    assert_eq!(m["subcommand"], "simulate");
    assert!(m["version"].is_string());
}

#[test]
fn svg_has_bars_frame_and_one_curve() {
    let d = tempfile::tempdir().unwrap();
    let o = helson(d.path(), &["simulate", "--n", "40", "--reps", "2", "--bins", "33"]);
    assert!(o.status.success());
    let svg = read(d.path(), "histogram.svg");
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains(r#"width="800" height="500""#));
    assert_eq!(svg.matches("<rect").count(), 34);
    assert_eq!(svg.matches("<polyline").count(), 1);
    assert_eq!(svg.matches("<path").count(), 0);
    assert_eq!(svg.matches("<text").count(), svg.matches("</text>").count());
}

#[test]
fn pattern_check_flags_alpha_two() {
    let d = tempfile::tempdir().unwrap();
    let o = helson(d.path(), &["pattern-check", "--map", "salpha", "--alpha", "2", "--n-grid", "20,40,80"]);
    assert!(o.status.success());
    let r: serde_json::Value = serde_json::from_str(&read(d.path(), "pattern_check.json")).unwrap();
    assert_eq!(r["c3"], "FAIL");
    let ratio = r["points"][2]["ratio"].as_f64().unwrap();
    assert!((ratio - 2.0 / 3.0).abs() < 0.01, "{ratio}");

    let o = helson(d.path(), &["pattern-check", "--map", "mul", "--n-grid", "50,100,200"]);
    assert!(o.status.success());
    let r: serde_json::Value = serde_json::from_str(&read(d.path(), "pattern_check.json")).unwrap();
    assert_eq!(r["c3"], "PASS");
    assert_eq!(r["c_condition"], "PASS");
}

#[test]
fn circuits_p_column_decreases() {
    let d = tempfile::tempdir().unwrap();
    let o = helson(d.path(), &["circuits", "--word", "1212", "--map", "mul", "--n-grid", "4,8,16,32"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let p: Vec<f64> = csv_column(&read(d.path(), "circuits.csv"), "p")
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(p.len(), 4);
    assert!(p.windows(2).all(|w| w[1] < w[0]), "{p:?}");
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("o");
    assert_eq!(helson(&out, &["simulate", "--dist", "cauchy"]).status.code(), Some(2));
    assert_eq!(helson(&out, &["simulate", "--dist", "heavytail"]).status.code(), Some(2));
    assert_eq!(helson(&out, &["simulate", "--nope"]).status.code(), Some(2));
    assert_eq!(helson(&out, &["circuits", "--word", "123"]).status.code(), Some(2));
    assert_eq!(helson(&out, &["simulate", "--n", "4001"]).status.code(), Some(3));
    assert_eq!(helson(&out, &["numtheory", "--n-grid", "20000"]).status.code(), Some(3));
    assert_eq!(helson(&out, &["words", "--k", "9"]).status.code(), Some(3));
    // Failed runs leave no outputs behind.
    assert!(!out.exists() || std::fs::read_dir(&out).unwrap().next().is_none());
}

#[test]
fn remaining_subcommands_write_outputs() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    assert!(helson(p, &["words", "--k", "4"]).status.success());
    let w: serde_json::Value = serde_json::from_str(&read(p, "words.json")).unwrap();
    assert_eq!((w["total"].as_u64(), w["catalan"].as_u64()), (Some(105), Some(14)));

    assert!(helson(p, &["numtheory", "--n-grid", "16,32"]).status.success());
    let nt: serde_json::Value = serde_json::from_str(&read(p, "numtheory.json")).unwrap();
    assert_eq!(nt["ford_c"], 0.086071);
    assert_eq!(read(p, "numtheory.csv").lines().count(), 3);

    assert!(helson(p, &["truncation", "--n-grid", "30", "--u-grid", "2,5", "--reps", "2"]).status.success());
    let dominated = csv_column(&read(p, "truncation.csv"), "dominated");
    assert_eq!(dominated.len(), 4);
    assert!(dominated.iter().all(|s| s == "true"));

    let o = helson(p, &["moments", "--dist", "rademacher", "--n-grid", "4", "--r", "2,4", "--reps", "8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let oracle = csv_column(&read(p, "moments.csv"), "oracle");
    assert_eq!(oracle.len(), 2);
    assert_eq!(oracle[1].parse::<f64>().unwrap(), 1.75);
}
