use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use asymgame_cli::export::{parse_csv, parse_value_csv, FieldJson};
use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asymgame"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn solve_exports_agree_across_formats() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["solve"], &configs().join("product.toml"), tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for route in ["v", "w"] {
        let field: FieldJson = serde_json::from_value(json(&tmp.path().join(format!("value_{route}.json")))).unwrap();
        let [nt, nx, np, nq] = field.shape;
        let csv = std::fs::read_to_string(tmp.path().join(format!("value_{route}.csv"))).unwrap();
        let parsed = parse_value_csv(&csv, (nt, nx, np, nq)).unwrap();
        assert_eq!(parsed.values(), field.values.as_slice());
        assert_eq!(field.times.len(), nt);
    }
    let (header, rows) = parse_csv(&std::fs::read_to_string(tmp.path().join("dual_v.csv")).unwrap()).unwrap();
    assert_eq!(header, ["t", "x1", "phat1", "phat2", "q1", "value"]);
    assert!(!rows.is_empty());
    let s = json(&tmp.path().join("summary.json"));
    assert!(s["convexity_violation_p_v"].as_f64().unwrap() <= 1e-8);
    assert!((s["isaacs_gap_max"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!(s.get("runtime").is_none());
}

#[test]
fn reference_error_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["solve"], &configs().join("eikonal.toml"), tmp.path());
    assert!(o.status.success());
    let s = json(&tmp.path().join("summary.json"));
    let err = s["reference_error_v"].as_f64().unwrap();
    assert!(err > 0.0 && err <= 3.0 * (0.04 + s["dt"].as_f64().unwrap()), "{err}");
}

#[test]
fn converge_tabulates_every_level() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_asymgame"))
        .args(["converge", "--level", "3", "--config"])
        .arg(configs().join("eikonal.toml"))
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    let t = json(&tmp.path().join("converge.json"));
    let rows = t["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[0]["diff_prev"].is_null());
    assert!(t["diffs_decreasing"].as_bool().unwrap());
    assert!(t["order_reference"].as_f64().unwrap() >= 0.5);
    let (header, csv) = parse_csv(&std::fs::read_to_string(tmp.path().join("converge.csv")).unwrap()).unwrap();
    assert_eq!(header[0], "level");
    assert_eq!(csv.len(), 3);
}

#[test]
fn game_replays_its_own_strategy_file() {
    let tmp = tempfile::tempdir().unwrap();
    let config = configs().join("product.toml");
    let first = tmp.path().join("first");
    let o = run(&["game"], &config, &first);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a = json(&first.join("game.json"));
    let value = a["partition_value"].as_f64().unwrap();
    assert!((a["profile_value"].as_f64().unwrap() - value).abs() <= 1e-9);
    assert!(a["maximizer_shortfall"].as_f64().unwrap() <= 1e-9);
    assert!(a["minimizer_excess"].as_f64().unwrap() <= 1e-9);
    let (mean, se) = (a["estimate"]["mean"].as_f64().unwrap(), a["estimate"]["stderr"].as_f64().unwrap());
    assert!((mean - value).abs() <= 4.0 * se, "{mean} +- {se} vs {value}");
    assert!(a["pde_value"].is_number());

    let second = tmp.path().join("second");
    let strategy = first.join("strategy.json");
    let o = Command::new(env!("CARGO_BIN_EXE_asymgame"))
        .args(["game", "--samples", "20000", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&second)
        .arg("--strategy")
        .arg(&strategy)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(std::fs::read(first.join("episodes.csv")).unwrap(), std::fs::read(second.join("episodes.csv")).unwrap());
    assert_eq!(a, json(&second.join("game.json")));
}

#[test]
fn seeds_change_only_the_sampled_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let config = configs().join("product.toml");
    let mut episodes = Vec::new();
    for seed in ["7", "8"] {
        let out = tmp.path().join(seed);
        let o = Command::new(env!("CARGO_BIN_EXE_asymgame"))
            .args(["game", "--samples", "500", "--seed", seed, "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(o.status.success());
        episodes.push(std::fs::read(out.join("episodes.csv")).unwrap());
        let g = json(&out.join("game.json"));
        assert!(g["partition_value"].is_number());
    }
    assert_ne!(episodes[0], episodes[1]);
}

#[test]
fn hamiltonian_probe_shows_the_isaacs_gap() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["hamiltonian"], &configs().join("product.toml"), tmp.path());
    assert!(o.status.success());
    let rows = json(&tmp.path().join("hamiltonian.json"));
    for r in rows.as_array().unwrap() {
        let xi = r["xi"][0].as_f64().unwrap();
        assert!(r["h"].as_f64().unwrap().abs() <= 1e-12);
        assert!((r["isaacs_gap"].as_f64().unwrap() - 2.0 * xi.abs()).abs() <= 1e-12);
        assert!((r["h_star"].as_f64().unwrap() - r["h_star_transposed"].as_f64().unwrap()).abs() <= 1e-9);
        assert!(r["blown_gap"].is_null());
    }
    let o = run(&["hamiltonian"], &configs().join("transport.toml"), tmp.path());
    assert!(o.status.success());
    let rows = json(&tmp.path().join("hamiltonian.json"));
    for r in rows.as_array().unwrap() {
        assert!(r["blown_gap"].as_f64().unwrap() <= 1e-12);
    }
}

#[test]
fn conjugate_checks_are_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["conjugate"], &configs().join("product.toml"), tmp.path());
    assert!(o.status.success());
    let r = json(&tmp.path().join("conjugate.json"));
    assert!(r["closed_form_error"].as_f64().unwrap() <= 1e-12);
    assert!(r["biconjugate_idempotence"].as_f64().unwrap() <= 1e-12);
    assert!(r["fenchel_young_min"].as_f64().unwrap() >= 0.0);
    assert_eq!(r["points"].as_u64().unwrap(), 2);
}

#[test]
fn configuration_errors_exit_with_one_and_name_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let base = std::fs::read_to_string(configs().join("product.toml")).unwrap();
    let bad = write_config(tmp.path(), "bad.toml", &base.replace("\"abs(x1) - 0.5\"", "\"abs(x1) -\""));
    let o = run(&["solve"], &bad, tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let line = base.lines().position(|l| l.starts_with("payoffs")).unwrap() + 1;
    assert!(String::from_utf8_lossy(&o.stderr).contains(&format!("line {line}")), "{}", String::from_utf8_lossy(&o.stderr));

    let o = run(&["solve"], &tmp.path().join("missing.toml"), tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let eikonal = configs().join("eikonal.toml");
    let o = run(&["game"], &eikonal, tmp.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn budgets_exit_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let base = std::fs::read_to_string(configs().join("transport.toml")).unwrap();
    let capped = write_config(tmp.path(), "capped.toml", &base.replace("dual_nodes = 21\n", "dual_nodes = 21\npde_dim_cap = 1\n"));
    let o = run(&["solve"], &capped, tmp.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dimension budget"));
}
