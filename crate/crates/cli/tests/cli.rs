use std::fs;
use std::path::Path;

use vpcollapse_cli::{run_cli, DEFAULT_CONFIG, EXIT_OK, EXIT_PHYSICS, EXIT_USAGE};

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_cli(
        std::iter::once("vpcollapse").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn write_config(dir: &Path, name: &str, edit: impl FnOnce(&mut serde_json::Value)) -> String {
    let mut v: serde_json::Value = serde_json::from_str(DEFAULT_CONFIG).unwrap();
    v["ensemble_size"] = 8.into();
    v["output_dir"] = dir.join(format!("{name}-out")).to_str().unwrap().into();
    edit(&mut v);
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn bundled_default_runs_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let r = cli(&[
        "simulate",
        "--ensemble-size",
        "6",
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    for f in ["histogram.csv", "winners.csv", "summary.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    assert!(r.stdout.contains("runs 6"));
    let winners = fs::read_to_string(out.join("winners.csv")).unwrap();
    assert_eq!(winners.lines().count(), 7);
}

#[test]
fn seed_and_epsilon_overrides_reach_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let r = cli(&[
        "simulate",
        "--ensemble-size",
        "2",
        "--seed",
        "500",
        "--epsilon",
        "2.5",
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let winners = fs::read_to_string(out.join("winners.csv")).unwrap();
    assert!(winners.lines().nth(1).unwrap().starts_with("0,500,"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["params"]["epsilon"], 2.5);
    assert_eq!(summary["config"]["base_seed"], 500);
}

#[test]
fn malformed_config_reports_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let text = DEFAULT_CONFIG.replace("\"wavelength\": 0.05", "\"wavelength\": \"short\"");
    fs::write(&path, text).unwrap();
    let r = cli(&["simulate", path.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.stderr.contains("slits.wavelength"), "{}", r.stderr);
    assert!(r.stderr.contains("line 10 column 34"), "{}", r.stderr);

    let path = write_config(dir.path(), "typo", |v| v["ensemble_sise"] = 3.into());
    let r = cli(&["simulate", &path]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.stderr.contains("ensemble_sise"), "{}", r.stderr);
}

#[test]
fn missing_config_file_is_an_io_error() {
    let r = cli(&["simulate", "/nonexistent/config.json"]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.stderr.contains("/nonexistent/config.json"));
}

#[test]
fn usage_errors_print_the_schema() {
    for args in [&[][..], &["simulate", "--seed", "abc"][..], &["frobnicate"][..]] {
        let r = cli(args);
        assert_eq!(r.code, EXIT_USAGE, "{args:?}");
        assert!(r.stderr.contains("\"$schema\""), "{args:?}: {}", r.stderr);
    }
    let r = cli(&["schema"]);
    assert_eq!(r.code, EXIT_OK);
    let schema: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert!(schema["required"].as_array().unwrap().contains(&"ensemble_size".into()));
    assert_eq!(cli(&["--help"]).code, EXIT_OK);
}

#[test]
fn small_oracle_budget_is_a_resource_error() {
    let r = cli(&["oracle", "--budget", "8"]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.stderr.contains("exceeds the budget of 8"), "{}", r.stderr);
}

#[test]
fn validate_passes_and_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("validate.json");
    let r = cli(&["validate", "--trials", "5", "--output", path.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["checks"].as_array().unwrap().len(), 3);
}

#[test]
fn identical_delayed_configs_agree_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_config(dir.path(), "a", |_| {});
    let b = write_config(dir.path(), "b", |_| {});
    let r = cli(&["delayed", &a, &b]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let cmp: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a-out/comparison.json")).unwrap()).unwrap();
    assert_eq!(cmp["p_value"], 1.0);
    assert_eq!(cmp["original_histogram"], cmp["delayed_histogram"]);
    assert!(dir.path().join("a-out/delayed/winners.csv").is_file());
}

#[test]
fn delayed_switch_to_wavelength_modes_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_config(dir.path(), "a", |_| {});
    let b = write_config(dir.path(), "b", |v| {
        v["detector"] = serde_json::json!({
            "kind": "delayed_choice",
            "pre": { "kind": "position" },
            "post": { "kind": "wavelength", "modes": 64, "screen_width": 4.0, "length_scale": 0.1 }
        });
    });
    let r = cli(&["delayed", &a, &b]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.stderr.contains("not comparable"), "{}", r.stderr);
}

#[test]
fn joint_descent_without_collapse_is_a_physics_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "weak", |v| {
        v["optimizer"] = serde_json::json!({ "mode": "joint_descent" });
        v["params"]["epsilon"] = 0.0.into();
        v["ensemble_size"] = 2.into();
    });
    let r = cli(&["simulate", &path]);
    assert_eq!(r.code, EXIT_PHYSICS, "{}", r.stderr);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        vpcollapse::ensemble::RunConfig::load(&path)
            .and_then(|c| c.build().map(|_| ()))
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
