use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_kbump");

const CHEAP: &str = r#"{
  "k_list": [6],
  "grid_step_len": 0.2,
  "expansion_step_len": 0.2,
  "probe_vectors": 20,
  "interaction_samples": 5,
  "single_bump_radii_len": [20.0]
}"#;

fn kbump(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("run kbump")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn minimal_run_writes_every_artifact_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "minimal.json",
        r#"{"dimension": 2, "exponent_p": 3, "potential_amplitude_a": 1, "potential_decay_m": 2, "k_list": [6, 8]}"#,
    );
    let out = tmp.path().join("run");
    let o = kbump(&["all", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["manifest.json", "constants.json", "interaction.csv", "expansion.csv", "scaling.csv", "solution_k6.csv"] {
        assert!(out.join(name).is_file(), "{name}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let listed: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap()).collect();
    for f in fs::read_dir(&out).unwrap() {
        let name = f.unwrap().file_name().to_string_lossy().into_owned();
        if name != "manifest.json" {
            assert!(listed.contains(&name.as_str()), "{name} missing from manifest");
        }
    }
    assert_eq!(manifest["probe_seed"], 7);

    let report = String::from_utf8(o.stdout).unwrap();
    assert!(report.contains("A  = "));
    assert!(report.contains("B1 = "));
    assert!(report.contains("2pi/k"));
    let rows: Vec<&str> = report.lines().filter(|l| l.starts_with("  6 ") || l.starts_with("  8 ")).collect();
    assert_eq!(rows.len(), 2, "{report}");

    // CSV numbers carry 13 significant digits in scientific notation
    let scaling = fs::read_to_string(out.join("scaling.csv")).unwrap();
    let first = scaling.lines().nth(1).unwrap();
    let r_k = first.split(',').nth(1).unwrap();
    assert!(r_k.contains('e') && r_k.split('e').next().unwrap().len() >= 14, "{r_k}");

    let again = kbump(&["report", "--out", out.to_str().unwrap()]);
    assert!(again.status.success());
    assert_eq!(String::from_utf8(again.stdout).unwrap(), report);
}

#[test]
fn reruns_are_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "cheap.json", CHEAP);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(kbump(&["all", "--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(kbump(&["all", "--config", &cfg, "--out", b.to_str().unwrap(), "--jobs", "2"]).status.success());
    assert_eq!(files(&a), files(&b));
    // report twice over the same directory
    let before = files(&a);
    assert!(kbump(&["report", "--out", a.to_str().unwrap()]).status.success());
    assert_eq!(files(&a), before);
}

#[test]
fn supercritical_config_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", "{\n  \"dimension\": 3,\n  \"exponent_p\": 7\n}\n");
    let o = kbump(&["all", "--config", &cfg, "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("subcritical rule"), "{err}");
    assert!(err.contains("line 3"), "{err}");
    assert!(!tmp.path().join("x").exists());
}

#[test]
fn report_on_empty_directory_names_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let o = kbump(&["report", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing artifact manifest.json"));
}

#[test]
fn stage_flag_stops_early() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "cheap.json", CHEAP);
    let out = tmp.path().join("run");
    let o = kbump(&["all", "--config", &cfg, "--out", out.to_str().unwrap(), "--stage", "interaction"]);
    assert!(o.status.success());
    let names: Vec<String> = files(&out).into_iter().map(|f| f.0).collect();
    assert_eq!(
        names,
        ["constants.json", "interaction.csv", "interaction_law.json", "manifest.json", "profile.csv"]
    );
    let o = kbump(&["all", "--config", &cfg, "--out", out.to_str().unwrap(), "--stage", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn single_subcommand_and_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "cheap.json", CHEAP);
    let out = tmp.path().join("run");
    let o = kbump(&["constants", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(out.join("constants.json").is_file());
    assert!(!out.join("profile.csv").exists());

    let starved = CHEAP.replace("\"k_list\"", "\"newton_max_steps\": 1,\n  \"k_list\"");
    let cfg = write_config(tmp.path(), "starved.json", &starved);
    let o = kbump(&["certify", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let stage = &manifest["stages"].as_array().unwrap()[0];
    assert_eq!(stage["stage"], "certify");
    assert_eq!(stage["status"], "failed");
    assert!(stage["error"].as_str().unwrap().contains("Newton"));
}

#[test]
fn missing_config_is_a_usage_error() {
    let o = kbump(&["reduce"]);
    assert_eq!(o.status.code(), Some(2));
    let o = kbump(&["reduce", "--config", "/nonexistent/cfg.json", "--out", "/tmp"]);
    assert_eq!(o.status.code(), Some(2));
}
