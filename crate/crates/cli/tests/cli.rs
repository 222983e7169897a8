use std::path::Path;
use std::process::Command;

use gaugelink::config::{parse_config_str, ConfigError, Subcommand};
use gaugelink::{execute, recipe_config, recipes, MANIFEST_NAME};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gaugelink"));
    c.env("GAUGELINK_THREADS", "1");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn empty_config_fills_defaults() {
    for sub in Subcommand::all() {
        let cfg = parse_config_str("{}", Some(sub)).unwrap();
        assert_eq!(cfg.subcommand, sub);
        assert!(cfg.parameters.is_object());
        assert_eq!(cfg.output_dir, Path::new("output"));
    }
}

#[test]
fn unknown_key_names_the_key() {
    let err = parse_config_str(r#"{"parameters": {"omega_Q": 1.0}}"#, Some(Subcommand::Fourlevel)).unwrap_err();
    match &err {
        ConfigError::Invalid { key, .. } => assert!(key.contains("omega_Q"), "{key}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn syntax_error_reports_position() {
    let err = parse_config_str("{\n  \"t_final\": ,\n}", Some(Subcommand::Fourlevel)).unwrap_err();
    match err {
        ConfigError::Parse { line, column, .. } => assert_eq!((line, column), (2, 14)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn subcommand_mismatch_is_rejected() {
    assert!(parse_config_str(r#"{"subcommand": "tdse"}"#, Some(Subcommand::Fourlevel)).is_err());
    assert!(parse_config_str("{}", None).is_err());
}

#[test]
fn invalid_values_are_rejected() {
    let bad = [
        (Subcommand::Fourlevel, r#"{"parameters": {"t_final": -1.0}}"#),
        (Subcommand::LatticeSpectrum, r#"{"parameters": {"lattice": {"sites": 5}}}"#),
        (Subcommand::Josephson, r#"{"parameters": {"particle_numbers": []}}"#),
        (Subcommand::Fourlevel, r#"{"sweep": [{"key": "t_final", "values": [10.0, "x"]}]}"#),
        (Subcommand::Fourlevel, r#"{"sweep": [{"key": "nope", "values": [1.0]}]}"#),
    ];
    for (sub, text) in bad {
        assert!(matches!(parse_config_str(text, Some(sub)), Err(ConfigError::Invalid { .. })), "{text}");
    }
}

#[test]
fn every_recipe_parses_and_is_listed() {
    assert_eq!(recipes::RECIPES.len(), 9);
    for r in recipes::RECIPES {
        let cfg = parse_config_str(r.text, None).unwrap_or_else(|e| panic!("{}: {e}", r.name));
        assert!(cfg.entries().is_ok(), "{}", r.name);
    }
}

#[test]
fn sweep_writes_one_file_per_point_and_a_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let m = execute(&recipe_config("spectrum_scan", tmp.path()).unwrap()).unwrap();
    assert_eq!(m.entries.len(), 25);
    assert_eq!(m.outputs.len(), 26);
    let summary = tmp.path().join("lattice_spectrum_sweep.csv");
    let text = std::fs::read_to_string(&summary).unwrap();
    assert_eq!(text.lines().count(), 26);
    assert!(text.lines().next().unwrap().starts_with("lattice.mass,"));
    assert!(m.outputs[..25].iter().all(|o| o.file.starts_with("lattice_spectrum_") && o.file.contains("mass")));
}

#[test]
fn csv_schemas() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (Subcommand::Fourlevel, r#"{"parameters": {"t_final": 5.0}}"#, "t,O_L_plus,O_R_minus,correlation,g_L,g_R"),
        (
            Subcommand::LatticeQuench,
            r#"{"parameters": {"lattice": {"sites": 4}, "t_final": 1.0}}"#,
            "t,flux_density,P0,Pplus,Pminus",
        ),
        (Subcommand::Josephson, r#"{"parameters": {"particle_numbers": [2, 4]}}"#, "N,residual"),
    ];
    for (sub, text, expected) in cases {
        let mut cfg = parse_config_str(text, Some(sub)).unwrap();
        cfg.output_dir = tmp.path().join(sub.name());
        let m = execute(&cfg).unwrap();
        assert_eq!(header(&cfg.output_dir.join(&m.outputs[0].file)), expected);
    }
}

#[test]
fn reruns_are_byte_identical_and_manifest_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"{"parameters": {"t_final": 20.0}, "sweep": [{"key": "tuning", "values": ["bare", "shifted"]}]}"#;
    let mut a = parse_config_str(text, Some(Subcommand::Fourlevel)).unwrap();
    a.output_dir = tmp.path().join("a");
    let mut b = a.clone();
    b.output_dir = tmp.path().join("b");
    let (ma, mb) = (execute(&a).unwrap(), execute(&b).unwrap());
    assert_eq!(ma.outputs.len(), mb.outputs.len());
    for (x, y) in ma.outputs.iter().zip(&mb.outputs) {
        assert_eq!(x.sha256, y.sha256);
        let bytes = std::fs::read(a.output_dir.join(&x.file)).unwrap();
        assert_eq!(bytes, std::fs::read(b.output_dir.join(&y.file)).unwrap());
    }

    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(a.output_dir.join(MANIFEST_NAME)).unwrap()).unwrap();
    let echoed = serde_json::to_string(&manifest["config"]).unwrap();
    let back = parse_config_str(&echoed, None).unwrap();
    assert_eq!(back.parameters, a.parameters);
    assert_eq!(back.sweep, a.sweep);
    assert!(manifest["tolerances"].is_object());
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn binary_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let good = write(tmp.path(), "good.json", r#"{"parameters": {"t_final": 5.0}}"#);
    let out = bin()
        .args(["fourlevel", "--config"])
        .arg(&good)
        .arg("--output")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("out").join(MANIFEST_NAME).exists());

    let unknown = write(tmp.path(), "unknown.json", r#"{"parameters": {"omega_Q": 1.0}}"#);
    let out = bin().args(["fourlevel", "--config"]).arg(&unknown).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("omega_Q"));

    let broken = write(tmp.path(), "broken.json", "{\n  \"t_final\": ,\n}");
    let out = bin().args(["fourlevel", "--config"]).arg(&broken).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let out = bin().args(["fourlevel", "--config"]).arg(tmp.path().join("missing.json")).output().unwrap();
    assert_ne!(out.status.code(), Some(0));

    let out = bin().args(["meanfield", "--print-defaults"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["subcommand"], "meanfield");

    let out = bin().arg("recipes").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 9);

    let out = bin().args(["recipes", "--show", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn recipe_configs_survive_serialization() {
    for recipe in recipes::RECIPES {
        let cfg = parse_config_str(recipe.text, None).unwrap();
        let echo = serde_json::to_string(&cfg).unwrap();
        let back = parse_config_str(&echo, None).unwrap();
        assert_eq!(cfg, back, "{}", recipe.name);
    }
}
