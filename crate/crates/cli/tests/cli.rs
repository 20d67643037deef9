use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use restool_cli::{Overrides, PipelineConfig};

fn synthetic() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic")
}

fn restool(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_restool")).args(args).output().expect("spawn restool")
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", config.to_str().unwrap(), "--output-dir", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    restool(&args)
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for stage in fs::read_dir(dir).unwrap() {
        let stage = stage.unwrap().path();
        if stage.is_dir() {
            for f in fs::read_dir(&stage).unwrap() {
                out.push(f.unwrap().path().strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn assert_same_tree(a: &Path, b: &Path) {
    let (fa, fb) = (files(a), files(b));
    assert_eq!(fa, fb);
    for f in fa {
        assert!(fs::read(a.join(&f)).unwrap() == fs::read(b.join(&f)).unwrap(), "{} differs", f.display());
    }
}

fn error_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("error report on stderr");
    serde_json::from_str(line).expect("error report is JSON")
}

#[test]
fn validate_reports_filled_panel() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("validate", &synthetic().join("config.json"), dir.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("validate/report.json")).unwrap()).unwrap();
    assert_eq!(rep["cells"], 6480);
    assert_eq!(rep["missing_before_fill"], 9);
    assert_eq!(rep["missing_after_fill"], 0);
    assert_eq!(rep["islands"], serde_json::json!([]));
    assert!((rep["spec_weight_sum"].as_f64().unwrap() - 1.001).abs() < 1e-12);
}

#[test]
fn all_matches_golden_and_is_thread_independent() {
    let config = synthetic().join("config.json");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run("all", &config, a.path(), &["--threads", "1"]).status.success());
    assert!(run("all", &config, b.path(), &["--threads", "4"]).status.success());
    assert_same_tree(a.path(), b.path());
    assert_same_tree(a.path(), &synthetic().join("golden"));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    let stages = manifest["stages"].as_object().unwrap();
    assert_eq!(stages.len(), 6);
    let listed: usize = stages.values().map(|s| s["outputs"].as_array().unwrap().len()).sum();
    assert_eq!(listed, files(a.path()).len());
}

#[test]
fn downstream_stages_rerun_from_index_output() {
    let config = synthetic().join("config.json");
    let dir = tempfile::tempdir().unwrap();
    assert!(run("all", &config, dir.path(), &[]).status.success());
    let before = tempfile::tempdir().unwrap();
    for f in files(dir.path()) {
        let dst = before.path().join(&f);
        fs::create_dir_all(dst.parent().unwrap()).unwrap();
        fs::copy(dir.path().join(&f), dst).unwrap();
    }
    for stage in ["classify", "ellipse", "density", "detect"] {
        fs::remove_dir_all(dir.path().join(stage)).unwrap();
    }
    for stage in ["detect", "density", "ellipse", "classify"] {
        assert!(run(stage, &config, dir.path(), &[]).status.success());
    }
    assert_same_tree(dir.path(), before.path());
}

#[test]
fn downstream_stage_without_scores_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("ellipse", &synthetic().join("config.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_json(&o)["stage"], "ellipse");
}

#[test]
fn base_year_outside_panel_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("validate", &synthetic().join("config.json"), dir.path(), &["--base-year", "1990"]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_json(&o);
    assert_eq!(e["error"], "config");
    assert_eq!(e["field"], "normalization.base_year");
    assert_eq!(e["exit_code"], 2);
}

/// A small dataset in a temp dir; `tweak` edits the config JSON.
fn fixture(values: &str, tweak: impl FnOnce(&mut serde_json::Value)) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(
        p.join("spec.json"),
        r#"[{"id":"a","name":"A","attribute":"+","weight":0.5},{"id":"b","name":"B","attribute":"-","weight":0.5}]"#,
    )
    .unwrap();
    fs::write(p.join("values.csv"), values).unwrap();
    let mut cfg = serde_json::json!({
        "paths": {"values": "values.csv", "spec": "spec.json"},
        "normalization": {"mode": "minmax", "scope": "per_year"},
        "weights": {"source": "spec"},
        "detector": {"permutations": 0}
    });
    tweak(&mut cfg);
    let path = p.join("config.json");
    fs::write(&path, cfg.to_string()).unwrap();
    (dir, path)
}

const SMALL: &str = "region,year,indicator,value
R1,2000,a,1
R1,2000,b,4
R1,2001,a,2
R1,2001,b,3
R2,2000,a,3
R2,2000,b,1
R2,2001,a,5
R2,2001,b,2
";

#[test]
fn small_fixture_runs_index() {
    let (dir, config) = fixture(SMALL, |_| {});
    let o = run("index", &config, &dir.path().join("out"), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let scores = fs::read_to_string(dir.path().join("out/index/scores.csv")).unwrap();
    assert_eq!(scores, "region,year,score,level\nR1,2000,0,\nR1,2001,0,\nR2,2000,1,\nR2,2001,1,\n");
}

#[test]
fn exit_codes_by_error_class() {
    let (dir, config) = fixture(SMALL, |c| c["surprise"] = 1.into());
    let o = run("index", &config, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));

    let (dir, config) = fixture(SMALL, |c| c["paths"]["centroids"] = "missing.csv".into());
    let o = run("index", &config, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["field"], "paths.centroids");

    let (dir, config) = fixture(SMALL, |c| c["detector"] = serde_json::json!({"permutations": 999}));
    let o = run("index", &config, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["field"], "detector.seed");

    let dup = format!("{SMALL}R2,2001,b,2\n");
    let (dir, config) = fixture(&dup, |_| {});
    let o = run("index", &config, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_json(&o)["error"], "data");

    // Indicator `a` is flat in 2001.
    let flat = SMALL.replace("R2,2001,a,5", "R2,2001,a,2");
    let (dir, config) = fixture(&flat, |_| {});
    let o = run("index", &config, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(error_json(&o)["error"], "numerical");
}

#[test]
fn manifest_hash_tracks_meaningful_fields() {
    let text = fs::read_to_string(synthetic().join("config.json")).unwrap();
    let base = PipelineConfig::from_json(&text, Path::new("config.json")).unwrap();
    let h = base.hash();

    let mut moved = base.clone();
    moved.apply(&Overrides { output_dir: Some("elsewhere".into()), ..Default::default() }).unwrap();
    assert_eq!(moved.hash(), h);

    for o in [
        Overrides { seed: Some(7), ..Default::default() },
        Overrides { base_year: Some(2005), ..Default::default() },
        Overrides { delta: Some(2), ..Default::default() },
        Overrides { permutations: Some(199), ..Default::default() },
    ] {
        let mut c = base.clone();
        c.apply(&o).unwrap();
        assert_ne!(c.hash(), h, "{o:?}");
    }
}

#[test]
fn manifest_is_reset_when_config_changes() {
    let config = synthetic().join("config.json");
    let dir = tempfile::tempdir().unwrap();
    assert!(run("validate", &config, dir.path(), &[]).status.success());
    assert!(run("index", &config, dir.path(), &[]).status.success());
    let read = || -> serde_json::Value {
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap()
    };
    assert_eq!(read()["stages"].as_object().unwrap().len(), 2);
    assert!(run("index", &config, dir.path(), &["--seed", "9"]).status.success());
    let m = read();
    assert_eq!(m["stages"].as_object().unwrap().len(), 1);
    assert!(m["stages"]["index"].is_object());
}
