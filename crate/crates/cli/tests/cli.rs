use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
[grid]
n_lat = 4
n_lon = 8
[spectrum]
truncation = 3
[data]
n_train = 60
n_val = 12
n_test = 40
[net]
hidden = [8]
[pretrain]
epochs = 2
batch_size = 16
[vi.optimizer]
epochs = 1
batch_size = 16
[ensemble]
m = 2
p = 2
horizon = 4
[metrics]
leads = [6.0, 24.0]
n_inits = 3
init_spacing = 10
"#;

fn hybridcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybridcast"))
        .args(args)
        .output()
        .unwrap()
}

fn tiny_config(dir: &Path) -> String {
    let path = dir.join("tiny.toml");
    std::fs::write(&path, TINY).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn help_lists_every_verb_and_flag() {
    let out = hybridcast(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for word in [
        "gen-data",
        "pretrain",
        "posttrain",
        "ensemble",
        "metrics",
        "ablation",
        "all",
    ] {
        assert!(text.contains(word), "{word} missing from help");
    }
    for flag in ["--config", "--out", "--seed", "--workers", "--mode"] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
}

#[test]
fn all_runs_and_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let mut csvs = Vec::new();
    for workers in ["1", "3"] {
        let out_dir = dir.path().join(format!("w{workers}"));
        let out = hybridcast(&[
            "all",
            "--config",
            &cfg,
            "--out",
            out_dir.to_str().unwrap(),
            "--workers",
            workers,
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(String::from_utf8_lossy(&out.stdout).contains("metrics.csv"));
        csvs.push(std::fs::read(out_dir.join("metrics.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn seed_flag_changes_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let run = |seed: &str| {
        let out_dir = dir.path().join(format!("s{seed}"));
        let out = hybridcast(&[
            "gen-data",
            "--config",
            &cfg,
            "--out",
            out_dir.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        let resolved = std::fs::read_to_string(out_dir.join("config.resolved.toml")).unwrap();
        assert!(resolved.contains(&format!("master = {seed}")));
        std::fs::read(out_dir.join("data/test.fld")).unwrap()
    };
    assert_ne!(run("1"), run("2"));
}

#[test]
fn metrics_before_ensembles_fails_with_the_missing_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = hybridcast(&["metrics", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(!out.status.success());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("ensemble"), "{}", stderr(&out));
}

#[test]
fn mode_flag_selects_the_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out_dir = dir.path().join("out");
    let out_str = out_dir.to_str().unwrap();
    for verb in ["gen-data", "pretrain"] {
        assert!(hybridcast(&[verb, "--config", &cfg, "--out", out_str]).status.success());
    }
    let out = hybridcast(&[
        "ensemble",
        "--config",
        &cfg,
        "--out",
        out_str,
        "--mode",
        "gaussian_baseline",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out_dir.join("ensembles/gaussian_baseline.fld").exists());

    let bad = hybridcast(&["ensemble", "--config", &cfg, "--out", out_str, "--mode", "bogus"]);
    assert!(!bad.status.success());
    assert!(stderr(&bad).contains("hybrid"), "{}", stderr(&bad));
}

#[test]
fn bad_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[spectrum]\ntau = -1.0\n").unwrap();
    let out = hybridcast(&[
        "gen-data",
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("spectrum.tau"), "{}", stderr(&out));
}
