use hybridcast::ensemble::Scheme;
use hybridcast::io::{ExperimentConfig, Pipeline, Stage};
use hybridcast::Error;

fn tiny() -> ExperimentConfig {
    ExperimentConfig::from_toml(
        r#"
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
"#,
    )
    .unwrap()
}

#[test]
fn all_stage_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let p = Pipeline::new(tiny(), dir.path()).unwrap();
    p.run(Stage::All, None).unwrap();
    for f in [
        "config.resolved.toml",
        "data/train.fld",
        "data/test.fld",
        "checkpoints/pretrained.json",
        "checkpoints/variational.json",
        "ensembles/hybrid.fld",
        "ensembles/deterministic.json",
        "metrics.csv",
        "ablation.csv",
        "ablation_ssr.csv",
    ] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert!(
        csv.starts_with("scheme,variable,lead_hours,metric,value,n_members,n_inits"),
        "{csv}"
    );
    assert!(csv.contains("hybrid,z,24"));

    // Every (variable, lead) cell of the ablation has one ssr row per scheme.
    let ablation = std::fs::read_to_string(dir.path().join("ablation.csv")).unwrap();
    for var in ["z", "t"] {
        for lead in [6.0, 24.0] {
            let schemes: Vec<&str> = ablation
                .lines()
                .map(|l| l.split(',').collect::<Vec<_>>())
                .filter(|c| c[1] == var && c[2].parse::<f64>() == Ok(lead) && c[3] == "ssr")
                .map(|c| c[0])
                .collect();
            assert_eq!(schemes.len(), 3, "{var} at {lead} h: {schemes:?}");
            for s in ["epistemic_only", "aleatoric_only", "hybrid"] {
                assert!(schemes.contains(&s));
            }
        }
    }
    let ssr = std::fs::read_to_string(dir.path().join("ablation_ssr.csv")).unwrap();
    assert!(ssr.starts_with("variable,lead_hours,epistemic_only,aleatoric_only,hybrid"));
    assert_eq!(ssr.lines().count(), 1 + 2 * 2);
}

#[test]
fn saved_ensemble_reads_back_identically() {
    let dir = tempfile::tempdir().unwrap();
    let p = Pipeline::new(tiny(), dir.path()).unwrap();
    for st in [Stage::GenData, Stage::Pretrain, Stage::Posttrain] {
        p.run(st, None).unwrap();
    }
    p.run(Stage::Ensemble, Some(Scheme::Hybrid)).unwrap();
    let (inits, runs) = p.load_ensemble(Scheme::Hybrid).unwrap();
    let fresh = p.forecast(Scheme::Hybrid).unwrap();
    assert_eq!(inits, p.init_indices());
    assert_eq!(runs.len(), fresh.len());
    for (a, b) in runs.iter().zip(&fresh) {
        assert_eq!(a.master_seed, b.master_seed);
        assert_eq!(a.members.len(), b.members.len());
        for (x, y) in a.members.iter().zip(&b.members) {
            assert_eq!(x.states, y.states);
            assert_eq!(x.field_seed, y.field_seed);
        }
    }
}

#[test]
fn metrics_without_ensembles_names_the_missing_stage() {
    let dir = tempfile::tempdir().unwrap();
    let p = Pipeline::new(tiny(), dir.path()).unwrap();
    match p.run(Stage::Metrics, None) {
        Err(Error::Prerequisite { stage, .. }) => assert_eq!(stage, "ensemble"),
        other => panic!("expected a prerequisite error, got {other:?}"),
    }
    match p.run(Stage::Pretrain, None) {
        Err(Error::Prerequisite { stage, .. }) => assert_eq!(stage, "gen-data"),
        other => panic!("expected a prerequisite error, got {other:?}"),
    }
}
