use std::collections::HashSet;

use hybridcast::io::{indexed_seed, load_config, read_fields, seed_tree, write_fields, ExperimentConfig, FieldRecord};

#[test]
fn sibling_seeds_do_not_collide() {
    let master = 20250101;
    let mut seen = HashSet::with_capacity(2_000_000);
    for label in ["theta", "field"] {
        for i in 0..1_000_000 {
            assert!(seen.insert(indexed_seed(master, label, i)), "collision at {label}/{i}");
        }
    }
    assert_ne!(seed_tree(master, &["pretrain"]), seed_tree(master + 1, &["pretrain"]));
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    let mut cfg = ExperimentConfig::default();
    cfg.seeds.master = 7;
    cfg.ensemble.m = 3;
    std::fs::write(&path, cfg.to_toml().unwrap()).unwrap();
    assert_eq!(load_config(&path).unwrap(), cfg);
    assert!(load_config(&dir.path().join("missing.toml")).is_err());
}

#[test]
fn field_files_hold_many_records() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fields.fld");
    let records: Vec<FieldRecord> = (0..5)
        .map(|t| FieldRecord {
            variables: vec!["z".into(), "t".into()],
            n_lat: 2,
            n_lon: 4,
            time_index: t,
            values: (0..16).map(|i| (i as f64 * 0.1 + t as f64).sin() * 1e3).collect(),
        })
        .collect();
    write_fields(&path, &records).unwrap();
    assert_eq!(read_fields(&path).unwrap(), records);
}
