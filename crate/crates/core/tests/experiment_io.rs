use std::path::PathBuf;

use cni_core::experiment::{run, write_outputs, ExperimentConfig, ResultsFile};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cni-core-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn config() -> ExperimentConfig {
    ExperimentConfig::from_json(
        r#"{"n": 3, "methods": ["cni", "srse", "cpec", "plain"], "noise": "global_depol_first_order",
            "m": 30, "k": 3, "l": [1, 2], "repetitions": 4, "seed": 5, "sweep": [0.0, 0.05], "calib_m": 500}"#,
    )
    .unwrap()
}

#[test]
fn result_files_are_byte_identical_across_thread_counts() {
    let cfg = config();
    let a = scratch("one");
    let b = scratch("three");
    write_outputs(&a, &run(&cfg, Some(1)).unwrap()).unwrap();
    write_outputs(&b, &run(&cfg, Some(3)).unwrap()).unwrap();
    for file in ["results.json", "results.csv"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }
    assert!(a.join("timing.json").exists());
    let _ = std::fs::remove_dir_all(&a);
    let _ = std::fs::remove_dir_all(&b);
}

#[test]
fn written_results_round_trip() {
    let cfg = config();
    let out = run(&cfg, Some(1)).unwrap();
    let dir = scratch("round-trip");
    write_outputs(&dir, &out).unwrap();
    let parsed: ResultsFile = serde_json::from_str(&std::fs::read_to_string(dir.join("results.json")).unwrap()).unwrap();
    assert_eq!(parsed, out.results);
    assert_eq!(parsed.config_hash, cfg.hash());
    let csv = std::fs::read_to_string(dir.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + parsed.rows.len());
    assert_eq!(parsed.rows.len(), 2 * (2 + 1 + 1 + 1));
    for row in &parsed.rows {
        assert!(row.error.is_none(), "{row:?}");
        assert_eq!(row.per_repetition_means.len(), 4);
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn rerunning_with_a_new_seed_changes_results() {
    let mut cfg = config();
    let a = run(&cfg, Some(1)).unwrap();
    cfg.seed += 1;
    let b = run(&cfg, Some(1)).unwrap();
    assert_ne!(a.results.rows, b.results.rows);
}
