use std::path::Path;

use cartograf::harness::{
    emit_report, parse_results_json, results_to_json, run_experiment, ExperimentConfig,
};

fn small_config() -> ExperimentConfig {
    let body = r#"
seeds = [4, 5]
plots = false

[synth]
n_per_class_per_domain = 10
train_domains = ["tweets", "reviews", "news"]
test_domains = ["legal", "wiki"]
sentiment_skew = 0.3
seed = 4

[features]
max_len = 32
dim = 8

[model]
conv_channels = [4, 4, 4, 4, 4]
fc_dims = [8, 4, 2]

[train]
epochs = 3
batch_size = 16
seed = 4
"#;
    ExperimentConfig::parse(body, Path::new(".")).unwrap()
}

#[test]
fn results_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let results = run_experiment(&small_config(), dir.path()).unwrap();
    assert_eq!(results.n_train, 60);
    assert_eq!(results.seeds.len(), 2);
    assert_eq!(results.seeds[1].artifact_dir, "seed-5");
    let json = results_to_json(&results).unwrap();
    let parsed = parse_results_json(&json).unwrap();
    assert_eq!(parsed, results);
    assert_eq!(results_to_json(&parsed).unwrap(), json);
    emit_report(&results, dir.path()).unwrap();
    let report = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(report.contains("ambiguous-45"));
}

#[test]
fn experiment_is_deterministic_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_experiment(&small_config(), a.path()).unwrap();
    let rb = run_experiment(&small_config(), b.path()).unwrap();
    assert_eq!(results_to_json(&ra).unwrap(), results_to_json(&rb).unwrap());
    for f in ["dynamics.jsonl", "summaries.csv", "seed-5/dynamics.jsonl"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap()
        );
    }
}

#[test]
fn every_grid_run_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let results = run_experiment(&small_config(), dir.path()).unwrap();
    for seed in &results.seeds {
        let names: Vec<&str> = seed.grid.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names.len(), 8);
        assert!(names.contains(&"hard-50"));
        for run in &seed.grid {
            assert!(run.failure.is_some() || (0.0..=1.0).contains(&run.macro_f1));
        }
    }
}
