use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, GridRun};
use crate::cartoplot::{export_plot_table, render_density, render_map};
use crate::corpus::{
    check_disjoint_domains, corpus_stats, default_pronouns, generate_synthetic_corpus,
    load_dataset, CorpusStats, DatasetSplit, SplitName, SyntheticVocabulary,
};
use crate::dynamics::{
    density_histogram, label_regions, mix_subsets, select_subset, summarize, write_summaries,
    Dimension, DynamicsLog, DynamicsRecorder, DynamicsSummary, Region,
};
use crate::error::{Error, Result};
use crate::features::{featurize_all, FeatureResources, FeaturizedExample};
use crate::model::{
    evaluate, init_model, save_checkpoint, train, EpochObserver, Metrics, ParameterSet,
};

/// Outcome of one training run evaluated on the test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub name: String,
    pub subset_size: usize,
    pub subset_pct_of_train: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    /// Final-model accuracy on the examples it was trained on.
    pub train_accuracy: f64,
    pub converged: bool,
    pub epoch_losses: Vec<f64>,
    pub confusion: [[u64; 2]; 2],
    /// Why the run produced no model, if it did not.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl RunResult {
    fn failed(name: &str, subset_size: usize, n_train: usize, reason: String) -> Self {
        Self {
            name: name.to_string(),
            subset_size,
            subset_pct_of_train: subset_size as f64 / n_train as f64,
            macro_f1: 0.0,
            accuracy: 0.0,
            train_accuracy: 0.0,
            converged: false,
            epoch_losses: Vec::new(),
            confusion: [[0; 2]; 2],
            failure: Some(reason),
        }
    }
}

/// Loaded (or generated) splits and their features.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: DatasetSplit,
    pub test: DatasetSplit,
    pub train_features: Vec<FeaturizedExample>,
    pub test_features: Vec<FeaturizedExample>,
    pub resources: FeatureResources,
    pub train_stats: CorpusStats,
    pub test_stats: CorpusStats,
}

/// Materializes the dataset pair named by the config and featurizes it.
pub fn prepare_data(config: &ExperimentConfig) -> Result<PreparedData> {
    let (train, test, resources) = match (&config.data, &config.synth) {
        (Some(d), _) => {
            let train = load_dataset(&d.train, SplitName::Train)?;
            let test = load_dataset(&d.test, SplitName::Test)?;
            check_disjoint_domains(&train, &test)?;
            let resources = FeatureResources::load(&config.features, Path::new("."), Some(&train))?;
            (train, test, resources)
        }
        (None, Some(s)) => {
            let (train, test) = generate_synthetic_corpus(s)?;
            let vocab = SyntheticVocabulary::build(s)?;
            let resources =
                FeatureResources::synthetic(&vocab, &train, config.features.dim, s.seed)?;
            (train, test, resources)
        }
        (None, None) => return Err(Error::config("one of [data] or [synth] is required")),
    };
    let train_features = featurize_all(&train.examples, &config.features, &resources)?;
    let test_features = featurize_all(&test.examples, &config.features, &resources)?;
    let pronouns = default_pronouns();
    let train_stats = corpus_stats(
        &train,
        &pronouns,
        &resources.lexicon,
        config.length_bin_width,
    )?;
    let test_stats = corpus_stats(
        &test,
        &pronouns,
        &resources.lexicon,
        config.length_bin_width,
    )?;
    Ok(PreparedData {
        train,
        test,
        train_features,
        test_features,
        resources,
        train_stats,
        test_stats,
    })
}

fn train_and_score(
    name: &str,
    config: &ExperimentConfig,
    seed: u64,
    trainset: &[FeaturizedExample],
    testset: &[FeaturizedExample],
    n_train: usize,
    observer: Option<&mut dyn EpochObserver>,
) -> Result<(RunResult, ParameterSet)> {
    let mut train_config = config.train.clone();
    train_config.seed = seed;
    let init = init_model(&config.model, seed)?;
    let outcome = train(init, trainset, &train_config, observer)?;
    let test_metrics: Metrics = evaluate(&outcome.params, testset)?;
    let train_metrics = evaluate(&outcome.params, trainset)?;
    let result = RunResult {
        name: name.to_string(),
        subset_size: trainset.len(),
        subset_pct_of_train: trainset.len() as f64 / n_train as f64,
        macro_f1: test_metrics.macro_f1,
        accuracy: test_metrics.accuracy,
        train_accuracy: train_metrics.accuracy,
        converged: train_metrics.accuracy >= config.convergence_threshold,
        epoch_losses: outcome.epoch_losses,
        confusion: test_metrics.confusion,
        failure: None,
    };
    Ok((result, outcome.params))
}

/// Trains on the full train split while recording dynamics, then evaluates
/// on the test split.
pub fn run_baseline(
    config: &ExperimentConfig,
    data: &PreparedData,
    seed: u64,
) -> Result<(RunResult, DynamicsLog, ParameterSet)> {
    run_baseline_with_log(config, data, seed, DynamicsLog::new())
}

/// [`run_baseline`] with a caller-supplied log (e.g. one mirroring to a file).
pub fn run_baseline_with_log(
    config: &ExperimentConfig,
    data: &PreparedData,
    seed: u64,
    log: DynamicsLog,
) -> Result<(RunResult, DynamicsLog, ParameterSet)> {
    let mut recorder = DynamicsRecorder::new(&data.train_features, log);
    let n = data.train_features.len();
    let (result, params) = train_and_score(
        "baseline",
        config,
        seed,
        &data.train_features,
        &data.test_features,
        n,
        Some(&mut recorder),
    )?;
    Ok((result, recorder.log, params))
}

/// Ids of a grid run: the union of its selections, ascending.
pub fn materialize_run(run: &GridRun, summaries: &[DynamicsSummary]) -> Result<Vec<String>> {
    let mut ids: Vec<String> = Vec::new();
    for spec in &run.selection {
        ids = mix_subsets(&ids, &select_subset(summaries, *spec)?);
    }
    Ok(ids)
}

/// Retrains a fresh model (same init seed for every run) on each grid
/// subset and evaluates it on the test split. Empty subsets and diverged
/// runs are recorded as failures.
pub fn run_grid(
    config: &ExperimentConfig,
    data: &PreparedData,
    summaries: &[DynamicsSummary],
    seed: u64,
) -> Result<Vec<RunResult>> {
    let index: HashMap<&str, usize> = data
        .train_features
        .iter()
        .enumerate()
        .map(|(i, e)| (e.id.as_str(), i))
        .collect();
    let n = data.train_features.len();
    let mut results = Vec::with_capacity(config.grid.len());
    for run in &config.grid {
        let ids = materialize_run(run, summaries)?;
        if ids.is_empty() {
            results.push(RunResult::failed(&run.name, 0, n, "empty subset".into()));
            continue;
        }
        let subset = ids
            .iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .map(|&i| data.train_features[i].clone())
                    .ok_or_else(|| {
                        Error::data(format!("summary id {id} is not in the train split"))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        match train_and_score(
            &run.name,
            config,
            seed,
            &subset,
            &data.test_features,
            n,
            None,
        ) {
            Ok((result, _)) => results.push(result),
            Err(e @ Error::Diverged { .. }) => {
                results.push(RunResult::failed(&run.name, ids.len(), n, e.to_string()))
            }
            Err(e) => return Err(e),
        }
    }
    Ok(results)
}

/// Everything produced for one training seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResults {
    pub seed: u64,
    /// Directory of this seed's artifacts, relative to the output directory.
    pub artifact_dir: String,
    /// Artifact name → path relative to the output directory.
    pub artifacts: BTreeMap<String, String>,
    pub region_counts: BTreeMap<Region, usize>,
    pub baseline: RunResult,
    pub grid: Vec<RunResult>,
}

/// Canonical machine-readable record of a whole experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub config: ExperimentConfig,
    pub n_train: usize,
    pub n_test: usize,
    pub train_domains: Vec<String>,
    pub test_domains: Vec<String>,
    pub train_stats: CorpusStats,
    pub test_stats: CorpusStats,
    pub seeds: Vec<SeedResults>,
}

fn write_text(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn seed_dir_name(index: usize, seed: u64) -> String {
    if index == 0 {
        String::new()
    } else {
        format!("seed-{seed}")
    }
}

fn rel(dir: &str, file: &str) -> String {
    if dir.is_empty() {
        file.to_string()
    } else {
        format!("{dir}/{file}")
    }
}

/// Runs baseline, map and grid for one seed, writing its artifacts under
/// `out_dir/dir_name`.
pub fn run_seed(
    config: &ExperimentConfig,
    data: &PreparedData,
    seed: u64,
    out_dir: &Path,
    dir_name: &str,
) -> Result<SeedResults> {
    let dir: PathBuf = out_dir.join(dir_name);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut artifacts = BTreeMap::new();
    let mut put = |key: &str, file: &str, body: &str| -> Result<()> {
        write_text(&dir.join(file), body)?;
        artifacts.insert(key.to_string(), rel(dir_name, file));
        Ok(())
    };

    let (baseline, log, params) = run_baseline(config, data, seed)?;
    let ckpt = dir.join("model.ckpt");
    save_checkpoint(&ckpt, &params, seed)?;
    put("dynamics", "dynamics.jsonl", &log.to_jsonl())?;
    let summaries = summarize(&log)?;
    write_summaries(dir.join("summaries.csv"), &summaries)?;
    put(
        "plot_table",
        "plot_table.csv",
        &export_plot_table(&summaries)?,
    )?;
    if config.plots {
        put("map", "map.svg", &render_map(&summaries, &config.plot)?)?;
        for d in Dimension::ALL {
            let hist = density_histogram(&summaries, d, config.density_bins)?;
            let file = format!("density-{d}.svg");
            put(
                &format!("density_{d}"),
                &file,
                &render_density(&hist, d.as_str(), &config.plot)?,
            )?;
        }
    }
    artifacts.insert("summaries".into(), rel(dir_name, "summaries.csv"));
    artifacts.insert("checkpoint".into(), rel(dir_name, "model.ckpt"));

    let region_counts = label_regions(&summaries)?.counts();
    let grid = run_grid(config, data, &summaries, seed)?;
    Ok(SeedResults {
        seed,
        artifact_dir: dir_name.to_string(),
        artifacts,
        region_counts,
        baseline,
        grid,
    })
}

/// Full pipeline for every configured seed. The first seed's artifacts go
/// directly into `out_dir`, later ones into `out_dir/seed-<s>`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentResults> {
    config.validate()?;
    let data = prepare_data(config)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut seeds = Vec::with_capacity(config.seeds.len());
    for (i, &seed) in config.seeds.iter().enumerate() {
        seeds.push(run_seed(
            config,
            &data,
            seed,
            out_dir,
            &seed_dir_name(i, seed),
        )?);
    }
    Ok(ExperimentResults {
        config: config.clone(),
        n_train: data.train.len(),
        n_test: data.test.len(),
        train_domains: data.train.domains.iter().cloned().collect(),
        test_domains: data.test.domains.iter().cloned().collect(),
        train_stats: data.train_stats,
        test_stats: data.test_stats,
        seeds,
    })
}
