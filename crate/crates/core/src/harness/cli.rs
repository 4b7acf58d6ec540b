use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use super::config::{ExperimentConfig, SEED_ENV};
use super::pipeline::{run_experiment, RunResult};
use super::report::{emit_report, read_results, render_report};
use crate::cartoplot::{export_plot_table, render_density, render_map, PlotConfig};
use crate::corpus::{
    check_disjoint_domains, corpus_stats, default_pronouns, generate_synthetic_corpus,
    load_dataset, load_word_list, write_dataset, DatasetSplit, SplitName, SynthConfig,
    SyntheticVocabulary,
};
use crate::dynamics::{
    density_histogram, mix_subsets, read_summaries, select_subset, summarize, write_summaries,
    Dimension, DynamicsLog, DynamicsRecorder, Region, SelectionSpec,
};
use crate::error::{Error, Result};
use crate::features::{
    default_lexicon, featurize_all, read_features, synthetic_embeddings, write_features,
    FeatureResources, FeaturizedExample, SentimentLexicon,
};
use crate::model::{evaluate, init_model, save_checkpoint, train};

#[derive(Debug, Parser)]
#[command(
    name = "cartograf",
    version,
    about = "Training dynamics, data maps and subset retraining for a text CNN"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic human/generated corpus with disjoint train and test domains.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Examples per class per domain.
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        train_domains: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        test_domains: Vec<String>,
        #[arg(long, default_value_t = 0.3)]
        skew: f64,
        /// Share of train examples carrying domain markers.
        #[arg(long, default_value_t = SynthConfig::DEFAULT_MARKED_SHARE)]
        marked_share: f64,
        /// Share of examples with no class-bearing words.
        #[arg(long, default_value_t = SynthConfig::DEFAULT_PLAIN_SHARE)]
        plain_share: f64,
        /// Dimension of the synthetic embeddings written alongside the corpus.
        #[arg(long, default_value_t = 16)]
        dim: usize,
    },
    /// Validate a dataset file and print its corpus statistics as JSON.
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = parse_split)]
        split: SplitName,
        #[arg(long)]
        pronouns: Option<PathBuf>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        bin_width: usize,
        /// Test split to check for domain overlap with the input.
        #[arg(long)]
        against: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Turn a dataset file into the binary feature format.
    Featurize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_split, default_value = "train")]
        split: SplitName,
        /// Train split used for the frequency table when the config names none.
        #[arg(long)]
        train: Option<PathBuf>,
    },
    /// Train a model, optionally recording per-epoch dynamics.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dynamics_log: Option<PathBuf>,
    },
    /// Summarize a dynamics log into per-example statistics.
    Map {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the plot table (summaries plus region column).
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Render the data map as SVG.
    Plot {
        #[arg(long)]
        summaries: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Experiment config whose [plot] section to use.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Render a density bar chart of one statistic.
    PlotDensity {
        #[arg(long)]
        summaries: PathBuf,
        #[arg(long, value_parser = parse_dimension)]
        dimension: Dimension,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Select example ids from a data map region.
    Select {
        #[arg(long)]
        summaries: PathBuf,
        #[arg(long, value_parser = parse_region)]
        region: Region,
        #[arg(long)]
        fraction: f64,
        /// Further REGION:FRACTION selections to union with the first.
        #[arg(long, value_parser = parse_selection)]
        mix: Vec<SelectionSpec>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a fresh model on an id subset and evaluate it on a test split.
    Retrain {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        ids: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "retrain")]
        name: String,
    },
    /// Run the whole pipeline from one config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides out_dir from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render report.md from results.json.
    Report {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_split(s: &str) -> std::result::Result<SplitName, String> {
    match s {
        "train" => Ok(SplitName::Train),
        "test" => Ok(SplitName::Test),
        _ => Err("expected train or test".into()),
    }
}

fn parse_region(s: &str) -> std::result::Result<Region, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_dimension(s: &str) -> std::result::Result<Dimension, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_selection(s: &str) -> std::result::Result<SelectionSpec, String> {
    let (region, fraction) = s.split_once(':').ok_or("expected REGION:FRACTION")?;
    let spec = SelectionSpec {
        region: parse_region(region)?,
        fraction: fraction
            .parse()
            .map_err(|_| format!("bad fraction {fraction:?}"))?,
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code: 0 success, 1 usage, 2 data or
/// configuration error, 3 divergence.
pub fn cli_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(path)?;
    if let Ok(value) = std::env::var(SEED_ENV) {
        config.override_seed(&value)?;
    }
    Ok(config)
}

fn write_text(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn read_ids(path: &Path) -> Result<Vec<String>> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(body
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

fn ids_text(ids: &[String]) -> String {
    ids.iter().map(|id| format!("{id}\n")).collect()
}

fn plot_config(path: Option<&Path>) -> Result<PlotConfig> {
    match path {
        Some(p) => Ok(load_config(p)?.plot),
        None => Ok(PlotConfig::default()),
    }
}

fn print_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value).map_err(|e| Error::data(e.to_string()))?;
    body.push('\n');
    match out {
        Some(p) => write_text(p, &body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

/// Feature resources for a config: the synthetic vocabulary when the config
/// generates its corpus and names no embeddings, otherwise files on disk.
fn resources_for(
    config: &ExperimentConfig,
    train: Option<&DatasetSplit>,
) -> Result<FeatureResources> {
    match (&config.synth, &config.features.embeddings) {
        (Some(s), None) => {
            let vocab = SyntheticVocabulary::build(s)?;
            let generated;
            let train = match train {
                Some(t) => t,
                None => {
                    generated = generate_synthetic_corpus(s)?.0;
                    &generated
                }
            };
            FeatureResources::synthetic(&vocab, train, config.features.dim, s.seed)
        }
        _ => FeatureResources::load(&config.features, Path::new("."), train),
    }
}

fn subset_features(all: Vec<FeaturizedExample>, ids: &[String]) -> Result<Vec<FeaturizedExample>> {
    let mut by_id: std::collections::HashMap<String, FeaturizedExample> =
        all.into_iter().map(|e| (e.id.clone(), e)).collect();
    let mut sorted: Vec<&String> = ids.iter().collect();
    sorted.sort();
    sorted.dedup();
    sorted
        .into_iter()
        .map(|id| {
            by_id
                .remove(id)
                .ok_or_else(|| Error::data(format!("id {id} not found in the feature file")))
        })
        .collect()
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth {
            seed,
            out,
            n,
            train_domains,
            test_domains,
            skew,
            marked_share,
            plain_share,
            dim,
        } => {
            let config = SynthConfig {
                n_per_class_per_domain: n,
                train_domains,
                test_domains,
                sentiment_skew: skew,
                seed,
                marked_share,
                plain_share,
            };
            let (train_split, test_split) = generate_synthetic_corpus(&config)?;
            let vocab = SyntheticVocabulary::build(&config)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            write_dataset(out.join("train.tsv"), &train_split)?;
            write_dataset(out.join("test.tsv"), &test_split)?;
            write_text(
                &out.join("embeddings.txt"),
                &synthetic_embeddings(&vocab, dim, seed)?.to_word2vec(),
            )?;
            let words: std::collections::BTreeSet<&String> = vocab.words().collect();
            let dictionary: String = words.into_iter().map(|w| format!("{w}\n")).collect();
            write_text(&out.join("dictionary.txt"), &dictionary)?;
            println!(
                "wrote {} train and {} test examples to {}",
                train_split.len(),
                test_split.len(),
                out.display()
            );
            Ok(())
        }
        Command::Ingest {
            input,
            split,
            pronouns,
            lexicon,
            bin_width,
            against,
            out,
        } => {
            let data = load_dataset(&input, split)?;
            if let Some(other) = against {
                let other_name = match split {
                    SplitName::Train => SplitName::Test,
                    SplitName::Test => SplitName::Train,
                };
                let other = load_dataset(&other, other_name)?;
                check_disjoint_domains(&data, &other)?;
            }
            let pronouns = match pronouns {
                Some(p) => load_word_list(p)?,
                None => default_pronouns(),
            };
            let lexicon = match lexicon {
                Some(p) => SentimentLexicon::load(p)?,
                None => default_lexicon(),
            };
            let stats = corpus_stats(&data, &pronouns, &lexicon, bin_width)?;
            print_json(&stats, out.as_deref())
        }
        Command::Featurize {
            config,
            input,
            out,
            split,
            train: train_path,
        } => {
            let config = load_config(&config)?;
            let data = load_dataset(&input, split)?;
            let train_split = match (&train_path, split) {
                (Some(p), _) => Some(load_dataset(p, SplitName::Train)?),
                (None, SplitName::Train) => Some(data.clone()),
                (None, SplitName::Test) => None,
            };
            let resources = resources_for(&config, train_split.as_ref())?;
            let features = featurize_all(&data.examples, &config.features, &resources)?;
            write_features(
                &out,
                &features,
                config.features.max_len,
                config.features.dim,
            )?;
            println!(
                "featurized {} examples into {}",
                features.len(),
                out.display()
            );
            Ok(())
        }
        Command::Train {
            config,
            features,
            out,
            dynamics_log,
        } => {
            let config = load_config(&config)?;
            let trainset = read_features(&features)?;
            let params = init_model(&config.model, config.train.seed)?;
            let outcome = match &dynamics_log {
                Some(path) => {
                    let file = File::create(path).map_err(|e| Error::io(path, e))?;
                    let sink: Box<dyn Write> = Box::new(BufWriter::new(file));
                    let mut recorder =
                        DynamicsRecorder::new(&trainset, DynamicsLog::with_sink(sink));
                    let outcome = train(params, &trainset, &config.train, Some(&mut recorder))?;
                    recorder.log.flush()?;
                    outcome
                }
                None => train(params, &trainset, &config.train, None)?,
            };
            save_checkpoint(&out, &outcome.params, config.train.seed)?;
            for (e, loss) in outcome.epoch_losses.iter().enumerate() {
                println!("epoch {e}: loss {loss:.6}");
            }
            Ok(())
        }
        Command::Map { log, out, table } => {
            let log = DynamicsLog::read(&log)?;
            let summaries = summarize(&log)?;
            write_summaries(&out, &summaries)?;
            if let Some(t) = table {
                write_text(&t, &export_plot_table(&summaries)?)?;
            }
            println!(
                "summarized {} examples into {}",
                summaries.len(),
                out.display()
            );
            Ok(())
        }
        Command::Plot {
            summaries,
            out,
            config,
        } => {
            let plot = plot_config(config.as_deref())?;
            let summaries = read_summaries(&summaries)?;
            write_text(&out, &render_map(&summaries, &plot)?)
        }
        Command::PlotDensity {
            summaries,
            dimension,
            out,
            bins,
            config,
        } => {
            let plot = plot_config(config.as_deref())?;
            let summaries = read_summaries(&summaries)?;
            let hist = density_histogram(&summaries, dimension, bins)?;
            write_text(&out, &render_density(&hist, dimension.as_str(), &plot)?)
        }
        Command::Select {
            summaries,
            region,
            fraction,
            mix,
            out,
        } => {
            let summaries = read_summaries(&summaries)?;
            let first = SelectionSpec { region, fraction };
            let mut ids = select_subset(&summaries, first)?;
            for spec in mix {
                ids = mix_subsets(&ids, &select_subset(&summaries, spec)?);
            }
            write_text(&out, &ids_text(&ids))?;
            println!("selected {} of {} examples", ids.len(), summaries.len());
            Ok(())
        }
        Command::Retrain {
            config,
            features,
            ids,
            test,
            out,
            name,
        } => {
            let config = load_config(&config)?;
            let all = read_features(&features)?;
            let n_train = all.len();
            let ids = read_ids(&ids)?;
            let subset = subset_features(all, &ids)?;
            if subset.is_empty() {
                return Err(Error::data("the id subset is empty"));
            }
            let testset = read_features(&test)?;
            let params = init_model(&config.model, config.train.seed)?;
            let outcome = train(params, &subset, &config.train, None)?;
            let test_metrics = evaluate(&outcome.params, &testset)?;
            let train_metrics = evaluate(&outcome.params, &subset)?;
            if let Some(p) = &out {
                save_checkpoint(p, &outcome.params, config.train.seed)?;
            }
            let result = RunResult {
                name,
                subset_size: subset.len(),
                subset_pct_of_train: subset.len() as f64 / n_train as f64,
                macro_f1: test_metrics.macro_f1,
                accuracy: test_metrics.accuracy,
                train_accuracy: train_metrics.accuracy,
                converged: train_metrics.accuracy >= config.convergence_threshold,
                epoch_losses: outcome.epoch_losses,
                confusion: test_metrics.confusion,
                failure: None,
            };
            print_json(&result, None)
        }
        Command::Experiment { config, out } => {
            let config = load_config(&config)?;
            let out_dir = out.unwrap_or_else(|| config.out_dir.clone());
            let results = run_experiment(&config, &out_dir)?;
            emit_report(&results, &out_dir)?;
            for s in &results.seeds {
                println!(
                    "seed {}: baseline macro F1 {:.3}, {} grid runs",
                    s.seed,
                    s.baseline.macro_f1,
                    s.grid.len()
                );
            }
            println!("wrote {}", out_dir.join("results.json").display());
            Ok(())
        }
        Command::Report { results, out } => {
            let results = read_results(&results)?;
            write_text(&out, &render_report(&results))
        }
    }
}
