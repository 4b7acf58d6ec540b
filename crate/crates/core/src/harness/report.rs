use std::fmt::Write as _;
use std::path::Path;

use super::pipeline::{ExperimentResults, RunResult, SeedResults};
use crate::corpus::{CorpusStats, Label};
use crate::error::{Error, Result};

/// Pretty-printed JSON with struct-declared field order and sorted maps.
pub fn results_to_json(results: &ExperimentResults) -> Result<String> {
    let mut body = serde_json::to_string_pretty(results)
        .map_err(|e| Error::data(format!("serializing results: {e}")))?;
    body.push('\n');
    Ok(body)
}

pub fn parse_results_json(body: &str) -> Result<ExperimentResults> {
    serde_json::from_str(body).map_err(|e| Error::data(format!("results.json: {e}")))
}

pub fn read_results(path: impl AsRef<Path>) -> Result<ExperimentResults> {
    let path = path.as_ref();
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_results_json(&body)
}

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

fn run_row(out: &mut String, label: &str, r: &RunResult) {
    let status = match (&r.failure, r.converged) {
        (Some(reason), _) => format!("failed: {reason}"),
        (None, true) => "yes".into(),
        (None, false) => "no".into(),
    };
    let _ = writeln!(
        out,
        "| {label} | {} | {} | {} | {} | {} | {status} |",
        r.subset_size,
        pct(r.subset_pct_of_train),
        pct(r.macro_f1),
        pct(r.accuracy),
        pct(r.train_accuracy),
    );
}

fn stats_table(out: &mut String, title: &str, stats: &CorpusStats) {
    let _ = writeln!(out, "### {title}\n");
    out.push_str(
        "| class | examples | pronouns | mean positive | mean negative | length peaks (chars) |\n",
    );
    out.push_str("|---|---|---|---|---|---|\n");
    for label in Label::ALL {
        let Some(n) = stats.examples_per_class.get(&label) else {
            continue;
        };
        let peaks = stats
            .length_histogram_per_class
            .get(&label)
            .map(|h| length_peaks(h, stats.length_bin_width))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "| {label} | {n} | {} | {:.3} | {:.3} | {peaks} |",
            stats
                .pronoun_count_per_class
                .get(&label)
                .copied()
                .unwrap_or(0),
            stats.mean_pos_per_class.get(&label).copied().unwrap_or(0.0),
            stats.mean_neg_per_class.get(&label).copied().unwrap_or(0.0),
        );
    }
    out.push('\n');
}

/// Bin starts of local maxima in a sparse length histogram, largest first,
/// at most two.
fn length_peaks(hist: &[(usize, usize)], width: usize) -> String {
    let count_at = |start: usize| {
        hist.iter()
            .find(|(s, _)| *s == start)
            .map(|(_, c)| *c)
            .unwrap_or(0)
    };
    let mut peaks: Vec<(usize, usize)> = hist
        .iter()
        .filter(|(s, c)| {
            let left = if *s >= width { count_at(s - width) } else { 0 };
            *c > left && *c >= count_at(s + width)
        })
        .copied()
        .collect();
    peaks.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    peaks
        .iter()
        .take(2)
        .map(|(s, _)| format!("{s}-{}", s + width))
        .collect::<Vec<_>>()
        .join(", ")
}

fn seed_section(out: &mut String, s: &SeedResults) {
    let _ = writeln!(out, "## Seed {}\n", s.seed);
    out.push_str(
        "| run | subset size | % of train | macro F1 | accuracy | train accuracy | converged |\n",
    );
    out.push_str("|---|---|---|---|---|---|---|\n");
    run_row(out, "baseline (full train split)", &s.baseline);
    for r in &s.grid {
        run_row(out, &r.name, r);
    }
    out.push('\n');
    let regions: Vec<String> = s
        .region_counts
        .iter()
        .map(|(r, c)| format!("{r} {c}"))
        .collect();
    let _ = writeln!(
        out,
        "Region sizes of the data map: {}.\n",
        regions.join(", ")
    );
    if let Some(map) = s.artifacts.get("map") {
        let _ = writeln!(out, "![data map]({map})\n");
    }
    let densities: Vec<String> = ["confidence", "variability", "correctness"]
        .iter()
        .filter_map(|d| {
            s.artifacts
                .get(&format!("density_{d}"))
                .map(|p| format!("![{d} density]({p})"))
        })
        .collect();
    if !densities.is_empty() {
        let _ = writeln!(out, "{}\n", densities.join(" "));
    }
}

fn mean_table(out: &mut String, results: &ExperimentResults) {
    let n = results.seeds.len() as f64;
    out.push_str("## Mean over seeds\n\n");
    out.push_str("| run | macro F1 | converged seeds |\n|---|---|---|\n");
    let mean_row =
        |out: &mut String, name: &str, pick: &dyn Fn(&SeedResults) -> Option<&RunResult>| {
            let runs: Vec<&RunResult> = results.seeds.iter().filter_map(pick).collect();
            let f1 = runs.iter().map(|r| r.macro_f1).sum::<f64>() / n;
            let conv = runs.iter().filter(|r| r.converged).count();
            let _ = writeln!(out, "| {name} | {} | {conv}/{} |", pct(f1), runs.len());
        };
    mean_row(out, "baseline", &|s| Some(&s.baseline));
    for run in &results.config.grid {
        mean_row(out, &run.name, &|s| {
            s.grid.iter().find(|r| r.name == run.name)
        });
    }
    out.push('\n');
}

/// Markdown summary of an experiment.
pub fn render_report(results: &ExperimentResults) -> String {
    let mut out = String::from("# Data map experiment\n\n");
    let _ = writeln!(
        out,
        "Train split: {} examples from domains {}. Test split: {} examples from domains {}.\n",
        results.n_train,
        results.train_domains.join(", "),
        results.n_test,
        results.test_domains.join(", "),
    );
    let t = &results.config.train;
    let seeds: Vec<String> = results.seeds.iter().map(|s| s.seed.to_string()).collect();
    let _ = writeln!(
        out,
        "Training: {} epochs, batch size {}, learning rate {}, {:?} optimizer. Seeds: {}. \
         A run counts as converged when its final train accuracy is at least {}.\n",
        t.epochs,
        t.batch_size,
        t.learning_rate,
        t.optimizer,
        seeds.join(", "),
        results.config.convergence_threshold,
    );
    out.push_str("F1, accuracy and subset shares are percentages; F1 is macro-averaged over the two classes and measured on the test split.\n\n");
    out.push_str("## Corpus statistics\n\n");
    stats_table(&mut out, "Train split", &results.train_stats);
    stats_table(&mut out, "Test split", &results.test_stats);
    for s in &results.seeds {
        seed_section(&mut out, s);
    }
    if results.seeds.len() > 1 {
        mean_table(&mut out, results);
    }
    out
}

/// Writes `results.json` and `report.md` into `out_dir`.
pub fn emit_report(results: &ExperimentResults, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let json_path = out_dir.join("results.json");
    std::fs::write(&json_path, results_to_json(results)?).map_err(|e| Error::io(&json_path, e))?;
    let md_path = out_dir.join("report.md");
    std::fs::write(&md_path, render_report(results)).map_err(|e| Error::io(&md_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peaks_of_bimodal_histogram() {
        let h = vec![(50, 2), (100, 9), (150, 3), (400, 4), (450, 7), (500, 1)];
        assert_eq!(length_peaks(&h, 50), "100-150, 450-500");
    }
}
