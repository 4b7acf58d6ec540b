use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cartoplot::PlotConfig;
use crate::corpus::SynthConfig;
use crate::dynamics::{Region, SelectionSpec};
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::model::{ModelConfig, TrainConfig};

/// Environment variable that replaces the training seed(s) of a config.
pub const SEED_ENV: &str = "CARTOGRAF_SEED";

/// Paths to an external dataset pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub train: PathBuf,
    pub test: PathBuf,
}

/// One subset-retraining run: the union of its selections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRun {
    pub name: String,
    pub selection: Vec<SelectionSpec>,
}

impl GridRun {
    pub fn new(name: &str, selection: &[(Region, f64)]) -> Self {
        Self {
            name: name.to_string(),
            selection: selection
                .iter()
                .map(|&(region, fraction)| SelectionSpec { region, fraction })
                .collect(),
        }
    }
}

/// The eight subset runs of the reference experiment.
pub fn default_grid() -> Vec<GridRun> {
    use Region::{Ambiguous, Easy, Hard};
    vec![
        GridRun::new("easy-50", &[(Easy, 0.50)]),
        GridRun::new("ambiguous-15+easy-15", &[(Ambiguous, 0.15), (Easy, 0.15)]),
        GridRun::new("ambiguous-15", &[(Ambiguous, 0.15)]),
        GridRun::new("ambiguous-25", &[(Ambiguous, 0.25)]),
        GridRun::new("ambiguous-45", &[(Ambiguous, 0.45)]),
        GridRun::new("ambiguous-75", &[(Ambiguous, 0.75)]),
        GridRun::new("ambiguous-45+easy-25", &[(Ambiguous, 0.45), (Easy, 0.25)]),
        GridRun::new("hard-50", &[(Hard, 0.50)]),
    ]
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_threshold() -> f64 {
    0.55
}

fn default_bin_width() -> usize {
    50
}

fn default_density_bins() -> usize {
    10
}

fn default_true() -> bool {
    true
}

/// Everything `experiment` needs, read from one TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Training seeds; one full pipeline per seed. Empty means `[train.seed]`.
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Final train accuracy below this marks a run as non-converged.
    #[serde(default = "default_threshold")]
    pub convergence_threshold: f64,
    #[serde(default = "default_bin_width")]
    pub length_bin_width: usize,
    #[serde(default = "default_density_bins")]
    pub density_bins: usize,
    /// Render map and density SVGs.
    #[serde(default = "default_true")]
    pub plots: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthConfig>,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub plot: PlotConfig,
    #[serde(default = "default_grid")]
    pub grid: Vec<GridRun>,
}

impl ExperimentConfig {
    /// Parses TOML text. Relative data and resource paths resolve against
    /// `base`; the model's input shape is copied from the feature section.
    pub fn parse(body: &str, base: &Path) -> Result<Self> {
        let mut config: ExperimentConfig =
            toml::from_str(body).map_err(|e| Error::config(e.to_string()))?;
        config.resolve_paths(base);
        config.model.max_len = config.features.max_len;
        config.model.input_dim = config.features.dim;
        if config.seeds.is_empty() {
            config.seeds.push(config.train.seed);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&body, base).map_err(|e| match e {
            Error::Config(m) => Error::config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(d) = self.data.as_mut() {
            fix(&mut d.train);
            fix(&mut d.test);
        }
        let f = &mut self.features;
        for p in [
            &mut f.lexicon,
            &mut f.dictionary,
            &mut f.stoplist,
            &mut f.frequencies,
            &mut f.embeddings,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    /// Replaces every training seed with `value` (the `CARTOGRAF_SEED`
    /// override). The synthetic corpus seed is left alone.
    pub fn override_seed(&mut self, value: &str) -> Result<()> {
        let seed: u64 = value.trim().parse().map_err(|_| {
            Error::config(format!("{SEED_ENV}={value:?} is not an unsigned integer"))
        })?;
        self.train.seed = seed;
        self.seeds = vec![seed];
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.data, &self.synth) {
            (Some(_), Some(_)) => {
                return Err(Error::config("give either [data] or [synth], not both"))
            }
            (None, None) => return Err(Error::config("one of [data] or [synth] is required")),
            (None, Some(s)) => s.validate()?,
            (Some(_), None) => {}
        }
        self.features.validate()?;
        self.model.validate()?;
        self.train.validate()?;
        self.plot.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        if !(0.0..=1.0).contains(&self.convergence_threshold) {
            return Err(Error::config("convergence_threshold must lie in [0, 1]"));
        }
        if self.length_bin_width == 0 || self.density_bins == 0 {
            return Err(Error::config(
                "length_bin_width and density_bins must be >= 1",
            ));
        }
        let mut names = BTreeSet::new();
        for run in &self.grid {
            if run.name.is_empty() || run.name == "baseline" {
                return Err(Error::config(format!("invalid run name {:?}", run.name)));
            }
            if !names.insert(run.name.as_str()) {
                return Err(Error::config(format!("duplicate run name {:?}", run.name)));
            }
            if run.selection.is_empty() {
                return Err(Error::config(format!("run {:?} selects nothing", run.name)));
            }
            for s in &run.selection {
                s.validate()
                    .map_err(|e| Error::config(format!("run {:?}: {e}", run.name)))?;
            }
        }
        Ok(())
    }
}
