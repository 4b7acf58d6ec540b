//! Labeled examples, dataset splits, the TSV dataset format, the synthetic
//! stand-in corpus and exploratory corpus statistics.

mod stats;
mod synth;
mod tsv;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use stats::{
    class_sentiment_means, corpus_stats, length_histogram, pronoun_count, CorpusStats,
    LengthHistogram,
};
pub use synth::{generate_synthetic_corpus, SynthConfig, SyntheticVocabulary, WordGroup};
pub use tsv::{escape_text, parse_dataset, serialize_dataset, unescape_text, DATASET_HEADER};

/// Shipped English pronoun inventory (subject, object, possessive, reflexive).
pub const DEFAULT_PRONOUNS: &str = include_str!("../../data/pronouns.txt");

/// Binary class of a text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Human,
    Generated,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Human, Label::Generated];

    /// Class index used by the model: 0 = human, 1 = generated.
    pub fn index(self) -> usize {
        match self {
            Label::Human => 0,
            Label::Generated => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<Label> {
        match index {
            0 => Some(Label::Human),
            1 => Some(Label::Generated),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Human => "human",
            Label::Generated => "generated",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "human" => Ok(Label::Human),
            "generated" => Ok(Label::Generated),
            other => Err(Error::data(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub id: String,
    pub text: String,
    pub label: Label,
    pub domain: String,
}

/// An example before it has been given an internal id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawExample {
    pub text: String,
    pub label: Label,
    pub domain: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Test,
}

impl SplitName {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Test => "test",
        }
    }
}

impl FromStr for SplitName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitName::Train),
            "test" => Ok(SplitName::Test),
            other => Err(Error::data(format!("unknown split {other:?}"))),
        }
    }
}

/// An ordered collection of examples. Iteration order is file (or
/// generation) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub examples: Vec<Example>,
    pub domains: BTreeSet<String>,
}

impl DatasetSplit {
    pub fn new(name: SplitName, examples: Vec<Example>) -> Self {
        let domains = examples.iter().map(|e| e.domain.clone()).collect();
        Self {
            name,
            examples,
            domains,
        }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for e in &self.examples {
            counts[e.label.index()] += 1;
        }
        counts
    }
}

/// Checks that a train/test pair shares no domain.
pub fn check_disjoint_domains(train: &DatasetSplit, test: &DatasetSplit) -> Result<()> {
    let shared: Vec<&String> = train.domains.intersection(&test.domains).collect();
    if shared.is_empty() {
        Ok(())
    } else {
        Err(Error::data(format!(
            "train and test splits share domains: {}",
            shared
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        )))
    }
}

/// Reads a dataset TSV (`id\tlabel\tdomain\ttext`).
pub fn load_dataset(path: impl AsRef<Path>, split: SplitName) -> Result<DatasetSplit> {
    let path = path.as_ref();
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&body, split).map_err(|e| match e {
        Error::Data(msg) => Error::data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_dataset(path: impl AsRef<Path>, split: &DatasetSplit) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, serialize_dataset(split)).map_err(|e| Error::io(path, e))
}

/// Formats the internal id of the `index`-th example.
pub fn format_id(index: usize) -> String {
    format!("e{index:07}")
}

/// Gives every example a sequential zero-padded id in input order.
pub fn assign_ids(examples: Vec<RawExample>) -> Vec<Example> {
    examples
        .into_iter()
        .enumerate()
        .map(|(i, raw)| Example {
            id: format_id(i),
            text: raw.text,
            label: raw.label,
            domain: raw.domain,
        })
        .collect()
}

/// Parses a one-token-per-line word list (blank lines ignored, lowercased).
pub fn parse_word_list(body: &str) -> BTreeSet<String> {
    body.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn load_word_list(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    let path = path.as_ref();
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_word_list(&body))
}

pub fn default_pronouns() -> BTreeSet<String> {
    parse_word_list(DEFAULT_PRONOUNS)
}
