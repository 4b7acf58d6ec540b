//! Text to model input: a padded token-embedding matrix plus six scalar
//! features (positive and negative lexicon scores, misspelling rate, mean
//! syllables per token, stop-word rate, mean log word frequency).

mod binfmt;
mod resources;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::corpus::Example;
use crate::error::{Error, Result};

pub use binfmt::{decode_features, encode_features, read_features, write_features, FEATURES_MAGIC};
pub use resources::{
    synthetic_embeddings, EmbeddingTable, FeatureResources, FrequencyTable, SentimentLexicon,
};

/// Number of scalar features per example.
pub const SCALAR_DIM: usize = 6;

pub const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");
pub const DEFAULT_LEXICON: &str = include_str!("../../data/lexicon.tsv");

pub fn default_stopwords() -> BTreeSet<String> {
    crate::corpus::parse_word_list(DEFAULT_STOPWORDS)
}

pub fn default_lexicon() -> SentimentLexicon {
    SentimentLexicon::parse(DEFAULT_LEXICON).expect("shipped lexicon parses")
}

fn default_max_len() -> usize {
    64
}

fn default_dim() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dictionary: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stoplist: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            max_len: default_max_len(),
            dim: default_dim(),
            lexicon: None,
            dictionary: None,
            stoplist: None,
            frequencies: None,
            embeddings: None,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_len < 1 {
            return Err(Error::config("max_len must be >= 1"));
        }
        if self.dim < 1 {
            return Err(Error::config("dim must be >= 1"));
        }
        Ok(())
    }
}

/// Model-ready form of one example.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturizedExample {
    pub id: String,
    pub max_len: usize,
    pub dim: usize,
    /// Row-major `max_len x dim`; padding rows are zero.
    pub matrix: Vec<f64>,
    /// `[pos, neg, misspell_rate, syllable_mean, stopword_rate, mean_log_freq]`
    pub scalars: [f64; SCALAR_DIM],
    /// 0 = human, 1 = generated.
    pub gold: usize,
}

fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '\u{2019}'
}

/// Lowercased maximal runs of letters, digits and apostrophes.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !is_token_char(c))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Lexicon-sum sentiment, each side normalized by `4 * |tokens|` so both
/// scores land in `[0, 1]`.
pub fn sentiment_scores(tokens: &[String], lexicon: &SentimentLexicon) -> (f64, f64) {
    if tokens.is_empty() {
        return (0.0, 0.0);
    }
    let (mut pos, mut neg) = (0.0, 0.0);
    for t in tokens {
        match lexicon.valence(t) {
            Some(v) if v > 0.0 => pos += v,
            Some(v) if v < 0.0 => neg -= v,
            _ => {}
        }
    }
    let denom = 4.0 * tokens.len() as f64;
    (pos / denom, neg / denom)
}

fn is_numeric_token(t: &str) -> bool {
    t.chars().all(char::is_numeric)
}

/// Tokens missing from the dictionary; purely numeric tokens are skipped.
pub fn misspelling_count(tokens: &[String], dictionary: &HashSet<String>) -> usize {
    tokens
        .iter()
        .filter(|t| !is_numeric_token(t) && !dictionary.contains(t.as_str()))
        .count()
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel-run syllable estimate with a silent final `e`, never below 1.
pub fn syllable_count(word: &str) -> usize {
    let chars: Vec<char> = word.chars().flat_map(char::to_lowercase).collect();
    let mut runs = 0;
    let mut prev_vowel = false;
    for &c in &chars {
        let v = is_vowel(c);
        if v && !prev_vowel {
            runs += 1;
        }
        prev_vowel = v;
    }
    let n = chars.len();
    let lone_final_e = n >= 1 && chars[n - 1] == 'e' && (n == 1 || !is_vowel(chars[n - 2]));
    if lone_final_e && runs > 1 {
        runs -= 1;
    }
    runs.max(1)
}

pub fn stopword_count(tokens: &[String], stoplist: &HashSet<String>) -> usize {
    tokens
        .iter()
        .filter(|t| stoplist.contains(t.as_str()))
        .count()
}

/// Mean of `ln(1 + freq(t))`; unknown tokens count as frequency 0.
pub fn mean_log_frequency(tokens: &[String], freq: &HashMap<String, f64>) -> f64 {
    if tokens.is_empty() {
        return 0.0;
    }
    let sum: f64 = tokens
        .iter()
        .map(|t| freq.get(t.as_str()).copied().unwrap_or(0.0).ln_1p())
        .sum();
    sum / tokens.len() as f64
}

/// Row-major `max_len x dim` matrix: one row per token (unknown tokens give
/// zero rows), zero padding, tokens past `max_len` dropped.
pub fn embed(tokens: &[String], table: &EmbeddingTable, max_len: usize) -> Vec<f64> {
    let dim = table.dim();
    let mut matrix = vec![0.0; max_len * dim];
    for (row, token) in matrix.chunks_exact_mut(dim).zip(tokens) {
        if let Some(v) = table.get(token) {
            row.copy_from_slice(v);
        }
    }
    matrix
}

pub fn featurize(
    example: &Example,
    config: &FeatureConfig,
    resources: &FeatureResources,
) -> Result<FeaturizedExample> {
    if config.dim != resources.embeddings.dim() {
        return Err(Error::Shape(format!(
            "feature config dim {} but embedding table dim {}",
            config.dim,
            resources.embeddings.dim()
        )));
    }
    config.validate()?;
    let tokens = tokenize(&example.text);
    let matrix = embed(&tokens, &resources.embeddings, config.max_len);
    let scalars = if tokens.is_empty() {
        [0.0; SCALAR_DIM]
    } else {
        let n = tokens.len() as f64;
        let (pos, neg) = sentiment_scores(&tokens, &resources.lexicon);
        let syllables: usize = tokens.iter().map(|t| syllable_count(t)).sum();
        [
            pos,
            neg,
            misspelling_count(&tokens, &resources.dictionary) as f64 / n,
            syllables as f64 / n,
            stopword_count(&tokens, &resources.stoplist) as f64 / n,
            mean_log_frequency(&tokens, resources.frequencies.counts()),
        ]
    };
    Ok(FeaturizedExample {
        id: example.id.clone(),
        max_len: config.max_len,
        dim: config.dim,
        matrix,
        scalars,
        gold: example.label.index(),
    })
}

pub fn featurize_all(
    examples: &[Example],
    config: &FeatureConfig,
    resources: &FeatureResources,
) -> Result<Vec<FeaturizedExample>> {
    examples
        .iter()
        .map(|e| featurize(e, config, resources))
        .collect()
}
