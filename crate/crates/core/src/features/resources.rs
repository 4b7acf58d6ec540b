//! Lexicon, dictionary, stop list, frequency table and embedding resources.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use super::{default_lexicon, default_stopwords, tokenize, FeatureConfig};
use crate::corpus::{load_word_list, DatasetSplit, SyntheticVocabulary, WordGroup};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

const MAX_VALENCE: f64 = 4.0;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Token valences in `[-4, 4]`, keyed by lowercase token.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SentimentLexicon {
    entries: HashMap<String, f64>,
}

impl SentimentLexicon {
    /// Builds a lexicon, lowercasing tokens and clamping valences.
    pub fn from_entries<S: AsRef<str>>(entries: impl IntoIterator<Item = (S, f64)>) -> Self {
        Self {
            entries: entries
                .into_iter()
                .map(|(t, v)| {
                    (
                        t.as_ref().to_lowercase(),
                        v.clamp(-MAX_VALENCE, MAX_VALENCE),
                    )
                })
                .collect(),
        }
    }

    /// Parses `token\tvalence` lines.
    pub fn parse(body: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in body.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (token, value) = line.split_once('\t').ok_or_else(|| {
                Error::data(format!(
                    "lexicon line {}: expected token<TAB>valence",
                    i + 1
                ))
            })?;
            let v: f64 = value.trim().parse().map_err(|_| {
                Error::data(format!("lexicon line {}: bad valence {value:?}", i + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::data(format!(
                    "lexicon line {}: non-finite valence",
                    i + 1
                )));
            }
            entries.push((token.trim().to_string(), v));
        }
        Ok(Self::from_entries(entries))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&read(path)?).map_err(|e| match e {
            Error::Data(m) => Error::data(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn valence(&self, token: &str) -> Option<f64> {
        self.entries.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sorted_entries(&self) -> Vec<(String, f64)> {
        let mut v: Vec<(String, f64)> = self.entries.iter().map(|(k, v)| (k.clone(), *v)).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }
}

/// Token counts used by the mean log frequency feature.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrequencyTable {
    counts: HashMap<String, f64>,
}

impl FrequencyTable {
    pub fn from_counts<S: AsRef<str>>(counts: impl IntoIterator<Item = (S, f64)>) -> Self {
        Self {
            counts: counts
                .into_iter()
                .map(|(t, c)| (t.as_ref().to_string(), c))
                .collect(),
        }
    }

    /// Token counts over every text of a split.
    pub fn from_split(split: &DatasetSplit) -> Self {
        let mut counts: HashMap<String, f64> = HashMap::new();
        for e in &split.examples {
            for t in tokenize(&e.text) {
                *counts.entry(t).or_default() += 1.0;
            }
        }
        Self { counts }
    }

    /// Parses `token\tcount` lines.
    pub fn parse(body: &str) -> Result<Self> {
        let mut counts = HashMap::new();
        for (i, line) in body.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (token, count) = line.split_once('\t').ok_or_else(|| {
                Error::data(format!(
                    "frequency line {}: expected token<TAB>count",
                    i + 1
                ))
            })?;
            let c: f64 = count
                .trim()
                .parse()
                .ok()
                .filter(|c: &f64| c.is_finite() && *c >= 0.0)
                .ok_or_else(|| {
                    Error::data(format!("frequency line {}: bad count {count:?}", i + 1))
                })?;
            counts.insert(token.trim().to_lowercase(), c);
        }
        Ok(Self { counts })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read(path.as_ref())?)
    }

    pub fn counts(&self) -> &HashMap<String, f64> {
        &self.counts
    }

    /// `token\tcount` lines sorted by token.
    pub fn to_tsv(&self) -> String {
        let mut rows: Vec<(&String, &f64)> = self.counts.iter().collect();
        rows.sort_by(|a, b| a.0.cmp(b.0));
        let mut out = String::new();
        for (t, c) in rows {
            let _ = writeln!(out, "{t}\t{c}");
        }
        out
    }
}

/// Fixed-width word vectors; lookups of unknown tokens return `None` and are
/// embedded as zero rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    tokens: Vec<String>,
    data: Vec<f64>,
}

impl EmbeddingTable {
    /// First occurrence of a token wins.
    pub fn from_rows(dim: usize, rows: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::data("embedding dim must be >= 1"));
        }
        let mut table = Self {
            dim,
            index: HashMap::with_capacity(rows.len()),
            tokens: Vec::with_capacity(rows.len()),
            data: Vec::with_capacity(rows.len() * dim),
        };
        for (token, v) in rows {
            if v.len() != dim {
                return Err(Error::data(format!(
                    "embedding for {token:?} has {} components, expected {dim}",
                    v.len()
                )));
            }
            if table.index.contains_key(&token) {
                continue;
            }
            table.index.insert(token.clone(), table.tokens.len());
            table.tokens.push(token);
            table.data.extend_from_slice(&v);
        }
        Ok(table)
    }

    /// Parses the word2vec text format: an optional `COUNT DIM` header, then
    /// `token v1 ... vDIM` per line.
    pub fn parse_word2vec(body: &str) -> Result<Self> {
        let mut lines = body
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .peekable();
        let mut declared: Option<(usize, usize)> = None;
        if let Some((_, first)) = lines.peek() {
            let parts: Vec<&str> = first.split_whitespace().collect();
            if parts.len() == 2 {
                if let (Ok(c), Ok(d)) = (parts[0].parse::<usize>(), parts[1].parse::<usize>()) {
                    declared = Some((c, d));
                    lines.next();
                }
            }
        }
        let mut rows = Vec::new();
        let mut dim = declared.map(|(_, d)| d);
        for (i, line) in lines {
            let mut parts = line.split_whitespace();
            let token = parts.next().unwrap_or_default().to_string();
            let v: Vec<f64> = parts
                .map(|p| p.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::data(format!("embeddings line {}: bad number", i + 1)))?;
            let d = *dim.get_or_insert(v.len());
            if v.len() != d {
                return Err(Error::data(format!(
                    "embeddings line {}: {} components, expected {d}",
                    i + 1,
                    v.len()
                )));
            }
            rows.push((token, v));
        }
        if let Some((count, _)) = declared {
            if count != rows.len() {
                return Err(Error::data(format!(
                    "embeddings header declares {count} vectors, found {}",
                    rows.len()
                )));
            }
        }
        let dim = dim.ok_or_else(|| Error::data("embeddings file has no vectors"))?;
        Self::from_rows(dim, rows)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse_word2vec(&read(path)?).map_err(|e| match e {
            Error::Data(m) => Error::data(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// word2vec text format with a `COUNT DIM` header.
    pub fn to_word2vec(&self) -> String {
        let mut out = format!("{} {}\n", self.tokens.len(), self.dim);
        for (i, t) in self.tokens.iter().enumerate() {
            out.push_str(t);
            for v in &self.data[i * self.dim..(i + 1) * self.dim] {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index
            .get(token)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Weight of the shared direction of style words relative to other groups.
const STYLE_CENTROID_WEIGHT: f64 = 0.5;

/// Clustered random vectors for a synthetic vocabulary: each word group gets
/// a standard-normal centroid and every word is centroid plus
/// `0.6 * N(0, I)`, scaled by `2 / sqrt(dim)`. Style groups use a centroid
/// shrunk by [`STYLE_CENTROID_WEIGHT`], which makes their words harder to
/// tell apart as a class. Stream 4 of the seed.
pub fn synthetic_embeddings(
    vocab: &SyntheticVocabulary,
    dim: usize,
    seed: u64,
) -> Result<EmbeddingTable> {
    let mut rng = SplitMix64::derived(seed, 4);
    let scale = 2.0 / (dim as f64).sqrt();
    let mut rows = Vec::new();
    for (g, words) in &vocab.groups {
        let mut centroid: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
        if matches!(g, WordGroup::Style(_)) {
            centroid
                .iter_mut()
                .for_each(|c| *c *= STYLE_CENTROID_WEIGHT);
        }
        for w in words {
            let v = centroid
                .iter()
                .map(|c| (c + 0.6 * rng.normal()) * scale)
                .collect();
            rows.push((w.clone(), v));
        }
    }
    EmbeddingTable::from_rows(dim, rows)
}

/// Everything `featurize` needs besides the example itself.
#[derive(Debug, Clone)]
pub struct FeatureResources {
    pub lexicon: SentimentLexicon,
    pub dictionary: HashSet<String>,
    pub stoplist: HashSet<String>,
    pub frequencies: FrequencyTable,
    pub embeddings: EmbeddingTable,
}

fn to_hash_set(words: BTreeSet<String>) -> HashSet<String> {
    words.into_iter().collect()
}

impl FeatureResources {
    /// Loads resources named in `config`, resolving relative paths against
    /// `base`. Defaults: shipped lexicon and stop list, the embedding
    /// vocabulary as dictionary, and token counts of `train` as the
    /// frequency table. Embeddings are required.
    pub fn load(config: &FeatureConfig, base: &Path, train: Option<&DatasetSplit>) -> Result<Self> {
        let resolve = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let embeddings = match &config.embeddings {
            Some(p) => EmbeddingTable::load(resolve(p))?,
            None => return Err(Error::config("features.embeddings path is required")),
        };
        let lexicon = match &config.lexicon {
            Some(p) => SentimentLexicon::load(resolve(p))?,
            None => default_lexicon(),
        };
        let stoplist = match &config.stoplist {
            Some(p) => to_hash_set(load_word_list(resolve(p))?),
            None => to_hash_set(default_stopwords()),
        };
        let dictionary = match &config.dictionary {
            Some(p) => to_hash_set(load_word_list(resolve(p))?),
            None => embeddings
                .tokens()
                .iter()
                .map(|t| t.to_lowercase())
                .collect(),
        };
        let frequencies = match (&config.frequencies, train) {
            (Some(p), _) => FrequencyTable::load(resolve(p))?,
            (None, Some(split)) => FrequencyTable::from_split(split),
            (None, None) => {
                return Err(Error::config(
                    "features.frequencies path is required when no train split is available",
                ))
            }
        };
        Ok(Self {
            lexicon,
            dictionary,
            stoplist,
            frequencies,
            embeddings,
        })
    }

    /// Resources matching a synthetic corpus: shipped lexicon and stop list,
    /// the whole synthetic vocabulary as dictionary, train-split token counts
    /// and clustered synthetic embeddings.
    pub fn synthetic(
        vocab: &SyntheticVocabulary,
        train: &DatasetSplit,
        dim: usize,
        seed: u64,
    ) -> Result<Self> {
        Ok(Self {
            lexicon: default_lexicon(),
            dictionary: vocab.words().cloned().collect(),
            stoplist: to_hash_set(default_stopwords()),
            frequencies: FrequencyTable::from_split(train),
            embeddings: synthetic_embeddings(vocab, dim, seed)?,
        })
    }

    /// Dictionary as sorted one-per-line text.
    pub fn dictionary_text(&self) -> String {
        let sorted: BTreeSet<&String> = self.dictionary.iter().collect();
        sorted.into_iter().fold(String::new(), |mut s, w| {
            s.push_str(w);
            s.push('\n');
            s
        })
    }
}
