//! Deterministic synthetic stand-in for a human-vs-generated corpus with
//! out-of-distribution domain structure.
//!
//! Every draw comes from [`SplitMix64`]: the vocabulary from stream 1, the
//! train split from stream 2 and the test split from stream 3 (see
//! [`SplitMix64::derived`]). Same config, same bytes.
//!
//! Each example is one of three kinds:
//!
//! - *marked*: carries a few domain-specific marker words for its class
//!   instead of style words (train domains only). In test domains the same
//!   marker words turn up in every example at random, with no tie to the
//!   label, so a model that leans on them is misled out of distribution.
//! - *styled*: carries style words of its class, shared by every domain.
//!   The synthetic embeddings give style words only a weak common direction
//!   (see [`crate::features::synthetic_embeddings`]), so the model has to
//!   pick them up word by word and learns them later than markers.
//! - *plain*: no class-bearing words at all. Plain texts come in pairs: the
//!   human and the generated example drawn at the same position of the same
//!   domain share one text, so the label cannot be recovered from it.
//!
//! Every other token is a stop word, a pronoun, a domain topic word, a
//! sentiment word from the shipped lexicon, or a neutral filler word
//! (occasionally with two letters swapped, which the dictionary does not
//! know). Styled and marked `generated` examples draw positive words at
//! `base_rate * (1 + sentiment_skew)`.
//!
//! Domains alternate between short (about 100 characters) and long (about
//! 450 characters) target lengths in list order, separately for the train
//! and test domain lists.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{assign_ids, DatasetSplit, Label, RawExample, SplitName};
use crate::error::{Error, Result};
use crate::features::{default_lexicon, default_stopwords};
use crate::rng::SplitMix64;

const SHORT_TARGET: f64 = 100.0;
const LONG_TARGET: f64 = 450.0;

const P_STOP: f64 = 0.30;
const P_PRONOUN: f64 = 0.05;
const P_TOPIC: f64 = 0.20;
const P_POSITIVE: f64 = 0.03;
const P_NEGATIVE: f64 = 0.03;
const P_STYLE: f64 = 0.20;
const P_MARKER: f64 = 0.30;
const P_STRAY_MARKER: f64 = 0.04;
const P_TYPO: f64 = 0.02;
const P_SENTENCE_END: f64 = 1.0 / 12.0;

const NEUTRAL_WORDS: usize = 300;
const TOPIC_WORDS: usize = 60;
const STYLE_WORDS: usize = 40;
const MARKER_WORDS: usize = 8;

fn default_marked_share() -> f64 {
    SynthConfig::DEFAULT_MARKED_SHARE
}

fn default_plain_share() -> f64 {
    SynthConfig::DEFAULT_PLAIN_SHARE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_per_class_per_domain: usize,
    pub train_domains: Vec<String>,
    pub test_domains: Vec<String>,
    pub sentiment_skew: f64,
    pub seed: u64,
    /// Share of train-domain examples that carry domain markers.
    #[serde(default = "default_marked_share")]
    pub marked_share: f64,
    /// Share of examples (train and test) with no class-bearing words.
    #[serde(default = "default_plain_share")]
    pub plain_share: f64,
}

impl SynthConfig {
    pub const DEFAULT_MARKED_SHARE: f64 = 0.27;
    pub const DEFAULT_PLAIN_SHARE: f64 = 0.48;

    pub fn validate(&self) -> Result<()> {
        if self.n_per_class_per_domain < 1 {
            return Err(Error::config("n_per_class_per_domain must be >= 1"));
        }
        if self.train_domains.is_empty() || self.test_domains.is_empty() {
            return Err(Error::config(
                "train and test domain lists must be non-empty",
            ));
        }
        let train: BTreeSet<&String> = self.train_domains.iter().collect();
        let test: BTreeSet<&String> = self.test_domains.iter().collect();
        if train.len() != self.train_domains.len() || test.len() != self.test_domains.len() {
            return Err(Error::config("duplicate domain name"));
        }
        if train.intersection(&test).next().is_some() {
            return Err(Error::config("domains overlap"));
        }
        if !(self.sentiment_skew >= 0.0 && self.sentiment_skew.is_finite()) {
            return Err(Error::config("sentiment_skew must be finite and >= 0"));
        }
        let shares_ok = (0.0..=1.0).contains(&self.marked_share)
            && (0.0..=1.0).contains(&self.plain_share)
            && self.marked_share + self.plain_share <= 1.0;
        if !shares_ok {
            return Err(Error::config(
                "marked_share and plain_share must lie in [0,1] and sum to at most 1",
            ));
        }
        Ok(())
    }
}

/// Which role a vocabulary word plays in the generator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum WordGroup {
    Stop,
    Pronoun,
    Positive,
    Negative,
    Neutral,
    Topic(String),
    Style(Label),
    Marker(String, Label),
}

/// All words the generator can emit, grouped by role, in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticVocabulary {
    pub groups: Vec<(WordGroup, Vec<String>)>,
}

impl SyntheticVocabulary {
    pub fn build(config: &SynthConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = SplitMix64::derived(config.seed, 1);
        let lexicon = default_lexicon();
        let stop: Vec<String> = default_stopwords().into_iter().collect();
        let pronouns: Vec<String> = super::default_pronouns().into_iter().collect();
        let positive: Vec<String> = lexicon
            .sorted_entries()
            .into_iter()
            .filter(|(_, v)| *v > 0.0)
            .map(|(w, _)| w)
            .collect();
        let negative: Vec<String> = lexicon
            .sorted_entries()
            .into_iter()
            .filter(|(_, v)| *v < 0.0)
            .map(|(w, _)| w)
            .collect();

        let mut taken: BTreeSet<String> = stop
            .iter()
            .chain(&pronouns)
            .chain(&positive)
            .chain(&negative)
            .cloned()
            .collect();
        let mut fresh = |n: usize| -> Vec<String> {
            let mut out = Vec::with_capacity(n);
            while out.len() < n {
                let w = pseudo_word(&mut rng);
                if taken.insert(w.clone()) {
                    out.push(w);
                }
            }
            out
        };

        let mut groups = vec![
            (WordGroup::Stop, stop),
            (WordGroup::Pronoun, pronouns),
            (WordGroup::Positive, positive),
            (WordGroup::Negative, negative),
        ];
        groups.push((WordGroup::Neutral, fresh(NEUTRAL_WORDS)));
        for d in config.train_domains.iter().chain(&config.test_domains) {
            groups.push((WordGroup::Topic(d.clone()), fresh(TOPIC_WORDS)));
        }
        for label in Label::ALL {
            groups.push((WordGroup::Style(label), fresh(STYLE_WORDS)));
        }
        for d in &config.train_domains {
            for label in Label::ALL {
                groups.push((WordGroup::Marker(d.clone(), label), fresh(MARKER_WORDS)));
            }
        }
        Ok(Self { groups })
    }

    pub fn group(&self, group: &WordGroup) -> &[String] {
        self.groups
            .iter()
            .find(|(g, _)| g == group)
            .map(|(_, w)| w.as_slice())
            .unwrap_or(&[])
    }

    /// All marker words of every train domain and class.
    pub fn markers(&self) -> Vec<String> {
        self.groups
            .iter()
            .filter(|(g, _)| matches!(g, WordGroup::Marker(..)))
            .flat_map(|(_, w)| w.iter().cloned())
            .collect()
    }

    /// Every distinct word, in group order.
    pub fn words(&self) -> impl Iterator<Item = &String> {
        self.groups.iter().flat_map(|(_, w)| w.iter())
    }
}

fn pseudo_word(rng: &mut SplitMix64) -> String {
    const ONSETS: [&str; 30] = [
        "b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z",
        "br", "cr", "dr", "fl", "gr", "pl", "pr", "st", "tr", "sh", "ch", "th",
    ];
    const NUCLEI: [&str; 9] = ["a", "e", "i", "o", "u", "ai", "ea", "io", "ou"];
    const CODAS: [&str; 8] = ["", "", "n", "r", "s", "l", "m", "t"];
    let syllables = 2 + rng.below(2);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS[rng.below(ONSETS.len())]);
        w.push_str(NUCLEI[rng.below(NUCLEI.len())]);
    }
    w.push_str(CODAS[rng.below(CODAS.len())]);
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Marked,
    Styled,
    Plain,
}

struct DomainPlan<'a> {
    name: &'a str,
    target: f64,
    has_markers: bool,
}

/// Generates the `(train, test)` pair described in the module docs.
pub fn generate_synthetic_corpus(config: &SynthConfig) -> Result<(DatasetSplit, DatasetSplit)> {
    let vocab = SyntheticVocabulary::build(config)?;
    let train_plan = plan_domains(&config.train_domains, true);
    let test_plan = plan_domains(&config.test_domains, false);

    let train = generate_split(
        config,
        &vocab,
        &train_plan,
        SplitName::Train,
        &mut SplitMix64::derived(config.seed, 2),
    );
    let test = generate_split(
        config,
        &vocab,
        &test_plan,
        SplitName::Test,
        &mut SplitMix64::derived(config.seed, 3),
    );
    Ok((train, test))
}

fn plan_domains(domains: &[String], has_markers: bool) -> Vec<DomainPlan<'_>> {
    domains
        .iter()
        .enumerate()
        .map(|(i, d)| DomainPlan {
            name: d,
            target: if i % 2 == 0 {
                SHORT_TARGET
            } else {
                LONG_TARGET
            },
            has_markers,
        })
        .collect()
}

fn generate_split(
    config: &SynthConfig,
    vocab: &SyntheticVocabulary,
    plan: &[DomainPlan<'_>],
    name: SplitName,
    rng: &mut SplitMix64,
) -> DatasetSplit {
    let mut raw = Vec::with_capacity(config.n_per_class_per_domain * plan.len() * 2);
    let stray = vocab.markers();
    for _ in 0..config.n_per_class_per_domain {
        for domain in plan {
            let plain = rng.bernoulli(config.plain_share);
            let shared = plain.then(|| {
                generate_text(
                    config,
                    vocab,
                    &stray,
                    domain,
                    Label::Human,
                    Kind::Plain,
                    rng,
                )
            });
            for label in Label::ALL {
                let text = match &shared {
                    Some(text) => text.clone(),
                    None => {
                        let kind = draw_kind(config, domain.has_markers, rng);
                        generate_text(config, vocab, &stray, domain, label, kind, rng)
                    }
                };
                raw.push(RawExample {
                    text,
                    label,
                    domain: domain.name.to_string(),
                });
            }
        }
    }
    DatasetSplit::new(name, assign_ids(raw))
}

/// Kind of a non-plain example.
fn draw_kind(config: &SynthConfig, has_markers: bool, rng: &mut SplitMix64) -> Kind {
    let marked = config.marked_share / (1.0 - config.plain_share);
    if has_markers && rng.next_f64() < marked {
        Kind::Marked
    } else {
        Kind::Styled
    }
}

fn pick<'v>(words: &'v [String], rng: &mut SplitMix64) -> &'v str {
    &words[rng.below(words.len())]
}

fn with_typo(word: &str, rng: &mut SplitMix64) -> String {
    let mut chars: Vec<char> = word.chars().collect();
    if chars.len() >= 2 {
        let i = rng.below(chars.len() - 1);
        chars.swap(i, i + 1);
    }
    chars.into_iter().collect()
}

fn generate_text(
    config: &SynthConfig,
    vocab: &SyntheticVocabulary,
    stray: &[String],
    domain: &DomainPlan<'_>,
    label: Label,
    kind: Kind,
    rng: &mut SplitMix64,
) -> String {
    let target = domain.target * (0.85 + 0.3 * rng.next_f64());
    let (p_style, p_marker) = match kind {
        Kind::Marked => (0.0, P_MARKER),
        Kind::Styled => (P_STYLE, 0.0),
        Kind::Plain => (0.0, 0.0),
    };
    let p_positive = if label == Label::Generated && kind != Kind::Plain {
        P_POSITIVE * (1.0 + config.sentiment_skew)
    } else {
        P_POSITIVE
    };
    let topic = WordGroup::Topic(domain.name.to_string());
    let marker = WordGroup::Marker(domain.name.to_string(), label);
    let p_stray = if domain.has_markers {
        0.0
    } else {
        P_STRAY_MARKER
    };
    let sources: [(f64, &[String]); 8] = [
        (P_STOP, vocab.group(&WordGroup::Stop)),
        (P_PRONOUN, vocab.group(&WordGroup::Pronoun)),
        (P_TOPIC, vocab.group(&topic)),
        (p_positive, vocab.group(&WordGroup::Positive)),
        (P_NEGATIVE, vocab.group(&WordGroup::Negative)),
        (p_style, vocab.group(&WordGroup::Style(label))),
        (p_marker, vocab.group(&marker)),
        (p_stray, stray),
    ];
    let neutral = vocab.group(&WordGroup::Neutral);

    let mut text = String::new();
    let mut chars = 0usize;
    let mut sentence_start = true;
    while (chars as f64) < target {
        let u = rng.next_f64();
        let mut edge = 0.0;
        let source = sources.iter().find(|(p, _)| {
            edge += p;
            u < edge
        });
        let word = match source {
            Some((_, words)) => pick(words, rng).to_string(),
            None => {
                let w = pick(neutral, rng);
                if rng.bernoulli(P_TYPO) {
                    with_typo(w, rng)
                } else {
                    w.to_string()
                }
            }
        };

        if !text.is_empty() {
            text.push(' ');
            chars += 1;
        }
        if sentence_start {
            let mut cs = word.chars();
            if let Some(first) = cs.next() {
                text.extend(first.to_uppercase());
                text.push_str(cs.as_str());
            }
            sentence_start = false;
        } else {
            text.push_str(&word);
        }
        chars += word.chars().count();
        if rng.bernoulli(P_SENTENCE_END) {
            text.push('.');
            chars += 1;
            sentence_start = true;
        }
    }
    if !text.ends_with('.') {
        text.push('.');
    }
    text
}
