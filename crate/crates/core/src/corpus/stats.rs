//! Exploratory corpus statistics: pronoun counts, mean sentiment per class
//! and per-class character length histograms.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{DatasetSplit, Label};
use crate::error::{Error, Result};
use crate::features::{sentiment_scores, tokenize, SentimentLexicon};

/// Sparse histogram: `(bin_start_chars, count)` for every non-empty bin,
/// ascending by bin start.
pub type LengthHistogram = Vec<(usize, usize)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub examples_per_class: BTreeMap<Label, usize>,
    pub pronoun_count_per_class: BTreeMap<Label, u64>,
    pub mean_pos_per_class: BTreeMap<Label, f64>,
    pub mean_neg_per_class: BTreeMap<Label, f64>,
    pub length_bin_width: usize,
    pub length_histogram_per_class: BTreeMap<Label, LengthHistogram>,
}

fn classes_present(split: &DatasetSplit) -> BTreeSet<Label> {
    split.examples.iter().map(|e| e.label).collect()
}

/// Occurrences of pronoun tokens per class (case-insensitive, after
/// tokenization). Every class present in the split gets an entry.
pub fn pronoun_count(split: &DatasetSplit, pronouns: &BTreeSet<String>) -> BTreeMap<Label, u64> {
    let mut counts: BTreeMap<Label, u64> =
        classes_present(split).into_iter().map(|c| (c, 0)).collect();
    for e in &split.examples {
        let hits = tokenize(&e.text)
            .iter()
            .filter(|t| pronouns.contains(t.as_str()))
            .count() as u64;
        *counts.entry(e.label).or_default() += hits;
    }
    counts
}

/// Character lengths (Unicode scalar values) bucketed as `[k*w, (k+1)*w)`.
pub fn length_histogram(
    split: &DatasetSplit,
    bin_width_chars: usize,
) -> Result<BTreeMap<Label, LengthHistogram>> {
    if bin_width_chars == 0 {
        return Err(Error::config("length histogram bin width must be >= 1"));
    }
    let mut bins: BTreeMap<Label, BTreeMap<usize, usize>> = BTreeMap::new();
    for e in &split.examples {
        let len = e.text.chars().count();
        let start = len / bin_width_chars * bin_width_chars;
        *bins.entry(e.label).or_default().entry(start).or_default() += 1;
    }
    Ok(bins
        .into_iter()
        .map(|(label, b)| (label, b.into_iter().collect()))
        .collect())
}

/// Mean per-example (positive, negative) lexicon scores per class.
pub fn class_sentiment_means(
    split: &DatasetSplit,
    lexicon: &SentimentLexicon,
) -> Result<BTreeMap<Label, (f64, f64)>> {
    if split.is_empty() {
        return Err(Error::data("cannot average sentiment over an empty split"));
    }
    let mut sums: BTreeMap<Label, (f64, f64, usize)> = BTreeMap::new();
    for e in &split.examples {
        let (pos, neg) = sentiment_scores(&tokenize(&e.text), lexicon);
        let s = sums.entry(e.label).or_insert((0.0, 0.0, 0));
        s.0 += pos;
        s.1 += neg;
        s.2 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(label, (p, n, count))| (label, (p / count as f64, n / count as f64)))
        .collect())
}

pub fn corpus_stats(
    split: &DatasetSplit,
    pronouns: &BTreeSet<String>,
    lexicon: &SentimentLexicon,
    bin_width_chars: usize,
) -> Result<CorpusStats> {
    let means = class_sentiment_means(split, lexicon)?;
    let counts = split.class_counts();
    Ok(CorpusStats {
        examples_per_class: Label::ALL
            .iter()
            .filter(|c| counts[c.index()] > 0)
            .map(|&c| (c, counts[c.index()]))
            .collect(),
        pronoun_count_per_class: pronoun_count(split, pronouns),
        mean_pos_per_class: means.iter().map(|(&c, &(p, _))| (c, p)).collect(),
        mean_neg_per_class: means.iter().map(|(&c, &(_, n))| (c, n)).collect(),
        length_bin_width: bin_width_chars,
        length_histogram_per_class: length_histogram(split, bin_width_chars)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Example, SplitName};
    use proptest::prelude::*;

    fn split(rows: &[(&str, Label)]) -> DatasetSplit {
        DatasetSplit::new(
            SplitName::Train,
            rows.iter()
                .enumerate()
                .map(|(i, (t, l))| Example {
                    id: format!("e{i}"),
                    text: t.to_string(),
                    label: *l,
                    domain: "d".into(),
                })
                .collect(),
        )
    }

    fn set(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn pronouns_in_sentence() {
        let s = split(&[("I gave her my book", Label::Human)]);
        let counts = pronoun_count(&s, &set(&["i", "her", "my", "she", "he"]));
        assert_eq!(counts, BTreeMap::from([(Label::Human, 3)]));
    }

    #[test]
    fn no_pronouns_is_zero() {
        let s = split(&[("the cat sat", Label::Generated)]);
        let counts = pronoun_count(&s, &set(&["i", "me"]));
        assert_eq!(counts[&Label::Generated], 0);
    }

    #[test]
    fn histogram_single_bucket() {
        let s = split(&[("abc", Label::Human), ("abcd", Label::Human)]);
        let h = length_histogram(&s, 5).unwrap();
        assert_eq!(h[&Label::Human], vec![(0, 2)]);
    }

    #[test]
    fn histogram_half_open_boundary() {
        let s = split(&[("abcde", Label::Human)]);
        assert_eq!(
            length_histogram(&s, 5).unwrap()[&Label::Human],
            vec![(5, 1)]
        );
    }

    #[test]
    fn histogram_counts_scalars_not_bytes() {
        let s = split(&[("日本語", Label::Human)]);
        assert_eq!(
            length_histogram(&s, 3).unwrap()[&Label::Human],
            vec![(3, 1)]
        );
    }

    #[test]
    fn histogram_rejects_zero_width() {
        assert!(length_histogram(&split(&[("a", Label::Human)]), 0).is_err());
    }

    fn lexicon() -> SentimentLexicon {
        SentimentLexicon::from_entries([("good", 3.2), ("bad", -1.6), ("fine", 0.8)])
    }

    #[test]
    fn sentiment_mean_of_one() {
        // "good x x x": pos = 3.2 / (4*4) = 0.2
        let s = split(&[("good x x x", Label::Human)]);
        let m = class_sentiment_means(&s, &lexicon()).unwrap();
        let (p, n) = m[&Label::Human];
        assert!((p - 0.2).abs() < 1e-15 && n == 0.0);
    }

    #[test]
    fn sentiment_mean_of_two() {
        // (0.2, 0) and (0, 1.6/16 = 0.1) -> (0.1, 0.05)
        let s = split(&[("good x x x", Label::Human), ("bad x x x", Label::Human)]);
        let (p, n) = class_sentiment_means(&s, &lexicon()).unwrap()[&Label::Human];
        assert!((p - 0.1).abs() < 1e-15, "{p}");
        assert!((n - 0.05).abs() < 1e-15, "{n}");
    }

    #[test]
    fn sentiment_empty_split_errors() {
        let s = DatasetSplit::new(SplitName::Train, vec![]);
        assert!(class_sentiment_means(&s, &lexicon()).is_err());
    }

    #[test]
    fn sentiment_fixture_matches_flat_recomputation() {
        let words = ["good", "bad", "fine", "cat", "dog", "the"];
        let mut rows = Vec::new();
        let mut texts = Vec::new();
        for i in 0..20 {
            let n = 1 + i % 5;
            let t: Vec<&str> = (0..n)
                .map(|k| words[(i * 7 + k * 3) % words.len()])
                .collect();
            texts.push((
                t.join(" "),
                if i % 3 == 0 {
                    Label::Generated
                } else {
                    Label::Human
                },
            ));
        }
        for (t, l) in &texts {
            rows.push((t.as_str(), *l));
        }
        let s = split(&rows);
        let got = class_sentiment_means(&s, &lexicon()).unwrap();

        // Flat oracle: valence lookup by hand-written match.
        let val = |w: &str| match w {
            "good" => 3.2,
            "bad" => -1.6,
            "fine" => 0.8,
            _ => 0.0,
        };
        for label in Label::ALL {
            let (mut sp, mut sn, mut c) = (0.0, 0.0, 0.0);
            for (t, l) in &texts {
                if *l != label {
                    continue;
                }
                let toks: Vec<&str> = t.split(' ').collect();
                let denom = 4.0 * toks.len() as f64;
                sp += toks
                    .iter()
                    .map(|w| val(w))
                    .filter(|v| *v > 0.0)
                    .sum::<f64>()
                    / denom;
                sn += toks
                    .iter()
                    .map(|w| val(w))
                    .filter(|v| *v < 0.0)
                    .map(f64::abs)
                    .sum::<f64>()
                    / denom;
                c += 1.0;
            }
            let (p, n) = got[&label];
            assert!((p - sp / c).abs() < 1e-12);
            assert!((n - sn / c).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn histogram_counts_sum_to_class_sizes(
            rows in prop::collection::vec(("[a-z ]{1,40}", any::<bool>()), 1..60),
            width in 1usize..20,
        ) {
            let rows: Vec<(&str, Label)> = rows
                .iter()
                .map(|(t, g)| (t.as_str(), if *g { Label::Generated } else { Label::Human }))
                .collect();
            let s = split(&rows);
            let h = length_histogram(&s, width).unwrap();
            let counts = s.class_counts();
            for label in Label::ALL {
                let total: usize = h.get(&label).map(|b| b.iter().map(|(_, c)| c).sum()).unwrap_or(0);
                prop_assert_eq!(total, counts[label.index()]);
            }
        }

        #[test]
        fn pronoun_count_matches_brute_force(
            rows in prop::collection::vec(("[a-zA-Z ,.]{0,40}", any::<bool>()), 1..30),
        ) {
            let pronouns = set(&["i", "me", "he", "she", "it", "we", "a"]);
            let rows: Vec<(String, Label)> = rows
                .into_iter()
                .map(|(t, g)| (format!("x {t}"), if g { Label::Generated } else { Label::Human }))
                .collect();
            let refs: Vec<(&str, Label)> = rows.iter().map(|(t, l)| (t.as_str(), *l)).collect();
            let s = split(&refs);
            let got = pronoun_count(&s, &pronouns);
            for label in Label::ALL {
                // Oracle: split on anything that is not an ASCII letter.
                let mut expected = 0u64;
                for (t, l) in &rows {
                    if *l != label { continue; }
                    for w in t.split(|c: char| !c.is_ascii_alphabetic()) {
                        if !w.is_empty() && pronouns.contains(&w.to_lowercase()) {
                            expected += 1;
                        }
                    }
                }
                prop_assert_eq!(got.get(&label).copied().unwrap_or(0), expected);
            }
        }
    }
}
