use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DynamicsSummary;
use crate::error::{Error, Result};

/// Data-map region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Easy,
    Ambiguous,
    Hard,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Easy, Region::Ambiguous, Region::Hard];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Easy => "easy",
            Region::Ambiguous => "ambiguous",
            Region::Hard => "hard",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "easy" => Ok(Region::Easy),
            "ambiguous" => Ok(Region::Ambiguous),
            "hard" => Ok(Region::Hard),
            other => Err(Error::data(format!(
                "unknown region {other:?} (expected easy, ambiguous or hard)"
            ))),
        }
    }
}

/// "Take this fraction of the train set, ranked for this region."
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionSpec {
    pub region: Region,
    pub fraction: f64,
}

impl SelectionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(Error::config(format!(
                "selection fraction {} is outside [0, 1]",
                self.fraction
            )));
        }
        Ok(())
    }
}

/// `ceil(fraction * n)`, with a small tolerance so that products such as
/// `0.45 * 100` that land a hair above an integer do not round up.
pub fn subset_size(fraction: f64, n: usize) -> usize {
    let raw = (fraction * n as f64 - 1e-9).ceil();
    (raw.max(0.0) as usize).min(n)
}

fn region_order(region: Region, a: &DynamicsSummary, b: &DynamicsSummary) -> Ordering {
    let key = match region {
        Region::Ambiguous => b.variability.total_cmp(&a.variability),
        Region::Easy => b.confidence.total_cmp(&a.confidence),
        Region::Hard => a.confidence.total_cmp(&b.confidence),
    };
    key.then_with(|| a.id.cmp(&b.id))
}

/// The top `ceil(fraction * N)` ids for the region, in ranking order.
pub fn select_subset(summaries: &[DynamicsSummary], spec: SelectionSpec) -> Result<Vec<String>> {
    spec.validate()?;
    let mut ranked: Vec<&DynamicsSummary> = summaries.iter().collect();
    ranked.sort_by(|a, b| region_order(spec.region, a, b));
    let k = subset_size(spec.fraction, summaries.len());
    Ok(ranked[..k].iter().map(|s| s.id.clone()).collect())
}

/// Set union in ascending id order.
pub fn mix_subsets(a: &[String], b: &[String]) -> Vec<String> {
    a.iter()
        .chain(b)
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Total assignment of ids to regions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegionLabeling {
    pub labels: BTreeMap<String, Region>,
}

impl RegionLabeling {
    pub fn get(&self, id: &str) -> Option<Region> {
        self.labels.get(id).copied()
    }

    pub fn counts(&self) -> BTreeMap<Region, usize> {
        let mut out: BTreeMap<Region, usize> = Region::ALL.iter().map(|r| (*r, 0)).collect();
        for r in self.labels.values() {
            *out.entry(*r).or_default() += 1;
        }
        out
    }
}

/// Rank-based partition: the top `floor(N/3)` by variability are ambiguous;
/// the rest are split by confidence, the upper `ceil(rest/2)` easy and the
/// remainder hard.
pub fn label_regions(summaries: &[DynamicsSummary]) -> Result<RegionLabeling> {
    if summaries.len() < 3 {
        return Err(Error::data(format!(
            "region labeling needs at least 3 examples, got {}",
            summaries.len()
        )));
    }
    let mut by_var: Vec<&DynamicsSummary> = summaries.iter().collect();
    by_var.sort_by(|a, b| region_order(Region::Ambiguous, a, b));
    let n_amb = summaries.len() / 3;
    let mut labels = BTreeMap::new();
    for s in &by_var[..n_amb] {
        labels.insert(s.id.clone(), Region::Ambiguous);
    }
    let mut rest: Vec<&DynamicsSummary> = by_var[n_amb..].to_vec();
    rest.sort_by(|a, b| region_order(Region::Easy, a, b));
    let n_easy = rest.len().div_ceil(2);
    for (i, s) in rest.iter().enumerate() {
        let region = if i < n_easy {
            Region::Easy
        } else {
            Region::Hard
        };
        labels.insert(s.id.clone(), region);
    }
    if labels.len() != summaries.len() {
        return Err(Error::data("duplicate ids among summaries"));
    }
    Ok(RegionLabeling { labels })
}

/// Which statistic a histogram or plot axis refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Confidence,
    Variability,
    Correctness,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [
        Dimension::Confidence,
        Dimension::Variability,
        Dimension::Correctness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Confidence => "confidence",
            Dimension::Variability => "variability",
            Dimension::Correctness => "correctness",
        }
    }

    pub fn value(self, s: &DynamicsSummary) -> f64 {
        match self {
            Dimension::Confidence => s.confidence,
            Dimension::Variability => s.variability,
            Dimension::Correctness => s.correctness,
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| Error::data(format!("unknown dimension {s:?}")))
    }
}

/// Equal-width bins over [0, 1]; each bin is half-open except the last,
/// which also takes 1.0. Values outside [0, 1] are clamped.
pub fn density_histogram(
    summaries: &[DynamicsSummary],
    dimension: Dimension,
    bins: usize,
) -> Result<Vec<(f64, usize)>> {
    if bins == 0 {
        return Err(Error::config("histogram needs at least one bin"));
    }
    let mut counts = vec![0usize; bins];
    for s in summaries {
        let v = dimension.value(s).clamp(0.0, 1.0);
        // Settle the floor estimate against the exact edges b / bins.
        let mut b = (v * bins as f64).floor() as usize;
        if b >= bins {
            b = bins - 1;
        }
        while b > 0 && v < b as f64 / bins as f64 {
            b -= 1;
        }
        while b + 1 < bins && v >= (b + 1) as f64 / bins as f64 {
            b += 1;
        }
        counts[b] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (i as f64 / bins as f64, c))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(id: &str, confidence: f64, variability: f64, correctness: f64) -> DynamicsSummary {
        DynamicsSummary {
            id: id.into(),
            confidence,
            variability,
            correctness,
        }
    }

    fn sample(n: usize) -> Vec<DynamicsSummary> {
        (0..n)
            .map(|i| {
                let x = i as f64;
                summary(
                    &format!("e{i:03}"),
                    ((x * 0.37) % 1.0).abs(),
                    ((x * 0.113) % 0.5).abs(),
                    (i % 6) as f64 / 5.0,
                )
            })
            .collect()
    }

    #[test]
    fn full_and_empty_fractions() {
        let s = sample(10);
        for region in Region::ALL {
            let all = select_subset(
                &s,
                SelectionSpec {
                    region,
                    fraction: 1.0,
                },
            )
            .unwrap();
            assert_eq!(all.len(), 10);
            assert!(select_subset(
                &s,
                SelectionSpec {
                    region,
                    fraction: 0.0
                }
            )
            .unwrap()
            .is_empty());
        }
    }

    #[test]
    fn out_of_range_fraction_rejected() {
        let spec = SelectionSpec {
            region: Region::Easy,
            fraction: 1.5,
        };
        assert!(select_subset(&sample(3), spec).is_err());
    }

    #[test]
    fn subset_size_tolerates_float_noise() {
        assert_eq!(subset_size(0.45, 100), 45);
        assert_eq!(subset_size(0.15, 2000), 300);
        assert_eq!(subset_size(0.5, 7), 4);
        assert_eq!(subset_size(0.01, 7), 1);
    }

    #[test]
    fn ties_break_by_id() {
        let s = vec![summary("b", 0.5, 0.1, 0.0), summary("a", 0.5, 0.1, 0.0)];
        for region in Region::ALL {
            let ids = select_subset(
                &s,
                SelectionSpec {
                    region,
                    fraction: 1.0,
                },
            )
            .unwrap();
            assert_eq!(ids, ["a", "b"]);
        }
    }

    #[test]
    fn hard_is_lowest_confidence() {
        let s = vec![
            summary("a", 0.9, 0.0, 1.0),
            summary("b", 0.1, 0.0, 0.0),
            summary("c", 0.5, 0.0, 0.4),
        ];
        let spec = SelectionSpec {
            region: Region::Hard,
            fraction: 0.34,
        };
        assert_eq!(select_subset(&s, spec).unwrap(), ["b", "c"]);
    }

    #[test]
    fn mix_cases() {
        let a: Vec<String> = ["c", "a", "e"].iter().map(|s| s.to_string()).collect();
        let b: Vec<String> = ["d", "b"].iter().map(|s| s.to_string()).collect();
        assert_eq!(mix_subsets(&a, &b), ["a", "b", "c", "d", "e"]);
        assert_eq!(mix_subsets(&a, &a), ["a", "c", "e"]);
        let c: Vec<String> = ["a", "z"].iter().map(|s| s.to_string()).collect();
        assert!(mix_subsets(&a, &c).len() < a.len() + c.len());
    }

    #[test]
    fn three_summaries_one_per_region() {
        let s = vec![
            summary("a", 0.9, 0.05, 1.0),
            summary("b", 0.5, 0.4, 0.6),
            summary("c", 0.1, 0.02, 0.0),
        ];
        let l = label_regions(&s).unwrap();
        assert_eq!(l.get("a"), Some(Region::Easy));
        assert_eq!(l.get("b"), Some(Region::Ambiguous));
        assert_eq!(l.get("c"), Some(Region::Hard));
        assert!(label_regions(&s[..2]).is_err());
    }

    #[test]
    fn histogram_cases() {
        let s: Vec<_> = (0..7)
            .map(|i| summary(&i.to_string(), 0.5, 0.0, 1.0))
            .collect();
        let h = density_histogram(&s, Dimension::Confidence, 10).unwrap();
        assert_eq!(h[5], (0.5, 7));
        assert_eq!(h.iter().map(|b| b.1).sum::<usize>(), 7);
        let h = density_histogram(&s, Dimension::Correctness, 10).unwrap();
        assert_eq!(h[9].1, 7);
        let h = density_histogram(&s, Dimension::Variability, 4).unwrap();
        assert_eq!(h[0], (0.0, 7));
        assert!(density_histogram(&s, Dimension::Confidence, 0).is_err());
    }

    #[test]
    fn histogram_bin_edges_are_exact() {
        let s: Vec<_> = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 0.3, 0.7]
            .iter()
            .enumerate()
            .map(|(i, v)| summary(&i.to_string(), *v, 0.0, 0.0))
            .collect();
        let h = density_histogram(&s, Dimension::Confidence, 10).unwrap();
        let counts: Vec<usize> = h.iter().map(|b| b.1).collect();
        assert_eq!(counts, [1, 0, 1, 1, 1, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn parse_names() {
        assert_eq!("ambiguous".parse::<Region>().unwrap(), Region::Ambiguous);
        assert!("medium".parse::<Region>().is_err());
        assert_eq!(
            "variability".parse::<Dimension>().unwrap(),
            Dimension::Variability
        );
    }
}
