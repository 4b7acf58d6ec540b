//! Training dynamics: per-epoch logit records, the per-example
//! confidence / variability / correctness summary, and region selection.

mod log;
mod select;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{argmax, softmax};

pub use log::{record_epoch, round_sig9, DynamicsLog, DynamicsRecorder, EpochLogitRecord};
pub use select::{
    density_histogram, label_regions, mix_subsets, select_subset, subset_size, Dimension, Region,
    RegionLabeling, SelectionSpec,
};

/// One point of the data map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSummary {
    pub id: String,
    pub confidence: f64,
    pub variability: f64,
    pub correctness: f64,
}

/// Mean gold-label probability across epochs.
pub fn confidence(gold_probs: &[f64]) -> Result<f64> {
    if gold_probs.is_empty() {
        return Err(Error::data("confidence of an empty sequence"));
    }
    Ok(gold_probs.iter().sum::<f64>() / gold_probs.len() as f64)
}

/// Population standard deviation of the gold-label probabilities.
pub fn variability(gold_probs: &[f64]) -> Result<f64> {
    let mean = confidence(gold_probs)?;
    let ss: f64 = gold_probs.iter().map(|p| (p - mean) * (p - mean)).sum();
    Ok((ss / gold_probs.len() as f64).sqrt())
}

/// Fraction of records whose argmax (ties to class 0) equals gold.
pub fn correctness(records: &[EpochLogitRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let hits = records
        .iter()
        .filter(|r| argmax(r.logits) == r.gold)
        .count();
    hits as f64 / records.len() as f64
}

/// One summary per example id, ascending by id. The log must hold exactly
/// one record for every `(id, epoch)` with epochs `0..E`.
pub fn summarize(log: &DynamicsLog) -> Result<Vec<DynamicsSummary>> {
    let records = log.records();
    if records.is_empty() {
        return Err(Error::data("dynamics log is empty"));
    }
    let epochs = records.iter().map(|r| r.epoch).max().unwrap_or(0) + 1;
    let mut by_id: BTreeMap<&str, Vec<Option<&EpochLogitRecord>>> = BTreeMap::new();
    for r in records {
        by_id
            .entry(r.id.as_str())
            .or_insert_with(|| vec![None; epochs])[r.epoch] = Some(r);
    }

    let mut missing = Vec::new();
    for (id, slots) in &by_id {
        for (e, s) in slots.iter().enumerate() {
            if s.is_none() {
                missing.push(format!("({id}, {e})"));
            }
        }
    }
    if !missing.is_empty() {
        let shown = missing
            .iter()
            .take(20)
            .cloned()
            .collect::<Vec<_>>()
            .join(", ");
        let more = if missing.len() > 20 {
            format!(" and {} more", missing.len() - 20)
        } else {
            String::new()
        };
        return Err(Error::data(format!(
            "incomplete dynamics log, missing (id, epoch): {shown}{more}"
        )));
    }

    let mut out = Vec::with_capacity(by_id.len());
    for (id, slots) in by_id {
        let recs: Vec<EpochLogitRecord> = slots.into_iter().flatten().cloned().collect();
        let gold = recs[0].gold;
        if recs.iter().any(|r| r.gold != gold) {
            return Err(Error::data(format!(
                "example {id} has inconsistent gold labels"
            )));
        }
        let probs: Vec<f64> = recs.iter().map(|r| softmax(r.logits)[gold]).collect();
        out.push(DynamicsSummary {
            id: id.to_string(),
            confidence: confidence(&probs)?,
            variability: variability(&probs)?,
            correctness: correctness(&recs),
        });
    }
    Ok(out)
}

pub const SUMMARIES_HEADER: &str = "id,confidence,variability,correctness";

/// `summaries.csv`, six-decimal fixed point.
pub fn summaries_to_csv(summaries: &[DynamicsSummary]) -> String {
    let mut out = format!("{SUMMARIES_HEADER}\n");
    for s in summaries {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6}",
            s.id, s.confidence, s.variability, s.correctness
        );
    }
    out
}

pub(crate) fn parse_unit(field: &str, what: &str, line: usize) -> Result<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::data(format!("line {line}: bad {what} {field:?}")))
}

pub fn parse_summaries_csv(body: &str) -> Result<Vec<DynamicsSummary>> {
    let mut lines = body.lines();
    if lines.next() != Some(SUMMARIES_HEADER) {
        return Err(Error::data(format!(
            "summaries header must be {SUMMARIES_HEADER:?}"
        )));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(Error::data(format!("line {n}: expected 4 columns")));
        }
        out.push(DynamicsSummary {
            id: f[0].to_string(),
            confidence: parse_unit(f[1], "confidence", n)?,
            variability: parse_unit(f[2], "variability", n)?,
            correctness: parse_unit(f[3], "correctness", n)?,
        });
    }
    Ok(out)
}

pub fn write_summaries(path: impl AsRef<Path>, summaries: &[DynamicsSummary]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, summaries_to_csv(summaries)).map_err(|e| Error::io(path, e))
}

pub fn read_summaries(path: impl AsRef<Path>) -> Result<Vec<DynamicsSummary>> {
    let path = path.as_ref();
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_summaries_csv(&body).map_err(|e| match e {
        Error::Data(m) => Error::data(format!("{}: {m}", path.display())),
        other => other,
    })
}
