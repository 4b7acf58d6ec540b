use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeaturizedExample;
use crate::model::{predict_logits, EpochObserver, ParameterSet};

/// Two raw class scores for one example at one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLogitRecord {
    pub id: String,
    pub epoch: usize,
    pub logits: [f64; 2],
    pub gold: usize,
}

/// Rounds to 9 significant digits; the log stores logits at this precision
/// so that in-memory and on-disk records agree exactly.
pub fn round_sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

/// Append-only record store; rejects a second record for the same
/// `(id, epoch)`. Optionally mirrors every record as a JSONL line to a
/// writer, flushed after each epoch.
#[derive(Default)]
pub struct DynamicsLog {
    records: Vec<EpochLogitRecord>,
    seen: HashSet<(String, usize)>,
    sink: Option<Box<dyn Write>>,
}

impl fmt::Debug for DynamicsLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DynamicsLog")
            .field("records", &self.records.len())
            .field("sink", &self.sink.is_some())
            .finish()
    }
}

fn jsonl_line(r: &EpochLogitRecord) -> String {
    // Field order is fixed by the struct definition.
    serde_json::to_string(r).expect("record serializes")
}

impl DynamicsLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_sink(sink: Box<dyn Write>) -> Self {
        Self {
            sink: Some(sink),
            ..Self::default()
        }
    }

    pub fn append(&mut self, record: EpochLogitRecord) -> Result<()> {
        if !record.logits.iter().all(|v| v.is_finite()) {
            return Err(Error::data(format!(
                "non-finite logits for {} at epoch {}",
                record.id, record.epoch
            )));
        }
        if record.gold > 1 {
            return Err(Error::data(format!(
                "gold {} out of range for {}",
                record.gold, record.id
            )));
        }
        if !self.seen.insert((record.id.clone(), record.epoch)) {
            return Err(Error::data(format!(
                "duplicate dynamics record for ({}, epoch {})",
                record.id, record.epoch
            )));
        }
        if let Some(sink) = self.sink.as_mut() {
            writeln!(sink, "{}", jsonl_line(&record))
                .map_err(|e| Error::io("<dynamics sink>", e))?;
        }
        self.records.push(record);
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        if let Some(sink) = self.sink.as_mut() {
            sink.flush().map_err(|e| Error::io("<dynamics sink>", e))?;
        }
        Ok(())
    }

    pub fn records(&self) -> &[EpochLogitRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&jsonl_line(r));
            out.push('\n');
        }
        out
    }

    pub fn parse_jsonl(body: &str) -> Result<Self> {
        let mut log = Self::new();
        for (i, line) in body.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: EpochLogitRecord = serde_json::from_str(line)
                .map_err(|e| Error::data(format!("dynamics line {}: {e}", i + 1)))?;
            log.append(rec)?;
        }
        Ok(log)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_jsonl(&body)
    }
}

/// Eval-mode pass over the training set, one record per example in
/// ascending id order. Returns the number of records appended.
pub fn record_epoch(
    params: &ParameterSet,
    trainset: &[FeaturizedExample],
    epoch: usize,
    sink: &mut DynamicsLog,
) -> Result<usize> {
    let mut order: Vec<&FeaturizedExample> = trainset.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    let sorted: Vec<FeaturizedExample> = order.into_iter().cloned().collect();
    let logits = predict_logits(params, &sorted)?;
    for (e, l) in sorted.iter().zip(logits) {
        sink.append(EpochLogitRecord {
            id: e.id.clone(),
            epoch,
            logits: [round_sig9(l[0]), round_sig9(l[1])],
            gold: e.gold,
        })?;
    }
    sink.flush()?;
    Ok(sorted.len())
}

/// [`EpochObserver`] that calls [`record_epoch`] at every epoch end.
pub struct DynamicsRecorder<'a> {
    pub trainset: &'a [FeaturizedExample],
    pub log: DynamicsLog,
}

impl<'a> DynamicsRecorder<'a> {
    pub fn new(trainset: &'a [FeaturizedExample], log: DynamicsLog) -> Self {
        Self { trainset, log }
    }
}

impl EpochObserver for DynamicsRecorder<'_> {
    fn epoch_end(&mut self, params: &ParameterSet, epoch: usize) -> Result<()> {
        record_epoch(params, self.trainset, epoch, &mut self.log).map(|_| ())
    }
}
