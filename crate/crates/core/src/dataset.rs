//! Dataset and beam files (JSON Lines).
//!
//! Dataset: `{"id", "utterance", "gold_lf", "domain", "formalism"}` per line.
//! Beams: `{"id", "candidates": [{"lf", "rank", "score"?}]}` per line; each
//! candidate is parsed with the formalism of the dataset example it belongs to.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beam::{validate_beam, BeamCandidate, BeamError};
use crate::lf::{parse, Formalism, LfError, LfTree, Utterance};

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetExample {
    pub utterance: Utterance,
    pub gold_lf: LfTree,
}

impl DatasetExample {
    pub fn id(&self) -> &str {
        &self.utterance.id
    }

    pub fn domain(&self) -> &str {
        &self.utterance.domain
    }

    pub fn formalism(&self) -> Formalism {
        self.gold_lf.formalism
    }
}

/// Beams keyed by example id, each sorted by rank.
pub type Beams = BTreeMap<String, Vec<BeamCandidate>>;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}: {message}")]
    Record { path: String, line: usize, message: String },
    #[error("{path}:{line}: {source}")]
    Lf { path: String, line: usize, source: LfError },
    #[error("{path}:{line}: beam for {id}: {source}")]
    Beam { path: String, line: usize, id: String, source: BeamError },
    #[error("duplicate example id {0:?}")]
    DuplicateId(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct ExampleRecord {
    id: String,
    utterance: String,
    gold_lf: String,
    domain: String,
    formalism: Formalism,
}

#[derive(Debug, Serialize, Deserialize)]
struct CandidateRecord {
    lf: String,
    rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BeamRecord {
    id: String,
    candidates: Vec<CandidateRecord>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> DataError {
    DataError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Non-empty lines of a JSONL file, with 1-based line numbers.
pub(crate) fn jsonl_lines(path: &Path) -> Result<Vec<(usize, String)>, DataError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<(), DataError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(&item).map_err(|e| io_err(path, e))?;
        writeln!(w, "{line}").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn parse_dataset(path_label: &str, lines: &[(usize, String)]) -> Result<Vec<DatasetExample>, DataError> {
    let record_err = |line: usize, message: String| DataError::Record { path: path_label.to_string(), line, message };
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(lines.len());
    for (line, text) in lines {
        let rec: ExampleRecord = serde_json::from_str(text).map_err(|e| record_err(*line, e.to_string()))?;
        let utterance = Utterance::new(rec.id, rec.utterance, rec.domain).map_err(|m| record_err(*line, m))?;
        let gold_lf = parse(&rec.gold_lf, rec.formalism).map_err(|source| DataError::Lf {
            path: path_label.to_string(),
            line: *line,
            source,
        })?;
        if !seen.insert(utterance.id.clone()) {
            return Err(DataError::DuplicateId(utterance.id));
        }
        out.push(DatasetExample { utterance, gold_lf });
    }
    Ok(out)
}

pub fn read_dataset(path: &Path) -> Result<Vec<DatasetExample>, DataError> {
    parse_dataset(&path.display().to_string(), &jsonl_lines(path)?)
}

pub fn write_dataset(path: &Path, dataset: &[DatasetExample]) -> Result<(), DataError> {
    write_jsonl(
        path,
        dataset.iter().map(|ex| ExampleRecord {
            id: ex.utterance.id.clone(),
            utterance: ex.utterance.text.clone(),
            gold_lf: ex.gold_lf.serialize(),
            domain: ex.utterance.domain.clone(),
            formalism: ex.formalism(),
        }),
    )
}

pub fn parse_beams(
    path_label: &str,
    lines: &[(usize, String)],
    dataset: &[DatasetExample],
) -> Result<Beams, DataError> {
    let formalisms: BTreeMap<&str, Formalism> = dataset.iter().map(|ex| (ex.id(), ex.formalism())).collect();
    let record_err = |line: usize, message: String| DataError::Record { path: path_label.to_string(), line, message };
    let mut beams = Beams::new();
    for (line, text) in lines {
        let rec: BeamRecord = serde_json::from_str(text).map_err(|e| record_err(*line, e.to_string()))?;
        let formalism = *formalisms
            .get(rec.id.as_str())
            .ok_or_else(|| record_err(*line, format!("beam for unknown example {:?}", rec.id)))?;
        let mut beam = Vec::with_capacity(rec.candidates.len());
        for c in rec.candidates {
            let lf = parse(&c.lf, formalism).map_err(|source| DataError::Lf {
                path: path_label.to_string(),
                line: *line,
                source,
            })?;
            beam.push(BeamCandidate { lf, rank: c.rank, generator_score: c.score });
        }
        validate_beam(&mut beam).map_err(|source| DataError::Beam {
            path: path_label.to_string(),
            line: *line,
            id: rec.id.clone(),
            source,
        })?;
        if beams.insert(rec.id.clone(), beam).is_some() {
            return Err(record_err(*line, format!("second beam for {:?}", rec.id)));
        }
    }
    Ok(beams)
}

pub fn read_beams(path: &Path, dataset: &[DatasetExample]) -> Result<Beams, DataError> {
    parse_beams(&path.display().to_string(), &jsonl_lines(path)?, dataset)
}

/// Writes beams in dataset order.
pub fn write_beams(path: &Path, dataset: &[DatasetExample], beams: &Beams) -> Result<(), DataError> {
    write_jsonl(
        path,
        dataset.iter().filter_map(|ex| beams.get(ex.id()).map(|b| (ex.id(), b))).map(|(id, beam)| BeamRecord {
            id: id.to_string(),
            candidates: beam
                .iter()
                .map(|c| CandidateRecord { lf: c.lf.serialize(), rank: c.rank, score: c.generator_score })
                .collect(),
        }),
    )
}
