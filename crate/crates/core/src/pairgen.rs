//! Training pairs for the critic.
//!
//! For each training utterance: the utterance paired with its processed gold
//! form (label 1), the utterance paired with every incorrect beam candidate
//! (label 0), and every two distinct beam candidates paired with each other
//! (label 0).

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beam::BeamCandidate;
use crate::dataset::{Beams, DatasetExample};
use crate::lf::{normalize, LfError, LfTree, NormalForm, Utterance};
use crate::par::map_ordered;
use crate::preprocess::{process_one, Method, PreprocessError, ProcessedText, Resources};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSource {
    GoldPositive,
    BeamNegative,
    BeamBeamNegative,
}

impl fmt::Display for PairSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairSource::GoldPositive => "gold_positive",
            PairSource::BeamNegative => "beam_negative",
            PairSource::BeamBeamNegative => "beam_beam_negative",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairExample {
    pub text_a: String,
    pub text_b: String,
    pub label: u8,
    pub source: PairSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairGenConfig {
    /// Pair the gold candidate with incorrect candidates in beam/beam
    /// negatives. On by default; turning it off keeps the critic from being
    /// told that the gold form is dissimilar to anything.
    pub include_gold_in_beam_pairs: bool,
    /// Emit beam/beam negatives at all. On by default. A critic with few
    /// features cannot tell two near-identical candidate texts (label 0)
    /// from an utterance and its paraphrase (label 1), so small critics do
    /// better with utterance pairs only.
    pub beam_beam_negatives: bool,
}

impl Default for PairGenConfig {
    fn default() -> Self {
        PairGenConfig { include_gold_in_beam_pairs: true, beam_beam_negatives: true }
    }
}

#[derive(Debug, Error)]
pub enum PairGenError {
    #[error("empty beam for {0:?}")]
    EmptyBeam(String),
    #[error("no beam for example {0:?}")]
    MissingBeam(String),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error("{id}: {source}")]
    Lf { id: String, source: LfError },
}

struct Distinct {
    nf: NormalForm,
    text: Option<String>,
}

pub fn generate_pairs(
    utterance: &Utterance,
    gold_lf: &LfTree,
    beam: &[BeamCandidate],
    method: Method,
    resources: &Resources,
    config: PairGenConfig,
) -> Result<Vec<PairExample>, PairGenError> {
    if beam.is_empty() {
        return Err(PairGenError::EmptyBeam(utterance.id.clone()));
    }
    let lf_err = |source| PairGenError::Lf { id: utterance.id.clone(), source };
    let gold_nf = normalize(gold_lf).map_err(lf_err)?;
    let gold_text = match process_one(gold_lf, method, resources)? {
        ProcessedText::Text(t) => Some(t),
        ProcessedText::Excluded => None,
    };

    let mut ranked: Vec<&BeamCandidate> = beam.iter().collect();
    ranked.sort_by_key(|c| c.rank);
    let mut seen = HashSet::new();
    let mut distinct = Vec::new();
    for c in ranked {
        let nf = normalize(&c.lf).map_err(lf_err)?;
        if !seen.insert(nf.clone()) {
            continue;
        }
        let text = process_one(&c.lf, method, resources)?.text().map(str::to_string);
        distinct.push(Distinct { nf, text });
    }

    let mut out = Vec::new();
    if let Some(gold) = &gold_text {
        out.push(pair(&utterance.text, gold, PairSource::GoldPositive));
    }
    for d in distinct.iter().filter(|d| d.nf != gold_nf) {
        if let Some(t) = &d.text {
            // Same text as the gold would contradict the positive pair.
            if gold_text.as_deref() != Some(t.as_str()) {
                out.push(pair(&utterance.text, t, PairSource::BeamNegative));
            }
        }
    }
    let usable: Vec<&Distinct> = distinct
        .iter()
        .filter(|d| config.beam_beam_negatives && d.text.is_some())
        .filter(|d| config.include_gold_in_beam_pairs || d.nf != gold_nf)
        .collect();
    for (i, a) in usable.iter().enumerate() {
        for b in &usable[i + 1..] {
            out.push(pair(a.text.as_deref().unwrap(), b.text.as_deref().unwrap(), PairSource::BeamBeamNegative));
        }
    }

    let mut keys = HashSet::new();
    out.retain(|p| {
        if p.text_a == p.text_b {
            return false;
        }
        let key = if p.source == PairSource::BeamBeamNegative && p.text_b < p.text_a {
            (p.text_b.clone(), p.text_a.clone(), p.label)
        } else {
            (p.text_a.clone(), p.text_b.clone(), p.label)
        };
        keys.insert(key)
    });
    Ok(out)
}

fn pair(a: &str, b: &str, source: PairSource) -> PairExample {
    let label = u8::from(source == PairSource::GoldPositive);
    PairExample { text_a: a.to_string(), text_b: b.to_string(), label, source }
}

/// Pairs for a whole dataset, in dataset order. `jobs > 1` generates
/// examples in parallel; the output is identical.
pub fn generate_dataset(
    dataset: &[DatasetExample],
    beams: &Beams,
    method: Method,
    resources: &Resources,
    config: PairGenConfig,
    jobs: usize,
) -> Result<Vec<PairExample>, PairGenError> {
    resources.check(method)?;
    let per_example = map_ordered(dataset, jobs, |ex| {
        let beam = beams.get(ex.id()).ok_or_else(|| PairGenError::MissingBeam(ex.id().to_string()))?;
        generate_pairs(&ex.utterance, &ex.gold_lf, beam, method, resources, config)
    })?;
    Ok(per_example.into_iter().flatten().collect())
}

pub fn shuffle_pairs(pairs: &mut [PairExample], seed: u64) {
    pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
}

pub fn write_pairs<W: Write>(mut w: W, pairs: &[PairExample]) -> std::io::Result<()> {
    for p in pairs {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_pairs<R: BufRead>(r: R) -> Result<Vec<PairExample>, String> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        let p: PairExample = serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 1))?;
        if p.label > 1 {
            return Err(format!("line {}: label must be 0 or 1", i + 1));
        }
        out.push(p);
    }
    Ok(out)
}

pub fn read_pairs_file(path: &Path) -> Result<Vec<PairExample>, String> {
    let f = std::fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    read_pairs(std::io::BufReader::new(f)).map_err(|e| format!("{}: {e}", path.display()))
}
