//! Threshold-gated reranking of a generator's beam.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beam::{check_ranks, truncate_beam, BeamCandidate, BeamError};
use crate::dataset::{jsonl_lines, write_jsonl, Beams, DataError, DatasetExample};
use crate::lf::{parse, LfError, LfTree, Utterance};
use crate::par::map_ordered;
use crate::preprocess::{process_one, Method, PreprocessError, ProcessedText, Resources};
use crate::scorer::{OracleScorer, Score, Scorer, ScorerError};

pub const DEFAULT_SCORE_FLOOR: f64 = 0.5;
pub const DEFAULT_MARGIN: f64 = 0.001;

/// When to trust the critic over the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    /// Always rerank.
    Always,
    /// Rerank if some score is above the floor.
    Th1,
    /// Rerank if best minus second-best exceeds the margin.
    Th2,
    /// Both TH1 and TH2.
    Th3,
}

impl Rule {
    pub const ALL: [Rule; 4] = [Rule::Always, Rule::Th1, Rule::Th2, Rule::Th3];

    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Always => "always",
            Rule::Th1 => "th1",
            Rule::Th2 => "th2",
            Rule::Th3 => "th3",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Rule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "always" => Ok(Rule::Always),
            "th1" => Ok(Rule::Th1),
            "th2" => Ok(Rule::Th2),
            "th3" => Ok(Rule::Th3),
            other => Err(format!("unknown rule {other:?} (expected always, th1, th2 or th3)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RerankPolicy {
    pub method: Method,
    pub rule: Rule,
    pub score_floor: f64,
    pub margin: f64,
}

impl RerankPolicy {
    pub fn new(method: Method, rule: Rule) -> Self {
        RerankPolicy { method, rule, score_floor: DEFAULT_SCORE_FLOOR, margin: DEFAULT_MARGIN }
    }

    pub fn with_thresholds(mut self, score_floor: f64, margin: f64) -> Result<Self, RerankError> {
        if !(score_floor > 0.0 && score_floor < 1.0) {
            return Err(RerankError::Policy(format!("score floor {score_floor} must lie in (0, 1)")));
        }
        if margin.is_nan() || margin < 0.0 {
            return Err(RerankError::Policy(format!("margin {margin} must be non-negative")));
        }
        self.score_floor = score_floor;
        self.margin = margin;
        Ok(self)
    }

    /// Whether the rule lets the critic override the generator, given the
    /// best and second-best scores (`second` is `-inf` for a single
    /// scored candidate).
    pub fn permits(&self, best: f64, second: f64) -> bool {
        let above_floor = best > self.score_floor;
        let clear_winner = best - second > self.margin;
        match self.rule {
            Rule::Always => true,
            Rule::Th1 => above_floor,
            Rule::Th2 => clear_winner,
            Rule::Th3 => above_floor && clear_winner,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    AllExcluded,
    RuleNotMet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CandidateScore {
    Scored(Score),
    Excluded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RerankResult {
    pub id: String,
    pub chosen: LfTree,
    pub chosen_rank: usize,
    pub reranked: bool,
    /// One entry per input candidate, in rank order.
    pub scores: Vec<(usize, CandidateScore)>,
    pub fallback: Option<Fallback>,
}

#[derive(Debug, Error)]
pub enum RerankError {
    #[error("empty beam for {0:?}")]
    EmptyBeam(String),
    #[error("beam for {id:?}: {source}")]
    InvalidBeam { id: String, source: BeamError },
    #[error("no beam for example {0:?}")]
    MissingBeam(String),
    #[error("invalid policy: {0}")]
    Policy(String),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error("{id}: {source}")]
    Scorer { id: String, source: ScorerError },
    #[error(transparent)]
    Data(#[from] DataError),
}

pub fn rerank_one(
    utterance: &Utterance,
    beam: &[BeamCandidate],
    policy: &RerankPolicy,
    scorer: &dyn Scorer,
    resources: &Resources,
) -> Result<RerankResult, RerankError> {
    let id = utterance.id.clone();
    check_ranks(beam).map_err(|source| match source {
        BeamError::Empty => RerankError::EmptyBeam(id.clone()),
        source => RerankError::InvalidBeam { id: id.clone(), source },
    })?;
    let mut ranked: Vec<&BeamCandidate> = beam.iter().collect();
    ranked.sort_by_key(|c| c.rank);
    let top1 = ranked[0];

    let texts = ranked.iter().map(|c| process_one(&c.lf, policy.method, resources)).collect::<Result<Vec<_>, _>>()?;
    let scored: Vec<(usize, &str)> = texts.iter().enumerate().filter_map(|(i, t)| t.text().map(|t| (i, t))).collect();

    let generator_choice = |scores, fallback| RerankResult {
        id: id.clone(),
        chosen: top1.lf.clone(),
        chosen_rank: top1.rank,
        reranked: false,
        scores,
        fallback: Some(fallback),
    };
    if scored.is_empty() {
        let scores = ranked.iter().map(|c| (c.rank, CandidateScore::Excluded)).collect();
        return Ok(generator_choice(scores, Fallback::AllExcluded));
    }

    let pairs: Vec<(&str, &str)> = scored.iter().map(|(_, t)| (utterance.text.as_str(), *t)).collect();
    let values = scorer.score_batch(&pairs).map_err(|source| RerankError::Scorer { id: id.clone(), source })?;
    if values.len() != pairs.len() {
        let source = ScorerError::LengthMismatch { expected: pairs.len(), got: values.len() };
        return Err(RerankError::Scorer { id, source });
    }

    let mut by_index = vec![CandidateScore::Excluded; ranked.len()];
    for ((i, _), s) in scored.iter().zip(&values) {
        by_index[*i] = CandidateScore::Scored(*s);
    }
    let scores: Vec<(usize, CandidateScore)> = ranked.iter().zip(&by_index).map(|(c, s)| (c.rank, *s)).collect();

    // Candidates are in rank order, so a strict comparison keeps the
    // lower-ranked candidate on ties.
    let mut best = 0;
    for (j, s) in values.iter().enumerate() {
        if s.value() > values[best].value() {
            best = j;
        }
    }
    let best_score = values[best].value();
    let second =
        values.iter().enumerate().filter(|(j, _)| *j != best).map(|(_, s)| s.value()).fold(f64::NEG_INFINITY, f64::max);

    if !policy.permits(best_score, second) {
        return Ok(generator_choice(scores, Fallback::RuleNotMet));
    }
    let winner = ranked[scored[best].0];
    Ok(RerankResult { id, chosen: winner.lf.clone(), chosen_rank: winner.rank, reranked: true, scores, fallback: None })
}

/// Where scores come from when reranking a whole dataset.
#[derive(Clone, Copy)]
pub enum Critic<'a> {
    Model(&'a dyn Scorer),
    /// Per-example indicator scorer keyed on the processed gold form.
    Oracle,
}

#[derive(Debug, Clone, Copy)]
pub struct RerankOptions {
    /// Keep only the top `beam_size` candidates of each beam.
    pub beam_size: Option<usize>,
    pub jobs: usize,
}

impl Default for RerankOptions {
    fn default() -> Self {
        RerankOptions { beam_size: None, jobs: 1 }
    }
}

pub fn rerank_dataset(
    dataset: &[DatasetExample],
    beams: &Beams,
    policy: &RerankPolicy,
    critic: Critic<'_>,
    resources: &Resources,
    options: RerankOptions,
) -> Result<Vec<RerankResult>, RerankError> {
    resources.check(policy.method)?;
    map_ordered(dataset, options.jobs, |ex| {
        let beam = beams.get(ex.id()).ok_or_else(|| RerankError::MissingBeam(ex.id().to_string()))?;
        let beam = match options.beam_size {
            Some(k) => truncate_beam(beam, k),
            None => beam,
        };
        match critic {
            Critic::Model(scorer) => rerank_one(&ex.utterance, beam, policy, scorer, resources),
            Critic::Oracle => {
                let gold = match process_one(&ex.gold_lf, policy.method, resources)? {
                    ProcessedText::Text(t) => Some(t),
                    ProcessedText::Excluded => None,
                };
                rerank_one(&ex.utterance, beam, policy, &OracleScorer::new(gold), resources)
            }
        }
    })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ScoreField {
    Value(f64),
    Marker(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct ScoreRecord {
    rank: usize,
    score: ScoreField,
}

#[derive(Debug, Serialize, Deserialize)]
struct ResultRecord {
    id: String,
    chosen_lf: String,
    reranked: bool,
    fallback_reason: Option<Fallback>,
    scores: Vec<ScoreRecord>,
}

impl From<&RerankResult> for ResultRecord {
    fn from(r: &RerankResult) -> Self {
        ResultRecord {
            id: r.id.clone(),
            chosen_lf: r.chosen.serialize(),
            reranked: r.reranked,
            fallback_reason: r.fallback,
            scores: r
                .scores
                .iter()
                .map(|(rank, s)| ScoreRecord {
                    rank: *rank,
                    score: match s {
                        CandidateScore::Scored(v) => ScoreField::Value(v.value()),
                        CandidateScore::Excluded => ScoreField::Marker("EXCLUDED".into()),
                    },
                })
                .collect(),
        }
    }
}

pub fn result_to_json(result: &RerankResult) -> String {
    serde_json::to_string(&ResultRecord::from(result)).expect("result serializes")
}

pub fn write_results(path: &Path, results: &[RerankResult]) -> Result<(), DataError> {
    write_jsonl(path, results.iter().map(ResultRecord::from))
}

/// Chosen logical form per example id, as consumed by evaluation.
pub type Predictions = BTreeMap<String, LfTree>;

pub fn predictions(results: &[RerankResult]) -> Predictions {
    results.iter().map(|r| (r.id.clone(), r.chosen.clone())).collect()
}

/// Reads a results file; `chosen_lf` is parsed with the formalism of the
/// matching dataset example.
pub fn read_predictions(path: &Path, dataset: &[DatasetExample]) -> Result<Predictions, DataError> {
    let label = path.display().to_string();
    let formalisms: BTreeMap<&str, _> = dataset.iter().map(|ex| (ex.id(), ex.formalism())).collect();
    let mut out = Predictions::new();
    for (line, text) in jsonl_lines(path)? {
        let record_err = |message: String| DataError::Record { path: label.clone(), line, message };
        let rec: ResultRecord = serde_json::from_str(&text).map_err(|e| record_err(e.to_string()))?;
        let formalism =
            *formalisms.get(rec.id.as_str()).ok_or_else(|| record_err(format!("unknown example {:?}", rec.id)))?;
        let lf = parse(&rec.chosen_lf, formalism).map_err(|source: LfError| DataError::Lf {
            path: label.clone(),
            line,
            source,
        })?;
        out.insert(rec.id, lf);
    }
    Ok(out)
}
