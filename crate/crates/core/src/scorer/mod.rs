//! The critic: anything that maps sentence pairs to similarity scores in
//! `[0, 1]`.

mod baseline;
mod remote;

use std::fmt;

use thiserror::Error;

pub use baseline::{
    extract_features, pair_accuracy, tokenize, train_baseline, BaselineModel, TrainConfig, FEATURE_NAMES,
};
pub use remote::RemoteScorer;

/// A similarity score, guaranteed to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Score(f64);

impl Score {
    pub fn new(value: f64) -> Result<Self, ScorerError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Score(value))
        } else {
            Err(ScorerError::OutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("score {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("remote scorer protocol error: {0}")]
    RemoteProtocol(String),
    #[error("remote scorer unavailable: {0}")]
    RemoteUnavailable(String),
    #[error("scorer returned {got} scores for {expected} pairs")]
    LengthMismatch { expected: usize, got: usize },
    #[error("training corpus is degenerate: {0}")]
    DegenerateCorpus(String),
    #[error("model file: {0}")]
    Model(String),
}

/// Scores sentence pairs. Implementations must return exactly one score per
/// pair, in order.
pub trait Scorer: Send + Sync {
    fn score_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<Score>, ScorerError>;
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn score_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<Score>, ScorerError> {
        (**self).score_batch(pairs)
    }
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn score_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<Score>, ScorerError> {
        (**self).score_batch(pairs)
    }
}

/// Scores every pair with the same value.
#[derive(Debug, Clone, Copy)]
pub struct ConstantScorer(Score);

impl ConstantScorer {
    pub fn new(value: f64) -> Result<Self, ScorerError> {
        Ok(ConstantScorer(Score::new(value)?))
    }
}

impl Scorer for ConstantScorer {
    fn score_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<Score>, ScorerError> {
        Ok(vec![self.0; pairs.len()])
    }
}

/// Indicator scorer: 1.0 when the second sentence is the processed gold
/// form, 0.0 otherwise. Gives the reranking upper bound.
#[derive(Debug, Clone)]
pub struct OracleScorer {
    gold: Option<String>,
}

impl OracleScorer {
    /// `None` when the gold form has no processed text (e.g. no template);
    /// every pair then scores 0.
    pub fn new(gold_processed_text: Option<String>) -> Self {
        OracleScorer { gold: gold_processed_text }
    }
}

impl Scorer for OracleScorer {
    fn score_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<Score>, ScorerError> {
        Ok(pairs.iter().map(|(_, b)| Score(if self.gold.as_deref() == Some(*b) { 1.0 } else { 0.0 })).collect())
    }
}
