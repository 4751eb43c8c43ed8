use thiserror::Error;

use crate::lf::LfTree;

/// One item of a generator's n-best list.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamCandidate {
    pub lf: LfTree,
    /// 1-based position in the generator's ranking.
    pub rank: usize,
    pub generator_score: Option<f64>,
}

impl BeamCandidate {
    pub fn new(lf: LfTree, rank: usize) -> Self {
        BeamCandidate { lf, rank, generator_score: None }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BeamError {
    #[error("empty beam")]
    Empty,
    #[error("beam ranks must be unique and contiguous from 1, found {0:?}")]
    Ranks(Vec<usize>),
}

/// Sorts a beam by rank and checks that ranks are exactly `1..=n`.
pub fn validate_beam(beam: &mut [BeamCandidate]) -> Result<(), BeamError> {
    if beam.is_empty() {
        return Err(BeamError::Empty);
    }
    beam.sort_by_key(|c| c.rank);
    check_ranks(beam)
}

/// Keeps the top `k` candidates of a validated beam.
pub fn truncate_beam(beam: &[BeamCandidate], k: usize) -> &[BeamCandidate] {
    &beam[..k.min(beam.len())]
}

/// Checks rank contiguity without reordering.
pub fn check_ranks(beam: &[BeamCandidate]) -> Result<(), BeamError> {
    if beam.is_empty() {
        return Err(BeamError::Empty);
    }
    let mut ranks: Vec<usize> = beam.iter().map(|c| c.rank).collect();
    ranks.sort_unstable();
    if ranks.iter().enumerate().any(|(i, r)| *r != i + 1) {
        return Err(BeamError::Ranks(ranks));
    }
    Ok(())
}
