//! Similarity evaluation and library-search ranking.

mod rank;
mod report;
mod similarity;

pub use rank::{rank_candidates, top_k_percent, top_k_threshold, Entry, QueryRank, RankingTask, MIN_CANDIDATES};
pub use report::{PairScore, RankingReport, SimilarityReport};
pub use similarity::{aggregate_seeds, evaluate_similarity, mean_spectrum, pair_similarities, score, SimilarityStats};

use crate::spectra::SpectrumError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no candidate matches query {0}")]
    MissingTrueMatch(String),
    #[error("query {0} matches more than one candidate")]
    DuplicateTrueMatch(String),
    #[error("nothing to evaluate")]
    EmptyInput,
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}
