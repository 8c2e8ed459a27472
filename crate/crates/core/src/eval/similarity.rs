use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::spectra::{cosine_similarity, Spectrum};

/// Mean and population standard deviation of a set of scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityStats {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl SimilarityStats {
    pub fn from_scores(scores: &[f64]) -> SimilarityStats {
        let n = scores.len();
        if n == 0 {
            return SimilarityStats { mean: 0.0, std: 0.0, n };
        }
        let mean = scores.iter().sum::<f64>() / n as f64;
        let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64;
        SimilarityStats {
            mean,
            std: var.sqrt(),
            n,
        }
    }
}

impl std::fmt::Display for SimilarityStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.4} ± {:.4} (n={})", self.mean, self.std, self.n)
    }
}

/// Cosine similarity where an all-zero side scores 0 instead of failing.
pub fn score(pred: &Spectrum, truth: &Spectrum) -> Result<f64, EvalError> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch(pred.len(), truth.len()));
    }
    Ok(cosine_similarity(pred, truth).unwrap_or(0.0))
}

/// Per-pair similarities of aligned prediction and truth lists.
pub fn pair_similarities(pred: &[Spectrum], truth: &[Spectrum]) -> Result<Vec<f64>, EvalError> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch(pred.len(), truth.len()));
    }
    pred.iter().zip(truth).map(|(p, t)| score(p, t)).collect()
}

pub fn evaluate_similarity(pred: &[Spectrum], truth: &[Spectrum]) -> Result<SimilarityStats, EvalError> {
    Ok(SimilarityStats::from_scores(&pair_similarities(pred, truth)?))
}

/// Combines one run per seed: mean of the run means, and the population
/// spread of those means.
pub fn aggregate_seeds(runs: &[SimilarityStats]) -> SimilarityStats {
    let means: Vec<f64> = runs.iter().map(|r| r.mean).collect();
    SimilarityStats::from_scores(&means)
}

/// Constant predictor: the sum of the L2-normalized training spectra.
pub fn mean_spectrum(spectra: &[Spectrum]) -> Result<Spectrum, EvalError> {
    let Some(first) = spectra.first() else {
        return Err(EvalError::EmptyInput);
    };
    let mut acc = vec![0.0; first.len()];
    for s in spectra {
        if s.len() != acc.len() {
            return Err(EvalError::LengthMismatch(acc.len(), s.len()));
        }
        let n = s.norm();
        if n > 0.0 {
            acc.iter_mut().zip(s.bins()).for_each(|(a, x)| *a += x / n);
        }
    }
    Ok(Spectrum::from_bins(acc))
}
