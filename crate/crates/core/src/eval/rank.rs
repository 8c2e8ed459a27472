use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{score, EvalError};
use crate::spectra::Spectrum;

/// Candidates per query below which a top-5% cutoff keeps fewer than one.
pub const MIN_CANDIDATES: usize = 20;

/// A binned spectrum with the identity used to find the true match.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub id: String,
    pub spectrum: Spectrum,
    pub precursor_mz: Option<f64>,
}

/// Queries are measured spectra. References mix predictions for the query
/// molecules with measured spectra of other molecules; a query's true match
/// is the reference with the same id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingTask {
    pub queries: Vec<Entry>,
    pub references: Vec<Entry>,
    /// Keep only references within this many Da of the query precursor.
    /// Entries without a precursor are never filtered out.
    pub precursor_window: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRank {
    pub query: String,
    pub rank: usize,
    pub candidates: usize,
    /// Similarity between the query and its true match.
    pub similarity: f64,
}

impl RankingTask {
    /// Reference indices competing for query `q`.
    pub fn candidates(&self, q: usize) -> Vec<usize> {
        let query = &self.queries[q];
        self.references
            .iter()
            .enumerate()
            .filter(
                |(_, r)| match (self.precursor_window, query.precursor_mz, r.precursor_mz) {
                    (Some(w), Some(a), Some(b)) => (a - b).abs() <= w,
                    _ => true,
                },
            )
            .map(|(i, _)| i)
            .collect()
    }

    fn rank_one(&self, q: usize) -> Result<QueryRank, EvalError> {
        let query = &self.queries[q];
        let cands = self.candidates(q);
        let matches: Vec<usize> = cands
            .iter()
            .copied()
            .filter(|&i| self.references[i].id == query.id)
            .collect();
        let [truth] = matches[..] else {
            return Err(if matches.is_empty() {
                EvalError::MissingTrueMatch(query.id.clone())
            } else {
                EvalError::DuplicateTrueMatch(query.id.clone())
            });
        };
        let true_score = score(&self.references[truth].spectrum, &query.spectrum)?;
        let mut ahead = 0;
        for &i in &cands {
            if i != truth && score(&self.references[i].spectrum, &query.spectrum)? >= true_score {
                ahead += 1;
            }
        }
        Ok(QueryRank {
            query: query.id.clone(),
            rank: ahead + 1,
            candidates: cands.len(),
            similarity: true_score,
        })
    }
}

/// Rank of each query's true match among its candidates by descending
/// similarity. Ties count against the true match.
pub fn rank_candidates(task: &RankingTask) -> Result<Vec<QueryRank>, EvalError> {
    let ranks: Vec<QueryRank> = (0..task.queries.len())
        .into_par_iter()
        .map(|q| task.rank_one(q))
        .collect::<Result<_, _>>()?;
    let small = ranks.iter().filter(|r| r.candidates < MIN_CANDIDATES).count();
    if small > 0 {
        warn!("{small} queries have fewer than {MIN_CANDIDATES} candidates");
    }
    Ok(ranks)
}

/// Smallest rank that still counts as within the top `k` percent.
pub fn top_k_threshold(count: usize, k: u32) -> usize {
    (count * k as usize).div_ceil(100)
}

/// Fraction of queries whose rank is at most `ceil(k% of its candidates)`.
pub fn top_k_percent(ranks: &[usize], counts: &[usize], k: u32) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    let hits = ranks
        .iter()
        .zip(counts)
        .filter(|&(&r, &c)| r <= top_k_threshold(c, k))
        .count();
    hits as f64 / ranks.len() as f64
}
