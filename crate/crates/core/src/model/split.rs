use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chem::{murcko_scaffold, Molecule};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub valid: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SplitError {
    #[error("cannot split an empty corpus")]
    EmptyCorpus,
    #[error("split fractions must be nonnegative and sum to 1")]
    BadFractions,
}

/// Groups molecules by Murcko scaffold and assigns whole groups, largest
/// first, to the first partition that still has room; groups that fit
/// nowhere go to train. The seed only orders groups of equal size.
pub fn scaffold_split(corpus: &[Molecule], fractions: [f64; 3], seed: u64) -> Result<DatasetSplit, SplitError> {
    if corpus.is_empty() {
        return Err(SplitError::EmptyCorpus);
    }
    if fractions.iter().any(|f| *f < 0.0) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(SplitError::BadFractions);
    }
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, m) in corpus.iter().enumerate() {
        groups.entry(murcko_scaffold(m)).or_default().push(i);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    groups.shuffle(&mut rng);
    groups.sort_by_key(|g| std::cmp::Reverse(g.len()));

    let n = corpus.len() as f64;
    let targets = fractions.map(|f| f * n);
    let mut parts: [Vec<usize>; 3] = Default::default();
    for g in groups {
        let slot = (0..3)
            .find(|&p| (parts[p].len() + g.len()) as f64 <= targets[p] + 1e-9)
            .unwrap_or(0);
        parts[slot].extend(g);
    }
    let ids = |p: &mut Vec<usize>| {
        p.sort_unstable();
        p.iter().map(|&i| corpus[i].id.clone()).collect()
    };
    let [mut tr, mut va, mut te] = parts;
    Ok(DatasetSplit {
        train: ids(&mut tr),
        valid: ids(&mut va),
        test: ids(&mut te),
    })
}
