use std::collections::{BTreeMap, BTreeSet, HashMap};

use log::debug;
use rayon::prelude::*;

use super::vocab::{MergeStep, Motif, MotifVocabulary};
use crate::chem::{canonical_key, canonical_smiles, parse_smiles, Molecule};

/// Largest motif, in heavy atoms, accepted into the vocabulary.
pub const MAX_MOTIF_ATOMS: usize = 30;

/// Vocabulary size used when none is given.
pub const DEFAULT_VOCAB_SIZE: usize = 300;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MiningError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no adjacent fragment pairs remain")]
    NoAdjacentPairs,
}

/// Partition of one molecule's atoms into connected fragments.
#[derive(Debug, Clone)]
pub struct Fragmentation {
    assignment: Vec<usize>,
    fragments: BTreeMap<usize, Vec<usize>>,
    next_id: usize,
    pair_keys: HashMap<(usize, usize), String>,
}

impl Fragmentation {
    /// One fragment per atom.
    pub fn singletons(mol: &Molecule) -> Fragmentation {
        let n = mol.num_atoms();
        Fragmentation {
            assignment: (0..n).collect(),
            fragments: (0..n).map(|i| (i, vec![i])).collect(),
            next_id: n,
            pair_keys: HashMap::new(),
        }
    }

    pub fn fragment_count(&self) -> usize {
        self.fragments.len()
    }

    /// Fragments as sorted atom lists, ordered by their smallest atom.
    pub fn fragments(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.fragments.values().cloned().collect();
        out.sort();
        out
    }

    pub fn fragment_of(&self, atom: usize) -> usize {
        self.assignment[atom]
    }

    /// Unordered pairs of fragment ids joined by at least one bond.
    pub fn adjacent_pairs(&self, mol: &Molecule) -> BTreeSet<(usize, usize)> {
        mol.bonds()
            .iter()
            .filter_map(|b| {
                let (x, y) = (self.assignment[b.a], self.assignment[b.b]);
                (x != y).then(|| (x.min(y), x.max(y)))
            })
            .collect()
    }

    fn union_atoms(&self, pair: (usize, usize)) -> Vec<usize> {
        let mut atoms = self.fragments[&pair.0].clone();
        atoms.extend_from_slice(&self.fragments[&pair.1]);
        atoms.sort_unstable();
        atoms
    }

    fn pair_key(&mut self, mol: &Molecule, pair: (usize, usize)) -> &str {
        if !self.pair_keys.contains_key(&pair) {
            let atoms = self.union_atoms(pair);
            let key = canonical_key(&mol.induced_subgraph(&atoms)).expect("adjacent fragments are connected");
            self.pair_keys.insert(pair, key);
        }
        &self.pair_keys[&pair]
    }

    /// Merged keys of every adjacent pair, with multiplicity.
    pub fn pair_counts(&mut self, mol: &Molecule) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for pair in self.adjacent_pairs(mol) {
            *counts.entry(self.pair_key(mol, pair).to_string()).or_default() += 1;
        }
        counts
    }

    /// Merges every non-overlapping adjacent pair whose union has `key`.
    /// Candidates are taken in order of their sorted atom lists, so overlaps
    /// resolve toward the lowest atom indices. Returns the merged atom sets.
    pub fn apply_merge(&mut self, mol: &Molecule, key: &str) -> Vec<Vec<usize>> {
        let pairs: Vec<(usize, usize)> = self.adjacent_pairs(mol).into_iter().collect();
        let mut candidates: Vec<(Vec<usize>, (usize, usize))> = Vec::new();
        for pair in pairs {
            if self.pair_key(mol, pair) == key {
                candidates.push((self.union_atoms(pair), pair));
            }
        }
        candidates.sort();
        let mut used = BTreeSet::new();
        let mut merged = Vec::new();
        for (atoms, (x, y)) in candidates {
            if used.contains(&x) || used.contains(&y) {
                continue;
            }
            used.insert(x);
            used.insert(y);
            let id = self.next_id;
            self.next_id += 1;
            self.fragments.remove(&x);
            self.fragments.remove(&y);
            for &a in &atoms {
                self.assignment[a] = id;
            }
            self.fragments.insert(id, atoms.clone());
            merged.push(atoms);
        }
        if !used.is_empty() {
            self.pair_keys
                .retain(|&(x, y), _| !used.contains(&x) && !used.contains(&y));
        }
        merged
    }
}

/// Corpus-wide merge state: every molecule with its current fragmentation.
#[derive(Debug, Clone)]
pub struct FragmentState {
    molecules: Vec<Molecule>,
    parts: Vec<Fragmentation>,
}

/// Winner of one counting pass.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeCandidate {
    pub key: String,
    pub count: usize,
}

/// What one call to [`FragmentState::merge_round`] did.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub key: String,
    pub count: usize,
    pub accepted: bool,
    pub merges_applied: usize,
}

pub fn init_fragments(corpus: &[Molecule]) -> Result<FragmentState, MiningError> {
    if corpus.is_empty() {
        return Err(MiningError::EmptyCorpus);
    }
    Ok(FragmentState {
        molecules: corpus.to_vec(),
        parts: corpus.iter().map(Fragmentation::singletons).collect(),
    })
}

impl FragmentState {
    pub fn molecules(&self) -> &[Molecule] {
        &self.molecules
    }

    pub fn fragmentation(&self, i: usize) -> &Fragmentation {
        &self.parts[i]
    }

    pub fn fragment_count(&self) -> usize {
        self.parts.iter().map(Fragmentation::fragment_count).sum()
    }

    pub fn adjacency_count(&self) -> usize {
        self.parts
            .iter()
            .zip(&self.molecules)
            .map(|(p, m)| p.adjacent_pairs(m).len())
            .sum()
    }

    /// Pair counts summed over the corpus. Per-molecule tables are built in
    /// parallel and merged in a fixed order.
    pub fn pair_counts(&mut self) -> BTreeMap<String, usize> {
        let tables: Vec<BTreeMap<String, usize>> = self
            .parts
            .par_iter_mut()
            .zip(self.molecules.par_iter())
            .map(|(p, m)| p.pair_counts(m))
            .collect();
        let mut total = BTreeMap::new();
        for t in tables {
            for (k, c) in t {
                *total.entry(k).or_default() += c;
            }
        }
        total
    }

    /// Most frequent merged key; ties go to the smallest key.
    pub fn most_frequent_pair(&mut self) -> Result<MergeCandidate, MiningError> {
        let counts = self.pair_counts();
        let mut best: Option<(&String, usize)> = None;
        for (k, &c) in &counts {
            // BTreeMap iterates keys ascending, so strict > keeps the smallest on ties
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((k, c));
            }
        }
        best.map(|(k, c)| MergeCandidate {
            key: k.clone(),
            count: c,
        })
        .ok_or(MiningError::NoAdjacentPairs)
    }

    /// Applies `key` to every molecule and returns the number of merges and
    /// one merged example fragment (from the first molecule that had one).
    pub fn apply_merge(&mut self, key: &str) -> (usize, Option<Molecule>) {
        let results: Vec<Vec<Vec<usize>>> = self
            .parts
            .par_iter_mut()
            .zip(self.molecules.par_iter())
            .map(|(p, m)| p.apply_merge(m, key))
            .collect();
        let mut example = None;
        let mut applied = 0;
        for (i, r) in results.iter().enumerate() {
            applied += r.len();
            if example.is_none() {
                if let Some(atoms) = r.first() {
                    example = Some(self.molecules[i].induced_subgraph(atoms));
                }
            }
        }
        (applied, example)
    }

    /// One merge-and-update iteration.
    pub fn merge_round(&mut self, vocab: &mut MotifVocabulary) -> Result<RoundOutcome, MiningError> {
        let winner = self.most_frequent_pair()?;
        let (applied, example) = self.apply_merge(&winner.key);
        let fragment = example.expect("winning pair occurs in the corpus");
        let motif = validate_fragment(&fragment, &winner.key, winner.count);
        let accepted = match motif {
            Some(m) if !vocab.contains_key(&m.key) => {
                vocab.push_motif(m);
                true
            }
            _ => false,
        };
        vocab.push_step(MergeStep {
            key: winner.key.clone(),
            frequency: winner.count,
            accepted,
        });
        debug!(
            "merge {:?} x{} ({} applied, accepted={accepted})",
            winner.key, winner.count, applied
        );
        Ok(RoundOutcome {
            key: winner.key,
            count: winner.count,
            accepted,
            merges_applied: applied,
        })
    }
}

/// Connected, at most [`MAX_MOTIF_ATOMS`] heavy atoms, and readable as a
/// standalone valence-legal SMILES.
pub fn validate_fragment(fragment: &Molecule, key: &str, frequency: usize) -> Option<Motif> {
    if !fragment.is_connected() || fragment.heavy_atom_count() > MAX_MOTIF_ATOMS {
        return None;
    }
    let smiles = canonical_smiles(fragment);
    let molecule = parse_smiles_with_key(&smiles, key)?;
    Some(Motif {
        key: key.to_string(),
        smiles,
        frequency,
        molecule,
    })
}

fn parse_smiles_with_key(smiles: &str, key: &str) -> Option<Molecule> {
    let mut m = parse_smiles(smiles).ok()?;
    m.id = key.to_string();
    Some(m)
}

/// Runs up to `k` merge rounds, stopping early when no pairs remain.
pub fn mine_vocabulary(corpus: &[Molecule], k: usize) -> Result<MotifVocabulary, MiningError> {
    let mut state = init_fragments(corpus)?;
    let mut vocab = MotifVocabulary::new(k);
    for round in 0..k {
        match state.merge_round(&mut vocab) {
            Ok(_) => {}
            Err(MiningError::NoAdjacentPairs) => {
                debug!("mining stopped after {round} rounds: no pairs left");
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(vocab)
}

/// Replays the vocabulary's merge sequence on one molecule, returning every
/// vocabulary motif formed along the way as (motif index, atom set).
pub fn replay_merges(m: &Molecule, vocab: &MotifVocabulary) -> Vec<(usize, Vec<usize>)> {
    let mut frag = Fragmentation::singletons(m);
    let mut out = Vec::new();
    for step in vocab.steps() {
        let merged = frag.apply_merge(m, &step.key);
        if step.accepted {
            let idx = vocab
                .index_of(&step.key)
                .expect("accepted steps are vocabulary entries");
            out.extend(merged.into_iter().map(|atoms| (idx, atoms)));
        }
    }
    out
}

/// Count of each vocabulary motif formed when replaying the merges on `m`.
pub fn motif_occurrences(m: &Molecule, vocab: &MotifVocabulary) -> Vec<usize> {
    let mut counts = vec![0; vocab.len()];
    for (idx, _) in replay_merges(m, vocab) {
        counts[idx] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn corpus(smiles: &[&str]) -> Vec<Molecule> {
        smiles
            .iter()
            .enumerate()
            .map(|(i, s)| crate::chem::parse_smiles_with_id(s, &format!("m{i}")).unwrap())
            .collect()
    }

    fn key(s: &str) -> String {
        canonical_key(&parse_smiles(s).unwrap()).unwrap()
    }

    #[test]
    fn init_counts() {
        let st = init_fragments(&corpus(&["CCO"])).unwrap();
        assert_eq!((st.fragment_count(), st.adjacency_count()), (3, 2));
        let st = init_fragments(&corpus(&["C"])).unwrap();
        assert_eq!((st.fragment_count(), st.adjacency_count()), (1, 0));
        assert_eq!(init_fragments(&[]).unwrap_err(), MiningError::EmptyCorpus);
    }

    #[test]
    fn most_frequent_pair_counts_every_occurrence() {
        let mut st = init_fragments(&corpus(&["CCO", "CCN", "CCC"])).unwrap();
        let best = st.most_frequent_pair().unwrap();
        assert_eq!(
            best,
            MergeCandidate {
                key: key("CC"),
                count: 4
            }
        );
        let mut st = init_fragments(&corpus(&["CO"])).unwrap();
        assert_eq!(st.most_frequent_pair().unwrap().count, 1);
        let mut st = init_fragments(&corpus(&["C"])).unwrap();
        assert_eq!(st.most_frequent_pair().unwrap_err(), MiningError::NoAdjacentPairs);
    }

    #[test]
    fn first_round_merges_cc() {
        let mut st = init_fragments(&corpus(&["CCO", "CCN", "CCC"])).unwrap();
        let mut vocab = MotifVocabulary::new(1);
        let out = st.merge_round(&mut vocab).unwrap();
        assert!(out.accepted);
        assert_eq!(out.merges_applied, 3);
        for i in 0..3 {
            assert!(st.fragmentation(i).fragments().contains(&vec![0, 1]));
        }
        assert_eq!(vocab.len(), 1);
        assert_eq!(vocab.entries()[0].smiles, "CC");
    }

    #[test]
    fn zero_rounds() {
        let v = mine_vocabulary(&corpus(&["CCO"]), 0).unwrap();
        assert!(v.is_empty());
    }

    #[test]
    fn oversized_fragment_is_skipped() {
        // a 34-carbon chain: the last merges produce fragments above the cap
        let chain = "C".repeat(34);
        let v = mine_vocabulary(&corpus(&[&chain]), 40).unwrap();
        assert!(v
            .entries()
            .iter()
            .all(|m| m.molecule.heavy_atom_count() <= MAX_MOTIF_ATOMS));
        assert!(v.steps().iter().any(|s| !s.accepted));
        let mut st = init_fragments(&corpus(&[&chain])).unwrap();
        let mut replay = MotifVocabulary::new(40);
        while st.merge_round(&mut replay).is_ok() {}
        assert_eq!(st.fragment_count(), 1);
    }

    #[test]
    fn partial_aromatic_fragments_are_invalid() {
        let v = mine_vocabulary(&corpus(&["c1ccccc1", "c1ccccc1C"]), 6).unwrap();
        let benzene = key("c1ccccc1");
        assert!(v.contains_key(&benzene));
        assert!(v.entries().iter().all(|m| !m.key.starts_with("cc")));
    }

    #[test]
    fn occurrences_replay() {
        let v = mine_vocabulary(&corpus(&["CC"]), 1).unwrap();
        let counts = motif_occurrences(&parse_smiles("CC").unwrap(), &v);
        assert_eq!(counts, vec![1]);
        assert_eq!(motif_occurrences(&parse_smiles("O").unwrap(), &v), vec![0]);
    }
}
