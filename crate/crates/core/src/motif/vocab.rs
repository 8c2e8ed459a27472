use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::BufRead;

use crate::chem::{canonical_key, parse_smiles, Molecule};

/// A mined motif: canonical key, standalone SMILES, corpus pair count and
/// the valence-completed graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Motif {
    pub key: String,
    pub smiles: String,
    pub frequency: usize,
    pub molecule: Molecule,
}

/// One merge iteration. Rejected merges still reshape the fragmentation, so
/// replaying a vocabulary needs them too.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeStep {
    pub key: String,
    pub frequency: usize,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MotifVocabulary {
    k: usize,
    entries: Vec<Motif>,
    steps: Vec<MergeStep>,
    index: HashMap<String, usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum VocabError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

const STEP_PREFIX: &str = "#merge\t";
const SIZE_PREFIX: &str = "#k\t";

impl MotifVocabulary {
    pub fn new(k: usize) -> Self {
        MotifVocabulary {
            k,
            ..Default::default()
        }
    }

    /// Iteration budget the vocabulary was mined with.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Motif] {
        &self.entries
    }

    pub fn steps(&self) -> &[MergeStep] {
        &self.steps
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.index.contains_key(key)
    }

    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub(crate) fn push_motif(&mut self, motif: Motif) {
        self.index.insert(motif.key.clone(), self.entries.len());
        self.entries.push(motif);
    }

    pub(crate) fn push_step(&mut self, step: MergeStep) {
        self.steps.push(step);
    }

    /// Text form: `#k` header, accepted motifs as
    /// `rank<TAB>key<TAB>frequency<TAB>smiles`, and rejected merges as
    /// `#merge<TAB>key<TAB>frequency` comment lines at their position.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{SIZE_PREFIX}{}", self.k).unwrap();
        let mut rank = 0;
        for step in &self.steps {
            if step.accepted {
                let m = &self.entries[self.index[&step.key]];
                rank += 1;
                writeln!(out, "{rank}\t{}\t{}\t{}", m.key, m.frequency, m.smiles).unwrap();
            } else {
                writeln!(out, "{STEP_PREFIX}{}\t{}", step.key, step.frequency).unwrap();
            }
        }
        out
    }

    pub fn read(reader: impl BufRead) -> Result<MotifVocabulary, VocabError> {
        let mut vocab = MotifVocabulary::default();
        let mut k = None;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let err = |message: String| VocabError::Format { line: line_no, message };
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix(SIZE_PREFIX) {
                k = Some(rest.trim().parse().map_err(|_| err(format!("bad size {rest:?}")))?);
                continue;
            }
            if let Some(rest) = line.strip_prefix(STEP_PREFIX) {
                let (key, freq) = rest
                    .split_once('\t')
                    .ok_or_else(|| err("expected `#merge<TAB>key<TAB>frequency`".into()))?;
                let frequency = freq.parse().map_err(|_| err(format!("bad frequency {freq:?}")))?;
                vocab.push_step(MergeStep {
                    key: key.to_string(),
                    frequency,
                    accepted: false,
                });
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [rank, key, freq, smiles] = fields[..] else {
                return Err(err("expected `rank<TAB>key<TAB>frequency<TAB>smiles`".into()));
            };
            let rank: usize = rank.parse().map_err(|_| err(format!("bad rank {rank:?}")))?;
            if rank != vocab.len() + 1 {
                return Err(err(format!("rank {rank} out of sequence")));
            }
            if vocab.contains_key(key) {
                return Err(err(format!("duplicate motif {key:?}")));
            }
            let frequency = freq.parse().map_err(|_| err(format!("bad frequency {freq:?}")))?;
            let mut molecule = parse_smiles(smiles).map_err(|e| err(format!("motif SMILES: {e}")))?;
            let actual = canonical_key(&molecule).map_err(|e| err(e.to_string()))?;
            if actual != key {
                return Err(err(format!("SMILES {smiles:?} does not match key {key:?}")));
            }
            molecule.id = key.to_string();
            vocab.push_motif(Motif {
                key: key.to_string(),
                smiles: smiles.to_string(),
                frequency,
                molecule,
            });
            vocab.push_step(MergeStep {
                key: key.to_string(),
                frequency,
                accepted: true,
            });
        }
        vocab.k = k.unwrap_or(vocab.steps.len());
        Ok(vocab)
    }
}
