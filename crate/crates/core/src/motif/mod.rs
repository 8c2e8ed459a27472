//! Motif vocabulary mining by iterative merging of the most frequent
//! adjacent fragment pair, and replay of the merge sequence on new molecules.

mod mining;
mod vocab;

pub use mining::{
    init_fragments, mine_vocabulary, motif_occurrences, replay_merges, validate_fragment, FragmentState, Fragmentation,
    MergeCandidate, MiningError, RoundOutcome, DEFAULT_VOCAB_SIZE, MAX_MOTIF_ATOMS,
};
pub use vocab::{MergeStep, Motif, MotifVocabulary, VocabError};
