mod common;

use common::*;
use moms_core::motif::mine_vocabulary;
use moms_core::synthetic::fixture_corpus;

#[test]
fn miner_matches_reference_on_random_corpora() {
    assert_eq!(miner_check(11, 20), Ok(20));
}

#[test]
fn miner_matches_reference_on_fixture() {
    let corpus: Vec<_> = fixture_corpus().into_iter().take(50).collect();
    let vocab = mine_vocabulary(&corpus, 10).unwrap();
    let reference = reference_mine(&corpus, 10);
    let got: Vec<(String, usize)> = vocab.entries().iter().map(|m| (m.key.clone(), m.frequency)).collect();
    assert_eq!(got, reference.motifs);
    assert_eq!(vocab.steps().len(), reference.steps.len());
}
