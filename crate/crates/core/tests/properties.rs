mod common;

use std::collections::HashSet;

use common::*;
use moms_core::chem::{murcko_scaffold, Element};
use moms_core::eval::{rank_candidates, score, Entry, RankingTask};
use moms_core::model::scaffold_split;
use moms_core::motif_spectra::isotope_pattern;
use moms_core::spectra::{bin_spectrum_with, PeakList, Spectrum};
use moms_core::synthetic::fixture_corpus;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spectrum(bins: &[f64]) -> Spectrum {
    Spectrum::from_bins(bins.to_vec())
}

proptest! {
    #[test]
    fn binning_conserves_intensity(peaks in prop::collection::vec((0.5f64..999.49, 0.0f64..1e4), 1..200)) {
        let list = PeakList::from_pairs(&peaks).unwrap();
        let binned = bin_spectrum_with(&list, 1000).unwrap();
        let total: f64 = peaks.iter().map(|p| p.1).sum();
        prop_assert!((binned.total() - total).abs() <= 1e-9 * total.max(1e-300));
    }

    #[test]
    fn similarity_is_bounded(
        a in prop::collection::vec(0.0f64..10.0, 50),
        b in prop::collection::vec(0.0f64..10.0, 50),
    ) {
        let s = score(&spectrum(&a), &spectrum(&b)).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        if a.iter().any(|&x| x > 0.0) {
            prop_assert!((score(&spectrum(&a), &spectrum(&a)).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn isotope_pattern_matches_multinomial(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_molecule(&mut rng, "iso", 14);
        let got = isotope_pattern(&m, 3);
        let expected = reference_isotope_pattern(&m, 3);
        prop_assert_eq!(got.len(), expected.len());
        for (s, p) in got {
            prop_assert!((p - expected[&s]).abs() <= 1e-12 * expected[&s].max(1.0));
        }
    }

    #[test]
    fn isotope_pattern_sums_to_inverse_monoisotopic_probability(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_molecule(&mut rng, "iso", 8);
        let counts = m.element_counts();
        let p0: f64 = Element::ALL
            .iter()
            .zip(counts)
            .map(|(e, c)| e.most_abundant().abundance.powi(c as i32))
            .product();
        let max_shift = 4 * counts.iter().sum::<u32>() as usize;
        let total: f64 = isotope_pattern(&m, max_shift).iter().map(|p| p.1).sum();
        prop_assert!((total * p0 - 1.0).abs() < 1e-9, "{}", total * p0);
    }

    #[test]
    fn rank_improves_as_prediction_nears_truth(
        seed in any::<u64>(),
        t1 in 0.0f64..1.0,
        dt in 0.0f64..1.0,
    ) {
        let t2 = t1 + (1.0 - t1) * dt;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bins = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..40).map(|_| if rng.gen_bool(0.3) { rng.gen_range(0.0..1.0) } else { 0.0 }).collect()
        };
        let mut truth = bins(&mut rng);
        truth[0] += 0.5;
        let start = bins(&mut rng);
        let others: Vec<Vec<f64>> = (0..30).map(|_| bins(&mut rng)).collect();
        let rank_at = |t: f64| {
            let pred: Vec<f64> = start.iter().zip(&truth).map(|(a, b)| (1.0 - t) * a + t * b).collect();
            let mut references = vec![Entry { id: "q".into(), spectrum: spectrum(&pred), precursor_mz: None }];
            references.extend(others.iter().enumerate().map(|(i, o)| Entry {
                id: format!("o{i}"),
                spectrum: spectrum(o),
                precursor_mz: None,
            }));
            let task = RankingTask {
                queries: vec![Entry { id: "q".into(), spectrum: spectrum(&truth), precursor_mz: None }],
                references,
                precursor_window: None,
            };
            rank_candidates(&task).unwrap()[0].rank
        };
        prop_assert!(rank_at(t2) <= rank_at(t1));
    }

    #[test]
    fn scaffold_split_partitions(
        keep in prop::collection::vec(any::<bool>(), 64),
        seed in any::<u64>(),
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
    ) {
        let corpus: Vec<_> = fixture_corpus().into_iter().zip(&keep).filter(|(_, k)| **k).map(|(m, _)| m).collect();
        prop_assume!(!corpus.is_empty());
        let (lo, hi) = (a.min(b), a.max(b));
        let split = scaffold_split(&corpus, [lo, hi - lo, 1.0 - hi], seed).unwrap();
        let parts = [&split.train, &split.valid, &split.test];
        let mut seen = HashSet::new();
        for p in parts {
            for id in p {
                prop_assert!(seen.insert(id.clone()), "{} assigned twice", id);
            }
        }
        let all: HashSet<String> = corpus.iter().map(|m| m.id.clone()).collect();
        prop_assert_eq!(&seen, &all);
        let scaffold_of = |id: &str| murcko_scaffold(corpus.iter().find(|m| m.id == id).unwrap());
        let scaffolds: Vec<HashSet<String>> =
            parts.iter().map(|p| p.iter().map(|id| scaffold_of(id)).collect()).collect();
        for i in 0..3 {
            for j in i + 1..3 {
                prop_assert!(scaffolds[i].is_disjoint(&scaffolds[j]));
            }
        }
    }
}
