use moms_core::model::{train, DatasetSplit, MoMSConfig, Variant};
use moms_core::synthetic::{fixture_config, fixture_corpus, fixture_spectra};

fn all_train() -> DatasetSplit {
    DatasetSplit {
        train: fixture_corpus().iter().map(|m| m.id.clone()).collect(),
        ..DatasetSplit::default()
    }
}

#[test]
fn loss_falls_over_first_epochs() {
    for variant in [Variant::GcnOnly, Variant::MomsGcn] {
        let config = MoMSConfig {
            variant,
            epochs: 10,
            patience: 10,
            ..fixture_config()
        };
        let out = train(&fixture_corpus(), &fixture_spectra(), &all_train(), &config).unwrap();
        assert_eq!(out.log.len(), 10);
        let losses: Vec<f64> = out.log.iter().map(|r| r.train_loss).collect();
        assert!(losses.windows(2).all(|w| w[1] < w[0]), "{variant}: {losses:?}");
        assert!(losses[9] < 0.8 * losses[0], "{variant}: {losses:?}");
    }
}

#[test]
fn missing_spectrum_is_reported() {
    let spectra: Vec<_> = fixture_spectra().into_iter().skip(1).collect();
    let config = MoMSConfig {
        epochs: 1,
        ..fixture_config()
    };
    let err = train(&fixture_corpus(), &spectra, &all_train(), &config).unwrap_err();
    assert!(err.to_string().contains("f01"), "{err}");
}
