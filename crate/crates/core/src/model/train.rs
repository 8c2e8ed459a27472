use std::collections::{HashMap, HashSet};
use std::sync::Arc;
use std::time::Instant;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{target_of, DatasetSplit, MoMSConfig, MoMSModel, ModelError, SampleInput};
use crate::chem::Molecule;
use crate::motif::MotifVocabulary;
use crate::neural::{adam_step, AdamConfig, AdamState, NeuralError, ParamStore, Tape, Tensor};
use crate::spectra::{bin_spectrum_with, cosine_similarity, normalize, NormMode, PeakList, Spectrum};

/// Samples per gradient work unit. Fixed so the reduction order does not
/// depend on the thread count.
const GRAD_CHUNK: usize = 4;
const SHUFFLE_SALT: u64 = 0x5EED_5EED;

/// A featurized molecule with its L2-normalized reference spectrum.
#[derive(Debug, Clone)]
pub struct Example {
    pub id: String,
    pub input: SampleInput,
    pub target: Arc<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_similarity: Option<f64>,
    pub wall_ms: u64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation similarity.
    pub model: MoMSModel,
    pub best_epoch: usize,
    pub last_params: ParamStore,
    pub log: Vec<EpochRecord>,
}

/// Cosine similarity with an all-zero prediction scored as 0.
pub fn similarity(pred: &Spectrum, truth: &Spectrum) -> f64 {
    cosine_similarity(pred, truth).unwrap_or(0.0)
}

/// Binned, L2-normalized spectra keyed by compound id (or name).
pub fn spectrum_targets(spectra: &[PeakList], m_max: usize) -> Result<HashMap<String, Spectrum>, ModelError> {
    let mut out = HashMap::new();
    for p in spectra {
        let Some(key) = p.key() else { continue };
        let s = normalize(&bin_spectrum_with(p, m_max)?, NormMode::L2)?;
        out.insert(key.to_string(), s);
    }
    Ok(out)
}

/// Mean loss over `batch` and the matching gradient, summed in a fixed
/// order.
pub fn batch_gradients(
    model: &MoMSModel,
    examples: &[Example],
    batch: &[usize],
) -> Result<(Vec<Tensor>, f64), NeuralError> {
    let scale = 1.0 / batch.len() as f64;
    let partials: Vec<Result<(Vec<Tensor>, f64), NeuralError>> = batch
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut acc = model.params().zeros_like();
            let mut loss = 0.0;
            for &i in chunk {
                let ex = &examples[i];
                let mut tape = Tape::new(model.params());
                let pred = model.layout().forward(&mut tape, &ex.input)?;
                let l = tape.cosine_distance(pred, ex.target.clone())?;
                loss += tape.value(l).data()[0];
                tape.backward_into(l, scale, &mut acc)?;
            }
            Ok((acc, loss))
        })
        .collect();
    let mut total: Option<Vec<Tensor>> = None;
    let mut loss = 0.0;
    for part in partials {
        let (g, l) = part?;
        loss += l;
        match &mut total {
            None => total = Some(g),
            Some(t) => t.iter_mut().zip(&g).for_each(|(a, b)| a.add_scaled(b, 1.0)),
        }
    }
    Ok((total.unwrap_or_else(|| model.params().zeros_like()), loss * scale))
}

fn mean_similarity(model: &MoMSModel, examples: &[Example]) -> Result<f64, ModelError> {
    let sims: Vec<Result<f64, ModelError>> = examples
        .par_iter()
        .map(|ex| {
            let pred = model.forward_input(&ex.input)?;
            Ok(similarity(&pred, &Spectrum::from_bins(ex.target.to_vec())))
        })
        .collect();
    let mut sum = 0.0;
    for s in sims {
        sum += s?;
    }
    Ok(sum / examples.len() as f64)
}

/// Runs Adam on the mean cosine distance, keeping the parameters of the best
/// validation epoch and stopping after `patience` epochs without
/// improvement. Without validation examples the training loss decides.
pub fn fit(mut model: MoMSModel, train: &[Example], valid: &[Example]) -> Result<TrainOutcome, ModelError> {
    let config = model.config().clone();
    if train.is_empty() {
        return Err(ModelError::DataMismatch("training set is empty".into()));
    }
    let adam = AdamConfig {
        lr: config.lr,
        ..AdamConfig::default()
    };
    let mut state = AdamState::new(model.params());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ SHUFFLE_SALT);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = Vec::new();
    let mut best = (f64::NEG_INFINITY, model.params().clone(), 0);
    let mut stale = 0;
    for epoch in 1..=config.epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let (grads, loss) = batch_gradients(&model, train, batch)?;
            adam_step(model.params_mut(), &grads, &mut state, &adam)?;
            loss_sum += loss * batch.len() as f64;
        }
        let train_loss = loss_sum / train.len() as f64;
        let valid_similarity = if valid.is_empty() {
            None
        } else {
            Some(mean_similarity(&model, valid)?)
        };
        let record = EpochRecord {
            epoch,
            train_loss,
            valid_similarity,
            wall_ms: start.elapsed().as_millis() as u64,
        };
        debug!("{}", serde_json::to_string(&record).unwrap());
        log.push(record);
        let score = valid_similarity.unwrap_or(1.0 - train_loss);
        if score > best.0 {
            best = (score, model.params().clone(), epoch);
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                info!("early stop at epoch {epoch}, best epoch {}", best.2);
                break;
            }
        }
    }
    let last_params = model.params().clone();
    model.set_params(best.1);
    Ok(TrainOutcome {
        model,
        best_epoch: best.2,
        last_params,
        log,
    })
}

/// Builds the motif graph from the train and validation molecules, then
/// fits. Test molecules are never seen.
pub fn train(
    corpus: &[Molecule],
    spectra: &[PeakList],
    split: &DatasetSplit,
    config: &MoMSConfig,
) -> Result<TrainOutcome, ModelError> {
    train_with_vocabulary(corpus, spectra, split, config, None)
}

/// [`train`] with an optional pre-mined vocabulary in place of mining one
/// from the graph molecules.
pub fn train_with_vocabulary(
    corpus: &[Molecule],
    spectra: &[PeakList],
    split: &DatasetSplit,
    config: &MoMSConfig,
    vocab: Option<MotifVocabulary>,
) -> Result<TrainOutcome, ModelError> {
    config.validate()?;
    let targets = spectrum_targets(spectra, config.m_max)?;
    let train_ids: HashSet<&str> = split.train.iter().map(String::as_str).collect();
    let valid_ids: HashSet<&str> = split.valid.iter().map(String::as_str).collect();
    let graph_mols: Vec<Molecule> = corpus
        .iter()
        .filter(|m| train_ids.contains(m.id.as_str()) || valid_ids.contains(m.id.as_str()))
        .cloned()
        .collect();
    for m in &graph_mols {
        if !targets.contains_key(&m.id) {
            return Err(ModelError::DataMismatch(m.id.clone()));
        }
    }
    let model = match vocab {
        Some(v) => MoMSModel::with_vocabulary(config.clone(), v, &graph_mols)?,
        None => MoMSModel::prepare(config.clone(), &graph_mols)?,
    };
    let examples = |ids: &HashSet<&str>| -> Result<Vec<Example>, ModelError> {
        graph_mols
            .par_iter()
            .filter(|m| ids.contains(m.id.as_str()))
            .map(|m| {
                Ok(Example {
                    id: m.id.clone(),
                    input: model.sample_input(m)?,
                    target: target_of(&targets[&m.id]),
                })
            })
            .collect()
    };
    let train_set = examples(&train_ids)?;
    let valid_set = examples(&valid_ids)?;
    info!(
        "training {} on {} molecules ({} validation)",
        config.variant,
        train_set.len(),
        valid_set.len()
    );
    fit(model, &train_set, &valid_set)
}
