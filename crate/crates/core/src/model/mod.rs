//! The full predictor: molecule GNN, motif graph GIN and motif-spectrum
//! prior feeding an MLP head, plus splitting, training and checkpoints.

mod config;
mod features;
mod net;
mod split;
mod train;

use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use log::info;
use rayon::prelude::*;

pub use config::{ConfigError, MoMSConfig, Variant};
pub use features::{
    atom_features, canonical_form, hetero_node_features, node_seed, HeteroInput, MoleculeInput, ATOM_FEATURES,
};
pub use net::{MoleculeGnn, MotifBranch, NetLayout, SampleInput, HEAD_BIAS_INIT};
pub use split::{scaffold_split, DatasetSplit, SplitError};
pub use train::{
    batch_gradients, fit, similarity, spectrum_targets, train, train_with_vocabulary, EpochRecord, Example,
    TrainOutcome,
};

use crate::chem::{canonical_smiles, parse_smiles_with_id, CorpusError, Molecule, ParseError};
use crate::hetero::{build_graph, HeteroError, HeteroMotifGraph};
use crate::motif::{mine_vocabulary, motif_occurrences, MiningError, MotifVocabulary, VocabError};
use crate::motif_spectra::{motif_spectrum_matrix, MatrixIoError, MotifSpectrumMatrix};
use crate::neural::{load_checkpoint, save_checkpoint, CheckpointError, NeuralError, ParamStore, Tape, Tensor};
use crate::spectra::{Spectrum, SpectrumError};

pub const VOCAB_FILE: &str = "vocab.tsv";
pub const MOTIF_SPECTRA_FILE: &str = "motif_spectra.bin";
pub const CORPUS_FILE: &str = "corpus.tsv";

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("no reference spectrum for molecule {0:?}")]
    DataMismatch(String),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Mining(#[from] MiningError),
    #[error(transparent)]
    Hetero(#[from] HeteroError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    MotifSpectra(#[from] MatrixIoError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A trained (or freshly initialized) predictor with everything needed to
/// featurize new molecules.
#[derive(Debug, Clone)]
pub struct MoMSModel {
    config: MoMSConfig,
    vocab: MotifVocabulary,
    motif_spectra: MotifSpectrumMatrix,
    graph_molecules: Vec<Molecule>,
    graph: HeteroMotifGraph,
    layout: NetLayout,
    params: ParamStore,
}

impl MoMSModel {
    /// Mines the vocabulary and builds the motif graph over
    /// `graph_molecules`, then initializes parameters from the config seed.
    pub fn prepare(config: MoMSConfig, graph_molecules: &[Molecule]) -> Result<MoMSModel, ModelError> {
        config.validate()?;
        let mols: Vec<Molecule> = graph_molecules.iter().map(canonical_form).collect();
        let vocab = mine_vocabulary(&mols, config.vocab_size)?;
        Self::assemble(config, vocab, mols)
    }

    /// Like [`MoMSModel::prepare`] with a vocabulary mined elsewhere.
    pub fn with_vocabulary(
        config: MoMSConfig,
        vocab: MotifVocabulary,
        graph_molecules: &[Molecule],
    ) -> Result<MoMSModel, ModelError> {
        config.validate()?;
        Self::assemble(config, vocab, graph_molecules.iter().map(canonical_form).collect())
    }

    fn assemble(config: MoMSConfig, vocab: MotifVocabulary, mols: Vec<Molecule>) -> Result<MoMSModel, ModelError> {
        let motif_spectra = motif_spectrum_matrix(&vocab, config.m_max);
        let graph = build_graph(&mols, &vocab)?;
        let (layout, params) = NetLayout::new(&config, graph.feature_dim());
        info!(
            "model: {} graph molecules, {} motifs, {} parameters",
            mols.len(),
            vocab.len(),
            params.num_scalars()
        );
        Ok(MoMSModel {
            config,
            vocab,
            motif_spectra,
            graph_molecules: mols,
            graph,
            layout,
            params,
        })
    }

    pub fn config(&self) -> &MoMSConfig {
        &self.config
    }

    pub fn vocab(&self) -> &MotifVocabulary {
        &self.vocab
    }

    pub fn motif_spectra(&self) -> &MotifSpectrumMatrix {
        &self.motif_spectra
    }

    pub fn graph(&self) -> &HeteroMotifGraph {
        &self.graph
    }

    pub fn layout(&self) -> &NetLayout {
        &self.layout
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn set_params(&mut self, params: ParamStore) {
        assert_eq!(params.names(), self.params.names(), "parameter layout differs");
        self.params = params;
    }

    /// Featurizes a molecule. Graph molecules use their own node; anything
    /// else is attached as a query node.
    pub fn sample_input(&self, m: &Molecule) -> Result<SampleInput, ModelError> {
        let m = canonical_form(m);
        let molecule = MoleculeInput::new(&m);
        if !self.config.variant.uses_motifs() {
            return Ok(SampleInput {
                molecule,
                hetero: None,
                prior: None,
            });
        }
        let sizes = &self.config.sampler_sizes;
        let own = self
            .graph
            .molecule_node(&m.id)
            .filter(|&n| self.graph_molecules[n] == m);
        let hetero = match own {
            Some(node) => HeteroInput::new(&self.graph, node, sizes, self.config.seed)?,
            None => {
                let view = self.graph.attach_query(&m, &self.vocab);
                HeteroInput::new(&view, view.query_node(), sizes, self.config.seed)?
            }
        };
        let prior = self.config.motif_prior.then(|| {
            let counts: Vec<f64> = motif_occurrences(&m, &self.vocab).iter().map(|&c| c as f64).collect();
            Tensor::row_vector(self.motif_spectra.weighted_prior(&counts))
        });
        Ok(SampleInput {
            molecule,
            hetero: Some(hetero),
            prior,
        })
    }

    pub fn forward_input(&self, input: &SampleInput) -> Result<Spectrum, ModelError> {
        let mut tape = Tape::new(&self.params);
        let out = self.layout.forward(&mut tape, input)?;
        Ok(Spectrum::from_bins(tape.value(out).data().to_vec()))
    }

    pub fn predict(&self, m: &Molecule) -> Result<Spectrum, ModelError> {
        self.forward_input(&self.sample_input(m)?)
    }

    /// Order-preserving parallel prediction.
    pub fn predict_batch(&self, molecules: &[Molecule]) -> Vec<Result<Spectrum, ModelError>> {
        let start = Instant::now();
        let out: Vec<_> = molecules.par_iter().map(|m| self.predict(m)).collect();
        log_throughput(molecules.len(), start);
        out
    }

    /// Parses and predicts `(id, SMILES)` pairs; a bad SMILES only fails
    /// its own entry.
    pub fn predict_smiles_batch(&self, items: &[(String, String)]) -> Vec<Result<Spectrum, ModelError>> {
        let start = Instant::now();
        let out: Vec<_> = items
            .par_iter()
            .map(|(id, smi)| self.predict(&parse_smiles_with_id(smi, id)?))
            .collect();
        log_throughput(items.len(), start);
        out
    }

    /// Writes the parameter checkpoint, vocabulary, motif spectra and graph
    /// corpus into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), ModelError> {
        let meta = serde_json::json!({
            "model": self.config,
            "hetero_dim": self.graph.feature_dim(),
        });
        save_checkpoint(dir, &self.params, meta)?;
        fs::write(dir.join(VOCAB_FILE), self.vocab.to_text())?;
        let mut blob = Vec::new();
        self.motif_spectra.write_to(&mut blob)?;
        fs::write(dir.join(MOTIF_SPECTRA_FILE), blob)?;
        let mut corpus = String::new();
        for m in &self.graph_molecules {
            corpus.push_str(&format!("{}\t{}\n", m.id, canonical_smiles(m)));
        }
        fs::write(dir.join(CORPUS_FILE), corpus)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<MoMSModel, ModelError> {
        let (params, meta) = load_checkpoint(dir)?;
        let config: MoMSConfig = serde_json::from_value(meta["model"].clone())
            .map_err(|e| ConfigError(format!("checkpoint config: {e}")))?;
        config.validate()?;
        let vocab = MotifVocabulary::read(BufReader::new(fs::File::open(dir.join(VOCAB_FILE))?))?;
        let corpus = crate::chem::read_corpus(BufReader::new(fs::File::open(dir.join(CORPUS_FILE))?))?;
        let mols: Vec<Molecule> = corpus.iter().map(canonical_form).collect();
        let mut model = Self::assemble(config, vocab, mols)?;
        let stored = MotifSpectrumMatrix::read_from(fs::File::open(dir.join(MOTIF_SPECTRA_FILE))?)?;
        if stored != model.motif_spectra {
            return Err(CheckpointError::Format("motif spectra do not match the vocabulary".into()).into());
        }
        let shapes = |p: &ParamStore| -> Vec<(String, Vec<usize>)> {
            p.names()
                .iter()
                .cloned()
                .zip(p.tensors().iter().map(|t| t.shape().to_vec()))
                .collect()
        };
        if shapes(&params) != shapes(&model.params) {
            return Err(CheckpointError::Format("parameter layout does not match the config".into()).into());
        }
        model.params = params;
        Ok(model)
    }
}

fn log_throughput(n: usize, start: Instant) {
    if n == 0 {
        return;
    }
    let secs = start.elapsed().as_secs_f64();
    info!(
        "predicted {n} spectra in {secs:.3} s ({:.3} s per 1000 molecules)",
        secs * 1000.0 / n as f64
    );
}

/// Shared-pointer target for the loss.
pub(crate) fn target_of(s: &Spectrum) -> Arc<Vec<f64>> {
    Arc::new(s.bins().to_vec())
}
