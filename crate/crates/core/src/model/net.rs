use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::MoMSConfig;
use super::features::{HeteroInput, MoleculeInput, ATOM_FEATURES};
use crate::chem::FINGERPRINT_BITS;
use crate::neural::{
    GcnLayerParams, GinLayerParams, LinearParams, MlpParams, NeuralError, ParamStore, Tape, Tensor, Var,
};

/// The output layer starts near a flat positive spectrum: small weights and
/// a positive bias, so no bin sits behind the final ReLU before training
/// has seen its targets. Bins that start dead never recover.
pub const HEAD_BIAS_INIT: f64 = 0.1;
pub const HEAD_WEIGHT_SCALE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub enum MoleculeGnn {
    Gcn(Vec<GcnLayerParams>),
    Gin(Vec<GinLayerParams>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotifBranch {
    pub embed: MlpParams,
    pub gin: Vec<GinLayerParams>,
    pub prior: Option<LinearParams>,
}

/// Parameter handles of one network; the tensors live in a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct NetLayout {
    pub molecule: MoleculeGnn,
    pub fingerprint: LinearParams,
    pub motif: Option<MotifBranch>,
    pub head: MlpParams,
}

/// One training or inference example.
#[derive(Debug, Clone)]
pub struct SampleInput {
    pub molecule: MoleculeInput,
    pub hetero: Option<HeteroInput>,
    /// Occurrence-weighted motif spectrum, 1 x m_max.
    pub prior: Option<Tensor>,
}

impl NetLayout {
    /// Registers all parameters in a fixed order. `hetero_dim` is the motif
    /// graph feature width (vocabulary size + 1).
    pub fn new(config: &MoMSConfig, hetero_dim: usize) -> (NetLayout, ParamStore) {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::default();
        let h = config.hidden;
        let dims = |i: usize| if i == 0 { ATOM_FEATURES } else { h };
        let molecule = if config.variant.molecule_gin() {
            MoleculeGnn::Gin(
                (0..config.gnn_layers)
                    .map(|i| GinLayerParams::new(&mut store, &format!("mol.gin{i}"), dims(i), h, &mut rng))
                    .collect(),
            )
        } else {
            MoleculeGnn::Gcn(
                (0..config.gnn_layers)
                    .map(|i| GcnLayerParams::new(&mut store, &format!("mol.gcn{i}"), dims(i), h, &mut rng))
                    .collect(),
            )
        };
        let fingerprint = LinearParams::new(&mut store, "fp", FINGERPRINT_BITS, h, &mut rng);
        let mut head_in = 2 * h;
        let motif = config.variant.uses_motifs().then(|| {
            let embed = MlpParams::new(&mut store, "motif.embed", &[hetero_dim, h, h], &mut rng);
            let gin = (0..config.hetero_layers)
                .map(|i| GinLayerParams::new(&mut store, &format!("motif.gin{i}"), h, h, &mut rng))
                .collect();
            head_in += h;
            let prior = config.motif_prior.then(|| {
                head_in += h;
                LinearParams::new(&mut store, "motif.prior", config.m_max, h, &mut rng)
            });
            MotifBranch { embed, gin, prior }
        });
        let mut head_dims = vec![head_in];
        head_dims.extend(std::iter::repeat_n(h, config.head_layers - 1));
        head_dims.push(config.m_max);
        let head = MlpParams::new(&mut store, "head", &head_dims, &mut rng);
        let out = head.layers.last().unwrap();
        store.get_mut(out.b).fill(HEAD_BIAS_INIT);
        store
            .get_mut(out.w)
            .data_mut()
            .iter_mut()
            .for_each(|x| *x *= HEAD_WEIGHT_SCALE);
        (
            NetLayout {
                molecule,
                fingerprint,
                motif,
                head,
            },
            store,
        )
    }

    /// Graph-level molecule embedding: mean-pooled GNN output, 1 x h.
    pub fn molecule_embedding(&self, tape: &mut Tape, input: &MoleculeInput) -> Result<Var, NeuralError> {
        let mut x = tape.constant(input.atom_features.clone());
        match &self.molecule {
            MoleculeGnn::Gcn(layers) => {
                for l in layers {
                    x = l.forward(tape, x, &input.a_hat)?;
                }
            }
            MoleculeGnn::Gin(layers) => {
                for l in layers {
                    x = l.forward(tape, x, &input.adj)?;
                }
            }
        }
        Ok(tape.mean_rows(x))
    }

    /// Predicted spectrum, 1 x m_max, nonnegative.
    pub fn forward(&self, tape: &mut Tape, input: &SampleInput) -> Result<Var, NeuralError> {
        let mut parts = vec![self.molecule_embedding(tape, &input.molecule)?];
        let fw = tape.param(self.fingerprint.w);
        let fb = tape.param(self.fingerprint.b);
        let fp = tape.gather_sum(fw, &input.molecule.fingerprint_bits);
        parts.push(tape.add_row(fp, fb)?);
        if let Some(branch) = &self.motif {
            let hetero = input.hetero.as_ref().expect("motif variants need a sampled subgraph");
            let x = tape.constant(hetero.features.clone());
            let mut h = branch.embed.forward(tape, x, true)?;
            for l in &branch.gin {
                h = l.forward(tape, h, &hetero.adj)?;
            }
            parts.push(tape.select_row(h, 0));
            if let Some(prior) = &branch.prior {
                let p = tape.constant(input.prior.clone().expect("prior enabled"));
                parts.push(prior.forward(tape, p)?);
            }
        }
        let z = tape.concat_cols(&parts)?;
        self.head.forward(tape, z, true)
    }
}
