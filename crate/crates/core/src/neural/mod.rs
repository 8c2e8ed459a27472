//! Dense tensors with reverse-mode differentiation, graph layers and Adam.

mod adam;
mod checkpoint;
mod layers;
mod params;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{
    load_checkpoint, manifest_for, payload, save_checkpoint, CheckpointError, Manifest, TensorEntry, FORMAT_VERSION,
    MANIFEST_FILE, PAYLOAD_FILE,
};
pub use layers::{gcn_forward, gin_forward, mlp_forward, GcnLayerParams, GinLayerParams, LinearParams, MlpParams};
pub use params::{glorot, ParamId, ParamStore};
pub use tape::{Tape, Var, COSINE_GUARD};
pub use tensor::{adjacency, gcn_normalized_adjacency, matmul, mean_adjacency, NeuralError, SparseMatrix, Tensor};
