use std::sync::Arc;

use rand::Rng;

use super::params::{glorot, ParamId, ParamStore};
use super::tape::{Tape, Var};
use super::tensor::{adjacency, gcn_normalized_adjacency, NeuralError, SparseMatrix, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearParams {
    pub w: ParamId,
    pub b: ParamId,
}

impl LinearParams {
    pub fn new(store: &mut ParamStore, name: &str, d_in: usize, d_out: usize, rng: &mut impl Rng) -> Self {
        LinearParams {
            w: store.add(format!("{name}.w"), glorot(d_in, d_out, rng)),
            b: store.add(format!("{name}.b"), Tensor::zeros(1, d_out)),
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var, NeuralError> {
        let w = tape.param(self.w);
        let b = tape.param(self.b);
        let xw = tape.matmul(x, w)?;
        tape.add_row(xw, b)
    }
}

/// Affine layers with ReLU between them; the last activation is optional.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<LinearParams>,
}

impl MlpParams {
    /// `dims` lists the input width followed by each layer's output width.
    pub fn new(store: &mut ParamStore, name: &str, dims: &[usize], rng: &mut impl Rng) -> Self {
        MlpParams {
            layers: dims
                .windows(2)
                .enumerate()
                .map(|(i, d)| LinearParams::new(store, &format!("{name}.{i}"), d[0], d[1], rng))
                .collect(),
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var, final_relu: bool) -> Result<Var, NeuralError> {
        let mut h = x;
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(tape, h)?;
            if final_relu || i + 1 < self.layers.len() {
                h = tape.relu(h);
            }
        }
        Ok(h)
    }
}

/// `ReLU(Â H W + b)` with `Â` the symmetric-normalized adjacency with
/// self-loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcnLayerParams {
    pub lin: LinearParams,
}

impl GcnLayerParams {
    pub fn new(store: &mut ParamStore, name: &str, d_in: usize, d_out: usize, rng: &mut impl Rng) -> Self {
        GcnLayerParams {
            lin: LinearParams::new(store, name, d_in, d_out, rng),
        }
    }

    pub fn forward(&self, tape: &mut Tape, h: Var, a_hat: &Arc<SparseMatrix>) -> Result<Var, NeuralError> {
        let w = tape.param(self.lin.w);
        let b = tape.param(self.lin.b);
        let hw = tape.matmul(h, w)?;
        let agg = tape.spmm(a_hat.clone(), hw)?;
        let z = tape.add_row(agg, b)?;
        Ok(tape.relu(z))
    }
}

/// `MLP((1 + eps) H + A H)` with a learnable scalar `eps` and a two-layer
/// MLP with ReLU after both layers.
#[derive(Debug, Clone, PartialEq)]
pub struct GinLayerParams {
    pub eps: ParamId,
    pub mlp: MlpParams,
}

impl GinLayerParams {
    pub fn new(store: &mut ParamStore, name: &str, d_in: usize, d_out: usize, rng: &mut impl Rng) -> Self {
        GinLayerParams {
            eps: store.add(format!("{name}.eps"), Tensor::scalar(0.0)),
            mlp: MlpParams::new(store, &format!("{name}.mlp"), &[d_in, d_out, d_out], rng),
        }
    }

    pub fn forward(&self, tape: &mut Tape, h: Var, adj: &Arc<SparseMatrix>) -> Result<Var, NeuralError> {
        let eps = tape.param(self.eps);
        let own = tape.one_plus_scale(h, eps)?;
        let nbr = tape.spmm(adj.clone(), h)?;
        let sum = tape.add(own, nbr)?;
        self.mlp.forward(tape, sum, true)
    }
}

fn check_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<(), NeuralError> {
    match edges.iter().find(|e| e.0 >= n || e.1 >= n) {
        Some(&(i, j, _)) => Err(NeuralError::ShapeMismatch {
            op: "edges",
            left: vec![n],
            right: vec![i, j],
        }),
        None => Ok(()),
    }
}

/// Evaluates one GCN layer outside of training.
pub fn gcn_forward(
    features: &Tensor,
    edges: &[(usize, usize, f64)],
    store: &ParamStore,
    params: &GcnLayerParams,
) -> Result<Tensor, NeuralError> {
    check_edges(features.rows(), edges)?;
    let a = Arc::new(gcn_normalized_adjacency(features.rows(), edges));
    let mut tape = Tape::new(store);
    let h = tape.constant(features.clone());
    let out = params.forward(&mut tape, h, &a)?;
    Ok(tape.value(out).clone())
}

pub fn gin_forward(
    features: &Tensor,
    edges: &[(usize, usize, f64)],
    store: &ParamStore,
    params: &GinLayerParams,
) -> Result<Tensor, NeuralError> {
    check_edges(features.rows(), edges)?;
    let a = Arc::new(adjacency(features.rows(), edges));
    let mut tape = Tape::new(store);
    let h = tape.constant(features.clone());
    let out = params.forward(&mut tape, h, &a)?;
    Ok(tape.value(out).clone())
}

pub fn mlp_forward(
    x: &Tensor,
    store: &ParamStore,
    params: &MlpParams,
    final_relu: bool,
) -> Result<Tensor, NeuralError> {
    let mut tape = Tape::new(store);
    let h = tape.constant(x.clone());
    let out = params.forward(&mut tape, h, final_relu)?;
    Ok(tape.value(out).clone())
}
