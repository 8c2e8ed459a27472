use std::sync::Arc;

use crate::chem::{canonical_ranks, path_fingerprint, Element, Molecule};
use crate::hetero::{sample_khop, GraphAccess, HeteroError};
use crate::neural::{adjacency, gcn_normalized_adjacency, mean_adjacency, SparseMatrix, Tensor};

/// Element (11), degree 0..=6 (7), formal charge, aromatic, ring, total H
/// 0..=4 (5).
pub const ATOM_FEATURES: usize = 26;

/// Renumbers atoms by canonical rank and sorts the bond list, so every
/// SMILES spelling of a molecule gives the same graph.
pub fn canonical_form(m: &Molecule) -> Molecule {
    let ranks = canonical_ranks(m);
    let p = m.permuted(&ranks);
    let mut bonds: Vec<(usize, usize, _)> = p
        .bonds()
        .iter()
        .map(|b| (b.a.min(b.b), b.a.max(b.b), b.order))
        .collect();
    bonds.sort_by_key(|b| (b.0, b.1));
    Molecule::from_parts(p.id.clone(), p.atoms().to_vec(), bonds).expect("valid graph")
}

pub fn atom_features(m: &Molecule) -> Tensor {
    let n = m.num_atoms();
    let mut t = Tensor::zeros(n, ATOM_FEATURES);
    let data = t.data_mut();
    for i in 0..n {
        let a = m.atom(i);
        let row = &mut data[i * ATOM_FEATURES..(i + 1) * ATOM_FEATURES];
        row[a.element.index()] = 1.0;
        row[Element::ALL.len() + m.degree(i).min(6)] = 1.0;
        row[18] = a.formal_charge as f64;
        row[19] = a.aromatic as u8 as f64;
        row[20] = a.in_ring as u8 as f64;
        row[21 + (a.total_h() as usize).min(4)] = 1.0;
    }
    t
}

fn bond_edges(m: &Molecule) -> Vec<(usize, usize, f64)> {
    m.bonds().iter().map(|b| (b.a, b.b, 1.0)).collect()
}

/// Everything the molecule branch needs for one molecule.
#[derive(Debug, Clone)]
pub struct MoleculeInput {
    pub atom_features: Tensor,
    pub a_hat: Arc<SparseMatrix>,
    pub adj: Arc<SparseMatrix>,
    pub fingerprint_bits: Vec<usize>,
}

impl MoleculeInput {
    pub fn new(m: &Molecule) -> Self {
        let edges = bond_edges(m);
        MoleculeInput {
            atom_features: atom_features(m),
            a_hat: Arc::new(gcn_normalized_adjacency(m.num_atoms(), &edges)),
            adj: Arc::new(adjacency(m.num_atoms(), &edges)),
            fingerprint_bits: path_fingerprint(m).on_bits(),
        }
    }
}

/// Sampled neighborhood of one molecule node; row 0 is the molecule.
#[derive(Debug, Clone)]
pub struct HeteroInput {
    pub features: Tensor,
    pub adj: Arc<SparseMatrix>,
}

/// Occurrence counts as they are, molecular weight in kDa.
pub fn hetero_node_features(raw: &[f64]) -> Vec<f64> {
    let mut f = raw.to_vec();
    if let Some(w) = f.last_mut() {
        *w /= 1000.0;
    }
    f
}

/// Per-node sampler seed so a node always sees the same neighborhood.
pub fn node_seed(base: u64, node: usize) -> u64 {
    let mut z = base ^ (node as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl HeteroInput {
    pub fn new(g: &impl GraphAccess, node: usize, sizes: &[usize], seed: u64) -> Result<Self, HeteroError> {
        let s = sample_khop(g, &[node], sizes, node_seed(seed, node))?;
        let dim = g.features(node).len();
        let mut data = Vec::with_capacity(s.nodes.len() * dim);
        for &v in &s.nodes {
            data.extend(hetero_node_features(g.features(v)));
        }
        Ok(HeteroInput {
            features: Tensor::from_vec(s.nodes.len(), dim, data).expect("uniform feature width"),
            adj: Arc::new(mean_adjacency(s.nodes.len(), &s.edges)),
        })
    }
}
