//! Heterogeneous molecule/motif graph and its breadth-first sampler.

mod graph;
mod sampler;

pub use graph::{
    build_graph, pmi, tf_idf, CorpusStats, DomainError, GraphAccess, GraphManifest, GraphView, HeteroError,
    HeteroMotifGraph,
};
pub use sampler::{sample_khop, SampledSubgraph, DEFAULT_SAMPLER_SIZES};
