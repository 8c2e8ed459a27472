use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::graph::{GraphAccess, HeteroError};

pub const DEFAULT_SAMPLER_SIZES: [usize; 3] = [10, 5, 5];

/// Breadth-first sample around molecule seeds. Local node order is seeds,
/// then hop 1, hop 2, hop 3.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSubgraph {
    pub seeds: Vec<usize>,
    pub hops: Vec<Vec<usize>>,
    pub sizes: Vec<usize>,
    /// Global ids in local order.
    pub nodes: Vec<usize>,
    /// Hop-h node to the hop-(h-1) node that sampled it.
    pub parent: HashMap<usize, usize>,
    /// Induced edges in local ids, each undirected edge once with i < j.
    pub edges: Vec<(usize, usize, f64)>,
}

impl SampledSubgraph {
    pub fn local_index(&self, global: usize) -> Option<usize> {
        self.nodes.iter().position(|&n| n == global)
    }
}

/// Per seed, hop `h` draws up to `sizes[h]` nodes without replacement from
/// the not yet visited neighbors of that seed's hop `h - 1` nodes.
pub fn sample_khop(
    g: &impl GraphAccess,
    seeds: &[usize],
    sizes: &[usize],
    rng_seed: u64,
) -> Result<SampledSubgraph, HeteroError> {
    if sizes.contains(&0) {
        return Err(HeteroError::InvalidSizes);
    }
    for &s in seeds {
        if s >= g.num_nodes() || !g.is_molecule(s) {
            return Err(HeteroError::InvalidSeed(s));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut local: HashMap<usize, usize> = HashMap::new();
    let mut nodes = Vec::new();
    for &s in seeds {
        if let std::collections::hash_map::Entry::Vacant(e) = local.entry(s) {
            e.insert(nodes.len());
            nodes.push(s);
        }
    }
    let mut parent = HashMap::new();
    let mut hops = vec![Vec::new(); sizes.len()];
    for &seed in seeds {
        let mut seen: BTreeSet<usize> = BTreeSet::from([seed]);
        let mut frontier = vec![seed];
        for (h, &budget) in sizes.iter().enumerate() {
            // candidate -> first frontier node that reaches it
            let mut candidates: BTreeMap<usize, usize> = BTreeMap::new();
            for &u in &frontier {
                for &(v, _) in g.neighbors(u).iter() {
                    if !seen.contains(&v) {
                        candidates.entry(v).or_insert(u);
                    }
                }
            }
            let pool: Vec<usize> = candidates.keys().copied().collect();
            let mut chosen: Vec<usize> = pool.choose_multiple(&mut rng, budget).copied().collect();
            chosen.sort_unstable();
            for &v in &chosen {
                seen.insert(v);
                if let std::collections::hash_map::Entry::Vacant(e) = local.entry(v) {
                    e.insert(nodes.len());
                    nodes.push(v);
                    parent.insert(v, candidates[&v]);
                    hops[h].push(v);
                }
            }
            frontier = chosen;
        }
    }
    let mut edges = Vec::new();
    for (li, &u) in nodes.iter().enumerate() {
        for &(v, w) in g.neighbors(u).iter() {
            if let Some(&lj) = local.get(&v) {
                if li < lj {
                    edges.push((li, lj, w));
                }
            }
        }
    }
    Ok(SampledSubgraph {
        seeds: seeds.to_vec(),
        hops,
        sizes: sizes.to_vec(),
        nodes,
        parent,
        edges,
    })
}
