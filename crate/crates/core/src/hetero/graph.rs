use std::borrow::Cow;
use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chem::Molecule;
use crate::motif::{replay_merges, MotifVocabulary};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HeteroError {
    #[error("motif vocabulary is empty")]
    EmptyVocabulary,
    #[error("seed node {0} is not a molecule node")]
    InvalidSeed(usize),
    #[error("sampler sizes must be positive")]
    InvalidSizes,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("PMI undefined for M={m}, N(i)={n_i}, N(j)={n_j}")]
pub struct DomainError {
    pub m: usize,
    pub n_i: usize,
    pub n_j: usize,
}

/// Pointwise mutual information with natural log. `n_ij = 0` gives
/// negative infinity; callers skip those pairs.
pub fn pmi(n_ij: usize, n_i: usize, n_j: usize, m: usize) -> Result<f64, DomainError> {
    if m == 0 || n_i == 0 || n_j == 0 {
        return Err(DomainError { m, n_i, n_j });
    }
    // p_ij / (p_i p_j) = n_ij M / (n_i n_j); integer products keep the
    // independence case at exactly ln(1) = 0.
    Ok(((n_ij * m) as f64 / (n_i * n_j) as f64).ln())
}

/// `c_ij * (ln((1 + M) / (1 + N(i))) + 1)`.
pub fn tf_idf(c_ij: usize, n_i: usize, m: usize) -> f64 {
    c_ij as f64 * (((1 + m) as f64 / (1 + n_i) as f64).ln() + 1.0)
}

/// Corpus statistics frozen at construction: molecule count and the number
/// of molecules containing each motif.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub molecules: usize,
    pub doc_freq: Vec<usize>,
}

/// Read access shared by the graph and query overlays.
pub trait GraphAccess: Sync {
    fn num_nodes(&self) -> usize;
    fn is_molecule(&self, node: usize) -> bool;
    /// Neighbors with edge weights, sorted by node id.
    fn neighbors(&self, node: usize) -> Cow<'_, [(usize, f64)]>;
    fn features(&self, node: usize) -> &[f64];
}

/// Molecule nodes `0..N` followed by motif nodes `N..N+|V|`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeteroMotifGraph {
    n_molecules: usize,
    n_motifs: usize,
    molecule_ids: Vec<String>,
    adjacency: Vec<Vec<(usize, f64)>>,
    features: Vec<Vec<f64>>,
    stats: CorpusStats,
}

/// Occurrence counts of every motif in `m` plus the atom sets of each
/// occurrence.
fn occurrences(m: &Molecule, vocab: &MotifVocabulary) -> (Vec<usize>, Vec<(usize, Vec<usize>)>) {
    let found = replay_merges(m, vocab);
    let mut counts = vec![0; vocab.len()];
    for (idx, _) in &found {
        counts[*idx] += 1;
    }
    (counts, found)
}

/// Motif pairs (i < j) with at least one occurrence of each sharing an atom.
fn overlapping_pairs(found: &[(usize, Vec<usize>)]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (a, (i, atoms_i)) in found.iter().enumerate() {
        for (j, atoms_j) in &found[a + 1..] {
            if i != j && atoms_i.iter().any(|x| atoms_j.binary_search(x).is_ok()) {
                pairs.push((*i.min(j), *i.max(j)));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

fn node_features(counts: &[usize], weight: f64) -> Vec<f64> {
    let mut f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    f.push(weight);
    f
}

pub fn build_graph(corpus: &[Molecule], vocab: &MotifVocabulary) -> Result<HeteroMotifGraph, HeteroError> {
    if vocab.is_empty() {
        return Err(HeteroError::EmptyVocabulary);
    }
    let n = corpus.len();
    let v = vocab.len();
    // per molecule: motif counts and overlapping motif pairs
    type PerMolecule = (Vec<usize>, Vec<(usize, usize)>);
    let per_mol: Vec<PerMolecule> = corpus
        .par_iter()
        .map(|m| {
            let (counts, found) = occurrences(m, vocab);
            (counts, overlapping_pairs(&found))
        })
        .collect();

    let mut doc_freq = vec![0usize; v];
    let mut co: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (counts, pairs) in &per_mol {
        for (df, &c) in doc_freq.iter_mut().zip(counts) {
            *df += (c > 0) as usize;
        }
        for &p in pairs {
            *co.entry(p).or_default() += 1;
        }
    }
    let stats = CorpusStats { molecules: n, doc_freq };

    let mut adjacency = vec![Vec::new(); n + v];
    for (mi, (counts, _)) in per_mol.iter().enumerate() {
        for (j, &c) in counts.iter().enumerate() {
            if c > 0 {
                let w = tf_idf(c, stats.doc_freq[j], n);
                adjacency[mi].push((n + j, w));
                adjacency[n + j].push((mi, w));
            }
        }
    }
    for (&(i, j), &n_ij) in &co {
        let w = pmi(n_ij, stats.doc_freq[i], stats.doc_freq[j], n).expect("co-occurring motifs have nonzero counts");
        if w >= 0.0 {
            adjacency[n + i].push((n + j, w));
            adjacency[n + j].push((n + i, w));
        }
    }
    adjacency.iter_mut().for_each(|a| a.sort_by_key(|e| e.0));

    let mut features: Vec<Vec<f64>> = corpus
        .iter()
        .zip(&per_mol)
        .map(|(m, (counts, _))| node_features(counts, m.molecular_weight()))
        .collect();
    features.extend(
        vocab
            .entries()
            .par_iter()
            .map(|motif| {
                let (counts, _) = occurrences(&motif.molecule, vocab);
                node_features(&counts, motif.molecule.molecular_weight())
            })
            .collect::<Vec<_>>(),
    );

    Ok(HeteroMotifGraph {
        n_molecules: n,
        n_motifs: v,
        molecule_ids: corpus.iter().map(|m| m.id.clone()).collect(),
        adjacency,
        features,
        stats,
    })
}

impl HeteroMotifGraph {
    pub fn n_molecules(&self) -> usize {
        self.n_molecules
    }

    pub fn n_motifs(&self) -> usize {
        self.n_motifs
    }

    pub fn molecule_ids(&self) -> &[String] {
        &self.molecule_ids
    }

    pub fn molecule_node(&self, id: &str) -> Option<usize> {
        self.molecule_ids.iter().position(|x| x == id)
    }

    pub fn motif_node(&self, motif: usize) -> usize {
        self.n_molecules + motif
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }

    /// Occurrence block plus molecular weight.
    pub fn feature_dim(&self) -> usize {
        self.n_motifs + 1
    }

    pub fn edge_weight(&self, i: usize, j: usize) -> Option<f64> {
        let a = &self.adjacency[i];
        a.binary_search_by_key(&j, |e| e.0).ok().map(|k| a[k].1)
    }

    /// Each undirected edge once, as (i, j, weight) with i < j.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (i, a) in self.adjacency.iter().enumerate() {
            out.extend(a.iter().filter(|e| e.0 > i).map(|&(j, w)| (i, j, w)));
        }
        out
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn write_edges(&self, mut w: impl Write) -> std::io::Result<()> {
        for (i, j, weight) in self.edges() {
            writeln!(w, "{i} {j} {weight}")?;
        }
        Ok(())
    }

    pub fn manifest(&self, vocab_path: Option<&str>) -> GraphManifest {
        GraphManifest {
            n_molecules: self.n_molecules,
            n_motifs: self.n_motifs,
            n_nodes: self.num_nodes(),
            n_edges: self.num_edges(),
            feature_dim: self.feature_dim(),
            vocab_path: vocab_path.map(str::to_string),
        }
    }

    /// Overlays one extra molecule node using the frozen corpus statistics.
    pub fn attach_query(&self, m: &Molecule, vocab: &MotifVocabulary) -> GraphView<'_> {
        let (counts, _) = occurrences(m, vocab);
        let edges = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(j, &c)| {
                (
                    self.n_molecules + j,
                    tf_idf(c, self.stats.doc_freq[j], self.stats.molecules),
                )
            })
            .collect();
        GraphView {
            base: self,
            edges,
            features: node_features(&counts, m.molecular_weight()),
        }
    }
}

impl GraphAccess for HeteroMotifGraph {
    fn num_nodes(&self) -> usize {
        self.n_molecules + self.n_motifs
    }

    fn is_molecule(&self, node: usize) -> bool {
        node < self.n_molecules
    }

    fn neighbors(&self, node: usize) -> Cow<'_, [(usize, f64)]> {
        Cow::Borrowed(&self.adjacency[node])
    }

    fn features(&self, node: usize) -> &[f64] {
        &self.features[node]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphManifest {
    pub n_molecules: usize,
    pub n_motifs: usize,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub feature_dim: usize,
    pub vocab_path: Option<String>,
}

/// A graph with one extra molecule node appended after the base nodes.
#[derive(Debug, Clone)]
pub struct GraphView<'a> {
    base: &'a HeteroMotifGraph,
    edges: Vec<(usize, f64)>,
    features: Vec<f64>,
}

impl GraphView<'_> {
    pub fn query_node(&self) -> usize {
        self.base.num_nodes()
    }

    pub fn query_edges(&self) -> &[(usize, f64)] {
        &self.edges
    }
}

impl GraphAccess for GraphView<'_> {
    fn num_nodes(&self) -> usize {
        self.base.num_nodes() + 1
    }

    fn is_molecule(&self, node: usize) -> bool {
        node == self.query_node() || self.base.is_molecule(node)
    }

    fn neighbors(&self, node: usize) -> Cow<'_, [(usize, f64)]> {
        if node == self.query_node() {
            return Cow::Borrowed(&self.edges);
        }
        let base = self.base.neighbors(node);
        match self.edges.iter().find(|e| e.0 == node) {
            // The query id is larger than every base id, so it sorts last.
            Some(&(_, w)) => {
                let mut v = base.into_owned();
                v.push((self.query_node(), w));
                Cow::Owned(v)
            }
            None => base,
        }
    }

    fn features(&self, node: usize) -> &[f64] {
        if node == self.query_node() {
            &self.features
        } else {
            self.base.features(node)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles_with_id;
    use crate::motif::mine_vocabulary;

    fn corpus() -> Vec<Molecule> {
        ["CCO", "CCN", "CCCO", "c1ccccc1O", "c1ccccc1CC", "OCCO", "C"]
            .iter()
            .enumerate()
            .map(|(i, s)| parse_smiles_with_id(s, &format!("m{i}")).unwrap())
            .collect()
    }

    #[test]
    fn pmi_values() {
        assert_eq!(pmi(1, 2, 2, 4).unwrap(), 0.0);
        assert!((pmi(2, 2, 2, 4).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((pmi(1, 1, 1, 10).unwrap() - std::f64::consts::LN_10).abs() < 1e-15);
        assert!(pmi(1, 0, 1, 10).is_err());
        assert!(pmi(1, 1, 1, 0).is_err());
    }

    #[test]
    fn tf_idf_values() {
        assert_eq!(tf_idf(1, 1, 1), 1.0);
        assert!((tf_idf(2, 1, 4) - 3.83258).abs() < 1e-5);
        assert!((tf_idf(3, 4, 9) - 5.07944).abs() < 1e-5);
    }

    #[test]
    fn structure() {
        let c = corpus();
        let vocab = mine_vocabulary(&c, 6).unwrap();
        let g = build_graph(&c, &vocab).unwrap();
        assert_eq!(g.num_nodes(), c.len() + vocab.len());
        for (i, j, w) in g.edges() {
            assert!(w.is_finite() && w >= 0.0);
            assert!(!(g.is_molecule(i) && g.is_molecule(j)));
            assert_eq!(g.edge_weight(j, i), Some(w));
        }
        // methane has no bonds, so no motif
        assert!(g.neighbors(6).is_empty());
        assert_eq!(g.features(0).len(), g.feature_dim());
    }

    #[test]
    fn empty_vocab() {
        assert_eq!(
            build_graph(&corpus(), &MotifVocabulary::new(0)),
            Err(HeteroError::EmptyVocabulary)
        );
    }

    #[test]
    fn attach_reproduces_edges() {
        let c = corpus();
        let vocab = mine_vocabulary(&c, 6).unwrap();
        let g = build_graph(&c, &vocab).unwrap();
        let before = g.clone();
        for (i, m) in c.iter().enumerate() {
            let view = g.attach_query(m, &vocab);
            let q = view.query_node();
            let got: Vec<(usize, f64)> = view.neighbors(q).into_owned();
            assert_eq!(got, g.neighbors(i).into_owned());
            assert_eq!(view.features(q), g.features(i));
            for &(j, w) in &got {
                assert_eq!(view.neighbors(j).last(), Some(&(q, w)));
            }
        }
        assert_eq!(g, before);
    }

    #[test]
    fn export() {
        let c = corpus();
        let vocab = mine_vocabulary(&c, 6).unwrap();
        let g = build_graph(&c, &vocab).unwrap();
        let mut buf = Vec::new();
        g.write_edges(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), g.num_edges());
        let first: Vec<&str> = text.lines().next().unwrap().split(' ').collect();
        assert_eq!(first.len(), 3);
        let man = g.manifest(Some("vocab.tsv"));
        assert_eq!(man.n_nodes, g.num_nodes());
        let json = serde_json::to_string(&man).unwrap();
        assert_eq!(serde_json::from_str::<GraphManifest>(&json).unwrap(), man);
    }
}
