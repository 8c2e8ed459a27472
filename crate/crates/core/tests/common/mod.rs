//! Independent reference implementations shared by the integration tests.
//! Each one recomputes a library result the slow, obvious way.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use moms_core::chem::{
    canonical_key, canonical_smiles, parse_smiles, path_hash, Atom, BondOrder, Element, Molecule, MAX_PATH_BONDS,
};
use moms_core::motif::{replay_merges, MotifVocabulary, MAX_MOTIF_ATOMS};
use moms_core::neural::{ParamStore, Tensor};
use moms_core::synthetic::fixture_corpus;
use rand::seq::SliceRandom;
use rand::Rng;

// ---------------------------------------------------------------- molecules

fn valence(e: Element) -> u8 {
    match e {
        Element::C => 4,
        Element::N => 3,
        Element::O | Element::S => 2,
        _ => 1,
    }
}

/// Random connected molecule: a random tree over C, N, O, S and Cl with a
/// few ring closures and double bonds, hydrogens filling the valence.
pub fn random_molecule(rng: &mut impl Rng, id: &str, max_atoms: usize) -> Molecule {
    const POOL: [Element; 8] = [
        Element::C,
        Element::C,
        Element::C,
        Element::C,
        Element::N,
        Element::O,
        Element::S,
        Element::Cl,
    ];
    let n = rng.gen_range(2..=max_atoms.max(2));
    let mut elements = vec![Element::C];
    let mut used = vec![0u8];
    let mut bonds: Vec<(usize, usize, BondOrder)> = Vec::new();
    for i in 1..n {
        let open: Vec<usize> = (0..i).filter(|&j| used[j] < valence(elements[j])).collect();
        let Some(&parent) = open.choose(rng) else { break };
        let e = *POOL.choose(rng).unwrap();
        elements.push(e);
        used.push(1);
        used[parent] += 1;
        bonds.push((parent, i, BondOrder::Single));
    }
    let n = elements.len();
    for _ in 0..rng.gen_range(0..=2) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        let exists = bonds.iter().any(|&(x, y, _)| (x, y) == (a, b) || (x, y) == (b, a));
        if a != b && !exists && used[a] < valence(elements[a]) && used[b] < valence(elements[b]) {
            used[a] += 1;
            used[b] += 1;
            bonds.push((a, b, BondOrder::Single));
        }
    }
    for bond in bonds.iter_mut() {
        let (a, b) = (bond.0, bond.1);
        if rng.gen_bool(0.15) && used[a] < valence(elements[a]) && used[b] < valence(elements[b]) {
            used[a] += 1;
            used[b] += 1;
            bond.2 = BondOrder::Double;
        }
    }
    let atoms = elements
        .iter()
        .zip(&used)
        .map(|(&e, &u)| {
            let mut a = Atom::new(e);
            a.implicit_h = valence(e) - u;
            a
        })
        .collect();
    Molecule::from_parts(id, atoms, bonds).expect("generated graph is valid")
}

/// Random corpus mixing fixture molecules with generated ones.
pub fn random_corpus(rng: &mut impl Rng, size: usize) -> Vec<Molecule> {
    let fixture = fixture_corpus();
    (0..size)
        .map(|i| {
            let id = format!("r{i}");
            if rng.gen_bool(0.5) {
                let mut m = fixture.choose(rng).unwrap().clone();
                m.id = id;
                m
            } else {
                random_molecule(rng, &id, 14)
            }
        })
        .collect()
}

pub fn random_permutation(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

fn atom_label(a: &Atom) -> (u8, i8, bool) {
    (a.element.atomic_number(), a.formal_charge, a.aromatic)
}

/// Attributed-graph isomorphism by trying every atom bijection that
/// preserves atom labels. Only for small molecules.
pub fn brute_force_isomorphic(x: &Molecule, y: &Molecule) -> bool {
    let n = x.num_atoms();
    if n != y.num_atoms() || x.num_bonds() != y.num_bonds() {
        return false;
    }
    let order = |m: &Molecule, a: usize, b: usize| m.bond_between(a, b).map(|bd| bd.order);
    fn extend(
        x: &Molecule,
        y: &Molecule,
        map: &mut Vec<usize>,
        taken: &mut [bool],
        order: &dyn Fn(&Molecule, usize, usize) -> Option<BondOrder>,
    ) -> bool {
        let i = map.len();
        if i == x.num_atoms() {
            return true;
        }
        for j in 0..y.num_atoms() {
            if taken[j] || atom_label(x.atom(i)) != atom_label(y.atom(j)) {
                continue;
            }
            if (0..i).any(|k| order(x, k, i) != order(y, map[k], j)) {
                continue;
            }
            taken[j] = true;
            map.push(j);
            if extend(x, y, map, taken, order) {
                return true;
            }
            map.pop();
            taken[j] = false;
        }
        false
    }
    extend(x, y, &mut Vec::new(), &mut vec![false; n], &order)
}

/// Copy of `m` with one element or one bond order changed.
pub fn mutate(rng: &mut impl Rng, m: &Molecule) -> Molecule {
    let mut atoms = m.atoms().to_vec();
    let mut bonds: Vec<(usize, usize, BondOrder)> = m.bonds().iter().map(|b| (b.a, b.b, b.order)).collect();
    if rng.gen_bool(0.5) || bonds.is_empty() {
        let i = rng.gen_range(0..atoms.len());
        atoms[i].element = match atoms[i].element {
            Element::C => Element::N,
            Element::N => Element::O,
            _ => Element::C,
        };
    } else {
        let k = rng.gen_range(0..bonds.len());
        bonds[k].2 = match bonds[k].2 {
            BondOrder::Single => BondOrder::Double,
            _ => BondOrder::Single,
        };
    }
    Molecule::from_parts(m.id.clone(), atoms, bonds).unwrap()
}

/// Cyclomatic number: bonds - atoms + connected components.
pub fn cyclomatic_number(m: &Molecule) -> usize {
    let n = m.num_atoms();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    for b in m.bonds() {
        let (ra, rb) = (find(&mut parent, b.a), find(&mut parent, b.b));
        parent[ra] = rb;
    }
    let comps = (0..n).filter(|&i| find(&mut parent, i) == i).count();
    m.num_bonds() + comps - n
}

// ---------------------------------------------------------------- fingerprint

/// Bits of every simple path with 1..=MAX_PATH_BONDS bonds, enumerated
/// breadth-first as explicit atom lists.
pub fn reference_fingerprint_bits(m: &Molecule, n_bits: usize) -> BTreeSet<usize> {
    let tokens = |path: &[usize]| -> Vec<u64> {
        let mut out = vec![m.atom(path[0]).element.atomic_number() as u64];
        for w in path.windows(2) {
            out.push(100 + m.bond_between(w[0], w[1]).unwrap().order.code() as u64);
            out.push(m.atom(w[1]).element.atomic_number() as u64);
        }
        out
    };
    let mut paths: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut frontier: Vec<Vec<usize>> = (0..m.num_atoms()).map(|i| vec![i]).collect();
    for _ in 0..MAX_PATH_BONDS {
        let mut next = Vec::new();
        for p in &frontier {
            for &(nb, _) in m.neighbors(*p.last().unwrap()) {
                if !p.contains(&nb) {
                    let mut q = p.clone();
                    q.push(nb);
                    let mut r = q.clone();
                    r.reverse();
                    paths.insert(q.clone().min(r));
                    next.push(q);
                }
            }
        }
        frontier = next;
    }
    paths
        .iter()
        .map(|p| {
            let mut r = p.clone();
            r.reverse();
            let t = tokens(p).min(tokens(&r));
            (path_hash(&t) % n_bits as u64) as usize
        })
        .collect()
}

// ---------------------------------------------------------------- mining

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceStep {
    pub key: String,
    pub count: usize,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceVocab {
    /// (key, frequency) in acceptance order.
    pub motifs: Vec<(String, usize)>,
    pub steps: Vec<ReferenceStep>,
}

fn union_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut u: Vec<usize> = a.iter().chain(b).copied().collect();
    u.sort_unstable();
    u
}

fn touching(m: &Molecule, a: &[usize], b: &[usize]) -> bool {
    m.bonds()
        .iter()
        .any(|bd| (a.contains(&bd.a) && b.contains(&bd.b)) || (a.contains(&bd.b) && b.contains(&bd.a)))
}

/// Every pair of fragments joined by a bond, with the key of their union.
fn reference_pairs(m: &Molecule, frags: &[Vec<usize>]) -> Vec<(usize, usize, Vec<usize>, String)> {
    let mut out = Vec::new();
    for x in 0..frags.len() {
        for y in x + 1..frags.len() {
            if touching(m, &frags[x], &frags[y]) {
                let atoms = union_sorted(&frags[x], &frags[y]);
                let key = canonical_key(&m.induced_subgraph(&atoms)).unwrap();
                out.push((x, y, atoms, key));
            }
        }
    }
    out
}

/// Naive merge-and-update miner: every round recounts all adjacent
/// fragment pairs in every molecule from scratch.
pub fn reference_mine(corpus: &[Molecule], k: usize) -> ReferenceVocab {
    let mut parts: Vec<Vec<Vec<usize>>> = corpus
        .iter()
        .map(|m| (0..m.num_atoms()).map(|i| vec![i]).collect())
        .collect();
    let mut motifs: Vec<(String, usize)> = Vec::new();
    let mut steps = Vec::new();
    for _ in 0..k {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for (m, frags) in corpus.iter().zip(&parts) {
            for (_, _, _, key) in reference_pairs(m, frags) {
                *counts.entry(key).or_default() += 1;
            }
        }
        let Some(best) = counts.values().copied().max() else {
            break;
        };
        let key = counts.iter().find(|(_, &c)| c == best).unwrap().0.clone();

        let mut example: Option<Molecule> = None;
        for (m, frags) in corpus.iter().zip(parts.iter_mut()) {
            let mut cands: Vec<(Vec<usize>, usize, usize)> = reference_pairs(m, frags)
                .into_iter()
                .filter(|p| p.3 == key)
                .map(|(x, y, atoms, _)| (atoms, x, y))
                .collect();
            cands.sort();
            let mut used = BTreeSet::new();
            let mut merged = Vec::new();
            for (atoms, x, y) in cands {
                if used.contains(&x) || used.contains(&y) {
                    continue;
                }
                used.insert(x);
                used.insert(y);
                merged.push(atoms);
            }
            if example.is_none() {
                if let Some(first) = merged.first() {
                    example = Some(m.induced_subgraph(first));
                }
            }
            let mut next: Vec<Vec<usize>> = frags
                .iter()
                .enumerate()
                .filter(|(i, _)| !used.contains(i))
                .map(|(_, f)| f.clone())
                .collect();
            next.extend(merged);
            next.sort();
            *frags = next;
        }
        let frag = example.expect("winning key occurs");
        let valid = frag.is_connected()
            && frag.heavy_atom_count() <= MAX_MOTIF_ATOMS
            && parse_smiles(&canonical_smiles(&frag)).is_ok();
        let accepted = valid && !motifs.iter().any(|(k2, _)| *k2 == key);
        if accepted {
            motifs.push((key.clone(), best));
        }
        steps.push(ReferenceStep {
            key,
            count: best,
            accepted,
        });
    }
    ReferenceVocab { motifs, steps }
}

// ---------------------------------------------------------------- graph weights

/// Expected edge weights recounted from raw occurrences: TF-IDF for
/// molecule-motif edges, PMI for motif pairs whose occurrences overlap in
/// some molecule. Keys are (node, node) with the smaller node first.
pub fn reference_edge_weights(corpus: &[Molecule], vocab: &MotifVocabulary) -> BTreeMap<(usize, usize), f64> {
    let n = corpus.len();
    let v = vocab.len();
    let occurrences: Vec<Vec<(usize, Vec<usize>)>> = corpus.iter().map(|m| replay_merges(m, vocab)).collect();
    let mut df = vec![0usize; v];
    let mut co: HashMap<(usize, usize), usize> = HashMap::new();
    let mut out = BTreeMap::new();
    for (mi, occ) in occurrences.iter().enumerate() {
        let mut counts = vec![0usize; v];
        for (j, _) in occ {
            counts[*j] += 1;
        }
        for j in 0..v {
            if counts[j] > 0 {
                df[j] += 1;
            }
        }
        let mut seen = BTreeSet::new();
        for (a, (i, atoms_i)) in occ.iter().enumerate() {
            for (b, (j, atoms_j)) in occ.iter().enumerate() {
                if a != b && i < j && atoms_i.iter().any(|x| atoms_j.contains(x)) {
                    seen.insert((*i, *j));
                }
            }
        }
        for p in seen {
            *co.entry(p).or_default() += 1;
        }
        out.insert(mi, counts);
    }
    let mut weights = BTreeMap::new();
    let m = n as f64;
    for (mi, counts) in out {
        for (j, &c) in counts.iter().enumerate() {
            if c > 0 {
                let idf = ((1.0 + m) / (1.0 + df[j] as f64)).ln() + 1.0;
                weights.insert((mi, n + j), c as f64 * idf);
            }
        }
    }
    for (&(i, j), &nij) in &co {
        if nij * n >= df[i] * df[j] {
            let p = (nij as f64 / m) / ((df[i] as f64 / m) * (df[j] as f64 / m));
            weights.insert((n + i, n + j), p.ln());
        }
    }
    weights
}

// ---------------------------------------------------------------- isotopes

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Shift distribution of `count` atoms of `e` by summing multinomial terms
/// over every isotope composition.
fn element_shifts(e: Element, count: usize, max_shift: i32) -> BTreeMap<i32, f64> {
    let isos = e.isotopes();
    let main = e.most_abundant().mass_number as i32;
    let mut out = BTreeMap::new();
    #[allow(clippy::too_many_arguments)]
    fn rec(
        isos: &[moms_core::chem::Isotope],
        main: i32,
        left: usize,
        idx: usize,
        coef: f64,
        prob: f64,
        shift: i32,
        out: &mut BTreeMap<i32, f64>,
    ) {
        if idx == isos.len() - 1 {
            let iso = &isos[idx];
            let s = shift + left as i32 * (iso.mass_number as i32 - main);
            *out.entry(s).or_default() += coef * prob * iso.abundance.powi(left as i32);
            return;
        }
        for c in 0..=left {
            let iso = &isos[idx];
            rec(
                isos,
                main,
                left - c,
                idx + 1,
                coef * binomial(left, c),
                prob * iso.abundance.powi(c as i32),
                shift + c as i32 * (iso.mass_number as i32 - main),
                out,
            );
        }
    }
    rec(isos, main, count, 0, 1.0, 1.0, 0, &mut out);
    out.retain(|&s, _| s <= max_shift);
    out
}

/// Relative abundances at shifts 0..=max_shift, shift 0 scaled to 1.
pub fn reference_isotope_pattern(m: &Molecule, max_shift: usize) -> BTreeMap<usize, f64> {
    let max = max_shift as i32;
    let mut total: BTreeMap<i32, f64> = BTreeMap::from([(0, 1.0)]);
    for (e, &c) in Element::ALL.iter().zip(m.element_counts().iter()) {
        if c == 0 {
            continue;
        }
        let d = element_shifts(*e, c as usize, max);
        let mut next = BTreeMap::new();
        for (&s, &p) in &total {
            for (&t, &q) in &d {
                if s + t <= max {
                    *next.entry(s + t).or_default() += p * q;
                }
            }
        }
        total = next;
    }
    let base = total[&0];
    total
        .into_iter()
        .filter(|&(_, p)| p > 0.0)
        .map(|(s, p)| (s as usize, p / base))
        .collect()
}

// ---------------------------------------------------------------- gradients

pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Default)]
pub struct GradReport {
    /// Worst per-tensor relative error `|a - n| / max(|a|, |n|)`.
    pub error: f64,
    pub at: String,
    pub checked: usize,
    /// Entries whose step crossed a ReLU kink.
    pub kinks: usize,
}

impl GradReport {
    pub fn merge(&mut self, other: GradReport, label: &str) {
        if other.error > self.error {
            self.error = other.error;
            self.at = format!("{label}: {}", other.at);
        }
        self.checked += other.checked;
        self.kinks += other.kinks;
    }
}

/// Compares analytic gradients with central differences of `loss`, checking
/// every entry of tensors up to `max_entries` and a sample of larger ones.
/// An entry whose central differences at h and h/2 disagree is straddling a
/// ReLU kink, where the derivative is undefined; it is counted and skipped.
pub fn gradient_check(
    store: &mut ParamStore,
    analytic: &[Tensor],
    loss: &dyn Fn(&ParamStore) -> f64,
    max_entries: usize,
    rng: &mut impl Rng,
) -> GradReport {
    let mut report = GradReport::default();
    for (t, grad) in analytic.iter().enumerate() {
        let id = store.id(t);
        let len = store.get(id).data().len();
        let mut idx: Vec<usize> = (0..len).collect();
        if len > max_entries {
            // entries with a nonzero analytic gradient plus random others
            let nonzero: Vec<usize> = idx.iter().copied().filter(|&i| grad.data()[i] != 0.0).collect();
            idx.shuffle(rng);
            idx.truncate(max_entries);
            idx.extend(nonzero.into_iter().take(max_entries));
            idx.sort_unstable();
            idx.dedup();
        }
        let (mut diff, mut a_norm, mut n_norm) = (0.0f64, 0.0f64, 0.0f64);
        for i in idx {
            let orig = store.get(id).data()[i];
            let mut central = |h: f64| {
                store.get_mut(id).data_mut()[i] = orig + h;
                let up = loss(store);
                store.get_mut(id).data_mut()[i] = orig - h;
                let down = loss(store);
                store.get_mut(id).data_mut()[i] = orig;
                (up - down) / (2.0 * h)
            };
            let numeric = central(FD_STEP);
            let half = central(FD_STEP / 2.0);
            report.checked += 1;
            if (numeric - half).abs() > 1e-6 * (1.0 + numeric.abs()) {
                report.kinks += 1;
                continue;
            }
            let a = grad.data()[i];
            diff += (a - numeric).powi(2);
            a_norm += a * a;
            n_norm += numeric * numeric;
        }
        let scale = a_norm.sqrt().max(n_norm.sqrt());
        let rel = if scale == 0.0 { 0.0 } else { diff.sqrt() / scale };
        if rel > report.error {
            report.error = rel;
            report.at = store.names()[t].clone();
        }
    }
    report
}

/// Replaces every parameter with uniform noise in [-scale, scale].
pub fn randomize(store: &mut ParamStore, rng: &mut impl Rng, scale: f64) {
    for t in store.tensors_mut() {
        t.data_mut().iter_mut().for_each(|x| *x = rng.gen_range(-scale..scale));
    }
}

// ---------------------------------------------------------------- checks
//
// Each check returns what it measured so the acceptance report and the
// topic tests can share it.

use std::sync::Arc;

use moms_core::hetero::build_graph;
use moms_core::model::{MoMSConfig, MoMSModel, MoleculeInput, NetLayout, Variant};
use moms_core::motif::mine_vocabulary;
use moms_core::neural::{GcnLayerParams, GinLayerParams, MlpParams, Tape, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Largest absolute difference between library edge weights and the
/// recount over `corpora` random corpora. Missing or extra edges count as
/// infinite error.
pub fn weight_check(seed: u64, corpora: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..corpora {
        let size = rng.gen_range(5..=100);
        let corpus = random_corpus(&mut rng, size);
        let vocab = mine_vocabulary(&corpus, rng.gen_range(1..=20)).unwrap();
        if vocab.is_empty() {
            continue;
        }
        let graph = build_graph(&corpus, &vocab).unwrap();
        let expected = reference_edge_weights(&corpus, &vocab);
        let actual: BTreeMap<(usize, usize), f64> = graph.edges().into_iter().map(|(i, j, w)| ((i, j), w)).collect();
        if actual.len() != expected.len() || actual.keys().ne(expected.keys()) {
            return f64::INFINITY;
        }
        for (k, w) in &expected {
            worst = worst.max((actual[k] - w).abs());
        }
    }
    worst
}

/// Compares the miner with [`reference_mine`] on `corpora` random corpora.
/// Returns the number of corpora checked or the first disagreement.
pub fn miner_check(seed: u64, corpora: usize) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for c in 0..corpora {
        let size = rng.gen_range(1..=50);
        let corpus = random_corpus(&mut rng, size);
        let k = rng.gen_range(1..=10);
        let vocab = mine_vocabulary(&corpus, k).unwrap();
        let reference = reference_mine(&corpus, k);
        let motifs: Vec<(String, usize)> = vocab.entries().iter().map(|m| (m.key.clone(), m.frequency)).collect();
        let steps: Vec<ReferenceStep> = vocab
            .steps()
            .iter()
            .map(|s| ReferenceStep {
                key: s.key.clone(),
                count: s.frequency,
                accepted: s.accepted,
            })
            .collect();
        if motifs != reference.motifs || steps != reference.steps {
            return Err(format!(
                "corpus {c} (size {size}, K={k}): miner {motifs:?} / {steps:?}, reference {:?} / {:?}",
                reference.motifs, reference.steps
            ));
        }
    }
    Ok(corpora)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerKind {
    Gcn,
    Gin,
    Mlp,
}

fn random_tensor(rng: &mut impl Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn positive_target(rng: &mut impl Rng, len: usize) -> Arc<Vec<f64>> {
    Arc::new((0..len).map(|_| rng.gen_range(0.0..1.0)).collect())
}

/// Gradient check of one layer type over
/// `instances` random molecules, inputs and parameters. The input features
/// are a parameter too, so input gradients are checked.
pub fn layer_gradient_error(kind: LayerKind, seed: u64, instances: usize) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = GradReport::default();
    for inst in 0..instances {
        let m = random_molecule(&mut rng, "g", 10);
        let input = MoleculeInput::new(&m);
        let n = m.num_atoms();
        let (d_in, d_out) = (rng.gen_range(2..6), rng.gen_range(2..6));
        let mut store = ParamStore::default();
        let x = store.add("input", random_tensor(&mut rng, n, d_in));
        enum L {
            Gcn(GcnLayerParams),
            Gin(GinLayerParams),
            Mlp(MlpParams),
        }
        let layer = match kind {
            LayerKind::Gcn => L::Gcn(GcnLayerParams::new(&mut store, "gcn", d_in, d_out, &mut rng)),
            LayerKind::Gin => L::Gin(GinLayerParams::new(&mut store, "gin", d_in, d_out, &mut rng)),
            LayerKind::Mlp => L::Mlp(MlpParams::new(&mut store, "mlp", &[d_in, d_out + 2, d_out], &mut rng)),
        };
        randomize(&mut store, &mut rng, 1.0);
        let pool = Tensor::row_vector((0..n).map(|_| rng.gen_range(0.1..1.0)).collect());
        // cosine loss is scale invariant; a fixed projection and offset keep
        // it from going flat when few output units are active
        let proj = random_tensor(&mut rng, d_out, 6);
        let offset = Tensor::row_vector((0..6).map(|_| rng.gen_range(0.5..1.0)).collect());
        let target = positive_target(&mut rng, 6);
        let forward = |tape: &mut Tape| -> Var {
            let h = tape.param(x);
            let out = match &layer {
                L::Gcn(l) => l.forward(tape, h, &input.a_hat).unwrap(),
                L::Gin(l) => l.forward(tape, h, &input.adj).unwrap(),
                L::Mlp(l) => l.forward(tape, h, true).unwrap(),
            };
            let c = tape.constant(pool.clone());
            let pooled = tape.matmul(c, out).unwrap();
            let r = tape.constant(proj.clone());
            let projected = tape.matmul(pooled, r).unwrap();
            let o = tape.constant(offset.clone());
            let shifted = tape.add(projected, o).unwrap();
            tape.cosine_distance(shifted, target.clone()).unwrap()
        };
        let analytic = {
            let mut tape = Tape::new(&store);
            let l = forward(&mut tape);
            tape.backward(l).unwrap()
        };
        let loss = |s: &ParamStore| {
            let mut tape = Tape::new(s);
            let l = forward(&mut tape);
            tape.value(l).data()[0]
        };
        let r = gradient_check(&mut store, &analytic, &loss, usize::MAX, &mut rng);
        worst.merge(r, &format!("instance {inst}"));
    }
    worst
}

/// Tiny full model (hidden 8, 50 bins) with a motif graph built from the
/// first 16 fixture molecules.
pub fn tiny_model(variant: Variant) -> (MoMSModel, Vec<Molecule>) {
    let corpus: Vec<Molecule> = fixture_corpus().into_iter().take(16).collect();
    let config = MoMSConfig {
        variant,
        hidden: 8,
        m_max: 50,
        vocab_size: 20,
        sampler_sizes: vec![4, 4, 4],
        ..MoMSConfig::default()
    };
    (MoMSModel::prepare(config, &corpus).unwrap(), corpus)
}

/// Gradient check of the composed network over
/// `instances` random molecules, targets and parameters, cycling through
/// the four variants. Tensors larger than 200 entries are sampled.
pub fn composed_gradient_error(seed: u64, instances: usize) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let models: Vec<(MoMSModel, Vec<Molecule>)> = Variant::ALL.iter().map(|&v| tiny_model(v)).collect();
    let mut worst = GradReport::default();
    for inst in 0..instances {
        let (model, corpus) = &models[inst % models.len()];
        let m = if inst % 2 == 0 {
            corpus[rng.gen_range(0..corpus.len())].clone()
        } else {
            random_molecule(&mut rng, "query", 12)
        };
        let input = model.sample_input(&m).unwrap();
        let mut store = model.params().clone();
        randomize(&mut store, &mut rng, 0.5);
        let target = positive_target(&mut rng, 50);
        let layout = model.layout();
        let analytic = {
            let mut tape = Tape::new(&store);
            let out = layout.forward(&mut tape, &input).unwrap();
            let l = tape.cosine_distance(out, target.clone()).unwrap();
            tape.backward(l).unwrap()
        };
        let loss = |s: &ParamStore| {
            let mut tape = Tape::new(s);
            let out = layout.forward(&mut tape, &input).unwrap();
            let l = tape.cosine_distance(out, target.clone()).unwrap();
            tape.value(l).data()[0]
        };
        let r = gradient_check(&mut store, &analytic, &loss, 200, &mut rng);
        worst.merge(r, &format!("instance {inst} ({})", model.config().variant));
    }
    worst
}

/// Largest difference between pooled molecule embeddings of each fixture
/// molecule and `perms` random relabelings of it, over both molecule
/// encoders with random parameters.
pub fn invariance_error(seed: u64, perms: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for variant in [Variant::GcnOnly, Variant::GinOnly] {
        let config = MoMSConfig {
            variant,
            hidden: 16,
            ..MoMSConfig::default()
        };
        let (layout, mut store) = NetLayout::new(&config, 1);
        randomize(&mut store, &mut rng, 0.5);
        let embed = |m: &Molecule| -> Vec<f64> {
            let mut tape = Tape::new(&store);
            let e = layout.molecule_embedding(&mut tape, &MoleculeInput::new(m)).unwrap();
            tape.value(e).data().to_vec()
        };
        for m in fixture_corpus() {
            let base = embed(&m);
            for _ in 0..perms {
                let p = random_permutation(&mut rng, m.num_atoms());
                let e = embed(&m.permuted(&p));
                for (a, b) in base.iter().zip(&e) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    worst
}

use moms_core::eval::{rank_candidates, top_k_percent, Entry, RankingTask};
use moms_core::spectra::{bin_spectrum, Spectrum};
use moms_core::synthetic::fixture_spectra;

fn random_spectrum(rng: &mut impl Rng, len: usize) -> Spectrum {
    // sparse nonnegative bins, like a peak list
    let mut bins = vec![0.0; len];
    for _ in 0..rng.gen_range(3..20) {
        bins[rng.gen_range(0..len)] += rng.gen_range(0.01..1.0);
    }
    Spectrum::from_bins(bins)
}

fn top_k_of(task: &RankingTask, k: u32) -> f64 {
    let ranks = rank_candidates(task).unwrap();
    let r: Vec<usize> = ranks.iter().map(|q| q.rank).collect();
    let c: Vec<usize> = ranks.iter().map(|q| q.candidates).collect();
    top_k_percent(&r, &c, k)
}

/// Top-5% when every query's prediction is its own measured spectrum,
/// over the fixture library.
pub fn perfect_top5() -> f64 {
    let entries: Vec<Entry> = fixture_spectra()
        .iter()
        .map(|p| Entry {
            id: p.key().unwrap().to_string(),
            spectrum: bin_spectrum(p).unwrap(),
            precursor_mz: p.precursor_mz,
        })
        .collect();
    top_k_of(
        &RankingTask {
            queries: entries.clone(),
            references: entries,
            precursor_window: None,
        },
        5,
    )
}

/// Top-5% over `trials` queries, each ranked against 100 unrelated random
/// candidates, one of which is labeled as its match.
pub fn random_top5(seed: u64, trials: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0.0;
    for t in 0..trials {
        let query = Entry {
            id: format!("q{t}"),
            spectrum: random_spectrum(&mut rng, 200),
            precursor_mz: None,
        };
        let truth = rng.gen_range(0..100);
        let references = (0..100)
            .map(|i| Entry {
                id: if i == truth { query.id.clone() } else { format!("x{i}") },
                spectrum: random_spectrum(&mut rng, 200),
                precursor_mz: None,
            })
            .collect();
        hits += top_k_of(
            &RankingTask {
                queries: vec![query],
                references,
                precursor_window: None,
            },
            5,
        );
    }
    hits / trials as f64
}
