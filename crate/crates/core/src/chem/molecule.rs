use std::collections::VecDeque;

use super::element::Element;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to the valence sum. Aromatic bonds count as one; the
    /// extra pi electron is accounted for on the atom.
    pub fn valence_contribution(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BondOrder::Single => "-",
            BondOrder::Double => "=",
            BondOrder::Triple => "#",
            BondOrder::Aromatic => ":",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub element: Element,
    pub formal_charge: i8,
    /// Hydrogens written explicitly (bracket `H` count or folded `[H]` atoms).
    pub explicit_h: u8,
    /// Hydrogens added by valence completion.
    pub implicit_h: u8,
    pub aromatic: bool,
    pub in_ring: bool,
    /// Written in brackets; brackets suppress valence completion.
    pub bracket: bool,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Atom {
            element,
            formal_charge: 0,
            explicit_h: 0,
            implicit_h: 0,
            aromatic: false,
            in_ring: false,
            bracket: false,
        }
    }

    pub fn total_h(&self) -> u8 {
        self.explicit_h + self.implicit_h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub in_ring: bool,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// A molecular graph with perceived rings.
#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    pub id: String,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    /// Per atom: (neighbor, bond index), sorted by neighbor.
    adjacency: Vec<Vec<(usize, usize)>>,
    /// Smallest set of smallest rings, each as an ordered atom cycle.
    rings: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("bond {0}-{1} references a missing atom")]
    BadEndpoint(usize, usize),
    #[error("bond {0}-{0} is a self loop")]
    SelfLoop(usize),
    #[error("duplicate bond {0}-{1}")]
    DuplicateBond(usize, usize),
}

impl Molecule {
    /// Builds a molecule from atoms and bonds, recomputing adjacency and
    /// ring membership. Hydrogen counts are taken as given.
    pub fn from_parts(
        id: impl Into<String>,
        atoms: Vec<Atom>,
        bonds: Vec<(usize, usize, BondOrder)>,
    ) -> Result<Molecule, GraphError> {
        let n = atoms.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut out_bonds = Vec::with_capacity(bonds.len());
        for (idx, &(a, b, order)) in bonds.iter().enumerate() {
            if a >= n || b >= n {
                return Err(GraphError::BadEndpoint(a, b));
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if adjacency[a].iter().any(|&(nb, _)| nb == b) {
                return Err(GraphError::DuplicateBond(a, b));
            }
            adjacency[a].push((b, idx));
            adjacency[b].push((a, idx));
            out_bonds.push(Bond {
                a,
                b,
                order,
                in_ring: false,
            });
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let mut mol = Molecule {
            id: id.into(),
            atoms,
            bonds: out_bonds,
            adjacency,
            rings: Vec::new(),
        };
        mol.perceive_rings();
        Ok(mol)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub(crate) fn atoms_mut(&mut self) -> &mut [Atom] {
        &mut self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub(crate) fn bonds_mut(&mut self) -> &mut [Bond] {
        &mut self.bonds
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn num_bonds(&self) -> usize {
        self.bonds.len()
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.iter().filter(|a| a.element != Element::H).count()
    }

    /// Neighbors of `i` as (atom, bond index) pairs.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.adjacency[a]
            .iter()
            .find(|&&(nb, _)| nb == b)
            .map(|&(_, bi)| &self.bonds[bi])
    }

    pub fn rings(&self) -> &[Vec<usize>] {
        &self.rings
    }

    pub fn ring_count(&self) -> usize {
        self.rings.len()
    }

    /// Connected components as sorted atom lists, ordered by smallest atom.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(v) = queue.pop_front() {
                comp.push(v);
                for &(w, _) in &self.adjacency[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Subgraph induced by `atom_set`; atoms keep their hydrogen counts.
    /// Atom order follows ascending parent index.
    pub fn induced_subgraph(&self, atom_set: &[usize]) -> Molecule {
        let mut sorted = atom_set.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut index = vec![usize::MAX; self.atoms.len()];
        for (new, &old) in sorted.iter().enumerate() {
            index[old] = new;
        }
        let atoms = sorted.iter().map(|&i| self.atoms[i].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .filter(|b| index[b.a] != usize::MAX && index[b.b] != usize::MAX)
            .map(|b| (index[b.a], index[b.b], b.order))
            .collect();
        Molecule::from_parts(self.id.clone(), atoms, bonds).expect("induced subgraph of a valid graph")
    }

    /// Relabels atoms so that old atom `i` becomes atom `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Molecule {
        assert_eq!(perm.len(), self.atoms.len());
        let mut atoms = vec![Atom::new(Element::C); self.atoms.len()];
        for (old, &new) in perm.iter().enumerate() {
            atoms[new] = self.atoms[old].clone();
        }
        let bonds = self.bonds.iter().map(|b| (perm[b.a], perm[b.b], b.order)).collect();
        Molecule::from_parts(self.id.clone(), atoms, bonds).expect("permutation of a valid graph")
    }

    /// Average molecular weight including all hydrogens.
    pub fn molecular_weight(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.element.average_mass() + a.total_h() as f64 * Element::H.average_mass())
            .sum()
    }

    /// Sum of most-abundant isotope masses including all hydrogens.
    pub fn monoisotopic_mass(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.element.monoisotopic_mass() + a.total_h() as f64 * Element::H.monoisotopic_mass())
            .sum()
    }

    /// Element counts including hydrogens, in [`Element::ALL`] order.
    pub fn element_counts(&self) -> [u32; 11] {
        let mut counts = [0u32; 11];
        for a in &self.atoms {
            counts[a.element.index()] += 1;
            counts[Element::H.index()] += a.total_h() as u32;
        }
        counts
    }

    fn perceive_rings(&mut self) {
        let n = self.atoms.len();
        let m = self.bonds.len();
        let bridges = self.find_bridges();
        for (i, b) in self.bonds.iter_mut().enumerate() {
            b.in_ring = !bridges[i];
        }
        for a in &mut self.atoms {
            a.in_ring = false;
        }
        for i in 0..m {
            if self.bonds[i].in_ring {
                let (a, b) = (self.bonds[i].a, self.bonds[i].b);
                self.atoms[a].in_ring = true;
                self.atoms[b].in_ring = true;
            }
        }
        let ring_bonds = self.bonds.iter().filter(|b| b.in_ring).count();
        if ring_bonds == 0 {
            self.rings.clear();
            return;
        }
        let nullity = m + self.components().len() - n;
        self.rings = self.minimum_cycle_basis(nullity);
    }

    fn find_bridges(&self) -> Vec<bool> {
        // iterative Tarjan low-link over bond indices
        let n = self.atoms.len();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut bridge = vec![false; self.bonds.len()];
        let mut timer = 0;
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            // (vertex, parent bond, next neighbor cursor)
            let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            while let Some(top) = stack.last_mut() {
                let (v, pb, cursor) = *top;
                if cursor < self.adjacency[v].len() {
                    top.2 += 1;
                    let (w, bi) = self.adjacency[v][cursor];
                    if bi == pb {
                        continue;
                    }
                    if disc[w] == usize::MAX {
                        disc[w] = timer;
                        low[w] = timer;
                        timer += 1;
                        stack.push((w, bi, 0));
                    } else {
                        low[v] = low[v].min(disc[w]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(parent, _, _)) = stack.last() {
                        low[parent] = low[parent].min(low[v]);
                        if low[v] > disc[parent] {
                            bridge[pb] = true;
                        }
                    }
                }
            }
        }
        bridge
    }

    /// Horton candidate cycles reduced to a minimum basis by GF(2) elimination.
    fn minimum_cycle_basis(&self, size: usize) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let m = self.bonds.len();
        let words = m.div_ceil(64);
        let mut candidates: Vec<(Vec<usize>, Vec<u64>)> = Vec::new();
        let ring_adj = |v: usize| {
            self.adjacency[v]
                .iter()
                .copied()
                .filter(|&(_, bi)| self.bonds[bi].in_ring)
        };
        for root in 0..n {
            if !self.atoms[root].in_ring {
                continue;
            }
            let mut parent = vec![usize::MAX; n];
            let mut parent_bond = vec![usize::MAX; n];
            let mut dist = vec![usize::MAX; n];
            dist[root] = 0;
            let mut queue = VecDeque::from([root]);
            while let Some(v) = queue.pop_front() {
                for (w, bi) in ring_adj(v) {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        parent[w] = v;
                        parent_bond[w] = bi;
                        queue.push_back(w);
                    }
                }
            }
            let path_to_root = |mut v: usize| {
                let mut path = vec![v];
                while v != root {
                    v = parent[v];
                    path.push(v);
                }
                path
            };
            for (bi, bond) in self.bonds.iter().enumerate() {
                if !bond.in_ring || dist[bond.a] == usize::MAX || dist[bond.b] == usize::MAX {
                    continue;
                }
                if parent_bond[bond.a] == bi || parent_bond[bond.b] == bi {
                    continue;
                }
                let pa = path_to_root(bond.a);
                let pb = path_to_root(bond.b);
                // paths must meet only at the root
                if pa[..pa.len() - 1].iter().any(|x| pb[..pb.len() - 1].contains(x)) {
                    continue;
                }
                let mut cycle: Vec<usize> = pa.iter().rev().copied().collect();
                cycle.extend(pb[..pb.len() - 1].iter().copied());
                let mut bits = vec![0u64; words];
                for k in 0..cycle.len() {
                    let u = cycle[k];
                    let v = cycle[(k + 1) % cycle.len()];
                    let e = self.adjacency[u].iter().find(|&&(x, _)| x == v).unwrap().1;
                    bits[e / 64] |= 1 << (e % 64);
                }
                candidates.push((cycle, bits));
            }
        }
        candidates.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.1.cmp(&b.1)));
        candidates.dedup_by(|a, b| a.1 == b.1);

        let mut basis_rows: Vec<Vec<u64>> = Vec::new();
        let mut pivots: Vec<usize> = Vec::new();
        let mut rings = Vec::new();
        for (cycle, bits) in candidates {
            if rings.len() == size {
                break;
            }
            let mut row = bits.clone();
            for (r, &p) in basis_rows.iter().zip(&pivots) {
                if row[p / 64] >> (p % 64) & 1 == 1 {
                    for (x, y) in row.iter_mut().zip(r) {
                        *x ^= y;
                    }
                }
            }
            if let Some(p) = (0..m).find(|&p| row[p / 64] >> (p % 64) & 1 == 1) {
                // keep rows reduced on the new pivot
                for r in basis_rows.iter_mut() {
                    if r[p / 64] >> (p % 64) & 1 == 1 {
                        for (x, y) in r.iter_mut().zip(&row) {
                            *x ^= y;
                        }
                    }
                }
                basis_rows.push(row);
                pivots.push(p);
                rings.push(cycle);
            }
        }
        rings
    }
}
