//! Canonical atom ordering and canonical SMILES keys.
//!
//! Colors are refined Weisfeiler-Lehman style; remaining ties are broken by
//! exhaustive individualization, keeping the ordering whose graph certificate
//! is lexicographically smallest. The key is the SMILES written from that
//! ordering, so isomorphic graphs yield identical strings.

use std::collections::BTreeMap;

use super::element::Element;
use super::molecule::{BondOrder, Molecule};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CanonError {
    #[error("fragment is not connected ({0} components)")]
    DisconnectedFragment(usize),
}

fn atom_invariant(mol: &Molecule, i: usize) -> u32 {
    let a = mol.atom(i);
    (a.element.atomic_number() as u32) * 1000 + ((a.formal_charge as i32 + 16) as u32) * 2 + a.aromatic as u32
}

/// Replaces each value by its rank among the distinct values.
fn rank<T: Ord + Clone>(keys: &[T]) -> Vec<u32> {
    let mut distinct: Vec<T> = keys.to_vec();
    distinct.sort();
    distinct.dedup();
    keys.iter().map(|k| distinct.binary_search(k).unwrap() as u32).collect()
}

fn class_count(colors: &[u32]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

fn refine(mol: &Molecule, mut colors: Vec<u32>) -> Vec<u32> {
    let mut classes = class_count(&colors);
    loop {
        let signatures: Vec<(u32, Vec<(u8, u32)>)> = (0..mol.num_atoms())
            .map(|i| {
                let mut nbrs: Vec<(u8, u32)> = mol
                    .neighbors(i)
                    .iter()
                    .map(|&(j, bi)| (mol.bonds()[bi].order.code(), colors[j]))
                    .collect();
                nbrs.sort_unstable();
                (colors[i], nbrs)
            })
            .collect();
        let next = rank(&signatures);
        let next_classes = class_count(&next);
        colors = next;
        if next_classes == classes {
            return colors;
        }
        classes = next_classes;
    }
}

fn certificate(mol: &Molecule, invariants: &[u32], colors: &[u32]) -> Vec<u32> {
    let n = mol.num_atoms();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| colors[i]);
    let mut cert: Vec<u32> = order.iter().map(|&i| invariants[i]).collect();
    let mut edges: Vec<(u32, u32, u32)> = mol
        .bonds()
        .iter()
        .map(|b| {
            let (x, y) = (colors[b.a], colors[b.b]);
            (x.min(y), x.max(y), b.order.code() as u32)
        })
        .collect();
    edges.sort_unstable();
    for (x, y, o) in edges {
        cert.extend([x, y, o]);
    }
    cert
}

fn search(mol: &Molecule, invariants: &[u32], colors: Vec<u32>, best: &mut Option<(Vec<u32>, Vec<u32>)>) {
    let colors = refine(mol, colors);
    let n = colors.len();
    let mut sizes: BTreeMap<u32, usize> = BTreeMap::new();
    for &c in &colors {
        *sizes.entry(c).or_default() += 1;
    }
    let Some((&cell, _)) = sizes.iter().find(|(_, &s)| s > 1) else {
        let cert = certificate(mol, invariants, &colors);
        if best.as_ref().is_none_or(|(b, _)| cert < *b) {
            *best = Some((cert, colors));
        }
        return;
    };
    for v in 0..n {
        if colors[v] != cell {
            continue;
        }
        let split: Vec<(u32, u32)> = colors
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, (c == cell && i != v) as u32))
            .collect();
        search(mol, invariants, rank(&split), best);
    }
}

/// Canonical rank of every atom: `result[i]` is the position of atom `i`.
pub fn canonical_ranks(mol: &Molecule) -> Vec<usize> {
    if mol.num_atoms() == 0 {
        return Vec::new();
    }
    let invariants: Vec<u32> = (0..mol.num_atoms()).map(|i| atom_invariant(mol, i)).collect();
    let mut best = None;
    search(mol, &invariants, rank(&invariants), &mut best);
    let (_, colors) = best.unwrap();
    colors.into_iter().map(|c| c as usize).collect()
}

/// Key identifying a connected fragment up to isomorphism of element,
/// charge, aromaticity and bond order. Hydrogen counts are ignored.
pub fn canonical_key(fragment: &Molecule) -> Result<String, CanonError> {
    let comps = fragment.components();
    if comps.len() > 1 {
        return Err(CanonError::DisconnectedFragment(comps.len()));
    }
    Ok(write_smiles(fragment, &canonical_ranks(fragment), false))
}

/// Canonical SMILES that re-parses to the same hydrogen counts for charged
/// and aromatic-NH atoms. Disconnected inputs are written as sorted
/// `.`-separated components.
pub fn canonical_smiles(mol: &Molecule) -> String {
    let comps = mol.components();
    if comps.len() <= 1 {
        return write_smiles(mol, &canonical_ranks(mol), true);
    }
    let mut parts: Vec<String> = comps
        .iter()
        .map(|c| {
            let sub = mol.induced_subgraph(c);
            write_smiles(&sub, &canonical_ranks(&sub), true)
        })
        .collect();
    parts.sort();
    parts.join(".")
}

/// Same as [`canonical_key`] but accepts disconnected graphs.
pub(crate) fn canonical_key_any(mol: &Molecule) -> String {
    let comps = mol.components();
    if comps.len() <= 1 {
        return write_smiles(mol, &canonical_ranks(mol), false);
    }
    let mut parts: Vec<String> = comps
        .iter()
        .map(|c| {
            let sub = mol.induced_subgraph(c);
            write_smiles(&sub, &canonical_ranks(&sub), false)
        })
        .collect();
    parts.sort();
    parts.join(".")
}

fn atom_token(mol: &Molecule, i: usize, hydrogens: bool) -> String {
    let a = mol.atom(i);
    let sym = if a.aromatic {
        a.element.symbol().to_ascii_lowercase()
    } else {
        a.element.symbol().to_string()
    };
    let aromatic_nh = a.aromatic && a.total_h() > 0 && a.element != Element::C && a.element != Element::B;
    let needs_bracket = a.formal_charge != 0 || !a.element.is_organic_subset() || (hydrogens && aromatic_nh);
    if !needs_bracket {
        return sym;
    }
    let mut out = format!("[{sym}");
    if hydrogens {
        match a.total_h() {
            0 => {}
            1 => out.push('H'),
            h => out.push_str(&format!("H{h}")),
        }
    }
    match a.formal_charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => out.push_str(&format!("+{c}")),
        c => out.push_str(&format!("-{}", -c)),
    }
    out.push(']');
    out
}

fn bond_token(mol: &Molecule, a: usize, b: usize, order: BondOrder) -> &'static str {
    let both_aromatic = mol.atom(a).aromatic && mol.atom(b).aromatic;
    match order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Aromatic if both_aromatic => "",
        BondOrder::Aromatic => ":",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
    }
}

fn ring_label(n: usize) -> String {
    if n < 10 {
        n.to_string()
    } else {
        format!("%{n:02}")
    }
}

/// Writes one connected component (or all components joined by `.`) using
/// `ranks` to choose the root and neighbor visiting order.
pub(crate) fn write_smiles(mol: &Molecule, ranks: &[usize], hydrogens: bool) -> String {
    let n = mol.num_atoms();
    let mut visited = vec![false; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    // ring-closure partners per atom, in the order they are written
    let mut closures: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut roots = Vec::new();

    let mut atoms_by_rank: Vec<usize> = (0..n).collect();
    atoms_by_rank.sort_by_key(|&i| ranks[i]);
    for &root in &atoms_by_rank {
        if visited[root] {
            continue;
        }
        roots.push(root);
        // iterative DFS: (atom, parent)
        let mut stack = vec![(root, usize::MAX)];
        while let Some((v, parent)) = stack.pop() {
            if visited[v] {
                continue;
            }
            visited[v] = true;
            if parent != usize::MAX {
                children[parent].push(v);
            }
            let mut nbrs: Vec<usize> = mol.neighbors(v).iter().map(|&(w, _)| w).collect();
            nbrs.sort_by_key(|&w| std::cmp::Reverse(ranks[w]));
            for w in nbrs {
                if !visited[w] {
                    stack.push((w, v));
                }
            }
        }
    }
    // non-tree bonds become ring closures
    let mut tree_parent = vec![usize::MAX; n];
    for (p, cs) in children.iter().enumerate() {
        for &c in cs {
            tree_parent[c] = p;
        }
    }
    for b in mol.bonds() {
        if tree_parent[b.a] == b.b || tree_parent[b.b] == b.a {
            continue;
        }
        closures[b.a].push(b.b);
        closures[b.b].push(b.a);
    }
    for list in &mut closures {
        list.sort_by_key(|&w| ranks[w]);
    }

    let mut out = String::new();
    let mut digit_of: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut free_digits: Vec<bool> = vec![true; 100];
    free_digits[0] = false;
    for (ri, &root) in roots.iter().enumerate() {
        if ri > 0 {
            out.push('.');
        }
        // explicit stack of write actions
        enum Step {
            Atom(usize, usize),
            Open,
            Close,
        }
        let mut steps = vec![Step::Atom(root, usize::MAX)];
        while let Some(step) = steps.pop() {
            match step {
                Step::Open => out.push('('),
                Step::Close => out.push(')'),
                Step::Atom(v, parent) => {
                    if parent != usize::MAX {
                        let order = mol.bond_between(parent, v).unwrap().order;
                        out.push_str(bond_token(mol, parent, v, order));
                    }
                    out.push_str(&atom_token(mol, v, hydrogens));
                    for &w in &closures[v] {
                        let key = (v.min(w), v.max(w));
                        if let Some(d) = digit_of.remove(&key) {
                            let order = mol.bond_between(v, w).unwrap().order;
                            out.push_str(bond_token(mol, v, w, order));
                            out.push_str(&ring_label(d));
                            free_digits[d] = true;
                        } else {
                            let d = free_digits.iter().position(|&f| f).expect("ring digits exhausted");
                            free_digits[d] = false;
                            digit_of.insert(key, d);
                            out.push_str(&ring_label(d));
                        }
                    }
                    let kids = &children[v];
                    // push in reverse so the first child is written first
                    for (k, &c) in kids.iter().enumerate().rev() {
                        let last = k + 1 == kids.len();
                        if last {
                            steps.push(Step::Atom(c, v));
                        } else {
                            steps.push(Step::Close);
                            steps.push(Step::Atom(c, v));
                            steps.push(Step::Open);
                        }
                    }
                }
            }
        }
    }
    out
}
