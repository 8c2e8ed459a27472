use super::molecule::Molecule;

pub const FINGERPRINT_BITS: usize = 2048;
pub const FINGERPRINT_SEED: u64 = 0x5D;
pub const MAX_PATH_BONDS: usize = 7;

/// Hashed linear-path fingerprint, fixed at [`FINGERPRINT_BITS`] bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: [u64; FINGERPRINT_BITS / 64],
}

impl Default for Fingerprint {
    fn default() -> Self {
        Fingerprint {
            words: [0; FINGERPRINT_BITS / 64],
        }
    }
}

impl Fingerprint {
    pub fn len(&self) -> usize {
        FINGERPRINT_BITS
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn n_bits_set(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn on_bits(&self) -> Vec<usize> {
        (0..FINGERPRINT_BITS).filter(|&b| self.get(b)).collect()
    }

    /// Bits as 0/1 reals, the form consumed by the network.
    pub fn to_dense(&self) -> Vec<f64> {
        (0..FINGERPRINT_BITS).map(|b| self.get(b) as u8 as f64).collect()
    }

    pub fn tanimoto(&self, other: &Fingerprint) -> f64 {
        let inter: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        let union: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a | b).count_ones())
            .sum();
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seeded 64-bit hash of a token sequence. Platform independent.
pub fn path_hash(tokens: &[u64]) -> u64 {
    let mut h = splitmix64(FINGERPRINT_SEED);
    for &t in tokens {
        h = splitmix64(h ^ t);
    }
    h
}

/// Token sequence of a path given as atom indices: atom, bond, atom, ...
/// using the lexicographically smaller of the two traversal directions.
pub fn path_tokens(mol: &Molecule, path: &[usize]) -> Vec<u64> {
    let encode = |p: &mut dyn Iterator<Item = usize>| -> Vec<u64> {
        let atoms: Vec<usize> = p.collect();
        let mut out = Vec::with_capacity(atoms.len() * 2);
        for (k, &a) in atoms.iter().enumerate() {
            if k > 0 {
                let bond = mol.bond_between(atoms[k - 1], a).expect("path follows bonds");
                out.push(100 + bond.order.code() as u64);
            }
            out.push(mol.atom(a).element.atomic_number() as u64);
        }
        out
    };
    let forward = encode(&mut path.iter().copied());
    let backward = encode(&mut path.iter().rev().copied());
    forward.min(backward)
}

pub fn path_fingerprint(mol: &Molecule) -> Fingerprint {
    let mut fp = Fingerprint::default();
    let mut path = Vec::with_capacity(MAX_PATH_BONDS + 1);
    let mut on_path = vec![false; mol.num_atoms()];
    for start in 0..mol.num_atoms() {
        path.push(start);
        on_path[start] = true;
        extend(mol, &mut path, &mut on_path, &mut fp);
        on_path[start] = false;
        path.pop();
    }
    fp
}

fn extend(mol: &Molecule, path: &mut Vec<usize>, on_path: &mut [bool], fp: &mut Fingerprint) {
    if path.len() > 1 {
        // each path is reached from both ends; record it once
        if path[0] < path[path.len() - 1] {
            let h = path_hash(&path_tokens(mol, path));
            fp.set((h % FINGERPRINT_BITS as u64) as usize);
        }
    }
    if path.len() == MAX_PATH_BONDS + 1 {
        return;
    }
    let last = *path.last().unwrap();
    for &(next, _) in mol.neighbors(last) {
        if on_path[next] {
            continue;
        }
        on_path[next] = true;
        path.push(next);
        extend(mol, path, on_path, fp);
        path.pop();
        on_path[next] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn methane_has_no_bits() {
        assert_eq!(path_fingerprint(&parse_smiles("C").unwrap()).n_bits_set(), 0);
    }

    #[test]
    fn reindexing_invariant() {
        let a = path_fingerprint(&parse_smiles("CCO").unwrap());
        let b = path_fingerprint(&parse_smiles("OCC").unwrap());
        assert_eq!(a, b);
        assert!(a.n_bits_set() > 0 && a.n_bits_set() <= 3);
    }

    #[test]
    fn similarity_of_related_molecules() {
        let a = path_fingerprint(&parse_smiles("CCCCO").unwrap());
        let b = path_fingerprint(&parse_smiles("CCCCCO").unwrap());
        let c = path_fingerprint(&parse_smiles("c1ccccc1Cl").unwrap());
        assert!(a.tanimoto(&b) > a.tanimoto(&c));
        assert_eq!(a.tanimoto(&a), 1.0);
    }
}
