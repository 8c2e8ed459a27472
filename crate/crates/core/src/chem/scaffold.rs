use super::canon::canonical_key_any;
use super::molecule::Molecule;

/// Key returned for molecules without rings.
pub const ACYCLIC: &str = "ACYCLIC";

/// Ring systems plus linkers: non-ring atoms of degree one are removed
/// repeatedly until none remain. `None` when the molecule has no ring.
pub fn murcko_scaffold_graph(m: &Molecule) -> Option<Molecule> {
    if m.ring_count() == 0 {
        return None;
    }
    let n = m.num_atoms();
    let mut alive = vec![true; n];
    let mut degree: Vec<usize> = (0..n).map(|i| m.degree(i)).collect();
    loop {
        let strip: Vec<usize> = (0..n)
            .filter(|&i| alive[i] && !m.atom(i).in_ring && degree[i] <= 1)
            .collect();
        if strip.is_empty() {
            break;
        }
        for i in strip {
            alive[i] = false;
            for &(j, _) in m.neighbors(i) {
                if alive[j] {
                    degree[j] -= 1;
                }
            }
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
    Some(m.induced_subgraph(&keep))
}

pub fn murcko_scaffold(m: &Molecule) -> String {
    match murcko_scaffold_graph(m) {
        Some(s) => canonical_key_any(&s),
        None => ACYCLIC.to_string(),
    }
}
