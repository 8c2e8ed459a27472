//! Deterministic pseudo-spectra computed from structure, and the bundled
//! 64-molecule fixture built from them.
//!
//! A pseudo-spectrum holds the molecular ion with its isotope satellites,
//! one peak per single-bond cleavage fragment, and characteristic ions for
//! common groups (phenyl 77/51, tropylium 91, benzoyl 105, acylium 43,
//! iminium 30, oxonium 31, halogen isotopes and so on). It is not a
//! physical model; it gives training targets whose peaks depend on
//! substructures the way electron-ionization spectra do.

use std::collections::BTreeMap;

use crate::chem::{read_corpus, BondOrder, Element, Molecule};
use crate::model::MoMSConfig;
use crate::motif_spectra::{cleavage_fragments, isotope_pattern};
use crate::spectra::{Peak, PeakList, BASEPEAK_HEIGHT};

pub const FIXTURE_CORPUS: &str = include_str!("../fixtures/fixture64.tsv");
pub const FIXTURE_MSP: &str = include_str!("../fixtures/fixture64.msp");

/// Peaks below this height (on the 999 basepeak scale) are dropped.
const MIN_HEIGHT: f64 = 0.5;

pub fn fixture_corpus() -> Vec<Molecule> {
    read_corpus(FIXTURE_CORPUS.as_bytes()).expect("bundled corpus parses")
}

pub fn fixture_spectra() -> Vec<PeakList> {
    fixture_corpus().iter().map(pseudo_spectrum).collect()
}

/// Training settings sized for the fixture: a narrower network and a lower
/// learning rate than the defaults, which target larger libraries.
pub fn fixture_config() -> MoMSConfig {
    MoMSConfig {
        hidden: 64,
        lr: 1e-4,
        batch_size: 8,
        epochs: 500,
        patience: 50,
        ..MoMSConfig::default()
    }
}

fn is_sp3_carbon(m: &Molecule, i: usize) -> bool {
    let a = m.atom(i);
    a.element == Element::C
        && !a.aromatic
        && m.neighbors(i)
            .iter()
            .all(|&(_, b)| m.bonds()[b].order == BondOrder::Single)
}

fn carbonyl_oxygen(m: &Molecule, c: usize) -> bool {
    m.atom(c).element == Element::C
        && !m.atom(c).aromatic
        && m.neighbors(c)
            .iter()
            .any(|&(o, b)| m.atom(o).element == Element::O && m.bonds()[b].order == BondOrder::Double)
}

fn nbrs(m: &Molecule, i: usize) -> impl Iterator<Item = usize> + '_ {
    m.neighbors(i).iter().map(|e| e.0)
}

fn group_ions(m: &Molecule) -> BTreeMap<usize, f64> {
    let mut ions = BTreeMap::new();
    let mut add = |mz: usize, x: f64| *ions.entry(mz).or_insert(0.0) += x;
    let el = |i: usize| m.atom(i).element;

    let benzene: Vec<&Vec<usize>> = m
        .rings()
        .iter()
        .filter(|r| r.len() == 6 && r.iter().all(|&i| m.atom(i).aromatic && el(i) == Element::C))
        .collect();
    if !benzene.is_empty() {
        add(77, 0.8);
        add(51, 0.35);
        add(50, 0.15);
        let ring_atoms: Vec<usize> = benzene.iter().flat_map(|r| r.iter().copied()).collect();
        let substituent = |pred: &dyn Fn(usize) -> bool| {
            ring_atoms
                .iter()
                .any(|&i| nbrs(m, i).any(|j| !m.atom(j).in_ring && pred(j)))
        };
        if substituent(&|j| is_sp3_carbon(m, j)) {
            add(91, 1.0);
            add(65, 0.3);
        }
        if substituent(&|j| carbonyl_oxygen(m, j)) {
            add(105, 1.0);
        }
    }
    for r in m.rings() {
        let aromatic = r.iter().all(|&i| m.atom(i).aromatic);
        let hetero: Vec<Element> = r.iter().map(|&i| el(i)).filter(|e| *e != Element::C).collect();
        match (aromatic, r.len(), hetero.first()) {
            (true, 6, Some(Element::N)) => {
                add(52, 0.4);
                add(51, 0.2);
            }
            (true, 5, Some(Element::O)) => {
                add(39, 0.6);
                add(29, 0.2);
            }
            (true, 5, Some(Element::S)) => {
                add(45, 0.5);
                add(58, 0.3);
            }
            (true, 5, Some(Element::N)) => {
                add(39, 0.4);
                add(28, 0.3);
            }
            (false, 6, _) => {
                add(55, 0.6);
                add(41, 0.5);
                add(67, 0.3);
            }
            (false, 5, _) => {
                add(42, 0.5);
                add(41, 0.4);
                add(39, 0.3);
            }
            _ => {}
        }
    }

    let mut chain_carbons = 0;
    for i in 0..m.num_atoms() {
        let a = m.atom(i);
        match a.element {
            Element::C if is_sp3_carbon(m, i) && !a.in_ring => chain_carbons += 1,
            Element::C if carbonyl_oxygen(m, i) && !a.in_ring => {
                let methyl = nbrs(m, i).any(|j| el(j) == Element::C && m.atom(j).total_h() == 3);
                add(if methyl { 43 } else { 29 }, if methyl { 1.0 } else { 0.4 });
                for j in nbrs(m, i) {
                    if el(j) != Element::O || m.bond_between(i, j).unwrap().order != BondOrder::Single {
                        continue;
                    }
                    if m.atom(j).total_h() > 0 {
                        add(45, 0.6);
                        let chain = nbrs(m, i).filter(|&k| is_sp3_carbon(m, k)).count();
                        if chain > 0 && m.num_atoms() >= 5 {
                            add(60, 0.8);
                        }
                    } else if nbrs(m, j).any(|k| k != i && m.atom(k).total_h() == 3) {
                        add(59, 0.3);
                        add(31, 0.2);
                    }
                }
            }
            Element::O if !a.aromatic => {
                let carbons: Vec<usize> = nbrs(m, i).filter(|&j| is_sp3_carbon(m, j)).collect();
                if a.total_h() > 0 && carbons.len() == 1 {
                    let primary = m.atom(carbons[0]).total_h() >= 2;
                    add(if primary { 31 } else { 45 }, if primary { 0.8 } else { 0.6 });
                } else if carbons.len() == 2 {
                    add(45, 0.4);
                    add(31, 0.3);
                }
            }
            Element::N if !a.aromatic => {
                let carbons: Vec<usize> = nbrs(m, i).filter(|&j| is_sp3_carbon(m, j)).collect();
                if a.in_ring {
                    add(30, 0.4);
                    add(44, 0.3);
                } else if a.total_h() > 0 && carbons.len() == 1 {
                    let primary = m.atom(carbons[0]).total_h() >= 2;
                    add(if primary { 30 } else { 44 }, if primary { 1.0 } else { 0.6 });
                } else if m.degree(i) == 1
                    && nbrs(m, i).all(|j| m.bond_between(i, j).unwrap().order == BondOrder::Triple)
                {
                    add(41, 0.8);
                    add(40, 0.4);
                }
            }
            Element::S if !a.aromatic && a.total_h() > 0 => {
                add(47, 0.6);
                add(34, 0.2);
            }
            Element::Cl => {
                add(35, 0.3);
                add(37, 0.1);
            }
            Element::Br => {
                add(79, 0.3);
                add(81, 0.3);
            }
            _ => {}
        }
    }
    for (n, mz, x) in [
        (1, 15, 0.15),
        (2, 29, 0.5),
        (2, 27, 0.35),
        (3, 43, 0.7),
        (3, 41, 0.4),
        (4, 57, 0.8),
        (5, 71, 0.4),
        (6, 85, 0.2),
    ] {
        if chain_carbons >= n {
            add(mz, x);
        }
    }
    ions
}

/// Losses from the molecular ion: water from alcohols and acids, halogen
/// radicals.
fn neutral_losses(m: &Molecule) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let has = |e: Element| m.atoms().iter().any(|a| a.element == e);
    if m.atoms()
        .iter()
        .enumerate()
        .any(|(i, a)| a.element == Element::O && a.total_h() > 0 && !nbrs(m, i).any(|j| m.atom(j).aromatic))
    {
        out.push((18, 0.3));
    }
    if has(Element::Cl) {
        out.push((35, 0.5));
    }
    if has(Element::Br) {
        out.push((79, 0.8));
    }
    if m.atoms()
        .iter()
        .any(|a| a.element == Element::N && a.in_ring && !a.aromatic)
    {
        out.push((1, 0.5));
    }
    out
}

pub fn pseudo_spectrum(m: &Molecule) -> PeakList {
    let mut peaks: BTreeMap<usize, f64> = BTreeMap::new();
    let mut add = |mz: usize, x: f64| *peaks.entry(mz).or_insert(0.0) += x;
    let ion = m.monoisotopic_mass().round() as usize;
    let base = if m.atoms().iter().any(|a| a.aromatic) { 0.7 } else { 0.2 };
    for (shift, rel) in isotope_pattern(m, 3) {
        add(ion + shift, base * rel);
    }
    let heavy = m.heavy_atom_count() as f64;
    for f in cleavage_fragments(m) {
        let share = f.heavy_atom_count() as f64 / heavy;
        add(f.monoisotopic_mass().round() as usize, 0.1 + 0.3 * share);
    }
    for (loss, x) in neutral_losses(m) {
        if ion > loss + 1 {
            add(ion - loss, x);
        }
    }
    for (mz, x) in group_ions(m) {
        if mz <= ion {
            add(mz, x);
        }
    }
    let top = peaks.values().copied().fold(0.0, f64::max);
    let list: Vec<Peak> = peaks
        .into_iter()
        .map(|(mz, x)| Peak {
            mz: mz as f64,
            intensity: (x / top * BASEPEAK_HEIGHT * 100.0).round() / 100.0,
        })
        .filter(|p| p.intensity >= MIN_HEIGHT)
        .collect();
    let mut out = PeakList::new(list).expect("valid peaks");
    out.name = Some(m.id.clone());
    out.compound_id = Some(m.id.clone());
    out.precursor_mz = Some(m.monoisotopic_mass());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles_with_id;
    use crate::spectra::{parse_msp, write_msp};

    fn peaks(smiles: &str) -> BTreeMap<usize, f64> {
        let p = pseudo_spectrum(&parse_smiles_with_id(smiles, "x").unwrap());
        p.peaks().iter().map(|p| (p.mz as usize, p.intensity)).collect()
    }

    #[test]
    fn characteristic_ions() {
        let toluene = peaks("Cc1ccccc1");
        assert!(toluene[&91] > 800.0);
        assert!(toluene.contains_key(&92) && toluene.contains_key(&77));
        let acetone = peaks("CC(=O)C");
        assert_eq!(acetone[&43], 999.0);
        let ethylamine = peaks("CCN");
        assert!(ethylamine[&30] > 500.0);
        let chloro = peaks("CCCl");
        assert!(chloro.contains_key(&35) && chloro.contains_key(&37));
        assert!(peaks("c1ccccc1").keys().all(|&k| k <= 81));
    }

    #[test]
    fn bundled_fixture_is_current() {
        let corpus = fixture_corpus();
        assert_eq!(corpus.len(), 64);
        let spectra = fixture_spectra();
        assert_eq!(write_msp(&spectra), FIXTURE_MSP);
        let back = parse_msp(FIXTURE_MSP.as_bytes()).unwrap();
        assert_eq!(back.len(), 64);
        assert!(back.iter().zip(&corpus).all(|(p, m)| p.key() == Some(m.id.as_str())));
    }

    /// Rewrites the bundled MSP after a generator change.
    #[test]
    #[ignore]
    fn write_bundled_fixture() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/fixture64.msp");
        std::fs::write(path, write_msp(&fixture_spectra())).unwrap();
    }
}
