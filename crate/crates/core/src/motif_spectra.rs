//! Reference spectra for motifs: a molecular-ion peak with its isotope
//! satellites plus peaks for the pieces left by single-bond cleavage.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use log::warn;
use rayon::prelude::*;

use crate::chem::{canonical_key, Element, Molecule};
use crate::motif::MotifVocabulary;
use crate::spectra::{normalize, NormMode, Spectrum, SpectrumError};

/// Highest isotope shift (in nominal mass units) kept in a pattern.
pub const MAX_ISOTOPE_SHIFT: usize = 3;
/// Height of each cleavage-fragment peak relative to the molecular ion.
pub const FRAGMENT_INTENSITY: f64 = 0.3;
/// Number of cleavage fragments kept, heaviest first.
pub const MAX_FRAGMENTS: usize = 8;

/// Isotope masses and abundances per element.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotopeTable {
    entries: Vec<(Element, Vec<(f64, f64)>)>,
}

impl IsotopeTable {
    pub fn standard() -> IsotopeTable {
        IsotopeTable {
            entries: Element::ALL
                .iter()
                .map(|&e| (e, e.isotopes().iter().map(|i| (i.mass, i.abundance)).collect()))
                .collect(),
        }
    }

    pub fn get(&self, e: Element) -> &[(f64, f64)] {
        &self.entries.iter().find(|(x, _)| *x == e).unwrap().1
    }

    /// Abundances lie in [0, 1] and sum to 1 within 1e-6 for every element.
    pub fn is_valid(&self) -> bool {
        self.entries.iter().all(|(_, isos)| {
            isos.iter().all(|&(_, a)| (0.0..=1.0).contains(&a))
                && (isos.iter().map(|&(_, a)| a).sum::<f64>() - 1.0).abs() <= 1e-6
        })
    }
}

/// Isotope distribution of one atom type: nominal offsets from the most
/// abundant isotope with their abundances.
pub type ShiftDistribution = Vec<(i32, f64)>;

fn shift_distribution(e: Element) -> ShiftDistribution {
    let main = e.most_abundant().mass_number as i32;
    e.isotopes()
        .iter()
        .map(|i| (i.mass_number as i32 - main, i.abundance))
        .collect()
}

/// Convolves `count` copies of each distribution and reports relative
/// abundances at shifts `0..=max_shift`, scaled so shift 0 is 1. Shifts
/// with zero abundance are omitted.
pub fn isotope_pattern_from(atoms: &[(usize, ShiftDistribution)], max_shift: usize) -> Vec<(usize, f64)> {
    let max = max_shift as i32;
    let mut dist: BTreeMap<i32, f64> = BTreeMap::from([(0, 1.0)]);
    for (count, d) in atoms {
        for _ in 0..*count {
            let mut next: BTreeMap<i32, f64> = BTreeMap::new();
            for (&s, &p) in &dist {
                for &(ds, dp) in d {
                    let t = s + ds;
                    if t <= max && dp > 0.0 {
                        *next.entry(t).or_default() += p * dp;
                    }
                }
            }
            dist = next;
        }
    }
    let base = dist.get(&0).copied().unwrap_or(0.0);
    (0..=max)
        .filter_map(|s| {
            let p = dist.get(&s).copied().unwrap_or(0.0);
            (p > 0.0 && base > 0.0).then_some((s as usize, p / base))
        })
        .collect()
}

pub fn isotope_pattern(m: &Molecule, max_shift: usize) -> Vec<(usize, f64)> {
    let counts = m.element_counts();
    let atoms: Vec<(usize, ShiftDistribution)> = Element::ALL
        .iter()
        .zip(counts)
        .filter(|(_, c)| *c > 0)
        .map(|(&e, c)| (c as usize, shift_distribution(e)))
        .collect();
    isotope_pattern_from(&atoms, max_shift)
}

/// Both sides of every acyclic single bond, hydrogen counts inherited from
/// the parent, deduplicated by canonical key and limited to the
/// [`MAX_FRAGMENTS`] heaviest.
pub fn cleavage_fragments(m: &Molecule) -> Vec<Molecule> {
    let mut seen = HashSet::new();
    let mut found: Vec<(f64, String, Molecule)> = Vec::new();
    for (bi, bond) in m.bonds().iter().enumerate() {
        if bond.in_ring || bond.order != crate::chem::BondOrder::Single {
            continue;
        }
        for start in [bond.a, bond.b] {
            let side = side_of_cut(m, bi, start);
            let frag = m.induced_subgraph(&side);
            let key = canonical_key(&frag).expect("one side of a cut is connected");
            if seen.insert(key.clone()) {
                found.push((frag.monoisotopic_mass(), key, frag));
            }
        }
    }
    found.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    found.truncate(MAX_FRAGMENTS);
    found.into_iter().map(|(_, _, f)| f).collect()
}

fn side_of_cut(m: &Molecule, cut: usize, start: usize) -> Vec<usize> {
    let mut seen = vec![false; m.num_atoms()];
    let mut stack = vec![start];
    seen[start] = true;
    let mut out = Vec::new();
    while let Some(v) = stack.pop() {
        out.push(v);
        for &(w, bi) in m.neighbors(v) {
            if bi != cut && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotifSpectrum {
    pub key: String,
    pub spectrum: Spectrum,
}

/// Molecular ion (1.0) with isotope satellites and cleavage fragments
/// ([`FRAGMENT_INTENSITY`]), then L2-normalized.
pub fn build_motif_spectrum(motif: &Molecule, m_max: usize) -> Result<MotifSpectrum, SpectrumError> {
    let mono = motif.monoisotopic_mass();
    let ion = mono.round();
    if ion < 1.0 || ion > m_max as f64 {
        return Err(SpectrumError::OutOfRange { mz: mono, m_max });
    }
    let ion = ion as usize;
    let mut bins = vec![0.0; m_max];
    for (shift, rel) in isotope_pattern(motif, MAX_ISOTOPE_SHIFT) {
        if ion + shift <= m_max {
            bins[ion + shift - 1] += rel;
        }
    }
    for frag in cleavage_fragments(motif) {
        let k = frag.monoisotopic_mass().round() as usize;
        if (1..=m_max).contains(&k) {
            bins[k - 1] += FRAGMENT_INTENSITY;
        }
    }
    let spectrum = normalize(&Spectrum::from_bins(bins), NormMode::L2)?;
    Ok(MotifSpectrum {
        key: motif.id.clone(),
        spectrum,
    })
}

/// Row-major |V| x m_max matrix of motif spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct MotifSpectrumMatrix {
    rows: usize,
    m_max: usize,
    data: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum MatrixIoError {
    #[error("truncated motif spectrum blob")]
    Truncated,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl MotifSpectrumMatrix {
    pub fn zeros(rows: usize, m_max: usize) -> Self {
        MotifSpectrumMatrix {
            rows,
            m_max,
            data: vec![0.0; rows * m_max],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m_max..(i + 1) * self.m_max]
    }

    /// `counts`-weighted sum of rows, L2-normalized; zero when no motif
    /// occurs.
    pub fn weighted_prior(&self, counts: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m_max];
        for (i, &c) in counts.iter().enumerate() {
            if c != 0.0 {
                for (o, &x) in out.iter_mut().zip(self.row(i)) {
                    *o += c * x;
                }
            }
        }
        let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.iter_mut().for_each(|x| *x /= norm);
        }
        out
    }

    /// Little-endian blob: u32 rows, u32 m_max, then f32 row-major data.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(&(self.rows as u32).to_le_bytes())?;
        w.write_all(&(self.m_max as u32).to_le_bytes())?;
        for &x in &self.data {
            w.write_all(&(x as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self, MatrixIoError> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() < 8 {
            return Err(MatrixIoError::Truncated);
        }
        let rows = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
        let m_max = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let body = &bytes[8..];
        if body.len() != rows * m_max * 4 {
            return Err(MatrixIoError::Truncated);
        }
        let data = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        Ok(MotifSpectrumMatrix { rows, m_max, data })
    }
}

/// One row per vocabulary motif. Motifs that do not fit in `m_max` get a
/// zero row. Values are rounded to f32, the precision of the stored blob.
pub fn motif_spectrum_matrix(vocab: &MotifVocabulary, m_max: usize) -> MotifSpectrumMatrix {
    let rows: Vec<Vec<f64>> = vocab
        .entries()
        .par_iter()
        .map(|m| match build_motif_spectrum(&m.molecule, m_max) {
            Ok(s) => s.spectrum.bins().iter().map(|&x| x as f32 as f64).collect(),
            Err(e) => {
                warn!("motif {}: {e}; using a zero row", m.key);
                vec![0.0; m_max]
            }
        })
        .collect();
    MotifSpectrumMatrix {
        rows: rows.len(),
        m_max,
        data: rows.concat(),
    }
}
