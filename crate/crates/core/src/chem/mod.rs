//! Molecular graphs: SMILES reading, canonical keys, fingerprints, masses
//! and Murcko scaffolds.

mod canon;
mod element;
mod fingerprint;
mod molecule;
mod scaffold;
mod smiles;

use std::io::BufRead;

pub use canon::{canonical_key, canonical_ranks, canonical_smiles, CanonError};
pub use element::{Element, Isotope};
pub use fingerprint::{
    path_fingerprint, path_hash, path_tokens, Fingerprint, FINGERPRINT_BITS, FINGERPRINT_SEED, MAX_PATH_BONDS,
};
pub use molecule::{Atom, Bond, BondOrder, GraphError, Molecule};
pub use scaffold::{murcko_scaffold, murcko_scaffold_graph, ACYCLIC};
pub use smiles::{parse_smiles, parse_smiles_with_id, ParseError};

pub fn molecular_weight(m: &Molecule) -> f64 {
    m.molecular_weight()
}

pub fn monoisotopic_mass(m: &Molecule) -> f64 {
    m.monoisotopic_mass()
}

/// One corpus entry as read from disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusRecord {
    pub id: String,
    pub smiles: String,
    pub line: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: expected `id<TAB>SMILES`")]
    Format { line: usize },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: {source}")]
    Smiles { line: usize, source: ParseError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reads `id<TAB>SMILES` lines, skipping blanks and `#` comments.
pub fn read_corpus_records(reader: impl BufRead) -> Result<Vec<CorpusRecord>, CorpusError> {
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((id, smiles)) = trimmed.split_once('\t') else {
            return Err(CorpusError::Format { line: line_no });
        };
        let (id, smiles) = (id.trim(), smiles.trim());
        if id.is_empty() || smiles.is_empty() {
            return Err(CorpusError::Format { line: line_no });
        }
        if !seen.insert(id.to_string()) {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: id.to_string(),
            });
        }
        out.push(CorpusRecord {
            id: id.to_string(),
            smiles: smiles.to_string(),
            line: line_no,
        });
    }
    Ok(out)
}

/// Reads and parses a corpus, failing on the first bad record.
pub fn read_corpus(reader: impl BufRead) -> Result<Vec<Molecule>, CorpusError> {
    read_corpus_records(reader)?
        .into_iter()
        .map(|r| parse_smiles_with_id(&r.smiles, &r.id).map_err(|source| CorpusError::Smiles { line: r.line, source }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masses() {
        let methane = parse_smiles("C").unwrap();
        assert!((molecular_weight(&methane) - 16.04).abs() < 0.01);
        let benzene = parse_smiles("c1ccccc1").unwrap();
        assert!((molecular_weight(&benzene) - 78.11).abs() < 0.01);
        assert!((monoisotopic_mass(&benzene) - 78.0470).abs() < 0.0005);
        let bare = parse_smiles("[C]").unwrap();
        assert!((molecular_weight(&bare) - 12.011).abs() < 0.001);
        assert_eq!(monoisotopic_mass(&bare), 12.0);
        let methanol = parse_smiles("CO").unwrap();
        assert!((monoisotopic_mass(&methanol) - 32.0262).abs() < 0.0005);
    }

    #[test]
    fn corpus_reader() {
        let text = "# header\nm1\tCCO\n\nm2\tc1ccccc1\n";
        let mols = read_corpus(text.as_bytes()).unwrap();
        assert_eq!(mols.len(), 2);
        assert_eq!(mols[1].id, "m2");
        assert!(matches!(
            read_corpus("m1 CCO\n".as_bytes()),
            Err(CorpusError::Format { line: 1 })
        ));
        assert!(matches!(
            read_corpus("a\tCC\na\tCO\n".as_bytes()),
            Err(CorpusError::DuplicateId { line: 2, .. })
        ));
        assert!(matches!(
            read_corpus("a\tCC\nb\tC(\n".as_bytes()),
            Err(CorpusError::Smiles { line: 2, .. })
        ));
    }
}
