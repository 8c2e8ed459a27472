//! Reader for the SMILES subset used by spectral libraries: organic-subset and
//! bracket atoms, branches, ring closures (`1`-`9`, `%nn`), bond symbols and
//! lowercase aromatic atoms. Stereo marks are accepted and dropped.

use std::collections::BTreeMap;

use log::warn;

use super::element::Element;
use super::molecule::{Atom, BondOrder, Molecule};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("valence error on atom {atom}: {message}")]
    Valence { atom: usize, message: String },
}

fn syntax<T>(position: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Syntax {
        position,
        message: message.into(),
    })
}

struct Reader<'a> {
    text: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<(usize, usize, Option<BondOrder>)>,
    /// ring number -> (atom, bond symbol written at the opening, position)
    open_rings: BTreeMap<u32, (usize, Option<BondOrder>, usize)>,
    saw_stereo: bool,
}

pub fn parse_smiles(text: &str) -> Result<Molecule, ParseError> {
    parse_smiles_with_id(text, "")
}

pub fn parse_smiles_with_id(text: &str, id: &str) -> Result<Molecule, ParseError> {
    let text = text.trim();
    if text.is_empty() {
        return syntax(0, "empty SMILES");
    }
    let mut reader = Reader {
        text: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        open_rings: BTreeMap::new(),
        saw_stereo: false,
    };
    reader.read()?;
    if reader.saw_stereo {
        warn!("stereo marks ignored in {text:?}");
    }
    reader.finish(id)
}

impl<'a> Reader<'a> {
    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn read(&mut self) -> Result<(), ParseError> {
        let mut prev: Option<usize> = None;
        let mut branch_stack: Vec<Option<usize>> = Vec::new();
        let mut pending_bond: Option<BondOrder> = None;
        let mut pending_pos = 0;
        let mut dot_pending = false;

        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'(' => {
                    if prev.is_none() {
                        return syntax(start, "branch opened before any atom");
                    }
                    if pending_bond.is_some() {
                        return syntax(start, "bond symbol before '('");
                    }
                    branch_stack.push(prev);
                    self.pos += 1;
                }
                b')' => {
                    let Some(saved) = branch_stack.pop() else {
                        return syntax(start, "unbalanced ')'");
                    };
                    if pending_bond.is_some() {
                        return syntax(start, "dangling bond before ')'");
                    }
                    prev = saved;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if pending_bond.is_some() {
                        return syntax(start, "two consecutive bond symbols");
                    }
                    pending_bond = Some(match c {
                        b'=' => BondOrder::Double,
                        b'#' => BondOrder::Triple,
                        b':' => BondOrder::Aromatic,
                        b'-' => BondOrder::Single,
                        _ => {
                            self.saw_stereo = true;
                            BondOrder::Single
                        }
                    });
                    pending_pos = start;
                    self.pos += 1;
                }
                b'.' => {
                    if pending_bond.is_some() {
                        return syntax(start, "bond symbol before '.'");
                    }
                    prev = None;
                    dot_pending = true;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let Some(atom) = prev else {
                        return syntax(start, "ring closure before any atom");
                    };
                    let number = self.read_ring_number()?;
                    let bond = pending_bond.take();
                    match self.open_rings.remove(&number) {
                        Some((other, open_bond, _)) => {
                            if other == atom {
                                return syntax(start, "ring closure onto the same atom");
                            }
                            let order = match (open_bond, bond) {
                                (Some(a), Some(b)) if a != b => {
                                    return syntax(start, "conflicting ring-closure bond orders")
                                }
                                (a, b) => a.or(b),
                            };
                            self.bonds.push((other, atom, order));
                        }
                        None => {
                            self.open_rings.insert(number, (atom, bond, start));
                        }
                    }
                }
                b'[' => {
                    let atom = self.read_bracket_atom()?;
                    self.attach(atom, &mut prev, &mut pending_bond, start)?;
                    dot_pending = false;
                }
                _ => {
                    let atom = self.read_organic_atom()?;
                    self.attach(atom, &mut prev, &mut pending_bond, start)?;
                    dot_pending = false;
                }
            }
        }
        if pending_bond.is_some() {
            return syntax(pending_pos, "dangling bond at end of input");
        }
        if !branch_stack.is_empty() {
            return syntax(self.text.len(), "unbalanced '('");
        }
        if let Some((&n, &(_, _, pos))) = self.open_rings.iter().next() {
            return syntax(pos, format!("ring bond {n} never closed"));
        }
        if dot_pending || self.atoms.is_empty() {
            return syntax(self.text.len(), "expected an atom");
        }
        Ok(())
    }

    fn attach(
        &mut self,
        atom: Atom,
        prev: &mut Option<usize>,
        pending: &mut Option<BondOrder>,
        pos: usize,
    ) -> Result<(), ParseError> {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        if let Some(p) = *prev {
            self.bonds.push((p, idx, pending.take()));
        } else if pending.is_some() {
            return syntax(pos, "bond symbol without a preceding atom");
        }
        *prev = Some(idx);
        Ok(())
    }

    fn read_ring_number(&mut self) -> Result<u32, ParseError> {
        let start = self.pos;
        if self.peek() == Some(b'%') {
            self.pos += 1;
            let digits = self.text.get(self.pos..self.pos + 2);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 2;
                    Ok(((d[0] - b'0') * 10 + (d[1] - b'0')) as u32)
                }
                _ => syntax(start, "'%' must be followed by two digits"),
            }
        } else {
            let d = self.text[self.pos] - b'0';
            self.pos += 1;
            Ok(d as u32)
        }
    }

    fn read_organic_atom(&mut self) -> Result<Atom, ParseError> {
        let start = self.pos;
        let rest = &self.text[self.pos..];
        let (element, aromatic, len) = match rest {
            [b'C', b'l', ..] => (Element::Cl, false, 2),
            [b'B', b'r', ..] => (Element::Br, false, 2),
            [b'B', ..] => (Element::B, false, 1),
            [b'C', ..] => (Element::C, false, 1),
            [b'N', ..] => (Element::N, false, 1),
            [b'O', ..] => (Element::O, false, 1),
            [b'P', ..] => (Element::P, false, 1),
            [b'S', ..] => (Element::S, false, 1),
            [b'F', ..] => (Element::F, false, 1),
            [b'I', ..] => (Element::I, false, 1),
            [b'b', ..] => (Element::B, true, 1),
            [b'c', ..] => (Element::C, true, 1),
            [b'n', ..] => (Element::N, true, 1),
            [b'o', ..] => (Element::O, true, 1),
            [b'p', ..] => (Element::P, true, 1),
            [b's', ..] => (Element::S, true, 1),
            _ => {
                let ch = self.text[start] as char;
                return syntax(start, format!("unexpected character {ch:?}"));
            }
        };
        self.pos += len;
        let mut atom = Atom::new(element);
        atom.aromatic = aromatic;
        Ok(atom)
    }

    fn read_bracket_atom(&mut self) -> Result<Atom, ParseError> {
        let open = self.pos;
        self.pos += 1;
        let Some(close) = self.text[self.pos..].iter().position(|&c| c == b']') else {
            return syntax(open, "unbalanced '['");
        };
        let body = &self.text[self.pos..self.pos + close];
        let body_start = self.pos;
        self.pos += close + 1;

        let mut i = 0;
        if body.first().is_some_and(u8::is_ascii_digit) {
            return syntax(body_start, "isotope labels are not supported");
        }
        let (element, aromatic, len) = match body {
            [b'C', b'l', ..] => (Element::Cl, false, 2),
            [b'B', b'r', ..] => (Element::Br, false, 2),
            [b'c', ..] => (Element::C, true, 1),
            [b'n', ..] => (Element::N, true, 1),
            [b'o', ..] => (Element::O, true, 1),
            [b'p', ..] => (Element::P, true, 1),
            [b's', ..] => (Element::S, true, 1),
            [b'b', ..] => (Element::B, true, 1),
            [c, ..] if c.is_ascii_uppercase() => {
                let two = body.get(1).filter(|c| c.is_ascii_lowercase());
                if let Some(&l) = two {
                    let sym = format!("{}{}", *c as char, l as char);
                    if Element::from_symbol(&sym).is_none() {
                        return syntax(body_start, format!("unknown element {sym:?}"));
                    }
                }
                let sym = (*c as char).to_string();
                match Element::from_symbol(&sym) {
                    Some(e) => (e, false, 1),
                    None => return syntax(body_start, format!("unknown element {sym:?}")),
                }
            }
            _ => return syntax(body_start, "missing element in bracket atom"),
        };
        i += len;
        let mut atom = Atom::new(element);
        atom.aromatic = aromatic;
        atom.bracket = true;

        while body.get(i) == Some(&b'@') {
            self.saw_stereo = true;
            i += 1;
        }
        if body.get(i) == Some(&b'H') {
            i += 1;
            let mut h = 1u8;
            if let Some(d) = body.get(i).filter(|d| d.is_ascii_digit()) {
                h = d - b'0';
                i += 1;
            }
            atom.explicit_h = h;
        }
        if let Some(&sign) = body.get(i).filter(|c| **c == b'+' || **c == b'-') {
            let s: i8 = if sign == b'+' { 1 } else { -1 };
            i += 1;
            let mut magnitude = 1i8;
            if let Some(d) = body.get(i).filter(|d| d.is_ascii_digit()) {
                magnitude = (d - b'0') as i8;
                i += 1;
            } else {
                while body.get(i) == Some(&sign) {
                    magnitude += 1;
                    i += 1;
                }
            }
            atom.formal_charge = s * magnitude;
        }
        if body.get(i) == Some(&b':') {
            // atom class; digits ignored
            i += 1;
            while body.get(i).is_some_and(u8::is_ascii_digit) {
                i += 1;
            }
        }
        if i != body.len() {
            return syntax(body_start + i, "unexpected text in bracket atom");
        }
        Ok(atom)
    }

    fn finish(self, id: &str) -> Result<Molecule, ParseError> {
        let mut atoms = self.atoms;
        let mut bonds: Vec<(usize, usize, BondOrder)> = Vec::with_capacity(self.bonds.len());
        for &(a, b, order) in &self.bonds {
            if bonds.iter().any(|&(x, y, _)| (x, y) == (a, b) || (x, y) == (b, a)) {
                return syntax(0, format!("duplicate bond between atoms {a} and {b}"));
            }
            let order = order.unwrap_or(if atoms[a].aromatic && atoms[b].aromatic {
                BondOrder::Aromatic
            } else {
                BondOrder::Single
            });
            bonds.push((a, b, order));
        }

        // fold explicit [H] atoms into their single heavy neighbor
        let mut drop = vec![false; atoms.len()];
        for i in 0..atoms.len() {
            let a = &atoms[i];
            if a.element != Element::H || a.formal_charge != 0 || a.explicit_h != 0 {
                continue;
            }
            let incident: Vec<&(usize, usize, BondOrder)> =
                bonds.iter().filter(|&&(x, y, _)| x == i || y == i).collect();
            if let [&(x, y, BondOrder::Single)] = incident.as_slice() {
                let other = if x == i { y } else { x };
                if atoms[other].element != Element::H {
                    drop[i] = true;
                }
            }
        }
        if drop.iter().any(|&d| d) {
            for &(x, y, _) in &bonds {
                if drop[x] {
                    atoms[y].explicit_h += 1;
                } else if drop[y] {
                    atoms[x].explicit_h += 1;
                }
            }
            let mut remap = vec![usize::MAX; atoms.len()];
            let mut kept = Vec::new();
            for (i, a) in atoms.into_iter().enumerate() {
                if !drop[i] {
                    remap[i] = kept.len();
                    kept.push(a);
                }
            }
            atoms = kept;
            bonds = bonds
                .into_iter()
                .filter(|&(x, y, _)| !drop[x] && !drop[y])
                .map(|(x, y, o)| (remap[x], remap[y], o))
                .collect();
        }

        let mut mol = Molecule::from_parts(id, atoms, bonds).map_err(|e| ParseError::Syntax {
            position: 0,
            message: e.to_string(),
        })?;

        // aromatic bonds outside rings (e.g. between two aromatic rings) are single
        let mut demoted = false;
        for b in mol.bonds_mut() {
            if b.order == BondOrder::Aromatic && !b.in_ring {
                b.order = BondOrder::Single;
                demoted = true;
            }
        }
        if demoted {
            mol = rebuild(mol);
        }
        for (i, a) in mol.atoms().iter().enumerate() {
            if a.aromatic && !a.in_ring {
                return Err(ParseError::Valence {
                    atom: i,
                    message: "aromatic atom outside a ring".into(),
                });
            }
        }
        assign_hydrogens(&mut mol)?;
        Ok(mol)
    }
}

fn rebuild(mol: Molecule) -> Molecule {
    let bonds = mol.bonds().iter().map(|b| (b.a, b.b, b.order)).collect();
    Molecule::from_parts(mol.id.clone(), mol.atoms().to_vec(), bonds).expect("rebuild of valid graph")
}

/// Completes implicit hydrogens from standard valences and checks that no
/// atom exceeds its allowed valence.
pub(crate) fn assign_hydrogens(mol: &mut Molecule) -> Result<(), ParseError> {
    let n = mol.num_atoms();
    let mut implicit = vec![0u8; n];
    for (i, slot) in implicit.iter_mut().enumerate() {
        let atom = mol.atom(i);
        let mut bond_sum: u16 = atom.explicit_h as u16;
        let mut has_multiple = false;
        let mut aromatic_bonds = 0;
        for &(_, bi) in mol.neighbors(i) {
            let order = mol.bonds()[bi].order;
            bond_sum += order.valence_contribution() as u16;
            has_multiple |= matches!(order, BondOrder::Double | BondOrder::Triple);
            aromatic_bonds += (order == BondOrder::Aromatic) as usize;
        }
        let allowed = atom.element.valences_with_charge(atom.formal_charge);
        let max_allowed = *allowed.iter().max().unwrap() as u16;
        if atom.bracket {
            if bond_sum > max_allowed {
                return Err(ParseError::Valence {
                    atom: i,
                    message: format!("{} has valence {bond_sum}, max {max_allowed}", atom.element),
                });
            }
            continue;
        }
        if atom.aromatic {
            let pi = match atom.element {
                Element::C | Element::B => !has_multiple,
                Element::N => aromatic_bonds == 2 && mol.degree(i) == 2,
                _ => false,
            };
            bond_sum += pi as u16;
        }
        match allowed.iter().find(|&&v| v as u16 >= bond_sum) {
            Some(&v) => *slot = (v as u16 - bond_sum) as u8,
            None => {
                return Err(ParseError::Valence {
                    atom: i,
                    message: format!("{} has valence {bond_sum}, max {max_allowed}", atom.element),
                })
            }
        }
    }
    for (a, h) in mol.atoms_mut().iter_mut().zip(implicit) {
        a.implicit_h = h;
    }
    Ok(())
}
