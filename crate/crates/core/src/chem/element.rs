use std::fmt;

/// Elements accepted by the SMILES reader.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    H,
    B,
    C,
    N,
    O,
    F,
    P,
    S,
    Cl,
    Br,
    I,
}

/// One isotope: exact mass, nominal mass number and natural abundance fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isotope {
    pub mass: f64,
    pub mass_number: u16,
    pub abundance: f64,
}

const fn iso(mass: f64, mass_number: u16, abundance: f64) -> Isotope {
    Isotope {
        mass,
        mass_number,
        abundance,
    }
}

// Standard isotopic compositions (IUPAC/NIST representative abundances).
const H_ISO: &[Isotope] = &[iso(1.007_825_032_07, 1, 0.999_885), iso(2.014_101_778, 2, 0.000_115)];
const B_ISO: &[Isotope] = &[iso(10.012_937_0, 10, 0.199), iso(11.009_305_4, 11, 0.801)];
const C_ISO: &[Isotope] = &[iso(12.0, 12, 0.9893), iso(13.003_354_837_8, 13, 0.0107)];
const N_ISO: &[Isotope] = &[iso(14.003_074_004_8, 14, 0.996_36), iso(15.000_108_898_2, 15, 0.003_64)];
const O_ISO: &[Isotope] = &[
    iso(15.994_914_619_56, 16, 0.997_57),
    iso(16.999_131_70, 17, 0.000_38),
    iso(17.999_161_0, 18, 0.002_05),
];
const F_ISO: &[Isotope] = &[iso(18.998_403_22, 19, 1.0)];
const P_ISO: &[Isotope] = &[iso(30.973_761_63, 31, 1.0)];
const S_ISO: &[Isotope] = &[
    iso(31.972_071_00, 32, 0.9499),
    iso(32.971_458_76, 33, 0.0075),
    iso(33.967_866_90, 34, 0.0425),
    iso(35.967_080_76, 36, 0.0001),
];
const CL_ISO: &[Isotope] = &[iso(34.968_852_68, 35, 0.7576), iso(36.965_902_59, 37, 0.2424)];
const BR_ISO: &[Isotope] = &[iso(78.918_337_1, 79, 0.5069), iso(80.916_290_6, 81, 0.4931)];
const I_ISO: &[Isotope] = &[iso(126.904_473, 127, 1.0)];

impl Element {
    pub const ALL: [Element; 11] = [
        Element::H,
        Element::B,
        Element::C,
        Element::N,
        Element::O,
        Element::F,
        Element::P,
        Element::S,
        Element::Cl,
        Element::Br,
        Element::I,
    ];

    pub fn from_symbol(symbol: &str) -> Option<Element> {
        Some(match symbol {
            "H" => Element::H,
            "B" => Element::B,
            "C" => Element::C,
            "N" => Element::N,
            "O" => Element::O,
            "F" => Element::F,
            "P" => Element::P,
            "S" => Element::S,
            "Cl" => Element::Cl,
            "Br" => Element::Br,
            "I" => Element::I,
            _ => return None,
        })
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Element::H => "H",
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
        }
    }

    pub fn atomic_number(self) -> u8 {
        match self {
            Element::H => 1,
            Element::B => 5,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
            Element::P => 15,
            Element::S => 16,
            Element::Cl => 17,
            Element::Br => 35,
            Element::I => 53,
        }
    }

    /// Position in [`Element::ALL`], used for one-hot encodings.
    pub fn index(self) -> usize {
        Element::ALL.iter().position(|&e| e == self).unwrap()
    }

    /// Standard atomic weight (average over natural abundance).
    pub fn average_mass(self) -> f64 {
        match self {
            Element::H => 1.008,
            Element::B => 10.81,
            Element::C => 12.011,
            Element::N => 14.007,
            Element::O => 15.999,
            Element::F => 18.998,
            Element::P => 30.974,
            Element::S => 32.06,
            Element::Cl => 35.45,
            Element::Br => 79.904,
            Element::I => 126.904,
        }
    }

    pub fn isotopes(self) -> &'static [Isotope] {
        match self {
            Element::H => H_ISO,
            Element::B => B_ISO,
            Element::C => C_ISO,
            Element::N => N_ISO,
            Element::O => O_ISO,
            Element::F => F_ISO,
            Element::P => P_ISO,
            Element::S => S_ISO,
            Element::Cl => CL_ISO,
            Element::Br => BR_ISO,
            Element::I => I_ISO,
        }
    }

    /// Exact mass of the most abundant isotope.
    pub fn monoisotopic_mass(self) -> f64 {
        self.most_abundant().mass
    }

    pub fn most_abundant(self) -> Isotope {
        *self
            .isotopes()
            .iter()
            .max_by(|a, b| a.abundance.total_cmp(&b.abundance))
            .unwrap()
    }

    /// Allowed neutral valences, ascending.
    pub fn default_valences(self) -> &'static [u8] {
        match self {
            Element::H => &[1],
            Element::B => &[3],
            Element::C => &[4],
            Element::N => &[3, 5],
            Element::O => &[2],
            Element::P => &[3, 5],
            Element::S => &[2, 4, 6],
            Element::F | Element::Cl | Element::Br | Element::I => &[1],
        }
    }

    /// Valences allowed for an atom carrying `charge`, using the isoelectronic
    /// neighbour in the periodic table.
    pub fn valences_with_charge(self, charge: i8) -> Vec<u8> {
        if charge == 0 {
            return self.default_valences().to_vec();
        }
        let shift = match self {
            // group 13/14: losing or gaining electrons reduces bonding capacity
            Element::B | Element::C => -(charge.abs() as i16),
            Element::H => -(charge.abs() as i16),
            // group 15/16/17: cations gain a bond, anions lose one
            _ => charge as i16,
        };
        let mut out: Vec<u8> = self
            .default_valences()
            .iter()
            .filter_map(|&v| {
                let v = v as i16 + shift;
                (v >= 0).then_some(v as u8)
            })
            .collect();
        if out.is_empty() {
            out.push(0);
        }
        out
    }

    /// Elements that may appear without brackets in SMILES.
    pub fn is_organic_subset(self) -> bool {
        !matches!(self, Element::H)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}
