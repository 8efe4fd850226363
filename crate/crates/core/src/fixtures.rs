//! Published secular matrices for small tori, kept verbatim.
//!
//! Each entry is stored as printed (`0` or `e^p`) together with the potential
//! that should generate it, so the printed matrix and the definitional
//! assembly can be diagonalized and compared independently. Two prints are
//! not usable as-is and carry an explicit repair:
//!
//! * `F` has `e^9` at row 4, column 2 where symmetry requires `e^-2`;
//! * `G` prints 7 of its 8 rows (one of the four identical rows is missing).
//!
//! `B` is kept as printed (`e^-6`); the definition gives `V̂(6) = e^-36`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::eigen::{self, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::lattice;
use crate::perturbation::{self, PerturbationMatrix};
use crate::potential::PotentialSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entry {
    Zero,
    Exp(i32),
}

impl Entry {
    pub fn value(self) -> f64 {
        match self {
            Entry::Zero => 0.0,
            Entry::Exp(p) => (p as f64).exp(),
        }
    }

    pub fn label(self) -> String {
        match self {
            Entry::Zero => "0".into(),
            Entry::Exp(0) => "1".into(),
            Entry::Exp(p) => format!("e^{p}"),
        }
    }
}

#[derive(Debug)]
pub struct ReferenceMatrix {
    pub name: &'static str,
    pub n: usize,
    pub lambda0: u64,
    pub alpha: &'static [f64],
    pub subtract_constant: bool,
    pub printed: &'static [&'static [Entry]],
    /// For each row of the full matrix, the printed row it is taken from.
    pub restore_from: &'static [usize],
    /// `(row, col, entry)` overrides applied after restoring rows.
    pub repairs: &'static [(usize, usize, Entry)],
    /// Eigenvalues as published, in published order.
    pub reported: &'static [f64],
}

const Z: Entry = Entry::Zero;
const fn e(p: i32) -> Entry {
    Entry::Exp(p)
}

static MATRICES: [ReferenceMatrix; 6] = [
    ReferenceMatrix {
        name: "A",
        n: 1,
        lambda0: 1,
        alpha: &[1.0],
        subtract_constant: true,
        printed: &[&[Z, e(-4)], &[e(-4), Z]],
        restore_from: &[0, 1],
        repairs: &[],
        reported: &[-0.0183156, 0.0183156],
    },
    ReferenceMatrix {
        name: "B",
        n: 1,
        lambda0: 9,
        alpha: &[1.0],
        subtract_constant: true,
        printed: &[&[Z, e(-6)], &[e(-6), Z]],
        restore_from: &[0, 1],
        repairs: &[],
        reported: &[-0.00247875, 0.00247875],
    },
    ReferenceMatrix {
        name: "C",
        n: 2,
        lambda0: 1,
        alpha: &[1.0, 2.0],
        subtract_constant: false,
        printed: &[
            &[e(0), e(-3), e(-3), e(-4)],
            &[e(-3), e(0), e(-8), e(-3)],
            &[e(-3), e(-8), e(0), e(-3)],
            &[e(-4), e(-3), e(-3), e(0)],
        ],
        restore_from: &[0, 1, 2, 3],
        repairs: &[],
        reported: &[1.1093, 0.999665, 0.981684, 0.909346],
    },
    ReferenceMatrix {
        name: "D",
        n: 2,
        lambda0: 5,
        alpha: &[1.0, 2.0],
        subtract_constant: false,
        printed: &[
            &[e(0), e(-8), e(-3), e(-19), e(-11), e(-27), e(-16), e(-24)],
            &[e(-8), e(0), e(-19), e(-3), e(-27), e(-11), e(-24), e(-16)],
            &[e(-3), e(-19), e(0), e(-32), e(-4), e(-36), e(-11), e(-27)],
            &[e(-19), e(-3), e(-32), e(0), e(-36), e(-4), e(-27), e(-11)],
            &[e(-11), e(-27), e(-4), e(-36), e(0), e(-32), e(-3), e(-19)],
            &[e(-27), e(-11), e(-36), e(-4), e(-32), e(0), e(-19), e(-3)],
            &[e(-16), e(-24), e(-11), e(-27), e(-3), e(-19), e(0), e(-8)],
            &[e(-24), e(-16), e(-27), e(-11), e(-19), e(-3), e(-8), e(0)],
        ],
        restore_from: &[0, 1, 2, 3, 4, 5, 6, 7],
        repairs: &[],
        reported: &[
            1.05993, 1.05966, 1.04165, 1.04125, 0.958717, 0.958321, 0.94037, 0.940099,
        ],
    },
    ReferenceMatrix {
        name: "F",
        n: 3,
        lambda0: 1,
        alpha: &[1.0, 2.0, 0.0],
        subtract_constant: false,
        printed: &[
            &[e(0), e(-3), e(-1), e(-1), e(-3), e(-4)],
            &[e(-3), e(0), e(-2), e(-2), e(-8), e(-3)],
            &[e(-1), e(-2), e(0), e(0), e(-2), e(-1)],
            &[e(-1), e(9), e(0), e(0), e(-2), e(-1)],
            &[e(-3), e(-8), e(-2), e(-2), e(0), e(-3)],
            &[e(-4), e(-3), e(-1), e(-1), e(-3), e(0)],
        ],
        restore_from: &[0, 1, 2, 3, 4, 5],
        repairs: &[(3, 1, e(-2))],
        reported: &[2.44993, 0.999665, 0.981684, 0.948775, 0.619943, 0.0],
    },
    ReferenceMatrix {
        name: "G",
        n: 4,
        lambda0: 1,
        alpha: &[1.0, 2.0, 0.0, 0.0],
        subtract_constant: false,
        printed: &[
            &[e(0), e(-3), e(-1), e(-1), e(-1), e(-1), e(-3), e(-4)],
            &[e(-3), e(0), e(-2), e(-2), e(-2), e(-2), e(-8), e(-3)],
            &[e(-1), e(-2), e(0), e(0), e(0), e(0), e(-2), e(-1)],
            &[e(-1), e(-2), e(0), e(0), e(0), e(0), e(-2), e(-1)],
            &[e(-1), e(-2), e(0), e(0), e(0), e(0), e(-2), e(-1)],
            &[e(-3), e(-8), e(-2), e(-2), e(-2), e(-2), e(0), e(-3)],
            &[e(-4), e(-3), e(-1), e(-1), e(-1), e(-1), e(-3), e(0)],
        ],
        restore_from: &[0, 1, 2, 3, 4, 4, 5, 6],
        repairs: &[],
        reported: &[
            4.37347,
            0.999665,
            0.981684,
            0.955542,
            0.689642,
            -2.54159e-16,
            -5.67363e-17,
            -4.2159e-17,
        ],
    },
];

pub const NAMES: [&str; 6] = ["A", "B", "C", "D", "F", "G"];

pub fn all() -> &'static [ReferenceMatrix] {
    &MATRICES
}

pub fn fixture(name: &str) -> Result<&'static ReferenceMatrix> {
    let upper = name.trim().to_ascii_uppercase();
    if let Some(m) = MATRICES.iter().find(|m| m.name == upper) {
        return Ok(m);
    }
    let reason = if upper == "E" {
        "the 16x16 matrix for lambda = 125 is printed only through its corner entries and \
         its listed basis repeats the lambda = 5 frequencies, so its entries are under-specified"
            .to_string()
    } else {
        format!("expected one of {}", NAMES.join(", "))
    };
    Err(Error::UnknownFixture {
        name: name.to_string(),
        reason,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub row: usize,
    pub col: usize,
    pub printed: String,
    pub printed_value: f64,
    pub definition_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub name: String,
    /// Indices into the definitional matrix; `row` is the definitional row
    /// the printed row corresponds to.
    pub discrepancies: Vec<Discrepancy>,
    /// Definitional rows with no printed counterpart.
    pub missing_rows: Vec<usize>,
}

impl DiffReport {
    pub fn is_clean(&self) -> bool {
        self.discrepancies.is_empty() && self.missing_rows.is_empty()
    }
}

impl ReferenceMatrix {
    pub fn spec(&self) -> PotentialSpec {
        PotentialSpec::new(self.alpha.to_vec())
            .expect("reference weights are valid")
            .with_subtract_constant(self.subtract_constant)
    }

    pub fn dim(&self) -> usize {
        self.restore_from.len()
    }

    pub fn printed_values(&self) -> Vec<Vec<f64>> {
        self.printed
            .iter()
            .map(|row| row.iter().map(|e| e.value()).collect())
            .collect()
    }

    /// Full symmetric matrix rebuilt from the print: missing rows restored,
    /// repairs applied.
    pub fn repaired(&self) -> DMatrix<f64> {
        let m = self.dim();
        let mut out = DMatrix::from_fn(m, m, |i, j| self.printed[self.restore_from[i]][j].value());
        for &(i, j, entry) in self.repairs {
            out[(i, j)] = entry.value();
        }
        out
    }

    /// Eigenvalues of [`repaired`](Self::repaired), ascending.
    pub fn fixture_eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(eigen::symmetric_eigen(&self.repaired(), DEFAULT_TOLERANCE)?.values)
    }

    pub fn definition(&self) -> Result<PerturbationMatrix> {
        let basis = lattice::eigenspace(self.lambda0, self.n)?;
        perturbation::assemble_first_order(&self.spec(), &basis)
    }

    pub fn definition_eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(eigen::symmetric_eigen(&self.definition()?.entries, DEFAULT_TOLERANCE)?.values)
    }

    pub fn reported_ascending(&self) -> Vec<f64> {
        let mut v = self.reported.to_vec();
        v.sort_by(f64::total_cmp);
        v
    }

    fn printed_to_definition(&self, printed_row: usize) -> usize {
        self.restore_from
            .iter()
            .position(|&p| p == printed_row)
            .expect("every printed row is used")
    }

    /// Entrywise comparison of the print against the definitional assembly.
    pub fn diff(&self) -> Result<DiffReport> {
        let def = self.definition()?.entries;
        let mut discrepancies = Vec::new();
        for (p, row) in self.printed.iter().enumerate() {
            let r = self.printed_to_definition(p);
            for (c, entry) in row.iter().enumerate() {
                let pv = entry.value();
                let dv = def[(r, c)];
                if (pv - dv).abs() > 1e-12 * pv.abs().max(dv.abs()) {
                    discrepancies.push(Discrepancy {
                        row: r,
                        col: c,
                        printed: entry.label(),
                        printed_value: pv,
                        definition_value: dv,
                    });
                }
            }
        }
        let missing_rows = (0..self.dim())
            .filter(|&r| {
                self.restore_from
                    .iter()
                    .position(|&p| p == self.restore_from[r])
                    != Some(r)
            })
            .collect();
        Ok(DiffReport {
            name: self.name.to_string(),
            discrepancies,
            missing_rows,
        })
    }
}
