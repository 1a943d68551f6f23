//! Atomic models: the two-level dipole atom and multi-level atoms given by
//! energies and momentum matrix elements.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::vec3::{self, CVec3};
use crate::C64;

/// Two-level atom at the origin; `d u = <+|d|->` with `|u| = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelAtom {
    pub omega0: f64,
    pub d: f64,
    pub u: CVec3,
}

impl TwoLevelAtom {
    pub fn new(omega0: f64, d: f64, u: CVec3) -> Result<Self> {
        if !(omega0 > 0.0) || !omega0.is_finite() {
            return Err(invalid("omega0", "must be positive and finite"));
        }
        if !d.is_finite() {
            return Err(invalid("d", "must be finite"));
        }
        let norm = vec3::cnorm(&u);
        if (norm - 1.0).abs() > 1e-12 {
            return Err(invalid("u", format!("must have unit norm, got {norm}")));
        }
        Ok(TwoLevelAtom { omega0, d, u })
    }
}

/// Atom with levels `E_c` and momentum matrix elements `p_bc = <b|p|c>`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLevelAtom {
    energies: Vec<f64>,
    p: Vec<Vec<CVec3>>,
    pub charge: f64,
    pub mass: f64,
}

impl MultiLevelAtom {
    /// `p[b][c]` must satisfy `p[c][b] = p[b][c]*` to `1e-12`.
    pub fn new(energies: Vec<f64>, p: Vec<Vec<CVec3>>, charge: f64, mass: f64) -> Result<Self> {
        let n = energies.len();
        if n < 2 {
            return Err(invalid("energies", "need at least two levels"));
        }
        if p.len() != n || p.iter().any(|row| row.len() != n) {
            return Err(invalid("p_elems", format!("must be a {n} x {n} table")));
        }
        if !(mass > 0.0) {
            return Err(invalid("mass", "must be positive"));
        }
        for b in 0..n {
            for c in 0..n {
                for j in 0..3 {
                    if (p[c][b][j] - p[b][c][j].conj()).norm() > 1e-12 {
                        return Err(invalid("p_elems", format!("p_{c}{b} != conj(p_{b}{c})")));
                    }
                }
            }
        }
        Ok(MultiLevelAtom { energies, p, charge, mass })
    }

    /// Builds the table from the upper triangle `(b, c, p_bc)`, `b < c`,
    /// filling in the conjugates. Diagonal elements are zero.
    pub fn from_upper(energies: Vec<f64>, upper: &[(usize, usize, CVec3)], charge: f64, mass: f64) -> Result<Self> {
        let n = energies.len();
        let zero = [C64::new(0.0, 0.0); 3];
        let mut p = vec![vec![zero; n]; n];
        for &(b, c, v) in upper {
            if b >= n || c >= n || b == c {
                return Err(invalid("p_elems", format!("bad level pair ({b}, {c})")));
            }
            p[b][c] = v;
            p[c][b] = vec3::conj(&v);
        }
        Self::new(energies, p, charge, mass)
    }

    pub fn levels(&self) -> usize {
        self.energies.len()
    }

    pub fn energy(&self, c: usize) -> f64 {
        self.energies[c]
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn p(&self, b: usize, c: usize) -> &CVec3 {
        &self.p[b][c]
    }

    /// Three levels `b < c < a` (indices 0, 1, 2) with complex, mutually
    /// non-parallel transition moments.
    pub fn three_level_fixture() -> Self {
        let c = |re: f64, im: f64| C64::new(re, im);
        Self::from_upper(
            vec![0.0, 0.7, 2.3],
            &[
                (0, 1, [c(0.4, 0.1), c(-0.2, 0.3), c(0.5, 0.0)]),
                (1, 2, [c(0.1, -0.6), c(0.35, 0.0), c(-0.15, 0.25)]),
                (0, 2, [c(0.05, 0.0), c(0.1, 0.2), c(-0.3, -0.1)]),
            ],
            1.0,
            1.0,
        )
        .expect("fixture is Hermitian")
    }

    /// Four levels with two intermediate states above and below the
    /// midpoint, exercising both signs of the energy denominators.
    pub fn four_level_fixture() -> Self {
        let c = |re: f64, im: f64| C64::new(re, im);
        Self::from_upper(
            vec![0.0, 0.45, 1.6, 2.9],
            &[
                (0, 1, [c(0.3, 0.0), c(0.1, 0.4), c(-0.2, 0.1)]),
                (0, 2, [c(-0.25, 0.2), c(0.0, 0.15), c(0.45, 0.0)]),
                (1, 3, [c(0.2, -0.1), c(0.5, 0.05), c(0.1, 0.3)]),
                (2, 3, [c(0.0, 0.35), c(-0.3, 0.0), c(0.2, -0.2)]),
                (1, 2, [c(0.15, 0.0), c(0.0, -0.1), c(0.05, 0.05)]),
            ],
            1.0,
            1.0,
        )
        .expect("fixture is Hermitian")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_level_validation() {
        let z = [C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        assert!(TwoLevelAtom::new(1.0, 0.1, z).is_ok());
        assert!(TwoLevelAtom::new(0.0, 0.1, z).is_err());
        let long = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        assert!(TwoLevelAtom::new(1.0, 0.1, long).is_err());
    }

    #[test]
    fn non_hermitian_table_rejected() {
        let v = [C64::new(0.0, 1.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        let zero = [C64::new(0.0, 0.0); 3];
        let p = vec![vec![zero, v], vec![v, zero]];
        assert!(MultiLevelAtom::new(vec![0.0, 1.0], p, 1.0, 1.0).is_err());
    }

    #[test]
    fn fixtures_are_hermitian() {
        for atom in [MultiLevelAtom::three_level_fixture(), MultiLevelAtom::four_level_fixture()] {
            for b in 0..atom.levels() {
                for c in 0..atom.levels() {
                    assert_eq!(*atom.p(c, b), vec3::conj(atom.p(b, c)));
                }
            }
        }
    }
}
