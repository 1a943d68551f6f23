//! Dipole, rotating-wave coupling of a two-level atom to the single
//! oscillator and the first-order emission amplitudes.
//!
//! Product basis: `index = atom * d + field` with `d` the single-oscillator
//! dimension, atom `0 = |->` and `1 = |+>`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::modes::ModeSet;
use crate::oscillator::{self, BasisIndex, LinearOperator, SingleBasis, StateVector};
use crate::perturbation::atom::TwoLevelAtom;
use crate::vec3;
use crate::C64;

pub const GROUND: usize = 0;
pub const EXCITED: usize = 1;

/// `g = i sqrt(1/(2 hbar omega V)) e.u` for mode `m`.
pub fn coupling(atom: &TwoLevelAtom, ms: &ModeSet, m: usize) -> C64 {
    let omega = ms.mode(m).omega;
    let amp = libm::sqrt(1.0 / (2.0 * ms.constants().hbar * omega * ms.volume()));
    C64::new(0.0, amp) * vec3::cdot(&ms.polarization(m).0, &atom.u)
}

/// `(e^{-i delta t} - 1) / delta`, equal to `-i t` at `delta = 0`.
pub fn time_factor(delta: f64, t: f64) -> C64 {
    let x = 0.5 * delta * t;
    let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { libm::sin(x) / x };
    C64::new(0.0, -t) * C64::new(0.0, -x).exp() * sinc
}

pub fn product_dim(ms: &ModeSet, n_max: usize) -> usize {
    2 * SingleBasis::for_modes(ms, n_max).dim()
}

fn interaction_triplets(atom: &TwoLevelAtom, ms: &ModeSet, n_max: usize, t: Option<f64>) -> Vec<(usize, usize, C64)> {
    let b = SingleBasis::for_modes(ms, n_max);
    let d = b.dim();
    let scale = ms.constants().hbar * atom.omega0 * atom.d;
    let mut out = Vec::new();
    for m in 0..ms.len() {
        let g = coupling(atom, ms, m);
        let rot = t.map_or(C64::new(1.0, 0.0), |t| C64::new(0.0, (atom.omega0 - ms.mode(m).omega) * t).exp());
        let c = g * rot * scale;
        for n in 0..n_max {
            let lower = b.flat(BasisIndex { mode: m, n });
            let upper = b.flat(BasisIndex { mode: m, n: n + 1 });
            let s = libm::sqrt((n + 1) as f64);
            // g a sigma_+ : |-, n+1> -> |+, n>
            out.push((EXCITED * d + lower, GROUND * d + upper, c * s));
            out.push((GROUND * d + upper, EXCITED * d + lower, c.conj() * s));
        }
    }
    out
}

/// Interaction-picture `H_I(t) = hbar w0 d sum (g e^{i(w0-w)t} a s+ + h.c.)`.
pub fn rwa_interaction(atom: &TwoLevelAtom, ms: &ModeSet, n_max: usize, t: f64) -> Result<LinearOperator> {
    let dim = product_dim(ms, n_max);
    LinearOperator::hermitian(SparseMatrix::from_triplets(dim, dim, interaction_triplets(atom, ms, n_max, Some(t))), n_max)
}

/// Free part `hbar w0 sigma_3 / 2 + H_field` on the product space.
pub fn free_hamiltonian(atom: &TwoLevelAtom, ms: &ModeSet, n_max: usize) -> Result<LinearOperator> {
    let h_field = oscillator::hamiltonian(ms, n_max)?;
    let field_diag = h_field.matrix().diagonal();
    let half = 0.5 * ms.constants().hbar * atom.omega0;
    let diag: Vec<C64> = [-half, half].iter().flat_map(|e| field_diag.iter().map(move |f| f + e)).collect();
    LinearOperator::hermitian(SparseMatrix::from_diagonal(&diag), n_max)
}

/// Schrodinger-picture `H_0 + V` with the time-independent RWA coupling.
pub fn rwa_hamiltonian(atom: &TwoLevelAtom, ms: &ModeSet, n_max: usize) -> Result<LinearOperator> {
    let dim = product_dim(ms, n_max);
    let v = SparseMatrix::from_triplets(dim, dim, interaction_triplets(atom, ms, n_max, None));
    let h0 = free_hamiltonian(atom, ms, n_max)?;
    LinearOperator::hermitian(h0.matrix() + &v, n_max)
}

/// First-order result in the interaction picture.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderState {
    pub initial: StateVector,
    /// Flagged unnormalized; lives on the atomic ground half.
    pub correction: StateVector,
}

impl FirstOrderState {
    pub fn total(&self) -> Vec<C64> {
        self.initial.amplitudes().iter().zip(self.correction.amplitudes()).map(|(a, b)| a + b).collect()
    }

    /// Correction amplitude on `|m, n, ->`.
    pub fn emitted(&self, ms: &ModeSet, n_max: usize, m: usize, n: usize) -> C64 {
        let b = SingleBasis::for_modes(ms, n_max);
        self.correction.amplitudes()[GROUND * b.dim() + b.flat(BasisIndex { mode: m, n })]
    }
}

/// Adds `w0 d g* sqrt(n+1) Psi (e^{-i(w0-w)t} - 1)/(w0 - w)` on `|m, n+1, ->`
/// for every component `Psi |m, n, +>` of the initial state. The atom must
/// start excited and no component may sit on the top rung.
pub fn first_order_state(atom: &TwoLevelAtom, ms: &ModeSet, n_max: usize, initial: StateVector, t: f64) -> Result<FirstOrderState> {
    let b = SingleBasis::for_modes(ms, n_max);
    let d = b.dim();
    if initial.len() != 2 * d {
        return Err(Error::DimensionMismatch { expected: 2 * d, found: initial.len() });
    }
    let amps = initial.amplitudes();
    if amps[..d].iter().any(|a| a.norm() != 0.0) {
        return Err(Error::UnsupportedInitialState { reason: "atom must start in the excited state".into() });
    }
    let mut correction = vec![C64::new(0.0, 0.0); 2 * d];
    for i in 0..d {
        let psi = amps[EXCITED * d + i];
        if psi.norm() == 0.0 {
            continue;
        }
        let BasisIndex { mode, n } = b.unflat(i);
        if n == n_max {
            return Err(Error::UnsupportedInitialState { reason: "initial excitation on the truncation rung".into() });
        }
        let delta = atom.omega0 - ms.mode(mode).omega;
        let factor = time_factor(delta, t) * coupling(atom, ms, mode).conj() * (atom.omega0 * atom.d * libm::sqrt((n + 1) as f64));
        correction[GROUND * d + b.flat(BasisIndex { mode, n: n + 1 })] += factor * psi;
    }
    Ok(FirstOrderState { initial, correction: StateVector::unnormalized(correction) })
}

/// Exact interaction-picture state `e^{i H_0 t} e^{-i H t} psi(0)` by dense
/// exponentiation.
pub fn exact_interaction_state(atom: &TwoLevelAtom, ms: &ModeSet, n_max: usize, initial: &StateVector, t: f64) -> Result<Vec<C64>> {
    let hbar = ms.constants().hbar;
    let h = rwa_hamiltonian(atom, ms, n_max)?;
    let h0 = free_hamiltonian(atom, ms, n_max)?;
    let u = h.matrix().to_dense().scale(C64::new(0.0, -t / hbar)).expm();
    let evolved = u.to_sparse(0.0).apply(initial.amplitudes());
    Ok(h0.matrix().diagonal().iter().zip(evolved).map(|(e, a)| a * C64::new(0.0, e.re * t / hbar).exp()).collect())
}

/// `||exact - (initial + correction)||`, of order `d^2` for a weak dipole.
pub fn first_order_residual(atom: &TwoLevelAtom, ms: &ModeSet, n_max: usize, initial: &StateVector, t: f64) -> Result<f64> {
    let first = first_order_state(atom, ms, n_max, initial.clone(), t)?;
    let exact = exact_interaction_state(atom, ms, n_max, initial, t)?;
    Ok(libm::sqrt(exact.iter().zip(first.total()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{Constants, Helicity, Mode};

    fn atom(d: f64) -> TwoLevelAtom {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        TwoLevelAtom::new(1.0, d, [C64::new(s, 0.0), C64::new(0.0, s), C64::new(0.0, 0.0)]).unwrap()
    }

    fn modes() -> ModeSet {
        let k = |x: f64, y: f64, z: f64| [x, y, z];
        let list = [
            Mode::new(Helicity::Plus, k(0.0, 0.0, 1.0), 1.0).unwrap(),
            Mode::new(Helicity::Minus, k(0.0, 0.0, 1.0), 1.0).unwrap(),
            Mode::new(Helicity::Plus, k(0.0, 0.9, 0.3), 1.0).unwrap(),
        ];
        ModeSet::new(list.to_vec(), 2.0, Constants::default()).unwrap()
    }

    fn excited_state(ms: &ModeSet, n_max: usize, comps: &[(usize, usize, C64)]) -> StateVector {
        let b = SingleBasis::for_modes(ms, n_max);
        let mut amps = vec![C64::new(0.0, 0.0); 2 * b.dim()];
        for &(m, n, v) in comps {
            amps[EXCITED * b.dim() + b.flat(BasisIndex { mode: m, n })] = v;
        }
        StateVector::normalized(amps).unwrap()
    }

    #[test]
    fn orthogonal_dipole_decouples() {
        let ms = modes();
        let z = TwoLevelAtom::new(1.0, 0.1, [C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        assert!(coupling(&z, &ms, 0).norm() < 1e-17);
        assert!(coupling(&z, &ms, 1).norm() < 1e-17);
    }

    #[test]
    fn coupling_scales_inverse_omega_volume() {
        let a = atom(0.1);
        let k = [0.0, 0.6, 0.8];
        let one = ModeSet::new(vec![Mode::new(Helicity::Minus, k, 1.0).unwrap()], 2.0, Constants::default()).unwrap();
        let k2 = [0.0, 1.8, 2.4];
        let three = ModeSet::new(vec![Mode::new(Helicity::Minus, k2, 1.0).unwrap()], 8.0, Constants::default()).unwrap();
        let ratio = coupling(&a, &one, 0).norm_sqr() / coupling(&a, &three, 0).norm_sqr();
        assert!((ratio - 12.0).abs() < 1e-12);
    }

    #[test]
    fn interaction_hermitian() {
        let ms = modes();
        for t in [0.0, 0.7, -3.0] {
            let h = rwa_interaction(&atom(0.2), &ms, 3, t).unwrap();
            assert!(h.is_hermitian());
        }
    }

    #[test]
    fn resonant_limit() {
        let t = 2.5;
        assert!((time_factor(0.0, t) - C64::new(0.0, -t)).norm() < 1e-15);
        let near = time_factor(1e-10, t);
        assert!((near - C64::new(0.0, -t)).norm() < 1e-9);
        let delta = 0.4;
        let direct = (C64::new(0.0, -delta * t).exp() - 1.0) / delta;
        assert!((time_factor(delta, t) - direct).norm() < 1e-15);
    }

    #[test]
    fn stimulated_channel_carries_sqrt_two() {
        let ms = modes();
        let a = atom(0.05);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let init = excited_state(&ms, 3, &[(2, 0, C64::new(h, 0.0)), (2, 1, C64::new(h, 0.0))]);
        let r = first_order_state(&a, &ms, 3, init, 1.3).unwrap();
        let spont = r.emitted(&ms, 3, 2, 1);
        let stim = r.emitted(&ms, 3, 2, 2);
        assert!((stim / spont - C64::new(core::f64::consts::SQRT_2, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn unsupported_initial_states() {
        let ms = modes();
        let b = SingleBasis::for_modes(&ms, 2);
        let ground = StateVector::basis(2 * b.dim(), 0);
        assert!(matches!(first_order_state(&atom(0.1), &ms, 2, ground, 1.0), Err(Error::UnsupportedInitialState { .. })));
        let top = excited_state(&ms, 2, &[(0, 2, C64::new(1.0, 0.0))]);
        assert!(matches!(first_order_state(&atom(0.1), &ms, 2, top, 1.0), Err(Error::UnsupportedInitialState { .. })));
    }

    #[test]
    fn small_time_amplitude_is_linear() {
        let ms = modes();
        let init = excited_state(&ms, 2, &[(1, 0, C64::new(1.0, 0.0))]);
        let a = atom(0.1);
        let amp = |t: f64| first_order_state(&a, &ms, 2, init.clone(), t).unwrap().emitted(&ms, 2, 1, 1);
        let slope = C64::new(0.0, -1.0) * coupling(&a, &ms, 1).conj() * (a.omega0 * a.d);
        for t in [1e-2, 1e-3] {
            // amp = slope t + O(t^2)
            let rel = (amp(t) - slope * t).norm() / (slope.norm() * t);
            assert!(rel < t, "{rel}");
        }
    }

    #[test]
    fn matches_exact_evolution_to_second_order() {
        let ms = modes();
        let n_max = 3;
        let init = excited_state(
            &ms,
            n_max,
            &[(0, 0, C64::new(0.6, 0.0)), (2, 0, C64::new(0.0, 0.64)), (2, 1, C64::new(0.48, 0.0))],
        );
        let t = 2.0;
        let err = |d: f64| {
            let a = atom(d);
            let fo = first_order_state(&a, &ms, n_max, init.clone(), t).unwrap();
            let exact = exact_interaction_state(&a, &ms, n_max, &init, t).unwrap();
            fo.total().iter().zip(&exact).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.02), err(0.01));
        assert!(e1 < 1e-3);
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.2, "error ratio {ratio}");
    }
}
