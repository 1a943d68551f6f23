//! Spontaneous-emission rates: the single-oscillator golden-rule sum with a
//! vacuum profile, and the multi-oscillator first-order emission.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::modes::ModeSet;
use crate::multi::{self, ExtensionWeights, MultiSpace, MultiState, VacuumSpec};
use crate::oscillator::{BasisIndex, LinearOperator, SingleBasis};
use crate::linalg::SparseMatrix;
use crate::perturbation::atom::TwoLevelAtom;
use crate::perturbation::first_order::{coupling, time_factor};
use crate::perturbation::kernel::{delta_t, lobe_half_width};
use crate::perturbation::slots::{SlotConfig, SlotKet};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionOptions {
    /// Duration entering the finite-time kernel.
    pub t: f64,
    /// Minimum number of distinct mode frequencies inside the central lobe.
    pub min_lobe_frequencies: usize,
}

impl EmissionOptions {
    pub fn new(t: f64) -> Self {
        EmissionOptions { t, min_lobe_frequencies: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionRate {
    pub p: f64,
    pub p_old: f64,
    pub ratio: f64,
    pub lobe_frequencies: usize,
}

/// Distinct frequencies within the central lobe of the kernel around `omega0`.
pub fn lobe_frequencies(ms: &ModeSet, omega0: f64, t: f64) -> usize {
    let half = lobe_half_width(t, 1.0);
    let mut inside: Vec<f64> = ms.modes().iter().map(|m| m.omega).filter(|w| (w - omega0).abs() < half).collect();
    inside.sort_by(f64::total_cmp);
    inside.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    inside.len()
}

/// `P = 2 pi w0^2 d^2 sum F(w) |g|^2 delta_T(w0 - w)` together with the
/// same sum for `F = 1`, and their ratio.
pub fn emission_rate(atom: &TwoLevelAtom, profile: impl Fn(f64) -> f64, ms: &ModeSet, opts: &EmissionOptions) -> Result<EmissionRate> {
    let lobe = lobe_frequencies(ms, atom.omega0, opts.t);
    if lobe < opts.min_lobe_frequencies {
        return Err(Error::UnresolvedKernel { modes_in_lobe: lobe, required: opts.min_lobe_frequencies });
    }
    let prefactor = 2.0 * PI * atom.omega0 * atom.omega0 * atom.d * atom.d;
    let (mut p, mut p_old) = (0.0, 0.0);
    for m in 0..ms.len() {
        let omega = ms.mode(m).omega;
        let w = coupling(atom, ms, m).norm_sqr() * delta_t(atom.omega0 - omega, opts.t, 1.0);
        p += profile(omega) * w;
        p_old += w;
    }
    let (p, p_old) = (prefactor * p, prefactor * p_old);
    Ok(EmissionRate { p, p_old, ratio: p / p_old, lobe_frequencies: lobe })
}

/// First-order emission from an excited atom in a multi-oscillator vacuum.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiFirstOrder {
    /// Field part of the correction; the atom is in its ground state.
    pub correction: MultiState,
    /// `sum_k k c_k^2 p_k`.
    pub rate_factor: f64,
    /// Correction norm squared relative to the single-oscillator one.
    pub numeric_factor: f64,
    /// Number of slot placements that carry the emission, per sector.
    pub placements: Vec<usize>,
}

fn emission_operator(atom: &TwoLevelAtom, ms: &ModeSet, n_max: usize, t: f64) -> LinearOperator {
    let b = SingleBasis::for_modes(ms, n_max);
    let mut triplets = Vec::new();
    for m in 0..ms.len() {
        let coef = time_factor(atom.omega0 - ms.mode(m).omega, t) * coupling(atom, ms, m).conj() * (atom.omega0 * atom.d);
        for n in 0..n_max {
            let s = libm::sqrt((n + 1) as f64);
            triplets.push((b.flat(BasisIndex { mode: m, n: n + 1 }), b.flat(BasisIndex { mode: m, n }), coef * s));
        }
    }
    LinearOperator::new(SparseMatrix::from_triplets(b.dim(), b.dim(), triplets), n_max)
}

/// The interaction is block diagonal in the oscillator number, so sector `k`
/// of the correction is `c_k sum_i K_i` applied to `sqrt(p_k) phi^{(x)k}`,
/// where `K` is the single-oscillator first-order emission operator.
pub fn multi_first_order(
    atom: &TwoLevelAtom,
    v: &VacuumSpec,
    w: &ExtensionWeights,
    ms: &ModeSet,
    max_sector: usize,
    t: f64,
) -> Result<MultiFirstOrder> {
    let space = MultiSpace::new(ms, 1, max_sector)?;
    let vacuum = multi::vacuum_state(&space, v)?;
    let k_op = emission_operator(atom, ms, 1, t);
    let correction = multi::extend_operator(&k_op, w, &space)?.apply(&vacuum);

    let phi = v.ground_profile(space.single())?;
    let single_norm: f64 = k_op.apply(&phi).iter().map(|a| a.norm_sqr()).sum();
    let numeric_factor = if single_norm > 0.0 { correction.norm() * correction.norm() / single_norm } else { 0.0 };
    let rate_factor = (1..=max_sector).map(|k| k as f64 * w.get_squared(k) * v.p_k(k)).sum();

    let placements = (1..=max_sector)
        .map(|k| placement_count(&k_op, &phi, ms, k))
        .collect();
    Ok(MultiFirstOrder { correction, rate_factor, numeric_factor, placements })
}

/// Applies `sum_i K_i` slot by slot to `phi^{(x)k}` in the product basis and
/// counts the slots that end up excited.
fn placement_count(k_op: &LinearOperator, phi: &[C64], ms: &ModeSet, k: usize) -> usize {
    let b = SingleBasis::new(ms.len(), 1);
    let single: Vec<(usize, C64)> = (0..ms.len())
        .map(|m| (m, phi[b.flat(BasisIndex { mode: m, n: 0 })]))
        .filter(|(_, a)| a.norm() != 0.0)
        .collect();
    let mut ket = SlotKet::new();
    ket.insert(SlotConfig { atom: 1, slots: Vec::new() }, C64::new(1.0, 0.0));
    for _ in 0..k {
        let mut next = SlotKet::new();
        for (cfg, amp) in &ket {
            for &(m, a) in &single {
                let mut slots = cfg.slots.clone();
                slots.push((m, 0));
                *next.entry(SlotConfig { atom: cfg.atom, slots }).or_default() += amp * a;
            }
        }
        ket = next;
    }
    let mut excited_slots = vec![false; k];
    for (cfg, amp) in &ket {
        for i in 0..k {
            let (m, n) = cfg.slots[i];
            let target = b.flat(BasisIndex { mode: m, n: n + 1 });
            let elem = k_op.matrix().get(target, b.flat(BasisIndex { mode: m, n }));
            if (elem * amp).norm() != 0.0 {
                excited_slots[i] = true;
            }
        }
    }
    excited_slots.iter().filter(|&&e| e).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{Constants, Helicity, Mode};

    fn atom() -> TwoLevelAtom {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        TwoLevelAtom::new(1.0, 0.05, [C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)]).unwrap()
    }

    fn shell() -> ModeSet {
        // |n| ~ 20 at omega = 1
        let l = 2.0 * PI * 20.0;
        ModeSet::shell(l, 0.8, 1.2, 1.0, Constants::default()).unwrap()
    }

    #[test]
    fn uniform_profile_gives_unit_ratio() {
        let r = emission_rate(&atom(), |_| 1.0, &shell(), &EmissionOptions::new(400.0)).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-14);
        assert!(r.p_old > 0.0);
    }

    #[test]
    fn gaussian_profile_ratio() {
        let sigma = 0.1;
        let f = |w: f64| 0.25 * libm::exp(-(w - 1.0) * (w - 1.0) / (2.0 * sigma * sigma));
        let r = emission_rate(&atom(), f, &shell(), &EmissionOptions::new(400.0)).unwrap();
        assert!((r.ratio / 0.25 - 1.0).abs() < 0.02, "{}", r.ratio);
    }

    #[test]
    fn unresolved_kernel_rejected() {
        let err = emission_rate(&atom(), |_| 1.0, &shell(), &EmissionOptions::new(1e6)).unwrap_err();
        assert!(matches!(err, Error::UnresolvedKernel { .. }));
    }

    fn small_modes() -> ModeSet {
        let list = [
            Mode::new(Helicity::Plus, [0.0, 0.0, 1.0], 1.0).unwrap(),
            Mode::new(Helicity::Minus, [0.0, 0.0, 1.0], 1.0).unwrap(),
            Mode::new(Helicity::Plus, [0.0, 1.1, 0.0], 1.0).unwrap(),
        ];
        ModeSet::new(list.to_vec(), 3.0, Constants::default()).unwrap()
    }

    fn vacuum(p: Vec<f64>) -> VacuumSpec {
        VacuumSpec::new(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.48), C64::new(0.64, 0.0)], p).unwrap()
    }

    #[test]
    fn canonical_weights_give_unit_factor() {
        let r = multi_first_order(&atom(), &vacuum(vec![0.2, 0.5, 0.3]), &ExtensionWeights::canonical(3), &small_modes(), 3, 2.0).unwrap();
        assert!((r.rate_factor - 1.0).abs() < 1e-14);
        assert!((r.numeric_factor - 1.0).abs() < 1e-12);
        assert_eq!(r.placements, vec![1, 2, 3]);
    }

    #[test]
    fn unit_weights_double_in_pair_sector() {
        let r = multi_first_order(&atom(), &vacuum(vec![0.0, 1.0]), &ExtensionWeights::ones(2), &small_modes(), 2, 2.0).unwrap();
        assert!((r.rate_factor - 2.0).abs() < 1e-14);
        assert!((r.numeric_factor - 2.0).abs() < 1e-12);
        assert_eq!(r.correction.sector_probability(1), 0.0);
    }

    #[test]
    fn overflowing_vacuum_rejected() {
        let err = multi_first_order(&atom(), &vacuum(vec![0.0, 0.0, 1.0]), &ExtensionWeights::canonical(2), &small_modes(), 2, 1.0);
        assert!(matches!(err, Err(Error::SectorOverflow { .. })));
    }
}
