//! Second-order amplitudes in the k-oscillator sectors, computed on explicit
//! product configurations: every oscillator slot carries one `(mode, n)`
//! and the interaction acts on each slot through that slot's own mode.
//!
//! `A(i -> f) = -2 pi i delta_T(E_i - E_f) sum_c V_fc V_ci / (E_i - E_c + i eta)`
//! with `V = -(e/m) c_k sum_slots sqrt(hbar / 2 w V) (a e.p + a^dag e*.p)`
//! at the origin.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::modes::ModeSet;
use crate::multi::{ExtensionWeights, VacuumSpec};
use crate::perturbation::atom::MultiLevelAtom;
use crate::perturbation::kernel::delta_t;
use crate::report::Report;
use crate::vec3;
use crate::C64;

/// Atomic level plus one `(mode, n)` per oscillator slot.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotConfig {
    pub atom: usize,
    pub slots: Vec<(usize, usize)>,
}

impl SlotConfig {
    pub fn excitations(&self) -> usize {
        self.slots.iter().map(|(_, n)| n).sum()
    }
}

pub type SlotKet = BTreeMap<SlotConfig, C64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderOptions {
    /// Duration entering `delta_T`.
    pub t: f64,
    /// Imaginary shift of the energy denominators.
    pub eta: f64,
    /// Accept denominators with `|E_i - E_c| < eta`.
    pub regularize: bool,
}

impl SecondOrderOptions {
    pub fn new(t: f64) -> Self {
        SecondOrderOptions { t, eta: 1e-6, regularize: false }
    }
}

/// What the final state holds in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotBra {
    /// `<mode, 1|`.
    Excited(usize),
    /// `<phi|`, the vacuum ground profile.
    Profile,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeResult {
    pub value: C64,
    pub sector: usize,
    pub initial_level: usize,
    pub final_level: usize,
    pub targets: (usize, usize),
    pub t: f64,
}

pub fn config_energy(atom: &MultiLevelAtom, ms: &ModeSet, cfg: &SlotConfig) -> f64 {
    let hbar = ms.constants().hbar;
    atom.energy(cfg.atom) + cfg.slots.iter().map(|&(m, n)| hbar * ms.mode(m).omega * (n as f64 + 0.5)).sum::<f64>()
}

/// `V` acting on a slot ket with sector weight `c_k`.
pub fn apply_dipole(atom: &MultiLevelAtom, ms: &ModeSet, c_k: f64, ket: &SlotKet) -> SlotKet {
    let hbar = ms.constants().hbar;
    let mut out = SlotKet::new();
    for (cfg, amp) in ket {
        for level in 0..atom.levels() {
            let p = atom.p(level, cfg.atom);
            if p.iter().all(|v| v.norm() == 0.0) {
                continue;
            }
            for (i, &(m, n)) in cfg.slots.iter().enumerate() {
                let coef = -atom.charge / atom.mass * c_k * libm::sqrt(hbar / (2.0 * ms.mode(m).omega * ms.volume()));
                let e = &ms.polarization(m).0;
                let mut push = |n_new: usize, value: C64| {
                    if value.norm() == 0.0 {
                        return;
                    }
                    let mut slots = cfg.slots.clone();
                    slots[i] = (m, n_new);
                    *out.entry(SlotConfig { atom: level, slots }).or_default() += value;
                };
                if n > 0 {
                    push(n - 1, amp * coef * libm::sqrt(n as f64) * vec3::cdot(e, p));
                }
                push(n + 1, amp * coef * libm::sqrt((n + 1) as f64) * vec3::cdot(&vec3::conj(e), p));
            }
        }
    }
    out
}

/// `|level> (x) phi^{(x)k}` expanded over product configurations.
pub fn product_ket(phi: &[C64], k: usize, level: usize) -> SlotKet {
    let support: Vec<(usize, C64)> = phi.iter().copied().enumerate().filter(|(_, a)| a.norm() != 0.0).collect();
    let mut ket = SlotKet::new();
    ket.insert(SlotConfig { atom: level, slots: Vec::new() }, C64::new(1.0, 0.0));
    for _ in 0..k {
        let mut next = SlotKet::new();
        for (cfg, amp) in &ket {
            for &(m, a) in &support {
                let mut slots = cfg.slots.clone();
                slots.push((m, 0));
                next.insert(SlotConfig { atom: level, slots }, amp * a);
            }
        }
        ket = next;
    }
    ket
}

/// The final state `<level| (x) slot bras` as a ket (amplitudes not conjugated).
pub fn bra_ket(phi: &[C64], bras: &[SlotBra], level: usize) -> SlotKet {
    let mut ket = SlotKet::new();
    ket.insert(SlotConfig { atom: level, slots: Vec::new() }, C64::new(1.0, 0.0));
    for bra in bras {
        let choices: Vec<((usize, usize), C64)> = match *bra {
            SlotBra::Excited(m) => vec![((m, 1), C64::new(1.0, 0.0))],
            SlotBra::Profile => phi.iter().enumerate().filter(|(_, a)| a.norm() != 0.0).map(|(m, a)| ((m, 0), *a)).collect(),
        };
        let mut next = SlotKet::new();
        for (cfg, amp) in &ket {
            for &(slot, a) in &choices {
                let mut slots = cfg.slots.clone();
                slots.push(slot);
                next.insert(SlotConfig { atom: level, slots }, amp * a);
            }
        }
        ket = next;
    }
    ket
}

/// `sum_c V|i> / (E_i - E_c + i eta)` for one initial configuration.
fn resolvent_step(atom: &MultiLevelAtom, ms: &ModeSet, c_k: f64, cfg: &SlotConfig, opts: &SecondOrderOptions) -> Result<SlotKet> {
    let e_i = config_energy(atom, ms, cfg);
    let mut single = SlotKet::new();
    single.insert(cfg.clone(), C64::new(1.0, 0.0));
    let mut mid = apply_dipole(atom, ms, c_k, &single);
    for (c, v) in mid.iter_mut() {
        let gap = e_i - config_energy(atom, ms, c);
        if gap.abs() < opts.eta && !opts.regularize {
            return Err(Error::NearResonantDenominator { gap, eta: opts.eta });
        }
        *v /= C64::new(gap, opts.eta);
    }
    Ok(mid)
}

/// Second-order amplitude between two slot kets in one sector.
pub fn transition_amplitude(
    atom: &MultiLevelAtom,
    ms: &ModeSet,
    c_k: f64,
    initial: &SlotKet,
    final_state: &SlotKet,
    opts: &SecondOrderOptions,
) -> Result<C64> {
    let hbar = ms.constants().hbar;
    let mut total = C64::new(0.0, 0.0);
    for (cfg_i, amp_i) in initial {
        let e_i = config_energy(atom, ms, cfg_i);
        let mid = resolvent_step(atom, ms, c_k, cfg_i, opts)?;
        let out = apply_dipole(atom, ms, c_k, &mid);
        for (cfg_f, bra) in final_state {
            if let Some(v) = out.get(cfg_f) {
                let kernel = delta_t(e_i - config_energy(atom, ms, cfg_f), opts.t, hbar);
                total += bra.conj() * v * amp_i * kernel;
            }
        }
    }
    Ok(total * C64::new(0.0, -2.0 * PI))
}

/// Sector-`k` amplitude from `|a> phi^{(x)k}` to `<b| (x) bras`, without the
/// `sqrt(p_k)` sector weight.
pub fn sector_amplitude(
    atom: &MultiLevelAtom,
    ms: &ModeSet,
    phi: &[C64],
    c_k: f64,
    levels: (usize, usize),
    bras: &[SlotBra],
    opts: &SecondOrderOptions,
) -> Result<C64> {
    if phi.len() != ms.len() {
        return Err(Error::DimensionMismatch { expected: ms.len(), found: phi.len() });
    }
    if levels.0 >= atom.levels() || levels.1 >= atom.levels() {
        return Err(invalid("levels", "atomic level out of range"));
    }
    let initial = product_ket(phi, bras.len(), levels.0);
    let final_state = bra_ket(phi, bras, levels.1);
    transition_amplitude(atom, ms, c_k, &initial, &final_state, opts)
}

fn check_targets(ms: &ModeSet, targets: (usize, usize)) -> Result<()> {
    if targets.0 >= ms.len() || targets.1 >= ms.len() {
        return Err(Error::UnknownMode);
    }
    if targets.0 == targets.1 {
        return Err(invalid("targets", "the two emitted quanta must be in distinct modes"));
    }
    Ok(())
}

/// `<b| <t1, 1| <t2, 1| U^(2) |a> |Psi>` for the vacuum `v`: only the
/// two-oscillator sector contributes.
pub fn second_order_two_quanta(
    atom: &MultiLevelAtom,
    v: &VacuumSpec,
    w: &ExtensionWeights,
    ms: &ModeSet,
    levels: (usize, usize),
    targets: (usize, usize),
    opts: &SecondOrderOptions,
) -> Result<AmplitudeResult> {
    check_targets(ms, targets)?;
    if w.max_sector() < 2 {
        return Err(Error::SectorOverflow { sector: 2, max_sector: w.max_sector() });
    }
    let p2 = v.p_k(2);
    let value = if p2 == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        let bras = [SlotBra::Excited(targets.0), SlotBra::Excited(targets.1)];
        sector_amplitude(atom, ms, v.phi(), w.get(2), levels, &bras, opts)? * libm::sqrt(p2)
    };
    Ok(AmplitudeResult { value, sector: 2, initial_level: levels.0, final_level: levels.1, targets, t: opts.t })
}

/// The displayed closed form
/// `-c_2^2 sqrt(p_2) (2 pi i e^2/m^2) sqrt(hbar/2w_1V) sqrt(hbar/2w_2V) phi_1 phi_2
///  sum_c [(e_2*.p_bc)(e_1*.p_ca)/(E_a - E_c - hbar w_1 + i eta) + (1 <-> 2)] delta_T(E_a - E_b - hbar w_1 - hbar w_2)`.
pub fn closed_form_two_quanta(
    atom: &MultiLevelAtom,
    v: &VacuumSpec,
    w: &ExtensionWeights,
    ms: &ModeSet,
    levels: (usize, usize),
    targets: (usize, usize),
    opts: &SecondOrderOptions,
) -> Result<C64> {
    check_targets(ms, targets)?;
    let phi = v.phi();
    let weight = w.get(2) * w.get(2) * libm::sqrt(v.p_k(2)) * phi[targets.0] * phi[targets.1];
    Ok(weight * standard_closed_form(atom, ms, levels, targets, opts))
}

/// Standard-formalism closed form, shared with the modified amplitude.
pub fn standard_closed_form(atom: &MultiLevelAtom, ms: &ModeSet, levels: (usize, usize), targets: (usize, usize), opts: &SecondOrderOptions) -> C64 {
    let hbar = ms.constants().hbar;
    let (a, b) = levels;
    let (m1, m2) = targets;
    let (w1, w2) = (ms.mode(m1).omega, ms.mode(m2).omega);
    let e1 = vec3::conj(&ms.polarization(m1).0);
    let e2 = vec3::conj(&ms.polarization(m2).0);
    let mut sum = C64::new(0.0, 0.0);
    for c in 0..atom.levels() {
        let gap = atom.energy(a) - atom.energy(c);
        sum += vec3::cdot(&e2, atom.p(b, c)) * vec3::cdot(&e1, atom.p(c, a)) / C64::new(gap - hbar * w1, opts.eta);
        sum += vec3::cdot(&e1, atom.p(b, c)) * vec3::cdot(&e2, atom.p(c, a)) / C64::new(gap - hbar * w2, opts.eta);
    }
    let e2m2 = atom.charge * atom.charge / (atom.mass * atom.mass);
    let amps = libm::sqrt(hbar / (2.0 * w1 * ms.volume())) * libm::sqrt(hbar / (2.0 * w2 * ms.volume()));
    let kernel = delta_t(atom.energy(a) - atom.energy(b) - hbar * w1 - hbar * w2, opts.t, hbar);
    C64::new(0.0, -2.0 * PI * e2m2 * amps * kernel) * sum
}

fn relative_deviation(x: C64, y: C64) -> f64 {
    let scale = x.norm().max(y.norm());
    if scale == 0.0 {
        0.0
    } else {
        (x - y).norm() / scale
    }
}

/// Compares `c_3^{-2} A_3` with `c_2^{-2} A_2` for each of the three
/// placements of the spectator slot, using sector amplitudes without the
/// `sqrt(p_k)` weights.
pub fn three_oscillator_identity_check(
    atom: &MultiLevelAtom,
    v: &VacuumSpec,
    w: &ExtensionWeights,
    ms: &ModeSet,
    levels: (usize, usize),
    targets: (usize, usize),
    opts: &SecondOrderOptions,
) -> Result<Report> {
    const TOL: f64 = 1e-10;
    check_targets(ms, targets)?;
    if w.max_sector() < 3 {
        return Err(Error::SectorOverflow { sector: 3, max_sector: w.max_sector() });
    }
    let (t1, t2) = (SlotBra::Excited(targets.0), SlotBra::Excited(targets.1));
    let a2 = sector_amplitude(atom, ms, v.phi(), w.get(2), levels, &[t1, t2], opts)? / (w.get(2) * w.get(2));
    let placements = [
        ("spectator in slot 3", [t1, t2, SlotBra::Profile]),
        ("spectator in slot 2", [t1, SlotBra::Profile, t2]),
        ("spectator in slot 1", [SlotBra::Profile, t1, t2]),
    ];
    let mut report = Report::new(format!("three-oscillator sector (targets {:?}, levels {:?})", targets, levels));
    let mut amplitudes = Vec::new();
    for (label, bras) in placements {
        let a3 = sector_amplitude(atom, ms, v.phi(), w.get(3), levels, &bras, opts)? / (w.get(3) * w.get(3));
        report.at_most(format!("c3^-2 A3 = c2^-2 A2, {label}"), relative_deviation(a3, a2), TOL);
        amplitudes.push(a3);
    }
    let spread = amplitudes.iter().map(|a| relative_deviation(*a, amplitudes[0])).fold(0.0, f64::max);
    report.at_most("equal amplitude for all 3 spectator placements", spread, TOL);
    Ok(report)
}

/// Largest total excitation among configurations reached by the second-order
/// operator `V G V` from `|a> phi^{(x)k}`.
pub fn second_order_max_excitation(
    atom: &MultiLevelAtom,
    ms: &ModeSet,
    phi: &[C64],
    c_k: f64,
    k: usize,
    level: usize,
    opts: &SecondOrderOptions,
) -> Result<usize> {
    let mut max = 0;
    for cfg in product_ket(phi, k, level).keys() {
        let mid = resolvent_step(atom, ms, c_k, cfg, opts)?;
        let out = apply_dipole(atom, ms, c_k, &mid);
        max = out.iter().filter(|(_, v)| v.norm() != 0.0).map(|(c, _)| c.excitations()).fold(max, usize::max);
    }
    Ok(max)
}

/// `2 sum_n n(n-1)/2 c_n^4 p_n`.
pub fn two_photon_factor(v: &VacuumSpec, w: &ExtensionWeights) -> Result<f64> {
    if v.p().len() > w.max_sector() {
        return Err(Error::SectorOverflow { sector: v.p().len(), max_sector: w.max_sector() });
    }
    Ok((1..=v.p().len()).map(|n| (n * (n - 1)) as f64 * w.get_squared(n) * w.get_squared(n) * v.p_k(n)).sum())
}

/// `1 - sum_n p_n / n`, the factor for `c_n = 1/sqrt n`.
pub fn canonical_two_photon_factor(v: &VacuumSpec) -> f64 {
    1.0 - (1..=v.p().len()).map(|n| v.p_k(n) / n as f64).sum::<f64>()
}

/// `p = 2 sum n(n-1)/2 c_n^4 p_n |phi_1|^2 |phi_2|^2 p_old`.
pub fn two_photon_probability(v: &VacuumSpec, w: &ExtensionWeights, per_channel_old: f64, targets: (usize, usize)) -> Result<f64> {
    let phi = v.phi();
    if targets.0 >= phi.len() || targets.1 >= phi.len() {
        return Err(Error::UnknownMode);
    }
    Ok(two_photon_factor(v, w)? * phi[targets.0].norm_sqr() * phi[targets.1].norm_sqr() * per_channel_old)
}

/// Total two-quanta probability summed over sectors and over every ordered
/// pair of slots holding the targets, with the other slots in `<phi|`.
pub fn two_photon_probability_numeric(
    atom: &MultiLevelAtom,
    v: &VacuumSpec,
    w: &ExtensionWeights,
    ms: &ModeSet,
    levels: (usize, usize),
    targets: (usize, usize),
    opts: &SecondOrderOptions,
) -> Result<f64> {
    check_targets(ms, targets)?;
    if v.p().len() > w.max_sector() {
        return Err(Error::SectorOverflow { sector: v.p().len(), max_sector: w.max_sector() });
    }
    let mut total = 0.0;
    for n in 2..=v.p().len() {
        let p = v.p_k(n);
        if p == 0.0 {
            continue;
        }
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let mut bras = vec![SlotBra::Profile; n];
                bras[i] = SlotBra::Excited(targets.0);
                bras[j] = SlotBra::Excited(targets.1);
                total += p * sector_amplitude(atom, ms, v.phi(), w.get(n), levels, &bras, opts)?.norm_sqr();
            }
        }
    }
    Ok(total)
}
