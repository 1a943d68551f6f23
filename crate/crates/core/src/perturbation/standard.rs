//! Second-order two-quanta amplitude in ordinary Fock space, one oscillator
//! per mode. Serves as the reference the multi-oscillator amplitude is
//! compared against.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::modes::ModeSet;
use crate::perturbation::atom::MultiLevelAtom;
use crate::perturbation::kernel::delta_t;
use crate::perturbation::slots::SecondOrderOptions;
use crate::vec3;
use crate::C64;

/// Atomic level plus the nonzero occupations, sorted by mode.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct FockConfig {
    atom: usize,
    occupations: Vec<(usize, usize)>,
}

impl FockConfig {
    fn occupation(&self, m: usize) -> usize {
        self.occupations.iter().find(|(k, _)| *k == m).map_or(0, |(_, n)| *n)
    }

    fn with(&self, atom: usize, m: usize, n: usize) -> Self {
        let mut occupations: Vec<(usize, usize)> = self.occupations.iter().copied().filter(|(k, _)| *k != m).collect();
        if n > 0 {
            occupations.push((m, n));
            occupations.sort_unstable();
        }
        FockConfig { atom, occupations }
    }
}

type FockKet = BTreeMap<FockConfig, C64>;

// zero-point energy dropped: it cancels in every difference
fn energy(atom: &MultiLevelAtom, ms: &ModeSet, cfg: &FockConfig) -> f64 {
    let hbar = ms.constants().hbar;
    atom.energy(cfg.atom) + cfg.occupations.iter().map(|&(m, n)| hbar * ms.mode(m).omega * n as f64).sum::<f64>()
}

fn apply(atom: &MultiLevelAtom, ms: &ModeSet, ket: &FockKet) -> FockKet {
    let hbar = ms.constants().hbar;
    let mut out = FockKet::new();
    for (cfg, amp) in ket {
        for level in 0..atom.levels() {
            let p = atom.p(level, cfg.atom);
            for m in 0..ms.len() {
                let e = &ms.polarization(m).0;
                let coef = -atom.charge / atom.mass * libm::sqrt(hbar / (2.0 * ms.mode(m).omega * ms.volume()));
                let n = cfg.occupation(m);
                if n > 0 {
                    let v = amp * coef * libm::sqrt(n as f64) * vec3::cdot(e, p);
                    if v.norm() != 0.0 {
                        *out.entry(cfg.with(level, m, n - 1)).or_default() += v;
                    }
                }
                let v = amp * coef * libm::sqrt((n + 1) as f64) * vec3::cdot(&vec3::conj(e), p);
                if v.norm() != 0.0 {
                    *out.entry(cfg.with(level, m, n + 1)).or_default() += v;
                }
            }
        }
    }
    out
}

/// Contributions to `<b; 1_t1 1_t2| U^(2) |a; 0>` split by which target
/// mode the intermediate state holds.
pub fn standard_orderings(
    atom: &MultiLevelAtom,
    ms: &ModeSet,
    levels: (usize, usize),
    targets: (usize, usize),
    opts: &SecondOrderOptions,
) -> Result<[C64; 2]> {
    if targets.0 >= ms.len() || targets.1 >= ms.len() {
        return Err(Error::UnknownMode);
    }
    if targets.0 == targets.1 {
        return Err(invalid("targets", "the two emitted quanta must be in distinct modes"));
    }
    if levels.0 >= atom.levels() || levels.1 >= atom.levels() {
        return Err(invalid("levels", "atomic level out of range"));
    }
    let hbar = ms.constants().hbar;
    let initial = FockConfig { atom: levels.0, occupations: Vec::new() };
    let e_i = energy(atom, ms, &initial);
    let target = initial.with(levels.1, targets.0, 1).with(levels.1, targets.1, 1);
    let kernel = delta_t(e_i - energy(atom, ms, &target), opts.t, hbar);

    let mut start = FockKet::new();
    start.insert(initial, C64::new(1.0, 0.0));
    let mut parts = [C64::new(0.0, 0.0); 2];
    for (c, v_ci) in apply(atom, ms, &start) {
        let gap = e_i - energy(atom, ms, &c);
        if gap.abs() < opts.eta && !opts.regularize {
            return Err(Error::NearResonantDenominator { gap, eta: opts.eta });
        }
        let slot = if c.occupation(targets.0) == 1 {
            0
        } else if c.occupation(targets.1) == 1 {
            1
        } else {
            continue;
        };
        let mut mid = FockKet::new();
        mid.insert(c, v_ci / C64::new(gap, opts.eta));
        if let Some(v) = apply(atom, ms, &mid).get(&target) {
            parts[slot] += v * kernel * C64::new(0.0, -2.0 * PI);
        }
    }
    Ok(parts)
}

pub fn standard_oracle_two_photon(
    atom: &MultiLevelAtom,
    ms: &ModeSet,
    levels: (usize, usize),
    targets: (usize, usize),
    opts: &SecondOrderOptions,
) -> Result<C64> {
    let [a, b] = standard_orderings(atom, ms, levels, targets, opts)?;
    Ok(a + b)
}
