//! The finite spectrum of the frequency operator: modes labelled by helicity
//! and wavevector, the quantization volume, and the helicity polarization
//! basis every field construction uses.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{invalid, Error, Result};
use crate::vec3::{self, CVec3, Vec3};
use crate::C64;

/// Physical constants. Natural units (all ones) by default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub c_light: f64,
    pub hbar: f64,
    pub k_b: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants { c_light: 1.0, hbar: 1.0, k_b: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Helicity {
    Plus,
    Minus,
}

impl Helicity {
    pub fn sign(self) -> f64 {
        match self {
            Helicity::Plus => 1.0,
            Helicity::Minus => -1.0,
        }
    }

    pub fn from_sign(s: i32) -> Result<Self> {
        match s {
            1 => Ok(Helicity::Plus),
            -1 => Ok(Helicity::Minus),
            _ => Err(invalid("helicity", "must be +1 or -1")),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Helicity::Plus => Helicity::Minus,
            Helicity::Minus => Helicity::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub helicity: Helicity,
    pub kappa: Vec3,
    pub omega: f64,
}

impl Mode {
    /// `omega = c |kappa|`; zero-frequency modes are rejected.
    pub fn new(helicity: Helicity, kappa: Vec3, c_light: f64) -> Result<Self> {
        let k = vec3::norm(&kappa);
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::ZeroWavevector);
        }
        Ok(Mode { helicity, kappa, omega: c_light * k })
    }

    pub fn direction(&self) -> Vec3 {
        vec3::scale(&self.kappa, 1.0 / vec3::norm(&self.kappa))
    }

    fn label_key(&self) -> (Helicity, [u64; 3]) {
        (self.helicity, [self.kappa[0].to_bits(), self.kappa[1].to_bits(), self.kappa[2].to_bits()])
    }

    fn same_label(&self, other: &Mode) -> bool {
        self.helicity == other.helicity
            && self.kappa.iter().zip(&other.kappa).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// A transverse, null, unit-normalized complex polarization vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationVector(pub CVec3);

impl PolarizationVector {
    pub fn components(&self) -> &CVec3 {
        &self.0
    }

    pub fn conj(&self) -> Self {
        PolarizationVector(vec3::conj(&self.0))
    }

    /// Largest violation of `k.e = 0`, `e.e = 0` and `e.e* = 1`.
    pub fn invariant_deviation(&self, kappa: &Vec3) -> f64 {
        let n = vec3::scale(kappa, 1.0 / vec3::norm(kappa));
        let transverse = vec3::real_cdot(&n, &self.0).norm();
        let null = vec3::cdot(&self.0, &self.0).norm();
        let unit = (vec3::cinner(&self.0, &self.0).re - 1.0).abs();
        transverse.max(null).max(unit)
    }
}

/// Helicity basis `e_s = (theta_hat + i s phi_hat) / sqrt 2` in the spherical
/// frame of `kappa`. On the z axis the frame degenerates to the x-y axes, so
/// `kappa || +z` gives `e_+ = (1, i, 0)/sqrt 2`. The pair satisfies
/// `n x e_s = -i s e_s` and `e_- = (e_+)*` with unit global phase.
pub fn helicity_vectors(kappa: &Vec3) -> Result<(PolarizationVector, PolarizationVector)> {
    let k = vec3::norm(kappa);
    if !(k > 0.0) {
        return Err(Error::ZeroWavevector);
    }
    let rho = libm::hypot(kappa[0], kappa[1]);
    let theta = libm::atan2(rho, kappa[2]);
    let phi = if rho == 0.0 { 0.0 } else { libm::atan2(kappa[1], kappa[0]) };
    let (st, ct) = (libm::sin(theta), libm::cos(theta));
    let (sp, cp) = (libm::sin(phi), libm::cos(phi));
    let theta_hat = [ct * cp, ct * sp, -st];
    let phi_hat = [-sp, cp, 0.0];
    let build = |s: f64| -> PolarizationVector {
        let mut e = [C64::new(0.0, 0.0); 3];
        for i in 0..3 {
            e[i] = C64::new(theta_hat[i], s * phi_hat[i]) * FRAC_1_SQRT_2;
        }
        PolarizationVector(e)
    };
    Ok((build(1.0), build(-1.0)))
}

pub fn polarization(mode: &Mode) -> PolarizationVector {
    let (plus, minus) = helicity_vectors(&mode.kappa).expect("modes carry nonzero wavevectors");
    match mode.helicity {
        Helicity::Plus => plus,
        Helicity::Minus => minus,
    }
}

/// Ordered, duplicate-free list of modes with the quantization volume.
/// The ordering fixes every basis index downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    modes: Vec<Mode>,
    polarizations: Vec<PolarizationVector>,
    volume: f64,
    constants: Constants,
}

impl ModeSet {
    pub fn new(modes: Vec<Mode>, volume: f64, constants: Constants) -> Result<Self> {
        if !(volume > 0.0) || !volume.is_finite() {
            return Err(invalid("volume", "must be positive and finite"));
        }
        if !(constants.c_light > 0.0 && constants.hbar > 0.0 && constants.k_b > 0.0) {
            return Err(invalid("constants", "c, hbar and k_B must be positive"));
        }
        if modes.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        let mut seen = BTreeSet::new();
        for (i, m) in modes.iter().enumerate() {
            if !(m.omega > 0.0) {
                return Err(Error::ZeroWavevector);
            }
            if !seen.insert(m.label_key()) {
                return Err(Error::DuplicateMode { index: i });
            }
        }
        let polarizations = modes.iter().map(polarization).collect();
        Ok(ModeSet { modes, polarizations, volume, constants })
    }

    /// All modes `kappa = (2 pi / L) n` with integer `n` in
    /// `[-max_index, max_index]^3 \ {0}`, both helicities. Sorted by `|n|^2`,
    /// then lexicographically by `n`, then `+` before `-`.
    pub fn cubic(box_length: f64, max_index: u32, volume: f64, constants: Constants) -> Result<Self> {
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(invalid("box_length", "must be positive and finite"));
        }
        if max_index == 0 {
            return Err(Error::EmptySpectrum);
        }
        let r = max_index as i32;
        let mut lattice: Vec<[i32; 3]> = Vec::new();
        for x in -r..=r {
            for y in -r..=r {
                for z in -r..=r {
                    if (x, y, z) != (0, 0, 0) {
                        lattice.push([x, y, z]);
                    }
                }
            }
        }
        lattice.sort_by_key(|n| (n[0] * n[0] + n[1] * n[1] + n[2] * n[2], *n));
        let unit = 2.0 * PI / box_length;
        let mut modes = Vec::with_capacity(2 * lattice.len());
        for n in &lattice {
            let kappa = [unit * n[0] as f64, unit * n[1] as f64, unit * n[2] as f64];
            for h in [Helicity::Plus, Helicity::Minus] {
                modes.push(Mode::new(h, kappa, constants.c_light)?);
            }
        }
        Self::new(modes, volume, constants)
    }

    /// Lattice modes `kappa = (2 pi / L) n` with `omega_min <= c|kappa| <= omega_max`,
    /// both helicities, ordered like [`ModeSet::cubic`].
    pub fn shell(box_length: f64, omega_min: f64, omega_max: f64, volume: f64, constants: Constants) -> Result<Self> {
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(invalid("box_length", "must be positive and finite"));
        }
        if !(omega_min >= 0.0 && omega_max > omega_min && omega_max.is_finite()) {
            return Err(invalid("omega window", "need 0 <= omega_min < omega_max < inf"));
        }
        let unit = 2.0 * PI / box_length;
        let (lo, hi) = (omega_min / (constants.c_light * unit), omega_max / (constants.c_light * unit));
        let r = libm::ceil(hi) as i32;
        let mut lattice: Vec<[i32; 3]> = Vec::new();
        for x in -r..=r {
            for y in -r..=r {
                for z in -r..=r {
                    let q = libm::sqrt((x * x + y * y + z * z) as f64);
                    if q > 0.0 && q >= lo && q <= hi {
                        lattice.push([x, y, z]);
                    }
                }
            }
        }
        lattice.sort_by_key(|n| (n[0] * n[0] + n[1] * n[1] + n[2] * n[2], *n));
        let mut modes = Vec::with_capacity(2 * lattice.len());
        for n in &lattice {
            let kappa = [unit * n[0] as f64, unit * n[1] as f64, unit * n[2] as f64];
            for h in [Helicity::Plus, Helicity::Minus] {
                modes.push(Mode::new(h, kappa, constants.c_light)?);
            }
        }
        Self::new(modes, volume, constants)
    }

    /// Keeps the modes accepted by `keep`, in their existing order.
    pub fn filtered(&self, mut keep: impl FnMut(&Mode) -> bool) -> Result<Self> {
        let modes = self.modes.iter().copied().filter(|m| keep(m)).collect();
        Self::new(modes, self.volume, self.constants)
    }

    pub fn truncated(&self, count: usize) -> Result<Self> {
        Self::new(self.modes.iter().copied().take(count).collect(), self.volume, self.constants)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode(&self, index: usize) -> &Mode {
        &self.modes[index]
    }

    pub fn polarization(&self, index: usize) -> &PolarizationVector {
        &self.polarizations[index]
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn constants(&self) -> &Constants {
        &self.constants
    }

    pub fn index_of(&self, mode: &Mode) -> Result<usize> {
        self.modes.iter().position(|m| m.same_label(mode)).ok_or(Error::UnknownMode)
    }

    /// Index of the opposite-helicity partner sharing the same wavevector.
    pub fn partner(&self, index: usize) -> Option<usize> {
        let m = self.modes[index];
        let flipped = Mode { helicity: m.helicity.flipped(), ..m };
        self.index_of(&flipped).ok()
    }
}
