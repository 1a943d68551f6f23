//! Mode-sum field operators on the single-oscillator space, their coherent
//! averages, and the energy-momentum identities.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::SparseMatrix;
use crate::modes::ModeSet;
use crate::oscillator::{self, coherent_amplitudes, BasisIndex, LinearOperator, SingleBasis, StateVector};
use crate::report::Report;
use crate::vec3::{self, CVec3, Vec3};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    A,
    E,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    X,
    Y,
    Z,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::X, Component::Y, Component::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL.get(i).copied().ok_or_else(|| invalid("component", format!("index {i} is not one of 0, 1, 2")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPoint {
    pub t: f64,
    pub x: Vec3,
}

impl FieldPoint {
    pub fn new(t: f64, x: Vec3) -> Self {
        FieldPoint { t, x }
    }

    pub fn origin() -> Self {
        FieldPoint { t: 0.0, x: [0.0; 3] }
    }
}

/// `|Psi> = sum Phi_k |k> (x) |alpha_k>` with the coherent factors truncated
/// at `n_max`. Vectors are indexed like the mode set.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentFieldSpec {
    phi: Vec<C64>,
    alpha: Vec<C64>,
    n_max: usize,
}

impl CoherentFieldSpec {
    pub fn new(ms: &ModeSet, phi: Vec<C64>, alpha: Vec<C64>, n_max: usize) -> Result<Self> {
        if phi.len() != ms.len() {
            return Err(Error::DimensionMismatch { expected: ms.len(), found: phi.len() });
        }
        if alpha.len() != ms.len() {
            return Err(Error::DimensionMismatch { expected: ms.len(), found: alpha.len() });
        }
        let norm = libm::sqrt(phi.iter().map(|p| p.norm_sqr()).sum::<f64>());
        if (norm * norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized { norm });
        }
        for a in &alpha {
            let tail = oscillator::coherent_tail_bound(a.norm(), n_max);
            if tail >= oscillator::COHERENT_TAIL_LIMIT {
                return Err(Error::TruncationTail { alpha: a.norm(), n_max, tail });
            }
        }
        Ok(CoherentFieldSpec { phi, alpha, n_max })
    }

    pub fn phi(&self) -> &[C64] {
        &self.phi
    }

    pub fn alpha(&self) -> &[C64] {
        &self.alpha
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// The explicit state vector on the single-oscillator basis.
    pub fn state(&self, ms: &ModeSet) -> Result<StateVector> {
        let b = SingleBasis::for_modes(ms, self.n_max);
        let mut amps = vec![C64::new(0.0, 0.0); b.dim()];
        for (k, (phi, alpha)) in self.phi.iter().zip(&self.alpha).enumerate() {
            for (n, c) in coherent_amplitudes(*alpha, self.n_max)?.into_iter().enumerate() {
                amps[b.flat(BasisIndex { mode: k, n })] = *phi * c;
            }
        }
        Ok(StateVector::unnormalized(amps))
    }
}

/// `e^{-i(omega t - kappa.x)}`.
fn phase(omega: f64, kappa: &Vec3, p: &FieldPoint) -> C64 {
    C64::new(0.0, -(omega * p.t - vec3::dot(kappa, &p.x))).exp()
}

/// Coefficient vector `c` of one mode in `F = sum (c a + c* a^dag)`.
fn mode_coefficient(ms: &ModeSet, k: usize, which: FieldKind, p: &FieldPoint) -> CVec3 {
    let m = ms.mode(k);
    let v = ms.volume();
    let hbar = ms.constants().hbar;
    let e = ms.polarization(k).0;
    let ph = phase(m.omega, &m.kappa, p);
    let (weight, vector) = match which {
        FieldKind::A => (C64::new(libm::sqrt(hbar / (2.0 * m.omega * v)), 0.0), e),
        FieldKind::E => (C64::new(0.0, libm::sqrt(hbar * m.omega / (2.0 * v))), e),
        FieldKind::B => (C64::new(0.0, libm::sqrt(hbar * m.omega / (2.0 * v))), vec3::real_cross(&m.direction(), &e)),
    };
    let w = weight * ph;
    [w * vector[0], w * vector[1], w * vector[2]]
}

/// One Cartesian component of the A, E or B field operator at `p`.
pub fn field_operator(
    ms: &ModeSet,
    n_max: usize,
    which: FieldKind,
    component: Component,
    p: &FieldPoint,
) -> Result<LinearOperator> {
    if n_max == 0 {
        return Err(invalid("n_max", "must be at least 1"));
    }
    let b = SingleBasis::for_modes(ms, n_max);
    let j = component.index();
    let mut triplets = Vec::with_capacity(2 * ms.len() * n_max);
    for k in 0..ms.len() {
        let c = mode_coefficient(ms, k, which, p)[j];
        for n in 0..n_max {
            let lower = b.flat(BasisIndex { mode: k, n });
            let upper = b.flat(BasisIndex { mode: k, n: n + 1 });
            let s = libm::sqrt((n + 1) as f64);
            triplets.push((lower, upper, c * s));
            triplets.push((upper, lower, c.conj() * s));
        }
    }
    LinearOperator::hermitian(SparseMatrix::from_triplets(b.dim(), b.dim(), triplets), n_max)
}

pub fn field_vector(ms: &ModeSet, n_max: usize, which: FieldKind, p: &FieldPoint) -> Result<[LinearOperator; 3]> {
    Ok([
        field_operator(ms, n_max, which, Component::X, p)?,
        field_operator(ms, n_max, which, Component::Y, p)?,
        field_operator(ms, n_max, which, Component::Z, p)?,
    ])
}

/// Closed-form `<Psi|F(t,x)|Psi> = sum |Phi|^2 (alpha c + alpha* c*)`, with
/// `c` the mode coefficient of the field (carrying the factor `i` for E and B).
pub fn coherent_field_average(ms: &ModeSet, spec: &CoherentFieldSpec, which: FieldKind, p: &FieldPoint) -> CVec3 {
    let mut out = [C64::new(0.0, 0.0); 3];
    for k in 0..ms.len() {
        let weight = spec.phi[k].norm_sqr();
        let alpha = spec.alpha[k];
        let c = mode_coefficient(ms, k, which, p);
        for j in 0..3 {
            let z = alpha * c[j];
            out[j] += (z + z.conj()) * weight;
        }
    }
    out
}

/// `<Psi|F_j|Psi>` evaluated on the explicitly built coherent state.
pub fn explicit_field_average(ms: &ModeSet, spec: &CoherentFieldSpec, which: FieldKind, p: &FieldPoint) -> Result<CVec3> {
    let psi = spec.state(ms)?;
    let ops = field_vector(ms, spec.n_max, which, p)?;
    Ok([ops[0].expectation(&psi), ops[1].expectation(&psi), ops[2].expectation(&psi)])
}

/// `sum hbar omega |Phi|^2 (|alpha|^2 + 1/2)`.
pub fn coherent_energy(ms: &ModeSet, spec: &CoherentFieldSpec) -> f64 {
    let hbar = ms.constants().hbar;
    (0..ms.len())
        .map(|k| hbar * ms.mode(k).omega * spec.phi[k].norm_sqr() * (spec.alpha[k].norm_sqr() + 0.5))
        .sum()
}

fn dot_ops(a: &[LinearOperator; 3], b: &[LinearOperator; 3]) -> LinearOperator {
    let mut acc = &a[0] * &b[0];
    acc = &acc + &(&a[1] * &b[1]);
    &acc + &(&a[2] * &b[2])
}

fn cross_ops(a: &[LinearOperator; 3], b: &[LinearOperator; 3]) -> [LinearOperator; 3] {
    let comp = |j: usize, k: usize| &(&a[j] * &b[k]) - &(&a[k] * &b[j]);
    [comp(1, 2), comp(2, 0), comp(0, 1)]
}

/// Checks, across the sample points, that `E.E + B.B` and `E x B` do not
/// depend on position, that `V/2 (E.E + B.B) = H` and `V (E x B)/c = P` on
/// the `n < n_max` subspace, and that `E x B = -B x E`.
pub fn energy_momentum_identity_check(ms: &ModeSet, n_max: usize, points: &[FieldPoint]) -> Result<Report> {
    const TOL: f64 = 1e-11;
    if points.len() < 3 {
        return Err(invalid("sample_points", format!("need at least 3, got {}", points.len())));
    }
    let v = ms.volume();
    let c_light = ms.constants().c_light;
    let h = oscillator::hamiltonian(ms, n_max)?;
    let p_op = oscillator::momentum(ms, n_max)?;

    let (mut density_drift, mut flux_drift) = (0.0f64, 0.0f64);
    let (mut energy_dev, mut momentum_dev, mut antisym_dev) = (0.0f64, 0.0f64, 0.0f64);
    let mut reference: Option<(LinearOperator, [LinearOperator; 3])> = None;
    for p in points {
        let e = field_vector(ms, n_max, FieldKind::E, p)?;
        let b = field_vector(ms, n_max, FieldKind::B, p)?;
        let density = &dot_ops(&e, &e) + &dot_ops(&b, &b);
        let eb = cross_ops(&e, &b);
        let be = cross_ops(&b, &e);

        energy_dev = energy_dev.max(density.scaled(C64::new(0.5 * v, 0.0)).max_deviation_valid(&h));
        for j in 0..3 {
            momentum_dev = momentum_dev.max(eb[j].scaled(C64::new(v / c_light, 0.0)).max_deviation_valid(&p_op[j]));
            antisym_dev = antisym_dev.max((&eb[j] + &be[j]).matrix().max_abs());
        }
        match &reference {
            None => reference = Some((density, eb)),
            Some((d0, eb0)) => {
                density_drift = density_drift.max(density.max_deviation(d0));
                for j in 0..3 {
                    flux_drift = flux_drift.max(eb[j].max_deviation(&eb0[j]));
                }
            }
        }
    }

    let mut report = Report::new(format!("field identities ({} modes, n_max = {n_max}, {} points)", ms.len(), points.len()));
    report.at_most("E.E + B.B independent of (t, x)", density_drift, TOL);
    report.at_most("E x B independent of (t, x)", flux_drift, TOL);
    report.at_most("V/2 (E.E + B.B) = H", energy_dev, TOL);
    report.at_most("V (E x B)/c = P", momentum_dev, TOL);
    report.at_most("E x B + B x E = 0", antisym_dev, TOL);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EbCommutator {
    pub commutator: LinearOperator,
    pub closed_form: LinearOperator,
    /// Max entry deviation on the `n < n_max` subspace.
    pub deviation: f64,
}

/// `[E_a, B_b]` by matrix arithmetic against
/// `sum i s (hbar omega / 2V) (delta_ab - n_a n_b) |s,kappa><s,kappa| (x) 1`.
pub fn eb_commutator(ms: &ModeSet, n_max: usize, a: Component, b: Component, p: &FieldPoint) -> Result<EbCommutator> {
    let e = field_operator(ms, n_max, FieldKind::E, a, p)?;
    let bf = field_operator(ms, n_max, FieldKind::B, b, p)?;
    let commutator = LinearOperator::commutator(&e, &bf);

    let basis = SingleBasis::for_modes(ms, n_max);
    let hbar = ms.constants().hbar;
    let (ia, ib) = (a.index(), b.index());
    let diag: Vec<C64> = (0..basis.dim())
        .map(|i| {
            let m = ms.mode(basis.unflat(i).mode);
            let n = m.direction();
            let delta = if ia == ib { 1.0 } else { 0.0 };
            let value = m.helicity.sign() * hbar * m.omega / (2.0 * ms.volume()) * (delta - n[ia] * n[ib]);
            C64::new(0.0, value)
        })
        .collect();
    let closed_form = LinearOperator::new(SparseMatrix::from_diagonal(&diag), n_max);
    let deviation = commutator.max_deviation_valid(&closed_form);
    Ok(EbCommutator { commutator, closed_form, deviation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{Constants, Helicity, Mode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z_mode_set(h: Helicity) -> ModeSet {
        let m = Mode::new(h, [0.0, 0.0, 2.0], 1.0).unwrap();
        ModeSet::new(vec![m], 3.0, Constants::default()).unwrap()
    }

    fn random_set(rng: &mut ChaCha8Rng, count: usize) -> ModeSet {
        let modes = (0..count)
            .map(|i| {
                let k = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
                let h = if i % 2 == 0 { Helicity::Plus } else { Helicity::Minus };
                Mode::new(h, k, 1.0).unwrap()
            })
            .collect();
        ModeSet::new(modes, 1.7, Constants::default()).unwrap()
    }

    #[test]
    fn fields_are_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ms = random_set(&mut rng, 3);
        for _ in 0..3 {
            let p = FieldPoint::new(rng.gen_range(-3.0..3.0), [rng.gen(), rng.gen(), rng.gen()]);
            for which in [FieldKind::A, FieldKind::E, FieldKind::B] {
                for c in Component::ALL {
                    let f = field_operator(&ms, 3, which, c, &p).unwrap();
                    assert!(f.matrix().hermiticity_deviation() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn b_is_n_cross_e_for_single_mode() {
        let ms = z_mode_set(Helicity::Plus);
        let p = FieldPoint::new(0.4, [0.1, -0.2, 0.7]);
        let e = field_vector(&ms, 3, FieldKind::E, &p).unwrap();
        let b = field_vector(&ms, 3, FieldKind::B, &p).unwrap();
        // n = z: (n x E) = (-E_y, E_x, 0)
        assert!(b[0].max_deviation(&e[1].scaled(C64::new(-1.0, 0.0))) < 1e-15);
        assert!(b[1].max_deviation(&e[0]) < 1e-15);
        assert_eq!(b[2].matrix().max_abs(), 0.0);
    }

    #[test]
    fn component_index_rejected() {
        assert!(Component::from_index(3).is_err());
        assert_eq!(Component::from_index(2).unwrap(), Component::Z);
    }

    #[test]
    fn vacuum_average_vanishes() {
        let ms = z_mode_set(Helicity::Minus);
        let spec = CoherentFieldSpec::new(&ms, vec![C64::new(1.0, 0.0)], vec![C64::new(0.0, 0.0)], 4).unwrap();
        let avg = coherent_field_average(&ms, &spec, FieldKind::E, &FieldPoint::new(1.0, [0.3; 3]));
        assert!(avg.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn coherent_field_spec_validation() {
        let ms = z_mode_set(Helicity::Plus);
        let one = vec![C64::new(1.0, 0.0)];
        assert!(matches!(
            CoherentFieldSpec::new(&ms, vec![C64::new(0.5, 0.0)], one.clone(), 20),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(CoherentFieldSpec::new(&ms, one.clone(), one.clone(), 12), Err(Error::TruncationTail { .. })));
        assert!(CoherentFieldSpec::new(&ms, one.clone(), one, 20).is_ok());
    }

    #[test]
    fn single_mode_e_average_against_state() {
        let ms = z_mode_set(Helicity::Plus);
        let alpha = 0.8;
        let spec = CoherentFieldSpec::new(&ms, vec![C64::new(1.0, 0.0)], vec![C64::new(alpha, 0.0)], 20).unwrap();
        let p = FieldPoint::new(0.3, [0.0, 0.0, 0.5]);
        let closed = coherent_field_average(&ms, &spec, FieldKind::E, &p);
        let explicit = explicit_field_average(&ms, &spec, FieldKind::E, &p).unwrap();
        let omega = ms.mode(0).omega;
        let theta = omega * p.t - 2.0 * p.x[2];
        // E_x = -2 alpha sqrt(hbar omega / 2V) Im(e_x e^{-i theta}), with e_x = 1/sqrt 2
        let amp = libm::sqrt(omega / (2.0 * ms.volume()));
        let expected_x = 2.0 * alpha * amp * core::f64::consts::FRAC_1_SQRT_2 * libm::sin(theta);
        assert!((closed[0].re - expected_x).abs() < 1e-12);
        for j in 0..3 {
            assert!((closed[j] - explicit[j]).norm() < 1e-9);
            assert!(closed[j].im.abs() < 1e-15);
        }
    }

    #[test]
    fn translation_oracle_for_vector_potential() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ms = random_set(&mut rng, 2);
        let n_max = 3;
        let h = oscillator::hamiltonian(&ms, n_max).unwrap();
        let pm = oscillator::momentum(&ms, n_max).unwrap();
        let p = FieldPoint::new(0.7, [0.2, -0.5, 0.9]);
        // generator G = H t - P.x, so e^{iG} A(0,0) e^{-iG} = A(t, x)
        let g = &(&h.scaled(C64::new(p.t, 0.0)) - &pm[0].scaled(C64::new(p.x[0], 0.0)))
            - &(&pm[1].scaled(C64::new(p.x[1], 0.0)) + &pm[2].scaled(C64::new(p.x[2], 0.0)));
        let g = LinearOperator::hermitian(g.into_matrix(), n_max).unwrap();
        for c in Component::ALL {
            let a0 = field_operator(&ms, n_max, FieldKind::A, c, &FieldPoint::origin()).unwrap();
            let evolved = oscillator::heisenberg_evolve(&a0, &g, 1.0, 1.0).unwrap();
            let direct = field_operator(&ms, n_max, FieldKind::A, c, &p).unwrap();
            assert!(evolved.max_deviation(&direct) < 1e-10);
        }
    }

    #[test]
    fn identities_hold_on_random_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let ms = random_set(&mut rng, 3);
        let pts: Vec<FieldPoint> = (0..3)
            .map(|_| FieldPoint::new(rng.gen_range(-5.0..5.0), [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)]))
            .collect();
        let report = energy_momentum_identity_check(&ms, 4, &pts).unwrap();
        assert!(report.passed(), "{report}");
        assert!(energy_momentum_identity_check(&ms, 4, &pts[..2]).is_err());
    }

    #[test]
    fn commutator_longitudinal_vanishes() {
        let ms = z_mode_set(Helicity::Plus);
        let r = eb_commutator(&ms, 3, Component::Z, Component::Z, &FieldPoint::origin()).unwrap();
        assert_eq!(r.closed_form.matrix().nnz(), 0);
        assert!(r.commutator.matrix().max_abs() < 1e-15);
    }

    #[test]
    fn commutator_helicity_pair_cancels() {
        let m = Mode::new(Helicity::Plus, [0.0, 0.0, 1.0], 1.0).unwrap();
        let ms = ModeSet::new(vec![m, Mode { helicity: Helicity::Minus, ..m }], 1.0, Constants::default()).unwrap();
        let r = eb_commutator(&ms, 3, Component::X, Component::X, &FieldPoint::origin()).unwrap();
        let diag = r.closed_form.matrix().diagonal();
        assert!((diag[0] - C64::new(0.0, 0.5)).norm() < 1e-15);
        assert!((diag[4] - C64::new(0.0, -0.5)).norm() < 1e-15);
        let trace: C64 = diag.iter().sum();
        assert!(trace.norm() < 1e-15);
        assert!(r.deviation < 1e-14);
    }

    #[test]
    fn commutator_random_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ms = random_set(&mut rng, 4);
        let p = FieldPoint::new(1.3, [0.4, 0.1, -0.6]);
        for a in Component::ALL {
            for b in Component::ALL {
                assert!(eb_commutator(&ms, 3, a, b, &p).unwrap().deviation < 1e-11);
            }
        }
    }
}
