//! Thermal statistics over states labelled by the oscillator number `m` and
//! the excitation number `n`, with energies `E_{m,n} = m hbar w (n + 1/2)` and
//! a chemical potential conjugate to `m`.
//!
//! `Z = sum_m y^m / (1 - x_m)` and `n = Z^-1 sum_m m y^m x_m / (1 - x_m)^2` with
//! `y = exp(-beta (hbar w / 2 - mu))`, `x_m = exp(-beta m hbar w)`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::modes::Constants;
use crate::report::Report;

/// Hard limit on the number of `m` terms.
pub const SERIES_CAP: usize = 1_000_000;
pub const DEFAULT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalParams {
    pub beta: f64,
    pub mu: f64,
    pub constants: Constants,
}

impl ThermalParams {
    pub fn new(beta: f64, mu: f64, constants: Constants) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid("beta", "must be positive and finite"));
        }
        if !mu.is_finite() {
            return Err(invalid("mu", "must be finite"));
        }
        Ok(ThermalParams { beta, mu, constants })
    }

    /// `mu` given in units of `k_B T`.
    pub fn with_reduced_mu(beta: f64, mu_over_kt: f64, constants: Constants) -> Result<Self> {
        ThermalParams::new(beta, mu_over_kt / beta, constants)
    }

    /// `beta hbar w` to `w`.
    pub fn omega(&self, x: f64) -> f64 {
        x / (self.beta * self.constants.hbar)
    }

    fn check(&self, omega: f64) -> Result<()> {
        if !(omega > 0.0) {
            return Err(invalid("omega", "must be positive"));
        }
        if 0.5 * self.constants.hbar * omega - self.mu <= 0.0 {
            return Err(Error::Domain { omega, mu: self.mu });
        }
        if self.mu > 0.0 {
            return Err(invalid("mu", "must not be positive"));
        }
        Ok(())
    }
}

/// A summed series and the number of `m` terms used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub terms: usize,
}

fn check_tol(rel_tol: f64) -> Result<()> {
    if rel_tol > 0.0 && rel_tol <= 1e-6 {
        Ok(())
    } else {
        Err(invalid("rel_tol", "must lie in (0, 1e-6]"))
    }
}

/// Sums `sum_{m>=1} term(m)` where `|term(m)| <= m^power y^m * bound`;
/// stops once the geometric tail bound drops below `rel_tol` of the sum.
fn sum_series(y: f64, bound: f64, power: i32, rel_tol: f64, term: impl Fn(usize) -> f64) -> Result<SeriesValue> {
    let mut sum = 0.0;
    for m in 1..=SERIES_CAP {
        sum += term(m);
        let mf = m as f64;
        let ym = libm::pow(y, mf + 1.0);
        // sum_{j>m} y^j and sum_{j>m} j y^j
        let tail = if power == 0 {
            ym / (1.0 - y)
        } else {
            ym * ((mf + 1.0) - mf * y) / ((1.0 - y) * (1.0 - y))
        };
        if tail * bound <= rel_tol * sum.abs() {
            return Ok(SeriesValue { value: sum, terms: m });
        }
    }
    Err(Error::SeriesCap { terms: SERIES_CAP })
}

fn series_inputs(tp: &ThermalParams, omega: f64) -> (f64, f64, f64) {
    let hw = tp.constants.hbar * omega;
    let y = libm::exp(-tp.beta * (0.5 * hw - tp.mu));
    // 1 - x_m >= 1 - x_1
    let one_minus_x1 = -libm::expm1(-tp.beta * hw);
    (hw, y, one_minus_x1)
}

pub fn partition_function(tp: &ThermalParams, omega: f64, rel_tol: f64) -> Result<SeriesValue> {
    tp.check(omega)?;
    check_tol(rel_tol)?;
    let (hw, y, d1) = series_inputs(tp, omega);
    sum_series(y, 1.0 / d1, 0, rel_tol, |m| {
        let mf = m as f64;
        libm::exp(-tp.beta * mf * (0.5 * hw - tp.mu)) / -libm::expm1(-tp.beta * mf * hw)
    })
}

/// `sum_m m y^m x_m / (1 - x_m)^2`.
fn excitation_sum(tp: &ThermalParams, omega: f64, rel_tol: f64) -> Result<SeriesValue> {
    let (hw, y, d1) = series_inputs(tp, omega);
    sum_series(y, 1.0 / (d1 * d1), 1, rel_tol, |m| {
        let mf = m as f64;
        let x = libm::exp(-tp.beta * mf * hw);
        let d = -libm::expm1(-tp.beta * mf * hw);
        mf * libm::exp(-tp.beta * mf * (0.5 * hw - tp.mu)) * x / (d * d)
    })
}

/// Mean excitation number; `terms` is the larger truncation order of the two series.
pub fn mean_excitations(tp: &ThermalParams, omega: f64, rel_tol: f64) -> Result<SeriesValue> {
    let z = partition_function(tp, omega, rel_tol)?;
    let n = excitation_sum(tp, omega, rel_tol)?;
    Ok(SeriesValue { value: n.value / z.value, terms: z.terms.max(n.terms) })
}

/// Same quantity with `exp(-beta |mu|)` factored out of both series, leaving
/// weights `q_m = exp(-beta |mu| (m - 1))`.
pub fn mean_excitations_factored(tp: &ThermalParams, omega: f64, rel_tol: f64) -> Result<SeriesValue> {
    tp.check(omega)?;
    check_tol(rel_tol)?;
    let hw = tp.constants.hbar * omega;
    let b = tp.beta;
    let q = |m: f64| libm::exp(-b * tp.mu.abs() * (m - 1.0));
    let y = libm::exp(-b * (0.5 * hw - tp.mu));
    let d1 = -libm::expm1(-b * hw);
    // each term is the direct one divided by exp(-beta |mu|)
    let s = libm::exp(b * tp.mu.abs());
    let z = sum_series(y, s / d1, 0, rel_tol, |m| {
        let mf = m as f64;
        q(mf) * libm::exp(-b * mf * 0.5 * hw) / -libm::expm1(-b * mf * hw)
    })?;
    let n = sum_series(y, s / (d1 * d1), 1, rel_tol, |m| {
        let mf = m as f64;
        let d = -libm::expm1(-b * mf * hw);
        mf * q(mf) * libm::exp(-b * mf * 0.5 * hw) * libm::exp(-b * mf * hw) / (d * d)
    })?;
    Ok(SeriesValue { value: n.value / z.value, terms: z.terms.max(n.terms) })
}

pub fn planck_occupancy(beta: f64, omega: f64, hbar: f64) -> f64 {
    1.0 / libm::expm1(beta * hbar * omega)
}

fn density_prefactor(omega: f64, c: &Constants) -> f64 {
    c.hbar / (PI * PI * c.c_light * c.c_light * c.c_light) * omega * omega * omega
}

/// `(hbar / pi^2 c^3) w^3 n_w`.
pub fn spectral_density_new(tp: &ThermalParams, omega: f64, rel_tol: f64) -> Result<SeriesValue> {
    let n = mean_excitations(tp, omega, rel_tol)?;
    Ok(SeriesValue { value: density_prefactor(omega, &tp.constants) * n.value, terms: n.terms })
}

pub fn planck_density(beta: f64, omega: f64, constants: &Constants) -> f64 {
    density_prefactor(omega, constants) * planck_occupancy(beta, omega, constants.hbar)
}

/// `E_{m,n} = m hbar w (n + 1/2)`.
pub fn level_energy(m: usize, n: usize, omega: f64, hbar: f64) -> f64 {
    m as f64 * hbar * omega * (n as f64 + 0.5)
}

/// `n` points spaced evenly in `ln x` over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || n < 2 {
        return Err(invalid("grid", "needs 0 < lo < hi and at least two points"));
    }
    let (a, b) = (libm::log(lo), libm::log(hi));
    Ok((0..n).map(|i| libm::exp(a + (b - a) * i as f64 / (n - 1) as f64)).collect())
}

/// Maximizer of a unimodal `f` on `[a, b]`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// `beta hbar w` at the maximum of the Planck density.
pub fn planck_peak(beta: f64, constants: &Constants) -> f64 {
    let hb = beta * constants.hbar;
    golden_section_max(|x| planck_density(beta, x / hb, constants), 0.5, 6.0, 1e-10)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    /// `beta hbar w`.
    pub x: f64,
    pub omega: f64,
    pub rho_new: f64,
    pub rho_planck: f64,
    pub rel_dev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCurve {
    pub beta: f64,
    pub mu: f64,
    pub rel_tol: f64,
    pub points: Vec<SpectralPoint>,
    /// Largest truncation order over the grid.
    pub max_terms: usize,
}

impl SpectralCurve {
    pub fn mu_over_kt(&self) -> f64 {
        self.mu * self.beta
    }

    pub fn max_rel_dev(&self) -> f64 {
        self.points.iter().map(|p| p.rel_dev).fold(0.0, f64::max)
    }

    /// Grid point with the largest `rho_new`.
    pub fn grid_peak(&self) -> Option<&SpectralPoint> {
        self.points.iter().max_by(|a, b| a.rho_new.total_cmp(&b.rho_new))
    }
}

pub fn spectral_curve(tp: &ThermalParams, grid: &[f64], rel_tol: f64) -> Result<SpectralCurve> {
    let mut points = Vec::with_capacity(grid.len());
    let mut max_terms = 0;
    for &x in grid {
        let omega = tp.omega(x);
        let new = spectral_density_new(tp, omega, rel_tol)?;
        let planck = planck_density(tp.beta, omega, &tp.constants);
        max_terms = max_terms.max(new.terms);
        points.push(SpectralPoint { x, omega, rho_new: new.value, rho_planck: planck, rel_dev: (new.value - planck).abs() / planck });
    }
    Ok(SpectralCurve { beta: tp.beta, mu: tp.mu, rel_tol, points, max_terms })
}

/// Maximum of `rho_new` refined off the grid: `(beta hbar w, rho)`.
pub fn curve_peak(tp: &ThermalParams, rel_tol: f64) -> Result<(f64, f64)> {
    let density = |x: f64| spectral_density_new(tp, tp.omega(x), rel_tol).map(|s| s.value).unwrap_or(f64::NEG_INFINITY);
    let x = golden_section_max(density, 0.5, 8.0, 1e-9);
    Ok((x, spectral_density_new(tp, tp.omega(x), rel_tol)?.value))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanckLimit {
    pub curves: Vec<SpectralCurve>,
    /// Deviation for each curve, in input order.
    pub deviations: Vec<f64>,
    pub report: Report,
}

/// One curve per `mu / k_B T`, plus the deviation table. `mu_list` must be
/// ordered from largest to smallest so the deviations should not increase.
pub fn planck_limit_report(beta: f64, mu_list: &[f64], grid: &[f64], constants: Constants, rel_tol: f64) -> Result<PlanckLimit> {
    let mut curves = Vec::with_capacity(mu_list.len());
    for &mu in mu_list {
        let tp = ThermalParams::with_reduced_mu(beta, mu, constants)?;
        curves.push(spectral_curve(&tp, grid, rel_tol)?);
    }
    let deviations: Vec<f64> = curves.iter().map(SpectralCurve::max_rel_dev).collect();
    let mut report = Report::new(format!("approach to the Planck law (beta = {beta})"));
    let increase = deviations.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    report.at_most("deviation nonincreasing as mu decreases", increase, 0.0);
    let cap_margin = curves.iter().map(|c| c.max_terms).max().unwrap_or(0);
    report.at_most("series truncation below cap", cap_margin as f64, (SERIES_CAP - 1) as f64);
    let planck_self = grid
        .iter()
        .map(|&x| {
            let omega = x / (beta * constants.hbar);
            let direct = constants.hbar / (PI * PI * libm::pow(constants.c_light, 3.0)) * libm::pow(omega, 3.0) / (libm::exp(x) - 1.0);
            (planck_density(beta, omega, &constants) - direct).abs() / direct
        })
        .fold(0.0, f64::max);
    report.at_most("Planck reference reproduced on the grid", planck_self, 1e-12);
    Ok(PlanckLimit { curves, deviations, report })
}

/// `mu / k_B T` at which the maximum deviation over `grid` equals
/// `threshold`, found by bisection on `[mu_lo, 0]`.
pub fn visibility_threshold(beta: f64, grid: &[f64], threshold: f64, mu_lo: f64, constants: Constants, rel_tol: f64) -> Result<f64> {
    let dev = |mu: f64| -> Result<f64> {
        let tp = ThermalParams::with_reduced_mu(beta, mu, constants)?;
        Ok(spectral_curve(&tp, grid, rel_tol)?.max_rel_dev())
    };
    if !(mu_lo < 0.0) || dev(mu_lo)? > threshold || dev(0.0)? < threshold {
        return Err(invalid("threshold", "not bracketed by the chemical potential range"));
    }
    let (mut lo, mut hi) = (mu_lo, 0.0);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if dev(mid)? > threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{Helicity, Mode, ModeSet};
    use crate::multi::sector_energy_spectrum_demo;

    fn tp(mu_over_kt: f64) -> ThermalParams {
        ThermalParams::with_reduced_mu(1.0, mu_over_kt, Constants::default()).unwrap()
    }

    #[test]
    fn deep_negative_mu_is_single_oscillator() {
        let t = tp(-50.0);
        let z = partition_function(&t, 1.0, 1e-12).unwrap();
        let m1 = libm::exp(-50.0 + 0.5) * libm::exp(-1.0) / (1.0 - libm::exp(-1.0));
        assert!((z.value / m1 - 1.0).abs() < 1e-12);
        let n = mean_excitations(&t, 1.0, 1e-12).unwrap();
        assert!((n.value - 1.0 / (core::f64::consts::E - 1.0)).abs() < 1e-6);
        assert!((n.value - 0.581_977).abs() < 1e-6);
    }

    #[test]
    fn tighter_tolerance_agrees() {
        let t = tp(0.0);
        let a = partition_function(&t, 1.0, 1e-12).unwrap();
        let b = partition_function(&t, 1.0, 1e-13).unwrap();
        assert!((a.value / b.value - 1.0).abs() < 1e-10);
        assert!(b.terms >= a.terms);
    }

    #[test]
    fn domain_errors() {
        let t = ThermalParams::new(1.0, 0.5, Constants::default()).unwrap();
        assert!(matches!(partition_function(&t, 1.0, 1e-12), Err(Error::Domain { .. })));
        let t = ThermalParams::new(1.0, 0.1, Constants::default()).unwrap();
        assert!(matches!(partition_function(&t, 1.0, 1e-12), Err(Error::InvalidParameter { .. })));
        assert!(partition_function(&tp(0.0), 1.0, 1e-3).is_err());
        assert!(ThermalParams::new(0.0, 0.0, Constants::default()).is_err());
    }

    #[test]
    fn frozen_and_lowered() {
        assert!(mean_excitations(&tp(0.0), 30.0, 1e-12).unwrap().value < 1e-12);
        let n = mean_excitations(&tp(0.0), 1.0, 1e-12).unwrap().value;
        assert!(n > 0.0 && n < planck_occupancy(1.0, 1.0, 1.0));
    }

    #[test]
    fn factored_form_matches() {
        for mu in [0.0, -0.8, -3.0, -10.0] {
            for x in [0.01, 0.3, 1.0, 4.0, 10.0] {
                let a = mean_excitations(&tp(mu), x, 1e-12).unwrap().value;
                let b = mean_excitations_factored(&tp(mu), x, 1e-12).unwrap().value;
                assert!((a / b - 1.0).abs() < 1e-12, "{mu} {x}");
            }
        }
    }

    // brute-force double sum over (m, n)
    #[test]
    fn closed_inner_sums_match_brute_force() {
        let t = tp(-0.8);
        let omega = 0.7;
        let (mut z, mut nsum) = (0.0, 0.0);
        for m in 1..400 {
            for n in 0..400 {
                let w = libm::exp(-t.beta * (level_energy(m, n, omega, 1.0) - m as f64 * t.mu));
                z += w;
                nsum += (m * n) as f64 * w;
            }
        }
        let n = mean_excitations(&t, omega, 1e-12).unwrap().value;
        assert!((n / (nsum / z) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn planck_peak_location() {
        // x = 3 (1 - e^-x) by bisection
        let (mut lo, mut hi) = (1.0f64, 5.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - 3.0 * (1.0 - libm::exp(-mid)) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = planck_peak(1.0, &Constants::default());
        assert!((x - lo).abs() < 1e-6);
        assert!((x - 2.82144).abs() < 1e-4);
    }

    #[test]
    fn zero_mu_peak_lower_and_shifted() {
        let (x, rho) = curve_peak(&tp(0.0), 1e-12).unwrap();
        let xp = planck_peak(1.0, &Constants::default());
        assert!(x > xp);
        assert!(rho < planck_density(1.0, xp, &Constants::default()));
    }

    #[test]
    fn deviations_decrease_with_mu() {
        let grid = log_grid(0.01, 10.0, 200).unwrap();
        let r = planck_limit_report(1.0, &[0.0, -0.8, -3.0, -10.0], &grid, Constants::default(), 1e-12).unwrap();
        assert!(r.report.passed(), "{}", r.report);
        assert!(r.deviations[3] < 0.01);
        assert!(r.deviations[3] < r.deviations[2]);
        assert_eq!(r.curves[0].points.len(), 200);
    }

    #[test]
    fn visibility_near_minus_three() {
        let grid = log_grid(0.01, 10.0, 200).unwrap();
        let mu = visibility_threshold(1.0, &grid, 0.01, -20.0, Constants::default(), 1e-10).unwrap();
        assert!(mu < -1.0 && mu > -10.0, "{mu}");
    }

    #[test]
    fn level_energies_match_generator() {
        let ms = ModeSet::new(alloc::vec![Mode::new(Helicity::Plus, [0.0, 0.0, 1.0], 1.0).unwrap()], 1.0, Constants::default()).unwrap();
        for row in sector_energy_spectrum_demo(&ms, 0).unwrap() {
            let n = row.occupation[0];
            assert!(row.occupation.iter().all(|&k| k == n));
            assert!((row.energy - level_energy(row.sector, n, 1.0, 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_shape() {
        let g = log_grid(0.01, 10.0, 200).unwrap();
        assert_eq!(g.len(), 200);
        assert!((g[0] - 0.01).abs() < 1e-15 && (g[199] - 10.0).abs() < 1e-12);
    }
}
