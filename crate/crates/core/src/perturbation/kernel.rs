//! Finite-duration energy-conservation kernel.

use core::f64::consts::PI;

/// `delta_T(x) = sin(x T / 2 hbar) / (pi x)`, with the limit `T / (2 pi hbar)`
/// at `x = 0`.
pub fn delta_t(x: f64, t: f64, hbar: f64) -> f64 {
    let y = x * t / (2.0 * hbar);
    if y.abs() < 1e-8 {
        // sin y / y = 1 - y^2/6 + ...
        t / (2.0 * PI * hbar) * (1.0 - y * y / 6.0)
    } else {
        libm::sin(y) / (PI * x)
    }
}

/// Half-width of the central lobe: the first zero of `delta_T` sits at
/// `|x| = 2 pi hbar / T`.
pub fn lobe_half_width(t: f64, hbar: f64) -> f64 {
    2.0 * PI * hbar / t
}
