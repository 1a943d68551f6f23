//! Small fixed-size 3-vector helpers for wavevectors and polarizations.

use crate::C64;

pub type Vec3 = [f64; 3];
pub type CVec3 = [C64; 3];

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &Vec3) -> f64 {
    libm::sqrt(dot(a, a))
}

pub fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Bilinear (non-conjugating) contraction `a . b`.
pub fn cdot(a: &CVec3, b: &CVec3) -> C64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Hermitian contraction `a* . b`.
pub fn cinner(a: &CVec3, b: &CVec3) -> C64 {
    a[0].conj() * b[0] + a[1].conj() * b[1] + a[2].conj() * b[2]
}

pub fn real_cdot(a: &Vec3, b: &CVec3) -> C64 {
    b[0] * a[0] + b[1] * a[1] + b[2] * a[2]
}

pub fn conj(a: &CVec3) -> CVec3 {
    [a[0].conj(), a[1].conj(), a[2].conj()]
}

pub fn cnorm(a: &CVec3) -> f64 {
    libm::sqrt(cinner(a, a).re)
}

/// `n x e` for a real `n` and complex `e`.
pub fn real_cross(n: &Vec3, e: &CVec3) -> CVec3 {
    [
        e[2] * n[1] - e[1] * n[2],
        e[0] * n[2] - e[2] * n[0],
        e[1] * n[0] - e[0] * n[1],
    ]
}

pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}
