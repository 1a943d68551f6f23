//! Polychromatic photon model: a single oscillator carrying every frequency,
//! its field operators, multi-oscillator sectors, perturbative light-matter
//! interaction and blackbody statistics.
//!
//! The crate is `no_std` with `alloc`.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub type C64 = num_complex::Complex64;

pub mod blackbody;
pub mod error;
pub mod fields;
pub mod linalg;
pub mod modes;
pub mod multi;
pub mod oscillator;
pub mod perturbation;
pub mod report;
pub mod vec3;

pub use error::{Error, Result};
pub use modes::{Constants, Helicity, Mode, ModeSet, PolarizationVector};
pub use report::{CheckEntry, Expect, Report};
