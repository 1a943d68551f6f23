//! Single-oscillator Hilbert space `span{|s, kappa, n>}` with the frequency
//! operator, Hamiltonian, momentum and the projector-valued ladder operators.
//!
//! Basis indexing is mode-major, excitation-minor:
//! `flat = mode_index * (n_max + 1) + n`. Every algebraic identity that the
//! truncation breaks at the top rung is asserted on the `n < n_max` subspace
//! only (see [`SingleBasis::valid_mask`]).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use crate::error::{invalid, Error, Result};
use crate::linalg::{DenseMatrix, SparseMatrix};
use crate::modes::{Mode, ModeSet};
use crate::report::Report;
use crate::C64;

/// Coherent expansions whose dropped amplitude exceeds this are rejected.
pub const COHERENT_TAIL_LIMIT: f64 = 1e-8;
const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisIndex {
    pub mode: usize,
    pub n: usize,
}

/// Index bookkeeping for the truncated single-oscillator space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingleBasis {
    pub n_modes: usize,
    pub n_max: usize,
}

impl SingleBasis {
    pub fn new(n_modes: usize, n_max: usize) -> Self {
        SingleBasis { n_modes, n_max }
    }

    pub fn for_modes(ms: &ModeSet, n_max: usize) -> Self {
        Self::new(ms.len(), n_max)
    }

    pub fn levels(&self) -> usize {
        self.n_max + 1
    }

    pub fn dim(&self) -> usize {
        self.n_modes * self.levels()
    }

    pub fn flat(&self, idx: BasisIndex) -> usize {
        debug_assert!(idx.mode < self.n_modes && idx.n <= self.n_max);
        idx.mode * self.levels() + idx.n
    }

    pub fn unflat(&self, flat: usize) -> BasisIndex {
        BasisIndex { mode: flat / self.levels(), n: flat % self.levels() }
    }

    /// `true` for basis states with `n < n_max`.
    pub fn valid_mask(&self) -> Vec<bool> {
        (0..self.dim()).map(|i| self.unflat(i).n < self.n_max).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
    allow_unnormalized: bool,
}

impl StateVector {
    /// A state that must have unit norm to within `1e-12`.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let s = StateVector { amplitudes, allow_unnormalized: false };
        let norm = s.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(s)
    }

    /// A vector explicitly flagged as not normalized (e.g. a perturbative
    /// correction).
    pub fn unnormalized(amplitudes: Vec<C64>) -> Self {
        StateVector { amplitudes, allow_unnormalized: true }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut a = vec![C64::new(0.0, 0.0); dim];
        a[index] = C64::new(1.0, 0.0);
        StateVector { amplitudes: a, allow_unnormalized: false }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.amplitudes.iter().map(|a| a.norm_sqr()).sum())
    }

    pub fn is_flagged_unnormalized(&self) -> bool {
        self.allow_unnormalized
    }

    fn require_normalized(&self) -> Result<()> {
        let norm = self.norm();
        if !self.allow_unnormalized && (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(())
    }
}

/// A sparse operator on a truncated space, tagged with its truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    matrix: SparseMatrix,
    n_max: usize,
    hermitian: bool,
}

impl LinearOperator {
    pub fn new(matrix: SparseMatrix, n_max: usize) -> Self {
        LinearOperator { matrix, n_max, hermitian: false }
    }

    /// Flags the operator Hermitian after verifying it to `1e-12`.
    pub fn hermitian(matrix: SparseMatrix, n_max: usize) -> Result<Self> {
        let deviation = matrix.hermiticity_deviation();
        if deviation > 1e-12 {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(LinearOperator { matrix, n_max, hermitian: true })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> SparseMatrix {
        self.matrix
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn adjoint(&self) -> Self {
        LinearOperator { matrix: self.matrix.adjoint(), n_max: self.n_max, hermitian: self.hermitian }
    }

    pub fn scaled(&self, s: C64) -> Self {
        LinearOperator::new(self.matrix.scale(s), self.n_max)
    }

    pub fn commutator(a: &Self, b: &Self) -> Self {
        LinearOperator::new(SparseMatrix::commutator(&a.matrix, &b.matrix), a.n_max)
    }

    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        self.matrix.apply(psi)
    }

    pub fn expectation(&self, psi: &StateVector) -> C64 {
        self.matrix.quadratic_form(psi.amplitudes())
    }

    pub fn max_deviation(&self, other: &Self) -> f64 {
        self.matrix.max_abs_diff(&other.matrix)
    }

    /// Maximum entry deviation on rows and columns with every `n < n_max`.
    pub fn max_deviation_valid(&self, other: &Self) -> f64 {
        let levels = self.n_max + 1;
        let keep: Vec<bool> = (0..self.dim()).map(|i| i % levels < self.n_max).collect();
        self.matrix.max_abs_diff_restricted(&other.matrix, &keep)
    }
}

impl Add for &LinearOperator {
    type Output = LinearOperator;
    fn add(self, rhs: &LinearOperator) -> LinearOperator {
        LinearOperator::new(&self.matrix + &rhs.matrix, self.n_max)
    }
}

impl Sub for &LinearOperator {
    type Output = LinearOperator;
    fn sub(self, rhs: &LinearOperator) -> LinearOperator {
        LinearOperator::new(&self.matrix - &rhs.matrix, self.n_max)
    }
}

impl Mul for &LinearOperator {
    type Output = LinearOperator;
    fn mul(self, rhs: &LinearOperator) -> LinearOperator {
        LinearOperator::new(&self.matrix * &rhs.matrix, self.n_max)
    }
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn check_n_max(n_max: usize) -> Result<()> {
    if n_max == 0 {
        return Err(invalid("n_max", "must be at least 1"));
    }
    Ok(())
}

/// Truncated `a = sum_n sqrt(n+1) |n><n+1|` on `span{|0>, ..., |n_max>}`.
pub fn ladder(n_max: usize) -> Result<LinearOperator> {
    check_n_max(n_max)?;
    let m = SparseMatrix::from_triplets(
        n_max + 1,
        n_max + 1,
        (0..n_max).map(|n| (n, n + 1, real(libm::sqrt((n + 1) as f64)))),
    );
    Ok(LinearOperator::new(m, n_max))
}

/// `a_{s,kappa} = |s,kappa><s,kappa| (x) a`: the ladder acting on one mode's block.
pub fn mode_annihilator(ms: &ModeSet, mode: usize, n_max: usize) -> Result<LinearOperator> {
    check_n_max(n_max)?;
    if mode >= ms.len() {
        return Err(Error::UnknownMode);
    }
    let b = SingleBasis::for_modes(ms, n_max);
    let m = SparseMatrix::from_triplets(
        b.dim(),
        b.dim(),
        (0..n_max).map(|n| {
            (b.flat(BasisIndex { mode, n }), b.flat(BasisIndex { mode, n: n + 1 }), real(libm::sqrt((n + 1) as f64)))
        }),
    );
    Ok(LinearOperator::new(m, n_max))
}

pub fn annihilator_for(ms: &ModeSet, mode: &Mode, n_max: usize) -> Result<LinearOperator> {
    mode_annihilator(ms, ms.index_of(mode)?, n_max)
}

/// `1_{s,kappa} = |s,kappa><s,kappa| (x) 1`.
pub fn mode_projector(ms: &ModeSet, mode: usize, n_max: usize) -> Result<LinearOperator> {
    if mode >= ms.len() {
        return Err(Error::UnknownMode);
    }
    let b = SingleBasis::for_modes(ms, n_max);
    let diag = (0..=n_max).map(|n| {
        let i = b.flat(BasisIndex { mode, n });
        (i, i, real(1.0))
    });
    LinearOperator::hermitian(SparseMatrix::from_triplets(b.dim(), b.dim(), diag), n_max)
}

fn diagonal_operator(ms: &ModeSet, n_max: usize, value: impl Fn(&Mode, usize) -> f64) -> Result<LinearOperator> {
    check_n_max(n_max)?;
    let b = SingleBasis::for_modes(ms, n_max);
    let diag: Vec<C64> = (0..b.dim())
        .map(|i| {
            let idx = b.unflat(i);
            real(value(ms.mode(idx.mode), idx.n))
        })
        .collect();
    LinearOperator::hermitian(SparseMatrix::from_diagonal(&diag), n_max)
}

/// `Omega (x) 1`, with the mode frequencies as eigenvalues.
pub fn frequency_operator(ms: &ModeSet, n_max: usize) -> Result<LinearOperator> {
    diagonal_operator(ms, n_max, |m, _| m.omega)
}

/// `H = hbar Omega (x) (a^dag a + 1/2)`, equal to the symmetrically ordered
/// `hbar Omega (x) (a^dag a + a a^dag)/2` on every rung below `n_max` and
/// keeping the exact eigenvalue `hbar omega (n_max + 1/2)` on the top rung.
pub fn hamiltonian(ms: &ModeSet, n_max: usize) -> Result<LinearOperator> {
    let hbar = ms.constants().hbar;
    diagonal_operator(ms, n_max, |m, n| hbar * m.omega * (n as f64 + 0.5))
}

/// `P_j = sum hbar kappa_j |s,kappa><s,kappa| (x) (a^dag a + 1/2)`.
pub fn momentum(ms: &ModeSet, n_max: usize) -> Result<[LinearOperator; 3]> {
    let hbar = ms.constants().hbar;
    Ok([
        diagonal_operator(ms, n_max, |m, n| hbar * m.kappa[0] * (n as f64 + 0.5))?,
        diagonal_operator(ms, n_max, |m, n| hbar * m.kappa[1] * (n as f64 + 0.5))?,
        diagonal_operator(ms, n_max, |m, n| hbar * m.kappa[2] * (n as f64 + 0.5))?,
    ])
}

/// `1/2 sum hbar omega (a^dag_k a_k + a_k a^dag_k)` assembled from the mode ladders.
pub fn hamiltonian_from_ladders(ms: &ModeSet, n_max: usize) -> Result<LinearOperator> {
    let hbar = ms.constants().hbar;
    let dim = SingleBasis::for_modes(ms, n_max).dim();
    let mut acc = SparseMatrix::zeros(dim, dim);
    for k in 0..ms.len() {
        let a = mode_annihilator(ms, k, n_max)?;
        let ad = a.adjoint();
        let sym = SparseMatrix::anticommutator(ad.matrix(), a.matrix());
        acc = &acc + &sym.scale_real(0.5 * hbar * ms.mode(k).omega);
    }
    Ok(LinearOperator::new(acc, n_max))
}

/// Checks the projector-weighted commutation relations and the resolution of
/// identity on the `n < n_max` subspace, reporting the largest deviation of
/// each identity over all ordered mode pairs.
pub fn algebra_report(ms: &ModeSet, n_max: usize) -> Result<Report> {
    const TOL: f64 = 1e-12;
    let annihilators: Vec<LinearOperator> =
        (0..ms.len()).map(|k| mode_annihilator(ms, k, n_max)).collect::<Result<_>>()?;
    let creators: Vec<LinearOperator> = annihilators.iter().map(LinearOperator::adjoint).collect();
    let projectors: Vec<LinearOperator> =
        (0..ms.len()).map(|k| mode_projector(ms, k, n_max)).collect::<Result<_>>()?;
    let dim = SingleBasis::for_modes(ms, n_max).dim();
    let zero = LinearOperator::new(SparseMatrix::zeros(dim, dim), n_max);

    let (mut comm_dev, mut distinct_dev, mut aa_dev, mut adad_dev) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in 0..ms.len() {
        let a_sq = &annihilators[k] * &annihilators[k];
        let ad_sq = &creators[k] * &creators[k];
        for l in 0..ms.len() {
            let comm = LinearOperator::commutator(&annihilators[k], &creators[l]);
            let product = &annihilators[k] * &annihilators[l];
            let product_dag = &creators[k] * &creators[l];
            if k == l {
                comm_dev = comm_dev.max(comm.max_deviation_valid(&projectors[k]));
                aa_dev = aa_dev.max(product.max_deviation_valid(&a_sq));
                adad_dev = adad_dev.max(product_dag.max_deviation_valid(&ad_sq));
            } else {
                let d = comm.max_deviation(&zero);
                comm_dev = comm_dev.max(d);
                distinct_dev = distinct_dev.max(d);
                aa_dev = aa_dev.max(product.max_deviation(&zero));
                adad_dev = adad_dev.max(product_dag.max_deviation(&zero));
            }
        }
    }
    let mut sum = SparseMatrix::zeros(dim, dim);
    for k in 0..ms.len() {
        sum = &sum + LinearOperator::commutator(&annihilators[k], &creators[k]).matrix();
    }
    let identity = LinearOperator::new(SparseMatrix::identity(dim), n_max);
    let sum = LinearOperator::new(sum, n_max);
    let h_assembled = hamiltonian_from_ladders(ms, n_max)?;
    let h = hamiltonian(ms, n_max)?;

    let mut report = Report::new(format!("single-oscillator algebra ({} modes, n_max = {n_max})", ms.len()));
    report.at_most("[a_k, a_l^dag] = delta_kl 1_k", comm_dev, TOL);
    report.at_most("[a_k, a_l^dag] = 0 for k != l", distinct_dev, TOL);
    report.at_most("a_k a_l = delta_kl a_k^2", aa_dev, TOL);
    report.at_most("a_k^dag a_l^dag = delta_kl (a_k^dag)^2", adad_dev, TOL);
    report.at_most("sum_k [a_k, a_k^dag] = 1", sum.max_deviation_valid(&identity), TOL);
    report.at_most("H = 1/2 sum hbar omega {a_k, a_k^dag}", h.max_deviation_valid(&h_assembled), TOL);
    Ok(report)
}

/// `e^{iHt/hbar} op e^{-iHt/hbar}` by dense matrix exponentiation.
pub fn heisenberg_evolve(op: &LinearOperator, h: &LinearOperator, t: f64, hbar: f64) -> Result<LinearOperator> {
    if op.dim() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: op.dim() });
    }
    let deviation = h.matrix().hermiticity_deviation();
    if deviation > 1e-12 {
        return Err(Error::NotHermitian { deviation });
    }
    let u = h.matrix().to_dense().scale(C64::new(0.0, -t / hbar)).expm();
    let u_dag = u.adjoint();
    let evolved: DenseMatrix = u_dag.matmul(&op.matrix().to_dense()).matmul(&u);
    Ok(LinearOperator::new(evolved.to_sparse(0.0), op.n_max()))
}

/// `sum |psi(s,kappa,n)|^2 hbar omega (n + 1/2)`.
pub fn average_energy(psi: &StateVector, ms: &ModeSet, n_max: usize) -> Result<f64> {
    let b = SingleBasis::for_modes(ms, n_max);
    if psi.len() != b.dim() {
        return Err(Error::DimensionMismatch { expected: b.dim(), found: psi.len() });
    }
    psi.require_normalized()?;
    let hbar = ms.constants().hbar;
    Ok(psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let idx = b.unflat(i);
            a.norm_sqr() * hbar * ms.mode(idx.mode).omega * (idx.n as f64 + 0.5)
        })
        .sum())
}

/// `|alpha|^{n+1} / sqrt((n+1)!)`, the first dropped term of the unnormalized
/// coherent expansion.
pub fn coherent_tail_bound(alpha: f64, n_max: usize) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    let m = (n_max + 1) as f64;
    libm::exp(m * libm::log(alpha) - 0.5 * libm::lgamma(m + 1.0))
}

/// Normalized truncated coherent amplitudes `alpha^n / sqrt(n!)`, `n <= n_max`.
pub fn coherent_amplitudes(alpha: C64, n_max: usize) -> Result<Vec<C64>> {
    let tail = coherent_tail_bound(alpha.norm(), n_max);
    if tail >= COHERENT_TAIL_LIMIT {
        return Err(Error::TruncationTail { alpha: alpha.norm(), n_max, tail });
    }
    let mut amps = Vec::with_capacity(n_max + 1);
    let mut term = C64::new(1.0, 0.0);
    for n in 0..=n_max {
        if n > 0 {
            term = term * alpha / libm::sqrt(n as f64);
        }
        amps.push(term);
    }
    let norm = libm::sqrt(amps.iter().map(|a| a.norm_sqr()).sum::<f64>());
    for a in &mut amps {
        *a /= norm;
    }
    Ok(amps)
}
