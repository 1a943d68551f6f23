//! Complex sparse (CSR) and dense matrices sized for desk-scale Hilbert spaces.
//!
//! Operator equality throughout the crate is measured as the maximum absolute
//! entry difference, optionally restricted to a subset of basis indices.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Compressed sparse row matrix of complex entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix { nrows, ncols, row_ptr: vec![0; nrows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![ONE; n])
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        Self::from_triplets(diag.len(), diag.len(), diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed
    /// and exact zeros dropped.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut t: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        t.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(t.len());
        let mut values = Vec::with_capacity(t.len());
        let mut rows = Vec::with_capacity(t.len());
        let mut iter = t.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v != ZERO {
                rows.push(r);
                col_idx.push(c);
                values.push(v);
            }
        }
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(p) => self.values[lo + p],
            Err(_) => ZERO,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.iter().map(|(i, j, v)| (j, i, v.conj())))
    }

    pub fn scale(&self, s: C64) -> Self {
        if s == ZERO {
            return Self::zeros(self.nrows, self.ncols);
        }
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    fn check_same_shape(&self, other: &Self) {
        assert!(
            self.nrows == other.nrows && self.ncols == other.ncols,
            "shape mismatch: {}x{} vs {}x{}",
            self.nrows,
            self.ncols,
            other.nrows,
            other.ncols
        );
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch { expected: self.nrows, found: other.nrows });
        }
        Ok(self + other)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch { expected: self.ncols, found: other.nrows });
        }
        Ok(self * other)
    }

    /// `[A, B] = AB - BA`
    pub fn commutator(a: &Self, b: &Self) -> Self {
        &(a * b) - &(b * a)
    }

    /// `{A, B} = AB + BA`
    pub fn anticommutator(a: &Self, b: &Self) -> Self {
        &(a * b) + &(b * a)
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (r2, c2) = (other.nrows, other.ncols);
        let mut t = Vec::with_capacity(self.nnz() * other.nnz());
        for (i, j, v) in self.iter() {
            for (k, l, w) in other.iter() {
                t.push((i * r2 + k, j * c2 + l, v * w));
            }
        }
        Self::from_triplets(self.nrows * r2, self.ncols * c2, t)
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols, "vector length mismatch");
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `<x|M|x>`
    pub fn quadratic_form(&self, x: &[C64]) -> C64 {
        let y = self.apply(x);
        x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }

    /// Maximum entry difference over rows and columns flagged in `keep`.
    pub fn max_abs_diff_restricted(&self, other: &Self, keep: &[bool]) -> f64 {
        self.check_same_shape(other);
        assert_eq!(keep.len(), self.nrows);
        (self - other)
            .iter()
            .filter(|&(i, j, _)| keep[i] && keep[j])
            .map(|(_, _, v)| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            d[(i, j)] = v;
        }
        d
    }
}

impl Add for &SparseMatrix {
    type Output = SparseMatrix;
    fn add(self, rhs: &SparseMatrix) -> SparseMatrix {
        self.check_same_shape(rhs);
        SparseMatrix::from_triplets(self.nrows, self.ncols, self.iter().chain(rhs.iter()))
    }
}

impl Sub for &SparseMatrix {
    type Output = SparseMatrix;
    fn sub(self, rhs: &SparseMatrix) -> SparseMatrix {
        self.check_same_shape(rhs);
        SparseMatrix::from_triplets(
            self.nrows,
            self.ncols,
            self.iter().chain(rhs.iter().map(|(i, j, v)| (i, j, -v))),
        )
    }
}

impl Neg for &SparseMatrix {
    type Output = SparseMatrix;
    fn neg(self) -> SparseMatrix {
        self.scale(-ONE)
    }
}

impl Mul for &SparseMatrix {
    type Output = SparseMatrix;
    fn mul(self, rhs: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.ncols, rhs.nrows, "inner dimension mismatch");
        let mut acc = vec![ZERO; rhs.ncols];
        let mut touched: Vec<usize> = Vec::new();
        let mut seen = vec![false; rhs.ncols];
        let mut t = Vec::new();
        for i in 0..self.nrows {
            for (k, a) in self.row(i) {
                for (j, b) in rhs.row(k) {
                    if !seen[j] {
                        seen[j] = true;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            for &j in &touched {
                t.push((i, j, acc[j]));
                acc[j] = ZERO;
                seen[j] = false;
            }
            touched.clear();
        }
        SparseMatrix::from_triplets(self.nrows, rhs.ncols, t)
    }
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<C64>,
}

impl core::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.ncols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.ncols + j]
    }
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseMatrix { nrows, ncols, data: vec![ZERO; nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn scale(&self, s: C64) -> Self {
        DenseMatrix { nrows: self.nrows, ncols: self.ncols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.ncols, rhs.nrows, "inner dimension mismatch");
        let mut out = Self::zeros(self.nrows, rhs.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.ncols..(k + 1) * rhs.ncols];
                let out_row = &mut out.data[i * rhs.ncols..(i + 1) * rhs.ncols];
                for (o, b) in out_row.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    fn axpy(&self, s: f64, other: &Self) -> Self {
        DenseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b * s).collect(),
        }
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.ncols)
            .map(|j| (0..self.nrows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Drops entries with modulus at or below `threshold`.
    pub fn to_sparse(&self, threshold: f64) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                let v = self[(i, j)];
                if v.norm() > threshold {
                    t.push((i, j, v));
                }
            }
        }
        SparseMatrix::from_triplets(self.nrows, self.ncols, t)
    }

    /// Solves `self * X = rhs` by LU decomposition with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        let n = self.nrows;
        if self.ncols != n || rhs.nrows != n {
            return Err(Error::DimensionMismatch { expected: n, found: rhs.nrows });
        }
        let mut a = self.clone();
        let mut b = rhs.clone();
        let m = b.ncols;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[(x, col)].norm().total_cmp(&a[(y, col)].norm()))
                .unwrap_or(col);
            if a[(pivot, col)].norm() == 0.0 {
                return Err(crate::error::invalid("matrix", "singular system in dense solve"));
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                }
                for j in 0..m {
                    b.data.swap(pivot * m + j, col * m + j);
                }
            }
            let inv = ONE / a[(col, col)];
            for row in col + 1..n {
                let f = a[(row, col)] * inv;
                if f == ZERO {
                    continue;
                }
                for j in col..n {
                    let v = a[(col, j)];
                    a[(row, j)] -= f * v;
                }
                for j in 0..m {
                    let v = b[(col, j)];
                    b[(row, j)] -= f * v;
                }
            }
        }
        for col in (0..n).rev() {
            let inv = ONE / a[(col, col)];
            for j in 0..m {
                let mut s = b[(col, j)];
                for k in col + 1..n {
                    s -= a[(col, k)] * b[(k, j)];
                }
                b[(col, j)] = s * inv;
            }
        }
        Ok(b)
    }

    /// Matrix exponential by scaling and squaring with a degree-13 Pade
    /// approximant.
    pub fn expm(&self) -> Self {
        const B: [f64; 14] = [
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ];
        const THETA_13: f64 = 5.371920351148152;
        let n = self.nrows;
        assert_eq!(n, self.ncols, "expm requires a square matrix");
        if n == 0 {
            return self.clone();
        }
        let norm = self.norm_1();
        let squarings = if norm > THETA_13 { libm::ceil(libm::log2(norm / THETA_13)) as u32 } else { 0 };
        let a = self.scale(C64::new(libm::pow(2.0, -(squarings as f64)), 0.0));
        let id = Self::identity(n);
        let a2 = a.matmul(&a);
        let a4 = a2.matmul(&a2);
        let a6 = a4.matmul(&a2);

        let u_inner = a6.scale(C64::new(B[13], 0.0)).axpy(B[11], &a4).axpy(B[9], &a2);
        let u_tail = a6.scale(C64::new(B[7], 0.0)).axpy(B[5], &a4).axpy(B[3], &a2).axpy(B[1], &id);
        let u = a.matmul(&a6.matmul(&u_inner).axpy(1.0, &u_tail));

        let v_inner = a6.scale(C64::new(B[12], 0.0)).axpy(B[10], &a4).axpy(B[8], &a2);
        let v_tail = a6.scale(C64::new(B[6], 0.0)).axpy(B[4], &a4).axpy(B[2], &a2).axpy(B[0], &id);
        let v = a6.matmul(&v_inner).axpy(1.0, &v_tail);

        let p = v.axpy(1.0, &u);
        let q = v.axpy(-1.0, &u);
        let mut r = q.solve(&p).expect("Pade denominator is nonsingular for scaled input");
        for _ in 0..squarings {
            r = r.matmul(&r);
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = SparseMatrix::from_triplets(
            2,
            2,
            [(0, 1, c(1.0, 0.0)), (0, 1, c(2.0, 0.0)), (1, 0, c(1.0, 0.0)), (1, 0, c(-1.0, 0.0))],
        );
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0, 0.0));
        assert_eq!(m.get(1, 0), ZERO);
    }

    #[test]
    fn sparse_product_matches_dense() {
        let a = SparseMatrix::from_triplets(3, 3, [(0, 1, c(1.0, 2.0)), (2, 0, c(-1.0, 0.5)), (1, 1, c(0.0, 3.0))]);
        let b = SparseMatrix::from_triplets(3, 3, [(1, 2, c(2.0, 0.0)), (0, 0, c(1.0, -1.0)), (1, 0, c(0.5, 0.5))]);
        let sparse = (&a * &b).to_dense();
        let dense = a.to_dense().matmul(&b.to_dense());
        assert!(sparse.max_abs_diff(&dense) < 1e-15);
    }

    #[test]
    fn expm_of_diagonal_is_elementwise() {
        let d = SparseMatrix::from_diagonal(&[c(0.0, 1.3), c(-2.0, 0.0), c(0.5, 7.0)]).to_dense();
        let e = d.expm();
        for i in 0..3 {
            assert!((e[(i, i)] - d[(i, i)].exp()).norm() < 1e-13);
        }
    }

    #[test]
    fn expm_of_rotation_generator() {
        // exp(theta * [[0, -1], [1, 0]]) is a rotation by theta.
        let theta = 9.7;
        let g = SparseMatrix::from_triplets(2, 2, [(0, 1, c(-theta, 0.0)), (1, 0, c(theta, 0.0))]).to_dense();
        let r = g.expm();
        let (s, co) = (libm::sin(theta), libm::cos(theta));
        assert!((r[(0, 0)] - c(co, 0.0)).norm() < 1e-12);
        assert!((r[(0, 1)] - c(-s, 0.0)).norm() < 1e-12);
        assert!((r[(1, 0)] - c(s, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn solve_recovers_rhs() {
        let a = SparseMatrix::from_triplets(
            3,
            3,
            [(0, 0, c(0.0, 0.0)), (0, 1, c(2.0, 1.0)), (1, 0, c(1.0, 0.0)), (1, 2, c(0.0, -1.0)), (2, 2, c(4.0, 0.0)), (2, 1, c(1.0, 1.0))],
        )
        .to_dense();
        let x = DenseMatrix::identity(3);
        let b = a.matmul(&x);
        let sol = a.solve(&b).unwrap();
        assert!(sol.max_abs_diff(&x) < 1e-14);
    }
}
