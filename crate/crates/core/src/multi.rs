//! Direct sum of symmetric k-oscillator sectors, operator extension with
//! weights `c_k`, bold operators, generalized coherent states and the
//! vacuum subspace.
//!
//! Sector `k` is stored in the occupation basis: one normalized symmetric
//! vector per multiset of `k` single-oscillator basis indices, written as a
//! nondecreasing list of flat indices.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::SparseMatrix;
use crate::modes::ModeSet;
use crate::oscillator::{self, coherent_amplitudes, BasisIndex, LinearOperator, SingleBasis};
use crate::report::Report;
use crate::C64;

const NORM_TOL: f64 = 1e-12;

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k.min(n));
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Occupation basis of the symmetric `k`-fold tensor power of a
/// `d`-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorBasis {
    k: usize,
    d: usize,
    occupations: Vec<Vec<usize>>,
    index: BTreeMap<Vec<usize>, usize>,
}

impl SectorBasis {
    pub fn new(d: usize, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k", "oscillator count must be at least 1"));
        }
        if d == 0 {
            return Err(invalid("d", "single-oscillator dimension must be positive"));
        }
        let mut occupations = Vec::with_capacity(binomial(d + k - 1, k));
        let mut current = vec![0usize; k];
        loop {
            occupations.push(current.clone());
            // next nondecreasing sequence in lexicographic order
            let Some(pos) = (0..k).rev().find(|&i| current[i] + 1 < d) else { break };
            let v = current[pos] + 1;
            for slot in &mut current[pos..] {
                *slot = v;
            }
        }
        let index = occupations.iter().enumerate().map(|(i, o)| (o.clone(), i)).collect();
        Ok(SectorBasis { k, d, occupations, index })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn single_dim(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.occupations.len()
    }

    pub fn occupation(&self, i: usize) -> &[usize] {
        &self.occupations[i]
    }

    pub fn occupations(&self) -> &[Vec<usize>] {
        &self.occupations
    }

    /// Index of a multiset given in any order.
    pub fn index_of(&self, occupation: &[usize]) -> Option<usize> {
        let mut key = occupation.to_vec();
        key.sort_unstable();
        self.index.get(&key).copied()
    }

    /// `(b, m_b)` pairs of a basis multiset.
    pub fn counts(&self, i: usize) -> Vec<(usize, usize)> {
        counts(&self.occupations[i])
    }

    /// Amplitudes of the normalized product state `psi^{(x)k}`:
    /// `sqrt(k! / prod m_b!) prod psi_b^{m_b}`.
    pub fn product_state(&self, psi: &[C64]) -> Result<Vec<C64>> {
        if psi.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: psi.len() });
        }
        let ln_k_fact = libm::lgamma(self.k as f64 + 1.0);
        Ok((0..self.dim())
            .map(|i| {
                let mut amp = C64::new(1.0, 0.0);
                let mut ln_denominator = 0.0;
                for (b, m) in self.counts(i) {
                    amp *= psi[b].powu(m as u32);
                    ln_denominator += libm::lgamma(m as f64 + 1.0);
                }
                amp * libm::exp(0.5 * (ln_k_fact - ln_denominator))
            })
            .collect())
    }
}

fn counts(occupation: &[usize]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &b in occupation {
        match out.last_mut() {
            Some((last, m)) if *last == b => *m += 1,
            _ => out.push((b, 1)),
        }
    }
    out
}

/// Extension weights `c_k`, `k = 1..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionWeights {
    c: Vec<f64>,
}

impl ExtensionWeights {
    /// `c_k = 1/sqrt(k)`.
    pub fn canonical(max_sector: usize) -> Self {
        ExtensionWeights { c: (1..=max_sector).map(|k| 1.0 / libm::sqrt(k as f64)).collect() }
    }

    pub fn ones(max_sector: usize) -> Self {
        ExtensionWeights { c: vec![1.0; max_sector] }
    }

    pub fn explicit(c: Vec<f64>) -> Result<Self> {
        if c.is_empty() {
            return Err(invalid("weights", "need at least one c_k"));
        }
        if let Some(k) = c.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(invalid("weights", format!("c_{} must be positive and finite", k + 1)));
        }
        Ok(ExtensionWeights { c })
    }

    /// `c_k^2` per sector.
    pub fn squared(&self) -> Self {
        ExtensionWeights { c: self.c.iter().map(|c| c * c).collect() }
    }

    pub fn max_sector(&self) -> usize {
        self.c.len()
    }

    /// `c_k`, for `1 <= k <= max_sector`.
    pub fn get(&self, k: usize) -> f64 {
        self.c[k - 1]
    }

    /// `c_k^2`, exactly `1/k` for canonical weights.
    pub fn get_squared(&self, k: usize) -> f64 {
        if self.is_canonical() {
            1.0 / k as f64
        } else {
            self.c[k - 1] * self.c[k - 1]
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.c
    }

    pub fn is_canonical(&self) -> bool {
        self.c.iter().enumerate().all(|(i, &c)| (c * c * (i + 1) as f64 - 1.0).abs() < 1e-14)
    }
}

/// The sectors `k = 1..=M` over a mode set truncated at `n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSpace {
    modes: ModeSet,
    single: SingleBasis,
    sectors: Vec<SectorBasis>,
}

impl MultiSpace {
    pub fn new(ms: &ModeSet, n_max: usize, max_sector: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(invalid("n_max", "must be at least 1"));
        }
        if max_sector == 0 {
            return Err(invalid("max_sector", "must be at least 1"));
        }
        let single = SingleBasis::for_modes(ms, n_max);
        let sectors = (1..=max_sector).map(|k| SectorBasis::new(single.dim(), k)).collect::<Result<_>>()?;
        Ok(MultiSpace { modes: ms.clone(), single, sectors })
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn single(&self) -> &SingleBasis {
        &self.single
    }

    pub fn n_max(&self) -> usize {
        self.single.n_max
    }

    pub fn max_sector(&self) -> usize {
        self.sectors.len()
    }

    pub fn sector(&self, k: usize) -> &SectorBasis {
        &self.sectors[k - 1]
    }

    pub fn sector_dims(&self) -> Vec<usize> {
        self.sectors.iter().map(SectorBasis::dim).collect()
    }

    /// Per sector, `true` where every occupied slot has `n < n_max`.
    pub fn valid_masks(&self) -> Vec<Vec<bool>> {
        let n_max = self.n_max();
        self.sectors
            .iter()
            .map(|s| s.occupations().iter().map(|o| o.iter().all(|&b| self.single.unflat(b).n < n_max)).collect())
            .collect()
    }

    fn check_weights(&self, w: &ExtensionWeights) -> Result<()> {
        if w.max_sector() < self.max_sector() {
            return Err(invalid(
                "weights",
                format!("{} weights given for {} sectors", w.max_sector(), self.max_sector()),
            ));
        }
        Ok(())
    }

    pub fn zero_state(&self) -> MultiState {
        MultiState { sectors: self.sectors.iter().map(|s| vec![C64::new(0.0, 0.0); s.dim()]).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiState {
    sectors: Vec<Vec<C64>>,
}

impl MultiState {
    /// Sector vectors for `k = 1..`; the shape must match `space`.
    pub fn new(space: &MultiSpace, sectors: Vec<Vec<C64>>) -> Result<Self> {
        if sectors.len() > space.max_sector() {
            return Err(Error::SectorOverflow { sector: sectors.len(), max_sector: space.max_sector() });
        }
        let mut full = space.zero_state();
        for (k, v) in sectors.into_iter().enumerate() {
            let dim = space.sector(k + 1).dim();
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
            full.sectors[k] = v;
        }
        Ok(full)
    }

    pub fn sector(&self, k: usize) -> &[C64] {
        &self.sectors[k - 1]
    }

    pub fn max_sector(&self) -> usize {
        self.sectors.len()
    }

    pub fn sector_probability(&self, k: usize) -> f64 {
        self.sector(k).iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt((1..=self.max_sector()).map(|k| self.sector_probability(k)).sum())
    }

    pub fn inner(&self, other: &MultiState) -> C64 {
        self.sectors.iter().zip(&other.sectors).flat_map(|(a, b)| a.iter().zip(b)).map(|(x, y)| x.conj() * y).sum()
    }

    pub fn scaled(&self, s: C64) -> MultiState {
        MultiState { sectors: self.sectors.iter().map(|v| v.iter().map(|a| a * s).collect()).collect() }
    }

    pub fn sub(&self, other: &MultiState) -> MultiState {
        MultiState {
            sectors: self
                .sectors
                .iter()
                .zip(&other.sectors)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        }
    }

    /// `(k, occupation, amplitude)` for every nonzero amplitude.
    pub fn rows<'a>(&'a self, space: &'a MultiSpace) -> impl Iterator<Item = (usize, Vec<BasisIndex>, C64)> + 'a {
        self.sectors.iter().enumerate().flat_map(move |(i, v)| {
            let basis = space.sector(i + 1);
            v.iter().enumerate().filter(|(_, a)| a.norm() != 0.0).map(move |(j, a)| {
                let occ = basis.occupation(j).iter().map(|&b| space.single().unflat(b)).collect();
                (i + 1, occ, *a)
            })
        })
    }
}

/// Block-diagonal operator on the direct sum, one block per sector.
#[derive(Debug, Clone, PartialEq)]
pub struct BoldOperator {
    blocks: Vec<SparseMatrix>,
}

impl BoldOperator {
    pub fn from_blocks(blocks: Vec<SparseMatrix>) -> Self {
        BoldOperator { blocks }
    }

    pub fn block(&self, k: usize) -> &SparseMatrix {
        &self.blocks[k - 1]
    }

    pub fn max_sector(&self) -> usize {
        self.blocks.len()
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&SparseMatrix, &SparseMatrix) -> SparseMatrix) -> Self {
        BoldOperator { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect() }
    }

    pub fn adjoint(&self) -> Self {
        BoldOperator { blocks: self.blocks.iter().map(SparseMatrix::adjoint).collect() }
    }

    pub fn scaled(&self, s: f64) -> Self {
        BoldOperator { blocks: self.blocks.iter().map(|b| b.scale_real(s)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn commutator(a: &Self, b: &Self) -> Self {
        a.zip_with(b, SparseMatrix::commutator)
    }

    pub fn apply(&self, psi: &MultiState) -> MultiState {
        MultiState { sectors: self.blocks.iter().zip(&psi.sectors).map(|(m, v)| m.apply(v)).collect() }
    }

    pub fn expectation(&self, psi: &MultiState) -> C64 {
        self.blocks.iter().zip(&psi.sectors).map(|(m, v)| m.quadratic_form(v)).sum()
    }

    /// Largest entry of each block, by sector.
    pub fn sector_max_abs(&self) -> Vec<f64> {
        self.blocks.iter().map(SparseMatrix::max_abs).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.sector_max_abs().into_iter().fold(0.0, f64::max)
    }

    pub fn max_deviation(&self, other: &Self) -> f64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max)
    }

    /// Max entry deviation on occupations with every slot below `n_max`.
    pub fn max_deviation_valid(&self, other: &Self, space: &MultiSpace) -> f64 {
        let masks = space.valid_masks();
        self.blocks
            .iter()
            .zip(&other.blocks)
            .zip(&masks)
            .map(|((a, b), keep)| a.max_abs_diff_restricted(b, keep))
            .fold(0.0, f64::max)
    }
}

/// Symmetric restriction of `c_k sum_i (1 (x) .. (x) X_i (x) .. (x) 1)` on
/// one sector. A single placement moves one slot from `b` to `b'` with
/// amplitude `X_{b'b} sqrt(m_b) sqrt(m_{b'} + 1)`, counting `m_{b'}` after
/// the slot is removed.
pub fn extend_block(x: &SparseMatrix, basis: &SectorBasis, c: f64) -> Result<SparseMatrix> {
    if x.nrows() != basis.single_dim() || x.ncols() != basis.single_dim() {
        return Err(Error::DimensionMismatch { expected: basis.single_dim(), found: x.nrows() });
    }
    let mut by_column: Vec<Vec<(usize, C64)>> = vec![Vec::new(); x.ncols()];
    for (r, col, v) in x.iter() {
        by_column[col].push((r, v));
    }
    let mut triplets = Vec::new();
    let mut scratch = Vec::with_capacity(basis.k());
    for col in 0..basis.dim() {
        let occ = basis.occupation(col);
        let cnt = counts(occ);
        for &(b, m_b) in &cnt {
            for &(b_new, value) in &by_column[b] {
                let m_new = cnt.iter().find(|(v, _)| *v == b_new).map_or(0, |(_, m)| *m) - usize::from(b_new == b);
                scratch.clear();
                scratch.extend_from_slice(occ);
                let pos = scratch.iter().position(|&v| v == b).expect("b is occupied");
                scratch[pos] = b_new;
                scratch.sort_unstable();
                let row = basis.index_of(&scratch).expect("multiset stays in sector");
                let amp = value * (c * libm::sqrt((m_b * (m_new + 1)) as f64));
                triplets.push((row, col, amp));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(basis.dim(), basis.dim(), triplets))
}

/// `X -> c_1 X (+) c_2 (X (x) 1 + 1 (x) X) (+) ...` over all sectors of `space`.
pub fn extend_operator(x: &LinearOperator, w: &ExtensionWeights, space: &MultiSpace) -> Result<BoldOperator> {
    space.check_weights(w)?;
    let blocks = (1..=space.max_sector())
        .map(|k| extend_block(x.matrix(), space.sector(k), w.get(k)))
        .collect::<Result<_>>()?;
    Ok(BoldOperator { blocks })
}

/// Bold annihilator of one mode.
pub fn bold_annihilator(space: &MultiSpace, w: &ExtensionWeights, mode: usize) -> Result<BoldOperator> {
    let a = oscillator::mode_annihilator(space.modes(), mode, space.n_max())?;
    extend_operator(&a, w, space)
}

/// Bold identity of one mode: the extension of the mode projector with
/// weights `c_k^2`, which is what `[a, a^dag]` produces on the valid subspace.
pub fn bold_identity(space: &MultiSpace, w: &ExtensionWeights, mode: usize) -> Result<BoldOperator> {
    let p = oscillator::mode_projector(space.modes(), mode, space.n_max())?;
    extend_operator(&p, &w.squared(), space)
}

/// `1/2 sum hbar omega (a^dag a + a a^dag)` built from bold operators.
pub fn bold_hamiltonian(space: &MultiSpace, w: &ExtensionWeights) -> Result<BoldOperator> {
    let hbar = space.modes().constants().hbar;
    let mut acc: Option<BoldOperator> = None;
    for m in 0..space.modes().len() {
        let a = bold_annihilator(space, w, m)?;
        let ad = a.adjoint();
        let term = ad.mul(&a).add(&a.mul(&ad)).scaled(0.5 * hbar * space.modes().mode(m).omega);
        acc = Some(match acc {
            None => term,
            Some(prev) => prev.add(&term),
        });
    }
    Ok(acc.expect("mode sets are nonempty"))
}

/// Time-translation generator: the single-oscillator Hamiltonian extended
/// with unit weights.
pub fn generator_hamiltonian(space: &MultiSpace) -> Result<BoldOperator> {
    let h = oscillator::hamiltonian(space.modes(), space.n_max())?;
    extend_operator(&h, &ExtensionWeights::ones(space.max_sector()), space)
}

/// Checks the bold commutation relations on the valid subspace and exhibits
/// the properties that fail relative to the single-oscillator algebra.
pub fn bold_algebra_report(ms: &ModeSet, n_max: usize, w: &ExtensionWeights, max_sector: usize) -> Result<Report> {
    const TOL: f64 = 1e-12;
    const WITNESS: f64 = 1e-3;
    let space = MultiSpace::new(ms, n_max, max_sector)?;
    let annihilators: Vec<BoldOperator> = (0..ms.len()).map(|m| bold_annihilator(&space, w, m)).collect::<Result<_>>()?;
    let creators: Vec<BoldOperator> = annihilators.iter().map(BoldOperator::adjoint).collect();
    let identities: Vec<BoldOperator> = (0..ms.len()).map(|m| bold_identity(&space, w, m)).collect::<Result<_>>()?;

    let (mut same, mut distinct, mut aa, mut adad) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut product_witness = 0.0f64;
    for k in 0..ms.len() {
        for l in 0..ms.len() {
            let comm = BoldOperator::commutator(&annihilators[k], &creators[l]);
            if k == l {
                same = same.max(comm.max_deviation_valid(&identities[k], &space));
            } else {
                distinct = distinct.max(comm.max_abs());
                let product = annihilators[k].mul(&annihilators[l]);
                product_witness = product_witness.max(product.max_abs());
            }
            aa = aa.max(BoldOperator::commutator(&annihilators[k], &annihilators[l]).max_abs());
            adad = adad.max(BoldOperator::commutator(&creators[k], &creators[l]).max_abs());
        }
    }
    let mut sum = identities[0].clone();
    for id in &identities[1..] {
        sum = sum.add(id);
    }
    let unit = BoldOperator {
        blocks: space.sector_dims().into_iter().map(SparseMatrix::identity).collect(),
    };
    let resolution = sum.max_deviation_valid(&unit, &space);

    let mut report = Report::new(format!(
        "bold-operator algebra ({} modes, n_max = {n_max}, M = {max_sector}, c = {:?})",
        ms.len(),
        w.values()
    ));
    report.at_most("[a_k, a_k^dag] = 1_k", same, TOL);
    report.at_most("[a_k, a_l^dag] = 0 for k != l", distinct, TOL);
    report.at_most("[a_k, a_l] = 0", aa, TOL);
    report.at_most("[a_k^dag, a_l^dag] = 0", adad, TOL);
    if w.is_canonical() {
        report.at_most("sum_k 1_k = 1", resolution, TOL);
    } else {
        report.at_least("sum_k 1_k != 1 (c_k != 1/sqrt k)", resolution, WITNESS);
    }
    if max_sector >= 2 {
        let id2 = &identities[0];
        let square_defect = id2.mul(id2).sub(id2);
        report.at_least("1_k^2 != 1_k in sector 2", square_defect.block(2).max_abs(), WITNESS);
        if ms.len() >= 2 {
            report.at_least("a_k a_l != 0 for k != l", product_witness, WITNESS);
        }
    }
    Ok(report)
}

/// A generalized coherent state of one mode together with the exact
/// eigen-relation residual bound implied by truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedCoherent {
    pub state: MultiState,
    /// Upper bound on `||a |alpha> - alpha |alpha>||`.
    pub residual_bound: f64,
}

fn check_unit(values: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let total: f64 = values.sum();
    if (total - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidProbabilities { reason: format!("{what} sums to {total}, not 1") });
    }
    Ok(())
}

fn check_support(len: usize, nonzero: impl Fn(usize) -> bool, max_sector: usize) -> Result<()> {
    if let Some(k) = (max_sector..len).rev().find(|&i| nonzero(i)) {
        return Err(Error::SectorOverflow { sector: k + 1, max_sector });
    }
    Ok(())
}

/// Sector `k` holds `f_k` times `k` copies of the coherent state of `mode`
/// with parameter `alpha / (k c_k)`.
pub fn generalized_coherent(
    space: &MultiSpace,
    w: &ExtensionWeights,
    mode: usize,
    alpha: C64,
    f: &[C64],
) -> Result<GeneralizedCoherent> {
    space.check_weights(w)?;
    if mode >= space.modes().len() {
        return Err(Error::UnknownMode);
    }
    check_unit(f.iter().map(|v| v.norm_sqr()), "sum |f_k|^2")?;
    check_support(f.len(), |i| f[i].norm() != 0.0, space.max_sector())?;
    let n_max = space.n_max();
    let single = space.single();
    let mut state = space.zero_state();
    let mut bound_sq = 0.0;
    for (i, fk) in f.iter().enumerate().filter(|(_, v)| v.norm() != 0.0) {
        let k = i + 1;
        let beta = alpha / (k as f64 * w.get(k));
        let coh = coherent_amplitudes(beta, n_max)?;
        let mut psi = vec![C64::new(0.0, 0.0); single.dim()];
        for (n, c) in coh.iter().enumerate() {
            psi[single.flat(BasisIndex { mode, n })] = *c;
        }
        // a psi = beta psi - beta psi_N |N>; summed over k slots and scaled by c_k
        bound_sq += fk.norm_sqr() * alpha.norm_sqr() * coh[n_max].norm_sqr();
        state.sectors[i] = space.sector(k).product_state(&psi)?.into_iter().map(|a| a * fk).collect();
    }
    Ok(GeneralizedCoherent { state, residual_bound: libm::sqrt(bound_sq) })
}

/// `||a |alpha> - alpha |alpha>||` evaluated by matrix action.
pub fn eigen_residual(space: &MultiSpace, w: &ExtensionWeights, mode: usize, alpha: C64, state: &MultiState) -> Result<f64> {
    let a = bold_annihilator(space, w, mode)?;
    Ok(a.apply(state).sub(&state.scaled(alpha)).norm())
}

/// `sum_k Phi_k |alpha_k>` over modes, every mode sharing the sector profile `f`.
pub fn coherent_combination(
    space: &MultiSpace,
    w: &ExtensionWeights,
    phi: &[C64],
    alpha: &[C64],
    f: &[C64],
) -> Result<MultiState> {
    let n = space.modes().len();
    for v in [phi, alpha] {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: v.len() });
        }
    }
    check_unit(phi.iter().map(|v| v.norm_sqr()), "sum |Phi|^2")?;
    let mut total = space.zero_state();
    for m in (0..n).filter(|&m| phi[m].norm() != 0.0) {
        let part = generalized_coherent(space, w, m, alpha[m], f)?.state.scaled(phi[m]);
        for (acc, add) in total.sectors.iter_mut().zip(part.sectors) {
            acc.iter_mut().zip(add).for_each(|(x, y)| *x += y);
        }
    }
    Ok(total)
}

/// Closed-form averages of the generator and the bold Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentEnergies {
    pub generator: f64,
    pub bold: f64,
}

/// `<H_gen> = hbar w |alpha|^2 sum |f_k|^2/(k c_k^2) + hbar w/2 sum k |f_k|^2`
/// and `<H_bold> = hbar w |alpha|^2 + hbar w/2 sum k c_k^2 |f_k|^2`.
pub fn coherent_energies(ms: &ModeSet, mode: usize, alpha: C64, f: &[C64], w: &ExtensionWeights) -> CoherentEnergies {
    let hw = ms.constants().hbar * ms.mode(mode).omega;
    let a2 = alpha.norm_sqr();
    let (mut inv, mut count, mut weighted) = (0.0, 0.0, 0.0);
    for (i, fk) in f.iter().enumerate() {
        let (k, p) = ((i + 1) as f64, fk.norm_sqr());
        if p == 0.0 {
            continue;
        }
        let c2 = w.get(i + 1) * w.get(i + 1);
        inv += p / (k * c2);
        count += k * p;
        weighted += k * c2 * p;
    }
    CoherentEnergies { generator: hw * a2 * inv + 0.5 * hw * count, bold: hw * a2 + 0.5 * hw * weighted }
}

/// Closed-form averages for a mode combination with `c_k = 1/sqrt k`.
pub fn combination_energies(ms: &ModeSet, phi: &[C64], alpha: &[C64], f: &[C64]) -> CoherentEnergies {
    let hbar = ms.constants().hbar;
    let count: f64 = f.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v.norm_sqr()).sum();
    let mut out = CoherentEnergies { generator: 0.0, bold: 0.0 };
    for m in 0..ms.len() {
        let hw = hbar * ms.mode(m).omega * phi[m].norm_sqr();
        out.generator += hw * alpha[m].norm_sqr() + 0.5 * hw * count;
        out.bold += hw * alpha[m].norm_sqr() + 0.5 * hw;
    }
    out
}

/// Identical single-oscillator ground profile in every sector, weighted by
/// sector probabilities `p_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct VacuumSpec {
    phi: Vec<C64>,
    p: Vec<f64>,
}

impl VacuumSpec {
    /// `phi` is indexed like the mode set, `p[k-1]` is `p_k`.
    pub fn new(phi: Vec<C64>, p: Vec<f64>) -> Result<Self> {
        if phi.is_empty() || p.is_empty() {
            return Err(invalid("vacuum", "phi and p must be nonempty"));
        }
        check_unit(phi.iter().map(|v| v.norm_sqr()), "sum |phi|^2")?;
        if p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidProbabilities { reason: String::from("p_k must be finite and nonnegative") });
        }
        check_unit(p.iter().copied(), "sum p_k")?;
        Ok(VacuumSpec { phi, p })
    }

    pub fn phi(&self) -> &[C64] {
        &self.phi
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// `p_k`, zero beyond the given list.
    pub fn p_k(&self, k: usize) -> f64 {
        self.p.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn mean_oscillators(&self) -> f64 {
        self.p.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum()
    }

    /// `|phi> = sum phi_m |m, 0>` on the single-oscillator basis.
    pub fn ground_profile(&self, single: &SingleBasis) -> Result<Vec<C64>> {
        if self.phi.len() != single.n_modes {
            return Err(Error::DimensionMismatch { expected: single.n_modes, found: self.phi.len() });
        }
        let mut psi = vec![C64::new(0.0, 0.0); single.dim()];
        for (m, v) in self.phi.iter().enumerate() {
            psi[single.flat(BasisIndex { mode: m, n: 0 })] = *v;
        }
        Ok(psi)
    }
}

/// `sqrt(p_1)|phi> (+) sqrt(p_2)|phi>|phi> (+) ...`.
pub fn vacuum_state(space: &MultiSpace, v: &VacuumSpec) -> Result<MultiState> {
    check_support(v.p.len(), |i| v.p[i] != 0.0, space.max_sector())?;
    let phi = v.ground_profile(space.single())?;
    let mut state = space.zero_state();
    for (i, &p) in v.p.iter().enumerate().filter(|(_, p)| **p != 0.0) {
        state.sectors[i] = space.sector(i + 1).product_state(&phi)?.into_iter().map(|a| a * libm::sqrt(p)).collect();
    }
    Ok(state)
}

/// `sum_k k p_k <phi|H|phi>`: mean oscillator number times single-oscillator energy.
pub fn vacuum_energy(v: &VacuumSpec, ms: &ModeSet) -> Result<f64> {
    if v.phi.len() != ms.len() {
        return Err(Error::DimensionMismatch { expected: ms.len(), found: v.phi.len() });
    }
    let hbar = ms.constants().hbar;
    let single: f64 = v.phi.iter().enumerate().map(|(m, a)| a.norm_sqr() * 0.5 * hbar * ms.mode(m).omega).sum();
    Ok(v.mean_oscillators() * single)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow {
    pub label: &'static str,
    pub sector: usize,
    pub occupation: Vec<usize>,
    /// Eigenvalue of the generator in units of `hbar omega`.
    pub energy: f64,
}

/// `<psi| h |psi>` for the sector-`ns.len()` basis state whose slots hold
/// `mode` with the excitation numbers `ns`.
pub fn occupation_energy(space: &MultiSpace, h: &BoldOperator, mode: usize, ns: &[usize]) -> Result<f64> {
    let k = ns.len();
    if k == 0 || k > space.max_sector() {
        return Err(Error::SectorOverflow { sector: k, max_sector: space.max_sector() });
    }
    if ns.iter().any(|&n| n > space.n_max()) {
        return Err(invalid("occupation", "excitation above the truncation"));
    }
    let occ: Vec<usize> = ns.iter().map(|&n| space.single().flat(BasisIndex { mode, n })).collect();
    let i = space.sector(k).index_of(&occ).ok_or(Error::UnknownMode)?;
    let mut sectors: Vec<Vec<C64>> = (1..=space.max_sector()).map(|j| vec![C64::new(0.0, 0.0); space.sector(j).dim()]).collect();
    sectors[k - 1][i] = C64::new(1.0, 0.0);
    let psi = MultiState::new(space, sectors)?;
    Ok(h.apply(&psi).inner(&psi).re)
}

/// Generator eigenvalues of the one- and two-oscillator states of `mode`
/// with total excitation 0 and 2.
pub fn sector_energy_spectrum_demo(ms: &ModeSet, mode: usize) -> Result<Vec<SpectrumRow>> {
    if mode >= ms.len() {
        return Err(Error::UnknownMode);
    }
    let space = MultiSpace::new(ms, 2, 2)?;
    let h = generator_hamiltonian(&space)?;
    let hw = ms.constants().hbar * ms.mode(mode).omega;
    let cases: [(&'static str, Vec<usize>); 4] = [
        ("one oscillator, ground", vec![0]),
        ("two oscillators, both ground", vec![0, 0]),
        ("one oscillator, second excited", vec![2]),
        ("two oscillators, both first excited", vec![1, 1]),
    ];
    cases
        .into_iter()
        .map(|(label, ns)| {
            let energy = occupation_energy(&space, &h, mode, &ns)? / hw;
            Ok(SpectrumRow { label, sector: ns.len(), occupation: ns, energy })
        })
        .collect()
}

/// `sum Psi(k1,k2) (|+,k1,n>|-,k2,n> +/- |-,k1,n>|+,k2,n>)`, normalized, in
/// sector 2. `pairs` lists `(i1, i2, Psi)` with `i1`, `i2` indices of
/// positive-helicity modes; the partner helicities must be in the mode set
/// and `Psi` must have the exchange symmetry matching `sign`.
pub fn entangled_pair_state(space: &MultiSpace, n: usize, pairs: &[(usize, usize, C64)], sign: f64) -> Result<MultiState> {
    if space.max_sector() < 2 {
        return Err(Error::SectorOverflow { sector: 2, max_sector: space.max_sector() });
    }
    if n > space.n_max() {
        return Err(invalid("n", "exceeds n_max"));
    }
    if sign.abs() != 1.0 {
        return Err(invalid("sign", "must be +1 or -1"));
    }
    let lookup: BTreeMap<(usize, usize), C64> = pairs.iter().map(|&(a, b, v)| ((a, b), v)).collect();
    for (&(a, b), &v) in &lookup {
        let mirrored = lookup.get(&(b, a)).copied().unwrap_or(C64::new(0.0, 0.0));
        if (v - mirrored * sign).norm() > NORM_TOL {
            return Err(invalid("pairs", "Psi(k1, k2) must equal sign * Psi(k2, k1)"));
        }
    }
    let single = space.single();
    let ms = space.modes();
    let mut tensor: BTreeMap<(usize, usize), C64> = BTreeMap::new();
    for (&(i1, i2), &v) in &lookup {
        let (Some(m1), Some(m2)) = (ms.partner(i1), ms.partner(i2)) else {
            return Err(invalid("pairs", "every wavevector needs both helicities"));
        };
        if ms.mode(i1).helicity != crate::modes::Helicity::Plus || ms.mode(i2).helicity != crate::modes::Helicity::Plus {
            return Err(invalid("pairs", "indices must name positive-helicity modes"));
        }
        let f = |m: usize| single.flat(BasisIndex { mode: m, n });
        *tensor.entry((f(i1), f(m2))).or_default() += v;
        *tensor.entry((f(m1), f(i2))).or_default() += v * sign;
    }
    let basis = space.sector(2);
    let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
    for (&(b1, b2), &v) in &tensor {
        let swapped = tensor.get(&(b2, b1)).copied().unwrap_or_default();
        if (v - swapped).norm() > NORM_TOL {
            return Err(invalid("pairs", "state is not symmetric under oscillator exchange"));
        }
        let idx = basis.index_of(&[b1, b2]).expect("pair in sector 2");
        // |b1 b2> with b1 != b2 contributes 1/sqrt 2 of the symmetric vector from each ordering
        amps[idx] += if b1 == b2 { v } else { v * core::f64::consts::FRAC_1_SQRT_2 };
    }
    let norm = libm::sqrt(amps.iter().map(|a| a.norm_sqr()).sum::<f64>());
    if norm == 0.0 {
        return Err(invalid("pairs", "state vanishes"));
    }
    amps.iter_mut().for_each(|a| *a /= norm);
    MultiState::new(space, vec![vec![C64::new(0.0, 0.0); space.sector(1).dim()], amps])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{Constants, Helicity, Mode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn modes(count: usize) -> ModeSet {
        let all = [
            Mode::new(Helicity::Plus, [0.0, 0.0, 1.0], 1.0).unwrap(),
            Mode::new(Helicity::Minus, [0.0, 0.0, 1.0], 1.0).unwrap(),
            Mode::new(Helicity::Plus, [0.0, 2.0, 0.0], 1.0).unwrap(),
            Mode::new(Helicity::Minus, [0.0, 2.0, 0.0], 1.0).unwrap(),
        ];
        ModeSet::new(all[..count].to_vec(), 1.0, Constants::default()).unwrap()
    }

    /// Columns are the normalized symmetrized tensor vectors of each multiset.
    fn symmetrizer(basis: &SectorBasis) -> Vec<Vec<C64>> {
        let (d, k) = (basis.single_dim(), basis.k());
        let full = d.pow(k as u32);
        (0..basis.dim())
            .map(|i| {
                let target = basis.occupation(i);
                let mut v = vec![C64::new(0.0, 0.0); full];
                let mut hits = 0usize;
                for t in 0..full {
                    let mut digits: Vec<usize> = (0..k).map(|j| (t / d.pow((k - 1 - j) as u32)) % d).collect();
                    digits.sort_unstable();
                    if digits == target {
                        v[t] = C64::new(1.0, 0.0);
                        hits += 1;
                    }
                }
                let s = 1.0 / libm::sqrt(hits as f64);
                v.iter_mut().for_each(|a| *a *= s);
                v
            })
            .collect()
    }

    /// `sum_i 1 (x) .. X_i .. (x) 1` on the full tensor power.
    fn tensor_sum(x: &SparseMatrix, k: usize) -> SparseMatrix {
        let d = x.nrows();
        let id = SparseMatrix::identity(d);
        let mut total = SparseMatrix::zeros(d.pow(k as u32), d.pow(k as u32));
        for slot in 0..k {
            let mut term = if slot == 0 { x.clone() } else { id.clone() };
            for j in 1..k {
                term = term.kron(if j == slot { x } else { &id });
            }
            total = &total + &term;
        }
        total
    }

    fn random_operator(rng: &mut ChaCha8Rng, d: usize) -> SparseMatrix {
        SparseMatrix::from_triplets(
            d,
            d,
            (0..d * d).map(|i| (i / d, i % d, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))),
        )
    }

    #[test]
    fn sector_dimensions_match_binomial_and_brute_force() {
        for d in 1..=6 {
            for k in 1..=3 {
                let b = SectorBasis::new(d, k).unwrap();
                assert_eq!(b.dim(), binomial(d + k - 1, k));
                let mut brute: Vec<Vec<usize>> = (0..d.pow(k as u32))
                    .map(|t| {
                        let mut v: Vec<usize> = (0..k).map(|j| (t / d.pow(j as u32)) % d).collect();
                        v.sort_unstable();
                        v
                    })
                    .collect();
                brute.sort();
                brute.dedup();
                assert_eq!(brute, b.occupations());
            }
        }
    }

    #[test]
    fn extension_matches_tensor_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for d in [2usize, 3, 4] {
            for k in 1..=3 {
                let basis = SectorBasis::new(d, k).unwrap();
                let x = random_operator(&mut rng, d);
                let block = extend_block(&x, &basis, 0.7).unwrap().to_dense();
                let s = symmetrizer(&basis);
                let full = tensor_sum(&x, k);
                for (i, si) in s.iter().enumerate() {
                    let xs = full.apply(si);
                    for (j, sj) in s.iter().enumerate() {
                        let oracle: C64 = sj.iter().zip(&xs).map(|(a, b)| a.conj() * b).sum::<C64>() * 0.7;
                        assert!((block[(j, i)] - oracle).norm() < 1e-12, "d={d} k={k}");
                    }
                    // the symmetric subspace is closed under the tensor sum
                    let back: f64 = s.iter().map(|sj| sj.iter().zip(&xs).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr()).sum();
                    let total: f64 = xs.iter().map(|a| a.norm_sqr()).sum();
                    assert!((back - total).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn two_slot_ladder_example() {
        let ms = modes(1);
        let space = MultiSpace::new(&ms, 2, 2).unwrap();
        let w = ExtensionWeights::canonical(2);
        let a = bold_annihilator(&space, &w, 0).unwrap();
        let basis = space.sector(2);
        let from = basis.index_of(&[1, 1]).unwrap();
        let to = basis.index_of(&[0, 1]).unwrap();
        // c_2 (a (x) 1 + 1 (x) a) |1>|1> = c_2 (|0>|1> + |1>|0>) = c_2 sqrt 2 |{0,1}>
        let amp = a.block(2).get(to, from);
        assert!((amp.re - w.get(2) * core::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn single_sector_is_scaled_operator() {
        let ms = modes(2);
        let space = MultiSpace::new(&ms, 3, 1).unwrap();
        let a = oscillator::mode_annihilator(&ms, 1, 3).unwrap();
        let w = ExtensionWeights::explicit(vec![0.3]).unwrap();
        let ext = extend_operator(&a, &w, &space).unwrap();
        assert!(ext.block(1).max_abs_diff(&a.matrix().scale_real(0.3)) < 1e-15);
    }

    #[test]
    fn identity_extension_counts_placements() {
        let ms = modes(2);
        let space = MultiSpace::new(&ms, 2, 3).unwrap();
        let id = LinearOperator::new(SparseMatrix::identity(space.single().dim()), 2);
        let w = ExtensionWeights::canonical(3);
        let ext = extend_operator(&id, &w, &space).unwrap();
        for k in 1..=3 {
            let expected = SparseMatrix::identity(space.sector(k).dim()).scale_real(k as f64 * w.get(k));
            assert!(ext.block(k).max_abs_diff(&expected) < 1e-14);
        }
    }

    #[test]
    fn weight_validation() {
        assert!(ExtensionWeights::explicit(vec![1.0, 0.0]).is_err());
        assert!(ExtensionWeights::explicit(vec![]).is_err());
        assert!(ExtensionWeights::canonical(4).is_canonical());
        assert!(!ExtensionWeights::ones(2).is_canonical());
        assert!(ExtensionWeights::ones(1).is_canonical());
        let space = MultiSpace::new(&modes(1), 2, 3).unwrap();
        assert!(bold_annihilator(&space, &ExtensionWeights::ones(2), 0).is_err());
    }

    #[test]
    fn canonical_algebra_report() {
        let report = bold_algebra_report(&modes(2), 2, &ExtensionWeights::canonical(3), 3).unwrap();
        assert!(report.passed(), "{report}");
        let witness = report.entry("1_k^2 != 1_k in sector 2").unwrap();
        assert!((witness.deviation - 0.25).abs() < 1e-14);
    }

    #[test]
    fn unit_weights_break_resolution() {
        let report = bold_algebra_report(&modes(2), 2, &ExtensionWeights::ones(2), 2).unwrap();
        assert!(report.passed(), "{report}");
        let e = report.entry("sum_k 1_k != 1 (c_k != 1/sqrt k)").unwrap();
        assert!((e.deviation - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unit_weights_sum_is_k_identity() {
        let ms = modes(2);
        let space = MultiSpace::new(&ms, 2, 3).unwrap();
        let w = ExtensionWeights::ones(3);
        let sum = bold_identity(&space, &w, 0).unwrap().add(&bold_identity(&space, &w, 1).unwrap());
        for k in 1..=3 {
            let expected = SparseMatrix::identity(space.sector(k).dim()).scale_real(k as f64);
            assert!(sum.block(k).max_abs_diff(&expected) < 1e-14);
        }
    }

    #[test]
    fn vacuum_coherent_state() {
        let ms = modes(2);
        let space = MultiSpace::new(&ms, 3, 3).unwrap();
        let w = ExtensionWeights::canonical(3);
        let f = [C64::new(0.6, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.8)];
        let gc = generalized_coherent(&space, &w, 1, C64::new(0.0, 0.0), &f).unwrap();
        assert_eq!(gc.residual_bound, 0.0);
        assert_eq!(eigen_residual(&space, &w, 1, C64::new(0.0, 0.0), &gc.state).unwrap(), 0.0);
        assert!((gc.state.norm() - 1.0).abs() < 1e-14);
        let ground = space.single().flat(BasisIndex { mode: 1, n: 0 });
        let idx = space.sector(3).index_of(&[ground; 3]).unwrap();
        assert!((gc.state.sector(3)[idx] - f[2]).norm() < 1e-15);
    }

    #[test]
    fn one_sector_coherent_is_single_oscillator() {
        let ms = modes(1);
        let space = MultiSpace::new(&ms, 20, 2).unwrap();
        let w = ExtensionWeights::explicit(vec![0.8, 0.5]).unwrap();
        let alpha = C64::new(0.4, -0.3);
        let gc = generalized_coherent(&space, &w, 0, alpha, &[C64::new(1.0, 0.0)]).unwrap();
        let direct = coherent_amplitudes(alpha / 0.8, 20).unwrap();
        assert!(gc.state.sector(1).iter().zip(&direct).all(|(a, b)| (a - b).norm() < 1e-15));
        assert!(gc.state.sector(2).iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn coherent_eigen_relation_within_bound() {
        let ms = modes(1);
        let space = MultiSpace::new(&ms, 12, 2).unwrap();
        let w = ExtensionWeights::canonical(2);
        let alpha = C64::new(0.5, 0.0);
        let f = [C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0), C64::new(0.0, core::f64::consts::FRAC_1_SQRT_2)];
        let gc = generalized_coherent(&space, &w, 0, alpha, &f).unwrap();
        let residual = eigen_residual(&space, &w, 0, alpha, &gc.state).unwrap();
        assert!(residual <= gc.residual_bound * (1.0 + 1e-9) + 1e-15, "{residual} > {}", gc.residual_bound);
        assert!(gc.residual_bound < 1e-8);
    }

    #[test]
    fn coherent_validation() {
        let space = MultiSpace::new(&modes(1), 6, 2).unwrap();
        let w = ExtensionWeights::canonical(2);
        let half = C64::new(0.5, 0.0);
        assert!(matches!(generalized_coherent(&space, &w, 0, half, &[half]), Err(Error::InvalidProbabilities { .. })));
        let f = [C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        assert!(matches!(generalized_coherent(&space, &w, 0, half, &f), Err(Error::SectorOverflow { sector: 3, .. })));
        assert!(matches!(
            generalized_coherent(&space, &w, 0, C64::new(2.0, 0.0), &[C64::new(1.0, 0.0)]),
            Err(Error::TruncationTail { .. })
        ));
    }

    #[test]
    fn coherent_energies_match_operators() {
        let ms = modes(2);
        let space = MultiSpace::new(&ms, 14, 3).unwrap();
        let alpha = C64::new(0.3, 0.4);
        let f = [C64::new(0.5, 0.0), C64::new(0.0, 0.5), C64::new(libm::sqrt(0.5), 0.0)];
        for w in [ExtensionWeights::canonical(3), ExtensionWeights::explicit(vec![1.0, 0.9, 0.4]).unwrap()] {
            let gc = generalized_coherent(&space, &w, 1, alpha, &f).unwrap();
            let closed = coherent_energies(&ms, 1, alpha, &f, &w);
            let gen = generator_hamiltonian(&space).unwrap().expectation(&gc.state);
            let bold = bold_hamiltonian(&space, &w).unwrap().expectation(&gc.state);
            assert!((gen.re - closed.generator).abs() < 1e-10);
            assert!((bold.re - closed.bold).abs() < 1e-10);
        }
        let closed = coherent_energies(&ms, 1, alpha, &f, &ExtensionWeights::canonical(3));
        let count: f64 = f.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v.norm_sqr()).sum();
        let omega = ms.mode(1).omega;
        assert!((closed.generator - closed.bold - 0.5 * omega * (count - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn one_sector_bold_energy() {
        let ms = modes(1);
        let w = ExtensionWeights::explicit(vec![0.7]).unwrap();
        let alpha = C64::new(0.2, 0.0);
        let e = coherent_energies(&ms, 0, alpha, &[C64::new(1.0, 0.0)], &w);
        assert!((e.bold - (0.04 + 0.5 * 0.49)).abs() < 1e-15);
    }

    #[test]
    fn combination_energies_match_operators() {
        let ms = modes(3);
        let space = MultiSpace::new(&ms, 12, 2).unwrap();
        let w = ExtensionWeights::canonical(2);
        let phi = [C64::new(0.6, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.8)];
        let alpha = [C64::new(0.4, 0.1), C64::new(0.0, 0.0), C64::new(-0.2, 0.3)];
        let f = [C64::new(0.8, 0.0), C64::new(0.6, 0.0)];
        let psi = coherent_combination(&space, &w, &phi, &alpha, &f).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-13);
        let closed = combination_energies(&ms, &phi, &alpha, &f);
        let gen = generator_hamiltonian(&space).unwrap().expectation(&psi).re;
        let bold = bold_hamiltonian(&space, &w).unwrap().expectation(&psi).re;
        assert!((gen - closed.generator).abs() < 1e-10);
        assert!((bold - closed.bold).abs() < 1e-10);
    }

    #[test]
    fn vacuum_energies() {
        let ms = modes(4);
        let single_ground = VacuumSpec::new(vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)], vec![1.0]).unwrap();
        assert!((vacuum_energy(&single_ground, &ms).unwrap() - 1.0).abs() < 1e-15);
        let two = VacuumSpec::new(single_ground.phi().to_vec(), vec![0.0, 1.0]).unwrap();
        assert!((vacuum_energy(&two, &ms).unwrap() - 2.0).abs() < 1e-15);

        let space = MultiSpace::new(&ms, 1, 3).unwrap();
        let h = generator_hamiltonian(&space).unwrap();
        let lambda: f64 = 0.9;
        let raw: Vec<f64> = (1..=3).map(|k| libm::pow(lambda, k as f64) / libm::tgamma(k as f64 + 1.0)).collect();
        let total: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let phi = vec![C64::new(0.5, 0.0), C64::new(0.0, 0.5), C64::new(0.5, 0.0), C64::new(-0.5, 0.0)];
        let v = VacuumSpec::new(phi, p).unwrap();
        let psi = vacuum_state(&space, &v).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-14);
        let direct = h.expectation(&psi);
        assert!((direct.re - vacuum_energy(&v, &ms).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn vacuum_validation() {
        let one = vec![C64::new(1.0, 0.0)];
        assert!(VacuumSpec::new(one.clone(), vec![0.5, 0.6]).is_err());
        assert!(VacuumSpec::new(one.clone(), vec![1.5, -0.5]).is_err());
        assert!(VacuumSpec::new(vec![C64::new(0.5, 0.0)], vec![1.0]).is_err());
        let ms = modes(1);
        let space = MultiSpace::new(&ms, 1, 2).unwrap();
        let deep = VacuumSpec::new(one, vec![0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(vacuum_state(&space, &deep), Err(Error::SectorOverflow { .. })));
    }

    #[test]
    fn energy_demo_values() {
        let rows = sector_energy_spectrum_demo(&modes(2), 1).unwrap();
        let energies: Vec<f64> = rows.iter().map(|r| r.energy).collect();
        let expected = [0.5, 1.0, 2.5, 3.0];
        for (e, x) in energies.iter().zip(expected) {
            assert!((e - x).abs() < 1e-14);
        }
    }

    #[test]
    fn entangled_states_normalized_and_symmetric() {
        let ms = modes(4);
        let space = MultiSpace::new(&ms, 2, 2).unwrap();
        let v = C64::new(0.3, 0.1);
        for (sign, pairs) in [
            (1.0, vec![(0, 2, v), (2, 0, v), (0, 0, C64::new(0.5, 0.0))]),
            (-1.0, vec![(0, 2, v), (2, 0, -v)]),
        ] {
            let psi = entangled_pair_state(&space, 1, &pairs, sign).unwrap();
            assert!((psi.norm() - 1.0).abs() < 1e-14);
            assert_eq!(psi.sector_probability(1), 0.0);
        }
        assert!(entangled_pair_state(&space, 1, &[(0, 2, v)], 1.0).is_err());
        assert!(entangled_pair_state(&space, 1, &[(1, 1, v)], 1.0).is_err());
    }

    #[test]
    fn product_state_normalized() {
        let basis = SectorBasis::new(3, 3).unwrap();
        let psi = [C64::new(0.6, 0.0), C64::new(0.0, 0.48), C64::new(0.64, 0.0)];
        let amps = basis.product_state(&psi).unwrap();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-14);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn commutator_of_extensions(seed in 0u64..10_000, c in 0.1f64..2.0, k in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = 3;
            let basis = SectorBasis::new(d, k).unwrap();
            let x = random_operator(&mut rng, d);
            let y = random_operator(&mut rng, d);
            let ex = extend_block(&x, &basis, c).unwrap();
            let ey = extend_block(&y, &basis, c).unwrap();
            let lhs = SparseMatrix::commutator(&ex, &ey);
            let rhs = extend_block(&SparseMatrix::commutator(&x, &y), &basis, 1.0).unwrap().scale_real(c * c);
            proptest::prop_assert!(lhs.max_abs_diff(&rhs) < 1e-11);
        }
    }
}
