//! Truncated two-mode ⊗ two-level Hilbert space.
//!
//! Basis states `|s, n, m⟩` carry the atomic level `s ∈ {g, e}` and the Fock
//! occupations `n` (mode a) and `m` (mode b), each in `0..=cutoff`. The flat
//! layout is atom-major, then `n`, then `m`:
//!
//! ```text
//! index(s, n, m) = s·(N+1)² + n·(N+1) + m,   s = 0 for g, 1 for e
//! ```
//!
//! Operators are assembled as coordinate lists and stored in compressed-row
//! form. Raising a mode at `n = cutoff` produces no entry; the discarded
//! weight is kept per column in the operator's overflow table and charged to
//! a state's `leak` when the operator is applied.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AtomLevel {
    #[serde(rename = "g")]
    Ground,
    #[serde(rename = "e")]
    Excited,
}

impl AtomLevel {
    fn block(self) -> usize {
        match self {
            AtomLevel::Ground => 0,
            AtomLevel::Excited => 1,
        }
    }

    fn from_block(block: usize) -> Option<Self> {
        match block {
            0 => Some(AtomLevel::Ground),
            1 => Some(AtomLevel::Excited),
            _ => None,
        }
    }
}

impl fmt::Display for AtomLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AtomLevel::Ground => "g",
            AtomLevel::Excited => "e",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Lower,
    Raise,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtomOp {
    SigmaPlus,
    SigmaMinus,
    SigmaZ,
}

/// Shape of the truncated space: Fock cutoff `N` per mode, two atomic levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceConfig {
    cutoff: usize,
}

impl SpaceConfig {
    pub fn new(cutoff: usize) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::Parameter("Fock cutoff must be at least 1".into()));
        }
        Ok(Self { cutoff })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Number of Fock levels per mode, `N + 1`.
    pub fn levels(&self) -> usize {
        self.cutoff + 1
    }

    pub fn motional_dim(&self) -> usize {
        self.levels() * self.levels()
    }

    pub fn atom_dim(&self) -> usize {
        2
    }

    pub fn dim(&self) -> usize {
        2 * self.motional_dim()
    }

    pub fn flat_index(&self, s: AtomLevel, n: usize, m: usize) -> Result<usize> {
        if n > self.cutoff || m > self.cutoff {
            return Err(Error::IndexBounds(format!(
                "Fock occupation ({n}, {m}) exceeds cutoff {}",
                self.cutoff
            )));
        }
        Ok(self.index(s, n, m))
    }

    pub fn unflat_index(&self, index: usize) -> Result<(AtomLevel, usize, usize)> {
        if index >= self.dim() {
            return Err(Error::IndexBounds(format!(
                "flat index {index} outside dimension {}",
                self.dim()
            )));
        }
        Ok(self.unindex(index))
    }

    #[inline]
    pub(crate) fn index(&self, s: AtomLevel, n: usize, m: usize) -> usize {
        let l = self.levels();
        s.block() * l * l + n * l + m
    }

    #[inline]
    pub(crate) fn unindex(&self, index: usize) -> (AtomLevel, usize, usize) {
        let l = self.levels();
        let block = index / (l * l);
        let rest = index % (l * l);
        // block < 2 whenever index < dim
        (AtomLevel::from_block(block).unwrap(), rest / l, rest % l)
    }

    /// Iterate `(index, s, n, m)` over the whole basis in flat order.
    pub fn basis(&self) -> impl Iterator<Item = (usize, AtomLevel, usize, usize)> + '_ {
        (0..self.dim()).map(move |i| {
            let (s, n, m) = self.unindex(i);
            (i, s, n, m)
        })
    }

    /// Whether the basis element touches the truncation edge in either mode.
    pub fn on_boundary(&self, index: usize) -> bool {
        let (_, n, m) = self.unindex(index);
        n == self.cutoff || m == self.cutoff
    }

    pub(crate) fn check_same(&self, other: &SpaceConfig) -> Result<()> {
        if self != other {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Compressed sparse rows
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Csr {
    pub(crate) dim: usize,
    pub(crate) indptr: Vec<usize>,
    pub(crate) indices: Vec<usize>,
    pub(crate) values: Vec<C64>,
}

impl Csr {
    /// Assemble from coordinates. Duplicates are summed in insertion order and
    /// exact zeros are dropped. Indices must already be `< dim`.
    pub(crate) fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Csr {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; dim + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if let (Some(&lr), Some(&lc)) = (rows.last(), indices.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            indices.push(c);
            values.push(v);
        }
        let mut out_idx = Vec::with_capacity(indices.len());
        let mut out_val = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.into_iter().zip(indices).zip(values) {
            if v != ZERO {
                indptr[r + 1] += 1;
                out_idx.push(c);
                out_val.push(v);
            }
        }
        for i in 0..dim {
            indptr[i + 1] += indptr[i];
        }
        Csr {
            dim,
            indptr,
            indices: out_idx,
            values: out_val,
        }
    }

    pub(crate) fn zero(dim: usize) -> Csr {
        Csr {
            dim,
            indptr: vec![0; dim + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub(crate) fn identity(dim: usize) -> Csr {
        Csr {
            dim,
            indptr: (0..=dim).collect(),
            indices: (0..dim).collect(),
            values: vec![ONE; dim],
        }
    }

    pub(crate) fn diagonal(values: &[C64]) -> Csr {
        let t = values.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Csr::from_triplets(values.len(), t)
    }

    #[inline]
    pub(crate) fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.indptr[i]..self.indptr[i + 1];
        self.indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub(crate) fn nnz(&self) -> usize {
        self.values.len()
    }

    pub(crate) fn get(&self, i: usize, j: usize) -> C64 {
        let range = self.indptr[i]..self.indptr[i + 1];
        match self.indices[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => ZERO,
        }
    }

    pub(crate) fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub(crate) fn adjoint(&self) -> Csr {
        let t = self.triplets().map(|(i, j, v)| (j, i, v.conj())).collect();
        Csr::from_triplets(self.dim, t)
    }

    pub(crate) fn scale(&self, s: C64) -> Csr {
        let t = self.triplets().map(|(i, j, v)| (i, j, v * s)).collect();
        Csr::from_triplets(self.dim, t)
    }

    /// `self + s·other`
    pub(crate) fn add_scaled(&self, other: &Csr, s: C64) -> Csr {
        let t = self
            .triplets()
            .chain(other.triplets().map(|(i, j, v)| (i, j, v * s)))
            .collect();
        Csr::from_triplets(self.dim, t)
    }

    /// Matrix product `self · rhs`.
    pub(crate) fn matmul(&self, rhs: &Csr) -> Csr {
        let dim = self.dim;
        let mut acc = vec![ZERO; dim];
        let mut touched = vec![false; dim];
        let mut cols = Vec::new();
        let mut triplets = Vec::new();
        for i in 0..dim {
            for (k, a) in self.row(i) {
                for (j, b) in rhs.row(k) {
                    if !touched[j] {
                        touched[j] = true;
                        cols.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            cols.sort_unstable();
            for &j in &cols {
                triplets.push((i, j, acc[j]));
                acc[j] = ZERO;
                touched[j] = false;
            }
            cols.clear();
        }
        Csr::from_triplets(dim, triplets)
    }

    pub(crate) fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `y = A x`
    #[inline]
    pub(crate) fn matvec(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = ZERO;
            for (j, v) in self.row(i) {
                s += v * x[j];
            }
            *yi = s;
        }
    }

    /// `out = A ρ` for a dense row-major `dim × dim` matrix `ρ`.
    pub(crate) fn mul_dense(&self, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        for i in 0..d {
            let out_row = &mut out[i * d..(i + 1) * d];
            out_row.fill(ZERO);
            for (k, a) in self.row(i) {
                let rho_row = &rho[k * d..(k + 1) * d];
                for (o, r) in out_row.iter_mut().zip(rho_row) {
                    *o += a * r;
                }
            }
        }
    }

    /// `⟨ψ|A|ψ⟩` without normalization.
    pub(crate) fn expect_pure(&self, psi: &[C64]) -> C64 {
        let mut s = ZERO;
        for (i, p) in psi.iter().enumerate() {
            if *p == ZERO {
                continue;
            }
            let mut row = ZERO;
            for (j, v) in self.row(i) {
                row += v * psi[j];
            }
            s += p.conj() * row;
        }
        s
    }

    /// `Tr(A ρ)` for a dense row-major `ρ`.
    pub(crate) fn expect_mixed(&self, rho: &[C64]) -> C64 {
        let d = self.dim;
        let mut s = ZERO;
        for i in 0..d {
            for (k, a) in self.row(i) {
                s += a * rho[k * d + i];
            }
        }
        s
    }

    pub(crate) fn restrict(&self, sub: &Subspace) -> Csr {
        let mut t = Vec::new();
        for (ri, &full_i) in sub.indices.iter().enumerate() {
            for (j, v) in self.row(full_i) {
                if let Some(rj) = sub.position(j) {
                    t.push((ri, rj, v));
                }
            }
        }
        Csr::from_triplets(sub.len(), t)
    }
}

// ---------------------------------------------------------------------------
// Subspaces
// ---------------------------------------------------------------------------

/// An ordered subset of basis indices that is closed under a set of
/// operators. Amplitude supported on the subset never reaches outside it, so
/// dynamics can be carried out on the restricted block without approximation.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    full_dim: usize,
    indices: Vec<usize>,
    lookup: Vec<usize>,
}

impl Subspace {
    pub fn full(dim: usize) -> Self {
        Self {
            full_dim: dim,
            indices: (0..dim).collect(),
            lookup: (0..dim).collect(),
        }
    }

    /// Smallest index set containing `seeds` that is closed under every
    /// operator in `ops` and under their adjoints (structural closure over the
    /// nonzero pattern).
    pub(crate) fn closure(full_dim: usize, seeds: impl IntoIterator<Item = usize>, ops: &[&Csr]) -> Self {
        let adjoints: Vec<Csr> = ops.iter().map(|op| op.adjoint()).collect();
        let mut inside = vec![false; full_dim];
        let mut stack: Vec<usize> = Vec::new();
        for s in seeds {
            if !inside[s] {
                inside[s] = true;
                stack.push(s);
            }
        }
        while let Some(j) = stack.pop() {
            // rows i with op[i, j] != 0 are the rows of op† at j, and vice versa
            for m in ops.iter().copied().chain(adjoints.iter()) {
                for (i, _) in m.row(j) {
                    if !inside[i] {
                        inside[i] = true;
                        stack.push(i);
                    }
                }
            }
        }
        let indices: Vec<usize> = (0..full_dim).filter(|&i| inside[i]).collect();
        let mut lookup = vec![usize::MAX; full_dim];
        for (k, &i) in indices.iter().enumerate() {
            lookup[i] = k;
        }
        Self {
            full_dim,
            indices,
            lookup,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    #[inline]
    pub fn position(&self, full_index: usize) -> Option<usize> {
        match self.lookup[full_index] {
            usize::MAX => None,
            k => Some(k),
        }
    }

    pub(crate) fn gather(&self, full: &[C64]) -> Vec<C64> {
        self.indices.iter().map(|&i| full[i]).collect()
    }

    pub(crate) fn scatter(&self, reduced: &[C64]) -> Vec<C64> {
        let mut full = vec![ZERO; self.full_dim];
        for (&i, &v) in self.indices.iter().zip(reduced) {
            full[i] = v;
        }
        full
    }

    pub(crate) fn gather_matrix(&self, full: &[C64]) -> Vec<C64> {
        let d = self.len();
        let n = self.full_dim;
        let mut out = vec![ZERO; d * d];
        for (a, &i) in self.indices.iter().enumerate() {
            for (b, &j) in self.indices.iter().enumerate() {
                out[a * d + b] = full[i * n + j];
            }
        }
        out
    }

    pub(crate) fn scatter_matrix(&self, reduced: &[C64]) -> Vec<C64> {
        let d = self.len();
        let n = self.full_dim;
        let mut out = vec![ZERO; n * n];
        for (a, &i) in self.indices.iter().enumerate() {
            for (b, &j) in self.indices.iter().enumerate() {
                out[i * n + j] = reduced[a * d + b];
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Sparse operators
// ---------------------------------------------------------------------------

/// Immutable sparse linear map on the flat basis of a [`SpaceConfig`].
#[derive(Clone, Debug)]
pub struct SparseOperator {
    space: SpaceConfig,
    csr: Csr,
    /// Squared norm dropped at the cutoff for each basis input, if any.
    overflow: Option<Vec<f64>>,
    hermitian: bool,
}

impl SparseOperator {
    pub(crate) fn from_csr(space: SpaceConfig, csr: Csr) -> Self {
        debug_assert_eq!(csr.dim, space.dim());
        Self {
            space,
            csr,
            overflow: None,
            hermitian: false,
        }
    }

    /// Assemble from `(row, col, value)` entries; duplicate coordinates are
    /// summed.
    pub fn from_triplets(
        space: SpaceConfig,
        entries: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Result<Self> {
        let dim = space.dim();
        let mut t = Vec::new();
        for (r, c, v) in entries {
            if r >= dim || c >= dim {
                return Err(Error::IndexBounds(format!(
                    "entry ({r}, {c}) outside dimension {dim}"
                )));
            }
            t.push((r, c, v));
        }
        Ok(Self::from_csr(space, Csr::from_triplets(dim, t)))
    }

    pub fn identity(space: SpaceConfig) -> Self {
        let mut op = Self::from_csr(space, Csr::identity(space.dim()));
        op.hermitian = true;
        op
    }

    pub fn zero(space: SpaceConfig) -> Self {
        let mut op = Self::from_csr(space, Csr::zero(space.dim()));
        op.hermitian = true;
        op
    }

    pub fn space(&self) -> SpaceConfig {
        self.space
    }

    pub fn nnz(&self) -> usize {
        self.csr.nnz()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.csr.get(row, col)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.csr.triplets()
    }

    pub fn max_abs(&self) -> f64 {
        self.csr.max_abs()
    }

    /// Squared norm this operator discards at the cutoff for basis input `col`.
    pub fn overflow(&self, col: usize) -> f64 {
        self.overflow.as_ref().map_or(0.0, |o| o[col])
    }

    pub(crate) fn overflow_weights(&self) -> Option<&[f64]> {
        self.overflow.as_deref()
    }

    pub(crate) fn set_overflow(&mut self, overflow: Option<Vec<f64>>) {
        self.overflow = overflow;
    }

    pub(crate) fn csr(&self) -> &Csr {
        &self.csr
    }

    /// Whether the operator was constructed as Hermitian.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub(crate) fn mark_hermitian(mut self) -> Self {
        self.hermitian = true;
        self
    }

    /// `max |A_ij − conj(A_ji)|` over the stored pattern and its transpose.
    pub fn hermitian_defect(&self) -> f64 {
        let adj = self.csr.adjoint();
        self.csr.add_scaled(&adj, -ONE).max_abs()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space,
            csr: self.csr.adjoint(),
            overflow: None,
            hermitian: self.hermitian,
        }
    }

    /// Product `self · rhs` (apply `rhs` first). Overflow weights carry over
    /// to first order: what `rhs` sends into a column of `self` that drops
    /// weight, plus what `rhs` itself drops.
    pub fn compose(&self, rhs: &SparseOperator) -> Result<Self> {
        self.space.check_same(&rhs.space)?;
        let csr = self.csr.matmul(&rhs.csr);
        let overflow = match (&self.overflow, &rhs.overflow) {
            (None, None) => None,
            (a, b) => {
                let mut o = b.clone().unwrap_or_else(|| vec![0.0; self.space.dim()]);
                if let Some(a) = a {
                    for (i, j, v) in rhs.csr.triplets() {
                        o[j] += v.norm_sqr() * a[i];
                    }
                }
                Some(o)
            }
        };
        Ok(Self {
            space: self.space,
            csr,
            overflow,
            hermitian: false,
        })
    }

    /// `self + s·other`
    pub fn add_scaled(&self, other: &SparseOperator, s: C64) -> Result<Self> {
        self.space.check_same(&other.space)?;
        let overflow = match (&self.overflow, &other.overflow) {
            (None, None) => None,
            (a, b) => {
                let dim = self.space.dim();
                let a = a.clone().unwrap_or_else(|| vec![0.0; dim]);
                let w = s.norm_sqr();
                Some(match b {
                    Some(b) => a.iter().zip(b).map(|(x, y)| x + w * y).collect(),
                    None => a,
                })
            }
        };
        Ok(Self {
            space: self.space,
            csr: self.csr.add_scaled(&other.csr, s),
            overflow,
            hermitian: false,
        })
    }

    pub fn add(&self, other: &SparseOperator) -> Result<Self> {
        self.add_scaled(other, ONE)
    }

    pub fn sub(&self, other: &SparseOperator) -> Result<Self> {
        self.add_scaled(other, -ONE)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            space: self.space,
            csr: self.csr.scale(s),
            overflow: self
                .overflow
                .as_ref()
                .map(|o| o.iter().map(|x| x * s.norm_sqr()).collect()),
            hermitian: self.hermitian && s.im == 0.0,
        }
    }

    /// `[self, other] = self·other − other·self`
    pub fn commutator(&self, other: &SparseOperator) -> Result<Self> {
        let ab = self.compose(other)?;
        let ba = other.compose(self)?;
        let mut c = ab.sub(&ba)?;
        c.overflow = None;
        Ok(c)
    }

    pub(crate) fn restrict(&self, sub: &Subspace) -> Csr {
        self.csr.restrict(sub)
    }
}

// ---------------------------------------------------------------------------
// States and density operators
// ---------------------------------------------------------------------------

/// Pure state over the flat basis, with the probability recorded as lost at
/// the truncation boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: SpaceConfig,
    amplitudes: Vec<C64>,
    leak: f64,
}

impl StateVector {
    pub fn zeros(space: SpaceConfig) -> Self {
        Self {
            space,
            amplitudes: vec![ZERO; space.dim()],
            leak: 0.0,
        }
    }

    pub fn from_amplitudes(space: SpaceConfig, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::Dimension {
                expected: space.dim(),
                found: amplitudes.len(),
            });
        }
        Ok(Self {
            space,
            amplitudes,
            leak: 0.0,
        })
    }

    pub fn space(&self) -> SpaceConfig {
        self.space
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn amplitude(&self, s: AtomLevel, n: usize, m: usize) -> Result<C64> {
        Ok(self.amplitudes[self.space.flat_index(s, n, m)?])
    }

    pub fn leak(&self) -> f64 {
        self.leak
    }

    pub(crate) fn set_leak(&mut self, leak: f64) {
        debug_assert!(leak >= self.leak);
        self.leak = leak;
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Domain(format!("cannot normalize state of norm {n}")));
        }
        let inv = 1.0 / n;
        self.amplitudes.iter_mut().for_each(|a| *a *= inv);
        Ok(())
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.space.check_same(&other.space)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Copy into a space with a cutoff at least as large.
    pub fn embed(&self, target: SpaceConfig) -> Result<Self> {
        if target.cutoff() < self.space.cutoff() {
            return Err(Error::Parameter(format!(
                "cannot embed cutoff {} into smaller cutoff {}",
                self.space.cutoff(),
                target.cutoff()
            )));
        }
        let mut out = StateVector::zeros(target);
        for (i, s, n, m) in self.space.basis() {
            out.amplitudes[target.index(s, n, m)] = self.amplitudes[i];
        }
        out.leak = self.leak;
        Ok(out)
    }
}

/// Dense density matrix over the flat basis (row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    space: SpaceConfig,
    data: Vec<C64>,
}

impl DensityOperator {
    pub fn zeros(space: SpaceConfig) -> Self {
        let d = space.dim();
        Self {
            space,
            data: vec![ZERO; d * d],
        }
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let d = psi.space.dim();
        let mut data = vec![ZERO; d * d];
        for (i, a) in psi.amplitudes.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            for (j, b) in psi.amplitudes.iter().enumerate() {
                data[i * d + j] = a * b.conj();
            }
        }
        Self {
            space: psi.space,
            data,
        }
    }

    pub fn from_matrix(space: SpaceConfig, data: Vec<C64>) -> Result<Self> {
        let d = space.dim();
        if data.len() != d * d {
            return Err(Error::Dimension {
                expected: d * d,
                found: data.len(),
            });
        }
        Ok(Self { space, data })
    }

    pub fn maximally_mixed(space: SpaceConfig) -> Self {
        let d = space.dim();
        let mut rho = Self::zeros(space);
        let w = C64::new(1.0 / d as f64, 0.0);
        for i in 0..d {
            rho.data[i * d + i] = w;
        }
        rho
    }

    pub fn space(&self) -> SpaceConfig {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim() + col]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn trace(&self) -> C64 {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i]).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i].re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |ρ_ij − conj(ρ_ji)|`
    pub fn hermitian_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.data[i * d + j] - self.data[j * d + i].conj()).norm());
            }
        }
        worst
    }

    /// Replace `ρ` by `(ρ + ρ†)/2`.
    pub fn symmetrize(&mut self) {
        let d = self.dim();
        hermitize(&mut self.data, d);
    }

    /// `self += w·other`
    pub fn add_scaled(&mut self, other: &DensityOperator, w: f64) -> Result<()> {
        self.space.check_same(&other.space)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * w;
        }
        Ok(())
    }

    /// Smallest eigenvalue of the Hermitian part.
    ///
    /// Computed on the real symmetric embedding `[[A, −B], [B, A]]` of
    /// `A + iB`, which has the same spectrum with doubled multiplicities,
    /// restricted to the basis states with a nonzero row.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim();
        let herm = |i: usize, j: usize| (self.data[i * d + j] + self.data[j * d + i].conj()) * 0.5;
        let support: Vec<usize> = (0..d)
            .filter(|&i| (0..d).any(|j| herm(i, j) != C64::new(0.0, 0.0)))
            .collect();
        let k = support.len();
        let padded = if k < d { 0.0 } else { f64::INFINITY };
        if k == 0 {
            return padded;
        }
        let m = nalgebra::DMatrix::from_fn(2 * k, 2 * k, |r, c| {
            let z = herm(support[r % k], support[c % k]);
            match (r < k, c < k) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        m.symmetric_eigenvalues().iter().copied().fold(padded, f64::min)
    }
}

/// Common read-only view of pure and mixed states.
pub trait QuantumState {
    fn space(&self) -> SpaceConfig;

    /// `⟨ψ|A|ψ⟩` or `Tr(A ρ)`.
    fn expect(&self, op: &SparseOperator) -> Result<C64>;

    /// Diagonal of the density matrix in the flat basis.
    fn populations(&self) -> Vec<f64>;
}

impl QuantumState for StateVector {
    fn space(&self) -> SpaceConfig {
        self.space
    }

    fn expect(&self, op: &SparseOperator) -> Result<C64> {
        self.space.check_same(&op.space)?;
        Ok(op.csr.expect_pure(&self.amplitudes))
    }

    fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

impl QuantumState for DensityOperator {
    fn space(&self) -> SpaceConfig {
        self.space
    }

    fn expect(&self, op: &SparseOperator) -> Result<C64> {
        self.space.check_same(&op.space)?;
        Ok(op.csr.expect_mixed(&self.data))
    }

    fn populations(&self) -> Vec<f64> {
        DensityOperator::populations(self)
    }
}

pub(crate) fn hermitize(data: &mut [C64], d: usize) {
    for i in 0..d {
        data[i * d + i].im = 0.0;
        for j in (i + 1)..d {
            let avg = (data[i * d + j] + data[j * d + i].conj()) * 0.5;
            data[i * d + j] = avg;
            data[j * d + i] = avg.conj();
        }
    }
}

// ---------------------------------------------------------------------------
// Operator constructors
// ---------------------------------------------------------------------------

/// Single-mode ladder operator acting as identity on the atom and the other
/// mode.
pub fn ladder_op(space: SpaceConfig, mode: Mode, direction: Ladder) -> SparseOperator {
    let cutoff = space.cutoff();
    let mut triplets = Vec::with_capacity(space.dim());
    let mut overflow = vec![0.0; space.dim()];
    for (col, s, n, m) in space.basis() {
        let occ = match mode {
            Mode::A => n,
            Mode::B => m,
        };
        match direction {
            Ladder::Lower => {
                if occ == 0 {
                    continue;
                }
                let row = match mode {
                    Mode::A => space.index(s, n - 1, m),
                    Mode::B => space.index(s, n, m - 1),
                };
                triplets.push((row, col, C64::new((occ as f64).sqrt(), 0.0)));
            }
            Ladder::Raise => {
                if occ == cutoff {
                    overflow[col] = (occ + 1) as f64;
                    continue;
                }
                let row = match mode {
                    Mode::A => space.index(s, n + 1, m),
                    Mode::B => space.index(s, n, m + 1),
                };
                triplets.push((row, col, C64::new(((occ + 1) as f64).sqrt(), 0.0)));
            }
        }
    }
    let mut op = SparseOperator::from_csr(space, Csr::from_triplets(space.dim(), triplets));
    if direction == Ladder::Raise {
        op.overflow = Some(overflow);
    }
    op
}

/// Two-level operators, identity on the motional factor. `σ₋` has its single
/// entry in the `g` row and `e` column, so `σ₋|e⟩ = |g⟩`.
pub fn atom_op(space: SpaceConfig, which: AtomOp) -> SparseOperator {
    let l = space.levels();
    let mut triplets = Vec::with_capacity(space.dim());
    for n in 0..l {
        for m in 0..l {
            let g = space.index(AtomLevel::Ground, n, m);
            let e = space.index(AtomLevel::Excited, n, m);
            match which {
                AtomOp::SigmaMinus => triplets.push((g, e, ONE)),
                AtomOp::SigmaPlus => triplets.push((e, g, ONE)),
                AtomOp::SigmaZ => {
                    triplets.push((e, e, ONE));
                    triplets.push((g, g, -ONE));
                }
            }
        }
    }
    let op = SparseOperator::from_csr(space, Csr::from_triplets(space.dim(), triplets));
    if which == AtomOp::SigmaZ {
        op.mark_hermitian()
    } else {
        op
    }
}

/// `â b̂`, mapping `|n, m⟩ → √(n m) |n−1, m−1⟩`.
pub fn pair_annihilation(space: SpaceConfig) -> SparseOperator {
    let a = ladder_op(space, Mode::A, Ladder::Lower);
    let b = ladder_op(space, Mode::B, Ladder::Lower);
    a.compose(&b).expect("same space")
}

/// Number difference `Q̂ = â†â − b̂†b̂`, diagonal with value `n − m`.
pub fn charge_op(space: SpaceConfig) -> SparseOperator {
    let diag: Vec<C64> = space
        .basis()
        .map(|(_, _, n, m)| C64::new(n as f64 - m as f64, 0.0))
        .collect();
    SparseOperator::from_csr(space, Csr::diagonal(&diag)).mark_hermitian()
}

/// Sparse matrix–vector product. The result inherits the input's leak plus
/// whatever the operator discards at the cutoff.
pub fn apply_to_state(op: &SparseOperator, psi: &StateVector) -> Result<StateVector> {
    op.space.check_same(&psi.space)?;
    let mut out = StateVector::zeros(op.space);
    op.csr.matvec(&psi.amplitudes, &mut out.amplitudes);
    let dropped: f64 = match &op.overflow {
        Some(w) => w
            .iter()
            .zip(&psi.amplitudes)
            .map(|(w, a)| w * a.norm_sqr())
            .sum(),
        None => 0.0,
    };
    out.leak = psi.leak + dropped;
    Ok(out)
}

/// `left · ρ · right`, unnormalized.
pub fn apply_to_density(
    left: &SparseOperator,
    rho: &DensityOperator,
    right: &SparseOperator,
) -> Result<DensityOperator> {
    left.space.check_same(&rho.space)?;
    right.space.check_same(&rho.space)?;
    let d = rho.dim();
    let mut x = vec![ZERO; d * d];
    left.csr.mul_dense(&rho.data, &mut x);
    // X·R = (R†·X†)†
    let xt = conj_transpose(&x, d);
    let mut y = vec![ZERO; d * d];
    right.csr.adjoint().mul_dense(&xt, &mut y);
    Ok(DensityOperator {
        space: rho.space,
        data: conj_transpose(&y, d),
    })
}

pub(crate) fn conj_transpose(m: &[C64], d: usize) -> Vec<C64> {
    let mut out = vec![ZERO; d * d];
    for i in 0..d {
        for j in 0..d {
            out[j * d + i] = m[i * d + j].conj();
        }
    }
    out
}
