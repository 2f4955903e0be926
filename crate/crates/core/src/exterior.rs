//! Multi-indices of the exterior power `Λ^p V*` and the derivation extension
//! of a self-adjoint endomorphism of `V` to `Λ^p V*`.
//!
//! Multi-indices are 1-based, strictly increasing and enumerated in
//! lexicographic order. The basis covector attached to `a = {i_1 < … < i_p}`
//! is `θ_{i_1} ∧ … ∧ θ_{i_p}`; every `POperator` is laid out in that basis.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;

/// Largest supported tangent dimension. `C(14, 7) = 3432`, which keeps dense
/// operators below ~100 MB.
pub const MAX_DIM: usize = 14;

/// Binomial coefficient `C(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

fn check_degree(n: usize, p: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::domain(format!(
            "dimension n = {n} outside 1..={MAX_DIM}"
        )));
    }
    if p < 1 || p > n {
        return Err(Error::domain(format!("degree p = {p} outside 1..={n}")));
    }
    Ok(())
}

/// A strictly increasing list of `p` indices drawn from `{1, …, n}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MultiIndex {
    n: usize,
    entries: Vec<usize>,
}

impl MultiIndex {
    pub fn new(n: usize, entries: Vec<usize>) -> Result<Self> {
        check_degree(n, entries.len())?;
        if entries.iter().any(|&i| i < 1 || i > n) {
            return Err(Error::domain(format!(
                "multi-index {entries:?} has entries outside 1..={n}"
            )));
        }
        if entries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain(format!(
                "multi-index {entries:?} is not strictly increasing"
            )));
        }
        Ok(MultiIndex { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn contains(&self, i: usize) -> bool {
        self.entries.binary_search(&i).is_ok()
    }

    /// Position in the lexicographic enumeration of `I_p`.
    pub fn rank(&self) -> usize {
        rank_of(self.n, &self.entries)
    }

    /// The sorted complement `⋆a = {1,…,n} \ a`, a multi-index of degree `n − p`.
    pub fn complement(&self) -> Result<MultiIndex> {
        if self.p() == self.n {
            return Err(Error::domain(
                "complement of the full index set is empty",
            ));
        }
        let entries = (1..=self.n).filter(|&i| !self.contains(i)).collect();
        Ok(MultiIndex {
            n: self.n,
            entries,
        })
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (pos, i) in self.entries.iter().enumerate() {
            if pos > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

// Lexicographic rank of a sorted 1-based combination.
fn rank_of(n: usize, entries: &[usize]) -> usize {
    let p = entries.len();
    let mut rank = 0;
    let mut prev = 0;
    for (j, &e) in entries.iter().enumerate() {
        for v in (prev + 1)..e {
            rank += binomial(n - v, p - j - 1);
        }
        prev = e;
    }
    rank
}

/// All `C(n, p)` multi-indices in lexicographic order.
pub fn enumerate_multiindices(n: usize, p: usize) -> Result<Vec<MultiIndex>> {
    check_degree(n, p)?;
    let mut out = Vec::with_capacity(binomial(n, p));
    let mut current: Vec<usize> = (1..=p).collect();
    loop {
        out.push(MultiIndex {
            n,
            entries: current.clone(),
        });
        // advance to the next combination
        let mut pos = p;
        while pos > 0 && current[pos - 1] == n - p + pos {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        current[pos - 1] += 1;
        for j in pos..p {
            current[j] = current[j - 1] + 1;
        }
    }
    Ok(out)
}

/// `K_a = Σ_{i∈a} k_i` for a spectrum `(k_1, …, k_n)`.
pub fn algebraic_curvature(a: &MultiIndex, spectrum: &[f64]) -> Result<f64> {
    if spectrum.len() != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            got: spectrum.len(),
        });
    }
    Ok(a.entries().iter().map(|&i| spectrum[i - 1]).sum())
}

/// A self-adjoint endomorphism of `V`, stored as a symmetric matrix in a fixed
/// orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Endomorphism {
    matrix: DMatrix<f64>,
}

impl Endomorphism {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        linalg::check_symmetric(&matrix)?;
        if matrix.nrows() == 0 {
            return Err(Error::domain("endomorphism of a zero-dimensional space"));
        }
        Ok(Endomorphism { matrix })
    }

    /// Builds from an almost-symmetric matrix, averaging it with its transpose.
    /// Meant for matrices produced by floating point arithmetic on symmetric
    /// inputs (conjugations, linear combinations).
    pub fn symmetrized(mut matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        linalg::symmetrize(&mut matrix);
        Self::new(matrix)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(n, n, &flat))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn identity(n: usize) -> Self {
        Endomorphism {
            matrix: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Endomorphism {
            matrix: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// `H_A = tr A / n`.
    pub fn mean(&self) -> f64 {
        self.trace() / self.dim() as f64
    }

    /// `Å = A − H_A · id`.
    pub fn traceless(&self) -> Endomorphism {
        let h = self.mean();
        let mut m = self.matrix.clone();
        for i in 0..self.dim() {
            m[(i, i)] -= h;
        }
        Endomorphism { matrix: m }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn scaled(&self, t: f64) -> Endomorphism {
        Endomorphism {
            matrix: &self.matrix * t,
        }
    }

    pub fn negated(&self) -> Endomorphism {
        self.scaled(-1.0)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::symmetric_eigenvalues(&self.matrix)
    }
}

/// A self-adjoint endomorphism of `Λ^p V*` in the canonical multi-index basis.
#[derive(Debug, Clone, PartialEq)]
pub struct POperator {
    n: usize,
    p: usize,
    matrix: DMatrix<f64>,
}

impl POperator {
    pub fn new(n: usize, p: usize, matrix: DMatrix<f64>) -> Result<Self> {
        check_degree(n, p)?;
        let dim = binomial(n, p);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: matrix.nrows(),
            });
        }
        linalg::check_symmetric(&matrix)?;
        Ok(POperator { n, p, matrix })
    }

    pub(crate) fn from_parts_unchecked(n: usize, p: usize, matrix: DMatrix<f64>) -> Self {
        debug_assert_eq!(matrix.nrows(), binomial(n, p));
        POperator { n, p, matrix }
    }

    pub fn identity(n: usize, p: usize) -> Result<Self> {
        check_degree(n, p)?;
        let dim = binomial(n, p);
        Ok(POperator {
            n,
            p,
            matrix: DMatrix::identity(dim, dim),
        })
    }

    pub fn zeros(n: usize, p: usize) -> Result<Self> {
        check_degree(n, p)?;
        let dim = binomial(n, p);
        Ok(POperator {
            n,
            p,
            matrix: DMatrix::zeros(dim, dim),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Full spectrum, ascending.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        linalg::symmetric_eigenvalues(&self.matrix)
    }
}

/// Matrix of `A^[p]`, where `A^[p]ω(v_1,…,v_p) = Σ_i ω(v_1,…,A v_i,…,v_p)`.
///
/// Entry `(a, b)` is non-zero only when `a` and `b` differ in at most one
/// index; the sign is that of the shuffle moving the replaced index into
/// increasing position.
pub fn extend_operator(a: &Endomorphism, p: usize) -> Result<POperator> {
    let n = a.dim();
    check_degree(n, p)?;
    let basis = enumerate_multiindices(n, p)?;
    let m = a.matrix();
    let dim = basis.len();
    let mut out = DMatrix::zeros(dim, dim);
    let mut scratch = Vec::with_capacity(p);
    for (col, b) in basis.iter().enumerate() {
        for &j in b.entries() {
            // θ_j ↦ Σ_i A_{j i} θ_i in slot j
            for i in 1..=n {
                let coeff = m[(j - 1, i - 1)];
                if coeff == 0.0 {
                    continue;
                }
                if i == j {
                    out[(col, col)] += coeff;
                    continue;
                }
                if b.contains(i) {
                    continue;
                }
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                let between = b.entries().iter().filter(|&&e| e > lo && e < hi).count();
                let sign = if between % 2 == 0 { 1.0 } else { -1.0 };
                scratch.clear();
                scratch.extend(b.entries().iter().copied().filter(|&e| e != j));
                let at = scratch.partition_point(|&e| e < i);
                scratch.insert(at, i);
                let row = rank_of(n, &scratch);
                out[(row, col)] += sign * coeff;
            }
        }
    }
    Ok(POperator::from_parts_unchecked(n, p, out))
}
