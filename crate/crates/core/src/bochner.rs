//! The operators `T_A^[p]`, the extrinsic Bochner operator `B^[p](β)` and the
//! space-form Bochner operator `p(n−p)c·id + B^[p]_ext`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{
    algebraic_curvature, binomial, enumerate_multiindices, extend_operator, Endomorphism,
    POperator, MAX_DIM,
};

/// Tolerance on `‖u‖ = 1` for normal directions.
pub const UNIT_TOL: f64 = 1e-10;

/// A second fundamental form at a point: one symmetric shape operator per
/// vector of an orthonormal basis `ξ_1, …, ξ_k` of the normal space.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondFundamentalForm {
    n: usize,
    operators: Vec<Endomorphism>,
}

impl SecondFundamentalForm {
    pub fn new(operators: Vec<Endomorphism>) -> Result<Self> {
        let Some(first) = operators.first() else {
            return Err(Error::domain("codimension k must be at least 1"));
        };
        let n = first.dim();
        if !(3..=MAX_DIM).contains(&n) {
            return Err(Error::domain(format!(
                "tangent dimension n = {n} outside 3..={MAX_DIM}"
            )));
        }
        if let Some(bad) = operators.iter().find(|a| a.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.dim(),
            });
        }
        Ok(SecondFundamentalForm { n, operators })
    }

    /// Hypersurface data (`k = 1`).
    pub fn hypersurface(a: Endomorphism) -> Result<Self> {
        Self::new(vec![a])
    }

    pub fn zero(n: usize, k: usize) -> Result<Self> {
        Self::new(vec![Endomorphism::zeros(n); k])
    }

    /// Parses `k` row-major `n×n` matrices.
    pub fn from_nested(ops: &[Vec<Vec<f64>>]) -> Result<Self> {
        let operators = ops
            .iter()
            .map(|rows| Endomorphism::from_rows(rows))
            .collect::<Result<Vec<_>>>()?;
        Self::new(operators)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.operators.len()
    }

    pub fn operators(&self) -> &[Endomorphism] {
        &self.operators
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        self.operators.iter().map(Endomorphism::rows).collect()
    }

    /// `‖β‖² = Σ_i ‖A_i‖²`, which is `S` for submanifold data.
    pub fn norm_sq(&self) -> f64 {
        self.operators.iter().map(|a| a.matrix().norm_squared()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, t: f64) -> SecondFundamentalForm {
        SecondFundamentalForm {
            n: self.n,
            operators: self.operators.iter().map(|a| a.scaled(t)).collect(),
        }
    }

    /// Re-expresses β in another orthonormal normal basis: the new operators
    /// are `Σ_j R_ij A_j` for an orthogonal `k×k` matrix `R`.
    pub fn rotate_normal_basis(&self, r: &DMatrix<f64>) -> Result<SecondFundamentalForm> {
        let k = self.k();
        if r.nrows() != k || r.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: r.nrows(),
            });
        }
        let operators = (0..k)
            .map(|i| {
                let mut m = DMatrix::zeros(self.n, self.n);
                for (j, a) in self.operators.iter().enumerate() {
                    m += a.matrix() * r[(i, j)];
                }
                Endomorphism::symmetrized(m)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(operators)
    }
}

/// Mean-curvature data derived from β.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanCurvatureData {
    /// `𝖧_β` in the normal basis.
    pub vector: Vec<f64>,
    /// `H = ‖𝖧_β‖`.
    pub norm: f64,
    /// `‖Φ‖ = ‖β̊‖`.
    pub traceless_norm: f64,
    /// `S = ‖β‖²`.
    pub total_norm_sq: f64,
}

pub fn mean_data(beta: &SecondFundamentalForm) -> MeanCurvatureData {
    let n = beta.n() as f64;
    let vector: Vec<f64> = beta.operators().iter().map(|a| a.trace() / n).collect();
    let norm = vector.iter().map(|h| h * h).sum::<f64>().sqrt();
    let traceless_sq: f64 = beta
        .operators()
        .iter()
        .map(|a| a.traceless().matrix().norm_squared())
        .sum();
    MeanCurvatureData {
        vector,
        norm,
        traceless_norm: traceless_sq.sqrt(),
        total_norm_sq: beta.norm_sq(),
    }
}

/// `β♯(u) = Σ_i u_i A_{ξ_i}` for a unit normal vector `u`.
pub fn sharp(beta: &SecondFundamentalForm, u: &[f64]) -> Result<Endomorphism> {
    if u.len() != beta.k() {
        return Err(Error::DimensionMismatch {
            expected: beta.k(),
            got: u.len(),
        });
    }
    let len = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (len - 1.0).abs() > UNIT_TOL {
        return Err(Error::domain(format!(
            "normal direction must be a unit vector, got length {len}"
        )));
    }
    Ok(sharp_unchecked(beta, u))
}

pub(crate) fn sharp_unchecked(beta: &SecondFundamentalForm, u: &[f64]) -> Endomorphism {
    let n = beta.n();
    let mut m = DMatrix::zeros(n, n);
    for (a, &ui) in beta.operators().iter().zip(u) {
        if ui != 0.0 {
            m += a.matrix() * ui;
        }
    }
    // a linear combination of symmetric matrices is symmetric entrywise
    Endomorphism::new(m).expect("combination of symmetric operators is symmetric")
}

/// `T_A^[p] = (tr A) A^[p] − A^[p] ∘ A^[p]`.
pub fn t_operator(a: &Endomorphism, p: usize) -> Result<POperator> {
    let ext = extend_operator(a, p)?;
    let n = a.dim();
    let m = ext.into_matrix();
    let mut t = &m * a.trace() - &m * &m;
    crate::linalg::symmetrize(&mut t);
    Ok(POperator::from_parts_unchecked(n, p, t))
}

/// Closed-form spectrum of `T_A^[p]`: `K_a · K_{⋆a}` for `a ∈ I_p`, in the
/// enumeration order of `I_p`.
pub fn t_spectrum_closed_form(spectrum: &[f64], p: usize) -> Result<Vec<f64>> {
    let n = spectrum.len();
    if p < 1 || p >= n {
        return Err(Error::domain(format!(
            "closed form needs 1 <= p <= n-1 (n = {n}, p = {p})"
        )));
    }
    enumerate_multiindices(n, p)?
        .iter()
        .map(|a| {
            let ka = algebraic_curvature(a, spectrum)?;
            let kc = algebraic_curvature(&a.complement()?, spectrum)?;
            Ok(ka * kc)
        })
        .collect()
}

fn check_half_degree(n: usize, p: usize) -> Result<()> {
    if p < 1 || 2 * p > n {
        return Err(Error::domain(format!(
            "degree p = {p} must satisfy 1 <= p <= n/2 (n = {n})"
        )));
    }
    Ok(())
}

/// `B^[p]_ext(β) = Σ_i T^[p]_{A_{ξ_i}}`.
pub fn bochner_ext(beta: &SecondFundamentalForm, p: usize) -> Result<POperator> {
    let n = beta.n();
    check_half_degree(n, p)?;
    let dim = binomial(n, p);
    let mut sum = DMatrix::zeros(dim, dim);
    for a in beta.operators() {
        sum += t_operator(a, p)?.into_matrix();
    }
    Ok(POperator::from_parts_unchecked(n, p, sum))
}

/// `p(n−p)c·id + B^[p]_ext(β)`.
///
/// This is the Bochner operator of the submanifold when the ambient space has
/// constant sectional curvature `c`. For an ambient curvature operator merely
/// bounded below by `c` it is a lower model.
pub fn bochner_full(beta: &SecondFundamentalForm, p: usize, c: f64) -> Result<POperator> {
    let ext = bochner_ext(beta, p)?;
    let n = beta.n();
    let shift = (p * (n - p)) as f64 * c;
    let mut m = ext.into_matrix();
    for i in 0..m.nrows() {
        m[(i, i)] += shift;
    }
    Ok(POperator::from_parts_unchecked(n, p, m))
}

/// Smallest eigenvalue of a symmetric operator.
pub fn lowest_eigenvalue(op: &POperator) -> Result<f64> {
    let spec = op.spectrum()?;
    Ok(spec[0])
}

/// `ϱ_p^ext(β)`: lowest eigenvalue of the extrinsic operator.
pub fn rho_ext(beta: &SecondFundamentalForm, p: usize) -> Result<f64> {
    lowest_eigenvalue(&bochner_ext(beta, p)?)
}

/// `ϱ_p^full(β, c) = ϱ_p^ext(β) + p(n−p)c`.
pub fn rho_full(beta: &SecondFundamentalForm, p: usize, c: f64) -> Result<f64> {
    lowest_eigenvalue(&bochner_full(beta, p, c)?)
}

/// Quadratic form `X ↦ ⟨B X, X⟩` of an operator on `Λ^1 = V*`.
pub fn quadratic_form(op: &POperator, x: &[f64]) -> Result<f64> {
    if op.p() != 1 || x.len() != op.n() {
        return Err(Error::domain("quadratic form needs a degree-1 operator"));
    }
    let v = DVector::from_column_slice(x);
    Ok((v.transpose() * op.matrix() * &v)[(0, 0)])
}
