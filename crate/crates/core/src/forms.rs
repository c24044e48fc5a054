//! Quadratic forms, constant Poisson structures and their brackets.
//!
//! A form is stored as the symmetric matrix `A` with `Q_A(z) = z^T A z`, so a
//! cross term `c * x_i * x_j` sits as `c / 2` in both `(i, j)` and `(j, i)`.
//! The bracket of two functions is `{f, g} = (grad f)^T S (grad g)` for a
//! skew, nondegenerate structure matrix `S`; for quadratic forms this gives
//! `Q_C(v) = 4 v^T A S B v` with `C = 2(ASB - BSA)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

fn check_square_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.is_empty() {
        return Err(Error::Empty);
    }
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    for col in 0..m.ncols() {
        for row in 0..m.nrows() {
            if !m[(row, col)].is_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
    }
    Ok(())
}

/// A real symmetric matrix read as the quadratic form `z^T A z`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricForm {
    matrix: DMatrix<f64>,
}

impl SymmetricForm {
    /// Accepts any finite square matrix and replaces it by its symmetric part.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        check_square_finite(&matrix)?;
        let sym = (&matrix + matrix.transpose()) * 0.5;
        Ok(Self { matrix: sym })
    }

    /// Accepts only exactly symmetric input and names the first offending
    /// entry otherwise.
    pub fn from_exact(matrix: DMatrix<f64>) -> Result<Self> {
        check_square_finite(&matrix)?;
        let n = matrix.nrows();
        for row in 0..n {
            for col in row + 1..n {
                if matrix[(row, col)] != matrix[(col, row)] {
                    return Err(Error::NotSymmetric { row, col });
                }
            }
        }
        Ok(Self { matrix })
    }

    pub fn from_row_slice(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: entries.len() });
        }
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        Self { matrix: DMatrix::from_diagonal(&DVector::from_column_slice(entries)) }
    }

    /// Builds the form `sum c * x_i * x_j` from monomials `(i, j, c)`.
    pub fn from_monomials(n: usize, terms: &[(usize, usize, f64)]) -> Result<Self> {
        let mut m = DMatrix::zeros(n, n);
        for &(i, j, c) in terms {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch { expected: n, found: i.max(j) + 1 });
            }
            if i == j {
                m[(i, i)] += c;
            } else {
                m[(i, j)] += c / 2.0;
                m[(j, i)] += c / 2.0;
            }
        }
        Self::from_exact(m)
    }

    pub fn zeros(n: usize) -> Self {
        Self { matrix: DMatrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: DMatrix::identity(n, n) }
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

    pub fn evaluate(&self, v: &DVector<f64>) -> Result<f64> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        Ok(v.dot(&(&self.matrix * v)))
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { matrix: &self.matrix * alpha }
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        same_dim(self, other)?;
        Ok(Self { matrix: &self.matrix * alpha + &other.matrix * beta })
    }

    /// `T^T A T`, the form pulled back along `T`.
    pub fn congruence(&self, t: &DMatrix<f64>) -> Result<Self> {
        if t.nrows() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: t.nrows() });
        }
        Self::new(t.transpose() * &self.matrix * t)
    }

    pub fn rank(&self, rel_tol: f64) -> usize {
        linalg::numerical_rank(&self.matrix, rel_tol)
    }
}

/// `v^T Q v`.
pub fn evaluate(q: &SymmetricForm, v: &DVector<f64>) -> Result<f64> {
    q.evaluate(v)
}

pub(crate) fn same_dim(a: &SymmetricForm, b: &SymmetricForm) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(())
}

/// Constant skew structure matrix `S` defining `{f, g} = (grad f)^T S grad g`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonStructure {
    s: DMatrix<f64>,
}

impl PoissonStructure {
    /// Requires exact skew symmetry, even dimension and
    /// `sigma_min(S) > rank_rel_tol * sigma_max(S)`.
    pub fn new(s: DMatrix<f64>, rank_rel_tol: f64) -> Result<Self> {
        check_skew(&s)?;
        let n = s.nrows();
        if !n.is_multiple_of(2) {
            return Err(Error::OddDimension(n));
        }
        let sv = linalg::singular_values(&s);
        let ratio = sv.last().copied().unwrap_or(0.0) / sv[0].max(f64::MIN_POSITIVE);
        if sv[0] == 0.0 || ratio <= rank_rel_tol {
            return Err(Error::DegenerateStructure { ratio });
        }
        Ok(Self { s })
    }

    /// The canonical structure `[[0, I_d], [-I_d, 0]]` on `R^{2d}`.
    pub fn canonical(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Empty);
        }
        Ok(Self { s: canonical_j(d) })
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    /// Matrix `W = (S^{-1})^T` of the symplectic form `omega(v, w) = v^T W w`
    /// associated with the bracket matrix.
    pub fn symplectic_form(&self) -> DMatrix<f64> {
        self.s
            .clone()
            .try_inverse()
            .expect("structure matrix checked nondegenerate")
            .transpose()
    }
}

/// `[[0, I_d], [-I_d, 0]]`.
pub fn canonical_j(d: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        j[(i, d + i)] = 1.0;
        j[(d + i, i)] = -1.0;
    }
    j
}

/// Checks square, finite and exactly skew input.
pub fn check_skew(s: &DMatrix<f64>) -> Result<()> {
    check_square_finite(s)?;
    let n = s.nrows();
    for row in 0..n {
        for col in row..n {
            if s[(row, col)] != -s[(col, row)] {
                return Err(Error::NotSkew { row, col });
            }
        }
    }
    Ok(())
}

fn symmetric_part(m: DMatrix<f64>) -> SymmetricForm {
    SymmetricForm { matrix: (&m + m.transpose()) * 0.5 }
}

/// The form `Q_C = {Q_A, Q_B}`, i.e. `C = 2(ASB - BSA)`.
pub fn poisson_bracket_forms(
    a: &SymmetricForm,
    b: &SymmetricForm,
    p: &PoissonStructure,
) -> Result<SymmetricForm> {
    same_dim(a, b)?;
    if a.dim() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: a.dim() });
    }
    let s = p.matrix();
    let asb = a.matrix() * s * b.matrix();
    let bsa = b.matrix() * s * a.matrix();
    Ok(symmetric_part((asb - bsa) * 2.0))
}

/// The Heisenberg-normalized bracket matrix `C = (AJB - BJA) / 2` with the
/// canonical `J` on `R^{2d}`. Equals a quarter of [`poisson_bracket_forms`]
/// with `S = J`.
pub fn heisenberg_bracket_matrix(
    a: &SymmetricForm,
    b: &SymmetricForm,
    d: usize,
) -> Result<SymmetricForm> {
    same_dim(a, b)?;
    if !a.dim().is_multiple_of(2) {
        return Err(Error::OddDimension(a.dim()));
    }
    if a.dim() != 2 * d {
        return Err(Error::DimensionMismatch { expected: 2 * d, found: a.dim() });
    }
    skew_bracket_matrix(a, b, &canonical_j(d))
}

/// `C = (A J B - B J A) / 2` for an arbitrary skew `J` of matching size.
pub fn skew_bracket_matrix(
    a: &SymmetricForm,
    b: &SymmetricForm,
    j: &DMatrix<f64>,
) -> Result<SymmetricForm> {
    same_dim(a, b)?;
    if j.nrows() != a.dim() || j.ncols() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: j.nrows() });
    }
    let ajb = a.matrix() * j * b.matrix();
    let bja = b.matrix() * j * a.matrix();
    Ok(symmetric_part((ajb - bja) * 0.5))
}
