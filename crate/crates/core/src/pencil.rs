//! Two-dimensional spans `span{A, B}` of symmetric matrices: validity,
//! extreme ranks, joint kernel and the symplectic test for subspaces.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::config::ToleranceConfig;
use crate::error::{Error, Result};
use crate::forms::{same_dim, SymmetricForm};
use crate::linalg;

/// An ordered, linearly independent pair `(A, B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pencil {
    a: SymmetricForm,
    b: SymmetricForm,
}

impl Pencil {
    pub fn new(a: SymmetricForm, b: SymmetricForm, cfg: &ToleranceConfig) -> Result<Self> {
        same_dim(&a, &b)?;
        if !linear_independence(&[&a, &b], cfg.rank_rel_tol)? {
            return Err(Error::DependentPencil);
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &SymmetricForm {
        &self.a
    }

    pub fn b(&self) -> &SymmetricForm {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// `cos(theta) A + sin(theta) B`.
    pub fn member(&self, theta: f64) -> DMatrix<f64> {
        self.a.matrix() * theta.cos() + self.b.matrix() * theta.sin()
    }
}

/// Upper triangle with off-diagonal entries scaled by `sqrt(2)`, an isometry
/// from `Sym(n)` with the Frobenius product onto `R^{n(n+1)/2}`.
pub fn vectorize_upper(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        out.push(m[(i, i)]);
        for j in i + 1..n {
            out.push(m[(i, j)] * std::f64::consts::SQRT_2);
        }
    }
    DVector::from_vec(out)
}

/// `sigma_k / sigma_1` of the stack of normalized vectorizations; zero when a
/// matrix in the list vanishes.
pub fn independence_ratio(mats: &[&SymmetricForm]) -> Result<f64> {
    let first = mats.first().ok_or(Error::Empty)?;
    for m in mats {
        same_dim(first, m)?;
    }
    let rows: Vec<DVector<f64>> = mats.iter().map(|m| vectorize_upper(m.matrix())).collect();
    if rows.iter().any(|r| r.norm() == 0.0) {
        return Ok(0.0);
    }
    let len = rows[0].len();
    let stack = DMatrix::from_fn(rows.len(), len, |i, j| rows[i][j] / rows[i].norm());
    let s = linalg::singular_values(&stack);
    if s.len() < mats.len() {
        // More matrices than the dimension of Sym(n).
        return Ok(0.0);
    }
    Ok(s[mats.len() - 1] / s[0])
}

/// Whether the matrices are linearly independent over `R`.
///
/// Each vectorization is normalized first, so the answer does not change when
/// any single matrix is rescaled.
pub fn linear_independence(mats: &[&SymmetricForm], rel_tol: f64) -> Result<bool> {
    Ok(independence_ratio(mats)? > rel_tol)
}

/// Extreme ranks over the nonzero members of a pencil.
#[derive(Debug, Clone, PartialEq)]
pub struct PencilRanks {
    pub minrank: usize,
    pub maxrank: usize,
    /// Unit `(s, t)` with `rank(sA + tB) = minrank`.
    pub argmin_direction: (f64, f64),
    /// Set when the reduced pencil is singular and the minimum rests on
    /// sampled directions only.
    pub heuristic: bool,
}

fn wrap_angle(theta: f64) -> f64 {
    theta.rem_euclid(2.0 * PI)
}

/// Real roots of `det(F0 + t G0)` given as angles `phi` with
/// `cos(phi) F0 + sin(phi) G0` singular. `F0` must be invertible.
fn singular_angles(f0: &DMatrix<f64>, g0: &DMatrix<f64>) -> Vec<f64> {
    let Some(f0_inv) = f0.clone().try_inverse() else {
        return Vec::new();
    };
    let m = f0_inv * g0;
    let scale = m.norm().max(1.0);
    let eig = m.complex_eigenvalues();
    let mut reals: Vec<f64> = eig
        .iter()
        .filter(|z| z.im.abs() <= 1e-6 * scale)
        .map(|z| z.re)
        .collect();
    reals.sort_by(f64::total_cmp);
    // Clustered roots come from multiple eigenvalues; their mean is far more
    // accurate than any single member.
    let mut angles = Vec::new();
    let mut cluster: Vec<f64> = Vec::new();
    for mu in reals {
        if let Some(&last) = cluster.last() {
            if (mu - last).abs() > 1e-6 * (1.0 + mu.abs()) {
                angles.push(cluster.iter().sum::<f64>() / cluster.len() as f64);
                cluster.clear();
            }
        }
        cluster.push(mu);
    }
    if !cluster.is_empty() {
        angles.push(cluster.iter().sum::<f64>() / cluster.len() as f64);
    }
    // F0 v = -t G0 v with F0^{-1} G0 v = mu v gives the direction (-mu, 1).
    angles.into_iter().map(|mu| 1.0_f64.atan2(-mu)).collect()
}

fn relative_sigma_min(m: &DMatrix<f64>) -> f64 {
    let s = linalg::singular_values(m);
    match (s.first(), s.last()) {
        (Some(&top), Some(&low)) if top > 0.0 => low / top,
        _ => 0.0,
    }
}

/// Golden-section minimization of `f` on `[lo, hi]`.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iters = 0;
    while hi - lo > width && iters < 200 {
        iters += 1;
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 { x1 } else { x2 }
}

/// `minrank` and `maxrank` of `span{A, B}`.
///
/// `maxrank` is the largest rank seen at random members. Candidates for
/// `minrank` are those samples, the two axis directions and the real roots of
/// the determinant of the pencil reduced to the orthogonal complement of the
/// joint kernel (every member vanishes on that kernel, so ranks are preserved
/// by the reduction).
pub fn pencil_minmax_rank(pencil: &Pencil, cfg: &ToleranceConfig) -> PencilRanks {
    let tol = cfg.rank_rel_tol;
    let mut rng = linalg::derived_rng(cfg.seed, 0x7261_6e6b);
    let rank_at = |theta: f64| linalg::numerical_rank(&pencil.member(theta), tol);

    let mut evaluated: Vec<(f64, usize)> = Vec::new();
    let samples: Vec<f64> = (0..cfg.rank_samples).map(|_| rng.random::<f64>() * PI).collect();
    for &theta in &samples {
        evaluated.push((theta, rank_at(theta)));
    }
    for theta in [0.0, FRAC_PI_2] {
        evaluated.push((theta, rank_at(theta)));
    }

    let kernel = joint_kernel(pencil, cfg);
    let reduced_dim = pencil.dim() - kernel.ncols();
    let mut heuristic = true;
    if reduced_dim > 0 {
        let complement = linalg::null_space(&kernel.transpose(), tol);
        let complement = if kernel.ncols() == 0 { DMatrix::identity(pencil.dim(), pencil.dim()) } else { complement };
        let reduce = |m: DMatrix<f64>| complement.transpose() * m * &complement;
        let base = samples
            .iter()
            .copied()
            .find(|&theta| linalg::numerical_rank(&reduce(pencil.member(theta)), tol) == reduced_dim);
        if let Some(theta0) = base {
            heuristic = false;
            let f0 = reduce(pencil.member(theta0));
            let g0 = reduce(pencil.member(theta0 + FRAC_PI_2));
            for phi in singular_angles(&f0, &g0) {
                let theta = theta0 + phi;
                evaluated.push((theta, rank_at(theta)));
                let window = 1e-6;
                let refined = golden_min(
                    |t| relative_sigma_min(&reduce(pencil.member(t))),
                    theta - window,
                    theta + window,
                    1e-15,
                );
                evaluated.push((refined, rank_at(refined)));
            }
        }
    }

    let maxrank = evaluated.iter().map(|&(_, r)| r).max().unwrap_or(0);
    let &(theta_min, minrank) = evaluated
        .iter()
        .min_by_key(|&&(_, r)| r)
        .expect("at least the axis directions are evaluated");
    let theta_min = wrap_angle(theta_min);
    PencilRanks {
        minrank,
        maxrank,
        argmin_direction: (theta_min.cos(), theta_min.sin()),
        heuristic,
    }
}

/// Orthonormal basis of `ker A ∩ ker B`, as the kernel of the stacked `[A; B]`.
pub fn joint_kernel(pencil: &Pencil, cfg: &ToleranceConfig) -> DMatrix<f64> {
    let n = pencil.dim();
    let mut stacked = DMatrix::zeros(2 * n, n);
    stacked.view_mut((0, 0), (n, n)).copy_from(pencil.a().matrix());
    stacked.view_mut((n, 0), (n, n)).copy_from(pencil.b().matrix());
    linalg::null_space(&stacked, cfg.rank_rel_tol)
}

/// Whether the column span of `basis` is a symplectic subspace for the skew
/// form with matrix `w`, i.e. `basis^T W basis` is invertible. The trivial
/// subspace counts as symplectic.
pub fn is_symplectic_subspace(basis: &DMatrix<f64>, w: &DMatrix<f64>, rel_tol: f64) -> Result<bool> {
    let k = basis.ncols();
    if k == 0 {
        return Ok(true);
    }
    if basis.nrows() != w.nrows() || w.nrows() != w.ncols() {
        return Err(Error::DimensionMismatch { expected: w.nrows(), found: basis.nrows() });
    }
    let rank = linalg::numerical_rank(basis, rel_tol);
    if rank < k {
        return Err(Error::RankDeficientBasis { rank, cols: k });
    }
    let restricted = basis.transpose() * w * basis;
    let scale = linalg::spectral_norm(basis).powi(2) * linalg::spectral_norm(w);
    let sigma_min = linalg::singular_values(&restricted).last().copied().unwrap_or(0.0);
    Ok(sigma_min > rel_tol * scale)
}
