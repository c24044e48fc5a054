use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use qw_core::linalg;
use qw_core::{Dissipativity, Error, Result, SymmetricForm};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    /// Angles in the dissipativity grid.
    pub grid_points: usize,
    /// Sample budget of the sphere search.
    pub sphere_samples: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { grid_points: 10_000, sphere_samples: 1_000_000, seed: 0 }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points == 0 || self.sphere_samples == 0 {
            return Err(Error::InvalidArgument("oracle sample counts must be positive".into()));
        }
        Ok(())
    }
}

/// `(grad Q_A(z))^T S grad Q_B(z)`, contracted entry by entry.
pub fn bracket_gradient_oracle(a: &SymmetricForm, b: &SymmetricForm, s: &DMatrix<f64>, z: &DVector<f64>) -> Result<f64> {
    let n = a.dim();
    for found in [b.dim(), s.nrows(), s.ncols(), z.len()] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
    }
    let grad = |m: &DMatrix<f64>| -> Vec<f64> {
        (0..n).map(|i| 2.0 * (0..n).map(|j| m[(i, j)] * z[j]).sum::<f64>()).collect()
    };
    let ga = grad(a.matrix());
    let gb = grad(b.matrix());
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            total += ga[i] * s[(i, j)] * gb[j];
        }
    }
    Ok(total)
}

/// Dense grid over `theta in [0, 2 pi)`: dissipative iff some grid member has
/// `lambda_min >= -1e-12 * ||F||`.
pub fn dissipativity_sweep_oracle(a: &SymmetricForm, b: &SymmetricForm, cfg: &OracleConfig) -> Result<Dissipativity> {
    cfg.validate()?;
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    for k in 0..cfg.grid_points {
        let theta = 2.0 * PI * k as f64 / cfg.grid_points as f64;
        let f = a.matrix() * theta.cos() + b.matrix() * theta.sin();
        let eig = f.symmetric_eigenvalues();
        let lo = eig.min();
        let norm = eig.amax();
        if norm > 0.0 && lo >= -1e-12 * norm {
            return Ok(Dissipativity::Dissipative);
        }
    }
    Ok(Dissipativity::NonDissipative)
}

/// Whether `rank(T^T A T) >= rank(A) - 2m` with `m = n - cols(T)`.
pub fn restricted_rank_property(a: &SymmetricForm, t: &DMatrix<f64>, rank_rel_tol: f64) -> Result<bool> {
    let n = a.dim();
    if t.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, found: t.nrows() });
    }
    let cols = t.ncols();
    if cols > n {
        return Err(Error::InvalidArgument(format!("T has {cols} columns in dimension {n}")));
    }
    let rank_t = linalg::numerical_rank(t, rank_rel_tol);
    if rank_t < cols {
        return Err(Error::RankDeficientBasis { rank: rank_t, cols });
    }
    let m = n - cols;
    let restricted = a.congruence(t)?;
    Ok(restricted.rank(rank_rel_tol) + 2 * m >= a.rank(rank_rel_tol))
}

/// Best near-zero of the sphere search.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBest {
    pub x: DVector<f64>,
    pub residual_a: f64,
    pub residual_b: f64,
    pub qc_abs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    /// Largest `|Q_C|` among near-zeros with both residuals `<= 1e-6`.
    pub best: Option<GridBest>,
    pub near_zeros: usize,
    pub samples: usize,
}

const NEAR_ZERO: f64 = 1e-6;
const PSI_STEPS: usize = 1000;

/// Zeros of a quadratic form on the great circle `cos(phi) w + sin(phi) d`,
/// one per antipodal pair: `Q = c0 + r cos(2 phi - delta)`.
fn circle_zeros(q: &DMatrix<f64>, w: &DVector<f64>, d: &DVector<f64>) -> Option<[DVector<f64>; 2]> {
    let qww = w.dot(&(q * w));
    let qdd = d.dot(&(q * d));
    let qwd = w.dot(&(q * d));
    let c0 = 0.5 * (qww + qdd);
    let half = 0.5 * (qww - qdd);
    let r = half.hypot(qwd);
    if r == 0.0 || c0.abs() > r {
        return None;
    }
    let delta = qwd.atan2(half);
    let spread = (-c0 / r).acos();
    let point = |phi: f64| w * phi.cos() + d * phi.sin();
    Some([point(0.5 * (delta + spread)), point(0.5 * (delta - spread))])
}

struct Tracker<'a> {
    a: &'a DMatrix<f64>,
    b: &'a DMatrix<f64>,
    c: &'a DMatrix<f64>,
    best: Option<GridBest>,
    near_zeros: usize,
    samples: usize,
}

impl Tracker<'_> {
    fn offer(&mut self, x: DVector<f64>) {
        let x = x.normalize();
        let ra = x.dot(&(self.a * &x)).abs();
        let rb = x.dot(&(self.b * &x)).abs();
        if ra > NEAR_ZERO || rb > NEAR_ZERO {
            return;
        }
        self.near_zeros += 1;
        let qc_abs = x.dot(&(self.c * &x)).abs();
        if self.best.as_ref().is_none_or(|b| qc_abs > b.qc_abs) {
            self.best = Some(GridBest { x, residual_a: ra, residual_b: rb, qc_abs });
        }
    }

    /// Sweep the circles through `w` inside `span{w, u, v}` and bisect sign
    /// changes of `Q_B` along both zero branches of `Q_A`.
    fn slice(&mut self, w: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) {
        let dir = |psi: f64| u * psi.cos() + v * psi.sin();
        let (a, b) = (self.a, self.b);
        let qb = |x: &DVector<f64>| x.dot(&(b * x));
        let mut prev: Option<(f64, [DVector<f64>; 2])> = None;
        for k in 0..=PSI_STEPS {
            let psi = PI * k as f64 / PSI_STEPS as f64;
            self.samples += 1;
            let zeros = circle_zeros(a, w, &dir(psi));
            if let (Some((psi0, z0)), Some(z1)) = (&prev, &zeros) {
                for branch in 0..2 {
                    let (f0, f1) = (qb(&z0[branch]), qb(&z1[branch]));
                    if f0 == 0.0 {
                        self.offer(z0[branch].clone());
                    } else if f0.signum() != f1.signum() && f1 != 0.0 {
                        let (mut lo, mut hi) = (*psi0, psi);
                        let mut candidate = None;
                        for _ in 0..80 {
                            let mid = 0.5 * (lo + hi);
                            let Some(zm) = circle_zeros(a, w, &dir(mid)) else { break };
                            let fm = qb(&zm[branch]);
                            if fm.signum() == f0.signum() {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                            candidate = Some(zm[branch].clone());
                            if fm == 0.0 {
                                break;
                            }
                        }
                        if let Some(x) = candidate {
                            self.offer(x);
                        }
                    }
                }
            }
            prev = zeros.map(|z| (psi, z));
        }
    }
}

/// Sphere search for common zeros of `Q_A, Q_B` maximizing `|Q_C|`
/// (`n <= 4`).
///
/// The unit sphere is cut by random 3-dimensional subspaces; in each slice
/// the circles through a base point are swept, `Q_A` is solved on each circle
/// in closed form and sign changes of `Q_B` along the two zero branches are
/// bisected. In dimension 2 the circle is solved directly and also sampled
/// densely. Tangential (even-order) common zeros are not detected.
pub fn witness_grid_oracle(
    a: &SymmetricForm,
    b: &SymmetricForm,
    c: &SymmetricForm,
    cfg: &OracleConfig,
) -> Result<GridReport> {
    cfg.validate()?;
    let n = a.dim();
    for found in [b.dim(), c.dim()] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
    }
    if !(2..=4).contains(&n) {
        return Err(Error::InvalidArgument(format!("sphere oracle supports dimensions 2..=4, got {n}")));
    }
    let mut tracker =
        Tracker { a: a.matrix(), b: b.matrix(), c: c.matrix(), best: None, near_zeros: 0, samples: 0 };
    let mut rng = linalg::derived_rng(cfg.seed, 0x6f72);
    if n == 2 {
        let w = DVector::from_vec(vec![1.0, 0.0]);
        let d = DVector::from_vec(vec![0.0, 1.0]);
        if let Some(zeros) = circle_zeros(tracker.a, &w, &d) {
            for z in zeros {
                tracker.offer(z);
            }
        }
        // Dense pass over the half circle as a cross-check of the closed form.
        for k in 0..cfg.sphere_samples {
            let phi = PI * k as f64 / cfg.sphere_samples as f64;
            tracker.offer(DVector::from_vec(vec![phi.cos(), phi.sin()]));
        }
        tracker.samples = cfg.sphere_samples + 1;
    } else {
        let slices = if n == 3 { 8 } else { (cfg.sphere_samples / (2 * PSI_STEPS)).max(1) };
        for _ in 0..slices {
            let frame = random_frame(&mut rng, n);
            tracker.slice(&frame[0], &frame[1], &frame[2]);
        }
    }
    Ok(GridReport { best: tracker.best, near_zeros: tracker.near_zeros, samples: tracker.samples })
}

/// Three orthonormal Gaussian directions.
fn random_frame(rng: &mut linalg::Rng64, n: usize) -> Vec<DVector<f64>> {
    loop {
        let mut frame: Vec<DVector<f64>> = Vec::with_capacity(3);
        for _ in 0..3 {
            let mut g = linalg::gaussian_vector(rng, n);
            for f in &frame {
                g -= f * f.dot(&g);
            }
            let norm = g.norm();
            if norm < 1e-6 {
                break;
            }
            frame.push(g / norm);
        }
        if frame.len() == 3 {
            return frame;
        }
    }
}
