//! Numerical search for points of the real variety `{Q_A = 0} ∩ {Q_B = 0}`
//! on the unit sphere: transversal intersection points, and points where a
//! third form `Q_C` does not vanish.
//!
//! All three forms are homogeneous, so candidates live on the unit sphere and
//! the matrices are rescaled to unit Frobenius norm before searching.
//! Residuals and floors below are therefore relative: `residual_a` is
//! `|Q_A(x)| / ||A||_F` and the `qc_floor` applies to `|Q_C(x)| / ||C||_F`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::forms::{same_dim, SymmetricForm};
use crate::linalg;
use crate::pencil::Pencil;

/// Budgets and floors for the multi-start searches.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub seed: u64,
    pub max_starts: usize,
    pub max_newton_iters: usize,
    pub residual_tol: f64,
    pub transversality_floor: f64,
    pub qc_floor: f64,
    pub budget_exhausted_is_error: bool,
    /// Accepted ascent steps of `|Q_C|` along the variety, per start.
    pub max_ascent_steps: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_starts: 64,
            max_newton_iters: 100,
            residual_tol: 1e-10,
            transversality_floor: 1e-8,
            qc_floor: 1e-8,
            budget_exhausted_is_error: false,
            max_ascent_steps: 25,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("residual_tol", self.residual_tol),
            ("transversality_floor", self.transversality_floor),
            ("qc_floor", self.qc_floor),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {value}")));
            }
        }
        if self.max_starts == 0 {
            return Err(Error::InvalidArgument("max_starts must be at least 1".into()));
        }
        Ok(())
    }
}

/// A unit vector on (numerically) the common zero set.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessPoint {
    pub x: DVector<f64>,
    /// `|Q_A(x)| / ||A||_F`.
    pub residual_a: f64,
    /// `|Q_B(x)| / ||B||_F`.
    pub residual_b: f64,
    /// `Q_C(x)` for the caller's `C`, when a third form is involved.
    pub qc_value: Option<f64>,
    /// Smallest singular value of `[Ax | Bx]` for the normalized `A`, `B`.
    pub transversality: f64,
}

/// Outcome of [`project_to_variety`].
#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    Converged { x: DVector<f64>, iterations: usize },
    NotConverged { x: DVector<f64>, residual: f64 },
    /// The Jacobian lost rank away from the variety; restart elsewhere.
    RankDeficient { x: DVector<f64>, iterations: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchStats {
    pub starts: usize,
    pub converged: usize,
    pub not_converged: usize,
    pub rank_deficient: usize,
    /// Best transversality among converged points.
    pub best_transversality: f64,
    /// Best certified `|Q_C(x)| / ||C||_F`.
    pub best_relative_qc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SearchOutcome {
    Found { witness: WitnessPoint, stats: SearchStats },
    NotFound { stats: SearchStats },
}

impl SearchOutcome {
    pub fn witness(&self) -> Option<&WitnessPoint> {
        match self {
            SearchOutcome::Found { witness, .. } => Some(witness),
            SearchOutcome::NotFound { .. } => None,
        }
    }

    pub fn stats(&self) -> &SearchStats {
        match self {
            SearchOutcome::Found { stats, .. } | SearchOutcome::NotFound { stats } => stats,
        }
    }

    pub fn is_found(&self) -> bool {
        self.witness().is_some()
    }
}

/// A point visited by the `Q_C` search after a converged projection.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub x: DVector<f64>,
    pub residual_a: f64,
    pub residual_b: f64,
    pub qc_value: f64,
}

fn unit_frobenius(m: &SymmetricForm) -> DMatrix<f64> {
    m.matrix() / m.frobenius_norm()
}

/// Local Gauss-Newton data for the residual map `x -> (Q_A(x), Q_B(x))`.
struct Linearization {
    residual: [f64; 2],
    /// Minimum-norm step solving `Jac * step = -residual`, if `Jac` has rank 2.
    step: Option<DVector<f64>>,
    transversality: f64,
}

fn linearize(a: &DMatrix<f64>, b: &DMatrix<f64>, x: &DVector<f64>) -> Linearization {
    let ax = a * x;
    let bx = b * x;
    let residual = [x.dot(&ax), x.dot(&bx)];
    let (aa, ab, bb) = (ax.dot(&ax), ax.dot(&bx), bx.dot(&bx));
    let half_trace = 0.5 * (aa + bb);
    let spread = (0.25 * (aa - bb).powi(2) + ab * ab).sqrt();
    let lam_max = half_trace + spread;
    let det = aa * bb - ab * ab;
    let lam_min = if lam_max > 0.0 { (det / lam_max).max(0.0) } else { 0.0 };
    let transversality = lam_min.sqrt();
    let step = (lam_max > 0.0 && lam_min > 1e-24 * lam_max).then(|| {
        // (Jac Jac^T) y = -r with Jac rows 2ax^T, 2bx^T.
        let y0 = -(bb * residual[0] - ab * residual[1]) / (4.0 * det);
        let y1 = -(aa * residual[1] - ab * residual[0]) / (4.0 * det);
        (&ax * y0 + &bx * y1) * 2.0
    });
    Linearization { residual, step, transversality }
}

fn residual_norm(r: &[f64; 2]) -> f64 {
    r[0].hypot(r[1])
}

fn residual_max(r: &[f64; 2]) -> f64 {
    r[0].abs().max(r[1].abs())
}

const STEP_TOL: f64 = 1e-12;

/// Damped Gauss-Newton on the unit sphere for normalized `a`, `b`.
///
/// Converged means the residual is within tolerance and the Newton step has
/// become negligible, so iterates approaching a singular stratum are driven
/// all the way in instead of stopping at the first small residual.
fn project_normalized(a: &DMatrix<f64>, b: &DMatrix<f64>, x0: &DVector<f64>, cfg: &SearchConfig) -> Projection {
    let norm = x0.norm();
    let mut x = if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
        x0.clone()
    } else {
        linalg::normalized(x0).expect("caller passes a nonzero start")
    };
    for iteration in 0..=cfg.max_newton_iters {
        let lin = linearize(a, b, &x);
        let small = residual_max(&lin.residual) <= cfg.residual_tol;
        let Some(step) = lin.step else {
            return if small {
                Projection::Converged { x, iterations: iteration }
            } else {
                Projection::RankDeficient { x, iterations: iteration }
            };
        };
        if small && step.norm() <= STEP_TOL {
            return Projection::Converged { x, iterations: iteration };
        }
        if iteration == cfg.max_newton_iters {
            break;
        }
        let current = residual_norm(&lin.residual);
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..40 {
            if let Some(candidate) = linalg::normalized(&(&x + &step * t)) {
                let r = [candidate.dot(&(a * &candidate)), candidate.dot(&(b * &candidate))];
                if residual_norm(&r) < current {
                    next = Some(candidate);
                    break;
                }
            }
            t *= 0.5;
        }
        match next {
            Some(candidate) => x = candidate,
            None if small => return Projection::Converged { x, iterations: iteration },
            None => return Projection::NotConverged { x, residual: current },
        }
    }
    let lin = linearize(a, b, &x);
    let residual = residual_norm(&lin.residual);
    if residual_max(&lin.residual) <= cfg.residual_tol {
        Projection::Converged { x, iterations: cfg.max_newton_iters }
    } else {
        Projection::NotConverged { x, residual }
    }
}

fn check_pair(a: &SymmetricForm, b: &SymmetricForm) -> Result<()> {
    same_dim(a, b)?;
    if a.frobenius_norm() == 0.0 || b.frobenius_norm() == 0.0 {
        return Err(Error::InvalidArgument("forms must be nonzero".into()));
    }
    Ok(())
}

/// Moves `x0` onto `{Q_A = 0} ∩ {Q_B = 0} ∩ S^{n-1}` by damped Gauss-Newton
/// steps `x <- x - Jac^+ r(x)`, renormalizing after each step.
pub fn project_to_variety(
    x0: &DVector<f64>,
    a: &SymmetricForm,
    b: &SymmetricForm,
    cfg: &SearchConfig,
) -> Result<Projection> {
    cfg.validate()?;
    check_pair(a, b)?;
    if x0.len() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: x0.len() });
    }
    if linalg::normalized(x0).is_none() {
        return Err(Error::InvalidArgument("start vector must be nonzero and finite".into()));
    }
    Ok(project_normalized(&unit_frobenius(a), &unit_frobenius(b), x0, cfg))
}

/// Deterministic starts mixing extreme eigendirections of `A`, followed by
/// seeded Gaussian directions up to `max_starts`.
fn start_directions(a: &DMatrix<f64>, cfg: &SearchConfig) -> Vec<DVector<f64>> {
    let n = a.nrows();
    let mut starts = Vec::with_capacity(cfg.max_starts);
    let (values, vectors) = linalg::sorted_symmetric_eigen(a);
    for k in 0..2.min(n / 2) {
        let (neg, pos) = (k, n - 1 - k);
        if values[neg] < 0.0 && values[pos] > 0.0 {
            // Weights chosen so that Q_A vanishes on the mixed direction.
            let wp = (-values[neg]).sqrt();
            let wn = values[pos].sqrt();
            let vp = vectors.column(pos).into_owned();
            let vn = vectors.column(neg).into_owned();
            starts.push(&vp * wp + &vn * wn);
            starts.push(&vp * wp - &vn * wn);
        }
    }
    starts.truncate(cfg.max_starts);
    let mut rng = linalg::derived_rng(cfg.seed, 0x7374_6172);
    while starts.len() < cfg.max_starts {
        let g = linalg::gaussian_vector(&mut rng, n);
        if g.norm() > 0.0 {
            starts.push(g);
        }
    }
    starts
}

fn witness_point(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: Option<&SymmetricForm>,
    x: DVector<f64>,
) -> WitnessPoint {
    let lin = linearize(a, b, &x);
    WitnessPoint {
        residual_a: lin.residual[0].abs(),
        residual_b: lin.residual[1].abs(),
        qc_value: c.map(|c| x.dot(&(c.matrix() * &x))),
        transversality: lin.transversality,
        x,
    }
}

/// Multi-start search for a common zero of `Q_A`, `Q_B` on the unit sphere
/// where the normals `Ax`, `Bx` are independent; keeps the most transversal
/// converged point.
pub fn transversal_point(pencil: &Pencil, cfg: &SearchConfig) -> Result<SearchOutcome> {
    cfg.validate()?;
    let a = unit_frobenius(pencil.a());
    let b = unit_frobenius(pencil.b());
    let mut stats = SearchStats::default();
    let mut best: Option<WitnessPoint> = None;
    for start in start_directions(&a, cfg) {
        stats.starts += 1;
        match project_normalized(&a, &b, &start, cfg) {
            Projection::Converged { x, .. } => {
                stats.converged += 1;
                let point = witness_point(&a, &b, None, x);
                if best.as_ref().is_none_or(|w| point.transversality > w.transversality) {
                    best = Some(point);
                }
            }
            Projection::NotConverged { .. } => stats.not_converged += 1,
            Projection::RankDeficient { .. } => stats.rank_deficient += 1,
        }
    }
    stats.best_transversality = best.as_ref().map_or(0.0, |w| w.transversality);
    match best {
        Some(witness) if witness.transversality >= cfg.transversality_floor => {
            Ok(SearchOutcome::Found { witness, stats })
        }
        _ if cfg.budget_exhausted_is_error => Err(Error::SearchExhausted { starts: stats.starts }),
        _ => {
            log::debug!("no transversal point in {} starts", stats.starts);
            Ok(SearchOutcome::NotFound { stats })
        }
    }
}

/// Orthonormal basis of the span of the given vectors (dependent ones dropped).
fn orthonormal(vectors: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for q in &basis {
            w -= q * q.dot(&w);
        }
        for q in &basis {
            w -= q * q.dot(&w);
        }
        if w.norm() > 1e-12 * v.norm().max(1e-300) {
            basis.push(&w / w.norm());
        }
    }
    basis
}

struct QcSearch<'a> {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    cfg: &'a SearchConfig,
    trace: Option<&'a mut Vec<TracePoint>>,
    c_raw: &'a SymmetricForm,
}

impl QcSearch<'_> {
    fn qc(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.c * x))
    }

    fn project(&mut self, x0: &DVector<f64>) -> Projection {
        let p = project_normalized(&self.a, &self.b, x0, self.cfg);
        if let Projection::Converged { x, .. } = &p {
            if let Some(trace) = self.trace.as_deref_mut() {
                let lin = linearize(&self.a, &self.b, x);
                trace.push(TracePoint {
                    x: x.clone(),
                    residual_a: lin.residual[0].abs(),
                    residual_b: lin.residual[1].abs(),
                    qc_value: x.dot(&(self.c_raw.matrix() * x)),
                });
            }
        }
        p
    }

    /// Increases `|Q_C|` along the variety: step along the projection of
    /// `grad |Q_C|` onto the tangent space `{x, Ax, Bx}^perp`, then project
    /// back onto the variety.
    fn ascend(&mut self, mut x: DVector<f64>) -> DVector<f64> {
        let mut eta = 0.1;
        let mut accepted = 0;
        while accepted < self.cfg.max_ascent_steps {
            let qc = self.qc(&x);
            let cx = &self.c * &x;
            let grad = if qc < 0.0 { -cx } else { cx };
            let normals = orthonormal(&[x.clone(), &self.a * &x, &self.b * &x]);
            let mut tangent = grad;
            for q in &normals {
                tangent -= q * q.dot(&tangent);
            }
            let tnorm = tangent.norm();
            if tnorm <= 1e-12 {
                break;
            }
            let direction = tangent / tnorm;
            let mut improved = None;
            while eta >= 1e-6 {
                let trial = &x + &direction * eta;
                if let Projection::Converged { x: moved, .. } = self.project(&trial) {
                    if self.qc(&moved).abs() > qc.abs() {
                        improved = Some(moved);
                        break;
                    }
                }
                eta *= 0.25;
            }
            match improved {
                Some(moved) => {
                    x = moved;
                    accepted += 1;
                    eta = (eta * 2.0).min(0.5);
                }
                None => break,
            }
        }
        x
    }

    /// `|Q_C(x)| / ||C||_F` when its sign is certain: the point must admit a
    /// regular Newton step and `|Q_C|` must dominate the change it could
    /// undergo over the distance to the variety.
    fn certified_qc(&self, x: &DVector<f64>) -> Option<f64> {
        let lin = linearize(&self.a, &self.b, x);
        let dist = lin.step.as_ref()?.norm();
        if residual_max(&lin.residual) > self.cfg.residual_tol {
            return None;
        }
        let qc = self.qc(x).abs();
        (qc >= self.cfg.qc_floor && qc >= 20.0 * dist).then_some(qc)
    }
}

fn check_triple(a: &SymmetricForm, b: &SymmetricForm, c: &SymmetricForm) -> Result<()> {
    check_pair(a, b)?;
    same_dim(a, c)
}

/// Multi-start search for `x` with `Q_A(x) = Q_B(x) = 0` and `Q_C(x) != 0`:
/// project each start onto the variety, climb `|Q_C|` along it, and keep the
/// certified point with the largest `|Q_C|` (earliest start on ties).
pub fn hoermander_witness(
    a: &SymmetricForm,
    b: &SymmetricForm,
    c: &SymmetricForm,
    cfg: &SearchConfig,
) -> Result<SearchOutcome> {
    search_qc(a, b, c, cfg, None)
}

/// [`hoermander_witness`] that also records every converged point the search
/// visited.
pub fn hoermander_witness_traced(
    a: &SymmetricForm,
    b: &SymmetricForm,
    c: &SymmetricForm,
    cfg: &SearchConfig,
) -> Result<(SearchOutcome, Vec<TracePoint>)> {
    let mut trace = Vec::new();
    let outcome = search_qc(a, b, c, cfg, Some(&mut trace))?;
    Ok((outcome, trace))
}

fn search_qc(
    a: &SymmetricForm,
    b: &SymmetricForm,
    c: &SymmetricForm,
    cfg: &SearchConfig,
    trace: Option<&mut Vec<TracePoint>>,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    check_triple(a, b, c)?;
    let mut stats = SearchStats::default();
    if c.frobenius_norm() == 0.0 {
        return if cfg.budget_exhausted_is_error {
            Err(Error::SearchExhausted { starts: 0 })
        } else {
            Ok(SearchOutcome::NotFound { stats })
        };
    }
    let mut search = QcSearch {
        a: unit_frobenius(a),
        b: unit_frobenius(b),
        c: unit_frobenius(c),
        cfg,
        trace,
        c_raw: c,
    };
    let mut best: Option<(f64, DVector<f64>)> = None;
    for start in start_directions(&search.a, cfg) {
        stats.starts += 1;
        let x = match search.project(&start) {
            Projection::Converged { x, .. } => x,
            Projection::NotConverged { .. } => {
                stats.not_converged += 1;
                continue;
            }
            Projection::RankDeficient { .. } => {
                stats.rank_deficient += 1;
                continue;
            }
        };
        stats.converged += 1;
        let x = search.ascend(x);
        stats.best_transversality = stats.best_transversality.max(linearize(&search.a, &search.b, &x).transversality);
        if let Some(qc) = search.certified_qc(&x) {
            if best.as_ref().is_none_or(|(q, _)| qc > *q) {
                best = Some((qc, x));
            }
        }
    }
    match best {
        Some((qc, x)) => {
            stats.best_relative_qc = qc;
            let witness = witness_point(&search.a, &search.b, Some(c), x);
            Ok(SearchOutcome::Found { witness, stats })
        }
        None if cfg.budget_exhausted_is_error => Err(Error::SearchExhausted { starts: stats.starts }),
        None => {
            log::debug!("no point with Q_C != 0 on the variety in {} starts", stats.starts);
            Ok(SearchOutcome::NotFound { stats })
        }
    }
}
