//! Non-dissipativity of a pencil: `span{A, B}` contains no nonzero positive
//! semidefinite matrix.
//!
//! The decision of record is an angle sweep of the relative smallest
//! eigenvalue `lambda_min(F(theta)) / ||F(theta)||_2`, `F(theta) = cos(theta) A
//! + sin(theta) B`, refined by golden section around every local maximum. A
//! non-dissipative answer is backed by a positive-definite `P` with
//! `tr(PA) = tr(PB) = 0`, obtained as the analytic center of the slice
//! `{P > 0 : tr(PA) = tr(PB) = 0, tr(P) = n}`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::config::ToleranceConfig;
use crate::error::{Error, Result};
use crate::forms::SymmetricForm;
use crate::linalg;
use crate::pencil::{golden_min, Pencil};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dissipativity {
    NonDissipative,
    Dissipative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateStatus {
    /// A certificate was found and re-checked.
    Verified,
    /// The sweep says non-dissipative but the search did not produce a
    /// certificate within budget. The verdict stands.
    Unavailable,
    /// Dissipative pencils carry an angle witness instead.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissipativityDecision {
    pub verdict: Dissipativity,
    pub certificate: Option<DMatrix<f64>>,
    pub certificate_status: CertificateStatus,
    /// Largest of `|tr(PA)| / (||P|| ||A||)` and the same for `B`.
    pub certificate_residual: Option<f64>,
    /// For dissipative pencils: an angle in `[0, 2 pi)` with `F(theta)`
    /// positive semidefinite within tolerance.
    pub witness_theta: Option<f64>,
    pub witness_matrix: Option<DMatrix<f64>>,
    /// Angle where the sweep found the largest relative `lambda_min`.
    pub best_theta: f64,
    /// `lambda_min(F(best_theta))`.
    pub margin: f64,
    /// `margin / ||F(best_theta)||_2`.
    pub relative_margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepResult {
    pub theta: f64,
    pub lambda_min: f64,
    pub relative: f64,
}

fn relative_lambda_min(pencil: &Pencil, theta: f64) -> (f64, f64) {
    let (lo, hi) = linalg::eigen_extremes(&pencil.member(theta));
    let norm = lo.abs().max(hi.abs());
    if norm == 0.0 {
        (0.0, 0.0)
    } else {
        (lo, lo / norm)
    }
}

/// Maximizes `lambda_min(F(theta)) / ||F(theta)||_2` over the circle.
pub fn sweep_min_eigenvalue(pencil: &Pencil, samples: usize, width: f64) -> SweepResult {
    let step = 2.0 * PI / samples as f64;
    let grid: Vec<f64> = (0..samples).map(|i| relative_lambda_min(pencil, i as f64 * step).1).collect();
    let mut best = SweepResult { theta: 0.0, lambda_min: f64::NEG_INFINITY, relative: f64::NEG_INFINITY };
    let mut consider = |theta: f64| {
        let (lambda_min, relative) = relative_lambda_min(pencil, theta);
        if relative > best.relative {
            best = SweepResult { theta: theta.rem_euclid(2.0 * PI), lambda_min, relative };
        }
    };
    for i in 0..samples {
        let prev = grid[(i + samples - 1) % samples];
        let next = grid[(i + 1) % samples];
        let here = grid[i];
        consider(i as f64 * step);
        if here >= prev && here >= next {
            let center = i as f64 * step;
            let theta = golden_min(
                |t| -relative_lambda_min(pencil, t).1,
                center - step,
                center + step,
                width,
            );
            consider(theta);
        }
    }
    best
}

/// Decides non-dissipativity and attaches the matching evidence.
pub fn is_non_dissipative(pencil: &Pencil, cfg: &ToleranceConfig) -> DissipativityDecision {
    let sweep = sweep_min_eigenvalue(pencil, cfg.sweep_samples, cfg.refine_width);
    if sweep.relative >= -cfg.psd_rel_tol {
        return DissipativityDecision {
            verdict: Dissipativity::Dissipative,
            certificate: None,
            certificate_status: CertificateStatus::NotApplicable,
            certificate_residual: None,
            witness_theta: Some(sweep.theta),
            witness_matrix: Some(pencil.member(sweep.theta)),
            best_theta: sweep.theta,
            margin: sweep.lambda_min,
            relative_margin: sweep.relative,
        };
    }

    let n = pencil.dim();
    let found = trace_certificate(pencil.a(), pencil.b(), cfg.certificate_max_iters);
    let (certificate, status, residual) = match found {
        Some(p) => {
            let residual = certificate_residual(&p, pencil.a(), pencil.b());
            let positive = linalg::eigen_extremes(&p).0 > 0.0;
            if positive && residual <= cfg.certificate_tol {
                (Some(p), CertificateStatus::Verified, Some(residual))
            } else {
                log::warn!("certificate search converged to an unusable point (residual {residual:e})");
                (None, CertificateStatus::Unavailable, Some(residual))
            }
        }
        None => {
            log::warn!("no trace certificate within {} iterations (n = {n})", cfg.certificate_max_iters);
            (None, CertificateStatus::Unavailable, None)
        }
    };
    DissipativityDecision {
        verdict: Dissipativity::NonDissipative,
        certificate,
        certificate_status: status,
        certificate_residual: residual,
        witness_theta: None,
        witness_matrix: None,
        best_theta: sweep.theta,
        margin: sweep.lambda_min,
        relative_margin: sweep.relative,
    }
}

/// `max(|tr(PA)| / (||P|| ||A||), |tr(PB)| / (||P|| ||B||))`, Frobenius norms.
pub fn certificate_residual(p: &DMatrix<f64>, a: &SymmetricForm, b: &SymmetricForm) -> f64 {
    let pn = p.norm();
    let ra = linalg::frobenius_dot(p, a.matrix()).abs() / (pn * a.frobenius_norm());
    let rb = linalg::frobenius_dot(p, b.matrix()).abs() / (pn * b.frobenius_norm());
    ra.max(rb)
}

/// Analytic center of `{P > 0 : tr(PA) = tr(PB) = 0, tr(P) = n}`, i.e. the
/// maximizer of `log det P` on that slice, by infeasible-start Newton.
///
/// Returns `None` when the iteration budget runs out, which happens when the
/// slice has no positive-definite point.
pub fn trace_certificate(a: &SymmetricForm, b: &SymmetricForm, max_iters: usize) -> Option<DMatrix<f64>> {
    let n = a.dim();
    let sqrt_n = (n as f64).sqrt();
    let constraints = [
        a.matrix() / a.frobenius_norm(),
        b.matrix() / b.frobenius_norm(),
        DMatrix::identity(n, n) / sqrt_n,
    ];
    let rhs = Vector3::new(0.0, 0.0, sqrt_n);
    let alpha = 0.01;

    let residual = |p: &DMatrix<f64>, nu: &Vector3<f64>| -> Option<f64> {
        let chol = p.clone().cholesky()?;
        let mut dual = -chol.inverse();
        for k in 0..3 {
            dual += &constraints[k] * nu[k];
        }
        let primal: f64 = (0..3)
            .map(|k| (linalg::frobenius_dot(&constraints[k], p) - rhs[k]).powi(2))
            .sum();
        Some((dual.norm_squared() + primal).sqrt())
    };

    let mut p = DMatrix::<f64>::identity(n, n);
    let mut nu = Vector3::zeros();
    for _ in 0..max_iters {
        let pgp: Vec<DMatrix<f64>> = constraints.iter().map(|g| &p * g * &p).collect();
        let gram = Matrix3::from_fn(|j, k| linalg::frobenius_dot(&constraints[j], &pgp[k]));
        let target = Vector3::from_fn(|j, _| 2.0 * linalg::frobenius_dot(&constraints[j], &p) - rhs[j]);
        let nu_next = gram.lu().solve(&target)?;
        let mut step = p.clone();
        for k in 0..3 {
            step -= &pgp[k] * nu_next[k];
        }
        let step = (&step + step.transpose()) * 0.5;

        let primal_gap = (0..3)
            .map(|k| (linalg::frobenius_dot(&constraints[k], &p) - rhs[k]).abs())
            .fold(0.0, f64::max);
        let p_inv = p.clone().cholesky()?.inverse();
        let decrement = linalg::frobenius_dot(&(&p_inv * &step * &p_inv), &step);
        if primal_gap <= 1e-13 * sqrt_n && decrement <= 1e-20 {
            return Some(p);
        }

        let dnu = nu_next - nu;
        let r0 = residual(&p, &nu)?;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &p + &step * t;
            let trial_nu = nu + dnu * t;
            if let Some(r) = residual(&trial, &trial_nu) {
                if r <= (1.0 - alpha * t) * r0 {
                    accepted = Some((trial, trial_nu));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, trial_nu)) => {
                p = trial;
                nu = trial_nu;
            }
            // No progress possible in floating point: accept the point if it
            // is already feasible, the caller re-checks it.
            None => return (primal_gap <= 1e-10 * sqrt_n).then_some(p),
        }
    }
    None
}

/// A pencil moved by congruence `T^T F T` with `T = P^{1/2}` so that both
/// members become traceless.
#[derive(Debug, Clone, PartialEq)]
pub struct TracelessPencil {
    pub t: DMatrix<f64>,
    pub a: SymmetricForm,
    pub b: SymmetricForm,
}

pub fn traceless_normalize(
    pencil: &Pencil,
    certificate: &DMatrix<f64>,
    cfg: &ToleranceConfig,
) -> Result<TracelessPencil> {
    let n = pencil.dim();
    if certificate.nrows() != n || certificate.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: certificate.nrows() });
    }
    let sym = (certificate + certificate.transpose()) * 0.5;
    let t = linalg::spd_sqrt(&sym).ok_or(Error::NotPositiveDefinite)?;
    let residual = certificate_residual(&sym, pencil.a(), pencil.b());
    if residual > cfg.certificate_tol {
        return Err(Error::InvalidArgument(format!(
            "certificate does not annihilate both traces (relative residual {residual:e})"
        )));
    }
    let a = pencil.a().congruence(&t)?;
    let b = pencil.b().congruence(&t)?;
    Ok(TracelessPencil { t, a, b })
}
