//! Numerical tolerances shared by the form-level operations.

use crate::error::{Error, Result};

/// Tolerances for rank, semidefiniteness and certificate decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceConfig {
    /// Singular values at or below `rank_rel_tol * sigma_max` count as zero.
    pub rank_rel_tol: f64,
    /// A member `F` of the pencil counts as positive semidefinite when
    /// `lambda_min(F) >= -psd_rel_tol * ||F||_2`.
    pub psd_rel_tol: f64,
    /// Uniform samples of the angle sweep before refinement.
    pub sweep_samples: usize,
    /// Golden-section refinement stops at this bracket width.
    pub refine_width: f64,
    /// Trace residual accepted on a certificate, relative to `||P|| ||A||`.
    pub certificate_tol: f64,
    /// Newton iteration budget for the certificate search. Nearly dissipative
    /// pencils start far from their thin feasible slice and need a few hundred.
    pub certificate_max_iters: usize,
    /// Random pencil members sampled for rank statistics.
    pub rank_samples: usize,
    pub seed: u64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            rank_rel_tol: 1e-10,
            psd_rel_tol: 1e-9,
            sweep_samples: 720,
            refine_width: 1e-12,
            certificate_tol: 1e-8,
            certificate_max_iters: 500,
            rank_samples: 8,
            seed: 0,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rank_rel_tol", self.rank_rel_tol),
            ("psd_rel_tol", self.psd_rel_tol),
            ("refine_width", self.refine_width),
            ("certificate_tol", self.certificate_tol),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {value}")));
            }
        }
        if self.sweep_samples < 3 {
            return Err(Error::InvalidArgument("sweep_samples must be at least 3".into()));
        }
        if self.rank_samples == 0 {
            return Err(Error::InvalidArgument("rank_samples must be at least 1".into()));
        }
        Ok(())
    }
}
