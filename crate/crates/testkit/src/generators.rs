use nalgebra::{DMatrix, DVector};
use qw_core::linalg::{self, Rng64};
use qw_core::{check_heisenberg, CheckConfig, ConditionReport, Error, OperatorSpec, Result, SymmetricForm};

/// Symmetrized standard Gaussian matrix.
pub fn random_symmetric(rng: &mut Rng64, n: usize) -> SymmetricForm {
    let g = DMatrix::from_fn(n, n, |_, _| linalg::gaussian_vector(rng, 1)[0]);
    SymmetricForm::new((&g + g.transpose()) * 0.5).expect("finite square matrix")
}

/// Random symmetric matrix whose last diagonal entry cancels the others, so
/// the trace is exactly zero.
pub fn random_traceless(rng: &mut Rng64, n: usize) -> SymmetricForm {
    let mut m = random_symmetric(rng, n).into_matrix();
    let partial: f64 = (0..n - 1).map(|i| m[(i, i)]).sum();
    m[(n - 1, n - 1)] = -partial;
    SymmetricForm::from_exact(m).expect("symmetric by construction")
}

pub fn random_traceless_pair(rng: &mut Rng64, n: usize) -> (SymmetricForm, SymmetricForm) {
    (random_traceless(rng, n), random_traceless(rng, n))
}

/// A pair whose first member is positive definite with a wide margin.
pub fn random_pd_pair(rng: &mut Rng64, n: usize) -> (SymmetricForm, SymmetricForm) {
    let g = DMatrix::from_fn(n, n, |_, _| linalg::gaussian_vector(rng, 1)[0]);
    let pd = &g * g.transpose() + DMatrix::identity(n, n) * n as f64;
    (SymmetricForm::new(pd).expect("finite"), random_symmetric(rng, n))
}

/// Random pair with a prescribed unit common zero `z0`: each form has its
/// `z0 z0^T` component removed.
pub fn constructed_known_zero(rng: &mut Rng64, n: usize) -> (SymmetricForm, SymmetricForm, DVector<f64>) {
    let z0 = loop {
        if let Some(z) = linalg::normalized(&linalg::gaussian_vector(rng, n)) {
            break z;
        }
    };
    let zz = &z0 * z0.transpose();
    let vanish = |rng: &mut Rng64| {
        let m = random_symmetric(rng, n).into_matrix();
        let q = z0.dot(&(&m * &z0));
        SymmetricForm::new(m - &zz * q).expect("finite")
    };
    let a = vanish(rng);
    let b = vanish(rng);
    (a, b, z0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassingInstance {
    pub a: SymmetricForm,
    pub b: SymmetricForm,
    /// Heisenberg bracket matrix `(AJB - BJA) / 2`.
    pub c: SymmetricForm,
    pub report: ConditionReport,
    /// Drawn pairs rejected before this one.
    pub rejections: usize,
}

const PASSING_BUDGET: usize = 50;

/// Rejection-samples traceless Gaussian pairs on `R^m` until every condition
/// of the Heisenberg check on `H_{m/2}` holds.
pub fn generate_passing_instance(m: usize, seed: u64) -> Result<PassingInstance> {
    if m < 2 || !m.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("m must be even and at least 2, got {m}")));
    }
    let mut rng = linalg::derived_rng(seed, 0x7061);
    let cfg = CheckConfig::default().with_seed(seed);
    for rejections in 0..PASSING_BUDGET {
        let (a, b) = random_traceless_pair(&mut rng, m);
        let op = OperatorSpec::new(a.clone(), b.clone())?;
        let verdict = check_heisenberg(m / 2, &op, &cfg)?;
        if verdict.reasons.is_empty() {
            let c = verdict.c.expect("passing verdict carries C");
            return Ok(PassingInstance { a, b, c, report: verdict.report, rejections });
        }
    }
    Err(Error::SearchExhausted { starts: PASSING_BUDGET })
}
