//! Nonsolvability checks for second-order operators `sum a_jk X_j X_k` with
//! complex symmetric coefficients `A + iB`.
//!
//! Three conditions are assembled into a verdict:
//!
//! * (a) `A, B` is a non-dissipative pair;
//! * (b) the bracket matrix `J` is nondegenerate and `A, B, C` are linearly
//!   independent, where `Q_C` is the bracket of `Q_A` and `Q_B`;
//! * (c) either `minrank >= 3` and `maxrank >= 17` (branch I), or
//!   `minrank = 2`, `maxrank >= 9` and the joint kernel is trivial or
//!   symplectic for the form `(J^{-1})^T` (branch II).
//!
//! When all hold the operator is not locally solvable; on two-step groups,
//! where the coefficients are constant, nowhere locally solvable. Any failed
//! or unverifiable condition gives `Inconclusive`, never a solvability claim.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;

use crate::config::ToleranceConfig;
use crate::dissipativity::{is_non_dissipative, Dissipativity, DissipativityDecision};
use crate::error::{Error, Result};
use crate::forms::{
    canonical_j, check_skew, poisson_bracket_forms, same_dim, skew_bracket_matrix,
    PoissonStructure, SymmetricForm,
};
use crate::linalg;
use crate::pencil::{independence_ratio, is_symplectic_subspace, joint_kernel, pencil_minmax_rank, Pencil};
use crate::witness::{hoermander_witness, SearchConfig, SearchOutcome, SearchStats, WitnessPoint};

/// A simply connected two-step nilpotent group `R^m x R^ell` presented by the
/// skew matrices `J^(1), ..., J^(ell)` of its bracket relations.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStepGroup {
    m: usize,
    j_list: Vec<DMatrix<f64>>,
}

impl TwoStepGroup {
    pub fn new(m: usize, j_list: Vec<DMatrix<f64>>) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 generators, got {m}")));
        }
        if j_list.is_empty() {
            return Err(Error::InvalidArgument("need at least one bracket matrix".into()));
        }
        for j in &j_list {
            if j.nrows() != m || j.ncols() != m {
                return Err(Error::DimensionMismatch { expected: m, found: j.nrows() });
            }
            check_skew(j)?;
        }
        Ok(Self { m, j_list })
    }

    /// The Heisenberg group on `R^{2d} x R` with `J = [[0, I_d], [-I_d, 0]]`.
    pub fn heisenberg(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("Heisenberg dimension d must be at least 1".into()));
        }
        Self::new(2 * d, vec![canonical_j(d)])
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn ell(&self) -> usize {
        self.j_list.len()
    }

    pub fn j_list(&self) -> &[DMatrix<f64>] {
        &self.j_list
    }
}

/// `J^mu = sum_i mu_i J^(i)`.
pub fn j_mu(group: &TwoStepGroup, mu: &[f64]) -> Result<DMatrix<f64>> {
    if mu.len() != group.ell() {
        return Err(Error::DimensionMismatch { expected: group.ell(), found: mu.len() });
    }
    let mut out = DMatrix::zeros(group.m, group.m);
    for (weight, j) in mu.iter().zip(&group.j_list) {
        out += j * *weight;
    }
    Ok(out)
}

fn relative_sigma_min(m: &DMatrix<f64>) -> f64 {
    let s = linalg::singular_values(m);
    match (s.first(), s.last()) {
        (Some(&top), Some(&low)) if top > 0.0 => low / top,
        _ => 0.0,
    }
}

/// Sample directions for `mu`: the first axis, then uniform points on the
/// unit sphere of `R^ell`.
fn mu_samples(ell: usize, attempts: usize, seed: u64) -> impl Iterator<Item = Vec<f64>> {
    let mut rng = linalg::Rng64::seed_from_u64(seed);
    rng.set_stream(0x6d75);
    (0..attempts).map(move |k| {
        if k == 0 {
            let mut e1 = vec![0.0; ell];
            e1[0] = 1.0;
            return e1;
        }
        loop {
            let g = linalg::gaussian_vector(&mut rng, ell);
            if let Some(u) = linalg::normalized(&g) {
                return u.iter().copied().collect();
            }
        }
    })
}

/// First sampled `mu` with `sigma_min(J^mu) > rel_tol * sigma_max(J^mu)`.
///
/// `None` does not prove that every `J^mu` is degenerate; `det J^mu` is a
/// polynomial and sampling can miss a nonzero value.
pub fn find_nondegenerate_mu(
    group: &TwoStepGroup,
    attempts: usize,
    seed: u64,
    rel_tol: f64,
) -> Result<Option<Vec<f64>>> {
    if attempts == 0 {
        return Err(Error::InvalidArgument("attempts must be at least 1".into()));
    }
    for mu in mu_samples(group.ell(), attempts, seed) {
        if relative_sigma_min(&j_mu(group, &mu)?) > rel_tol {
            return Ok(Some(mu));
        }
    }
    Ok(None)
}

/// Constant coefficients `A = Re(alpha)`, `B = Im(alpha)` of the principal
/// part. Lower-order terms do not enter the checks.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    pub a: SymmetricForm,
    pub b: SymmetricForm,
}

impl OperatorSpec {
    pub fn new(a: SymmetricForm, b: SymmetricForm) -> Result<Self> {
        same_dim(&a, &b)?;
        Ok(Self { a, b })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckConfig {
    pub tol: ToleranceConfig,
    pub search: SearchConfig,
    /// Samples of `mu` for condition (b) on general two-step groups.
    pub mu_attempts: usize,
    /// Report which rank threshold decided condition (c).
    pub frontier: bool,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { tol: ToleranceConfig::default(), search: SearchConfig::default(), mu_attempts: 64, frontier: false }
    }
}

impl CheckConfig {
    /// Same seed for every randomized stage.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.tol.seed = seed;
        self.search.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionB {
    pub mu0: Option<Vec<f64>>,
    /// `sigma_min / sigma_max` of the bracket matrix used.
    pub jmu_sigma_min: f64,
    pub independence: bool,
    /// `sigma_3 / sigma_1` of the normalized `{A, B, C}` stack.
    pub independence_ratio: f64,
    pub mu_samples: usize,
    pub nondegenerate_found: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    I,
    II,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionC {
    pub branch: Branch,
    pub minrank: usize,
    pub maxrank: usize,
    pub joint_kernel_dim: usize,
    pub kernel_symplectic: bool,
    pub rank_heuristic: bool,
    pub frontier: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub pencil_independent: bool,
    pub cond_a: Option<DissipativityDecision>,
    pub cond_b: ConditionB,
    pub cond_c: Option<ConditionC>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictKind {
    NotLocallySolvable,
    Inconclusive,
}

/// Whether a positive verdict holds at the base point or everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    AtPoint,
    Nowhere,
}

/// Leading-order data of the bracket test along `xi(t) = xi0 + (t v', 0)`.
///
/// There `f` and `g` equal `t^2 Q_A(v')`, `t^2 Q_B(v')` and the bracket
/// `{f, g}` equals `t^2 Q_C(v')` up to a cubic remainder that is not
/// evaluated here.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceBundle {
    pub v_prime: DVector<f64>,
    pub mu0: Option<Vec<f64>>,
    /// `(0, mu0)`: at the group identity the symbols of the `X_j` vanish at
    /// `xi' = 0`.
    pub xi0: Option<DVector<f64>>,
    pub f_leading: f64,
    pub g_leading: f64,
    pub leading_coefficient: f64,
}

impl EvidenceBundle {
    /// Quadratic part `t^2 Q_C(v')` of the bracket at `xi(t)`.
    pub fn bracket_quadratic_part(&self, t: f64) -> f64 {
        t * t * self.leading_coefficient
    }

    /// `xi(t) = xi0 + (t v', 0)`.
    pub fn xi(&self, t: f64) -> Option<DVector<f64>> {
        let mut xi = self.xi0.clone()?;
        let m = self.v_prime.len();
        for k in 0..m {
            xi[k] += t * self.v_prime[k];
        }
        Some(xi)
    }
}

pub fn witness_evidence(
    a: &SymmetricForm,
    b: &SymmetricForm,
    c: &SymmetricForm,
    witness: &WitnessPoint,
    mu0: Option<&[f64]>,
) -> Result<EvidenceBundle> {
    let v = &witness.x;
    let xi0 = mu0.map(|mu| {
        let mut xi = DVector::zeros(v.len() + mu.len());
        for (k, value) in mu.iter().enumerate() {
            xi[v.len() + k] = *value;
        }
        xi
    });
    Ok(EvidenceBundle {
        v_prime: v.clone(),
        mu0: mu0.map(<[f64]>::to_vec),
        xi0,
        f_leading: a.evaluate(v)?,
        g_leading: b.evaluate(v)?,
        leading_coefficient: c.evaluate(v)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub scope: Scope,
    pub report: ConditionReport,
    /// Bracket matrix of the chosen `mu0` (or of the given `J`).
    pub c: Option<SymmetricForm>,
    pub witness: Option<WitnessPoint>,
    pub evidence: Option<EvidenceBundle>,
    pub search: Option<SearchStats>,
    /// Why the verdict is inconclusive.
    pub reasons: Vec<String>,
    /// Non-decisive observations, e.g. a witness search that came up empty.
    pub diagnostics: Vec<String>,
}

impl Verdict {
    pub fn is_not_locally_solvable(&self) -> bool {
        self.kind == VerdictKind::NotLocallySolvable
    }
}

struct Candidate {
    mu: Option<Vec<f64>>,
    j: DMatrix<f64>,
    c: SymmetricForm,
    sigma_ratio: f64,
}

fn branch_of(minrank: usize, maxrank: usize, kernel_dim: usize, kernel_symplectic: bool) -> Branch {
    if minrank >= 3 && maxrank >= 17 {
        Branch::I
    } else if minrank == 2 && maxrank >= 9 && (kernel_dim == 0 || kernel_symplectic) {
        Branch::II
    } else {
        Branch::Fail
    }
}

fn frontier_note(c: &ConditionC) -> String {
    let mut note = match c.branch {
        Branch::I => format!("branch I: minrank {} >= 3 and maxrank {} >= 17", c.minrank, c.maxrank),
        Branch::II => format!("branch II: minrank 2 and maxrank {} >= 9", c.maxrank),
        Branch::Fail if c.minrank >= 3 => {
            format!("branch I needs maxrank >= 17 (have {}); branch II needs minrank = 2 (have {})", c.maxrank, c.minrank)
        }
        Branch::Fail if c.minrank == 2 && c.maxrank >= 9 => {
            "branch II blocked: joint kernel is neither trivial nor symplectic".to_string()
        }
        Branch::Fail if c.minrank == 2 => format!("branch II needs maxrank >= 9 (have {})", c.maxrank),
        Branch::Fail => format!("minrank {} is below both branch thresholds", c.minrank),
    };
    if c.maxrank == 5 || c.maxrank == 7 {
        note.push_str("; maxrank 5 or 7 is the known low-rank counterexample zone");
    }
    note
}

fn dissipative_reason(pencil: &Pencil, decision: &DissipativityDecision, cfg: &ToleranceConfig) -> String {
    let psd = |m: &DMatrix<f64>| {
        let (lo, hi) = linalg::eigen_extremes(m);
        lo >= -cfg.psd_rel_tol * lo.abs().max(hi.abs())
    };
    let a = pencil.a().matrix();
    let b = pencil.b().matrix();
    if psd(a) {
        "condition (a) fails: A is positive semidefinite".into()
    } else if psd(&-a) {
        "condition (a) fails: -A is positive semidefinite".into()
    } else if psd(b) {
        "condition (a) fails: B is positive semidefinite".into()
    } else if psd(&-b) {
        "condition (a) fails: -B is positive semidefinite".into()
    } else {
        format!(
            "condition (a) fails: cos(theta) A + sin(theta) B is positive semidefinite at theta = {}",
            decision.witness_theta.unwrap_or(decision.best_theta)
        )
    }
}

fn evaluate(
    op: &OperatorSpec,
    scope: Scope,
    cfg: &CheckConfig,
    candidates: impl IntoIterator<Item = Result<Candidate>>,
    mu_samples: usize,
) -> Result<Verdict> {
    cfg.tol.validate()?;
    cfg.search.validate()?;
    let tol = cfg.tol.rank_rel_tol;
    let mut reasons = Vec::new();
    let mut diagnostics = Vec::new();

    let pencil = match Pencil::new(op.a.clone(), op.b.clone(), &cfg.tol) {
        Ok(p) => Some(p),
        Err(Error::DependentPencil) => {
            reasons.push("A and B are linearly dependent: the pencil is degenerate".to_string());
            None
        }
        Err(e) => return Err(e),
    };

    let cond_a = pencil.as_ref().map(|p| is_non_dissipative(p, &cfg.tol));
    if let (Some(p), Some(d)) = (&pencil, &cond_a) {
        if d.verdict == Dissipativity::Dissipative {
            reasons.push(dissipative_reason(p, d, &cfg.tol));
        }
    }
    let ranks = pencil.as_ref().map(|p| (pencil_minmax_rank(p, &cfg.tol), joint_kernel(p, &cfg.tol)));

    // Pick the first candidate passing every mu-dependent check, else the first.
    let mut chosen: Option<(Candidate, f64, bool)> = None;
    for candidate in candidates {
        let candidate = candidate?;
        let ratio = independence_ratio(&[&op.a, &op.b, &candidate.c])?;
        let symplectic = match &ranks {
            Some((_, kernel)) => {
                let w = candidate.j.clone().try_inverse().map(|inv| inv.transpose());
                match w {
                    Some(w) => is_symplectic_subspace(kernel, &w, tol)?,
                    None => false,
                }
            }
            None => false,
        };
        let passes = ratio > tol
            && ranks.as_ref().is_some_and(|(r, k)| {
                branch_of(r.minrank, r.maxrank, k.ncols(), symplectic) != Branch::Fail
            });
        let first = chosen.is_none();
        if first || passes {
            chosen = Some((candidate, ratio, symplectic));
        }
        if passes {
            break;
        }
    }

    let cond_b = match &chosen {
        Some((cand, ratio, _)) => ConditionB {
            mu0: cand.mu.clone(),
            jmu_sigma_min: cand.sigma_ratio,
            independence: *ratio > tol,
            independence_ratio: *ratio,
            mu_samples,
            nondegenerate_found: true,
        },
        None => ConditionB {
            mu0: None,
            jmu_sigma_min: 0.0,
            independence: false,
            independence_ratio: 0.0,
            mu_samples,
            nondegenerate_found: false,
        },
    };
    if chosen.is_none() {
        reasons.push(format!(
            "condition (b) unverifiable: no nondegenerate J^mu among {mu_samples} sampled mu"
        ));
    } else if !cond_b.independence {
        reasons.push("condition (b) fails: A, B and C are linearly dependent".to_string());
    }

    let cond_c = ranks.as_ref().map(|(r, kernel)| {
        let kernel_dim = kernel.ncols();
        let kernel_symplectic = match &chosen {
            Some((_, _, s)) => *s,
            None => kernel_dim == 0,
        };
        let mut c = ConditionC {
            branch: branch_of(r.minrank, r.maxrank, kernel_dim, kernel_symplectic),
            minrank: r.minrank,
            maxrank: r.maxrank,
            joint_kernel_dim: kernel_dim,
            kernel_symplectic,
            rank_heuristic: r.heuristic,
            frontier: None,
        };
        if cfg.frontier {
            c.frontier = Some(frontier_note(&c));
        }
        c
    });
    if let Some(c) = &cond_c {
        if c.branch == Branch::Fail {
            reasons.push(format!(
                "condition (c) fails: minrank = {}, maxrank = {}, joint kernel dimension {} ({}); \
                 branch I needs minrank >= 3 and maxrank >= 17, branch II needs minrank = 2, \
                 maxrank >= 9 and a trivial or symplectic joint kernel",
                c.minrank,
                c.maxrank,
                c.joint_kernel_dim,
                if c.kernel_symplectic { "symplectic" } else { "not symplectic" },
            ));
        }
        if c.rank_heuristic {
            diagnostics.push("minrank rests on sampled directions only (singular reduced pencil)".to_string());
        }
    }

    let report = ConditionReport {
        pencil_independent: pencil.is_some(),
        cond_a,
        cond_b,
        cond_c,
    };
    let c_form = chosen.as_ref().map(|(cand, _, _)| cand.c.clone());
    let mu0 = chosen.as_ref().and_then(|(cand, _, _)| cand.mu.clone());

    if !reasons.is_empty() {
        return Ok(Verdict {
            kind: VerdictKind::Inconclusive,
            scope,
            report,
            c: c_form,
            witness: None,
            evidence: None,
            search: None,
            reasons,
            diagnostics,
        });
    }

    let c = c_form.clone().expect("conditions passed, so a candidate was chosen");
    let outcome = hoermander_witness(&op.a, &op.b, &c, &cfg.search)?;
    let search = Some(outcome.stats().clone());
    let (witness, evidence) = match outcome {
        SearchOutcome::Found { witness, .. } => {
            let evidence = witness_evidence(&op.a, &op.b, &c, &witness, mu0.as_deref())?;
            (Some(witness), Some(evidence))
        }
        SearchOutcome::NotFound { stats } => {
            log::warn!("conditions hold but no witness found in {} starts", stats.starts);
            diagnostics.push(format!("witness search found no point in {} starts", stats.starts));
            (None, None)
        }
    };
    Ok(Verdict {
        kind: VerdictKind::NotLocallySolvable,
        scope,
        report,
        c: c_form,
        witness,
        evidence,
        search,
        reasons,
        diagnostics,
    })
}

/// Checks the three conditions at a point for a given skew bracket matrix
/// `J`, with `Q_C = {Q_A, Q_B}` computed for the structure `S = J`.
pub fn check_at_point(op: &OperatorSpec, j: &DMatrix<f64>, cfg: &CheckConfig) -> Result<Verdict> {
    let structure = PoissonStructure::new(j.clone(), cfg.tol.rank_rel_tol)?;
    if structure.dim() != op.dim() {
        return Err(Error::DimensionMismatch { expected: structure.dim(), found: op.dim() });
    }
    let c = poisson_bracket_forms(&op.a, &op.b, &structure)?;
    let candidate = Candidate { mu: None, j: j.clone(), c, sigma_ratio: relative_sigma_min(j) };
    evaluate(op, Scope::AtPoint, cfg, [Ok(candidate)], 0)
}

/// Left-invariant operator on a two-step group, with `C_mu = (A J^mu B - B
/// J^mu A) / 2` for sampled nondegenerate `J^mu`.
pub fn check_two_step(group: &TwoStepGroup, op: &OperatorSpec, cfg: &CheckConfig) -> Result<Verdict> {
    if op.dim() != group.m() {
        return Err(Error::DimensionMismatch { expected: group.m(), found: op.dim() });
    }
    if cfg.mu_attempts == 0 {
        return Err(Error::InvalidArgument("mu_attempts must be at least 1".into()));
    }
    let tol = cfg.tol.rank_rel_tol;
    let candidates = mu_samples(group.ell(), cfg.mu_attempts, cfg.tol.seed).filter_map(|mu| {
        let j = match j_mu(group, &mu) {
            Ok(j) => j,
            Err(e) => return Some(Err(e)),
        };
        let sigma_ratio = relative_sigma_min(&j);
        (sigma_ratio > tol).then(|| {
            skew_bracket_matrix(&op.a, &op.b, &j).map(|c| Candidate { mu: Some(mu), j, c, sigma_ratio })
        })
    });
    evaluate(op, Scope::Nowhere, cfg, candidates, cfg.mu_attempts)
}

/// Left-invariant operator on the Heisenberg group `H_d`, with
/// `C = (AJB - BJA) / 2` and `mu0 = 1`.
pub fn check_heisenberg(d: usize, op: &OperatorSpec, cfg: &CheckConfig) -> Result<Verdict> {
    if d == 0 || op.dim() != 2 * d {
        return Err(Error::DimensionMismatch { expected: 2 * d, found: op.dim() });
    }
    let j = canonical_j(d);
    let c = crate::forms::heisenberg_bracket_matrix(&op.a, &op.b, d)?;
    let candidate = Candidate { mu: Some(vec![1.0]), j, c, sigma_ratio: 1.0 };
    evaluate(op, Scope::Nowhere, cfg, [Ok(candidate)], 1)
}
