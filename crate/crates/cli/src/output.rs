//! Report serialization. Floating-point values are written as shortest
//! round-trip decimal strings so reports re-parse to the same bits.

use nalgebra::{DMatrix, DVector};
use qw_core::witness::{SearchOutcome, SearchStats, WitnessPoint};
use qw_core::{
    Branch, CertificateStatus, ConditionReport, Dissipativity, DissipativityDecision, EvidenceBundle, Scope,
    Verdict, VerdictKind,
};
use serde::{Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{:?}", self.0))
    }
}

pub fn vector(v: &DVector<f64>) -> Vec<Num> {
    v.iter().copied().map(Num).collect()
}

pub fn matrix(m: &DMatrix<f64>) -> Vec<Vec<Num>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| Num(m[(i, j)])).collect()).collect()
}

fn nums(v: &[f64]) -> Vec<Num> {
    v.iter().copied().map(Num).collect()
}

#[derive(Serialize)]
pub struct DissipativityOut {
    pub verdict: &'static str,
    pub certificate_status: &'static str,
    pub certificate: Option<Vec<Vec<Num>>>,
    pub certificate_residual: Option<Num>,
    pub witness_theta: Option<Num>,
    pub best_theta: Num,
    pub margin: Num,
    pub relative_margin: Num,
}

impl From<&DissipativityDecision> for DissipativityOut {
    fn from(d: &DissipativityDecision) -> Self {
        Self {
            verdict: match d.verdict {
                Dissipativity::NonDissipative => "NonDissipative",
                Dissipativity::Dissipative => "Dissipative",
            },
            certificate_status: match d.certificate_status {
                CertificateStatus::Verified => "Verified",
                CertificateStatus::Unavailable => "Unavailable",
                CertificateStatus::NotApplicable => "NotApplicable",
            },
            certificate: d.certificate.as_ref().map(matrix),
            certificate_residual: d.certificate_residual.map(Num),
            witness_theta: d.witness_theta.map(Num),
            best_theta: Num(d.best_theta),
            margin: Num(d.margin),
            relative_margin: Num(d.relative_margin),
        }
    }
}

#[derive(Serialize)]
pub struct WitnessOut {
    pub x: Vec<Num>,
    pub residual_a: Num,
    pub residual_b: Num,
    pub qc_value: Option<Num>,
    pub transversality: Num,
}

impl From<&WitnessPoint> for WitnessOut {
    fn from(w: &WitnessPoint) -> Self {
        Self {
            x: vector(&w.x),
            residual_a: Num(w.residual_a),
            residual_b: Num(w.residual_b),
            qc_value: w.qc_value.map(Num),
            transversality: Num(w.transversality),
        }
    }
}

#[derive(Serialize)]
pub struct StatsOut {
    pub starts: usize,
    pub converged: usize,
    pub not_converged: usize,
    pub rank_deficient: usize,
    pub best_transversality: Num,
    pub best_relative_qc: Num,
}

impl From<&SearchStats> for StatsOut {
    fn from(s: &SearchStats) -> Self {
        Self {
            starts: s.starts,
            converged: s.converged,
            not_converged: s.not_converged,
            rank_deficient: s.rank_deficient,
            best_transversality: Num(s.best_transversality),
            best_relative_qc: Num(s.best_relative_qc),
        }
    }
}

#[derive(Serialize)]
pub struct SearchOut {
    pub found: bool,
    pub witness: Option<WitnessOut>,
    pub stats: StatsOut,
}

impl From<&SearchOutcome> for SearchOut {
    fn from(o: &SearchOutcome) -> Self {
        Self { found: o.is_found(), witness: o.witness().map(WitnessOut::from), stats: o.stats().into() }
    }
}

#[derive(Serialize)]
struct ConditionBOut {
    mu0: Option<Vec<Num>>,
    jmu_sigma_min: Num,
    nondegenerate_found: bool,
    mu_samples: usize,
    independence: bool,
    independence_ratio: Num,
}

#[derive(Serialize)]
struct ConditionCOut {
    branch: &'static str,
    minrank: usize,
    maxrank: usize,
    joint_kernel_dim: usize,
    kernel_symplectic: bool,
    rank_heuristic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    frontier: Option<String>,
}

#[derive(Serialize)]
struct ConditionsOut {
    pencil_independent: bool,
    a: Option<DissipativityOut>,
    b: ConditionBOut,
    c: Option<ConditionCOut>,
}

impl From<&ConditionReport> for ConditionsOut {
    fn from(r: &ConditionReport) -> Self {
        let b = &r.cond_b;
        Self {
            pencil_independent: r.pencil_independent,
            a: r.cond_a.as_ref().map(DissipativityOut::from),
            b: ConditionBOut {
                mu0: b.mu0.as_deref().map(nums),
                jmu_sigma_min: Num(b.jmu_sigma_min),
                nondegenerate_found: b.nondegenerate_found,
                mu_samples: b.mu_samples,
                independence: b.independence,
                independence_ratio: Num(b.independence_ratio),
            },
            c: r.cond_c.as_ref().map(|c| ConditionCOut {
                branch: match c.branch {
                    Branch::I => "I",
                    Branch::II => "II",
                    Branch::Fail => "Fail",
                },
                minrank: c.minrank,
                maxrank: c.maxrank,
                joint_kernel_dim: c.joint_kernel_dim,
                kernel_symplectic: c.kernel_symplectic,
                rank_heuristic: c.rank_heuristic,
                frontier: c.frontier.clone(),
            }),
        }
    }
}

#[derive(Serialize)]
struct EvidenceOut {
    v_prime: Vec<Num>,
    mu0: Option<Vec<Num>>,
    xi0: Option<Vec<Num>>,
    f_leading: Num,
    g_leading: Num,
    leading_coefficient: Num,
}

impl From<&EvidenceBundle> for EvidenceOut {
    fn from(e: &EvidenceBundle) -> Self {
        Self {
            v_prime: vector(&e.v_prime),
            mu0: e.mu0.as_deref().map(nums),
            xi0: e.xi0.as_ref().map(vector),
            f_leading: Num(e.f_leading),
            g_leading: Num(e.g_leading),
            leading_coefficient: Num(e.leading_coefficient),
        }
    }
}

#[derive(Serialize)]
pub struct VerdictOut {
    verdict: &'static str,
    scope: &'static str,
    reasons: Vec<String>,
    diagnostics: Vec<String>,
    conditions: ConditionsOut,
    #[serde(rename = "C")]
    c: Option<Vec<Vec<Num>>>,
    witness: Option<WitnessOut>,
    evidence: Option<EvidenceOut>,
    search: Option<StatsOut>,
}

impl From<&Verdict> for VerdictOut {
    fn from(v: &Verdict) -> Self {
        Self {
            verdict: match v.kind {
                VerdictKind::NotLocallySolvable => "NotLocallySolvable",
                VerdictKind::Inconclusive => "Inconclusive",
            },
            scope: match v.scope {
                Scope::AtPoint => "AtPoint",
                Scope::Nowhere => "Nowhere",
            },
            reasons: v.reasons.clone(),
            diagnostics: v.diagnostics.clone(),
            conditions: (&v.report).into(),
            c: v.c.as_ref().map(|c| matrix(c.matrix())),
            witness: v.witness.as_ref().map(WitnessOut::from),
            evidence: v.evidence.as_ref().map(EvidenceOut::from),
            search: v.search.as_ref().map(StatsOut::from),
        }
    }
}
