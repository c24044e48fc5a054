use qw_core::forms::{canonical_j, skew_bracket_matrix};
use qw_core::witness::SearchOutcome;
use qw_core::{
    check_heisenberg, check_at_point, check_two_step, find_nondegenerate_mu, heisenberg_bracket_matrix,
    hoermander_witness, is_non_dissipative, joint_kernel, j_mu, pencil_minmax_rank, poisson_bracket_forms,
    transversal_point, CheckConfig, Dissipativity, OperatorSpec, Pencil, PoissonStructure, SymmetricForm,
    TwoStepGroup, VerdictKind,
};
use qw_testkit::{dissipativity_sweep_oracle, witness_grid_oracle, OracleConfig};
use serde::Serialize;
use serde_json::{json, Value};

use crate::input::{Document, Kind};
use crate::output::{matrix, vector, DissipativityOut, Num, SearchOut, VerdictOut};
use crate::InputError;

pub const EXIT_POSITIVE: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 3;

pub struct Outcome {
    pub result: Value,
    pub code: i32,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn pencil(doc: &Document, cfg: &CheckConfig) -> Result<Pencil, InputError> {
    Pencil::new(doc.a.clone(), doc.b.clone(), &cfg.tol).map_err(|e| InputError::core("pencil", e))
}

fn group(doc: &Document) -> Result<TwoStepGroup, InputError> {
    let list = doc.j_list.clone().ok_or_else(|| InputError::invalid("operator_two_step requires J_list"))?;
    TwoStepGroup::new(doc.a.dim(), list).map_err(|e| InputError::core("J_list", e))
}

/// The bracket form implied by the document, with a description of how it
/// was formed. `None` when the document carries no structure at all.
fn implied_bracket(
    doc: &Document,
    cfg: &CheckConfig,
    heisenberg_normalization: bool,
) -> Result<Option<(SymmetricForm, Value)>, InputError> {
    let n = doc.a.dim();
    let core = |e| InputError::core("bracket", e);
    match doc.kind {
        Kind::OperatorHeisenberg => {
            let d = n / 2;
            let c = heisenberg_bracket_matrix(&doc.a, &doc.b, d).map_err(core)?;
            Ok(Some((c, json!({ "structure": "heisenberg", "normalization": "half", "d": d }))))
        }
        Kind::OperatorTwoStep => {
            let g = group(doc)?;
            let mu = find_nondegenerate_mu(&g, cfg.mu_attempts, cfg.tol.seed, cfg.tol.rank_rel_tol)
                .map_err(core)?
                .ok_or_else(|| {
                    InputError::invalid(format!("no nondegenerate J^mu among {} sampled mu", cfg.mu_attempts))
                })?;
            let j = j_mu(&g, &mu).map_err(core)?;
            let c = skew_bracket_matrix(&doc.a, &doc.b, &j).map_err(core)?;
            let mu_out: Vec<Num> = mu.iter().copied().map(Num).collect();
            Ok(Some((c, json!({ "structure": "two_step", "normalization": "half", "mu0": to_value(&mu_out) }))))
        }
        Kind::Pencil => {
            let (j, source) = match &doc.j {
                Some(j) => (j.clone(), "given"),
                None if n.is_multiple_of(2) => (canonical_j(n / 2), "canonical"),
                None => return Ok(None),
            };
            if heisenberg_normalization {
                PoissonStructure::new(j.clone(), cfg.tol.rank_rel_tol).map_err(|e| InputError::core("J", e))?;
                let c = skew_bracket_matrix(&doc.a, &doc.b, &j).map_err(core)?;
                Ok(Some((c, json!({ "structure": source, "normalization": "half" }))))
            } else {
                let s = PoissonStructure::new(j, cfg.tol.rank_rel_tol).map_err(|e| InputError::core("J", e))?;
                let c = poisson_bracket_forms(&doc.a, &doc.b, &s).map_err(core)?;
                Ok(Some((c, json!({ "structure": source, "normalization": "poisson" }))))
            }
        }
    }
}

pub fn bracket(doc: &Document, cfg: &CheckConfig, heisenberg_normalization: bool) -> Result<Outcome, InputError> {
    let (c, info) = implied_bracket(doc, cfg, heisenberg_normalization)?
        .ok_or_else(|| InputError::invalid("bracket needs J or an even dimension"))?;
    let mut result = json!({ "C": to_value(&matrix(c.matrix())) });
    if let (Value::Object(out), Value::Object(extra)) = (&mut result, info) {
        out.extend(extra);
    }
    Ok(Outcome { result, code: EXIT_POSITIVE })
}

pub fn nondissipative(doc: &Document, cfg: &CheckConfig) -> Result<Outcome, InputError> {
    let p = pencil(doc, cfg)?;
    let decision = is_non_dissipative(&p, &cfg.tol);
    let code = if decision.verdict == Dissipativity::NonDissipative { EXIT_POSITIVE } else { EXIT_NEGATIVE };
    Ok(Outcome { result: to_value(&DissipativityOut::from(&decision)), code })
}

pub fn ranks(doc: &Document, cfg: &CheckConfig) -> Result<Outcome, InputError> {
    let p = pencil(doc, cfg)?;
    let r = pencil_minmax_rank(&p, &cfg.tol);
    let kernel = joint_kernel(&p, &cfg.tol);
    let result = json!({
        "minrank": r.minrank,
        "maxrank": r.maxrank,
        "argmin_direction": to_value(&[Num(r.argmin_direction.0), Num(r.argmin_direction.1)]),
        "heuristic": r.heuristic,
        "joint_kernel_dim": kernel.ncols(),
    });
    Ok(Outcome { result, code: EXIT_POSITIVE })
}

pub fn witness(doc: &Document, cfg: &CheckConfig, heisenberg_normalization: bool) -> Result<Outcome, InputError> {
    let given = doc.c.clone().map(|c| (c, json!({ "structure": "given" })));
    let has_structure = doc.j.is_some() || doc.kind != Kind::Pencil;
    let third = match given {
        Some(c) => Some(c),
        None if has_structure => implied_bracket(doc, cfg, heisenberg_normalization)?,
        None => None,
    };
    let core = |e| InputError::core("witness", e);
    let (mode, outcome, info): (&str, SearchOutcome, Option<Value>) = match third {
        Some((c, info)) => ("hoermander", hoermander_witness(&doc.a, &doc.b, &c, &cfg.search).map_err(core)?, Some(info)),
        None => ("transversal", transversal_point(&pencil(doc, cfg)?, &cfg.search).map_err(core)?, None),
    };
    let code = if outcome.is_found() { EXIT_POSITIVE } else { EXIT_NEGATIVE };
    let mut result = json!({ "mode": mode });
    if let Some(info) = info {
        result["C_source"] = info;
    }
    if let (Value::Object(out), Value::Object(search)) = (&mut result, to_value(&SearchOut::from(&outcome))) {
        out.extend(search);
    }
    Ok(Outcome { result, code })
}

pub fn check(doc: &Document, cfg: &CheckConfig) -> Result<Outcome, InputError> {
    let op = OperatorSpec::new(doc.a.clone(), doc.b.clone()).map_err(|e| InputError::core("operator", e))?;
    let core = |e| InputError::core("check", e);
    let verdict = match doc.kind {
        Kind::OperatorHeisenberg => check_heisenberg(doc.a.dim() / 2, &op, cfg).map_err(core)?,
        Kind::OperatorTwoStep => check_two_step(&group(doc)?, &op, cfg).map_err(core)?,
        Kind::Pencil => {
            let j = doc.j.as_ref().ok_or_else(|| InputError::invalid("check on kind pencil requires J"))?;
            check_at_point(&op, j, cfg).map_err(|e| InputError::core("J", e))?
        }
    };
    let code = match verdict.kind {
        VerdictKind::NotLocallySolvable => EXIT_POSITIVE,
        VerdictKind::Inconclusive => EXIT_NEGATIVE,
    };
    Ok(Outcome { result: to_value(&VerdictOut::from(&verdict)), code })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OracleKind {
    Dissipativity,
    WitnessGrid,
}

pub fn oracle(doc: &Document, which: OracleKind, ocfg: &OracleConfig, cfg: &CheckConfig) -> Result<Outcome, InputError> {
    let core = |e| InputError::core("oracle", e);
    match which {
        OracleKind::Dissipativity => {
            let v = dissipativity_sweep_oracle(&doc.a, &doc.b, ocfg).map_err(core)?;
            let (name, code) = match v {
                Dissipativity::NonDissipative => ("NonDissipative", EXIT_POSITIVE),
                Dissipativity::Dissipative => ("Dissipative", EXIT_NEGATIVE),
            };
            Ok(Outcome { result: json!({ "oracle": "dissipativity", "grid_points": ocfg.grid_points, "verdict": name }), code })
        }
        OracleKind::WitnessGrid => {
            let c = match &doc.c {
                Some(c) => c.clone(),
                None => implied_bracket(doc, cfg, false)?
                    .map(|(c, _)| c)
                    .ok_or_else(|| InputError::invalid("witness-grid oracle needs C, J or an even dimension"))?,
            };
            let report = witness_grid_oracle(&doc.a, &doc.b, &c, ocfg).map_err(core)?;
            let best = report.best.as_ref().map(|b| {
                json!({
                    "x": to_value(&vector(&b.x)),
                    "residual_a": to_value(&Num(b.residual_a)),
                    "residual_b": to_value(&Num(b.residual_b)),
                    "qc_abs": to_value(&Num(b.qc_abs)),
                })
            });
            let code = if report.best.is_some() { EXIT_POSITIVE } else { EXIT_NEGATIVE };
            Ok(Outcome {
                result: json!({
                    "oracle": "witness_grid",
                    "samples": report.samples,
                    "near_zeros": report.near_zeros,
                    "best": best,
                }),
                code,
            })
        }
    }
}
