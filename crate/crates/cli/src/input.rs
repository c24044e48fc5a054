//! Input documents: one JSON object per run, matrices as row-major arrays of
//! decimal strings (plain JSON numbers are accepted too).

use nalgebra::DMatrix;
use qw_core::{CheckConfig, SymmetricForm};
use serde::Deserialize;
use serde_json::Value;

use crate::InputError;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Pencil,
    OperatorHeisenberg,
    OperatorTwoStep,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Decimal {
    Text(String),
    Number(f64),
}

type RawMatrix = Vec<Vec<Decimal>>;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub seed: Option<u64>,
    pub rank_rel_tol: Option<f64>,
    pub psd_rel_tol: Option<f64>,
    pub max_starts: Option<usize>,
    pub max_newton_iters: Option<usize>,
    pub residual_tol: Option<f64>,
    pub transversality_floor: Option<f64>,
    pub qc_floor: Option<f64>,
    pub mu_attempts: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    schema_version: String,
    kind: Kind,
    #[serde(rename = "A")]
    a: RawMatrix,
    #[serde(rename = "B")]
    b: RawMatrix,
    #[serde(rename = "C")]
    c: Option<RawMatrix>,
    #[serde(rename = "J")]
    j: Option<RawMatrix>,
    d: Option<usize>,
    m: Option<usize>,
    ell: Option<usize>,
    #[serde(rename = "J_list")]
    j_list: Option<Vec<RawMatrix>>,
    #[serde(default)]
    config: ConfigOverrides,
}

/// A validated document together with its parsed JSON for echoing.
#[derive(Debug, Clone)]
pub struct Document {
    pub echo: Value,
    pub kind: Kind,
    pub a: SymmetricForm,
    pub b: SymmetricForm,
    pub c: Option<SymmetricForm>,
    pub j: Option<DMatrix<f64>>,
    pub j_list: Option<Vec<DMatrix<f64>>>,
    pub config: ConfigOverrides,
}

fn parse_matrix(name: &str, raw: &RawMatrix) -> Result<DMatrix<f64>, InputError> {
    let rows = raw.len();
    if rows == 0 {
        return Err(InputError::invalid(format!("{name}: matrix is empty")));
    }
    let cols = raw[0].len();
    let mut m = DMatrix::zeros(rows, cols);
    for (i, row) in raw.iter().enumerate() {
        if row.len() != cols {
            return Err(InputError::invalid(format!("{name}: row {i} has {} entries, expected {cols}", row.len())));
        }
        for (j, entry) in row.iter().enumerate() {
            let value = match entry {
                Decimal::Number(v) => *v,
                Decimal::Text(s) => s
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| InputError::invalid(format!("{name}[{i}][{j}]: invalid decimal {s:?}")))?,
            };
            if !value.is_finite() {
                return Err(InputError::invalid(format!("{name}[{i}][{j}]: entry is not finite")));
            }
            m[(i, j)] = value;
        }
    }
    if rows != cols {
        return Err(InputError::invalid(format!("{name}: matrix is not square ({rows}x{cols})")));
    }
    Ok(m)
}

fn parse_symmetric(name: &str, raw: &RawMatrix) -> Result<SymmetricForm, InputError> {
    SymmetricForm::from_exact(parse_matrix(name, raw)?).map_err(|e| match e {
        qw_core::Error::NotSymmetric { row, col } => InputError::invalid(format!(
            "{name}: matrix is not symmetric: {name}[{row}][{col}] differs from {name}[{col}][{row}]"
        )),
        other => InputError::core(name, other),
    })
}

fn parse_skew(name: &str, raw: &RawMatrix) -> Result<DMatrix<f64>, InputError> {
    let m = parse_matrix(name, raw)?;
    qw_core::forms::check_skew(&m).map_err(|e| match e {
        qw_core::Error::NotSkew { row, col } => InputError::invalid(format!(
            "{name}: matrix is not skew-symmetric: {name}[{row}][{col}] is not the negative of {name}[{col}][{row}]"
        )),
        other => InputError::core(name, other),
    })?;
    Ok(m)
}

pub fn parse(text: &str) -> Result<Document, InputError> {
    let echo: Value = serde_json::from_str(text).map_err(|e| InputError::parse(e.to_string()))?;
    let raw: RawDocument = serde_json::from_value(echo.clone()).map_err(|e| InputError::parse(e.to_string()))?;
    if raw.schema_version != SCHEMA_VERSION {
        return Err(InputError::invalid(format!(
            "unsupported schema_version {:?} (expected {SCHEMA_VERSION:?})",
            raw.schema_version
        )));
    }
    let a = parse_symmetric("A", &raw.a)?;
    let b = parse_symmetric("B", &raw.b)?;
    let n = a.dim();
    let same = |name: &str, found: usize| {
        if found == n {
            Ok(())
        } else {
            Err(InputError::invalid(format!("{name}: dimension {found} does not match A ({n})")))
        }
    };
    same("B", b.dim())?;
    let c = raw.c.as_ref().map(|c| parse_symmetric("C", c)).transpose()?;
    if let Some(c) = &c {
        same("C", c.dim())?;
    }
    let j = raw.j.as_ref().map(|j| parse_skew("J", j)).transpose()?;
    if let Some(j) = &j {
        same("J", j.nrows())?;
    }
    let j_list = match &raw.j_list {
        Some(list) => Some(
            list.iter()
                .enumerate()
                .map(|(k, j)| {
                    let name = format!("J_list[{k}]");
                    let m = parse_skew(&name, j)?;
                    same(&name, m.nrows())?;
                    Ok(m)
                })
                .collect::<Result<Vec<_>, InputError>>()?,
        ),
        None => None,
    };

    match raw.kind {
        Kind::OperatorHeisenberg => {
            if n % 2 != 0 {
                return Err(InputError::invalid(format!("operator_heisenberg needs even dimension, got {n}")));
            }
            if let Some(d) = raw.d {
                if 2 * d != n {
                    return Err(InputError::invalid(format!("d = {d} does not match dimension {n}")));
                }
            }
        }
        Kind::OperatorTwoStep => {
            let Some(list) = &j_list else {
                return Err(InputError::invalid("operator_two_step requires J_list"));
            };
            if let Some(m) = raw.m {
                same("m", m)?;
            }
            if let Some(ell) = raw.ell {
                if ell != list.len() {
                    return Err(InputError::invalid(format!("ell = {ell} but J_list has {} entries", list.len())));
                }
            }
        }
        Kind::Pencil => {}
    }
    Ok(Document { echo, kind: raw.kind, a, b, c, j, j_list, config: raw.config })
}

/// Command-line settings that override the document's `config`.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol_rank: Option<f64>,
    pub tol_psd: Option<f64>,
    pub max_starts: Option<usize>,
    pub mu_attempts: Option<usize>,
    pub frontier: bool,
}

pub fn check_config(doc: &Document, cli: &Overrides) -> Result<CheckConfig, InputError> {
    let file = &doc.config;
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let mut cfg = CheckConfig::default().with_seed(seed);
    if let Some(v) = cli.tol_rank.or(file.rank_rel_tol) {
        cfg.tol.rank_rel_tol = v;
    }
    if let Some(v) = cli.tol_psd.or(file.psd_rel_tol) {
        cfg.tol.psd_rel_tol = v;
    }
    if let Some(v) = cli.max_starts.or(file.max_starts) {
        cfg.search.max_starts = v;
    }
    if let Some(v) = cli.mu_attempts.or(file.mu_attempts) {
        cfg.mu_attempts = v;
    }
    if let Some(v) = file.max_newton_iters {
        cfg.search.max_newton_iters = v;
    }
    if let Some(v) = file.residual_tol {
        cfg.search.residual_tol = v;
    }
    if let Some(v) = file.transversality_floor {
        cfg.search.transversality_floor = v;
    }
    if let Some(v) = file.qc_floor {
        cfg.search.qc_floor = v;
    }
    cfg.frontier = cli.frontier;
    cfg.tol.validate().map_err(|e| InputError::core("config", e))?;
    cfg.search.validate().map_err(|e| InputError::core("config", e))?;
    if cfg.mu_attempts == 0 {
        return Err(InputError::invalid("config: mu_attempts must be at least 1"));
    }
    Ok(cfg)
}
