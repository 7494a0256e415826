//! JSON input formats.

use std::path::Path;

use privcone::mechanisms::{
    pram_matrix, rr_inverse, rr_matrix, sampling_matrix, tuple_alphabet, DatasetOrder, PramSpec,
    RRSpec, SamplingSpec,
};
use privcone::noisecone::{parse_pmf_table, NoiseSpec, PmfTable, Window};
use privcone::numerics::{invert, parse_rational, render_rational, LabeledMatrix, MechanismMatrix, Rational};
use privcone::rowcone::{ConstraintSystem, LinearConstraint, Provenance, Relation};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{parse_err, CliError, CliResult};

pub const SCHEMA: &str = "privcone/1";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixBody {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    entries: Vec<Vec<String>>,
    order: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RrBody {
    p: String,
    k: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PramBody {
    q: QFile,
    k: usize,
    gamma: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SamplingBody {
    p: String,
    n: usize,
    w: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseBody {
    kind: String,
    p: Option<f64>,
    r: Option<u32>,
    l1: Option<f64>,
    l2: Option<f64>,
    window: usize,
    tolerance: Option<f64>,
    /// `[k, mass]` pairs for `kind = "custom"`.
    pmf: Option<Vec<(i64, f64)>>,
}

/// Per-tuple transition matrix; labels default to `a, b, ...`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QFile {
    labels: Option<Vec<String>>,
    entries: Vec<Vec<String>>,
}

/// A loaded mechanism file.
#[derive(Debug)]
pub enum Mechanism {
    RandomizedResponse(RRSpec),
    Pram { spec: PramSpec, gamma: Option<Rational> },
    Sampling(SamplingSpec),
    Matrix(MechanismMatrix),
    Noise { spec: NoiseSpec, window: Window },
}

impl Mechanism {
    pub fn kind(&self) -> &'static str {
        match self {
            Mechanism::RandomizedResponse(_) => "randomized_response",
            Mechanism::Pram { .. } => "pram",
            Mechanism::Sampling(_) => "sampling",
            Mechanism::Matrix(_) => "matrix",
            Mechanism::Noise { .. } => "noise",
        }
    }

    /// The exact matrix, when the mechanism has one.
    pub fn matrix(&self) -> CliResult<MechanismMatrix> {
        Ok(match self {
            Mechanism::RandomizedResponse(s) => rr_matrix(s)?,
            Mechanism::Pram { spec, .. } => pram_matrix(spec)?,
            Mechanism::Sampling(s) => sampling_matrix(s)?,
            Mechanism::Matrix(m) => m.clone(),
            Mechanism::Noise { .. } => {
                return Err(CliError::Usage(
                    "noise mechanisms have no exact matrix; use `privcone noise`".into(),
                ))
            }
        })
    }

    /// Inverse of the exact matrix, using the closed form where there is one.
    pub fn inverse(&self) -> CliResult<LabeledMatrix> {
        match self {
            Mechanism::RandomizedResponse(s) => Ok(rr_inverse(s)?),
            _ => Ok(invert(self.matrix()?.matrix())?),
        }
    }
}

fn rational(field: &str, s: &str) -> CliResult<Rational> {
    parse_rational(s).map_err(|e| CliError::Parse(format!("field `{field}`: {e}")))
}

fn rows(entries: &[Vec<String>]) -> CliResult<Vec<Vec<Rational>>> {
    entries
        .iter()
        .map(|r| r.iter().map(|e| rational("entries", e)).collect())
        .collect()
}

fn check_schema(v: &Value) -> CliResult<()> {
    match v.get("schema").and_then(Value::as_str) {
        Some(SCHEMA) => Ok(()),
        Some(other) => Err(CliError::Parse(format!(
            "unsupported schema `{other}`, expected `{SCHEMA}`"
        ))),
        None => Err(CliError::Parse(format!("missing \"schema\": \"{SCHEMA}\""))),
    }
}

pub fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })
}

fn body<T: serde::de::DeserializeOwned>(v: Value) -> CliResult<T> {
    serde_json::from_value(v).map_err(parse_err)
}

pub fn parse_mechanism(text: &str) -> CliResult<Mechanism> {
    let mut value: Value = serde_json::from_str(text).map_err(parse_err)?;
    check_schema(&value)?;
    let obj = value.as_object_mut().expect("checked by check_schema");
    obj.remove("schema");
    let kind = match obj.remove("type") {
        Some(Value::String(s)) => s,
        _ => return Err(CliError::Parse("missing string field `type`".into())),
    };
    Ok(match kind.as_str() {
        "matrix" => {
            let b: MatrixBody = body(value)?;
            let m = LabeledMatrix::new(b.row_labels, b.col_labels, rows(&b.entries)?)?;
            Mechanism::Matrix(MechanismMatrix::new(m, DatasetOrder::parse(&b.order)?)?)
        }
        "randomized_response" => {
            let b: RrBody = body(value)?;
            Mechanism::RandomizedResponse(RRSpec::new(rational("p", &b.p)?, b.k)?)
        }
        "pram" => {
            let b: PramBody = body(value)?;
            let labels = b.q.labels.unwrap_or_else(|| tuple_alphabet(b.q.entries.len()));
            let m = LabeledMatrix::new(labels.clone(), labels, rows(&b.q.entries)?)?;
            let q = MechanismMatrix::new(m, DatasetOrder::LexTuples)?;
            let gamma = b.gamma.map(|g| rational("gamma", &g)).transpose()?;
            Mechanism::Pram {
                spec: PramSpec::new(q, b.k)?,
                gamma,
            }
        }
        "sampling" => {
            let b: SamplingBody = body(value)?;
            Mechanism::Sampling(SamplingSpec::new(rational("p", &b.p)?, b.n, b.w)?)
        }
        "noise" => {
            let b: NoiseBody = body(value)?;
            let table = b.pmf.map(|t| t.into_iter().collect::<PmfTable>());
            let spec = noise_spec(&b.kind, b.p, b.r, b.l1, b.l2, table)?;
            let window = Window::with_tolerance(b.window, b.tolerance.unwrap_or(Window::DEFAULT_TOLERANCE));
            Mechanism::Noise { spec, window }
        }
        other => {
            return Err(CliError::Parse(format!(
                "unknown mechanism type `{other}` (matrix, randomized_response, pram, sampling, noise)"
            )))
        }
    })
}

pub fn load_mechanism(path: &Path) -> CliResult<Mechanism> {
    parse_mechanism(&read(path)?)
}

fn need<T>(value: Option<T>, name: &str, kind: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::Usage(format!("{kind} noise needs `{name}`")))
}

pub fn noise_spec(
    kind: &str,
    p: Option<f64>,
    r: Option<u32>,
    l1: Option<f64>,
    l2: Option<f64>,
    pmf: Option<PmfTable>,
) -> CliResult<NoiseSpec> {
    let spec = match kind {
        "geometric" => NoiseSpec::Geometric {
            p: need(p, "p", kind)?,
        },
        "dnb" => NoiseSpec::Dnb {
            p: need(p, "p", kind)?,
            r: need(r, "r", kind)?,
        },
        "skellam" => NoiseSpec::Skellam {
            l1: need(l1, "l1", kind)?,
            l2: need(l2, "l2", kind)?,
        },
        "custom" => NoiseSpec::Custom(need(pmf, "pmf", kind)?),
        other => {
            return Err(CliError::Usage(format!(
                "unknown noise kind `{other}` (geometric, dnb, skellam, custom)"
            )))
        }
    };
    spec.validate()?;
    Ok(spec)
}

pub fn load_pmf(path: &Path) -> CliResult<PmfTable> {
    Ok(parse_pmf_table(&read(path)?)?)
}

/// Raw-matrix file for `m`, reloadable by [`parse_mechanism`].
#[derive(Debug, Serialize)]
pub struct MatrixFile {
    pub schema: &'static str,
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub entries: Vec<Vec<String>>,
    pub order: &'static str,
}

impl MatrixFile {
    pub fn new(m: &MechanismMatrix) -> Self {
        Self {
            schema: SCHEMA,
            kind: "matrix",
            row_labels: m.row_labels().to_vec(),
            col_labels: m.col_labels().to_vec(),
            entries: m.rows().map(|r| r.iter().map(render_rational).collect()).collect(),
            order: m.order().as_str(),
        }
    }
}

/// A constraint system as written in reports; `relax --system` reads the
/// same shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemFile {
    #[serde(default)]
    pub schema: Option<String>,
    pub labels: Vec<String>,
    pub order: String,
    #[serde(default)]
    pub provenance: Option<String>,
    pub constraints: Vec<ConstraintFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintFile {
    pub coefficients: Vec<String>,
    pub relation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl SystemFile {
    pub fn from_system(sys: &ConstraintSystem) -> Self {
        Self {
            schema: Some(SCHEMA.to_string()),
            labels: sys.labels().to_vec(),
            order: sys.order().as_str().to_string(),
            provenance: Some(sys.provenance().as_str().to_string()),
            constraints: sys.constraints().iter().map(|c| constraint_file(c, sys.labels())).collect(),
        }
    }

    pub fn into_system(self) -> CliResult<ConstraintSystem> {
        let provenance = match self.provenance.as_deref() {
            None | Some("exact-row-cone") => Provenance::ExactRowCone,
            Some("approximation-cone") => Provenance::ApproximationCone,
            Some("relaxation") => Provenance::Relaxation,
            Some(other) => return Err(CliError::Parse(format!("unknown provenance `{other}`"))),
        };
        let mut sys = ConstraintSystem::new(self.labels, DatasetOrder::parse(&self.order)?, provenance);
        for c in self.constraints {
            let relation = match c.relation.as_str() {
                ">=" => Relation::Ge,
                "=" => Relation::Eq,
                ">" => Relation::Gt,
                other => return Err(CliError::Parse(format!("unknown relation `{other}`"))),
            };
            let coeffs = c
                .coefficients
                .iter()
                .map(|v| rational("coefficients", v))
                .collect::<CliResult<Vec<_>>>()?;
            sys.push(LinearConstraint::new(coeffs, relation))?;
        }
        Ok(sys)
    }
}

pub fn constraint_file(c: &LinearConstraint, labels: &[String]) -> ConstraintFile {
    ConstraintFile {
        coefficients: c.integer_coefficients().iter().map(|v| v.to_string()).collect(),
        relation: c.relation().symbol().to_string(),
        text: Some(c.display(labels).to_string()),
    }
}

pub fn load_system(path: &Path) -> CliResult<ConstraintSystem> {
    let text = read(path)?;
    let value: Value = serde_json::from_str(&text).map_err(parse_err)?;
    check_schema(&value)?;
    let file: SystemFile = serde_json::from_value(value).map_err(parse_err)?;
    file.into_system()
}
