//! Report values and their text rendering.
//!
//! Reports are JSON objects built in insertion order, so output is
//! byte-identical across runs.

use std::fmt::Write as _;
use std::path::Path;

use privcone::numerics::{render_rational, Rational};
use privcone::rowcone::{interpret_constraint, ConstraintSystem, LinearConstraint, Membership};
use privcone::semantics::{GuaranteeReport, Verdict, Witness};
use serde_json::{json, Map, Number, Value};

use crate::error::{CliError, CliResult};
use crate::files::{constraint_file, SCHEMA};

/// A float with 17 significant digits; non-finite values become strings.
pub fn f17(x: f64) -> Value {
    if x.is_finite() {
        let n: Number = format!("{x:.16e}").parse().expect("formatted float is a JSON number");
        Value::Number(n)
    } else {
        Value::String(x.to_string())
    }
}

pub fn rat(r: &Rational) -> Value {
    Value::String(render_rational(r))
}

pub fn rats(rs: &[Rational]) -> Value {
    Value::Array(rs.iter().map(rat).collect())
}

pub fn floats(xs: &[f64]) -> Value {
    Value::Array(xs.iter().copied().map(f17).collect())
}

pub fn strings(xs: &[String]) -> Value {
    Value::Array(xs.iter().cloned().map(Value::String).collect())
}

/// Top-level report skeleton.
pub fn report(analysis: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("analysis".into(), json!(analysis));
    m
}

pub fn constraint(c: &LinearConstraint, labels: &[String]) -> Value {
    let f = constraint_file(c, labels);
    let mut m = Map::new();
    m.insert("coefficients".into(), strings(&f.coefficients));
    m.insert("relation".into(), json!(f.relation));
    m.insert("text".into(), json!(f.text));
    if let Ok(s) = interpret_constraint(c) {
        let names = |set: &std::collections::BTreeSet<usize>| -> Value {
            Value::Array(set.iter().map(|&i| json!(labels[i])).collect())
        };
        m.insert(
            "reading".into(),
            json!({
                "s1": names(&s.s1),
                "s2": names(&s.s2),
                "posterior_odds_bound": rat(&s.posterior_odds_bound),
                "relative_odds_bound": s.relative_odds_bound.as_ref().map(rat),
            }),
        );
    }
    Value::Object(m)
}

pub fn system(sys: &ConstraintSystem) -> Value {
    json!({
        "provenance": sys.provenance().as_str(),
        "order": sys.order().as_str(),
        "labels": strings(sys.labels()),
        "constraints": sys
            .constraints()
            .iter()
            .map(|c| constraint(c, sys.labels()))
            .collect::<Vec<_>>(),
    })
}

pub fn membership(m: &Membership) -> Value {
    match m {
        Membership::Inside => json!({"verdict": "inside"}),
        Membership::Boundary => json!({"verdict": "boundary"}),
        Membership::Outside { witness, value } => json!({
            "verdict": "outside",
            "witness": witness,
            "value": rat(value),
        }),
    }
}

pub fn verdict(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Violated => "violated",
    }
}

pub fn witness(w: &Witness) -> Value {
    json!({
        "output": w.output,
        "prior_q": rats(&w.prior_q),
        "query": w.query,
        "context": w.context,
        "prior_even": rat(&w.prior_even),
        "prior_odd": rat(&w.prior_odd),
        "post_even": rat(&w.post_even),
        "post_odd": rat(&w.post_odd),
    })
}

pub fn guarantee(r: &GuaranteeReport) -> Value {
    json!({
        "verdict": verdict(r.verdict),
        "witnesses": r.witnesses.iter().map(witness).collect::<Vec<_>>(),
        "skipped": strings(&r.skipped),
    })
}

/// Plain-text rendering of a report value.
pub fn render_text(v: &Value) -> String {
    let mut out = String::new();
    match v {
        Value::Object(m) => render_object(&mut out, m, 0),
        other => {
            let _ = writeln!(out, "{}", scalar(other));
        }
    }
    out
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        Value::Array(xs) => format!("[{}]", xs.iter().map(scalar).collect::<Vec<_>>().join(", ")),
        other => other.to_string(),
    }
}

fn is_flat(v: &Value) -> bool {
    match v {
        Value::Object(_) => false,
        Value::Array(xs) => xs.iter().all(|x| !matches!(x, Value::Object(_) | Value::Array(_))),
        _ => true,
    }
}

fn render_object(out: &mut String, m: &Map<String, Value>, depth: usize) {
    let pad = "  ".repeat(depth);
    // A constraint prints as its text, with the reading underneath.
    if let Some(Value::String(text)) = m.get("text") {
        let _ = writeln!(out, "{pad}{text}");
        if let Some(Value::Object(r)) = m.get("reading") {
            render_object(out, r, depth + 1);
        }
        return;
    }
    for (k, v) in m {
        if k == "schema" {
            continue;
        }
        match v {
            _ if is_flat(v) => {
                let _ = writeln!(out, "{pad}{k}: {}", scalar(v));
            }
            Value::Object(inner) => {
                let _ = writeln!(out, "{pad}{k}:");
                render_object(out, inner, depth + 1);
            }
            Value::Array(items) => {
                let _ = writeln!(out, "{pad}{k}: ({})", items.len());
                for item in items {
                    match item {
                        Value::Object(inner) => {
                            let mut item = String::new();
                            render_object(&mut item, inner, depth + 2);
                            let body = item.trim_start_matches(' ');
                            let _ = write!(out, "{pad}  - {body}");
                        }
                        other => {
                            let _ = writeln!(out, "{pad}  - {}", scalar(other));
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}

pub fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report values serialize");
    s.push('\n');
    s
}
