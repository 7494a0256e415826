use std::path::Path;

use privcone::mechanisms::{check_gamma_amplification, rr_matrix, RRSpec, SamplingSpec};
use privcone::noisecone::{
    dnb_constraints, dp_from_dnb_telescoping, general_noise_stencil, skellam_constraints,
    verify_inverse_convolution, BandedConstraintSystem, IntSeries, NoiseSpec, Window,
    DEFAULT_GRID_POINTS,
};
use privcone::numerics::{parse_rational, Rational};
use privcone::relax::{derive_dp_from_rr, eliminate_all, EliminationTrace, Parent};
use privcone::rowcone::{
    cnf_membership, constraints_from_inverse, frapp_approx_constraints, membership, rr_constraints,
    sampling_constraints,
};
use privcone::semantics::{
    prior_grid, sweep_parity_protection, verify_parity_protection, verify_sampling_parity, BitPrior,
    ParityQuery,
};
use privcone::Error;
use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};
use crate::files::{self, load_mechanism, load_system, Mechanism, MatrixFile, SystemFile};
use crate::report::{self, f17, floats, rat, strings};

/// A finished report and the exit code it implies.
pub struct Outcome {
    pub report: Value,
    pub code: i32,
}

impl Outcome {
    fn new(report: Map<String, Value>, ok: bool) -> Self {
        Self {
            report: Value::Object(report),
            code: if ok { 0 } else { 1 },
        }
    }
}

fn rational(what: &str, s: &str) -> CliResult<Rational> {
    parse_rational(s.trim()).map_err(|e| CliError::Usage(format!("{what}: {e}")))
}

fn list<T>(what: &str, s: &str, f: impl Fn(&str) -> CliResult<T>) -> CliResult<Vec<T>> {
    let items: Vec<&str> = s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect();
    if items.is_empty() {
        return Err(CliError::Usage(format!("{what}: empty list")));
    }
    items.into_iter().map(f).collect()
}

fn index(what: &str, s: &str) -> CliResult<usize> {
    s.parse().map_err(|_| CliError::Usage(format!("{what}: `{s}` is not a nonnegative integer")))
}

/// `P,K` as in `--rr 2/3,2`.
pub fn parse_rr(s: &str) -> CliResult<RRSpec> {
    let (p, k) = s
        .split_once(',')
        .ok_or_else(|| CliError::Usage(format!("--rr expects P,K, got `{s}`")))?;
    Ok(RRSpec::new(rational("--rr", p)?, index("--rr", k.trim())?)?)
}

fn series(s: &IntSeries) -> Value {
    json!({"start": s.start, "values": floats(&s.values)})
}

// analyze

pub struct AnalyzeArgs<'a> {
    pub file: &'a Path,
    pub export_matrix: Option<&'a Path>,
    pub export_system: Option<&'a Path>,
    pub window: Option<usize>,
    pub tolerance: Option<f64>,
}

pub fn analyze(args: &AnalyzeArgs) -> CliResult<Outcome> {
    let mech = load_mechanism(args.file)?;
    if let Mechanism::Noise { spec, window } = &mech {
        if args.export_matrix.is_some() || args.export_system.is_some() {
            return Err(CliError::Usage("noise mechanisms cannot be exported as exact matrices".into()));
        }
        let window = Window::with_tolerance(
            args.window.unwrap_or(window.half_width),
            args.tolerance.unwrap_or(window.tail_tolerance),
        );
        let (mut out, ok) = noise_body(spec, &window, DEFAULT_GRID_POINTS)?;
        out.insert("mechanism".into(), json!("noise"));
        let mut r = report::report("analyze");
        r.append(&mut out);
        return Ok(Outcome::new(r, ok));
    }

    let m = mech.matrix()?;
    if let Some(path) = args.export_matrix {
        let text = serde_json::to_string_pretty(&MatrixFile::new(&m)).expect("matrix serializes") + "\n";
        report::write_file(path, &text)?;
    }
    // Sampling matrices are singular; their cone is known in closed form.
    let inverse = match &mech {
        Mechanism::Sampling(_) => None,
        _ => Some(mech.inverse()?),
    };
    let system = match (&mech, &inverse) {
        (Mechanism::RandomizedResponse(spec), _) => rr_constraints(spec)?,
        (Mechanism::Sampling(spec), _) => sampling_constraints(spec)?,
        (_, Some(inv)) => constraints_from_inverse(inv, m.order())?,
        (_, None) => unreachable!(),
    };
    if let Some(path) = args.export_system {
        let text = serde_json::to_string_pretty(&SystemFile::from_system(&system)).expect("system serializes") + "\n";
        report::write_file(path, &text)?;
    }

    let mut r = report::report("analyze");
    r.insert("mechanism".into(), json!(mech.kind()));
    r.insert("datasets".into(), strings(m.col_labels()));
    r.insert("outputs".into(), json!(m.nrows()));
    r.insert("system".into(), report::system(&system));
    let mut ok = true;
    if let Mechanism::Pram { spec, gamma: Some(gamma) } = &mech {
        let amplifies = check_gamma_amplification(&spec.q, gamma);
        let approx = frapp_approx_constraints(gamma, spec.q.nrows(), spec.k)?;
        r.insert(
            "approximation".into(),
            json!({
                "gamma": rat(gamma),
                "gamma_amplification": amplifies,
                "system": report::system(&approx),
            }),
        );
        ok &= amplifies;
    }
    // Each row of the mechanism lies in its own row cone.
    let (holds, rows): (bool, Vec<Value>) = match &inverse {
        Some(inv) => {
            let cnf = cnf_membership(m.matrix(), inv)?;
            let rows = cnf
                .row_verdicts
                .iter()
                .map(|(label, v)| {
                    let mut o = json!({"row": label});
                    o.as_object_mut().unwrap().append(report::membership(v).as_object_mut().unwrap());
                    o
                })
                .collect();
            (cnf.holds, rows)
        }
        None => {
            let mut holds = true;
            let rows = m
                .row_labels()
                .iter()
                .enumerate()
                .map(|(i, label)| {
                    let bad: Vec<usize> = system.violations(m.row(i)).into_iter().map(|(c, _)| c).collect();
                    holds &= bad.is_empty();
                    json!({"row": label, "satisfied": bad.is_empty(), "violated_constraints": bad})
                })
                .collect();
            (holds, rows)
        }
    };
    ok &= holds;
    r.insert("self_membership".into(), json!({"holds": holds, "rows": rows}));
    Ok(Outcome::new(r, ok))
}

// check

pub fn check(mech: &Path, against: &Path, rows: bool) -> CliResult<Outcome> {
    let m = load_mechanism(mech)?.matrix()?;
    let inverse = load_mechanism(against)?.inverse()?;
    let mut r = report::report("check");
    r.insert("mode".into(), json!(if rows { "rows" } else { "cnf" }));
    let ok = if rows {
        let mut ok = true;
        let verdicts: Vec<Value> = m
            .row_labels()
            .iter()
            .enumerate()
            .map(|(i, label)| {
                let v = membership(m.row(i), &inverse)?;
                ok &= v.is_member();
                let mut o = json!({"row": label});
                o.as_object_mut().unwrap().append(report::membership(&v).as_object_mut().unwrap());
                Ok(o)
            })
            .collect::<CliResult<_>>()?;
        r.insert("holds".into(), json!(ok));
        r.insert("rows".into(), Value::Array(verdicts));
        ok
    } else {
        let cnf = cnf_membership(m.matrix(), &inverse)?;
        r.insert("holds".into(), json!(cnf.holds));
        r.insert(
            "offending".into(),
            cnf.offending
                .iter()
                .map(|(row, col, v)| json!({"row": row, "column": col, "value": rat(v)}))
                .collect(),
        );
        cnf.holds
    };
    Ok(Outcome::new(r, ok))
}

// verify-parity

pub struct ParityArgs<'a> {
    pub rr: Option<&'a str>,
    pub mechanism: Option<&'a Path>,
    pub prior: Option<&'a str>,
    pub subset: Option<&'a str>,
    pub grid: Option<usize>,
    pub p: Option<&'a str>,
}

pub fn verify_parity(a: &ParityArgs) -> CliResult<Outcome> {
    let (m, rr_p) = match (a.rr, a.mechanism) {
        (Some(s), None) => {
            let spec = parse_rr(s)?;
            (rr_matrix(&spec)?.into_matrix(), Some(spec.p))
        }
        (None, Some(path)) => {
            let mech = load_mechanism(path)?;
            let p = match &mech {
                Mechanism::RandomizedResponse(s) => Some(s.p.clone()),
                _ => None,
            };
            (mech.matrix()?.into_matrix(), p)
        }
        _ => return Err(CliError::Usage("give exactly one of --rr or --mechanism".into())),
    };
    let k = m.ncols().trailing_zeros() as usize;
    let mut r = report::report("verify-parity");
    match (a.prior, a.subset, a.grid) {
        (Some(prior), Some(subset), None) => {
            let q = list("--prior", prior, |s| rational("--prior", s))?;
            if q.len() != k {
                return Err(CliError::Usage(format!("--prior needs {k} values, got {}", q.len())));
            }
            let j = list("--subset", subset, |s| index("--subset", s))?;
            let query = ParityQuery::new(j.clone(), k)?;
            let rep = verify_parity_protection(&m, &BitPrior::new(q.clone())?, &query)?;
            r.insert("prior".into(), report::rats(&q));
            r.insert("subset".into(), json!(j));
            r.insert("result".into(), report::guarantee(&rep));
            Ok(Outcome::new(r, rep.holds()))
        }
        (None, None, Some(d)) => {
            let p = match (a.p, rr_p) {
                (Some(s), _) => rational("--p", s)?,
                (None, Some(p)) => p,
                (None, None) => return Err(CliError::Usage("--grid with --mechanism needs --p".into())),
            };
            let grid = prior_grid(d, &p);
            let rep = sweep_parity_protection(&m, k, &p, &grid)?;
            r.insert("p".into(), rat(&p));
            r.insert("grid".into(), report::rats(&grid));
            r.insert("priors_checked".into(), json!(rep.priors_checked));
            r.insert("checks".into(), json!(rep.checks));
            r.insert("verdict".into(), json!(if rep.holds() { "holds" } else { "violated" }));
            r.insert("witnesses".into(), rep.witnesses.iter().map(report::witness).collect());
            Ok(Outcome::new(r, rep.holds()))
        }
        _ => Err(CliError::Usage(
            "give either --prior and --subset, or --grid".into(),
        )),
    }
}

// verify-sampling

pub struct SamplingArgs<'a> {
    pub mechanism: Option<&'a Path>,
    pub p: Option<&'a str>,
    pub n: Option<usize>,
    pub w: Option<usize>,
    pub q: Option<&'a str>,
    pub records: &'a str,
}

pub fn verify_sampling(a: &SamplingArgs) -> CliResult<Outcome> {
    let spec = match (a.mechanism, a.p, a.n, a.w) {
        (Some(path), None, None, None) => match load_mechanism(path)? {
            Mechanism::Sampling(s) => s,
            other => {
                return Err(CliError::Usage(format!(
                    "expected a sampling mechanism, got {}",
                    other.kind()
                )))
            }
        },
        (None, Some(p), Some(n), Some(w)) => SamplingSpec::new(rational("--p", p)?, n, w)?,
        _ => return Err(CliError::Usage("give --mechanism, or all of --p, --n and --w".into())),
    };
    let m = Mechanism::Sampling(spec.clone()).matrix()?;
    let q = match a.q {
        Some(s) => rational("--q", s)?,
        None => Rational::from_integer(1.into()) / (Rational::from_integer(2.into()) - &spec.p),
    };
    let labels = spec.tuple_labels();
    let records = list("--records", a.records, |s| match labels.iter().position(|l| l == s) {
        Some(i) => Ok(i),
        None => index("--records", s),
    })?;
    let rep = verify_sampling_parity(&m, &spec, &q, &records)?;
    let mut r = report::report("verify-sampling");
    r.insert("p".into(), rat(&spec.p));
    r.insert("n".into(), json!(spec.n_tuple_values));
    r.insert("w".into(), json!(spec.w));
    r.insert("q".into(), rat(&q));
    r.insert(
        "records".into(),
        Value::Array(records.iter().map(|&i| json!(labels.get(i).cloned().unwrap_or_default())).collect()),
    );
    r.insert("result".into(), report::guarantee(&rep));
    Ok(Outcome::new(r, rep.holds()))
}

// relax

fn trace(t: &EliminationTrace) -> Value {
    let labels = t.result.labels();
    json!({
        "eliminated": labels[t.eliminated],
        "inputs": t.inputs.len(),
        "derived": t.derived.iter().map(|d| {
            let parent = match d.parent {
                Parent::Carried(i) => json!({"carried": i}),
                Parent::Combined { upper, lower } => json!({"upper": upper, "lower": lower}),
            };
            let mut c = report::constraint(&d.constraint, labels);
            c.as_object_mut().unwrap().insert("parent".into(), parent);
            c
        }).collect::<Vec<_>>(),
        "result_size": t.result.len(),
    })
}

pub fn relax_derive_dp(rr: &str) -> CliResult<Outcome> {
    let spec = parse_rr(rr)?;
    let mut r = report::report("relax");
    r.insert("mode".into(), json!("derive-dp"));
    r.insert("p".into(), rat(&spec.p));
    r.insert("k".into(), json!(spec.k));
    match derive_dp_from_rr(&spec) {
        Ok(d) => {
            let labels = d.system.labels().to_vec();
            r.insert("complete".into(), json!(true));
            r.insert("alpha".into(), rat(&d.alpha));
            r.insert("epsilon".into(), f17(privcone::numerics::to_f64(&d.alpha).ln()));
            r.insert("system".into(), report::system(&d.system));
            r.insert(
                "auxiliary".into(),
                d.auxiliary.iter().map(|c| report::constraint(c, &labels)).collect(),
            );
            r.insert(
                "pairs".into(),
                d.traces
                    .iter()
                    .map(|((i, j), ts)| {
                        json!({
                            "pair": [labels[*i], labels[*j]],
                            "eliminated": ts.iter().map(|t| labels[t.eliminated].clone()).collect::<Vec<_>>(),
                            "projection_size": ts.last().map_or(0, |t| t.result.len()),
                        })
                    })
                    .collect(),
            );
            Ok(Outcome::new(r, true))
        }
        Err(Error::IncompleteDerivation { missing }) => {
            r.insert("complete".into(), json!(false));
            r.insert("missing".into(), strings(&missing));
            Ok(Outcome::new(r, false))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn relax_system(path: &Path, eliminate: &str) -> CliResult<Outcome> {
    let sys = load_system(path)?;
    let vars = list("--eliminate", eliminate, |s| {
        sys.label_index(s)
            .or_else(|| s.strip_prefix('x').and_then(|t| sys.label_index(t)))
            .ok_or_else(|| CliError::Usage(format!("--eliminate: unknown label `{s}`")))
    })?;
    let traces = eliminate_all(&sys, &vars)?;
    let result = traces.last().map_or(&sys, |t| &t.result);
    let mut r = report::report("relax");
    r.insert("mode".into(), json!("eliminate"));
    r.insert("input".into(), report::system(&sys));
    r.insert("traces".into(), traces.iter().map(trace).collect());
    r.insert("result".into(), report::system(result));
    Ok(Outcome::new(r, true))
}

// noise

pub struct NoiseArgs<'a> {
    pub kind: &'a str,
    pub p: Option<f64>,
    pub r: Option<u32>,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub pmf: Option<&'a Path>,
    pub window: usize,
    pub tolerance: f64,
    pub grid_points: usize,
}

pub fn noise(a: &NoiseArgs) -> CliResult<Outcome> {
    let pmf = a.pmf.map(files::load_pmf).transpose()?;
    let spec = files::noise_spec(a.kind, a.p, a.r, a.l1, a.l2, pmf)?;
    let window = Window::with_tolerance(a.window, a.tolerance);
    let (mut body, ok) = noise_body(&spec, &window, a.grid_points)?;
    let mut r = report::report("noise");
    r.append(&mut body);
    Ok(Outcome::new(r, ok))
}

fn banded(b: &BandedConstraintSystem) -> Value {
    json!({
        "stencil": series(&b.stencil),
        "normalized_stencil": series(&b.normalized_stencil()),
        "interior": [b.interior.0, b.interior.1],
        "truncation_error": f17(b.truncation_error),
    })
}

fn noise_body(spec: &NoiseSpec, window: &Window, grid_points: usize) -> CliResult<(Map<String, Value>, bool)> {
    let noise = spec.build()?;
    let tail = noise.check_window(window)?;
    let mut r = Map::new();
    let kind = match spec {
        NoiseSpec::Geometric { p } => json!({"kind": "geometric", "p": f17(*p)}),
        NoiseSpec::Dnb { p, r } => json!({"kind": "dnb", "p": f17(*p), "r": r}),
        NoiseSpec::Skellam { l1, l2 } => json!({"kind": "skellam", "l1": f17(*l1), "l2": f17(*l2)}),
        NoiseSpec::Custom(t) => json!({"kind": "custom", "support": [t.keys().next(), t.keys().last()]}),
    };
    r.insert("noise".into(), kind);
    r.insert(
        "window".into(),
        json!({
            "half_width": window.half_width,
            "tolerance": f17(window.tail_tolerance),
            "tail_mass": f17(tail),
        }),
    );
    let mut ok = true;
    let system = match spec {
        NoiseSpec::Geometric { p } => Some(dnb_constraints(*p, 1, window)?),
        NoiseSpec::Dnb { p, r } => Some(dnb_constraints(*p, *r, window)?),
        NoiseSpec::Skellam { l1, l2 } => Some(skellam_constraints(*l1, *l2, window)?),
        NoiseSpec::Custom(_) => None,
    };
    let f = noise.table(window);
    let g = match &system {
        Some(b) => {
            let (worst, at) = b.max_violation(&noise.matrix(window)?);
            let mut v = banded(b);
            let o = v.as_object_mut().unwrap();
            o.insert("max_violation".into(), f17(worst));
            o.insert("max_violation_at".into(), json!(at.map(|(w, k)| [w, k])));
            r.insert("constraints".into(), v);
            b.stencil.clone()
        }
        None => {
            let fs = general_noise_stencil(&f, window, grid_points)?;
            r.insert(
                "constraints".into(),
                json!({
                    "stencil": series(&fs.stencil),
                    "truncation_error": f17(fs.truncation),
                    "min_abs_transform": f17(fs.min_abs_transform),
                    "grid_points": grid_points,
                }),
            );
            fs.stencil
        }
    };
    let conv = verify_inverse_convolution(&f, &g, window);
    r.insert(
        "delta_identity".into(),
        json!({"value_at_0": f17(conv.value_at_0), "max_offcenter": f17(conv.max_offcenter)}),
    );
    let geometric_p = match spec {
        NoiseSpec::Geometric { p } | NoiseSpec::Dnb { p, r: 1 } => Some(*p),
        _ => None,
    };
    if let Some(p) = geometric_p {
        let t = dp_from_dnb_telescoping(p, window)?;
        let passes = t.passes(1e-6);
        ok &= passes;
        r.insert(
            "differential_privacy".into(),
            json!({
                "epsilon_expected": f17(t.epsilon_expected),
                "epsilon_direct": f17(t.epsilon_direct),
                "epsilon_telescoping": f17(t.epsilon_telescoping),
                "agreement": f17(t.agreement),
                "monotone": t.monotone,
                "checked": t.checked,
                "passes": passes,
            }),
        );
    }
    Ok((r, ok))
}
