//! Command-line front end: one document, one command, one JSON report.

pub mod document;

use std::io::Read;

use clap::{Parser, ValueEnum};
use serde_json::{json, Value as Json};

pub use document::{
    default_grid_radius, parse, serialize, to_value, CpwlQuery, ProblemDocument, DEFAULT_GRID_COUNT,
};

use crate::cpwl_core::{CpwlFunction, SubgradientDecomposition, Value};
use crate::error::{check_dim, Error, ErrorClass, Result};
use crate::minimax::minimax_verdict;
use crate::oracle::{
    full_stability_probe, graph_pieces, limiting_normal_cone_from, probe_directions, same_union,
    stratum_probes, union_contains_origin, ProbeEvidence,
};
use crate::ratlin::{format_rational, parse_rational, GeneratorSet, RatMatrix, RatVector, Rational};
use crate::reduction::{build_reduction, verify_reduction};
use crate::second_order::{
    domain_subspace, second_order_map, value_at_zero, DEFAULT_MAX_INDICES,
};
use crate::stability::{
    chain_rule_eval, full_stability_verdict, nd_check, soqc_check, KktPoint, SsoscResult,
    StabilityReport,
};

pub const SCHEMA: &str = "cpwl-report/1";

/// Directions probed per point by `oracle-check`.
pub const ORACLE_DIRECTIONS: usize = 20;

/// Samples used by `reduce` to verify the reduction identity.
pub const REDUCTION_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Eval,
    Subdiff,
    D2,
    D2dom,
    D2zero,
    Reduce,
    Soqc,
    Stability,
    Chainrule,
    Minimax,
    OracleCheck,
    Probe,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eval => "eval",
            Command::Subdiff => "subdiff",
            Command::D2 => "d2",
            Command::D2dom => "d2dom",
            Command::D2zero => "d2zero",
            Command::Reduce => "reduce",
            Command::Soqc => "soqc",
            Command::Stability => "stability",
            Command::Chainrule => "chainrule",
            Command::Minimax => "minimax",
            Command::OracleCheck => "oracle-check",
            Command::Probe => "probe",
        }
    }
}

impl std::str::FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        <Command as ValueEnum>::from_str(s, false)
            .map_err(|_| Error::InvalidInput(format!("unknown command {s:?}")))
    }
}

/// Query data supplied outside the document; overrides document fields.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub point: Option<RatVector>,
    pub subgradient: Option<RatVector>,
    pub direction: Option<RatVector>,
    pub seed: u64,
    pub max_indices: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            point: None,
            subgradient: None,
            direction: None,
            seed: 0,
            max_indices: DEFAULT_MAX_INDICES,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "cpwl", version, about = "Second-order analysis of convex piecewise linear functions")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Problem document; `-` or absent reads standard input.
    #[arg(long)]
    input: Option<String>,
    /// Comma-separated rationals, e.g. `1/2,-1`.
    #[arg(long, allow_hyphen_values = true)]
    point: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    subgradient: Option<String>,
    #[arg(long, short = 'u', visible_alias = "u", allow_hyphen_values = true)]
    direction: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_INDICES)]
    max_indices: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

/// Parses `"a,b,c"` into a vector; the empty string is the empty vector.
pub fn parse_vector(text: &str) -> Result<RatVector> {
    let t = text.trim();
    if t.is_empty() {
        return Ok(RatVector::zeros(0));
    }
    t.split(',').map(parse_rational).collect::<Result<Vec<_>>>().map(RatVector::new)
}

pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::InvalidInput => 1,
        ErrorClass::Precondition => 2,
        ErrorClass::Internal => 3,
    }
}

/// Entry point of the binary; returns the process exit status.
pub fn main_with_args<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let Format::Json = args.format;
    match run_args(&args) {
        Ok(report) => {
            use std::io::Write;
            // A closed pipe downstream is not an error of ours.
            match writeln!(std::io::stdout().lock(), "{report}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    eprintln!("error: {e}");
                    3
                }
                _ => 0,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run_args(args: &Args) -> Result<String> {
    let text = match args.input.as_deref() {
        None | Some("-") => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Error::InvalidInput(format!("cannot read standard input: {e}")))?;
            s
        }
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {path}: {e}")))?,
    };
    let flag = |v: &Option<String>| v.as_deref().map(parse_vector).transpose();
    let opts = RunOptions {
        point: flag(&args.point)?,
        subgradient: flag(&args.subgradient)?,
        direction: flag(&args.direction)?,
        seed: args.seed,
        max_indices: args.max_indices,
    };
    run(args.command, &text, &opts)
}

/// Parses the document, runs the command and renders the report.
pub fn run(command: Command, text: &str, opts: &RunOptions) -> Result<String> {
    let doc = parse(text)?;
    let result = execute(command, &doc, opts)?;
    let report = json!({
        "schema": SCHEMA,
        "command": command.name(),
        "input": to_value(&doc),
        "options": {
            "point": opts.point.as_ref().map(vec_json),
            "subgradient": opts.subgradient.as_ref().map(vec_json),
            "direction": opts.direction.as_ref().map(vec_json),
            "seed": opts.seed,
            "max_indices": opts.max_indices,
        },
        "result": result,
    });
    Ok(serde_json::to_string_pretty(&report).expect("JSON values serialize infallibly"))
}

fn q(r: &Rational) -> Json {
    Json::String(format_rational(r))
}

fn vec_json(v: &RatVector) -> Json {
    Json::Array(v.iter().map(q).collect())
}

fn vecs_json(vs: &[RatVector]) -> Json {
    Json::Array(vs.iter().map(vec_json).collect())
}

fn mat_json(m: &RatMatrix) -> Json {
    Json::Array((0..m.rows()).map(|i| vec_json(&m.row(i))).collect())
}

fn gens_json(g: &GeneratorSet) -> Json {
    json!({
        "conv": vecs_json(&g.conv_gens),
        "cone": vecs_json(&g.cone_gens),
        "span": vecs_json(&g.span_gens),
    })
}

fn value_json(v: &Value) -> Json {
    match v {
        Value::Finite(r) => q(r),
        Value::PlusInfinity => Json::String("+inf".into()),
    }
}

fn pairs_json(p: &[(usize, Rational)]) -> Json {
    Json::Array(p.iter().map(|(i, c)| json!({"index": i, "weight": q(c)})).collect())
}

fn decomposition_json(d: &SubgradientDecomposition) -> Json {
    json!({
        "lambda": pairs_json(&d.lambda),
        "mu": pairs_json(&d.mu),
        "v1": vec_json(&d.v1),
        "v2": vec_json(&d.v2),
        "j1": d.j1,
        "j2": d.j2,
    })
}

fn kkt_json(k: &KktPoint) -> Json {
    let bound = |b: &Option<Rational>| b.as_ref().map(q);
    json!({
        "lambda": vec_json(&k.lambda),
        "unique": k.unique,
        "qbar": vec_json(&k.qbar),
        "residual": vec_json(&k.residual),
        "ranges": k.ranges.iter().map(|(lo, hi)| json!([bound(lo), bound(hi)])).collect::<Vec<_>>(),
    })
}

fn ssosc_json(s: &SsoscResult) -> Json {
    json!({
        "holds": s.holds,
        "restricted_hessian": mat_json(&s.restricted),
        "leading_minors": s.leading_minors.iter().map(q).collect::<Vec<_>>(),
        "witness": s.witness.as_ref().map(vec_json),
    })
}

fn stability_json(r: &StabilityReport) -> Json {
    json!({
        "soqc": r.soqc,
        "nd": r.nd,
        "kkt": kkt_json(&r.kkt),
        "decomposition": decomposition_json(&r.decomposition),
        "subspace": {
            "basis": vecs_json(&r.subspace.basis),
            "gamma1": r.subspace.gamma1,
            "gamma2": r.subspace.gamma2,
        },
        "ssosc": ssosc_json(&r.ssosc),
        "fully_stable": r.fully_stable,
    })
}

fn theta_json(t: &CpwlFunction) -> Json {
    json!({
        "dim": t.dim(),
        "pieces": t.pieces().iter().map(|p| json!({"a": vec_json(&p.slope), "alpha": q(&p.offset)})).collect::<Vec<_>>(),
        "domain": (0..t.num_rows()).map(|r| json!({"d": vec_json(t.row_normal(r)), "beta": q(t.row_bound(r))})).collect::<Vec<_>>(),
    })
}

/// Function and query data from a document carrying a CPWL function.
fn query(doc: &ProblemDocument, opts: &RunOptions) -> Result<CpwlQuery> {
    let mut out = match doc {
        ProblemDocument::CpwlQuery(q) => q.clone(),
        ProblemDocument::Composite { data, .. } => CpwlQuery {
            theta: data.theta.clone(),
            point: Some(data.zbar.clone()),
            subgradient: None,
            direction: None,
        },
        other => {
            return Err(Error::InvalidInput(format!(
                "this command needs a cpwl-query or composite document, got {}",
                other.kind()
            )))
        }
    };
    let m = out.theta.dim();
    for (field, flag, slot) in [
        ("point", &opts.point, &mut out.point),
        ("subgradient", &opts.subgradient, &mut out.subgradient),
        ("direction", &opts.direction, &mut out.direction),
    ] {
        if let Some(v) = flag {
            check_dim(field, m, v.dim())?;
            *slot = Some(v.clone());
        }
    }
    Ok(out)
}

fn need<'a>(v: &'a Option<RatVector>, what: &str) -> Result<&'a RatVector> {
    v.as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("this command needs a {what}")))
}

fn execute(command: Command, doc: &ProblemDocument, opts: &RunOptions) -> Result<Json> {
    match command {
        Command::Eval => {
            let qd = query(doc, opts)?;
            let z = need(&qd.point, "point")?;
            let value = qd.theta.evaluate(z)?;
            let active = qd.theta.active_sets(z).ok();
            Ok(json!({
                "value": value_json(&value),
                "in_domain": active.is_some(),
                "active_pieces": active.as_ref().map(|a| a.pieces.clone()),
                "active_rows": active.as_ref().map(|a| a.rows.clone()),
            }))
        }
        Command::Subdiff => {
            let qd = query(doc, opts)?;
            let z = need(&qd.point, "point")?;
            let act = qd.theta.active_sets(z)?;
            let mut out = json!({
                "active_pieces": act.pieces,
                "active_rows": act.rows,
                "subdifferential": gens_json(&qd.theta.subdifferential(z)?),
                "singular": gens_json(&qd.theta.singular_subdifferential(z)?),
            });
            if let Some(v) = &qd.subgradient {
                let member = qd.theta.is_subgradient(z, v)?;
                out["is_subgradient"] = json!(member);
                if member {
                    out["decomposition"] = decomposition_json(&qd.theta.decompose_subgradient(z, v)?);
                }
            }
            Ok(out)
        }
        Command::D2 => {
            let qd = query(doc, opts)?;
            let z = need(&qd.point, "point")?;
            let v = need(&qd.subgradient, "subgradient")?;
            let u = need(&qd.direction, "direction")?;
            let map = second_order_map(&qd.theta, z, v, opts.max_indices)?;
            let pieces: Vec<Json> = map
                .active_pieces(u)
                .map(|p| {
                    json!({
                        "p1": p.quadruple.p1,
                        "q1": p.quadruple.q1,
                        "p2": p.quadruple.p2,
                        "q2": p.quadruple.q2,
                        "set": gens_json(&p.f),
                    })
                })
                .collect();
            let contains_zero = map.eval(u)?.iter().any(|f| f.contains(&RatVector::zeros(qd.theta.dim())));
            Ok(json!({
                "quadruples": map.pieces.len(),
                "in_domain": !pieces.is_empty(),
                "pieces": pieces,
                "contains_zero": contains_zero,
                "decomposition": decomposition_json(&map.decomposition),
            }))
        }
        Command::D2dom => {
            let qd = query(doc, opts)?;
            let z = need(&qd.point, "point")?;
            let v = need(&qd.subgradient, "subgradient")?;
            let dec = qd.theta.decompose_subgradient(z, v)?;
            let dom = domain_subspace(&qd.theta, z, &dec)?;
            Ok(json!({
                "subspace": vecs_json(&dom.subspace.span_gens),
                "dimension": dom.subspace.span_gens.len(),
                "gamma1": dom.gamma1,
                "gamma2": dom.gamma2,
                "normals": vecs_json(&dom.normals),
                "decomposition": decomposition_json(&dec),
            }))
        }
        Command::D2zero => {
            let qd = query(doc, opts)?;
            let z = need(&qd.point, "point")?;
            let v = need(&qd.subgradient, "subgradient")?;
            let value = value_at_zero(&qd.theta, z, v)?;
            Ok(json!({
                "value": vecs_json(&value.span_gens),
                "dimension": value.span_gens.len(),
            }))
        }
        Command::Reduce => {
            let qd = query(doc, opts)?;
            let z = need(&qd.point, "point")?;
            let red = build_reduction(&qd.theta, z)?;
            let verified = verify_reduction(&qd.theta, &red, REDUCTION_SAMPLES)?;
            Ok(json!({
                "s": red.s,
                "shift": vec_json(&red.shift),
                "a": mat_json(&red.a),
                "b": mat_json(&red.b),
                "ybar_tail": vec_json(&red.ybar_tail),
                "reduced": theta_json(&red.reduced),
                "radius": q(&red.radius),
                "samples": REDUCTION_SAMPLES,
                "verified": verified,
            }))
        }
        Command::Soqc => {
            let p = composite(doc)?;
            let soqc = soqc_check(p)?;
            let red = build_reduction(&p.theta, &p.zbar)?;
            Ok(json!({"soqc": soqc, "nd": nd_check(p, &red)?}))
        }
        Command::Stability => Ok(stability_json(&full_stability_verdict(composite(doc)?)?)),
        Command::Chainrule => {
            let p = composite(doc)?;
            let u = match (&opts.direction, doc) {
                (Some(u), _) => u,
                (None, ProblemDocument::Composite { direction: Some(u), .. }) => u,
                _ => return Err(Error::InvalidInput("this command needs a direction".into())),
            };
            check_dim("direction", p.n, u.dim())?;
            let pieces = chain_rule_eval(p, u)?;
            Ok(json!({
                "pieces": pieces.iter().map(|c| json!({"shift": vec_json(&c.shift), "set": gens_json(&c.set)})).collect::<Vec<_>>(),
            }))
        }
        Command::Minimax => {
            let ProblemDocument::Minimax(mp) = doc else {
                return Err(Error::InvalidInput(format!("minimax needs a minimax document, got {}", doc.kind())));
            };
            let r = minimax_verdict(mp)?;
            Ok(json!({
                "nd": r.nd,
                "lambda": vec_json(&r.kkt.lambda),
                "mu": vec_json(&r.kkt.mu),
                "eta": vec_json(&r.kkt.eta),
                "unique": r.kkt.unique,
                "gamma1": r.gamma1,
                "gamma2": r.gamma2,
                "subspace": vecs_json(&r.subspace),
                "hessian": mat_json(&r.hessian),
                "ssosc": ssosc_json(&r.ssosc),
                "fully_stable": r.fully_stable,
                "composite": stability_json(&r.composite),
            }))
        }
        Command::OracleCheck => oracle_check(&query(doc, opts)?, opts),
        Command::Probe => {
            let ProblemDocument::QuadraticProbe {
                instance,
                grid_radius,
                grid_count,
            } = doc
            else {
                return Err(Error::InvalidInput(format!("probe needs a quadratic-probe document, got {}", doc.kind())));
            };
            let r = full_stability_probe(instance, grid_radius, *grid_count)?;
            let certificate = full_stability_verdict(&instance.to_composite()?).ok();
            let verdict = certificate.as_ref().and_then(|c| c.fully_stable);
            let evidence = r.evidence == ProbeEvidence::FullyStable;
            Ok(json!({
                "gamma": q(&r.gamma),
                "grid_radius": q(&r.grid_radius),
                "grid_count": r.grid_count,
                "grid_points": r.grid_points,
                "base_is_unique_minimizer": r.base_is_unique_minimizer,
                "single_valued": r.single_valued,
                "multi_valued_at": vecs_json(&r.multi_valued_at),
                "infeasible_at": vecs_json(&r.infeasible_at),
                "max_ratio": q(&r.max_ratio),
                "refined_max_ratio": q(&r.refined_max_ratio),
                "lipschitz_bounded": r.lipschitz_bounded,
                "min_value": q(&r.min_value),
                "max_value": q(&r.max_value),
                "evidence": if evidence { "fully stable" } else { "not fully stable" },
                "certificate": certificate.as_ref().map(stability_json),
                "agreement": verdict.map(|v| v == evidence),
            }))
        }
    }
}

fn composite(doc: &ProblemDocument) -> Result<&crate::stability::CompositeProblemData> {
    match doc {
        ProblemDocument::Composite { data, .. } => Ok(data),
        other => Err(Error::InvalidInput(format!(
            "this command needs a composite document, got {}",
            other.kind()
        ))),
    }
}

/// Compares the second-order formula with the graph normal-cone oracle at
/// the query point, or at representatives of every stratum when no point is
/// given.
fn oracle_check(qd: &CpwlQuery, opts: &RunOptions) -> Result<Json> {
    let theta = &qd.theta;
    let m = theta.dim();
    let pieces = graph_pieces(theta, opts.max_indices)?;
    let points = match (&qd.point, &qd.subgradient) {
        (Some(z), Some(v)) => vec![(z.clone(), v.clone())],
        (None, None) => stratum_probes(theta, &pieces),
        _ => return Err(Error::InvalidInput("give both point and subgradient, or neither".into())),
    };
    let directions = match &qd.direction {
        Some(u) => vec![u.clone()],
        None => probe_directions(m, ORACLE_DIRECTIONS, opts.seed),
    };
    let mut mismatches = Vec::new();
    let mut zero_violations = Vec::new();
    let mut comparisons = 0usize;
    for (z, v) in &points {
        let map = second_order_map(theta, z, v, opts.max_indices)?;
        let cone = limiting_normal_cone_from(m, &pieces, z, v)?;
        for u in &directions {
            let formula = map.eval(u)?;
            let oracle = cone.slice(u)?;
            comparisons += 1;
            if !same_union(&formula, &oracle) {
                mismatches.push(json!({"point": vec_json(z), "subgradient": vec_json(v), "direction": vec_json(u)}));
            }
            if !oracle.is_empty() && !union_contains_origin(&oracle) {
                zero_violations.push(json!({"point": vec_json(z), "subgradient": vec_json(v), "direction": vec_json(u)}));
            }
        }
    }
    Ok(json!({
        "agreement": mismatches.is_empty(),
        "strata": pieces.len(),
        "points": points.len(),
        "directions_per_point": directions.len(),
        "comparisons": comparisons,
        "mismatches": mismatches,
        "zero_in_nonempty_values": zero_violations.is_empty(),
        "zero_violations": zero_violations,
    }))
}
