//! Problem documents: JSON text with rationals as `"p"` or `"p/q"` strings.

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::cpwl_core::CpwlFunction;
use crate::error::{check_dim, Error, Result};
use crate::minimax::MinimaxProblemData;
use crate::oracle::{Quadratic, QuadraticProblemInstance};
use crate::ratlin::{format_rational, parse_rational, rat, RatMatrix, RatVector, Rational};
use crate::stability::CompositeProblemData;

/// A rational in its string form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Q(pub Rational);

impl Serialize for Q {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for Q {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map(Q).map_err(de::Error::custom)
    }
}

type Vector = Vec<Q>;
type Matrix = Vec<Vec<Q>>;

fn vector_doc(v: &RatVector) -> Vector {
    v.iter().cloned().map(Q).collect()
}

fn matrix_doc(m: &RatMatrix) -> Matrix {
    (0..m.rows()).map(|i| vector_doc(&m.row(i))).collect()
}

fn vector(v: &[Q], len: usize, field: &str) -> Result<RatVector> {
    check_dim(field, len, v.len())?;
    Ok(v.iter().map(|q| q.0.clone()).collect())
}

fn matrix(rows: &[Vec<Q>], r: usize, c: usize, field: &str) -> Result<RatMatrix> {
    check_dim(&format!("{field} rows"), r, rows.len())?;
    let rows = rows
        .iter()
        .enumerate()
        .map(|(i, row)| vector(row, c, &format!("{field}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    Ok(RatMatrix::from_rows(&rows, c))
}

fn opt_vector(v: &Option<Vector>, len: usize, field: &str) -> Result<RatVector> {
    v.as_ref()
        .map_or_else(|| Ok(RatVector::zeros(len)), |v| vector(v, len, field))
}

fn opt_matrix(m: &Option<Matrix>, r: usize, c: usize, field: &str) -> Result<RatMatrix> {
    m.as_ref()
        .map_or_else(|| Ok(RatMatrix::zeros(r, c)), |m| matrix(m, r, c, field))
}

fn opt_matrices(ms: &Option<Vec<Matrix>>, count: usize, r: usize, c: usize, field: &str) -> Result<Vec<RatMatrix>> {
    match ms {
        None => Ok(vec![RatMatrix::zeros(r, c); count]),
        Some(ms) => {
            check_dim(&format!("{field} count"), count, ms.len())?;
            ms.iter()
                .enumerate()
                .map(|(k, m)| matrix(m, r, c, &format!("{field}[{k}]")))
                .collect()
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PieceDoc {
    a: Vector,
    alpha: Q,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RowDoc {
    d: Vector,
    beta: Q,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThetaDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    pieces: Vec<PieceDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    domain: Vec<RowDoc>,
}

impl ThetaDoc {
    fn build(&self) -> Result<CpwlFunction> {
        let m = match (self.dim, self.pieces.first()) {
            (Some(m), _) => m,
            (None, Some(p)) => p.a.len(),
            (None, None) => return Err(Error::InvalidInput("theta.pieces is empty".into())),
        };
        let pieces = self
            .pieces
            .iter()
            .enumerate()
            .map(|(i, p)| Ok((vector(&p.a, m, &format!("theta.pieces[{i}].a"))?, p.alpha.0.clone())))
            .collect::<Result<Vec<_>>>()?;
        let rows = self
            .domain
            .iter()
            .enumerate()
            .map(|(t, r)| Ok((vector(&r.d, m, &format!("theta.domain[{t}].d"))?, r.beta.0.clone())))
            .collect::<Result<Vec<_>>>()?;
        CpwlFunction::new(m, pieces, rows)
    }

    fn from(theta: &CpwlFunction) -> Self {
        ThetaDoc {
            dim: Some(theta.dim()),
            pieces: theta
                .pieces()
                .iter()
                .map(|p| PieceDoc {
                    a: vector_doc(&p.slope),
                    alpha: Q(p.offset.clone()),
                })
                .collect(),
            domain: (0..theta.num_rows())
                .map(|t| RowDoc {
                    d: vector_doc(theta.row_normal(t)),
                    beta: Q(theta.row_bound(t).clone()),
                })
                .collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryDoc {
    kind: String,
    theta: ThetaDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    point: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subgradient: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    direction: Option<Vector>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompositeDoc {
    kind: String,
    theta: ThetaDoc,
    n: usize,
    #[serde(default)]
    d: usize,
    #[serde(default)]
    grad_x_phi0: Option<Vector>,
    #[serde(default)]
    grad_w_phi0: Option<Vector>,
    jx: Matrix,
    #[serde(default)]
    jw: Option<Matrix>,
    #[serde(default)]
    hxx_phi: Option<Vec<Matrix>>,
    #[serde(default)]
    hxw_phi: Option<Vec<Matrix>>,
    #[serde(default)]
    hxx_phi0: Option<Matrix>,
    #[serde(default)]
    hxw_phi0: Option<Matrix>,
    zbar: Vector,
    vbar: Vector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    direction: Option<Vector>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SmoothDoc {
    grad_x: Vector,
    #[serde(default)]
    grad_w: Option<Vector>,
    #[serde(default)]
    hxx: Option<Matrix>,
    #[serde(default)]
    hxw: Option<Matrix>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ZRowDoc {
    c: Vector,
    tau: Q,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MinimaxDoc {
    kind: String,
    n: usize,
    #[serde(default)]
    d: usize,
    objectives: Vec<SmoothDoc>,
    #[serde(default)]
    constraints: Vec<SmoothDoc>,
    #[serde(default)]
    z_rows: Vec<ZRowDoc>,
    zbar1: Vector,
    #[serde(default)]
    zbar2: Vector,
    vbar: Vector,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadDoc {
    #[serde(default)]
    constant: Option<Q>,
    linear: Vector,
    #[serde(default)]
    hessian: Option<Matrix>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbeDoc {
    kind: String,
    n: usize,
    #[serde(default)]
    d: usize,
    theta: ThetaDoc,
    phi0: QuadDoc,
    phi: Vec<QuadDoc>,
    xbar: Vector,
    #[serde(default)]
    wbar: Vector,
    vbar: Vector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<Q>,
    #[serde(default)]
    grid_radius: Option<Q>,
    #[serde(default)]
    grid_count: Option<usize>,
}

/// A point query on a CPWL function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CpwlQuery {
    pub theta: CpwlFunction,
    pub point: Option<RatVector>,
    pub subgradient: Option<RatVector>,
    pub direction: Option<RatVector>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProblemDocument {
    CpwlQuery(CpwlQuery),
    Composite {
        data: CompositeProblemData,
        direction: Option<RatVector>,
    },
    Minimax(MinimaxProblemData),
    QuadraticProbe {
        instance: QuadraticProblemInstance,
        grid_radius: Rational,
        grid_count: usize,
    },
}

pub const DEFAULT_GRID_COUNT: usize = 9;

pub fn default_grid_radius() -> Rational {
    rat(1, 4)
}

impl ProblemDocument {
    pub fn kind(&self) -> &'static str {
        match self {
            ProblemDocument::CpwlQuery(_) => "cpwl-query",
            ProblemDocument::Composite { .. } => "composite",
            ProblemDocument::Minimax(_) => "minimax",
            ProblemDocument::QuadraticProbe { .. } => "quadratic-probe",
        }
    }
}

fn syntax(e: serde_json::Error) -> Error {
    Error::InvalidInput(e.to_string())
}

/// Parses a document. A bare function object (with `pieces` and no `kind`)
/// is read as a `cpwl-query` without query data.
pub fn parse(text: &str) -> Result<ProblemDocument> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(syntax)?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::InvalidInput("document must be a JSON object".into()))?;
    let kind = match obj.get("kind") {
        None if obj.contains_key("pieces") => {
            let theta: ThetaDoc = serde_json::from_str(text).map_err(syntax)?;
            return Ok(ProblemDocument::CpwlQuery(CpwlQuery {
                theta: theta.build()?,
                point: None,
                subgradient: None,
                direction: None,
            }));
        }
        None => return Err(Error::InvalidInput("missing field `kind`".into())),
        Some(k) => k
            .as_str()
            .ok_or_else(|| Error::InvalidInput("field `kind` must be a string".into()))?,
    };
    match kind {
        "cpwl-query" => parse_query(serde_json::from_str(text).map_err(syntax)?),
        "composite" => parse_composite(serde_json::from_str(text).map_err(syntax)?),
        "minimax" => parse_minimax(serde_json::from_str(text).map_err(syntax)?),
        "quadratic-probe" => parse_probe(serde_json::from_str(text).map_err(syntax)?),
        other => Err(Error::InvalidInput(format!(
            "unknown kind {other:?}, expected one of cpwl-query, composite, minimax, quadratic-probe"
        ))),
    }
}

fn parse_query(doc: QueryDoc) -> Result<ProblemDocument> {
    let theta = doc.theta.build()?;
    let m = theta.dim();
    let opt = |v: &Option<Vector>, f: &str| v.as_ref().map(|v| vector(v, m, f)).transpose();
    Ok(ProblemDocument::CpwlQuery(CpwlQuery {
        point: opt(&doc.point, "point")?,
        subgradient: opt(&doc.subgradient, "subgradient")?,
        direction: opt(&doc.direction, "direction")?,
        theta,
    }))
}

fn parse_composite(doc: CompositeDoc) -> Result<ProblemDocument> {
    let theta = doc.theta.build()?;
    let (m, n, d) = (theta.dim(), doc.n, doc.d);
    let data = CompositeProblemData {
        n,
        d,
        grad_x_phi0: opt_vector(&doc.grad_x_phi0, n, "grad_x_phi0")?,
        grad_w_phi0: opt_vector(&doc.grad_w_phi0, d, "grad_w_phi0")?,
        jx: matrix(&doc.jx, m, n, "jx")?,
        jw: opt_matrix(&doc.jw, m, d, "jw")?,
        hxx_phi: opt_matrices(&doc.hxx_phi, m, n, n, "hxx_phi")?,
        hxw_phi: opt_matrices(&doc.hxw_phi, m, n, d, "hxw_phi")?,
        hxx_phi0: opt_matrix(&doc.hxx_phi0, n, n, "hxx_phi0")?,
        hxw_phi0: opt_matrix(&doc.hxw_phi0, n, d, "hxw_phi0")?,
        zbar: vector(&doc.zbar, m, "zbar")?,
        vbar: vector(&doc.vbar, n, "vbar")?,
        theta,
    };
    data.validate()?;
    let direction = doc.direction.as_ref().map(|u| vector(u, n, "direction")).transpose()?;
    Ok(ProblemDocument::Composite { data, direction })
}

fn parse_minimax(doc: MinimaxDoc) -> Result<ProblemDocument> {
    let (n, d) = (doc.n, doc.d);
    let r = doc.constraints.len();
    let mut mp = MinimaxProblemData {
        n,
        d,
        grad_x_phi: Vec::new(),
        grad_w_phi: Vec::new(),
        hxx_phi: Vec::new(),
        hxw_phi: Vec::new(),
        grad_x_zeta: Vec::new(),
        grad_w_zeta: Vec::new(),
        hxx_zeta: Vec::new(),
        hxw_zeta: Vec::new(),
        z_rows: Vec::new(),
        zbar1: vector(&doc.zbar1, doc.objectives.len(), "zbar1")?,
        zbar2: vector(&doc.zbar2, r, "zbar2")?,
        vbar: vector(&doc.vbar, n, "vbar")?,
    };
    for (k, s) in doc.objectives.iter().enumerate() {
        let f = format!("objectives[{k}]");
        mp.grad_x_phi.push(vector(&s.grad_x, n, &format!("{f}.grad_x"))?);
        mp.grad_w_phi.push(opt_vector(&s.grad_w, d, &format!("{f}.grad_w"))?);
        mp.hxx_phi.push(opt_matrix(&s.hxx, n, n, &format!("{f}.hxx"))?);
        mp.hxw_phi.push(opt_matrix(&s.hxw, n, d, &format!("{f}.hxw"))?);
    }
    for (k, s) in doc.constraints.iter().enumerate() {
        let f = format!("constraints[{k}]");
        mp.grad_x_zeta.push(vector(&s.grad_x, n, &format!("{f}.grad_x"))?);
        mp.grad_w_zeta.push(opt_vector(&s.grad_w, d, &format!("{f}.grad_w"))?);
        mp.hxx_zeta.push(opt_matrix(&s.hxx, n, n, &format!("{f}.hxx"))?);
        mp.hxw_zeta.push(opt_matrix(&s.hxw, n, d, &format!("{f}.hxw"))?);
    }
    for (t, row) in doc.z_rows.iter().enumerate() {
        mp.z_rows.push((vector(&row.c, r, &format!("z_rows[{t}].c"))?, row.tau.0.clone()));
    }
    mp.validate()?;
    Ok(ProblemDocument::Minimax(mp))
}

fn parse_probe(doc: ProbeDoc) -> Result<ProblemDocument> {
    let (n, d) = (doc.n, doc.d);
    let quad = |q: &QuadDoc, f: &str| -> Result<Quadratic> {
        Ok(Quadratic {
            constant: q.constant.as_ref().map_or_else(Rational::default, |c| c.0.clone()),
            linear: vector(&q.linear, n + d, &format!("{f}.linear"))?,
            hessian: opt_matrix(&q.hessian, n + d, n + d, &format!("{f}.hessian"))?,
        })
    };
    let instance = QuadraticProblemInstance {
        n,
        d,
        theta: doc.theta.build()?,
        phi0: quad(&doc.phi0, "phi0")?,
        phi: doc
            .phi
            .iter()
            .enumerate()
            .map(|(k, q)| quad(q, &format!("phi[{k}]")))
            .collect::<Result<_>>()?,
        xbar: vector(&doc.xbar, n, "xbar")?,
        wbar: vector(&doc.wbar, d, "wbar")?,
        vbar: vector(&doc.vbar, n, "vbar")?,
        gamma: doc.gamma.map(|g| g.0),
    };
    instance.validate()?;
    Ok(ProblemDocument::QuadraticProbe {
        instance,
        grid_radius: doc.grid_radius.map_or_else(default_grid_radius, |g| g.0),
        grid_count: doc.grid_count.unwrap_or(DEFAULT_GRID_COUNT),
    })
}

fn smooth_doc(gx: &RatVector, gw: &RatVector, hxx: &RatMatrix, hxw: &RatMatrix) -> SmoothDoc {
    SmoothDoc {
        grad_x: vector_doc(gx),
        grad_w: Some(vector_doc(gw)),
        hxx: Some(matrix_doc(hxx)),
        hxw: Some(matrix_doc(hxw)),
    }
}

fn quad_doc(q: &Quadratic) -> QuadDoc {
    QuadDoc {
        constant: Some(Q(q.constant.clone())),
        linear: vector_doc(&q.linear),
        hessian: Some(matrix_doc(&q.hessian)),
    }
}

/// Canonical JSON form of a document: every optional field written out.
pub fn to_value(doc: &ProblemDocument) -> serde_json::Value {
    let kind = doc.kind().to_string();
    let v = match doc {
        ProblemDocument::CpwlQuery(q) => serde_json::to_value(QueryDoc {
            kind,
            theta: ThetaDoc::from(&q.theta),
            point: q.point.as_ref().map(vector_doc),
            subgradient: q.subgradient.as_ref().map(vector_doc),
            direction: q.direction.as_ref().map(vector_doc),
        }),
        ProblemDocument::Composite { data: p, direction } => serde_json::to_value(CompositeDoc {
            kind,
            theta: ThetaDoc::from(&p.theta),
            n: p.n,
            d: p.d,
            grad_x_phi0: Some(vector_doc(&p.grad_x_phi0)),
            grad_w_phi0: Some(vector_doc(&p.grad_w_phi0)),
            jx: matrix_doc(&p.jx),
            jw: Some(matrix_doc(&p.jw)),
            hxx_phi: Some(p.hxx_phi.iter().map(matrix_doc).collect()),
            hxw_phi: Some(p.hxw_phi.iter().map(matrix_doc).collect()),
            hxx_phi0: Some(matrix_doc(&p.hxx_phi0)),
            hxw_phi0: Some(matrix_doc(&p.hxw_phi0)),
            zbar: vector_doc(&p.zbar),
            vbar: vector_doc(&p.vbar),
            direction: direction.as_ref().map(vector_doc),
        }),
        ProblemDocument::Minimax(mp) => serde_json::to_value(MinimaxDoc {
            kind,
            n: mp.n,
            d: mp.d,
            objectives: (0..mp.l())
                .map(|i| smooth_doc(&mp.grad_x_phi[i], &mp.grad_w_phi[i], &mp.hxx_phi[i], &mp.hxw_phi[i]))
                .collect(),
            constraints: (0..mp.r())
                .map(|s| smooth_doc(&mp.grad_x_zeta[s], &mp.grad_w_zeta[s], &mp.hxx_zeta[s], &mp.hxw_zeta[s]))
                .collect(),
            z_rows: mp
                .z_rows
                .iter()
                .map(|(c, tau)| ZRowDoc {
                    c: vector_doc(c),
                    tau: Q(tau.clone()),
                })
                .collect(),
            zbar1: vector_doc(&mp.zbar1),
            zbar2: vector_doc(&mp.zbar2),
            vbar: vector_doc(&mp.vbar),
        }),
        ProblemDocument::QuadraticProbe {
            instance: inst,
            grid_radius,
            grid_count,
        } => serde_json::to_value(ProbeDoc {
            kind,
            n: inst.n,
            d: inst.d,
            theta: ThetaDoc::from(&inst.theta),
            phi0: quad_doc(&inst.phi0),
            phi: inst.phi.iter().map(quad_doc).collect(),
            xbar: vector_doc(&inst.xbar),
            wbar: vector_doc(&inst.wbar),
            vbar: vector_doc(&inst.vbar),
            gamma: inst.gamma.clone().map(Q),
            grid_radius: Some(Q(grid_radius.clone())),
            grid_count: Some(*grid_count),
        }),
    };
    v.expect("document types serialize infallibly")
}

pub fn serialize(doc: &ProblemDocument) -> String {
    serde_json::to_string_pretty(&to_value(doc)).expect("JSON values serialize infallibly")
}
