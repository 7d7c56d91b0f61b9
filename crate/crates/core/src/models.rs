//! Closed-form foliated models and perturbed controls.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::calculus::{AdaptedFrame, Bundle, Chart, EndomorphismField, MetricField, VectorField};
use crate::error::{GeomError, Result};
use crate::jet::Jet2;
use crate::linalg::JetMat;
use crate::quaternion::{self, left_matrix, right_matrix, standard_triple, Quat, ONE, UNITS};
use crate::structures::{HypercomplexTriple, QStructure};

/// Expected verdict of a check on a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    Pass,
    Fail,
    #[serde(rename = "na")]
    NotApplicable,
}

impl Expect {
    pub fn as_str(self) -> &'static str {
        match self {
            Expect::Pass => "pass",
            Expect::Fail => "fail",
            Expect::NotApplicable => "na",
        }
    }
}

impl std::str::FromStr for Expect {
    type Err = GeomError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pass" => Ok(Expect::Pass),
            "fail" => Ok(Expect::Fail),
            "na" | "n/a" => Ok(Expect::NotApplicable),
            other => Err(GeomError::InvalidArgument(format!(
                "unknown expectation {other:?} (use pass, fail or na)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerturbKind {
    /// Conjugate the basis by a leaf-dependent symmetric exponential.
    Structure,
    /// Conjugate the basis by a transversally varying symmetric exponential.
    Twist,
    /// Add a leaf-dependent `I₁` term to the twistor connection.
    Connection,
}

impl PerturbKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PerturbKind::Structure => "structure",
            PerturbKind::Twist => "twist",
            PerturbKind::Connection => "connection",
        }
    }
}

/// A built model: chart, adapted frame, quaternionic structure and metadata.
#[derive(Clone)]
pub struct Model {
    pub name: String,
    pub chart: Chart,
    pub frame: AdaptedFrame,
    pub metric: Option<MetricField>,
    pub qs: QStructure,
    /// Transversal fields commuting with the foliation modulo `L`.
    pub designated: Vec<VectorField>,
    /// Whether each `I_α` is itself constant along the leaves.
    pub basis_projectable: bool,
    /// `(ε, E-direction)`: the twistor connection gains `ε·x₀·I₁` in that direction.
    pub connection_shift: Option<(f64, usize)>,
    pub expectations: BTreeMap<String, Expect>,
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Model")
            .field("name", &self.name)
            .field("p", &self.frame.p())
            .field("q", &self.frame.q())
            .finish()
    }
}

impl Model {
    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    pub fn p(&self) -> usize {
        self.frame.p()
    }

    pub fn q(&self) -> usize {
        self.frame.q()
    }

    pub fn expect(&self, id: &str) -> Expect {
        self.expectations.get(id).copied().unwrap_or(Expect::Pass)
    }

    fn set_expect(&mut self, entries: &[(&str, Expect)]) {
        for (k, v) in entries {
            self.expectations.insert((*k).to_string(), *v);
        }
    }
}

fn std_qstructure(q: usize) -> QStructure {
    QStructure::standard(HypercomplexTriple::constant(standard_triple(q)).expect("standard triple"))
}

/// `R^{p+4q}` with leaf coordinates first and the standard constant triple.
pub fn build_flat(p: usize, q: usize) -> Result<Model> {
    if p == 0 || q == 0 {
        return Err(GeomError::InvalidArgument(format!(
            "flat model needs p ≥ 1 and q ≥ 1, got p={p}, q={q}"
        )));
    }
    let n = p + 4 * q;
    let leaf = (0..p).map(|i| VectorField::coordinate(n, i)).collect();
    let tr: Vec<VectorField> = (p..n).map(|i| VectorField::coordinate(n, i)).collect();
    Ok(Model {
        name: format!("flat(p={p},q={q})"),
        chart: Chart::cube(n, 1.0),
        frame: AdaptedFrame::new(leaf, tr.clone())?,
        metric: Some(MetricField::euclidean(n)),
        qs: std_qstructure(q),
        designated: tr,
        basis_projectable: true,
        connection_shift: None,
        expectations: BTreeMap::new(),
    })
}

// ---------------------------------------------------------------------------
// Quaternion helpers on jets. A point of H² is `(h0, h1)` with 8 components.

/// `h·c` for each quaternion block of `v`.
pub fn right_mul(v: &[Jet2], c: &Quat) -> Vec<Jet2> {
    block_apply(v, &right_matrix(c))
}

/// `c·h` for each quaternion block of `v`.
pub fn left_mul(v: &[Jet2], c: &Quat) -> Vec<Jet2> {
    block_apply(v, &left_matrix(c))
}

fn block_apply(v: &[Jet2], m: &[[f64; 4]; 4]) -> Vec<Jet2> {
    let mut out = vec![Jet2::zero(); v.len()];
    for b in 0..v.len() / 4 {
        for i in 0..4 {
            for j in 0..4 {
                if m[i][j] != 0.0 {
                    out[4 * b + i] += &v[4 * b + j].scale(m[i][j]);
                }
            }
        }
    }
    out
}

fn dot(a: &[Jet2], b: &[Jet2]) -> Jet2 {
    let mut acc = Jet2::zero();
    for (x, y) in a.iter().zip(b) {
        acc += &(x * y);
    }
    acc
}

/// Orthogonal projection of `v` off the quaternionic line `x·H`.
pub fn project_off_line(x: &[Jet2], v: &[Jet2]) -> Vec<Jet2> {
    let r2 = dot(x, x).recip();
    let mut out = v.to_vec();
    for u in [ONE, UNITS[0], UNITS[1], UNITS[2]] {
        let xu = right_mul(x, &u);
        let c = &dot(v, &xu) * &r2;
        for (o, w) in out.iter_mut().zip(&xu) {
            *o -= &(&c * w);
        }
    }
    out
}

/// `M_c(h0, h1) = (−c̄·h1, c·h0)`, a left-linear map commuting with right
/// multiplications.
pub fn m_c(x: &[Jet2], c: &Quat) -> Vec<Jet2> {
    let (h0, h1) = x.split_at(4);
    let mut out = left_mul(h1, &quaternion::conj(c));
    for o in out.iter_mut() {
        *o = -&*o;
    }
    out.extend(left_mul(h0, c));
    out
}

// ---------------------------------------------------------------------------
// S⁷ ⊂ H², graph chart over the hemisphere x₀ > 0.

/// Half-width of the S⁷ chart box.
pub const S7_BOX: f64 = 0.3;

/// Ambient point of S⁷ for chart coordinates `y ∈ R⁷`.
pub fn s7_embed(y: &[Jet2]) -> Vec<Jet2> {
    let mut r2 = Jet2::zero();
    for c in y {
        r2 += &(c * c);
    }
    let mut x = vec![(Jet2::constant(1.0) - r2).sqrt()];
    x.extend_from_slice(y);
    x
}

/// Chart components of an ambient tangent vector: drop the 0-th entry.
fn s7_chart(v: Vec<Jet2>) -> Vec<Jet2> {
    v[1..].to_vec()
}

/// `ξ^α = x·q_α` on S⁷.
pub fn s7_xi(alpha: usize) -> VectorField {
    VectorField::from_fn(7, move |y| s7_chart(right_mul(&s7_embed(y), &UNITS[alpha])))
}

/// The round metric in the graph chart.
pub fn s7_metric() -> MetricField {
    MetricField::from_fn(7, |y| {
        let mut r2 = Jet2::zero();
        for c in y {
            r2 += &(c * c);
        }
        let w = (Jet2::constant(1.0) - r2).recip();
        let mut g = JetMat::identity(7);
        for i in 0..7 {
            for j in 0..7 {
                let e = g.get(i, j) + &(&(&y[i] * &y[j]) * &w);
                g.set(i, j, e);
            }
        }
        g
    })
}

/// `Φ^α(V) = V·q_α − ⟨V·q_α, x⟩x` acting on chart vectors of S⁷.
pub fn s7_phi(alpha: usize) -> EndomorphismField {
    EndomorphismField::from_fn(7, Bundle::Tangent, move |y| {
        let x = s7_embed(y);
        let mut m = JetMat::zeros(7, 7);
        for col in 0..7 {
            // Ambient lift of the chart vector e_col: first entry −y_col/x₀.
            let mut v = vec![Jet2::zero(); 8];
            v[0] = -(&y[col] * &x[0].recip());
            v[col + 1] = Jet2::constant(1.0);
            let w = right_mul(&v, &UNITS[alpha]);
            let c = dot(&w, &x);
            for row in 0..7 {
                let e = &w[row + 1] - &(&c * &x[row + 1]);
                m.set(row, col, e);
            }
        }
        m
    })
}

fn s7_like(
    name: &str,
    dim: usize,
    embed: fn(&[Jet2]) -> Vec<Jet2>,
    chart_of: fn(Vec<Jet2>) -> Vec<Jet2>,
    leaf: Vec<VectorField>,
    chart: Chart,
    metric: MetricField,
) -> Result<Model> {
    let tr: Vec<VectorField> = (0..4)
        .map(|k| {
            VectorField::from_fn(dim, move |y| {
                let x = embed(y);
                let mut e = vec![Jet2::zero(); 8];
                e[4 + k] = Jet2::constant(1.0);
                chart_of(project_off_line(&x, &e))
            })
        })
        .collect();
    let designated = [ONE, UNITS[0], UNITS[1], UNITS[2]]
        .into_iter()
        .map(|c| {
            VectorField::from_fn(dim, move |y| {
                let x = embed(y);
                chart_of(project_off_line(&x, &m_c(&x, &c)))
            })
        })
        .collect();
    Ok(Model {
        name: name.to_string(),
        chart,
        frame: AdaptedFrame::new(leaf, tr)?,
        metric: Some(metric),
        qs: std_qstructure(1),
        designated,
        basis_projectable: false,
        connection_shift: None,
        expectations: BTreeMap::new(),
    })
}

/// The 3-Sasakian S⁷ with the foliation spanned by `ξ¹, ξ², ξ³`.
pub fn build_s7_sasakian() -> Result<Model> {
    let mut m = s7_like(
        "s7_sasakian",
        7,
        s7_embed,
        s7_chart,
        (0..3).map(s7_xi).collect(),
        Chart::cube(7, S7_BOX),
        s7_metric(),
    )?;
    m.set_expect(&[
        ("h-projectable", Expect::Fail),
        ("h-integrable", Expect::NotApplicable),
        ("connection-projectable", Expect::NotApplicable),
    ]);
    Ok(m)
}

// ---------------------------------------------------------------------------
// Locally conformal hyperkähler H² − {0} with g = |x|⁻² g₀.

fn identity_embed(y: &[Jet2]) -> Vec<Jet2> {
    y.to_vec()
}

fn identity_chart(v: Vec<Jet2>) -> Vec<Jet2> {
    v
}

/// The Lee field `ξ = x` and `I_α ξ = −x·q_α`.
pub fn lchk_leaf_fields() -> Vec<VectorField> {
    let mut leaf = vec![VectorField::from_fn(8, |x| x.to_vec())];
    for a in 0..3 {
        leaf.push(VectorField::from_fn(8, move |x| {
            right_mul(x, &UNITS[a]).iter().map(|c| -c).collect()
        }));
    }
    leaf
}

pub fn lchk_metric() -> MetricField {
    MetricField::from_fn(8, |x| {
        let w = dot(x, x).recip();
        JetMat::identity(8).scale_jet(&w)
    })
}

pub fn build_lchk_h2() -> Result<Model> {
    let mut lo = vec![0.6, -0.4, -0.4, -0.4];
    let mut hi = vec![1.4, 0.4, 0.4, 0.4];
    lo.extend([-0.5; 4]);
    hi.extend([0.5; 4]);
    let mut m = s7_like(
        "lchk_h2",
        8,
        identity_embed,
        identity_chart,
        lchk_leaf_fields(),
        Chart::new(lo, hi),
        lchk_metric(),
    )?;
    m.set_expect(&[
        ("h-projectable", Expect::Fail),
        ("h-integrable", Expect::NotApplicable),
        ("connection-projectable", Expect::NotApplicable),
    ]);
    Ok(m)
}

// ---------------------------------------------------------------------------
// Perturbations.

/// `exp(t·(E₀₁ + E₁₀))` embedded in the identity of rank `r`.
fn sym_exp(t: &Jet2, r: usize) -> JetMat {
    let mut g = JetMat::identity(r);
    let (c, s) = (t.cosh(), t.sinh());
    g.set(0, 0, c.clone());
    g.set(1, 1, c);
    g.set(0, 1, s.clone());
    g.set(1, 0, s);
    g
}

fn conjugate_structure(qs: &QStructure, coord: usize, eps: f64) -> QStructure {
    let r = qs.rank();
    let g = EndomorphismField::from_fn(r, Bundle::Transversal, move |x| sym_exp(&x[coord].scale(eps), r));
    let basis = HypercomplexTriple {
        i: [0, 1, 2].map(|a| qs.basis.i[a].conjugate(&g)),
    };
    QStructure {
        basis,
        gauge: g.mul(&qs.gauge),
    }
}

/// A perturbed control derived from `base`.
pub fn perturb(base: &Model, kind: PerturbKind, eps: f64) -> Result<Model> {
    if !(eps >= 0.0) || eps > 1.0 {
        return Err(GeomError::InvalidArgument(format!(
            "perturbation size must lie in [0, 1], got {eps}"
        )));
    }
    let mut m = base.clone();
    m.name = format!("perturbed({},{},eps={eps})", base.name, kind.as_str());
    if eps == 0.0 {
        return Ok(m);
    }
    match kind {
        PerturbKind::Structure => {
            m.qs = conjugate_structure(&base.qs, 0, eps);
            m.basis_projectable = false;
            m.set_expect(&[
                ("h-projectable", Expect::Fail),
                ("q-projectable", Expect::Fail),
                ("h-integrable", Expect::NotApplicable),
                ("q-integrable", Expect::NotApplicable),
                ("bott-oproiu-torsion", Expect::NotApplicable),
                ("connection-projectable", Expect::NotApplicable),
                ("j1-projectable", Expect::NotApplicable),
                ("j2-projectable", Expect::NotApplicable),
                ("j1-j2-projectable", Expect::NotApplicable),
                ("j1-torsion-integrability", Expect::NotApplicable),
                ("j1-curvature-integrability", Expect::NotApplicable),
            ]);
        }
        PerturbKind::Twist => {
            if !base.name.starts_with("flat") {
                return Err(GeomError::InvalidArgument(
                    "twist perturbation needs a flat base".into(),
                ));
            }
            // A transversal coordinate other than the first two E-directions.
            let coord = base.p() + 2;
            m.qs = conjugate_structure(&base.qs, coord, eps);
            let q2 = if base.q() >= 2 { Expect::Fail } else { Expect::Pass };
            m.set_expect(&[
                ("h-integrable", Expect::Fail),
                ("q-integrable", q2),
                ("j1-torsion-integrability", q2),
                ("j1-curvature-integrability", Expect::Fail),
            ]);
        }
        PerturbKind::Connection => {
            m.connection_shift = Some((eps, 0));
            m.set_expect(&[
                ("connection-projectable", Expect::Fail),
                ("j1-projectable", Expect::Fail),
                ("j2-projectable", Expect::Fail),
                ("j1-j2-projectable", Expect::Fail),
                ("j1-torsion-integrability", Expect::Fail),
            ]);
        }
    }
    Ok(m)
}

/// Rewrites `flat(p, q)` as `flat,p=..,q=..`.
fn positional(name: &str, rest: &str) -> Result<String> {
    let args = rest
        .strip_suffix(')')
        .ok_or_else(|| GeomError::InvalidArgument(format!("unclosed parenthesis in model {name:?}")))?;
    let keys: &[&str] = match name {
        "flat" => &["p", "q"],
        _ => &[],
    };
    let vals: Vec<&str> = args.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
    if vals.len() > keys.len() {
        return Err(GeomError::InvalidArgument(format!(
            "model {name} takes at most {} positional parameters",
            keys.len()
        )));
    }
    let mut out = name.to_string();
    for (k, v) in keys.iter().zip(vals) {
        out += &format!(",{k}={v}");
    }
    Ok(out)
}

/// Parses `name[,key=value...]` or `flat(p,q)`.
pub fn build_model(spec: &str) -> Result<Model> {
    if let Some((name, rest)) = spec.trim().split_once('(') {
        return build_model(&positional(name.trim(), rest)?);
    }
    let mut parts = spec.split(',').map(str::trim);
    let name = parts.next().unwrap_or_default();
    let mut params = BTreeMap::new();
    for kv in parts {
        let (k, v) = kv.split_once('=').ok_or_else(|| {
            GeomError::InvalidArgument(format!("model parameter {kv:?} is not key=value"))
        })?;
        params.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get_usize = |k: &str, d: usize| -> Result<usize> {
        params.get(k).map_or(Ok(d), |v| {
            v.parse()
                .map_err(|_| GeomError::InvalidArgument(format!("{k}={v} is not an integer")))
        })
    };
    let known: &[&str] = match name {
        "flat" => &["p", "q"],
        "s7_sasakian" | "s7" | "lchk_h2" | "lchk" => &[],
        "perturbed" => &["base", "kind", "eps", "p", "q"],
        _ => return Err(GeomError::InvalidArgument(format!("unknown model {name:?}"))),
    };
    if let Some(k) = params.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(GeomError::InvalidArgument(format!(
            "model {name} has no parameter {k:?}"
        )));
    }
    match name {
        "flat" => build_flat(get_usize("p", 1)?, get_usize("q", 1)?),
        "s7_sasakian" | "s7" => build_s7_sasakian(),
        "lchk_h2" | "lchk" => build_lchk_h2(),
        _ => {
            let kind = match params.get("kind").map(String::as_str).unwrap_or("structure") {
                "structure" => PerturbKind::Structure,
                "twist" => PerturbKind::Twist,
                "connection" => PerturbKind::Connection,
                other => {
                    return Err(GeomError::InvalidArgument(format!(
                        "unknown perturbation kind {other:?}"
                    )))
                }
            };
            let eps: f64 = params.get("eps").map_or(Ok(0.1), |v| {
                v.parse()
                    .map_err(|_| GeomError::InvalidArgument(format!("eps={v} is not a number")))
            })?;
            let default_q = if kind == PerturbKind::Twist { 2 } else { 1 };
            let base = match params.get("base").map(String::as_str).unwrap_or("flat") {
                "flat" => build_flat(get_usize("p", 1)?, get_usize("q", default_q)?)?,
                "s7_sasakian" | "s7" => build_s7_sasakian()?,
                "lchk_h2" | "lchk" => build_lchk_h2()?,
                other => {
                    return Err(GeomError::InvalidArgument(format!("unknown base model {other:?}")))
                }
            };
            perturb(&base, kind, eps)
        }
    }
}

impl Model {
    /// `D = bott_oproiu(oproiu(default_bott))`, plus the control shift if any.
    pub fn twistor_connection(&self) -> crate::connections::BottConnection {
        let d = self.twistor_connection_unshifted();
        match self.connection_shift {
            None => d,
            Some((eps, dir)) => d.shifted(format!("shifted(eps={eps})"), move |g| {
                let mut out = vec![JetMat::zeros(g.rank(), g.rank()); g.n()];
                let x0 = g.coords()[0].truncate(g.order());
                out[g.p() + dir] = g.basis_k(0).scale_jet(&x0.scale(eps));
                Ok(out)
            }),
        }
    }

    /// `bott_oproiu(oproiu(default_bott))` with zero Oproiu data.
    pub fn twistor_connection_unshifted(&self) -> crate::connections::BottConnection {
        use crate::connections::{bott_oproiu, default_bott, oproiu, OproiuData};
        bott_oproiu(oproiu(default_bott(), OproiuData::default()))
    }

    /// The Bott-Obata connection, with the control shift if any.
    pub fn obata_connection(&self) -> crate::connections::BottConnection {
        let d = crate::connections::bott_obata();
        match self.connection_shift {
            None => d,
            Some((eps, dir)) => d.shifted(format!("shifted(eps={eps})"), move |g| {
                let mut out = vec![JetMat::zeros(g.rank(), g.rank()); g.n()];
                let x0 = g.coords()[0].truncate(g.order());
                out[g.p() + dir] = g.basis_k(0).scale_jet(&x0.scale(eps));
                Ok(out)
            }),
        }
    }
}
