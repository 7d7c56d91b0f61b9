//! Check registry and the sampled verification run.
//!
//! A run draws points uniformly from the model chart with a seeded ChaCha8
//! stream, evaluates every requested residual at every point (in parallel),
//! and keeps the largest value per check. The merge is by check index, so
//! the result does not depend on the thread count.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::Point;
use crate::connections::{
    projectability_residual, q_preservation_residual, torsion, torsion_vs_tensor,
};
use crate::error::{GeomError, Result};
use crate::geometry::PointGeometry;
use crate::linalg::CONDITION_BOUND;
use crate::models::{build_model, Expect, Model};
use crate::quaternion::{random_unit, BasisRotation};
use crate::structures::{leaf_residual, structure_tensor_h, structure_tensor_q, transversal_residual};
use crate::twistor::{self, IntegrabilityPlan, TwistorPoint, J2_NEVER_INTEGRABLE};

/// Fraction of degenerate sample points above which a run aborts.
pub const MAX_DEGENERATE_FRACTION: f64 = 0.1;

const STRUCTURE_SAMPLES: usize = 8;
const ROTATION_SAMPLES: usize = 4;
const Q1_VECTORS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckInfo {
    pub id: &'static str,
    pub anchor: &'static str,
    pub summary: &'static str,
}

macro_rules! check {
    ($id:expr, $anchor:expr, $summary:expr) => {
        CheckInfo { id: $id, anchor: $anchor, summary: $summary }
    };
}

/// All numerical checks in report order.
pub const CHECKS: &[CheckInfo] = &[
    check!("frame-valid", "adapted frame", "frame invertible and L involutive"),
    check!("quaternionic-identities", "hypercomplex basis", "I_a^2 = -1 and I1 I2 = I3"),
    check!("h-projectable", "structure tensor T^H on L x E", "the basis is projectable"),
    check!("q-projectable", "structure tensor T^Q on L x E", "Q is projectable"),
    check!("h-integrable", "structure tensor T^H on E x E", "the transversal hypercomplex structure is integrable"),
    check!("q-integrable", "structure tensor T^Q on E x E", "the transversal quaternionic structure is integrable"),
    check!("bott-obata-torsion", "Bott-Obata connection", "torsion on E x E equals the projected T^H"),
    check!("bott-oproiu-torsion", "Bott-Oproiu connection", "preserves Q and torsion equals the projected T^Q"),
    check!("connection-projectable", "projectable Bott connection", "D_X Y is projectable for projectable X, Y"),
    check!("j1-projectable", "J1 projectability", "[R(X,Y),S] + [R(SX,Y),S]S = 0 for leaf Y"),
    check!("j2-projectable", "J2 projectability", "[R(X,Y),S] - [R(SX,Y),S]S = 0 for leaf Y"),
    check!("j1-j2-projectable", "induced Q-connection", "curvature forms vanish on (E, L)"),
    check!("j1-torsion-integrability", "J1 integrability, torsion part", "torsion condition on E x E"),
    check!("j1-curvature-integrability", "J1 integrability, curvature part", "curvature condition on E x E"),
];

/// Verdicts that are fixed by the theory rather than measured.
pub const STRUCTURAL: &[(&str, &str)] = &[("j2-integrability", J2_NEVER_INTEGRABLE)];

pub fn check_info(id: &str) -> Option<&'static CheckInfo> {
    CHECKS.iter().find(|c| c.id == id)
}

fn index_of(id: &str) -> usize {
    CHECKS.iter().position(|c| c.id == id).expect("registered check")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    #[serde(rename = "na")]
    NotApplicable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "na",
        }
    }

    fn matches(self, e: Expect) -> bool {
        matches!(
            (self, e),
            (Verdict::Pass, Expect::Pass)
                | (Verdict::Fail, Expect::Fail)
                | (Verdict::NotApplicable, Expect::NotApplicable)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub model: String,
    /// Check ids, or `["all"]`.
    pub checks: Vec<String>,
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool. Not part of the report.
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
    /// Overrides of the model's expected verdicts.
    pub expect: BTreeMap<String, Expect>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: "flat".into(),
            checks: vec!["all".into()],
            samples: 50,
            tol: 1e-8,
            seed: 42,
            threads: None,
            expect: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    /// Requested check ids in registry order.
    pub fn resolve_checks(&self) -> Result<Vec<&'static str>> {
        let mut want = vec![false; CHECKS.len()];
        for id in &self.checks {
            let id = normalize_id(id);
            let id = id.as_str();
            if id == "all" {
                want.iter_mut().for_each(|w| *w = true);
            } else if STRUCTURAL.iter().any(|(s, _)| *s == id) {
                continue;
            } else if let Some(i) = CHECKS.iter().position(|c| c.id == id) {
                want[i] = true;
            } else {
                return Err(GeomError::InvalidArgument(format!("unknown check {id:?}")));
            }
        }
        Ok(CHECKS.iter().zip(want).filter(|(_, w)| *w).map(|(c, _)| c.id).collect())
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(GeomError::InvalidArgument("samples must be at least 1".into()));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(GeomError::InvalidArgument(format!(
                "tolerance must be a positive number, got {}",
                self.tol
            )));
        }
        if self.threads == Some(0) {
            return Err(GeomError::InvalidArgument("threads must be at least 1".into()));
        }
        for id in self.expect.keys() {
            if check_info(&normalize_id(id)).is_none() {
                return Err(GeomError::InvalidArgument(format!(
                    "expectation for unknown check {id:?}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub id: String,
    pub paper_anchor: String,
    /// `None` when the check does not apply.
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub expected: Expect,
    pub met: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuralEntry {
    pub id: String,
    pub status: String,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub model: String,
    pub passed: usize,
    pub failed: usize,
    pub not_applicable: usize,
    pub unexpected: Vec<String>,
    pub points: usize,
    pub degenerate_points: usize,
    pub structural: Vec<StructuralEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: RunConfig,
    pub checks: Vec<CheckReport>,
    pub summary: Summary,
    pub version: String,
}

impl Report {
    pub fn all_met(&self) -> bool {
        self.summary.unexpected.is_empty()
    }

    pub fn check(&self, id: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "model {}  points {} (degenerate {})  tol {:e}  seed {}\n",
            self.summary.model,
            self.summary.points,
            self.summary.degenerate_points,
            self.config.tol,
            self.config.seed
        );
        for c in &self.checks {
            let res = c.max_residual.map_or("-".to_string(), |r| format!("{r:.3e}"));
            s += &format!(
                "{:<28} {:<4} {:>10}  expected {:<4}{}\n",
                c.id,
                c.verdict.as_str(),
                res,
                c.expected.as_str(),
                if c.met { "" } else { "  UNEXPECTED" }
            );
        }
        for e in &self.summary.structural {
            s += &format!("{:<28} {}  ({})\n", e.id, e.status, e.note);
        }
        s += &format!(
            "{} pass, {} fail, {} n/a, {} unexpected\n",
            self.summary.passed,
            self.summary.failed,
            self.summary.not_applicable,
            self.summary.unexpected.len()
        );
        s
    }
}

/// Samples shared by all points of a run.
struct Shared {
    structures: Vec<[f64; 3]>,
    rotations: Vec<BasisRotation>,
    vectors: Vec<nalgebra::DVector<f64>>,
}

enum PointOutcome {
    Degenerate,
    Values(Vec<Option<f64>>),
}

/// Points of a run: `samples` uniform draws from the chart.
pub fn sample_points(model: &Model, samples: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let u: Vec<f64> = (0..model.dim()).map(|_| rng.random::<f64>()).collect();
            model.chart.from_unit(&u)
        })
        .collect()
}

fn shared_samples(seed: u64, q: usize) -> Shared {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let structures = (0..STRUCTURE_SAMPLES).map(|_| random_unit::<_, 3>(&mut rng)).collect();
    let rotations = (0..ROTATION_SAMPLES).map(|_| BasisRotation::random(&mut rng)).collect();
    let vectors = if q == 1 {
        (0..Q1_VECTORS)
            .map(|_| nalgebra::DVector::from_vec(random_unit::<_, 4>(&mut rng).to_vec()))
            .collect()
    } else {
        Vec::new()
    };
    Shared { structures, rotations, vectors }
}

/// Accepts `h_projectable` for `h-projectable`.
pub fn normalize_id(id: &str) -> String {
    id.trim().to_ascii_lowercase().replace('_', "-")
}

/// Checks whose applicability depends on another check's verdict.
fn prerequisite(id: &str) -> Option<&'static str> {
    match id {
        "h-integrable" => Some("h-projectable"),
        "q-integrable"
        | "bott-oproiu-torsion"
        | "j1-projectable"
        | "j2-projectable"
        | "j1-j2-projectable"
        | "j1-torsion-integrability"
        | "j1-curvature-integrability" => Some("q-projectable"),
        _ => None,
    }
}

fn is_degenerate(e: &GeomError) -> bool {
    matches!(e, GeomError::Degenerate { .. })
}

fn evaluate_point(model: &Model, p: &Point, want: &[bool], sh: &Shared) -> Result<PointOutcome> {
    let cond = match model.frame.condition(p) {
        Ok(c) => c,
        Err(e) if is_degenerate(&e) => return Ok(PointOutcome::Degenerate),
        Err(e) => return Err(e),
    };
    if !(cond < CONDITION_BOUND) {
        return Ok(PointOutcome::Degenerate);
    }
    let g = match PointGeometry::new(&model.frame, &model.qs, p, 1) {
        Ok(g) => g,
        Err(e) if is_degenerate(&e) => return Ok(PointOutcome::Degenerate),
        Err(e) => return Err(e),
    };
    let mut out = vec![None; CHECKS.len()];
    let on = |id: &str| want[index_of(id)];
    let (pl, n) = (g.p(), g.n());

    if on("frame-valid") {
        let mut inv = 0.0_f64;
        for a in 0..pl {
            for b in 0..pl {
                for e in pl..n {
                    inv = inv.max(g.structure(a, b)[e].value().abs());
                }
            }
        }
        out[index_of("frame-valid")] = Some(inv);
    }
    if on("quaternionic-identities") {
        out[index_of("quaternionic-identities")] = Some(model.qs.basis.identity_residual(p)?);
    }
    let need_th = ["h-projectable", "q-projectable", "h-integrable", "q-integrable", "bott-obata-torsion", "bott-oproiu-torsion"]
        .iter()
        .any(|id| on(id));
    if need_th {
        let th = structure_tensor_h(&g);
        let tq = structure_tensor_q(&g, &th);
        let set = |out: &mut Vec<Option<f64>>, id: &str, v: f64| {
            if on(id) {
                out[index_of(id)] = Some(v);
            }
        };
        set(&mut out, "h-projectable", leaf_residual(&g, &th));
        set(&mut out, "q-projectable", leaf_residual(&g, &tq));
        set(&mut out, "h-integrable", transversal_residual(&g, &th));
        set(&mut out, "q-integrable", transversal_residual(&g, &tq));
        if on("bott-obata-torsion") {
            let gam = crate::connections::bott_obata().gamma(&g)?;
            out[index_of("bott-obata-torsion")] = Some(torsion_vs_tensor(&g, &torsion(&g, &gam), &th));
        }
        if on("bott-oproiu-torsion") {
            let gam = model.twistor_connection_unshifted().gamma(&g)?;
            let t = torsion_vs_tensor(&g, &torsion(&g, &gam), &tq);
            out[index_of("bott-oproiu-torsion")] = Some(t.max(q_preservation_residual(&g, &gam)));
        }
    }
    if on("connection-projectable") {
        let gam = model.obata_connection().gamma(&g)?;
        out[index_of("connection-projectable")] =
            Some(projectability_residual(&g, &gam, &model.designated)?);
    }
    let twistor_ids = [
        "j1-projectable",
        "j2-projectable",
        "j1-j2-projectable",
        "j1-torsion-integrability",
        "j1-curvature-integrability",
    ];
    if twistor_ids.iter().any(|id| on(id)) {
        let gam = model.twistor_connection().gamma(&g)?;
        let tp = TwistorPoint::new(&g, &gam)?;
        let field = model.basis_projectable;
        for (id, sign) in [("j1-projectable", 1.0), ("j2-projectable", -1.0)] {
            if on(id) {
                let mut r = twistor::j_projectable_residual(&tp, sign, &sh.structures);
                if field {
                    r = r.max(twistor::j_projectable_field_residual(
                        &g,
                        &gam,
                        &model.designated,
                        sign,
                        &sh.structures,
                    )?);
                }
                out[index_of(id)] = Some(r);
            }
        }
        if on("j1-j2-projectable") {
            let mut r = twistor::q_connection_leaf_curvature(&tp);
            if field {
                r = r.max(twistor::q_forms_leaf_derivative(&g, &gam, &model.designated)?);
            }
            out[index_of("j1-j2-projectable")] = Some(r);
        }
        let plan = IntegrabilityPlan {
            structures: &sh.structures,
            rotations: &sh.rotations,
            vectors: &sh.vectors,
        };
        if on("j1-torsion-integrability") {
            out[index_of("j1-torsion-integrability")] =
                Some(twistor::torsion_integrability_residual(&tp.tors, &tp.basis, &plan));
        }
        if on("j1-curvature-integrability") {
            out[index_of("j1-curvature-integrability")] =
                Some(twistor::curvature_integrability_residual(&tp, &plan));
        }
    }
    Ok(PointOutcome::Values(out))
}

/// Runs the configured checks on a built model.
pub fn run_model(model: &Model, cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let requested = cfg.resolve_checks()?;
    let mut want = vec![false; CHECKS.len()];
    for id in &requested {
        want[index_of(id)] = true;
        if let Some(pre) = prerequisite(id) {
            want[index_of(pre)] = true;
        }
    }
    let points = sample_points(model, cfg.samples, cfg.seed);
    let shared = shared_samples(cfg.seed, model.q());
    let eval = || -> Result<Vec<PointOutcome>> {
        points
            .par_iter()
            .map(|p| evaluate_point(model, p, &want, &shared))
            .collect()
    };
    let outcomes = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| GeomError::InvalidArgument(format!("thread pool: {e}")))?
            .install(eval)?,
        None => eval()?,
    };

    let mut worst: Vec<Option<f64>> = vec![None; CHECKS.len()];
    let mut degenerate = 0;
    for o in &outcomes {
        match o {
            PointOutcome::Degenerate => degenerate += 1,
            PointOutcome::Values(v) => {
                for (w, x) in worst.iter_mut().zip(v) {
                    if let Some(x) = x {
                        let x = if x.is_nan() { f64::INFINITY } else { *x };
                        *w = Some(w.map_or(x, |y: f64| y.max(x)));
                    }
                }
            }
        }
    }
    if degenerate as f64 > MAX_DEGENERATE_FRACTION * points.len() as f64 {
        return Err(GeomError::TooManyDegenerate {
            degenerate,
            total: points.len(),
        });
    }

    let measured = |id: &str| -> Verdict {
        match worst[index_of(id)] {
            Some(r) if r <= cfg.tol => Verdict::Pass,
            Some(_) => Verdict::Fail,
            None => Verdict::NotApplicable,
        }
    };
    let mut checks = Vec::new();
    for id in requested {
        let info = check_info(id).expect("registered check");
        let applicable = match prerequisite(id) {
            Some(pre) => measured(pre) == Verdict::Pass,
            None => id != "connection-projectable" || model.basis_projectable,
        };
        let (residual, verdict) = if applicable {
            (worst[index_of(id)], measured(id))
        } else {
            (None, Verdict::NotApplicable)
        };
        let expected = cfg
            .expect
            .iter()
            .find(|(k, _)| normalize_id(k) == id)
            .map_or_else(|| model.expect(id), |(_, v)| *v);
        checks.push(CheckReport {
            id: id.to_string(),
            paper_anchor: info.anchor.to_string(),
            max_residual: residual,
            tolerance: cfg.tol,
            verdict,
            expected,
            met: verdict.matches(expected),
        });
    }
    let count = |v: Verdict| checks.iter().filter(|c| c.verdict == v).count();
    let summary = Summary {
        model: model.name.clone(),
        passed: count(Verdict::Pass),
        failed: count(Verdict::Fail),
        not_applicable: count(Verdict::NotApplicable),
        unexpected: checks.iter().filter(|c| !c.met).map(|c| c.id.clone()).collect(),
        points: points.len(),
        degenerate_points: degenerate,
        structural: STRUCTURAL
            .iter()
            .map(|(id, note)| StructuralEntry {
                id: id.to_string(),
                status: "never-integrable".into(),
                note: note.to_string(),
            })
            .collect(),
    };
    Ok(Report {
        config: cfg.clone(),
        checks,
        summary,
        version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

/// Builds the model named in the config and runs it.
pub fn run(cfg: &RunConfig) -> Result<Report> {
    let model = build_model(&cfg.model)?;
    run_model(&model, cfg)
}
