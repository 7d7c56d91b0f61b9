//! Curvature forms of the induced `Q`-connection and the projectability and
//! integrability conditions of the twistor structures `J₁`, `J₂`.
//!
//! Everything here works at a point from an order-1 geometry and order-1
//! connection coefficients, reduced to plain matrices.

use nalgebra::{DMatrix, DVector};

use crate::calculus::VectorField;
use crate::connections::{curvature_table, endo_derivative, torsion};
use crate::error::Result;
use crate::geometry::PointGeometry;
use crate::jet::Jet2;
use crate::linalg::JetMat;
use crate::quaternion::BasisRotation;

/// `J₂` is never integrable: the obstruction is structural, not numerical,
/// so no integrability check exists for it.
pub const J2_NEVER_INTEGRABLE: &str =
    "J2 is structurally non-integrable; no numerical check is defined";

/// `⟨I_β, T⟩ = −(1/4q) tr(I_β T)`.
pub fn pairing(ib: &DMatrix<f64>, t: &DMatrix<f64>) -> f64 {
    -(ib * t).trace() / ib.nrows() as f64
}

/// Matrices evaluated at a point for the twistor conditions.
pub struct TwistorPoint {
    pub p: usize,
    pub r: usize,
    pub basis: [DMatrix<f64>; 3],
    /// `curv[A][B] = R(F_A, F_B)` on `E`.
    pub curv: Vec<Vec<DMatrix<f64>>>,
    /// `tors[a] = T(e_a, −)` on `E`.
    pub tors: Vec<DMatrix<f64>>,
}

impl TwistorPoint {
    pub fn new(g: &PointGeometry, gamma: &[JetMat]) -> Result<Self> {
        let curv = curvature_table(g, gamma)?
            .into_iter()
            .map(|row| row.into_iter().map(|m| m.values()).collect())
            .collect();
        let tors = torsion(g, gamma).iter().map(JetMat::values).collect();
        Ok(TwistorPoint {
            p: g.p(),
            r: g.rank(),
            basis: [0, 1, 2].map(|a| g.basis(a).values()),
            curv,
            tors,
        })
    }

    pub fn q(&self) -> usize {
        self.r / 4
    }

    /// `R(X, Y)` for frame-component vectors.
    pub fn r(&self, x: &DVector<f64>, y: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.r, self.r);
        for a in 0..x.len() {
            if x[a] == 0.0 {
                continue;
            }
            for b in 0..y.len() {
                if y[b] != 0.0 && a != b {
                    m += &self.curv[a][b] * (x[a] * y[b]);
                }
            }
        }
        m
    }

    /// `T(X, Y)` for transversal vectors.
    pub fn t(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let mut v = DVector::zeros(self.r);
        for a in 0..self.r {
            if x[a] != 0.0 {
                v += &self.tors[a] * y * x[a];
            }
        }
        v
    }

    /// Full frame vector of a transversal vector.
    pub fn lift(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut v = DVector::zeros(self.p + self.r);
        v.rows_mut(self.p, self.r).copy_from(x);
        v
    }

    pub fn unit(&self, a: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.p + self.r);
        v[a] = 1.0;
        v
    }

    pub fn e_unit(&self, a: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.r);
        v[a] = 1.0;
        v
    }

    pub fn s(&self, a: &[f64; 3]) -> DMatrix<f64> {
        &self.basis[0] * a[0] + &self.basis[1] * a[1] + &self.basis[2] * a[2]
    }

    pub fn rotated_basis(&self, rot: &BasisRotation) -> [DMatrix<f64>; 3] {
        [0, 1, 2].map(|a| {
            &self.basis[0] * rot.matrix[(a, 0)]
                + &self.basis[1] * rot.matrix[(a, 1)]
                + &self.basis[2] * rot.matrix[(a, 2)]
        })
    }
}

fn comm(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

fn max_abs_v(m: &DVector<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// `(𝒜, ℬ, 𝒞)` from pairings of `[R, I_α]` with the basis.
pub fn curvature_forms_pairing(basis: &[DMatrix<f64>; 3], r: &DMatrix<f64>) -> [f64; 3] {
    let c1 = comm(r, &basis[0]);
    let c2 = comm(r, &basis[1]);
    [
        pairing(&basis[1], &c1),
        pairing(&basis[2], &c1),
        pairing(&basis[2], &c2),
    ]
}

/// `(𝒜, ℬ, 𝒞)` from the trace formulas. The `ℬ` combination evaluates to
/// `−2ℬ·Id` under the structure equations, hence its sign.
pub fn curvature_forms_trace(basis: &[DMatrix<f64>; 3], r: &DMatrix<f64>) -> [f64; 3] {
    let [i1, i2, i3] = basis;
    let (c1, c2, c3) = (comm(r, i1), comm(r, i2), comm(r, i3));
    let n = i1.nrows() as f64;
    let a = (&c3 + &c2 * i1 - &c1 * i2).trace() * 0.5 / n;
    let b = -(&c2 - &c3 * i1 + &c1 * i3).trace() * 0.5 / n;
    let c = (&c1 - &c2 * i3 + &c3 * i2).trace() * 0.5 / n;
    [a, b, c]
}

/// Residual of `𝒜I₂ + ℬI₃ = [R, I₁]` and its two companions.
pub fn structure_equation_residual(basis: &[DMatrix<f64>; 3], r: &DMatrix<f64>) -> f64 {
    let [a, b, c] = curvature_forms_pairing(basis, r);
    let [i1, i2, i3] = basis;
    let e1 = i2 * a + i3 * b - comm(r, i1);
    let e2 = -(i1 * a) + i3 * c - comm(r, i2);
    let e3 = -(i1 * b) - i2 * c - comm(r, i3);
    max_abs(&e1).max(max_abs(&e2)).max(max_abs(&e3))
}

/// Tensorial projectability condition for `J₁` (`sign = +1`) or `J₂` (`−1`):
/// `[R(X, Y), S] ± [R(SX, Y), S]∘S` over leaf `Y`, transversal frame `X`.
pub fn j_projectable_residual(tp: &TwistorPoint, sign: f64, samples: &[[f64; 3]]) -> f64 {
    let mut worst = 0.0_f64;
    for a in samples {
        let s = tp.s(a);
        for u in 0..tp.p {
            let y = tp.unit(u);
            for x in 0..tp.r {
                let xe = tp.e_unit(x);
                let rx = tp.r(&tp.lift(&xe), &y);
                let rsx = tp.r(&tp.lift(&(&s * &xe)), &y);
                let m = comm(&rx, &s) + comm(&rsx, &s) * &s * sign;
                worst = worst.max(max_abs(&m));
            }
        }
    }
    worst
}

/// Field path for the projectability of `J₁`/`J₂`: the leaf derivative of
/// `D_X S ∓ S·D_{SX}S` for designated projectable `X` and constant-coefficient
/// `S`. Needs a projectable basis; returns the largest entry.
pub fn j_projectable_field_residual(
    g: &PointGeometry,
    gamma: &[JetMat],
    designated: &[VectorField],
    sign: f64,
    samples: &[[f64; 3]],
) -> Result<f64> {
    let (p, r) = (g.p(), g.rank());
    let inv = g.frame_inverse();
    let mut worst = 0.0_f64;
    let xs: Vec<Vec<Jet2>> = designated
        .iter()
        .map(|f| Ok(inv.mul_vec(&f.eval_jet(&g.point, g.order() + 1)?)))
        .collect::<Result<_>>()?;
    for a in samples {
        let s = crate::structures::combine3(a, &[0, 1, 2].map(|al| g.basis(al).clone()));
        let sk = s.truncate(g.order());
        let ds: Vec<JetMat> = (0..g.n()).map(|d| endo_derivative(g, gamma, d, &s)).collect();
        let along = |v: &[Jet2]| -> JetMat {
            let mut m = JetMat::zeros(r, r);
            for (d, vd) in v.iter().enumerate() {
                m = m.add(&ds[d].scale_jet(vd));
            }
            m
        };
        for x in &xs {
            let sx = g.lift(&s.mul_vec(&x[p..]));
            let m = along(x).sub(&sk.mul(&along(&sx)).scale(sign));
            for u in 0..p {
                let w = g.partial_connection(u).truncate(0);
                let d = g.deriv_mat(u, &m).add(&w.commutator(&m.truncate(0)));
                worst = worst.max(d.max_abs());
            }
        }
    }
    Ok(worst)
}

/// Largest curvature form on `(E, L)`; zero iff the induced `Q`-connection
/// is projectable.
pub fn q_connection_leaf_curvature(tp: &TwistorPoint) -> f64 {
    let mut worst = 0.0_f64;
    for u in 0..tp.p {
        for x in 0..tp.r {
            let r = tp.r(&tp.unit(tp.p + x), &tp.unit(u));
            for v in curvature_forms_pairing(&tp.basis, &r) {
                worst = worst.max(v.abs());
            }
        }
    }
    worst
}

/// Largest leaf derivative of the induced forms evaluated on designated fields.
pub fn q_forms_leaf_derivative(
    g: &PointGeometry,
    gamma: &[JetMat],
    designated: &[VectorField],
) -> Result<f64> {
    let inv = g.frame_inverse().truncate(g.order());
    let forms: Vec<[Jet2; 3]> = (0..g.n())
        .map(|d| crate::connections::induced_q_forms_trace(g, gamma, d))
        .collect::<Result<_>>()?;
    let mut worst = 0.0_f64;
    for f in designated {
        let x = inv.mul_vec(&f.eval_jet(&g.point, g.order())?);
        for k in 0..3 {
            let mut v = Jet2::zero();
            for (d, xd) in x.iter().enumerate() {
                v += &(xd * &forms[d][k]);
            }
            for u in 0..g.p() {
                worst = worst.max(g.deriv(u, &v).value().abs());
            }
        }
    }
    Ok(worst)
}

/// Torsion integrability for `q ≥ 2`, with `T` given per transversal direction.
pub fn torsion_condition_q2(tors: &[DMatrix<f64>], s: &DMatrix<f64>) -> f64 {
    let r = tors.len();
    let t = |x: &DVector<f64>, y: &DVector<f64>| -> DVector<f64> {
        let mut v = DVector::zeros(r);
        for a in 0..r {
            if x[a] != 0.0 {
                v += &tors[a] * y * x[a];
            }
        }
        v
    };
    let mut worst = 0.0_f64;
    for a in 0..r {
        for b in (a + 1)..r {
            let x1 = DVector::from_fn(r, |i, _| if i == a { 1.0 } else { 0.0 });
            let x2 = DVector::from_fn(r, |i, _| if i == b { 1.0 } else { 0.0 });
            let (sx1, sx2) = (s * &x1, s * &x2);
            let v = t(&x1, &x2) - t(&sx1, &sx2) + s * t(&sx1, &x2) + s * t(&x1, &sx2);
            worst = worst.max(max_abs_v(&v));
        }
    }
    worst
}

/// Torsion integrability for `q = 1`, for one basis and one vector `X`.
pub fn torsion_condition_q1(tors: &[DMatrix<f64>], basis: &[DMatrix<f64>; 3], x: &DVector<f64>) -> f64 {
    let r = tors.len();
    let t = |x: &DVector<f64>, y: &DVector<f64>| -> DVector<f64> {
        let mut v = DVector::zeros(r);
        for a in 0..r {
            if x[a] != 0.0 {
                v += &tors[a] * y * x[a];
            }
        }
        v
    };
    let [i1, i2, i3] = basis;
    let v = t(x, &(i2 * x)) - t(&(i1 * x), &(i3 * x))
        + i1 * t(x, &(i3 * x))
        + i1 * t(&(i1 * x), &(i2 * x));
    max_abs_v(&v)
}

/// Sampling plan for the integrability conditions.
pub struct IntegrabilityPlan<'a> {
    /// Unit coefficient triples for `S` (used when `q ≥ 2`).
    pub structures: &'a [[f64; 3]],
    /// Basis rotations (used when `q = 1`).
    pub rotations: &'a [BasisRotation],
    /// Transversal test vectors (used when `q = 1`).
    pub vectors: &'a [DVector<f64>],
}

pub fn torsion_integrability_residual(
    tors: &[DMatrix<f64>],
    basis: &[DMatrix<f64>; 3],
    plan: &IntegrabilityPlan<'_>,
) -> f64 {
    let q = tors.len() / 4;
    let mut worst = 0.0_f64;
    if q >= 2 {
        for a in plan.structures {
            let s = &basis[0] * a[0] + &basis[1] * a[1] + &basis[2] * a[2];
            worst = worst.max(torsion_condition_q2(tors, &s));
        }
    } else {
        for rot in plan.rotations {
            let b = rotate(basis, rot);
            for x in plan.vectors {
                worst = worst.max(torsion_condition_q1(tors, &b, x));
            }
        }
    }
    worst
}

fn rotate(basis: &[DMatrix<f64>; 3], rot: &BasisRotation) -> [DMatrix<f64>; 3] {
    [0, 1, 2].map(|a| {
        &basis[0] * rot.matrix[(a, 0)] + &basis[1] * rot.matrix[(a, 1)] + &basis[2] * rot.matrix[(a, 2)]
    })
}

/// Curvature integrability: `q ≥ 2` uses the `S`-form on transversal frame
/// pairs, `q = 1` the single-vector form over rotated bases.
pub fn curvature_integrability_residual(
    tp: &TwistorPoint,
    plan: &IntegrabilityPlan<'_>,
) -> f64 {
    let mut worst = 0.0_f64;
    let re = |x: &DVector<f64>, y: &DVector<f64>| tp.r(&tp.lift(x), &tp.lift(y));
    if tp.q() >= 2 {
        for a in plan.structures {
            let s = tp.s(a);
            for i in 0..tp.r {
                for j in (i + 1)..tp.r {
                    let (x1, x2) = (tp.e_unit(i), tp.e_unit(j));
                    let (sx1, sx2) = (&s * &x1, &s * &x2);
                    let m = comm(&re(&x1, &x2), &s) - comm(&re(&sx1, &sx2), &s)
                        + &s * comm(&re(&sx1, &x2), &s)
                        + &s * comm(&re(&x1, &sx2), &s);
                    worst = worst.max(max_abs(&m));
                }
            }
        }
    } else {
        for rot in plan.rotations {
            let [i1, i2, i3] = rotate(&tp.basis, rot);
            for x in plan.vectors {
                let (x1, x2, x3) = (&i1 * x, &i2 * x, &i3 * x);
                let m = comm(&re(x, &x2), &i1) - comm(&re(&x1, &x3), &i1)
                    + &i1 * comm(&re(&x1, &x2), &i1)
                    + &i1 * comm(&re(x, &x3), &i1);
                worst = worst.max(max_abs(&m));
            }
        }
    }
    worst
}

/// The three conditions for two connections to define the same pair
/// `(J₁, J₂)`, evaluated on the coefficient difference `t = Γ' − Γ`:
/// `(a)` equal induced forms, `(b)` `[S, t] = 0`, `(c)` `tr(S t) = 0`.
pub fn same_pair_residuals(
    g: &PointGeometry,
    gamma1: &[JetMat],
    gamma2: &[JetMat],
    samples: &[[f64; 3]],
) -> Result<[f64; 3]> {
    let mut ra = 0.0_f64;
    let mut rb = 0.0_f64;
    let mut rc = 0.0_f64;
    let basis = [0, 1, 2].map(|a| g.basis(a).values());
    for d in 0..g.n() {
        let f1 = crate::connections::induced_q_forms_fit(g, gamma1, d).0;
        let f2 = crate::connections::induced_q_forms_fit(g, gamma2, d).0;
        ra = ra
            .max((f1.a - f2.a).abs())
            .max((f1.b - f2.b).abs())
            .max((f1.c - f2.c).abs());
        let t = gamma2[d].values() - gamma1[d].values();
        for a in samples {
            let s = &basis[0] * a[0] + &basis[1] * a[1] + &basis[2] * a[2];
            rb = rb.max(max_abs(&comm(&s, &t)));
            rc = rc.max((&s * &t).trace().abs());
        }
    }
    Ok([ra, rb, rc])
}
