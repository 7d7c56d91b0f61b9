//! Bott connections on `E` stored as frame coefficients.
//!
//! A connection evaluates, on a [`PointGeometry`] of order `k`, to one
//! `4q × 4q` matrix `Γ_A` per frame direction, with
//! `D_X s = X(s^c) e_c + Γ^c_{Ab} X^A s^b e_c`. Coefficients come back as jets
//! of order `k`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::calculus::MetricField;
use crate::error::{GeomError, Result};
use crate::geometry::{is_zero, PointGeometry};
use crate::jet::Jet2;
use crate::linalg::{least_squares, JetMat};
use crate::structures::{structure_tensor_h, Tensor2};

type GammaFn = dyn Fn(&PointGeometry) -> Result<Vec<JetMat>> + Send + Sync;

#[derive(Clone)]
pub struct BottConnection {
    pub name: String,
    f: Arc<GammaFn>,
}

impl fmt::Debug for BottConnection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BottConnection({})", self.name)
    }
}

impl BottConnection {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&PointGeometry) -> Result<Vec<JetMat>> + Send + Sync + 'static,
    ) -> Self {
        BottConnection {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn gamma(&self, g: &PointGeometry) -> Result<Vec<JetMat>> {
        (self.f)(g)
    }

    /// `self + Δ`, where `Δ` supplies extra coefficients per direction.
    pub fn shifted(
        &self,
        name: impl Into<String>,
        delta: impl Fn(&PointGeometry) -> Result<Vec<JetMat>> + Send + Sync + 'static,
    ) -> BottConnection {
        let base = self.clone();
        BottConnection::new(name, move |g| {
            let a = base.gamma(g)?;
            let d = delta(g)?;
            Ok(a.iter().zip(&d).map(|(x, y)| x.add(y)).collect())
        })
    }
}

fn zeros(g: &PointGeometry) -> Vec<JetMat> {
    vec![JetMat::zeros(g.rank(), g.rank()); g.n()]
}

/// Partial connection along leaf directions, zero coefficients along `E`.
pub fn default_bott() -> BottConnection {
    BottConnection::new("default-bott", |g| {
        let mut out = zeros(g);
        for (u, o) in out.iter_mut().enumerate().take(g.p()) {
            *o = g.partial_connection(u);
        }
        Ok(out)
    })
}

/// `E`-components of a frame vector as a transversal vector, `π` applied.
fn pi(g: &PointGeometry, v: &[Jet2]) -> Vec<Jet2> {
    g.e_part(v)
}

/// Transversal vector `I e_b` lifted to frame components (order `k + 1`).
fn lifted_column(g: &PointGeometry, m: &JetMat, b: usize) -> Vec<Jet2> {
    g.lift(&m.column(b))
}

/// The Obata-type connection of a hypercomplex basis.
pub fn obata() -> BottConnection {
    BottConnection::new("obata", |g| {
        let (p, r) = (g.p(), g.rank());
        let mut out = zeros(g);
        for (u, o) in out.iter_mut().enumerate().take(p) {
            *o = g.partial_connection(u);
        }
        let ik: Vec<JetMat> = (0..3).map(|a| g.basis_k(a)).collect();
        let cyc = [(0, 1, 2), (1, 2, 0), (2, 0, 1)];
        for a in 0..r {
            let mut m = JetMat::zeros(r, r);
            for b in 0..r {
                let (ea, eb) = (g.unit(p + a), g.unit(p + b));
                let mut acc = vec![Jet2::zero(); r];
                let add = |acc: &mut Vec<Jet2>, v: Vec<Jet2>, s: f64| {
                    for (x, y) in acc.iter_mut().zip(v) {
                        *x += &y.scale(s);
                    }
                };
                for &(al, be, ga) in &cyc {
                    let b1 = g.bracket(&lifted_column(g, g.basis(be), a), &lifted_column(g, g.basis(ga), b));
                    let b2 = g.bracket(&lifted_column(g, g.basis(be), b), &lifted_column(g, g.basis(ga), a));
                    add(&mut acc, ik[al].mul_vec(&pi(g, &b1)), 1.0 / 12.0);
                    add(&mut acc, ik[al].mul_vec(&pi(g, &b2)), 1.0 / 12.0);
                }
                for (al, im) in ik.iter().enumerate() {
                    let b1 = g.bracket(&lifted_column(g, g.basis(al), a), &eb);
                    let b2 = g.bracket(&lifted_column(g, g.basis(al), b), &ea);
                    add(&mut acc, im.mul_vec(&pi(g, &b1)), 1.0 / 6.0);
                    add(&mut acc, im.mul_vec(&pi(g, &b2)), 1.0 / 6.0);
                }
                add(&mut acc, pi(g, &g.bracket(&ea, &eb)), 0.5);
                for (c, v) in acc.into_iter().enumerate() {
                    m.set(c, b, v);
                }
            }
            out[p + a] = m;
        }
        Ok(out)
    })
}

/// Obata connection corrected by `½πT^H̃`; it preserves each `I_α`.
pub fn bott_obata() -> BottConnection {
    let base = obata();
    BottConnection::new("bott-obata", move |g| {
        let mut out = base.gamma(g)?;
        let th = structure_tensor_h(g);
        let (p, r) = (g.p(), g.rank());
        for a in 0..r {
            for b in 0..r {
                for c in 0..r {
                    let e = out[p + a].get(c, b) + &th[p + a][p + b][p + c].scale(0.5);
                    out[p + a].set(c, b, e);
                }
            }
        }
        Ok(out)
    })
}

/// Free data of Oproiu's formula: constant frame components of `A_X` and
/// `η_α(X)` per transversal direction. Empty vectors mean zero.
#[derive(Clone, Debug, Default)]
pub struct OproiuData {
    pub a: Vec<DMatrix<f64>>,
    pub eta: Vec<[f64; 3]>,
}

/// `A − Σ I_α A I_α`, four times the projection onto the commutant of `Q`.
fn q_complement_sum(ik: &[JetMat], a: &JetMat) -> JetMat {
    let mut acc = a.clone();
    for im in ik {
        acc = acc.sub(&im.mul(a).mul(im));
    }
    acc
}

/// `D_A S = F_A(S) + [Γ_A, S]` for `S` known to order `k + 1`.
pub fn endo_derivative(g: &PointGeometry, gamma: &[JetMat], dir: usize, s: &JetMat) -> JetMat {
    let sk = s.truncate(g.order());
    g.deriv_mat(dir, s).add(&gamma[dir].commutator(&sk))
}

/// Oproiu's `Q`-preserving modification of `base` along `E`.
pub fn oproiu(base: BottConnection, data: OproiuData) -> BottConnection {
    BottConnection::new(format!("oproiu({})", base.name), move |g| {
        let mut out = base.gamma(g)?;
        let (p, r) = (g.p(), g.rank());
        let ik: Vec<JetMat> = (0..3).map(|a| g.basis_k(a)).collect();
        let gamma = out.clone();
        for a in 0..r {
            let dir = p + a;
            let mut add = JetMat::zeros(r, r);
            for (al, im) in ik.iter().enumerate() {
                let di = endo_derivative(g, &gamma, dir, g.basis(al));
                add = add.add(&di.mul(im).scale(0.25));
                if let Some(eta) = data.eta.get(a) {
                    add = add.add(&im.scale(0.5 * eta[al]));
                }
            }
            if let Some(am) = data.a.get(a) {
                let am = JetMat::from_dmatrix(am);
                add = add.add(&q_complement_sum(&ik, &am).scale(0.25));
            }
            out[dir] = out[dir].add(&add);
        }
        Ok(out)
    })
}

/// Torsion endomorphisms `T_a = T(e_a, −)` on `E`, one per transversal direction:
/// `T^c_{ab} = Γ^c_{ab} − Γ^c_{ba} − c^c_{ab}`.
pub fn torsion(g: &PointGeometry, gamma: &[JetMat]) -> Vec<JetMat> {
    let (p, r) = (g.p(), g.rank());
    (0..r)
        .map(|a| {
            let mut m = JetMat::zeros(r, r);
            for b in 0..r {
                let cab = g.structure(p + a, p + b);
                for c in 0..r {
                    let v = gamma[p + a].get(c, b) - gamma[p + b].get(c, a) - &cab[p + c];
                    m.set(c, b, v);
                }
            }
            m
        })
        .collect()
}

/// `T_X = Σ X^d T_d` for a transversal vector `x`.
pub fn torsion_along(t: &[JetMat], x: &[Jet2]) -> JetMat {
    let r = t.len();
    let mut m = JetMat::zeros(r, r);
    for (d, xd) in x.iter().enumerate() {
        if !is_zero(xd) {
            m = m.add(&t[d].scale_jet(xd));
        }
    }
    m
}

/// `T(X, Y)` for transversal vectors.
pub fn torsion_value(t: &[JetMat], x: &[Jet2], y: &[Jet2]) -> Vec<Jet2> {
    torsion_along(t, x).mul_vec(y)
}

/// The Bott-Oproiu connection associated with a `Q`-preserving `nabla1`.
pub fn bott_oproiu(nabla1: BottConnection) -> BottConnection {
    BottConnection::new(format!("bott-oproiu({})", nabla1.name), move |g| {
        let mut out = nabla1.gamma(g)?;
        let (p, r, q) = (g.p(), g.rank(), g.q());
        let ik: Vec<JetMat> = (0..3).map(|a| g.basis_k(a)).collect();
        let t = torsion(g, &out);
        let norm = 1.0 / (4.0 * q as f64 - 2.0);
        // φ_β(e_d) for every direction d.
        let phi_b: Vec<[Jet2; 3]> = (0..r)
            .map(|d| [0, 1, 2].map(|b| ik[b].mul(&t[d]).trace().scale(norm)))
            .collect();
        let phi_of = |b: usize, x: &[Jet2]| -> Jet2 {
            let mut acc = Jet2::zero();
            for (d, xd) in x.iter().enumerate() {
                if !is_zero(xd) {
                    acc += &(xd * &phi_b[d][b]);
                }
            }
            acc
        };
        // φ(X) = Σ_β φ_β(I_β X).
        let phi = |x: &[Jet2]| -> Jet2 {
            let mut acc = Jet2::zero();
            for (b, im) in ik.iter().enumerate() {
                acc += &phi_of(b, &im.mul_vec(x));
            }
            acc
        };
        for a in 0..r {
            let ea: Vec<Jet2> = (0..r)
                .map(|i| Jet2::constant(if i == a { 1.0 } else { 0.0 }))
                .collect();
            let mut add = JetMat::zeros(r, r);
            for (al, im) in ik.iter().enumerate() {
                let coef = &phi_b[a][al] + &phi(&im.mul_vec(&ea)).scale(1.0 / 3.0);
                add = add.add(&im.scale_jet(&coef));
            }
            let mut ax = t[a].clone();
            for im in &ik {
                let tix = torsion_along(&t, &im.column(a));
                ax = ax.add(&tix.mul(im).scale(1.0 / 3.0));
            }
            add = add.sub(&q_complement_sum(&ik, &ax).scale(0.25));
            out[p + a] = out[p + a].add(&add);
        }
        Ok(out)
    })
}

/// `D = π∇^{LC}` along `E`, the partial connection along `L`.
pub fn riemannian_bott(metric: MetricField) -> BottConnection {
    BottConnection::new("riemannian-bott", move |g| {
        let k = g.order();
        let (n, p, r) = (g.n(), g.p(), g.rank());
        let gm = metric.eval_jet(&g.point, k + 1)?;
        let ginv = gm.truncate(k).inverse()?;
        // Christoffel symbols Γ^i_{jl} at order k.
        let dg: Vec<JetMat> = (0..n).map(|l| gm.map(|e| e.partial(l))).collect();
        let chris = |i: usize, j: usize, l: usize| -> Jet2 {
            let mut acc = Jet2::zero();
            for m in 0..n {
                let w = ginv.get(i, m);
                let t = dg[j].get(m, l) + dg[l].get(m, j) - dg[m].get(j, l);
                acc += &(w * &t);
            }
            acc.scale(0.5)
        };
        let mut table = vec![vec![vec![Jet2::zero(); n]; n]; n];
        for (i, ti) in table.iter_mut().enumerate() {
            for j in 0..n {
                for l in j..n {
                    let v = chris(i, j, l);
                    ti[l][j] = v.clone();
                    ti[j][l] = v;
                }
            }
        }
        let fm = g.frame_matrix();
        let fk = fm.truncate(k);
        let inv = g.frame_inverse().truncate(k);
        let mut out = zeros(g);
        for (u, o) in out.iter_mut().enumerate().take(p) {
            *o = g.partial_connection(u);
        }
        for a in 0..r {
            let mut m = JetMat::zeros(r, r);
            for b in 0..r {
                // ∇_{F_a} F_b in coordinates.
                let fb = fm.column(p + b);
                let mut v: Vec<Jet2> = fb.iter().map(|x| g.deriv(p + a, x)).collect();
                for (i, vi) in v.iter_mut().enumerate() {
                    for j in 0..n {
                        for l in 0..n {
                            let c = &table[i][j][l];
                            if !is_zero(c) {
                                *vi += &(&(c * fk.get(j, p + a)) * fk.get(l, p + b));
                            }
                        }
                    }
                }
                let comps = inv.mul_vec(&v);
                for c in 0..r {
                    m.set(c, b, comps[p + c].clone());
                }
            }
            out[p + a] = m;
        }
        Ok(out)
    })
}

/// `R_{AB} = F_A(Γ_B) − F_B(Γ_A) + [Γ_A, Γ_B] − c^C_{AB} Γ_C`.
///
/// Needs a geometry and coefficients of order 1; returns order 0.
pub fn curvature(g: &PointGeometry, gamma: &[JetMat], a: usize, b: usize) -> Result<JetMat> {
    if g.order() < 1 {
        return Err(GeomError::JetOrder("curvature needs an order-1 geometry".into()));
    }
    let k0 = 0;
    let ga = gamma[a].truncate(k0);
    let gb = gamma[b].truncate(k0);
    let mut m = g
        .deriv_mat(a, &gamma[b])
        .sub(&g.deriv_mat(b, &gamma[a]))
        .add(&ga.commutator(&gb));
    for (c, cc) in g.structure(a, b).iter().enumerate() {
        if !is_zero(cc) {
            m = m.sub(&gamma[c].truncate(k0).scale_jet(&cc.truncate(k0)));
        }
    }
    Ok(m.truncate(k0))
}

/// Curvature on every ordered frame pair.
pub fn curvature_table(g: &PointGeometry, gamma: &[JetMat]) -> Result<Vec<Vec<JetMat>>> {
    let n = g.n();
    let r = g.rank();
    let mut t = vec![vec![JetMat::zeros(r, r); n]; n];
    for a in 0..n {
        for b in (a + 1)..n {
            let m = curvature(g, gamma, a, b)?;
            t[b][a] = m.scale(-1.0);
            t[a][b] = m;
        }
    }
    Ok(t)
}

/// `R(X, Y) = Σ X^A Y^B R_{AB}` for frame-component vectors (order 0).
pub fn curvature_at(table: &[Vec<JetMat>], x: &[f64], y: &[f64]) -> DMatrix<f64> {
    let r = table[0][0].rows();
    let mut m = DMatrix::zeros(r, r);
    for (a, xa) in x.iter().enumerate() {
        if *xa == 0.0 {
            continue;
        }
        for (b, yb) in y.iter().enumerate() {
            if *yb != 0.0 && a != b {
                m += table[a][b].values() * (xa * yb);
            }
        }
    }
    m
}

/// Covariant derivative `D_X s` in frame components.
pub fn covariant_derivative(g: &PointGeometry, gamma: &[JetMat], x: &[Jet2], s: &[Jet2]) -> Vec<Jet2> {
    let r = g.rank();
    let mut out = vec![Jet2::zero(); r];
    for (a, xa) in x.iter().enumerate() {
        if is_zero(xa) {
            continue;
        }
        let gs = gamma[a].mul_vec(s);
        for c in 0..r {
            let d = &g.deriv(a, &s[c]) + &gs[c];
            out[c] += &(xa * &d);
        }
    }
    out
}

/// Induced connection forms `(a, b, c)` on `Q` along one direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QForms {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Fits `D I₁ = aI₂ + bI₃, D I₂ = −aI₁ + cI₃, D I₃ = −bI₁ − cI₂` by least
/// squares; returns the forms and the out-of-`Q` residual.
pub fn induced_q_forms_fit(g: &PointGeometry, gamma: &[JetMat], dir: usize) -> (QForms, f64) {
    let r = g.rank();
    let di: Vec<DMatrix<f64>> = (0..3)
        .map(|al| endo_derivative(g, gamma, dir, g.basis(al)).values())
        .collect();
    let im: Vec<DMatrix<f64>> = (0..3).map(|al| g.basis_k(al).values()).collect();
    let rows = 3 * r * r;
    let mut a = DMatrix::zeros(rows, 3);
    let mut rhs = DVector::zeros(rows);
    // coef[eq][basis] gives the (a, b, c) coefficients of I_basis in equation eq.
    let coef: [[[f64; 3]; 3]; 3] = [
        [[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        [[-1.0, 0.0, 0.0], [0.0; 3], [0.0, 0.0, 1.0]],
        [[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [0.0; 3]],
    ];
    let coeff = |eq: usize, unknown: usize, basis: usize| coef[eq][basis][unknown];
    for eq in 0..3 {
        for i in 0..r {
            for j in 0..r {
                let row = eq * r * r + i * r + j;
                rhs[row] = di[eq][(i, j)];
                for u in 0..3 {
                    let mut v = 0.0;
                    for (basis, m) in im.iter().enumerate() {
                        let c = coeff(eq, u, basis);
                        if c != 0.0 {
                            v += c * m[(i, j)];
                        }
                    }
                    a[(row, u)] = v;
                }
            }
        }
    }
    let (x, res) = least_squares(&a, &rhs);
    (
        QForms {
            a: x[0],
            b: x[1],
            c: x[2],
        },
        res,
    )
}

/// `ϖ_A = G⁻¹(Γ_A G + F_A(G))`, the connection matrix in the standard gauge.
pub fn gauge_connection(g: &PointGeometry, gamma: &[JetMat], dir: usize) -> Result<JetMat> {
    let gk = g.gauge().truncate(g.order());
    let ginv = gk.inverse()?;
    Ok(ginv.mul(&gamma[dir].mul(&gk).add(&g.deriv_mat(dir, g.gauge()))))
}

/// Trace formulas for the induced forms, as jets of order `k`.
pub fn induced_q_forms_trace(g: &PointGeometry, gamma: &[JetMat], dir: usize) -> Result<[Jet2; 3]> {
    let w = gauge_connection(g, gamma, dir)?;
    let std = crate::quaternion::standard_triple(g.q()).map(|m| JetMat::from_dmatrix(&m));
    let s = 1.0 / (2.0 * g.q() as f64);
    Ok([
        std[2].mul(&w).trace().scale(-s),
        std[1].mul(&w).trace().scale(s),
        std[0].mul(&w).trace().scale(-s),
    ])
}

/// Largest out-of-`Q` component of `D I_α` over all frame directions.
pub fn q_preservation_residual(g: &PointGeometry, gamma: &[JetMat]) -> f64 {
    (0..g.n())
        .map(|d| induced_q_forms_fit(g, gamma, d).1)
        .fold(0.0, f64::max)
}

/// Largest entry of `D I_α` over all directions.
pub fn h_preservation_residual(g: &PointGeometry, gamma: &[JetMat]) -> f64 {
    let mut worst = 0.0_f64;
    for d in 0..g.n() {
        for al in 0..3 {
            worst = worst.max(endo_derivative(g, gamma, d, g.basis(al)).max_abs());
        }
    }
    worst
}

/// Largest deviation from the Bott property along leaf directions.
pub fn bott_residual(g: &PointGeometry, gamma: &[JetMat]) -> f64 {
    (0..g.p())
        .map(|u| gamma[u].sub(&g.partial_connection(u)).max_abs())
        .fold(0.0, f64::max)
}

/// Largest difference between the torsion on `E × E` and `πT` for a tensor table.
pub fn torsion_vs_tensor(g: &PointGeometry, t: &[JetMat], tensor: &Tensor2) -> f64 {
    let (p, r) = (g.p(), g.rank());
    let mut worst = 0.0_f64;
    for a in 0..r {
        for b in 0..r {
            for c in 0..r {
                let d = t[a].get(c, b).value() - tensor[p + a][p + b][p + c].value();
                worst = worst.max(d.abs());
            }
        }
    }
    worst
}

/// Largest leaf derivative `D̊_V(D_X Y)` over designated projectable `X, Y`
/// and leaf frame fields `V`. Zero for a projectable connection.
pub fn projectability_residual(
    g: &PointGeometry,
    gamma: &[JetMat],
    designated: &[crate::calculus::VectorField],
) -> Result<f64> {
    let inv = g.frame_inverse();
    let p = g.p();
    let xs: Vec<Vec<Jet2>> = designated
        .iter()
        .map(|f| Ok(inv.mul_vec(&f.eval_jet(&g.point, g.order() + 1)?)))
        .collect::<Result<_>>()?;
    let mut worst = 0.0_f64;
    for x in &xs {
        let xk: Vec<Jet2> = x.iter().map(|c| c.truncate(g.order())).collect();
        for y in &xs {
            let v = covariant_derivative(g, gamma, &xk, &y[p..]);
            for u in 0..p {
                let w = g.partial_connection(u).truncate(0);
                let vals: Vec<Jet2> = v.iter().map(|c| c.truncate(0)).collect();
                let wv = w.mul_vec(&vals);
                for (c, wc) in v.iter().zip(&wv) {
                    worst = worst.max((g.deriv(u, c).value() + wc.value()).abs());
                }
            }
        }
    }
    Ok(worst)
}
