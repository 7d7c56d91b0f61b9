//! Frame-component calculus at a single point.
//!
//! A [`PointGeometry`] evaluates an adapted frame and a quaternionic basis at
//! a point to a chosen jet order `k` (0 or 1). Tensors computed from it are
//! returned as jets of order `k`, so a geometry of order 1 can feed one more
//! frame derivative (needed for curvature).
//!
//! Frame indices: `0..p` are leaf fields, `p..p+4q` transversal fields.
//! Structure functions are `[F_A, F_B] = c^C_{AB} F_C`.

use crate::calculus::{AdaptedFrame, Point};
use crate::error::{GeomError, Result};
use crate::jet::Jet2;
use crate::linalg::JetMat;
use crate::structures::QStructure;

pub struct PointGeometry {
    pub point: Point,
    order: u8,
    p: usize,
    q: usize,
    coords: Vec<Jet2>,
    frame: JetMat,
    frame_inv: JetMat,
    /// `c[a][b]` holds the frame components of `[F_a, F_b]`.
    c: Vec<Vec<Vec<Jet2>>>,
    i: [JetMat; 3],
    gauge: JetMat,
}

impl PointGeometry {
    pub fn new(frame: &AdaptedFrame, qs: &QStructure, point: &Point, order: u8) -> Result<Self> {
        if order > 1 {
            return Err(GeomError::JetOrder(format!(
                "point geometry supports tensor order 0 or 1, not {order}"
            )));
        }
        let n = frame.dim();
        if point.dim() != n {
            return Err(GeomError::ChartMismatch {
                expected: n,
                found: point.dim(),
            });
        }
        if qs.rank() != 4 * frame.q() {
            return Err(GeomError::InvalidStructure(format!(
                "structure rank {} does not match 4q = {}",
                qs.rank(),
                4 * frame.q()
            )));
        }
        let fm = frame.matrix(point, order + 1)?;
        let frame_inv = fm.inverse()?;
        let inv_k = frame_inv.truncate(order);
        let cols: Vec<Vec<Jet2>> = (0..n).map(|a| fm.column(a)).collect();
        let mut c = vec![vec![vec![Jet2::zero(); n]; n]; n];
        for a in 0..n {
            for b in (a + 1)..n {
                let br: Vec<Jet2> = (0..n)
                    .map(|r| {
                        fm.get(r, b).directional(&cols[a]) - fm.get(r, a).directional(&cols[b])
                    })
                    .collect();
                let comps: Vec<Jet2> = inv_k.mul_vec(&br).iter().map(|x| x.truncate(order)).collect();
                c[b][a] = comps.iter().map(|x| -x).collect();
                c[a][b] = comps;
            }
        }
        let i = [0, 1, 2].map(|a| qs.basis.i[a].eval_jet(point, order + 1));
        let [i0, i1, i2] = i;
        Ok(PointGeometry {
            point: point.clone(),
            order,
            p: frame.p(),
            q: frame.q(),
            coords: point.seed(order + 1),
            frame: fm,
            frame_inv,
            c,
            i: [i0?, i1?, i2?],
            gauge: qs.gauge.eval_jet(point, order + 1)?,
        })
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.p + 4 * self.q
    }

    pub fn rank(&self) -> usize {
        4 * self.q
    }

    /// Coordinate jets at order `k + 1`.
    pub fn coords(&self) -> &[Jet2] {
        &self.coords
    }

    pub fn frame_matrix(&self) -> &JetMat {
        &self.frame
    }

    pub fn frame_inverse(&self) -> &JetMat {
        &self.frame_inv
    }

    /// Structure-function components `c^·_{ab}`.
    pub fn structure(&self, a: usize, b: usize) -> &[Jet2] {
        &self.c[a][b]
    }

    /// The hypercomplex basis in transversal frame components, order `k + 1`.
    pub fn basis(&self, alpha: usize) -> &JetMat {
        &self.i[alpha]
    }

    pub fn basis_k(&self, alpha: usize) -> JetMat {
        self.i[alpha].truncate(self.order)
    }

    pub fn gauge(&self) -> &JetMat {
        &self.gauge
    }

    /// The derivative `F_a(h)` of a function along a frame field.
    pub fn deriv(&self, a: usize, h: &Jet2) -> Jet2 {
        let col: Vec<Jet2> = (0..self.n()).map(|r| self.frame.get(r, a).clone()).collect();
        h.directional(&col)
    }

    pub fn deriv_mat(&self, a: usize, m: &JetMat) -> JetMat {
        let col: Vec<Jet2> = (0..self.n()).map(|r| self.frame.get(r, a).clone()).collect();
        m.map(|h| h.directional(&col))
    }

    /// Frame components of `[U, V]` for vector fields given by frame components.
    pub fn bracket(&self, u: &[Jet2], v: &[Jet2]) -> Vec<Jet2> {
        let n = self.n();
        let mut out = vec![Jet2::zero(); n];
        for a in 0..n {
            if is_zero(&u[a]) {
                continue;
            }
            for b in 0..n {
                if a == b || is_zero(&v[b]) {
                    continue;
                }
                let w = &u[a] * &v[b];
                for (o, cc) in out.iter_mut().zip(&self.c[a][b]) {
                    if !is_zero(cc) {
                        *o += &w * cc;
                    }
                }
            }
        }
        for a in 0..n {
            if is_zero(&u[a]) {
                continue;
            }
            for (e, o) in out.iter_mut().enumerate() {
                if !v[e].is_constant() {
                    *o += &u[a] * &self.deriv(a, &v[e]);
                }
            }
        }
        for b in 0..n {
            if is_zero(&v[b]) {
                continue;
            }
            for (e, o) in out.iter_mut().enumerate() {
                if !u[e].is_constant() {
                    *o -= &v[b] * &self.deriv(b, &u[e]);
                }
            }
        }
        out
    }

    /// Unit frame-component vector of the frame field `a`.
    pub fn unit(&self, a: usize) -> Vec<Jet2> {
        let mut v = vec![Jet2::zero(); self.n()];
        v[a] = Jet2::constant(1.0);
        v
    }

    /// Extension of an `E`-endomorphism by zero on `L`, in frame components.
    pub fn tilde(&self, j: &JetMat) -> JetMat {
        let n = self.n();
        let mut m = JetMat::zeros(n, n);
        for a in 0..self.rank() {
            for b in 0..self.rank() {
                m.set(self.p + a, self.p + b, j.get(a, b).clone());
            }
        }
        m
    }

    /// Transversal part of a frame-component vector, as a `4q`-vector.
    pub fn e_part(&self, v: &[Jet2]) -> Vec<Jet2> {
        v[self.p..].to_vec()
    }

    /// Lifts a `4q`-vector of transversal components to a full frame vector.
    pub fn lift(&self, x: &[Jet2]) -> Vec<Jet2> {
        let mut v = vec![Jet2::zero(); self.p];
        v.extend_from_slice(x);
        v
    }

    /// Frame components of a coordinate vector.
    pub fn to_frame(&self, v: &[Jet2]) -> Vec<Jet2> {
        self.frame_inv.mul_vec(v)
    }

    /// Coordinate components of a frame-component vector.
    pub fn to_coords(&self, v: &[Jet2]) -> Vec<Jet2> {
        self.frame.mul_vec(v)
    }

    /// Matrix of `D̊_{F_u}` on transversal frame fields: `c^{a}_{u b}`.
    pub fn partial_connection(&self, u: usize) -> JetMat {
        let r = self.rank();
        let mut m = JetMat::zeros(r, r);
        for a in 0..r {
            for b in 0..r {
                m.set(a, b, self.c[u][self.p + b][self.p + a].clone());
            }
        }
        m
    }

    /// `(D̊_{F_u} J)` for an `E`-endomorphism known to order `k + 1`.
    pub fn partial_derivative_of_endo(&self, u: usize, j: &JetMat) -> JetMat {
        let w = self.partial_connection(u);
        let jk = j.truncate(self.order);
        self.deriv_mat(u, j).add(&w.commutator(&jk))
    }
}

#[inline]
pub(crate) fn is_zero(x: &Jet2) -> bool {
    x.is_constant() && x.value() == 0.0
}
