//! Transversal hypercomplex and quaternionic structures, their Nijenhuis and
//! structure tensors, and the pointwise residuals behind the projectability
//! and integrability criteria.

use nalgebra::{DMatrix, DVector};

use crate::calculus::{
    apply, lie_bracket, AdaptedFrame, Bundle, EndomorphismField, Point, ScalarField, VectorField,
};
use crate::error::{GeomError, Result};
use crate::geometry::{is_zero, PointGeometry};
use crate::jet::Jet2;
use crate::linalg::{least_squares, max_abs_jet, JetMat};
use crate::quaternion::BasisRotation;

/// `(I₁, I₂, I₃)` in transversal frame components.
#[derive(Clone, Debug)]
pub struct HypercomplexTriple {
    pub i: [EndomorphismField; 3],
}

impl HypercomplexTriple {
    pub fn new(i: [EndomorphismField; 3]) -> Result<Self> {
        let rank = i[0].rank();
        if rank == 0 || rank % 4 != 0 {
            return Err(GeomError::InvalidStructure(format!(
                "rank {rank} is not a positive multiple of 4"
            )));
        }
        if i.iter().any(|m| m.rank() != rank || m.bundle() != Bundle::Transversal) {
            return Err(GeomError::InvalidStructure(
                "triple members must be transversal endomorphisms of equal rank".into(),
            ));
        }
        Ok(HypercomplexTriple { i })
    }

    pub fn constant(m: [DMatrix<f64>; 3]) -> Result<Self> {
        HypercomplexTriple::new(
            m.map(|x| EndomorphismField::constant(Bundle::Transversal, JetMat::from_dmatrix(&x))),
        )
    }

    pub fn rank(&self) -> usize {
        self.i[0].rank()
    }

    /// `I'_α = Σ_β R_{αβ} I_β`.
    pub fn rotate(&self, r: &BasisRotation) -> HypercomplexTriple {
        let i = [0, 1, 2].map(|a| {
            EndomorphismField::combine(
                &(0..3)
                    .map(|b| (r.matrix[(a, b)], self.i[b].clone()))
                    .collect::<Vec<_>>(),
            )
        });
        HypercomplexTriple { i }
    }

    /// Largest entry of `I_α² + Id` and `I_αI_β − I_γ` (cyclic) at `p`.
    pub fn identity_residual(&self, p: &Point) -> Result<f64> {
        let m = [0, 1, 2].map(|a| self.i[a].eval(p));
        let [a, b, c] = m;
        let (a, b, c) = (a?, b?, c?);
        let id = DMatrix::<f64>::identity(self.rank(), self.rank());
        let mut r = 0.0_f64;
        for x in [&a, &b, &c] {
            r = r.max((x * x + &id).abs().max());
        }
        r = r.max((&a * &b - &c).abs().max());
        r = r.max((&b * &c - &a).abs().max());
        r = r.max((&c * &a - &b).abs().max());
        Ok(r)
    }
}

/// A local basis of `Q` together with a gauge `G` such that `G⁻¹ I_α G` are
/// the standard constant structures.
#[derive(Clone, Debug)]
pub struct QStructure {
    pub basis: HypercomplexTriple,
    pub gauge: EndomorphismField,
}

impl QStructure {
    pub fn new(basis: HypercomplexTriple, gauge: EndomorphismField) -> Result<Self> {
        if gauge.rank() != basis.rank() {
            return Err(GeomError::InvalidStructure("gauge rank mismatch".into()));
        }
        Ok(QStructure { basis, gauge })
    }

    /// A structure already standard in the frame: the gauge is the identity.
    pub fn standard(basis: HypercomplexTriple) -> Self {
        let r = basis.rank();
        QStructure {
            basis,
            gauge: EndomorphismField::constant(Bundle::Transversal, JetMat::identity(r)),
        }
    }

    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    pub fn q(&self) -> usize {
        self.rank() / 4
    }

    /// The same bundle `Q` described in a rotated basis.
    pub fn rotate(&self, r: &BasisRotation) -> QStructure {
        let factor = JetMat::from_dmatrix(&r.gauge_factor(self.q()));
        let g = self.gauge.clone();
        QStructure {
            basis: self.basis.rotate(r),
            gauge: EndomorphismField::from_eval(self.rank(), Bundle::Transversal, move |p, k| {
                Ok(g.eval_jet(p, k)?.mul(&factor))
            }),
        }
    }
}

/// `S = Σ a_α I_α` with `Σ a_α² = 1`.
#[derive(Clone, Debug)]
pub struct CompatibleStructure {
    pub coeffs: [ScalarField; 3],
    pub parent: QStructure,
}

impl CompatibleStructure {
    pub fn constant(a: [f64; 3], parent: QStructure) -> Self {
        let dim_hint = 0;
        let coeffs = a.map(|c| ScalarField::from_fn(dim_hint, move |_| Jet2::constant(c)));
        CompatibleStructure { coeffs, parent }
    }

    pub fn unit_residual(&self, p: &Point) -> Result<f64> {
        let mut s = 0.0;
        for c in &self.coeffs {
            s += c.eval(p)?.powi(2);
        }
        Ok((s - 1.0).abs())
    }

    pub fn realize(&self) -> EndomorphismField {
        let (coeffs, basis) = (self.coeffs.clone(), self.parent.basis.clone());
        let r = basis.rank();
        EndomorphismField::from_eval(r, Bundle::Transversal, move |p, k| {
            let mut acc = JetMat::zeros(r, r);
            for a in 0..3 {
                acc = acc.add(&basis.i[a].eval_jet(p, k)?.scale_jet(&coeffs[a].eval_jet(p, k)?));
            }
            Ok(acc)
        })
    }
}

/// `S = Σ a_α M_α` for matrices `M_α`.
pub fn combine3(a: &[f64; 3], m: &[JetMat; 3]) -> JetMat {
    m[0].scale(a[0]).add(&m[1].scale(a[1])).add(&m[2].scale(a[2]))
}

// ---------------------------------------------------------------------------
// Field-level operations (coordinate basis).

/// Coordinate matrix of the projection `π: TM → E` along `L`.
fn projector(frame: &AdaptedFrame, p: &Point, k: u8) -> Result<(JetMat, JetMat)> {
    let f = frame.matrix(p, k)?;
    let inv = f.inverse()?;
    let n = frame.dim();
    let mut d = JetMat::zeros(n, n);
    for a in frame.p()..n {
        d.set(a, a, Jet2::constant(1.0));
    }
    Ok((f.mul(&d).mul(&inv), inv))
}

/// `D̊_Y X = π[Y, X]`.
pub fn bott_partial(frame: &AdaptedFrame, y: &VectorField, x: &VectorField) -> Result<VectorField> {
    let br = lie_bracket(y, x)?;
    let (frame, y) = (frame.clone(), y.clone());
    Ok(VectorField::from_eval(frame.dim(), move |p, k| {
        let (pi, _) = projector(&frame, p, k)?;
        let yv = y.eval_jet(p, k)?;
        let leak = max_abs_jet(&pi.mul_vec(&yv));
        if leak > 1e-9 {
            return Err(GeomError::NotLeafwise { residual: leak });
        }
        Ok(pi.mul_vec(&br.eval_jet(p, k)?))
    }))
}

/// `J` on `E` extended by zero on `L`, in coordinates: `F·diag(0, J)·F⁻¹`.
pub fn tilde_extend(frame: &AdaptedFrame, j: &EndomorphismField) -> EndomorphismField {
    let (frame, j) = (frame.clone(), j.clone());
    let n = frame.dim();
    EndomorphismField::from_eval(n, Bundle::Tangent, move |p, k| {
        let f = frame.matrix(p, k)?;
        let inv = f.inverse()?;
        let jm = j.eval_jet(p, k)?;
        let mut d = JetMat::zeros(n, n);
        let np = frame.p();
        for a in 0..jm.rows() {
            for b in 0..jm.cols() {
                d.set(np + a, np + b, jm.get(a, b).clone());
            }
        }
        Ok(f.mul(&d).mul(&inv))
    })
}

/// `N_A(X₁, X₂) = [AX₁, AX₂] − A[AX₁, X₂] − A[X₁, AX₂] + A²[X₁, X₂]`.
pub fn nijenhuis(a: &EndomorphismField, x1: &VectorField, x2: &VectorField) -> Result<VectorField> {
    let ax1 = apply(a, x1)?;
    let ax2 = apply(a, x2)?;
    let t1 = lie_bracket(&ax1, &ax2)?;
    let t2 = apply(a, &lie_bracket(&ax1, x2)?)?;
    let t3 = apply(a, &lie_bracket(x1, &ax2)?)?;
    let t4 = apply(a, &apply(a, &lie_bracket(x1, x2)?)?)?;
    Ok(t1.add(&t2.scale(-1.0)).add(&t3.scale(-1.0)).add(&t4))
}

/// `(D̊_Y J)` on the transversal frame, assembled from `π[Y, J e_b] − Jπ[Y, e_b]`
/// using coordinate brackets only.
pub fn partial_derivative_of_endo(
    frame: &AdaptedFrame,
    y: &VectorField,
    j: &EndomorphismField,
    p: &Point,
) -> Result<DMatrix<f64>> {
    let r = j.rank();
    let np = frame.p();
    let mut out = DMatrix::zeros(r, r);
    let jv = j.eval(p)?;
    for b in 0..r {
        let jcol = j.clone();
        let fr = frame.clone();
        let je_b = VectorField::from_eval(frame.dim(), move |pt, k| {
            let m = jcol.eval_jet(pt, k)?;
            let mut acc = vec![Jet2::zero(); fr.dim()];
            for a in 0..m.rows() {
                let f = fr.field(np + a).eval_jet(pt, k)?;
                for (o, fi) in acc.iter_mut().zip(&f) {
                    *o += &(m.get(a, b) * fi);
                }
            }
            Ok(acc)
        });
        let t1 = bott_partial(frame, y, &je_b)?.eval(p)?;
        let t2 = bott_partial(frame, y, frame.field(np + b))?.eval(p)?;
        let c1 = frame.components(&t1, p)?;
        let c2 = frame.components(&t2, p)?;
        let c2e = DVector::from_iterator(r, c2[np..].iter().copied());
        let jc2 = &jv * c2e;
        for a in 0..r {
            out[(a, b)] = c1[np + a] - jc2[a];
        }
    }
    Ok(out)
}

/// `E`-components of `[Y_u, X]` for every leaf frame field, as a residual.
pub fn projectable_field_residual(frame: &AdaptedFrame, x: &VectorField, p: &Point) -> Result<f64> {
    let mut r = 0.0_f64;
    for y in &frame.leaf {
        let br = lie_bracket(y, x)?.eval(p)?;
        let c = frame.components(&br, p)?;
        r = r.max(c[frame.p()..].iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    Ok(r)
}

// ---------------------------------------------------------------------------
// Frame-level tensors at a point.

/// `N_A(U, V)` for a frame-component endomorphism `A` of `TM`.
pub fn nijenhuis_frame(g: &PointGeometry, a: &JetMat, u: &[Jet2], v: &[Jet2]) -> Vec<Jet2> {
    let ak = a.truncate(g.order());
    let au = a.mul_vec(u);
    let av = a.mul_vec(v);
    let t1 = g.bracket(&au, &av);
    let t2 = ak.mul_vec(&g.bracket(&au, v));
    let t3 = ak.mul_vec(&g.bracket(u, &av));
    let t4 = ak.mul_vec(&ak.mul_vec(&g.bracket(u, v)));
    (0..g.n())
        .map(|e| &t1[e] - &t2[e] - &t3[e] + &t4[e])
        .collect()
}

/// A tensor with two frame arguments: `t[a][b]` is the frame-component vector.
pub type Tensor2 = Vec<Vec<Vec<Jet2>>>;

/// `N_{J̃}` on all frame pairs.
pub fn nijenhuis_table(g: &PointGeometry, j: &JetMat) -> Tensor2 {
    let n = g.n();
    let a = g.tilde(j);
    let mut t = vec![vec![vec![Jet2::zero(); n]; n]; n];
    for x in 0..n {
        for y in (x + 1)..n {
            // Both arguments in L give J̃[Y, Y'] with [Y, Y'] ∈ L, hence zero.
            if x < g.p() && y < g.p() {
                continue;
            }
            let v = nijenhuis_frame(g, &a, &g.unit(x), &g.unit(y));
            t[y][x] = v.iter().map(|c| -c).collect();
            t[x][y] = v;
        }
    }
    t
}

/// `T^H̃ = (1/6) Σ N_{Ĩ_α}` on all frame pairs.
pub fn structure_tensor_h(g: &PointGeometry) -> Tensor2 {
    let n = g.n();
    let mut acc = vec![vec![vec![Jet2::zero(); n]; n]; n];
    for alpha in 0..3 {
        let t = nijenhuis_table(g, g.basis(alpha));
        for x in 0..n {
            for y in 0..n {
                for e in 0..n {
                    if !is_zero(&t[x][y][e]) {
                        acc[x][y][e] += &t[x][y][e].scale(1.0 / 6.0);
                    }
                }
            }
        }
    }
    acc
}

/// `tr[(I_α T)(X, −)]` over `E`, for a frame direction `x`.
fn trace_form(g: &PointGeometry, t: &Tensor2, im: &JetMat, x: usize) -> Jet2 {
    let (p, r) = (g.p(), g.rank());
    let mut acc = Jet2::zero();
    for c in 0..r {
        for d in 0..r {
            let w = im.get(c, d);
            if !is_zero(w) {
                acc += &(w * &t[x][p + c][p + d]);
            }
        }
    }
    acc
}

/// `τ_α(X) = tr[(I_α πT^H̃)(X, −)]/(4q − 2)` for transversal `X`.
pub fn tau(g: &PointGeometry, th: &Tensor2, alpha: usize, x: usize) -> Jet2 {
    trace_form(g, th, &g.basis_k(alpha), x).scale(1.0 / (4.0 * g.q() as f64 - 2.0))
}

/// `ρ_α(Y) = tr[(I_α T^H̃)(Y, −)]/(4q)` for leaf `Y`.
pub fn rho(g: &PointGeometry, th: &Tensor2, alpha: usize, y: usize) -> Jet2 {
    trace_form(g, th, &g.basis_k(alpha), y).scale(1.0 / (4.0 * g.q() as f64))
}

/// `T^Q̃` on all frame pairs, from `T^H̃`.
pub fn structure_tensor_q(g: &PointGeometry, th: &Tensor2) -> Tensor2 {
    let (n, p, r) = (g.n(), g.p(), g.rank());
    let ik = [0, 1, 2].map(|a| g.basis_k(a));
    let mut t = vec![vec![vec![Jet2::zero(); n]; n]; n];
    let taus: Vec<[Jet2; 3]> = (0..r)
        .map(|b| [0, 1, 2].map(|a| tau(g, th, a, p + b)))
        .collect();
    for a in 0..r {
        for b in (a + 1)..r {
            let mut v = vec![Jet2::zero(); n];
            for e in 0..r {
                v[p + e] = th[p + a][p + b][p + e].clone();
                for al in 0..3 {
                    v[p + e] += &(&taus[a][al] * ik[al].get(e, b));
                    v[p + e] -= &(&taus[b][al] * ik[al].get(e, a));
                }
            }
            t[p + b][p + a] = v.iter().map(|c| -c).collect();
            t[p + a][p + b] = v;
        }
    }
    for u in 0..p {
        let rhos = [0, 1, 2].map(|al| rho(g, th, al, u));
        for b in 0..r {
            let mut v = th[u][p + b].clone();
            for e in 0..r {
                for al in 0..3 {
                    v[p + e] += &(&rhos[al] * ik[al].get(e, b));
                }
            }
            t[p + b][u] = v.iter().map(|c| -c).collect();
            t[u][p + b] = v;
        }
    }
    t
}

fn max_over(t: &Tensor2, xs: std::ops::Range<usize>, ys: std::ops::Range<usize>, comps: std::ops::Range<usize>) -> f64 {
    let mut r = 0.0_f64;
    for x in xs {
        for y in ys.clone() {
            for e in comps.clone() {
                r = r.max(t[x][y][e].value().abs());
            }
        }
    }
    r
}

/// Largest component of a tensor over `L × TM`.
pub fn leaf_residual(g: &PointGeometry, t: &Tensor2) -> f64 {
    max_over(t, 0..g.p(), 0..g.n(), 0..g.n())
}

/// Largest `E`-component of a tensor over `E × E`.
pub fn transversal_residual(g: &PointGeometry, t: &Tensor2) -> f64 {
    max_over(t, g.p()..g.n(), g.p()..g.n(), g.p()..g.n())
}

/// Difference between `N_{J̃}(Y, X)` and `−J (D̊_Y J) πX` over leaf × all pairs.
pub fn j_projectable_crosscheck(g: &PointGeometry, j: &JetMat, nt: &Tensor2) -> f64 {
    let p = g.p();
    let jk = j.truncate(g.order());
    let mut worst = 0.0_f64;
    for u in 0..p {
        let m = jk.mul(&g.partial_derivative_of_endo(u, j)).scale(-1.0);
        for b in 0..g.n() {
            for e in 0..g.n() {
                let rhs = if e >= p && b >= p { m.get(e - p, b - p).value() } else { 0.0 };
                worst = worst.max((nt[u][b][e].value() - rhs).abs());
            }
        }
    }
    worst
}

/// Least-squares fit `T^H̃(Y, X) ≈ Σ κ_α(Y) Ĩ_α X` for each leaf direction;
/// returns `(κ, fit residual)` per leaf field.
pub fn kappa_fit(g: &PointGeometry, th: &Tensor2) -> Vec<([f64; 3], f64)> {
    let (n, p, r) = (g.n(), g.p(), g.rank());
    let ik = [0, 1, 2].map(|a| g.basis_k(a).values());
    (0..p)
        .map(|u| {
            let rows = r * n;
            let mut a = DMatrix::zeros(rows, 3);
            let mut b = DVector::zeros(rows);
            for x in 0..r {
                for e in 0..n {
                    let row = x * n + e;
                    b[row] = th[u][p + x][e].value();
                    if e >= p {
                        for al in 0..3 {
                            a[(row, al)] = ik[al][(e - p, x)];
                        }
                    }
                }
            }
            let (k, res) = least_squares(&a, &b);
            ([k[0], k[1], k[2]], res)
        })
        .collect()
}

/// Cross-check of the leafwise identity
/// `N_{Ĩ_α}(Y, X) = (3/2)(T^H̃(Y, X) + Ĩ_α T^H̃(Y, Ĩ_α X))`.
pub fn leafwise_identity_residual(g: &PointGeometry, th: &Tensor2) -> f64 {
    let (n, p, r) = (g.n(), g.p(), g.rank());
    let mut worst = 0.0_f64;
    for alpha in 0..3 {
        let nt = nijenhuis_table(g, g.basis(alpha));
        let im = g.basis_k(alpha);
        for u in 0..p {
            for x in 0..r {
                let mut ti = vec![Jet2::zero(); r];
                for y in 0..r {
                    for e in 0..r {
                        ti[e] += &(im.get(y, x) * &th[u][p + y][p + e]);
                    }
                }
                let iti = im.mul_vec(&ti);
                for e in 0..n {
                    let extra = if e >= p { iti[e - p].value() } else { 0.0 };
                    let rhs = 1.5 * (th[u][p + x][e].value() + extra);
                    worst = worst.max((nt[u][p + x][e].value() - rhs).abs());
                }
            }
        }
    }
    worst
}
