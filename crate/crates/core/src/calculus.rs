//! Differentiable fields over a single coordinate chart.
//!
//! Every field is a closure `(point, order) -> jets`. Primitive fields are
//! written as formulas in seeded coordinate jets; derived fields (brackets,
//! products) request their inputs one order higher as needed.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};
use crate::jet::Jet2;
use crate::linalg::{condition_number, JetMat, CONDITION_BOUND};

/// Highest jet order any field is asked for.
pub const MAX_ORDER: u8 = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Coordinate jets of the given order at this point.
    pub fn seed(&self, order: u8) -> Vec<Jet2> {
        Jet2::seed(&self.coords, order)
    }
}

/// An axis-aligned coordinate box.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Chart {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        Chart { lo, hi }
    }

    pub fn cube(dim: usize, half: f64) -> Self {
        Chart::new(vec![-half; dim], vec![half; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.dim()
            && p
                .coords
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (l, h))| *x >= *l && *x <= *h)
    }

    pub fn check(&self, p: &Point) -> Result<()> {
        if p.dim() != self.dim() {
            return Err(GeomError::ChartMismatch {
                expected: self.dim(),
                found: p.dim(),
            });
        }
        if !self.contains(p) {
            return Err(GeomError::OutsideDomain {
                coords: p.coords.clone(),
            });
        }
        Ok(())
    }

    /// Maps a point of the unit cube `[0,1]^n` into the box.
    pub fn from_unit(&self, u: &[f64]) -> Point {
        Point::new(
            u.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .map(|(t, (l, h))| l + t * (h - l))
                .collect(),
        )
    }
}

type VecFn = dyn Fn(&Point, u8) -> Result<Vec<Jet2>> + Send + Sync;
type MatFn = dyn Fn(&Point, u8) -> Result<JetMat> + Send + Sync;
type ScalarFn = dyn Fn(&Point, u8) -> Result<Jet2> + Send + Sync;

/// A vector field given by its coefficients in the coordinate basis.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    f: Arc<VecFn>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorField(dim={})", self.dim)
    }
}

impl VectorField {
    /// A field given by a formula in the coordinate jets.
    pub fn from_fn(dim: usize, f: impl Fn(&[Jet2]) -> Vec<Jet2> + Send + Sync + 'static) -> Self {
        VectorField {
            dim,
            f: Arc::new(move |p: &Point, order| {
                if p.dim() != dim {
                    return Err(GeomError::ChartMismatch {
                        expected: dim,
                        found: p.dim(),
                    });
                }
                Ok(f(&p.seed(order)))
            }),
        }
    }

    /// A field with full control over evaluation.
    pub fn from_eval(
        dim: usize,
        f: impl Fn(&Point, u8) -> Result<Vec<Jet2>> + Send + Sync + 'static,
    ) -> Self {
        VectorField { dim, f: Arc::new(f) }
    }

    pub fn constant(v: Vec<f64>) -> Self {
        let dim = v.len();
        VectorField::from_fn(dim, move |_| v.iter().map(|&c| Jet2::constant(c)).collect())
    }

    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        VectorField::constant(v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval_jet(&self, p: &Point, order: u8) -> Result<Vec<Jet2>> {
        if order > MAX_ORDER {
            return Err(GeomError::JetOrder(format!(
                "order {order} requested, at most {MAX_ORDER} supported"
            )));
        }
        (self.f)(p, order)
    }

    pub fn eval(&self, p: &Point) -> Result<Vec<f64>> {
        Ok(self.eval_jet(p, 0)?.iter().map(Jet2::value).collect())
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        let (a, b) = (self.clone(), other.clone());
        VectorField::from_eval(self.dim, move |p, k| {
            let x = a.eval_jet(p, k)?;
            let y = b.eval_jet(p, k)?;
            Ok(x.iter().zip(&y).map(|(u, v)| u + v).collect())
        })
    }

    pub fn scale(&self, s: f64) -> VectorField {
        let a = self.clone();
        VectorField::from_eval(self.dim, move |p, k| {
            Ok(a.eval_jet(p, k)?.iter().map(|u| u.scale(s)).collect())
        })
    }

    /// The field `f·X` for a scalar field `f`.
    pub fn times(&self, f: &ScalarField) -> VectorField {
        let (a, f) = (self.clone(), f.clone());
        VectorField::from_eval(self.dim, move |p, k| {
            let s = f.eval_jet(p, k)?;
            Ok(a.eval_jet(p, k)?.iter().map(|u| u * &s).collect())
        })
    }
}

/// A scalar function on the chart.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    f: Arc<ScalarFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField(dim={})", self.dim)
    }
}

impl ScalarField {
    pub fn from_fn(dim: usize, f: impl Fn(&[Jet2]) -> Jet2 + Send + Sync + 'static) -> Self {
        ScalarField {
            dim,
            f: Arc::new(move |p: &Point, order| Ok(f(&p.seed(order)))),
        }
    }

    pub fn eval_jet(&self, p: &Point, order: u8) -> Result<Jet2> {
        (self.f)(p, order)
    }

    pub fn eval(&self, p: &Point) -> Result<f64> {
        Ok(self.eval_jet(p, 0)?.value())
    }
}

/// Which basis an endomorphism matrix is written in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bundle {
    /// Coordinate coefficients of the whole tangent bundle.
    Tangent,
    /// Components in the transversal frame fields of an adapted frame.
    Transversal,
    /// Components in the leaf frame fields of an adapted frame.
    Leaf,
}

#[derive(Clone)]
pub struct EndomorphismField {
    rank: usize,
    bundle: Bundle,
    f: Arc<MatFn>,
}

impl fmt::Debug for EndomorphismField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EndomorphismField(rank={}, {:?})", self.rank, self.bundle)
    }
}

impl EndomorphismField {
    /// `f` receives the coordinate jets and returns a row-major `rank × rank` matrix.
    pub fn from_fn(
        rank: usize,
        bundle: Bundle,
        f: impl Fn(&[Jet2]) -> JetMat + Send + Sync + 'static,
    ) -> Self {
        EndomorphismField {
            rank,
            bundle,
            f: Arc::new(move |p: &Point, order| Ok(f(&p.seed(order)))),
        }
    }

    pub fn from_eval(
        rank: usize,
        bundle: Bundle,
        f: impl Fn(&Point, u8) -> Result<JetMat> + Send + Sync + 'static,
    ) -> Self {
        EndomorphismField {
            rank,
            bundle,
            f: Arc::new(f),
        }
    }

    pub fn constant(bundle: Bundle, m: JetMat) -> Self {
        let rank = m.rows();
        EndomorphismField::from_eval(rank, bundle, move |_, _| Ok(m.clone()))
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn bundle(&self) -> Bundle {
        self.bundle
    }

    pub fn eval_jet(&self, p: &Point, order: u8) -> Result<JetMat> {
        if order > MAX_ORDER {
            return Err(GeomError::JetOrder(format!(
                "order {order} requested, at most {MAX_ORDER} supported"
            )));
        }
        let m = (self.f)(p, order)?;
        debug_assert_eq!((m.rows(), m.cols()), (self.rank, self.rank));
        Ok(m)
    }

    pub fn eval(&self, p: &Point) -> Result<DMatrix<f64>> {
        Ok(self.eval_jet(p, 0)?.values())
    }

    /// Pointwise linear combination `Σ c_i A_i` with constant coefficients.
    pub fn combine(parts: &[(f64, EndomorphismField)]) -> EndomorphismField {
        let rank = parts[0].1.rank;
        let bundle = parts[0].1.bundle;
        let parts: Vec<_> = parts.to_vec();
        EndomorphismField::from_eval(rank, bundle, move |p, k| {
            let mut acc = JetMat::zeros(rank, rank);
            for (c, a) in &parts {
                if *c != 0.0 {
                    acc = acc.add(&a.eval_jet(p, k)?.scale(*c));
                }
            }
            Ok(acc)
        })
    }

    /// Conjugation `G A G⁻¹` by a pointwise invertible matrix field.
    pub fn conjugate(&self, g: &EndomorphismField) -> EndomorphismField {
        let (a, g) = (self.clone(), g.clone());
        EndomorphismField::from_eval(self.rank, self.bundle, move |p, k| {
            let gm = g.eval_jet(p, k)?;
            Ok(gm.mul(&a.eval_jet(p, k)?).mul(&gm.inverse()?))
        })
    }

    pub fn mul(&self, other: &EndomorphismField) -> EndomorphismField {
        let (a, b) = (self.clone(), other.clone());
        EndomorphismField::from_eval(self.rank, self.bundle, move |p, k| {
            Ok(a.eval_jet(p, k)?.mul(&b.eval_jet(p, k)?))
        })
    }
}

/// A Riemannian metric in coordinates.
#[derive(Clone)]
pub struct MetricField {
    dim: usize,
    f: Arc<MatFn>,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MetricField(dim={})", self.dim)
    }
}

impl MetricField {
    /// `f` returns the full symmetric matrix; its upper triangle is mirrored
    /// from the lower one so symmetry is exact.
    pub fn from_fn(dim: usize, f: impl Fn(&[Jet2]) -> JetMat + Send + Sync + 'static) -> Self {
        MetricField {
            dim,
            f: Arc::new(move |p: &Point, order| {
                let mut m = f(&p.seed(order));
                for i in 0..dim {
                    for j in 0..i {
                        let v = m.get(i, j).clone();
                        m.set(j, i, v);
                    }
                }
                Ok(m)
            }),
        }
    }

    pub fn euclidean(dim: usize) -> Self {
        MetricField::from_fn(dim, move |_| JetMat::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval_jet(&self, p: &Point, order: u8) -> Result<JetMat> {
        (self.f)(p, order)
    }

    /// Metric at `p`, with positive-definiteness checked by Cholesky.
    pub fn eval(&self, p: &Point) -> Result<DMatrix<f64>> {
        let g = self.eval_jet(p, 0)?.values();
        if g.clone().cholesky().is_none() {
            return Err(GeomError::Degenerate {
                condition: f64::INFINITY,
            });
        }
        Ok(g)
    }

    pub fn inner(&self, p: &Point, u: &[f64], v: &[f64]) -> Result<f64> {
        let g = self.eval(p)?;
        let (u, v) = (DVector::from_column_slice(u), DVector::from_column_slice(v));
        Ok(u.dot(&(g * v)))
    }
}

/// `[X, Y] = DY·X − DX·Y`, evaluable one order below its inputs.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField> {
    if x.dim != y.dim {
        return Err(GeomError::ChartMismatch {
            expected: x.dim,
            found: y.dim,
        });
    }
    let (x, y) = (x.clone(), y.clone());
    Ok(VectorField::from_eval(x.dim, move |p, k| {
        if k >= MAX_ORDER {
            return Err(GeomError::JetOrder(
                "a bracket is evaluable to at most order 1".into(),
            ));
        }
        let xs = x.eval_jet(p, k + 1)?;
        let ys = y.eval_jet(p, k + 1)?;
        Ok(ys
            .iter()
            .zip(&xs)
            .map(|(yi, xi)| (yi.directional(&xs) - xi.directional(&ys)).truncate(k))
            .collect())
    }))
}

/// Applies a tangent endomorphism field to a vector field.
pub fn apply(a: &EndomorphismField, x: &VectorField) -> Result<VectorField> {
    if a.bundle != Bundle::Tangent || a.rank != x.dim {
        return Err(GeomError::InvalidArgument(
            "apply needs a tangent endomorphism of matching rank".into(),
        ));
    }
    let (a, x) = (a.clone(), x.clone());
    Ok(VectorField::from_eval(x.dim, move |p, k| {
        Ok(a.eval_jet(p, k)?.mul_vec(&x.eval_jet(p, k)?))
    }))
}

/// Leaf and transversal frame fields splitting `TM = L ⊕ E`.
#[derive(Clone, Debug)]
pub struct AdaptedFrame {
    pub leaf: Vec<VectorField>,
    pub transversal: Vec<VectorField>,
}

impl AdaptedFrame {
    pub fn new(leaf: Vec<VectorField>, transversal: Vec<VectorField>) -> Result<Self> {
        if leaf.is_empty() || transversal.is_empty() || transversal.len() % 4 != 0 {
            return Err(GeomError::InvalidStructure(format!(
                "need p ≥ 1 leaf fields and 4q ≥ 4 transversal fields, got {} and {}",
                leaf.len(),
                transversal.len()
            )));
        }
        let dim = leaf[0].dim();
        if leaf.len() + transversal.len() != dim
            || leaf.iter().chain(&transversal).any(|f| f.dim() != dim)
        {
            return Err(GeomError::ChartMismatch {
                expected: dim,
                found: leaf.len() + transversal.len(),
            });
        }
        Ok(AdaptedFrame { leaf, transversal })
    }

    pub fn p(&self) -> usize {
        self.leaf.len()
    }

    pub fn q(&self) -> usize {
        self.transversal.len() / 4
    }

    pub fn dim(&self) -> usize {
        self.leaf.len() + self.transversal.len()
    }

    /// Frame field by global index: leaf fields first.
    pub fn field(&self, a: usize) -> &VectorField {
        if a < self.p() {
            &self.leaf[a]
        } else {
            &self.transversal[a - self.p()]
        }
    }

    /// Matrix whose columns are the frame fields at `p`.
    pub fn matrix(&self, p: &Point, order: u8) -> Result<JetMat> {
        let cols = (0..self.dim())
            .map(|a| self.field(a).eval_jet(p, order))
            .collect::<Result<Vec<_>>>()?;
        Ok(JetMat::from_columns(&cols))
    }

    /// Condition number of the frame matrix at `p`.
    pub fn condition(&self, p: &Point) -> Result<f64> {
        Ok(condition_number(&self.matrix(p, 0)?.values()))
    }

    /// Frame components of a coordinate vector.
    pub fn components(&self, v: &[f64], p: &Point) -> Result<Vec<f64>> {
        let f = self.matrix(p, 0)?.values();
        let cond = condition_number(&f);
        if !cond.is_finite() || cond > CONDITION_BOUND {
            return Err(GeomError::Degenerate { condition: cond });
        }
        let x = f
            .lu()
            .solve(&DVector::from_column_slice(v))
            .ok_or(GeomError::Degenerate { condition: cond })?;
        Ok(x.iter().copied().collect())
    }
}

/// Splits `v` into its transversal and leaf parts.
pub fn decompose(frame: &AdaptedFrame, v: &[f64], p: &Point) -> Result<(Vec<f64>, Vec<f64>)> {
    let comps = frame.components(v, p)?;
    let f = frame.matrix(p, 0)?.values();
    let n = frame.dim();
    let np = frame.p();
    let mut e = vec![0.0; n];
    let mut l = vec![0.0; n];
    for (a, c) in comps.iter().enumerate() {
        let target = if a < np { &mut l } else { &mut e };
        for i in 0..n {
            target[i] += c * f[(i, a)];
        }
    }
    Ok((e, l))
}

/// A `g`-orthonormal basis of the `g`-orthogonal complement of `spanned` at `p`.
pub fn gram_schmidt_complement(
    g: &MetricField,
    spanned: &[VectorField],
    p: &Point,
) -> Result<Vec<Vec<f64>>> {
    let gm = g.eval(p)?;
    let n = gm.nrows();
    let inner = |u: &DVector<f64>, v: &DVector<f64>| u.dot(&(&gm * v));
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for f in spanned {
        let mut v = DVector::from_vec(f.eval(p)?);
        let scale = inner(&v, &v).sqrt();
        for b in &basis {
            let c = inner(b, &v);
            v -= b * c;
        }
        let norm = inner(&v, &v).sqrt();
        if !(norm > 1e-10 * scale.max(1.0)) {
            return Err(GeomError::InvalidArgument(
                "spanned fields are dependent at the point".into(),
            ));
        }
        basis.push(v / norm);
    }
    let k = basis.len();
    let mut out = Vec::new();
    for i in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        // Two passes keep the result orthogonal to working precision.
        for _ in 0..2 {
            for b in &basis {
                let c = inner(b, &v);
                v -= b * c;
            }
        }
        let norm = inner(&v, &v).sqrt();
        if norm > 1e-6 {
            let u = v / norm;
            out.push(u.iter().copied().collect());
            basis.push(u);
        }
    }
    if out.len() != n - k {
        return Err(GeomError::Degenerate {
            condition: f64::INFINITY,
        });
    }
    Ok(out)
}

/// Entrywise derivative of `phi` along `x` at `p`.
pub fn directional_derivative_of_endo(
    phi: &EndomorphismField,
    x: &VectorField,
    p: &Point,
) -> Result<DMatrix<f64>> {
    let m = phi.eval_jet(p, 1)?;
    let v = x.eval_jet(p, 0)?;
    Ok(m.map(|e| e.directional(&v)).values())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_fields_commute() {
        let x = VectorField::coordinate(3, 0);
        let y = VectorField::coordinate(3, 1);
        let b = lie_bracket(&x, &y).unwrap();
        let v = b.eval(&Point::new(vec![0.1, 0.2, 0.3])).unwrap();
        assert!(v.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn rotation_and_radial_fields_commute() {
        let rot = VectorField::from_fn(2, |x| vec![-x[1].clone(), x[0].clone()]);
        let rad = VectorField::from_fn(2, |x| x.to_vec());
        let b = lie_bracket(&rot, &rad).unwrap();
        let v = b.eval(&Point::new(vec![0.3, -0.7])).unwrap();
        assert!(v.iter().all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn bracket_of_bracket_only_at_order_zero() {
        let x = VectorField::from_fn(2, |x| vec![&x[0] * &x[1], x[0].clone()]);
        let y = VectorField::from_fn(2, |x| vec![x[1].clone(), &x[0] * &x[0]]);
        let b = lie_bracket(&x, &y).unwrap();
        let bb = lie_bracket(&x, &b).unwrap();
        let p = Point::new(vec![0.2, 0.5]);
        assert!(bb.eval_jet(&p, 0).is_ok());
        assert!(matches!(bb.eval_jet(&p, 1), Err(GeomError::JetOrder(_))));
    }

    #[test]
    fn complement_in_euclidean_r3() {
        let g = MetricField::euclidean(3);
        let e1 = VectorField::coordinate(3, 0);
        let c = gram_schmidt_complement(&g, &[e1], &Point::new(vec![0.0; 3])).unwrap();
        assert_eq!(c.len(), 2);
        for v in &c {
            assert!(v[0].abs() < 1e-12);
            assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn decompose_recovers_addends() {
        let leaf = vec![VectorField::from_fn(2, |x| {
            vec![Jet2::constant(1.0), x[0].clone()]
        })];
        let tr: Vec<VectorField> = Vec::new();
        // A 2-dimensional chart cannot host 4q transversal fields, so test the
        // splitting directly on a 5-dimensional frame.
        assert!(AdaptedFrame::new(leaf, tr).is_err());
        let leaf = vec![VectorField::from_fn(5, |x| {
            let mut v = vec![Jet2::zero(); 5];
            v[0] = Jet2::constant(1.0);
            v[1] = x[0].clone();
            v
        })];
        let tr = (1..5).map(|i| VectorField::coordinate(5, i)).collect();
        let frame = AdaptedFrame::new(leaf, tr).unwrap();
        let p = Point::new(vec![0.5, 0.0, 0.0, 0.0, 0.0]);
        let l = vec![1.0, 0.5, 0.0, 0.0, 0.0];
        let e = vec![0.0, 0.0, 2.0, 0.0, -1.0];
        let v: Vec<f64> = l.iter().zip(&e).map(|(a, b)| a + b).collect();
        let (ep, lp) = decompose(&frame, &v, &p).unwrap();
        for i in 0..5 {
            assert!((ep[i] - e[i]).abs() < 1e-12);
            assert!((lp[i] - l[i]).abs() < 1e-12);
        }
    }
}
