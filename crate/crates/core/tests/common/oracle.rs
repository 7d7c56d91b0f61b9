//! Finite-difference and holonomy oracles, returning worst residuals.

use super::*;
use foliq_core::calculus::{directional_derivative_of_endo, lie_bracket};
use foliq_core::connections::curvature_table;
use foliq_core::geometry::PointGeometry;
use foliq_core::models::{build_s7_sasakian, Model};
use nalgebra::{DMatrix, DVector};

pub const DIM: usize = 4;
pub const FIELDS: usize = 20;

/// `[X, Y] = DY·X − DX·Y` with both Jacobians from central differences.
pub fn fd_bracket(
    x: &dyn Fn(&[f64]) -> Vec<f64>,
    y: &dyn Fn(&[f64]) -> Vec<f64>,
    p: &[f64],
    h: f64,
) -> Vec<f64> {
    let dy_x = fd_dir(y, p, &x(p), h);
    let dx_y = fd_dir(x, p, &y(p), h);
    dy_x.iter().zip(dx_y).map(|(a, b)| a - b).collect()
}

pub fn eval_all(ps: &[Poly]) -> impl Fn(&[f64]) -> Vec<f64> + '_ {
    move |x| ps.iter().map(|p| p.eval(x)).collect()
}

/// Jet bracket against first-order differences on random polynomial fields.
pub fn bracket_first_order(seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst = 0.0_f64;
    for _ in 0..FIELDS {
        let px = random_polys(&mut rng, DIM, DIM);
        let py = random_polys(&mut rng, DIM, DIM);
        let p = random_point(&mut rng, DIM, 0.8);
        let b = lie_bracket(&poly_field(&px), &poly_field(&py)).unwrap().eval(&p).unwrap();
        let fd = fd_bracket(&eval_all(&px), &eval_all(&py), &p.coords, 1e-5);
        worst = worst.max(max_diff(&b, &fd));
    }
    worst
}

/// `[X, [X, Y]]` against nested differences.
pub fn bracket_second_order(seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst = 0.0_f64;
    for _ in 0..FIELDS {
        let px = random_polys(&mut rng, DIM, DIM);
        let py = random_polys(&mut rng, DIM, DIM);
        let p = random_point(&mut rng, DIM, 0.8);
        let x = poly_field(&px);
        let bb = lie_bracket(&x, &lie_bracket(&x, &poly_field(&py)).unwrap()).unwrap();
        let v = bb.eval(&p).unwrap();
        let (fx, fy) = (eval_all(&px), eval_all(&py));
        let inner = |q: &[f64]| fd_bracket(&fx, &fy, q, 1e-4);
        let fd = fd_bracket(&fx, &inner, &p.coords, 1e-3);
        worst = worst.max(max_diff(&v, &fd));
    }
    worst
}

/// `(first, second)`: directional derivative of an endomorphism field and
/// second partials of its entries, against differences.
pub fn endomorphism_derivatives(seed: u64) -> (f64, f64) {
    let mut rng = rng(seed);
    let mut first = 0.0_f64;
    let mut second = 0.0_f64;
    for _ in 0..FIELDS {
        let pe = random_polys(&mut rng, DIM, DIM * DIM);
        let px = random_polys(&mut rng, DIM, DIM);
        let p = random_point(&mut rng, DIM, 0.8);
        let phi = poly_endo(&pe, DIM);
        let d = directional_derivative_of_endo(&phi, &poly_field(&px), &p).unwrap();
        let xv = eval_all(&px)(&p.coords);
        let fd = fd_dir(&eval_all(&pe), &p.coords, &xv, 1e-5);
        let fdm = DMatrix::from_row_slice(DIM, DIM, &fd);
        first = first.max((d - fdm).abs().max());

        let m = phi.eval_jet(&p, 2).unwrap();
        let h = 1e-3;
        for (k, poly) in pe.iter().enumerate() {
            let e = m.get(k / DIM, k % DIM);
            for i in 0..DIM {
                for j in 0..DIM {
                    let at = |si: f64, sj: f64| {
                        let mut q = p.coords.clone();
                        q[i] += si * h;
                        q[j] += sj * h;
                        poly.eval(&q)
                    };
                    let fd2 = (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0))
                        / (4.0 * h * h);
                    second = second.max((e.dd(i, j) - fd2).abs());
                }
            }
        }
    }
    (first, second)
}

/// `Γ(v)` for a coordinate vector `v`, in transversal frame components.
fn coordinate_gamma(m: &Model, x: &[f64], v: &[f64]) -> DMatrix<f64> {
    let g = PointGeometry::new(&m.frame, &m.qs, &Point::new(x.to_vec()), 0).unwrap();
    let gamma = m.twistor_connection().gamma(&g).unwrap();
    let comps = g.frame_inverse().values() * DVector::from_column_slice(v);
    let r = g.rank();
    let mut out = DMatrix::zeros(r, r);
    for (a, c) in comps.iter().enumerate() {
        out += gamma[a].values() * *c;
    }
    out
}

/// Parallel transport along a straight segment, by RK4 on `s' = −Γ(v) s`.
fn transport(m: &Model, from: &[f64], v: &[f64], steps: usize) -> DMatrix<f64> {
    let r = 4 * m.q();
    let mut s = DMatrix::identity(r, r);
    let dt = 1.0 / steps as f64;
    let at = |t: f64| -> Vec<f64> { from.iter().zip(v).map(|(a, b)| a + t * b).collect() };
    let rhs = |t: f64, s: &DMatrix<f64>| -> DMatrix<f64> { -coordinate_gamma(m, &at(t), v) * s };
    for k in 0..steps {
        let t = k as f64 * dt;
        let k1 = rhs(t, &s);
        let k2 = rhs(t + dt / 2.0, &(&s + &k1 * (dt / 2.0)));
        let k3 = rhs(t + dt / 2.0, &(&s + &k2 * (dt / 2.0)));
        let k4 = rhs(t + dt, &(&s + &k3 * dt));
        s += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    s
}

/// `(H − I)/h²` for the square loop of side `h` around `p` in the `(i, j)` plane.
fn holonomy(m: &Model, p: &[f64], i: usize, j: usize, h: f64) -> DMatrix<f64> {
    let n = p.len();
    let e = |k: usize, s: f64| -> Vec<f64> { (0..n).map(|c| if c == k { s } else { 0.0 }).collect() };
    let mut corner = p.to_vec();
    corner[i] -= h / 2.0;
    corner[j] -= h / 2.0;
    let id = DMatrix::identity(4 * m.q(), 4 * m.q());
    let mut total = id.clone();
    for v in [e(i, h), e(j, h), e(i, -h), e(j, -h)] {
        total = transport(m, &corner, &v, 8) * total;
        corner = corner.iter().zip(&v).map(|(a, b)| a + b).collect();
    }
    (total - id) / (h * h)
}

/// Curvature of the twistor connection on S⁷ against small-loop holonomy.
pub fn s7_holonomy() -> f64 {
    let m = build_s7_sasakian().unwrap();
    let p = vec![0.05, -0.1, 0.12, 0.03, -0.07, 0.09, 0.02];
    let g = PointGeometry::new(&m.frame, &m.qs, &Point::new(p.clone()), 1).unwrap();
    let gamma = m.twistor_connection().gamma(&g).unwrap();
    let table = curvature_table(&g, &gamma).unwrap();
    let inv = g.frame_inverse().values();
    let mut worst = 0.0_f64;
    for (i, j) in [(0, 1), (0, 4), (2, 5), (3, 6)] {
        let mut r = DMatrix::zeros(4, 4);
        for a in 0..g.n() {
            for b in 0..g.n() {
                if a != b {
                    r += table[a][b].values() * (inv[(a, i)] * inv[(b, j)]);
                }
            }
        }
        // The loop starts at a corner, so the error is a series in h; two
        // Richardson steps remove the O(h) and O(h²) terms.
        let h = 0.02;
        let [h1, h2, h4] = [1.0, 2.0, 4.0].map(|d| holonomy(&m, &p, i, j, h / d));
        let (r1, r2) = (&h2 * 2.0 - &h1, &h4 * 2.0 - &h2);
        let hol = (r2 * 4.0 - r1) / 3.0;
        worst = worst.max((hol + &r).abs().max());
    }
    worst
}
