//! Jet derivatives against finite differences, and curvature against holonomy.

mod common;

use common::oracle::*;
use common::*;
use foliq_core::calculus::Point;
use foliq_core::geometry::PointGeometry;
use foliq_core::models::build_s7_sasakian;
use foliq_core::Jet2;

#[test]
fn bracket_matches_first_order_differences() {
    let r = bracket_first_order(1);
    assert!(r < 1e-6, "{r:e}");
}

#[test]
fn iterated_bracket_matches_nested_differences() {
    let r = bracket_second_order(2);
    assert!(r < 1e-4, "{r:e}");
}

#[test]
fn endomorphism_derivative_matches_differences() {
    let (first, second) = endomorphism_derivatives(3);
    assert!(first < 1e-6, "{first:e}");
    assert!(second < 1e-4, "{second:e}");
}

#[test]
fn frame_derivative_matches_differences() {
    let mut rng = rng(4);
    let m = build_s7_sasakian().unwrap();
    for _ in 0..FIELDS {
        let f = random_polys(&mut rng, DIM, 1).remove(0);
        let p = random_point(&mut rng, DIM, 0.8);
        let pt = Point::new(p.coords.iter().chain(&[0.1, -0.1, 0.05]).map(|v| v * 0.3).collect());
        let g = PointGeometry::new(&m.frame, &m.qs, &pt, 1).unwrap();
        let h = f.eval_jet(&pt.seed(2).into_iter().take(DIM).collect::<Vec<Jet2>>());
        let frame = m.frame.matrix(&pt, 0).unwrap().values();
        for a in 0..g.n() {
            let col: Vec<f64> = frame.column(a).iter().copied().collect();
            let fd = fd_dir(&|x: &[f64]| vec![f.eval(&x[..DIM])], &pt.coords, &col, 1e-5);
            assert!((g.deriv(a, &h).value() - fd[0]).abs() < 1e-6);
        }
    }
}

#[test]
fn curvature_matches_holonomy_on_s7() {
    let r = s7_holonomy();
    assert!(r < 1e-4, "{r:e}");
}
