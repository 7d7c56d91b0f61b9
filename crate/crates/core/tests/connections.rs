//! Connection builders: Bott property, torsion, curvature and same-pair criteria.

use foliq_core::connections::*;
use foliq_core::geometry::PointGeometry;
use foliq_core::models::{build_model, Model};
use foliq_core::quaternion::random_unit;
use foliq_core::structures::{structure_tensor_h, structure_tensor_q};
use foliq_core::suite::sample_points;
use foliq_core::twistor::same_pair_residuals;
use foliq_core::JetMat;
use nalgebra::DMatrix;
use rand::SeedableRng;

const MODELS: &[&str] = &["flat", "flat,q=2", "s7", "lchk", "perturbed,kind=twist"];

fn geometries(m: &Model, count: usize) -> Vec<PointGeometry> {
    sample_points(m, count, 3)
        .iter()
        .map(|p| PointGeometry::new(&m.frame, &m.qs, p, 1).unwrap())
        .collect()
}

fn e_torsion(g: &PointGeometry, gamma: &[JetMat]) -> f64 {
    let r = g.rank();
    torsion(g, gamma)[..r]
        .iter()
        .map(|t| {
            let mut w = 0.0_f64;
            for c in 0..r {
                for b in 0..r {
                    w = w.max(t.get(c, b).value().abs());
                }
            }
            w
        })
        .fold(0.0, f64::max)
}

#[test]
fn builders_are_bott_connections() {
    for spec in MODELS {
        let m = build_model(spec).unwrap();
        for g in geometries(&m, 3) {
            for c in [default_bott(), obata(), bott_obata(), m.twistor_connection()] {
                let gam = c.gamma(&g).unwrap();
                assert!(bott_residual(&g, &gam) < 1e-12, "{} on {spec}", c.name);
            }
        }
    }
}

#[test]
fn torsion_identities_hold() {
    for spec in MODELS {
        let m = build_model(spec).unwrap();
        for g in geometries(&m, 3) {
            let th = structure_tensor_h(&g);
            let tq = structure_tensor_q(&g, &th);
            let bo = bott_obata().gamma(&g).unwrap();
            assert!(torsion_vs_tensor(&g, &torsion(&g, &bo), &th) < 1e-10, "{spec}");
            let bop = m.twistor_connection_unshifted().gamma(&g).unwrap();
            assert!(torsion_vs_tensor(&g, &torsion(&g, &bop), &tq) < 1e-10, "{spec}");
            assert!(q_preservation_residual(&g, &bop) < 1e-10, "{spec}");
        }
    }
}

#[test]
fn obata_preserves_the_basis_when_it_is_projectable() {
    for spec in ["flat", "flat,q=2", "perturbed,kind=twist"] {
        let m = build_model(spec).unwrap();
        for g in geometries(&m, 3) {
            let gam = bott_obata().gamma(&g).unwrap();
            assert!(h_preservation_residual(&g, &gam) < 1e-10, "{spec}");
        }
    }
}

#[test]
fn riemannian_bott_is_torsion_free_on_riemannian_foliations() {
    for spec in ["flat", "s7", "lchk"] {
        let m = build_model(spec).unwrap();
        let d = riemannian_bott(m.metric.clone().unwrap());
        for g in geometries(&m, 3) {
            let gam = d.gamma(&g).unwrap();
            assert!(bott_residual(&g, &gam) < 1e-12);
            assert!(e_torsion(&g, &gam) < 1e-10, "{spec}: {:e}", e_torsion(&g, &gam));
        }
    }
}

#[test]
fn induced_forms_agree_between_fit_and_trace() {
    for spec in MODELS {
        let m = build_model(spec).unwrap();
        for g in geometries(&m, 3) {
            let gam = m.twistor_connection().gamma(&g).unwrap();
            for d in 0..g.n() {
                let (f, res) = induced_q_forms_fit(&g, &gam, d);
                let t = induced_q_forms_trace(&g, &gam, d).unwrap();
                assert!(res < 1e-10);
                let diff = [f.a - t[0].value(), f.b - t[1].value(), f.c - t[2].value()];
                assert!(diff.iter().all(|v| v.abs() < 1e-10), "{spec}: {diff:?}");
            }
        }
    }
}

/// Adds `coef(X)·M` to the coefficients in every `E` direction.
fn shift_by(c: BottConnection, m: impl Fn(&PointGeometry) -> JetMat + Send + Sync + 'static) -> BottConnection {
    c.shifted("shift", move |g| {
        let mut out = vec![JetMat::zeros(g.rank(), g.rank()); g.n()];
        let x0 = g.coords()[0].truncate(g.order());
        for a in 0..g.rank() {
            out[g.p() + a] = m(g).scale_jet(&x0).scale(1.0 + a as f64);
        }
        Ok(out)
    })
}

#[test]
fn same_pair_criteria_agree() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let samples: Vec<[f64; 3]> = (0..6).map(|_| random_unit::<_, 3>(&mut rng)).collect();
    let m = build_model("flat,q=2").unwrap();
    let d = m.twistor_connection();
    // Left multiplication by i commutes with the (right-multiplication) basis.
    let commuting = |g: &PointGeometry| {
        let r = g.rank();
        let mut l = DMatrix::zeros(r, r);
        let li = foliq_core::quaternion::left_matrix(&foliq_core::quaternion::I);
        for b in 0..r / 4 {
            for i in 0..4 {
                for j in 0..4 {
                    l[(4 * b + i, 4 * b + j)] = li[i][j];
                }
            }
        }
        JetMat::from_dmatrix(&l)
    };
    let eta = OproiuData {
        a: Vec::new(),
        eta: vec![[0.3, -0.2, 0.1]; 8],
    };
    let pairs: Vec<(BottConnection, BottConnection, bool)> = vec![
        (d.clone(), d.clone(), true),
        (d.clone(), shift_by(d.clone(), |g| JetMat::identity(g.rank())), true),
        (d.clone(), shift_by(d.clone(), commuting), true),
        (d.clone(), shift_by(d.clone(), |g| g.basis_k(0)), false),
        (oproiu(default_bott(), OproiuData::default()), oproiu(default_bott(), eta), false),
    ];
    for g in geometries(&m, 3) {
        for (i, (c1, c2, same)) in pairs.iter().enumerate() {
            let r = same_pair_residuals(&g, &c1.gamma(&g).unwrap(), &c2.gamma(&g).unwrap(), &samples).unwrap();
            let verdicts = r.map(|v| v < 1e-9);
            assert!(verdicts.iter().all(|v| *v == *same), "pair {i}: {r:?}");
        }
    }
}
