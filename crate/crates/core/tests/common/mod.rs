#![allow(dead_code)]

pub mod oracle;

use foliq_core::calculus::{Bundle, EndomorphismField, Point, VectorField};
use foliq_core::{Jet2, JetMat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A polynomial of total degree ≤ 3 with random coefficients.
#[derive(Clone, Debug)]
pub struct Poly {
    terms: Vec<(f64, Vec<u32>)>,
}

impl Poly {
    pub fn random(rng: &mut impl Rng, dim: usize) -> Poly {
        let terms = (0..6)
            .map(|_| {
                let mut e = vec![0u32; dim];
                for _ in 0..rng.random_range(0..=3) {
                    e[rng.random_range(0..dim)] += 1;
                }
                (rng.random_range(-1.0..1.0), e)
            })
            .collect();
        Poly { terms }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * e.iter().zip(x).map(|(k, v)| v.powi(*k as i32)).product::<f64>())
            .sum()
    }

    pub fn eval_jet(&self, x: &[Jet2]) -> Jet2 {
        let mut acc = Jet2::zero();
        for (c, e) in &self.terms {
            let mut t = Jet2::constant(*c);
            for (k, v) in e.iter().zip(x) {
                for _ in 0..*k {
                    t = &t * v;
                }
            }
            acc += &t;
        }
        acc
    }
}

pub fn random_polys(rng: &mut impl Rng, dim: usize, count: usize) -> Vec<Poly> {
    (0..count).map(|_| Poly::random(rng, dim)).collect()
}

pub fn poly_field(polys: &[Poly]) -> VectorField {
    let ps = polys.to_vec();
    VectorField::from_fn(ps.len(), move |x| ps.iter().map(|p| p.eval_jet(x)).collect())
}

pub fn poly_endo(polys: &[Poly], rank: usize) -> EndomorphismField {
    let ps = polys.to_vec();
    EndomorphismField::from_fn(rank, Bundle::Tangent, move |x| {
        let mut m = JetMat::zeros(rank, rank);
        for i in 0..rank {
            for j in 0..rank {
                m.set(i, j, ps[i * rank + j].eval_jet(x));
            }
        }
        m
    })
}

pub fn random_point(rng: &mut impl Rng, dim: usize, half: f64) -> Point {
    Point::new((0..dim).map(|_| rng.random_range(-half..half)).collect())
}

/// Central difference of `f` along `v` at `x`.
pub fn fd_dir(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], v: &[f64], h: f64) -> Vec<f64> {
    let plus: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
    let minus: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - h * b).collect();
    f(&plus).iter().zip(f(&minus)).map(|(a, b)| (a - b) / (2.0 * h)).collect()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
