//! Fixtures shared by the benchmarks.

use foliq_core::calculus::Point;
use foliq_core::geometry::PointGeometry;
use foliq_core::models::{build_model, Model};
use foliq_core::suite::sample_points;

/// A model and one interior sample point.
pub struct Fixture {
    pub model: Model,
    pub point: Point,
}

impl Fixture {
    pub fn new(spec: &str) -> Fixture {
        let model = build_model(spec).expect("known model");
        let point = sample_points(&model, 1, 17).remove(0);
        Fixture { model, point }
    }

    pub fn geometry(&self, order: u8) -> PointGeometry {
        PointGeometry::new(&self.model.frame, &self.model.qs, &self.point, order).expect("regular point")
    }
}

pub const SPECS: &[&str] = &["flat", "s7_sasakian", "lchk_h2", "flat,q=2"];
