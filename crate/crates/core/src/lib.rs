//! Numerical toolkit for quaternionic structures transversal to foliations.

pub mod calculus;
pub mod connections;
pub mod error;
pub mod geometry;
pub mod jet;
pub mod linalg;
pub mod models;
pub mod quaternion;
pub mod structures;
pub mod suite;
pub mod twistor;

pub use error::{GeomError, Result};
pub use jet::{Jet2, Scalar};
pub use linalg::JetMat;
