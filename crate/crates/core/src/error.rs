use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("chart mismatch: expected dimension {expected}, found {found}")]
    ChartMismatch { expected: usize, found: usize },
    #[error("point {coords:?} lies outside the chart domain")]
    OutsideDomain { coords: Vec<f64> },
    #[error("degenerate frame or metric (condition number {condition:e})")]
    Degenerate { condition: f64 },
    #[error("{degenerate} of {total} sample points are degenerate (limit 10%)")]
    TooManyDegenerate { degenerate: usize, total: usize },
    #[error("field is not leafwise: transversal residual {residual:e}")]
    NotLeafwise { residual: f64 },
    #[error("connection does not preserve Q: out-of-Q residual {residual:e}")]
    NotQPreserving { residual: f64 },
    #[error("insufficient jet order: {0}")]
    JetOrder(String),
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
