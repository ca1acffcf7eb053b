use thiserror::Error;

/// Every failure mode of the toolkit.
///
/// Variants map onto the CLI exit-code contract through [`GeomError::exit_code`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("point {point:?} lies outside the chart domain")]
    Domain { point: Vec<f64> },
    #[error("chart is not regular: {0}")]
    Regularity(String),
    #[error("point is off the model space (residual {residual:.3e})")]
    Constraint { residual: f64 },
    #[error("finite-difference stencil leaves the chart domain: {0}")]
    Boundary(String),
    #[error("check not applicable: {0}")]
    Inapplicable(String),
    #[error("ambiguous clustering: {0}")]
    Clustering(String),
    #[error("multiplicity change across the grid: {0}")]
    Stratification(String),
    #[error("seed frame degenerates under the projector product: {0}")]
    Seed(String),
    #[error("focal point: curvature #{index} (lambda = {lambda}) at t = {t}, margin {margin:.3e}")]
    FocalPoint {
        index: usize,
        lambda: f64,
        t: f64,
        margin: f64,
    },
    #[error("umbilic input: the two curvatures coincide")]
    Umbilic,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("integer overflow in coefficient table at order {0}")]
    Overflow(usize),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;

impl GeomError {
    /// 2 for configuration problems, 3 for numeric or regularity failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            GeomError::Usage(_) | GeomError::Config(_) | GeomError::Io(_) => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for GeomError {
    fn from(e: std::io::Error) -> Self {
        GeomError::Io(e.to_string())
    }
}
