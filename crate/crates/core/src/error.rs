use crate::C;
use thiserror::Error;

/// Errors shared by the geometric kernels.
#[derive(Debug, Clone, Error)]
pub enum GeomError {
    #[error("metric is not conformal: off-diagonal or anisotropy {defect:.3e} exceeds tolerance")]
    NonConformal { defect: f64 },
    #[error("metric is not positive definite (det = {det:.3e})")]
    NonPositive { det: f64 },
    #[error("singular metric or operator (det = {det:.3e})")]
    Singular { det: f64 },
    #[error("degenerate pair: operator has near-zero determinant {det:.3e}")]
    DegeneratePair { det: f64 },
    #[error("degenerate dual: shape operator has eigenvalue {eigenvalue:.12} within {tol:.1e} of -1")]
    DegenerateDual { eigenvalue: f64, tol: f64 },
    #[error("singular flow time t = {t}: cosh t + lambda sinh t vanishes (lambda = {eigenvalue:.6})")]
    SingularTime { t: f64, eigenvalue: f64 },
    #[error("point {z} lies outside the chart")]
    OutsideChart { z: C },
    #[error("developing map has a critical point at {z}")]
    CriticalPoint { z: C },
    #[error("horosphere envelope is degenerate at {z}: {detail}")]
    EnvelopeDegenerate { z: C, detail: String },
    #[error("no envelope point with positive time coordinate at {z}")]
    NoSurface { z: C },
    #[error("non-finite sample {value} at grid node ({ix}, {iy}) = {z}")]
    NonFiniteSample { value: f64, ix: usize, iy: usize, z: C },
    #[error("point {p:?} is not on the hyperboloid (<p,p> = {norm:.3e})")]
    NotOnHyperboloid { p: [f64; 4], norm: f64 },
    #[error("connection transport produced non-finite values at step {step}")]
    TransportDiverged { step: usize },
    #[error("Gauss-Codazzi residual {residual:.3e} along the path exceeds the transport precondition {tol:.1e}")]
    ResidualPrecondition { residual: f64, tol: f64 },
    #[error("numerical inversion of the extension failed near {z}")]
    InversionFailure { z: C },
    #[error("empty evaluation grid")]
    EmptyGrid,
    #[error("classification case 3 unavailable: curvature is non-negative at {z}")]
    CurvatureSign { z: C },
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
