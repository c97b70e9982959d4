use alloc::string::String;

pub type Result<T, E = CoreError> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { what: String, asymmetry: f64 },

    #[error(
        "coefficient matrix loses positive definiteness (smallest eigenvalue {min_eigenvalue:e})"
    )]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("invalid support radii r0 = {r0}, r1 = {r1}")]
    InvalidRadii { r0: f64, r1: f64 },

    #[error(
        "inadmissible weight parameter: need mu > 33 d theta1^(11/2) theta2 rho, margin {margin:e}"
    )]
    InadmissibleMu { margin: f64 },

    #[error("degenerate point: ∇gᵀA∇g = {value:e} (only possible at the origin)")]
    DegeneratePoint { value: f64 },

    #[error(
        "quadrature for `{what}` did not converge: relative change {change:e} under order doubling"
    )]
    NotConverged { what: &'static str, change: f64 },

    #[error("dimension {0} is not supported here")]
    UnsupportedDimension(usize),
}
