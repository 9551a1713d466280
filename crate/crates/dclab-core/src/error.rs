use nalgebra::Vector3;

/// Errors produced by the solvers and the supporting numerics.
///
/// Variants are split between input/validation problems (bad parameters,
/// malformed measures) and numerical failures (quadrature blow-ups,
/// eigensolver breakdowns). [`Error::is_validation`] tells the two classes
/// apart so callers can map them to distinct exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("potential is singular at atom position ({x:.6}, {y:.6}, {z:.6})", x = .0[0], y = .0[1], z = .0[2])]
    SingularPoint(Vector3<f64>),

    #[error("measure is not radially symmetric about the origin: {0}")]
    NotRadial(String),

    #[error("mass scaling by {factor} would raise an atom weight to {scaled_weight} >= 1")]
    ScaleExceedsCap { factor: f64, scaled_weight: f64 },

    #[error("atom weight {0} outside (0, 1)")]
    AtomWeightOutOfRange(f64),

    #[error("non-finite integrand value {value} at grid point ({0:.6}, {1:.6}, {2:.6})", .point[0], .point[1], .point[2])]
    NonFiniteIntegrand { point: Vector3<f64>, value: f64 },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("overlap matrix is not positive definite (smallest eigenvalue {smallest:.3e}, condition estimate {condition:.3e})")]
    OverlapNotPositive { smallest: f64, condition: f64 },

    #[error("right-hand form is singular on the basis: {0}")]
    SingularRightForm(String),

    #[error("eigenvalue at or below gap bottom: the smallest form eigenvalue is already negative at lambda = {lambda}")]
    BelowGapBottom { lambda: f64 },

    #[error("root bracketing failed: {0}")]
    BracketFailure(String),

    #[error("optimization did not converge: {0}")]
    NonConvergence(String),
}

impl Error {
    /// True for errors caused by invalid inputs rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::SingularPoint(_)
                | Error::NotRadial(_)
                | Error::ScaleExceedsCap { .. }
                | Error::AtomWeightOutOfRange(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
