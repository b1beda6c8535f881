use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("derivative order {order} exceeds the available analytic order {max}")]
    UnsupportedOrder { order: u32, max: u32 },

    #[error("invalid piecewise function: {0}")]
    InvalidFunction(String),

    #[error("unsupported form: {0}")]
    UnsupportedForm(String),

    #[error("operator is not Hermitian: {0}")]
    NonHermitian(String),

    #[error("quadrature did not reach tolerance {tolerance:e}: estimate {estimate:e} with error {error:e}")]
    Quadrature { estimate: f64, error: f64, tolerance: f64 },

    #[error("eigensolver did not converge within {max_iterations} iterations (dimension {dimension})")]
    Eigen { max_iterations: usize, dimension: usize },

    #[error("basis size {requested} exceeds the cap of {cap} states")]
    BasisCap { requested: usize, cap: usize },

    #[error("only {found} near-degenerate pairs in the window; at least 3 are needed for eta")]
    InsufficientPairs { found: usize },

    #[error("torus degenerates at energy {energy}: {reason}")]
    SingularTorus { energy: f64, reason: String },

    #[error("no torus of class {class} at energy {energy}")]
    NoTorus { energy: f64, class: String },

    #[error("x = {x} lies outside the projection of the torus")]
    Projection { x: f64 },

    #[error("locus {locus} is tangent to the energy shell at coordinate {at}")]
    Tangency { locus: String, at: f64 },

    #[error("singular transition path: {0}")]
    SingularPath(String),

    #[error("lattice sum diverges at x = {x} (multiple of 2π)")]
    DivergentSum { x: f64 },

    #[error("paths lie on different energy shells ({a} vs {b})")]
    EnergyMismatch { a: f64, b: f64 },

    #[error("no sign change on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("misuse: {0}")]
    Misuse(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("unknown system identifier '{0}'")]
    UnknownSystem(String),

    #[error("parameter out of range: {name} = {value} (allowed {allowed})")]
    OutOfRange { name: String, value: f64, allowed: String },

    #[error("formula requires the parity of the quantum number n")]
    MissingParity,
}

impl Error {
    /// Usage and configuration problems, as opposed to numerical failures.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Configuration(_)
                | Error::UnknownSystem(_)
                | Error::OutOfRange { .. }
                | Error::MissingParity
                | Error::Misuse(_)
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnsupportedOrder { .. } => "unsupported-order",
            Error::InvalidFunction(_) => "invalid-function",
            Error::UnsupportedForm(_) => "unsupported-form",
            Error::NonHermitian(_) => "non-hermitian",
            Error::Quadrature { .. } => "quadrature-tolerance",
            Error::Eigen { .. } => "eigensolver",
            Error::BasisCap { .. } => "basis-cap",
            Error::InsufficientPairs { .. } => "insufficient-pairs",
            Error::SingularTorus { .. } => "singular-torus",
            Error::NoTorus { .. } => "no-torus",
            Error::Projection { .. } => "projection",
            Error::Tangency { .. } => "tangency",
            Error::SingularPath(_) => "singular-path",
            Error::DivergentSum { .. } => "divergent-sum",
            Error::EnergyMismatch { .. } => "energy-mismatch",
            Error::NoBracket { .. } => "no-bracket",
            Error::Misuse(_) => "misuse",
            Error::Configuration(_) => "configuration",
            Error::UnknownSystem(_) => "unknown-system",
            Error::OutOfRange { .. } => "parameter out of range",
            Error::MissingParity => "missing-parity",
        }
    }
}
