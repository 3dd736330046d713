use thiserror::Error;

use crate::energy::EnergySolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty-space: the mask selects no cells")]
    EmptySpace,

    #[error("degenerate-space: no connected component with more than one cell")]
    DegenerateSpace,

    #[error("boundaryless-domain: the interior has no adjacent non-interior vertex")]
    BoundarylessDomain,

    #[error("empty-domain: the interior predicate selects no vertex")]
    EmptyDomain,

    #[error("curve-escapes-domain at vertex {vertex}")]
    CurveEscapesDomain { vertex: usize },

    #[error("center-outside: vertex {vertex} is not an interior vertex")]
    CenterOutside { vertex: usize },

    #[error("insufficient-candidates: vertex {vertex} is not covered by any candidate ball")]
    InsufficientCandidates { vertex: usize },

    #[error("instance-too-large: {candidates} candidate balls and {targets} target vertices exceed the exact-solver caps")]
    InstanceTooLarge { candidates: usize, targets: usize },

    #[error("no-well-placed-balls: the well-placed family is empty")]
    NoWellPlacedBalls,

    #[error("chain-broken: ball centered at {center} cannot be chained to the seed")]
    ChainBroken { center: usize },

    #[error("orphaned-mass: point {vertex} at level {level} carries mass but has no children")]
    OrphanedMass { vertex: usize, level: usize },

    #[error("isolated-boundary-point: B({vertex}, {radius}) does not meet the interior")]
    IsolatedBoundaryPoint { vertex: usize, radius: f64 },

    #[error("energy minimization did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Box<EnergySolution>,
    },

    #[error("construction certificate failed: worst ratio {worst_ratio} at vertex {witness} exceeds {bound}")]
    CertificateFailed {
        witness: usize,
        worst_ratio: f64,
        bound: f64,
    },

    #[error("teeth-unresolved: channel width {width_cells:.2} cells is below {min_cells} cells")]
    TeethUnresolved { width_cells: f64, min_cells: f64 },

    #[error("eta-unresolvable: {0}")]
    EtaUnresolvable(String),

    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    InvalidConfig(Vec<String>),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("mask parse error: {0}")]
    MaskParse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag, matching the leading word of the message.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::EmptySpace => "empty-space",
            Error::DegenerateSpace => "degenerate-space",
            Error::BoundarylessDomain => "boundaryless-domain",
            Error::EmptyDomain => "empty-domain",
            Error::CurveEscapesDomain { .. } => "curve-escapes-domain",
            Error::CenterOutside { .. } => "center-outside",
            Error::InsufficientCandidates { .. } => "insufficient-candidates",
            Error::InstanceTooLarge { .. } => "instance-too-large",
            Error::NoWellPlacedBalls => "no-well-placed-balls",
            Error::ChainBroken { .. } => "chain-broken",
            Error::OrphanedMass { .. } => "orphaned-mass",
            Error::IsolatedBoundaryPoint { .. } => "isolated-boundary-point",
            Error::NonConvergence { .. } => "non-convergence",
            Error::CertificateFailed { .. } => "certificate-failed",
            Error::TeethUnresolved { .. } => "teeth-unresolved",
            Error::EtaUnresolvable(_) => "eta-unresolvable",
            Error::UnknownGenerator(_) => "unknown-generator",
            Error::InvalidConfig(_) => "invalid-config",
            Error::InvalidInput(_) => "invalid-input",
            Error::MaskParse(_) => "mask-parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::TomlDe(_) => "toml",
            Error::Csv(_) => "csv",
        }
    }
}
