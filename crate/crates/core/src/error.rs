use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rotation axis must be unit norm (|u| = {norm})")]
    NonUnitAxis { norm: f64 },

    #[error("matrix is not a rotation: orthonormality residual {ortho:.3e}, det {det}")]
    NotARotation { ortho: f64, det: f64 },

    #[error("quaternion is not unit norm (|q|^2 = {norm_sq})")]
    NonUnitQuaternion { norm_sq: f64 },

    #[error("matrix is {distance:.3e} away from SO(3), beyond the re-orthonormalization radius")]
    Drift { distance: f64 },

    #[error("weight matrix must be symmetric (asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("weight matrix is degenerate: {0}")]
    RankDeficient(String),

    #[error("weight matrix has repeated eigenvalues {0:?}")]
    RepeatedEigenvalues([f64; 3]),

    #[error("warp gain k = {k} outside (0, {k_bar})")]
    InvalidGain { k: f64, k_bar: f64 },

    #[error("eigenvalue ratio xi = {0} outside (0, 1]")]
    InvalidXi(f64),

    #[error("hysteresis fraction {0} outside (0, 1)")]
    InvalidDeltaFraction(f64),

    #[error("configuration index {q} outside 1..={len}")]
    IndexOutOfRange { q: usize, len: usize },

    #[error("potential singular: U_A = {u} within the guard band of 1")]
    Singularity { u: f64 },

    #[error("observer mode {0} needs a reconstructed attitude")]
    MissingAttitudeSource(&'static str),

    #[error("invalid measurement set: {0}")]
    InvalidMeasurements(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("state left the flow set after a jump (gap {gap} > delta {delta})")]
    JumpInvariant { gap: f64, delta: f64 },

    #[error("fault in mode {mode} at t = {t}, j = {j}: {source}")]
    Fault {
        mode: String,
        t: f64,
        j: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Errors that stem from bad inputs rather than a numerical fault during
    /// execution.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Drift { .. } | Error::Singularity { .. } | Error::JumpInvariant { .. } | Error::Fault { .. }
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonUnitAxis { .. } => "non_unit_axis",
            Error::NotARotation { .. } => "not_a_rotation",
            Error::NonUnitQuaternion { .. } => "non_unit_quaternion",
            Error::Drift { .. } => "drift",
            Error::NotSymmetric { .. } => "not_symmetric",
            Error::RankDeficient(_) => "rank_deficient",
            Error::RepeatedEigenvalues(_) => "repeated_eigenvalues",
            Error::InvalidGain { .. } => "invalid_gain",
            Error::InvalidXi(_) => "invalid_xi",
            Error::InvalidDeltaFraction(_) => "invalid_delta_fraction",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::Singularity { .. } => "singularity",
            Error::MissingAttitudeSource(_) => "missing_attitude_source",
            Error::InvalidMeasurements(_) => "invalid_measurements",
            Error::InvalidConfig(_) => "invalid_config",
            Error::JumpInvariant { .. } => "jump_invariant",
            Error::Fault { .. } => "fault",
        }
    }
}
