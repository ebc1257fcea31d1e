use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("density matrix trace is {0}, expected 1")]
    BadTrace(f64),

    #[error("density matrix has negative eigenvalue {0:e}")]
    NotPositive(f64),

    #[error("operator is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("operator is not a projector (max deviation {0:e})")]
    NotProjector(f64),

    #[error("q-plate maps populated state at l={l} out of the OAM space")]
    NonClosure { l: i32 },

    #[error("input to the vortex encoder has amplitude outside l=0 (weight {0:e})")]
    NotConfinedToZeroOam(f64),

    #[error("invalid OAM space [{l_min}, {l_max}]")]
    InvalidOamSpace { l_min: i32, l_max: i32 },

    #[error("q-plate charge {0} is not a half-integer")]
    InvalidCharge(f64),

    #[error("unsupported number of measurement settings: {0}")]
    UnsupportedSettingCount(usize),

    #[error("invalid measurement set: {0}")]
    InvalidMeasurementSet(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("setting {setting} has no announced events")]
    NoAnnouncedEvents { setting: usize },

    #[error("cheat strategy must answer at least one setting")]
    EmptyStrategy,

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("bound curve is not monotone at xi={xi}")]
    NonMonotoneBound { xi: f64 },

    #[error("tomography settings are not informationally complete (rank {rank} < 16)")]
    RankDeficient { rank: usize },
}
