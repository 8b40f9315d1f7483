use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the simulator and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar input violated a precondition (non-positive mass, zero drive
    /// frequency, and so on).
    #[error("invalid parameter {name} = {value:e}")]
    InvalidParameter { name: &'static str, value: f64 },

    /// The requested static potential has no stable transverse confinement.
    #[error(
        "transverse potential unstable: omega_y^2 = {omega_y_sq:e} (rad/s)^2 \
         at rod bias {rod_dc} V"
    )]
    TransverseInstability { rod_dc: f64, omega_y_sq: f64 },

    /// The requested static potential has no axial confinement.
    #[error("axial potential unstable: omega_z^2 = {omega_z_sq:e} (rad/s)^2")]
    AxialInstability { omega_z_sq: f64 },

    /// A calibration routine was handed measurements it cannot invert.
    #[error("calibration impossible: {0}")]
    Uncalibratable(&'static str),

    /// An iterative solver ran out of its iteration budget.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// A chain labeled linear has a negative transverse curvature, i.e. the
    /// configuration is actually past the zigzag transition.
    #[error("chain labeled linear has negative transverse curvature {eigenvalue:e}")]
    PhaseMisclassification { eigenvalue: f64 },

    /// Root bracketing for the critical anisotropy failed.
    #[error("failed to bracket the critical anisotropy in [{lo}, {hi}]")]
    BracketingFailure { lo: f64, hi: f64 },

    /// The zigzag mode frequency is only real on the linear side of the
    /// transition.
    #[error(
        "zigzag branch undefined: omega_y = {omega_y:e} rad/s is below the \
         critical value {omega_yc:e} rad/s"
    )]
    BelowCriticalPoint { omega_y: f64, omega_yc: f64 },

    /// The sensitivity amplification diverges at the critical point.
    #[error("sensitivity amplification diverges: zigzag mode frequency is zero")]
    CriticalPointDivergence,

    /// A setpoint fell outside the reference span of the digital source.
    #[error("setpoint {value} V outside the reference span [0, {span}] V")]
    SetpointOutOfSpan { value: f64, span: f64 },

    /// Not enough data to run the requested analysis.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A fit converged to something unusable (for example a contrast below
    /// the shot-noise floor).
    #[error("fit rejected: {0}")]
    FitQuality(String),

    /// Noise-slope classification needs at least one resolvable decade.
    #[error("noise classification needs at least two averaging times per decade")]
    ClassificationUnavailable,

    /// A scenario file failed semantic validation (syntax errors surface as
    /// [`Error::ConfigParse`]).
    #[error("scenario validation: {0}")]
    ScenarioValidation(String),

    #[error("config parse: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error("config encode: {0}")]
    ConfigEncode(#[from] toml::ser::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line tool: 1 for configuration and
    /// validation problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. }
            | Error::ScenarioValidation(_)
            | Error::ConfigParse(_)
            | Error::SetpointOutOfSpan { .. } => 1,
            _ => 2,
        }
    }
}
