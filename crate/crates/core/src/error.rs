use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cosine {name} = {value:.17e} lies outside [-1, 1] beyond tolerance ({context})")]
    CosineOutOfRange {
        name: &'static str,
        value: f64,
        context: String,
    },

    #[error("form-factor index {index} out of range for rank {rank}")]
    IndexOutOfRange { index: usize, rank: usize },

    #[error("two-body propagator is singular at E = {energy} MeV (det = {determinant:e})")]
    PoleProximity { energy: f64, determinant: f64 },

    #[error("no bound state in window [{lo}, {hi}] MeV: {detail}")]
    NoBoundState { lo: f64, hi: f64, detail: String },

    #[error("two-body pole crosses the spectator grid at node {node} (q = {q} MeV, E = {energy} MeV)")]
    PoleCollision { node: usize, q: f64, energy: f64 },

    #[error("kernel assembly is restricted to E < 0 (got E = {energy} MeV)")]
    NotBelowBreakup { energy: f64 },

    #[error("eigen iteration did not converge after {iterations} iterations (last estimate {last})")]
    NotConverged { iterations: usize, last: f64 },

    #[error("refusing to extrapolate along {axis}: {value} outside [{lo}, {hi}]")]
    Extrapolation {
        axis: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error(
        "logarithmic singularity at q = {q} MeV, q'' = {q2} MeV (y0 = {y0}); use a segmented grid that excludes the band"
    )]
    SingularRegion { q: f64, q2: f64, y0: f64 },

    #[error("no two-body bound state supplied for pair {pair}")]
    MissingBoundState { pair: &'static str },

    #[error("kinematics: {0}")]
    Kinematics(String),

    #[error("series diverged after {order} terms (spectral radius estimate {spectral_radius:.6})")]
    Divergence { order: usize, spectral_radius: f64 },

    #[error("config {path}: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code: 2 for validation problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Context { source, .. } => source.exit_code(),
            Error::InvalidArgument(_)
            | Error::IndexOutOfRange { .. }
            | Error::Config { .. }
            | Error::NotBelowBreakup { .. }
            | Error::MissingBoundState { .. }
            | Error::Kinematics(_) => 2,
            Error::Io(_) | Error::Json(_) => 1,
            _ => 3,
        }
    }
}
