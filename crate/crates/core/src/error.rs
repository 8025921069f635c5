use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain specification: {0}")]
    InvalidSpec(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("mesh generation failed: {0}")]
    Mesh(String),

    #[error("curve self-intersects ({count} contact(s)), first near ({x:.6}, {y:.6})")]
    SelfIntersecting { count: usize, x: f64, y: f64 },

    #[error("splash domain violates condition ({condition}): {message}")]
    SplashDomain { condition: u8, message: String },

    #[error("incompatible Dirichlet data: divergence integral {divergence:.3e} != boundary flux {flux:.3e}")]
    IncompatibleData { divergence: f64, flux: f64 },

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("tangled element {element}: det = {det:.3e}")]
    Tangled { element: usize, det: f64 },

    #[error("landmark lost: {0}")]
    LandmarkLost(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error at line {line}, column {column}: {message}")]
    Config {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable identifier used in JSON diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpec(_) => "invalid_spec",
            Error::Geometry(_) => "geometry",
            Error::Mesh(_) => "mesh",
            Error::SelfIntersecting { .. } => "self_intersecting",
            Error::SplashDomain { .. } => "splash_domain",
            Error::IncompatibleData { .. } => "incompatible_data",
            Error::Solver(_) => "solver",
            Error::Tangled { .. } => "tangled",
            Error::LandmarkLost(_) => "landmark_lost",
            Error::InvalidInput(_) => "invalid_input",
            Error::Config { .. } => "config",
            Error::Degenerate(_) => "degenerate",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
