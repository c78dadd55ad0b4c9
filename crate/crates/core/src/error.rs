use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside the admissible range {range}")]
    Range {
        what: &'static str,
        value: f64,
        range: String,
    },

    #[error("point (t = {t}, x = {x}) lies outside the {model} domain")]
    Domain { model: String, t: f64, x: f64 },

    #[error("solutions belong to different models ({0} vs {1})")]
    ModelMismatch(String, String),

    #[error("operators live on different bases ({0} vs {1})")]
    BasisMismatch(String, String),

    #[error("amplitude system is singular for momentum {k} at mass {mass}")]
    DegenerateMode { k: i64, mass: f64 },

    #[error("Gram matrix condition number {0:e} exceeds 1e12")]
    Conditioning(f64),

    #[error("operator is not self-adjoint (relative asymmetry {0:e})")]
    Symmetry(f64),

    #[error("symmetry `{name}` is not supported on the {model} model")]
    UnsupportedSymmetry { name: String, model: String },

    #[error("axiom violated: {0}")]
    Axiom(String),

    #[error("pushforward of mode {label} leaves the basis span (relative residual {residual:e})")]
    SpanEscape { label: String, residual: f64 },

    #[error("test function support leaves the model domain: {0}")]
    Support(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 1 = configuration, 2 = numerical, 3 = IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Range { .. } | Error::UnsupportedSymmetry { .. } | Error::Json(_) => 1,
            Error::Io(_) => 3,
            _ => 2,
        }
    }
}
