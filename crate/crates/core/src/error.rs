use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("open surface: edge ({0}, {1}) is not shared by exactly two faces")]
    OpenSurface(usize, usize),
    #[error("negative volume {0}: faces are wound inward")]
    NegativeVolume(f64),
    #[error("degenerate triangle (face {0})")]
    DegenerateTriangle(usize),
    #[error("on-surface evaluation at distance {0:e}")]
    OnSurface(f64),
    #[error("point {index} is not exterior to the bubble")]
    InteriorPoint { index: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("operation not available for a delta-front pulse: {0}")]
    DeltaFront(&'static str),
    #[error(
        "target unattainable in bounds: peak({lo:e}) = {peak_lo:e}, peak({hi:e}) = {peak_hi:e}, target = {target:e}"
    )]
    NoBracket {
        lo: f64,
        hi: f64,
        peak_lo: f64,
        peak_hi: f64,
        target: f64,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
