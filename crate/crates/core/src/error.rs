use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("curve file line {line}: {message}")]
    CurveFile { line: usize, message: String },

    #[error("division by zero at t = {t}")]
    DivisionByZero { t: f64 },

    #[error("domain error at t = {t}: {detail}")]
    Domain { t: f64, detail: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("frame index {index} outside 1..={max}")]
    FrameIndex { index: usize, max: usize },

    #[error("abstract curvature evaluation is missing pairings: {0}")]
    MissingPairing(String),

    #[error("quadrature did not converge on [{a}, {b}]: {detail}")]
    Quadrature { a: f64, b: f64, detail: String },

    #[error("curve is not regular at t = {t}")]
    IrregularPoint { t: f64 },

    #[error("sample {index} lacks a full difference stencil on an open grid")]
    Stencil { index: usize },

    #[error("non-constant osculating order: curvature k{index} vanishes at t = {t}")]
    NonConstantOrder { index: usize, t: f64 },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("degenerate segment between samples {index} and {next}")]
    DegenerateSegment { index: usize, next: usize },

    #[error("variation does not vanish near the endpoints of an open curve (max {magnitude})")]
    NonCompactSupport { magnitude: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
