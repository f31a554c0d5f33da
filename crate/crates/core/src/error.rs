use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("ambiguous sheet continuation at node {node}")]
    AmbiguousContinuation { node: usize },

    #[error("sheet labeling is inconsistent across edge {node} -> {neighbor} (nontrivial monodromy)")]
    InconsistentLabeling { node: usize, neighbor: usize },

    #[error("loop passes through near-coincident node {node}")]
    LoopTouchesCoincidence { node: usize },

    #[error("boundary data is not 4π-antiperiodic (even-mode content {content:.3e})")]
    NotAntiperiodic { content: f64 },

    #[error("degenerate radius: H vanishes at rho = {rho}")]
    DegenerateRadius { rho: f64 },

    #[error("zero norm: {0}")]
    ZeroNorm(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("Newton iteration failed to converge at {context}")]
    NewtonDivergence { context: String },

    #[error("degenerate triangle in cell {cell}")]
    DegenerateTriangle { cell: usize },

    #[error("coefficient matrix is not positive definite at node {node}")]
    NotPositiveDefinite { node: usize },

    #[error("radial normalization violated at node {node} (defect {defect:.3e})")]
    NormalizationViolated { node: usize, defect: f64 },

    #[error("no labeled patch covers the evaluation stencil")]
    UnlabeledPatch,

    #[error("projection used for regraphing is not injective near {context}")]
    NotInjective { context: String },

    #[error("operation requires a rectangular grid")]
    UnsupportedGrid,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
