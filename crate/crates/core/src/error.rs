use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unsupported pole order: {0}")]
    UnsupportedOrder(String),

    #[error("no pole at z = 1: A(1) is nonsingular")]
    NoPole,

    #[error("sequencing error: {0}")]
    Sequencing(String),

    #[error("argument out of range: {0}")]
    Range(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("contour passes too close to a root (condition {condition:.3e} at radius {radius}); try a smaller radius")]
    Contour { radius: f64, condition: f64 },

    #[error("quadrature did not converge with {nodes} nodes (change {change:.3e})")]
    Convergence { nodes: usize, change: f64 },

    #[error("stacked identity system does not pin the principal part at q = {q}; increase q")]
    IncreaseQ { q: usize },

    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
