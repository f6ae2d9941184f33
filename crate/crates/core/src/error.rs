use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A point lies outside the closed unit disk.
    #[error("point outside the unit disk: |x| = {norm}")]
    Domain { norm: f64 },

    /// A finite-difference stencil would leave the disk.
    #[error("insufficient interior margin for differencing: |x| = {norm}, need |x| <= {max_norm}")]
    Margin { norm: f64, max_norm: f64 },

    /// Invalid parameters for a built-in immersion family.
    #[error("invalid immersion parameters: {0}")]
    Construction(String),

    /// The jacobian does not have full rank m.
    #[error("degenerate immersion: jacobian rank below domain dimension at the query point")]
    DegenerateImmersion,

    /// Operation requires codimension one.
    #[error("unsupported codimension: operation requires d - m = 1, got {codim}")]
    UnsupportedCodimension { codim: usize },

    /// A documented precondition was violated by the caller.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A certified construction detected inconsistent input (e.g. a
    /// non-flat form fed to the null-vector construction).
    #[error("certification failed: {0}")]
    Certification(String),

    /// The grid is too coarse (or epsilon too small) for the requested search.
    #[error("resolution error: {0} (use a finer grid or a larger epsilon)")]
    Resolution(String),

    /// Structurally invalid input data.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
