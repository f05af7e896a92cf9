use alloc::vec::Vec;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("Hermite rank undefined: no coefficient of index >= 1 exceeds the tolerance")]
    UndefinedRank,

    #[error("non-finite value {value} at quadrature node {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("quadrature order {quad} too small for expansion order {order}")]
    QuadratureTooSmall { order: usize, quad: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue} below {threshold}")]
    NotPositiveSemidefinite { eigenvalue: f64, threshold: f64 },

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("contraction index {r} out of range 0..={max}")]
    ContractionOutOfRange { r: usize, max: usize },

    #[error("basis mode mismatch between operands")]
    BasisModeMismatch,

    #[error("operation requires whitened coordinates")]
    NotWhitened,

    #[error("kernel is not symmetric in its H indices")]
    KernelNotSymmetric,

    #[error("order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),

    #[error("invalid order {0}")]
    InvalidOrder(usize),

    #[error("operation is defined for scalar-valued kernels only")]
    VectorValued,

    #[error("tensor of {size} entries exceeds the desk-scale cap of {cap}")]
    TooLarge { size: usize, cap: usize },

    #[error("grid mismatch: {0} nodes vs {1} nodes")]
    GridMismatch(usize, usize),

    #[error("negative radicand {0} (moment inequality violated)")]
    NegativeRadicand(f64),

    #[error("operator is singular (smallest eigenvalue {0})")]
    Singular(f64),

    #[error("covariance is not summable: alpha * p = {0} >= -1")]
    NonSummable(f64),

    #[error("parameter out of range: {0}")]
    OutOfRange(&'static str),

    #[error("empty input")]
    Empty,
}

pub type Result<T> = core::result::Result<T, Error>;
