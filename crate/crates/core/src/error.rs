use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not symmetric (asymmetry {asymmetry:.3e} exceeds {allowed:.3e})")]
    NonSymmetric { asymmetry: f64, allowed: f64 },
    #[error("matrix is not positive semidefinite (eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },
    #[error("{name} is not positive definite (min eigenvalue {min_eig:.3e})")]
    NotPd { name: String, min_eig: f64 },
    #[error("sI - A is numerically singular at s = {re}+{im}j")]
    SingularAtS { re: f64, im: f64 },
    #[error("interconnection is ill-posed: I - D*Dbar is singular")]
    IllPosed,
    #[error("realization is not minimal")]
    NotMinimal,
    #[error("model is not strictly proper")]
    NotStrictlyProper,
    #[error("zero eigenvalue has a Jordan block of size {size} (at most 2 allowed)")]
    JordanBlockTooLarge { size: usize },
    #[error("similarity transform is ill-conditioned (condition number {cond:.3e})")]
    IllConditionedTransform { cond: f64 },
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("j{omega} is not a pole of the model")]
    NotAPole { omega: f64 },
    #[error("pole at j{omega} is not simple")]
    NotSimple { omega: f64 },
    #[error("Y^T X Y is numerically singular")]
    SingularInner,
    #[error("G2 is zero; the Hankel construction needs a double pole at the origin")]
    G2Zero,
    #[error("limit did not settle: {0}")]
    LimitDivergent(String),
    #[error("boundary-value system is singular at s = {re}+{im}j")]
    SingularBoundarySystem { re: f64, im: f64 },
    #[error("found {found} roots below the frequency limit, {requested} requested")]
    InsufficientRange { found: usize, requested: usize },
    #[error("omega = {omega} is not a root of D(j omega)")]
    NotARoot { omega: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
