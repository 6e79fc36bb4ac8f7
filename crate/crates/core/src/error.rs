use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix dimension must be at least {min}, got {n}")]
    Dimension { n: usize, min: usize },

    #[error("dimension mismatch: expected {expected}x{expected}, got {rows}x{cols}")]
    DimensionMismatch {
        expected: usize,
        rows: usize,
        cols: usize,
    },

    #[error("coupling {name} = {value} is not finite")]
    NonFiniteCoupling { name: &'static str, value: f64 },

    #[error("bond {bond} has super*sub = {product}, not positive; spectrum may be complex")]
    NotSymmetrizable { bond: usize, product: f64 },

    #[error("inverse iteration failed for eigenvalue {index} (residual {residual:e}, shifts {shifts:?})")]
    IterationFailure {
        index: usize,
        residual: f64,
        shifts: Vec<f64>,
    },

    #[error("root finder did not converge on root {index} after {iterations} iterations (last iterates {iterates:?})")]
    RootFinding {
        index: usize,
        iterations: usize,
        iterates: Vec<(f64, f64)>,
    },

    #[error("spectrum is degenerate (min gap {min_gap:e})")]
    DegenerateSpectrum { min_gap: f64 },

    #[error("spectrum is not real; operation requires the symmetrizable regime")]
    ComplexSpectrum,

    #[error("pseudometric is singular")]
    SingularPseudometric,

    #[error("inverse pseudometric is not diagonal in the eigenbasis (residual {residual:e})")]
    NotDyadRepresentable { residual: f64 },

    #[error("coefficient nu[{index}] vanishes; pseudometric is inadmissible")]
    InadmissiblePseudometric { index: usize },

    #[error("metric candidate is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    IndefiniteMetric { min_eigenvalue: f64 },

    #[error("alpha = (1-λ)/(1+λ) is singular or zero at λ = {lambda}")]
    SingularAlpha { lambda: f64 },

    #[error("expected {expected} coefficients, got {found}")]
    CoefficientCount { expected: usize, found: usize },

    #[error("invalid convergence study: {0}")]
    InvalidStudy(String),
}
