//! Corner-perturbed discrete square well.
//!
//! The model is the real tridiagonal family `H(λ, μ)` with `2` on the
//! diagonal, `-1` on both off-diagonals, and the two corner bonds replaced
//! by `(-1-λ, -1+λ)` and `(-1-μ, -1+μ)`. The crate builds these matrices,
//! computes their spectra in the real and complex regimes, solves the
//! intertwining equation `Hᵀ X = X H` for all pseudometrics, and assembles
//! the metric `Θ`, the charge `C` and the hermitizing map `Ω`.
//!
//! Modules follow the pipeline:
//!
//! * [`hamiltonian`]: construction and diagonal symmetrization.
//! * [`spectra`]: Sturm bisection, complex Newton, reality-domain scans.
//! * [`dieudonne`]: kernel of `X ↦ HᵀX − XH` and the closed-form parities.
//! * [`quasihermitian`]: biorthogonal system, charge and metric assembly,
//!   `Ω` factorization and symmetry reports.
//! * [`continuum`]: scaled spectra and convergence toward the continuum well.

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod continuum;
pub mod dieudonne;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod quasihermitian;
pub mod spectra;

pub use error::{Error, Result};
pub use hamiltonian::{Couplings, DiscreteHamiltonian, SymmetrizedForm};
pub use spectra::{Spectrum, Tolerances};
