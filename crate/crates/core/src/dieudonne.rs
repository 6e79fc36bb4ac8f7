//! Solutions of the intertwining equation `Hᵀ X = X H`.
//!
//! For symmetric `X` the map `X ↦ HᵀX − XH` lands in the antisymmetric
//! matrices, so the equation is solved on the `n(n+1)/2` symmetric unknowns
//! against the `n(n−1)/2` strictly-upper constraints. When the spectrum is
//! simple the kernel has dimension `n`.

use nalgebra::{DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{Couplings, DiscreteHamiltonian};
use crate::linalg::{exchange, max_abs, DenseMatrix};
use crate::spectra::{self, Tolerances};

/// Above this size the kernel comes from spectral dyads instead of the
/// vectorized operator.
pub const VECTORIZED_MAX_N: usize = 32;

/// `max |HᵀX − XH|`.
pub fn residual(h: &DiscreteHamiltonian, x: &DMatrix<f64>) -> Result<f64> {
    let n = h.n();
    if x.nrows() != n || x.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            rows: x.nrows(),
            cols: x.ncols(),
        });
    }
    let hd = h.to_dense();
    Ok(max_abs(&(hd.transpose() * x - x * hd)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMethod {
    Vectorized,
    SpectralDyads,
}

/// Basis of the symmetric solutions of `HᵀX = XH`.
#[derive(Debug, Clone)]
pub struct PseudometricBasis {
    pub n: usize,
    pub basis: Vec<DMatrix<f64>>,
    pub residuals: Vec<f64>,
    /// Smallest singular value of the unit-normalized stacked vectorizations.
    pub independence: f64,
    pub method: KernelMethod,
}

impl PseudometricBasis {
    fn new(n: usize, h: &DiscreteHamiltonian, basis: Vec<DMatrix<f64>>, method: KernelMethod) -> Result<Self> {
        let residuals = basis
            .iter()
            .map(|x| residual(h, x))
            .collect::<Result<Vec<_>>>()?;
        let independence = independence(&basis);
        Ok(PseudometricBasis {
            n,
            basis,
            residuals,
            independence,
            method,
        })
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// `Σ c_k X_k`.
    pub fn combine(&self, coeffs: &[f64]) -> Result<DMatrix<f64>> {
        if coeffs.len() != self.basis.len() {
            return Err(Error::CoefficientCount {
                expected: self.basis.len(),
                found: coeffs.len(),
            });
        }
        let mut out = DMatrix::zeros(self.n, self.n);
        for (c, x) in coeffs.iter().zip(&self.basis) {
            out += x * *c;
        }
        Ok(out)
    }

    /// Relative Frobenius distance of `x` from the span.
    pub fn projection_residual(&self, x: &DMatrix<f64>) -> f64 {
        let norm = x.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let q = orthonormal_columns(&self.basis);
        let v = DVector::from_column_slice(x.as_slice());
        let proj = &q * (q.transpose() * &v);
        (v - proj).norm() / norm
    }

    /// Least-squares coefficients of `x` in this basis.
    pub fn coordinates(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        let cols: Vec<DVector<f64>> = self
            .basis
            .iter()
            .map(|b| DVector::from_column_slice(b.as_slice()))
            .collect();
        let a = DMatrix::from_columns(&cols);
        let v = DVector::from_column_slice(x.as_slice());
        let svd = SVD::new(a, true, true);
        let c = svd
            .solve(&v, 1e-14)
            .map_err(|_| Error::SingularPseudometric)?;
        Ok(c.iter().copied().collect())
    }
}

#[derive(Serialize)]
struct ElementJson {
    matrix: DenseMatrix,
    residual: f64,
}

impl Serialize for PseudometricBasis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let items: Vec<ElementJson> = self
            .basis
            .iter()
            .zip(&self.residuals)
            .map(|(m, &r)| ElementJson {
                matrix: m.into(),
                residual: r,
            })
            .collect();
        items.serialize(s)
    }
}

/// Unit max-norm with the largest-magnitude entry (first in row-major
/// order on ties) positive.
fn normalize(mut x: DMatrix<f64>) -> DMatrix<f64> {
    let m = max_abs(&x);
    if m == 0.0 {
        return x;
    }
    let n = x.nrows();
    let lead = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|ij| x[ij])
        .find(|v| v.abs() >= m * (1.0 - 1e-12))
        .unwrap_or(m);
    x /= m * lead.signum();
    x
}

fn orthonormal_columns(mats: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut q: Vec<DVector<f64>> = Vec::with_capacity(mats.len());
    for m in mats {
        let mut v = DVector::from_column_slice(m.as_slice());
        for _ in 0..2 {
            for u in &q {
                let c = u.dot(&v);
                v.axpy(-c, u, 1.0);
            }
        }
        let nv = v.norm();
        if nv > 1e-14 {
            q.push(v / nv);
        }
    }
    let rows = mats.first().map_or(0, |m| m.len());
    if q.is_empty() {
        return DMatrix::zeros(rows, 0);
    }
    DMatrix::from_columns(&q)
}

fn independence(mats: &[DMatrix<f64>]) -> f64 {
    if mats.is_empty() {
        return 0.0;
    }
    let cols: Vec<DVector<f64>> = mats
        .iter()
        .map(|m| {
            let v = DVector::from_column_slice(m.as_slice());
            let nv = v.norm();
            if nv > 0.0 {
                v / nv
            } else {
                v
            }
        })
        .collect();
    DMatrix::from_columns(&cols)
        .singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Kernel basis; vectorized solve up to [`VECTORIZED_MAX_N`], spectral dyads
/// above (falling back to the vectorized solve outside the real regime).
pub fn kernel_basis(h: &DiscreteHamiltonian) -> Result<PseudometricBasis> {
    let method = if h.n() > VECTORIZED_MAX_N && h.symmetrize().is_ok() {
        KernelMethod::SpectralDyads
    } else {
        KernelMethod::Vectorized
    };
    kernel_basis_with(h, method)
}

pub fn kernel_basis_with(h: &DiscreteHamiltonian, method: KernelMethod) -> Result<PseudometricBasis> {
    let tol = Tolerances::default();
    let spectrum = spectra::spectrum(h, &tol)?;
    if spectrum.is_degenerate(&tol) {
        return Err(Error::DegenerateSpectrum {
            min_gap: spectrum.min_gap(),
        });
    }
    let raw = match method {
        KernelMethod::Vectorized => vectorized_kernel(h),
        KernelMethod::SpectralDyads => {
            let dyads = spectral_dyads(h)?;
            let q = orthonormal_columns(&dyads);
            let n = h.n();
            q.column_iter()
                .map(|c| symmetrized(DMatrix::from_column_slice(n, n, c.as_slice())))
                .collect()
        }
    };
    PseudometricBasis::new(h.n(), h, raw.into_iter().map(normalize).collect(), method)
}

/// The spectral dyads themselves as a basis, at their natural scale, so that
/// coefficients are the `κ_k²` of `Θ = Σ |k⟩⟩κ_k²⟨⟨k|`.
pub fn dyad_basis(h: &DiscreteHamiltonian) -> Result<PseudometricBasis> {
    let dyads = spectral_dyads(h)?;
    let spectrum = spectra::eigen_real(&h.symmetrize()?)?;
    if spectrum.is_degenerate(&Tolerances::default()) {
        return Err(Error::DegenerateSpectrum {
            min_gap: spectrum.min_gap(),
        });
    }
    PseudometricBasis::new(h.n(), h, dyads, KernelMethod::SpectralDyads)
}

fn symmetrized(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Symmetric unknowns `(a, b)` with `a ≤ b`, row-major.
fn symmetric_index(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect()
}

fn vectorized_kernel(h: &DiscreteHamiltonian) -> Vec<DMatrix<f64>> {
    let n = h.n();
    let hd = h.to_dense();
    let ht = hd.transpose();
    let unknowns = symmetric_index(n);
    let constraints: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let k = unknowns.len();
    // Padded to square so the SVD returns a full right basis.
    let mut a = DMatrix::<f64>::zeros(k, k);
    let unit = |a: usize, b: usize| {
        let mut x = DMatrix::zeros(n, n);
        if a == b {
            x[(a, a)] = 1.0;
        } else {
            let w = std::f64::consts::FRAC_1_SQRT_2;
            x[(a, b)] = w;
            x[(b, a)] = w;
        }
        x
    };
    for (col, &(p, q)) in unknowns.iter().enumerate() {
        let x = unit(p, q);
        let m = &ht * &x - &x * &hd;
        for (row, &(i, j)) in constraints.iter().enumerate() {
            a[(row, col)] = m[(i, j)];
        }
    }
    let svd = SVD::new(a, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma = &svd.singular_values;
    let smax = sigma.iter().copied().fold(0.0, f64::max);
    let threshold = 1e-9 * smax.max(1.0);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| sigma[x].total_cmp(&sigma[y]));
    order
        .into_iter()
        .take_while(|&i| sigma[i] <= threshold)
        .map(|i| {
            let row = v_t.row(i);
            let mut x = DMatrix::zeros(n, n);
            for (c, &(p, q)) in unknowns.iter().enumerate() {
                if p == q {
                    x[(p, p)] = row[c];
                } else {
                    let v = row[c] * std::f64::consts::FRAC_1_SQRT_2;
                    x[(p, q)] = v;
                    x[(q, p)] = v;
                }
            }
            x
        })
        .collect()
}

/// `|k⟩⟩⟨⟨k|` for each unit left eigenvector, ascending energy.
pub fn spectral_dyads(h: &DiscreteHamiltonian) -> Result<Vec<DMatrix<f64>>> {
    let s = h.symmetrize()?;
    let pairs = spectra::eigen_real_vectors(&s)?;
    let d = DVector::from_column_slice(&s.weights);
    Ok(pairs
        .vectors
        .iter()
        .map(|v| {
            let l = v.component_mul(&d);
            let l = &l / l.norm();
            &l * l.transpose()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Antidiagonal of ones; pairs with `μ = +λ`.
    Exchange,
    /// Antidiagonal of ones with corners `α`; pairs with `μ = −λ`.
    Weighted,
}

/// `α = (1 − λ)/(1 + λ)`.
pub fn alpha(lambda: f64) -> Result<f64> {
    let a = (1.0 - lambda) / (1.0 + lambda);
    if !a.is_finite() {
        return Err(Error::SingularAlpha { lambda });
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormPseudometric {
    pub n: usize,
    pub variant: Variant,
    /// Corner entry: `α` for the weighted variant, `1` for the exchange.
    pub alpha: f64,
}

impl ClosedFormPseudometric {
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut p = exchange(self.n);
        p[(0, self.n - 1)] = self.alpha;
        p[(self.n - 1, 0)] = self.alpha;
        p
    }

    /// Couplings of the Hamiltonian this operator intertwines.
    pub fn partner(&self, lambda: f64) -> Result<Couplings> {
        match self.variant {
            Variant::Exchange => Couplings::symmetric(lambda),
            Variant::Weighted => Couplings::antisymmetric(lambda),
        }
    }
}

pub fn closed_form(n: usize, couplings: Couplings, variant: Variant) -> Result<ClosedFormPseudometric> {
    if n < 2 {
        return Err(Error::Dimension { n, min: 2 });
    }
    let alpha = match variant {
        Variant::Exchange => 1.0,
        Variant::Weighted => alpha(couplings.lambda)?,
    };
    Ok(ClosedFormPseudometric { n, variant, alpha })
}
