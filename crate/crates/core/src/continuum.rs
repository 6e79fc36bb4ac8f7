//! Lattice-to-continuum checks for the square well.
//!
//! The box has unit length and spacing `h = 1/(n+1)`, so the scaled level
//! `(n+1)²·E_k/π²` of the unperturbed lattice tends to `k²`. The coupling is
//! held fixed while `n` grows.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{Couplings, DiscreteHamiltonian};
use crate::spectra;

/// `(n+1)²·E_k/π²` for the `levels` lowest eigenvalues of `H(λ, λ)`.
pub fn scaled_spectrum(n: usize, lambda: f64, levels: usize) -> Result<Vec<f64>> {
    if levels > n {
        return Err(Error::InvalidStudy(format!(
            "requested {levels} levels from a {n}-site lattice"
        )));
    }
    if !(lambda.abs() < 1.0) {
        return Err(Error::InvalidStudy(format!(
            "coupling {lambda} outside the open interval (-1, 1)"
        )));
    }
    let h = DiscreteHamiltonian::build(n, Couplings::symmetric(lambda)?)?;
    let spectrum = spectra::eigen_real(&h.symmetrize()?)?;
    let scale = ((n + 1) as f64).powi(2) / std::f64::consts::PI.powi(2);
    Ok(spectrum.real_parts()[..levels].iter().map(|e| e * scale).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub lambda: f64,
    pub sizes: Vec<usize>,
    /// `scaled_levels[i][k]` for `sizes[i]` and level `k + 1`.
    pub scaled_levels: Vec<Vec<f64>>,
    /// `estimated_order[t][k]` from the size triple starting at `sizes[t]`.
    pub estimated_order: Vec<Vec<f64>>,
    /// `differences[i][k] = level(sizes[i+1]) − level(sizes[i])`.
    pub differences: Vec<Vec<f64>>,
    /// `|differences[i]| / |differences[i+1]|` per level.
    pub difference_ratios: Vec<Vec<f64>>,
}

impl ConvergenceStudy {
    /// Rows `(n, k, scaled_energy, richardson_order)`; the order is attached
    /// to the last size of its triple and is absent for the first two sizes.
    pub fn rows(&self) -> Vec<(usize, usize, f64, Option<f64>)> {
        let mut out = Vec::new();
        for (i, &n) in self.sizes.iter().enumerate() {
            for (k, &e) in self.scaled_levels[i].iter().enumerate() {
                let order = i.checked_sub(2).map(|t| self.estimated_order[t][k]);
                out.push((n, k + 1, e, order));
            }
        }
        out
    }
}

pub fn convergence_study(sizes: &[usize], lambda: f64, levels: usize) -> Result<ConvergenceStudy> {
    if sizes.len() < 3 {
        return Err(Error::InvalidStudy("need at least three sizes".into()));
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidStudy("sizes must be strictly increasing".into()));
    }
    if levels == 0 || levels > sizes[0] {
        return Err(Error::InvalidStudy(format!(
            "levels must lie in 1..={}",
            sizes[0]
        )));
    }
    let scaled_levels = sizes
        .iter()
        .map(|&n| scaled_spectrum(n, lambda, levels))
        .collect::<Result<Vec<_>>>()?;
    let spacing: Vec<f64> = sizes.iter().map(|&n| 1.0 / (n as f64 + 1.0)).collect();

    let differences: Vec<Vec<f64>> = scaled_levels
        .windows(2)
        .map(|w| (0..levels).map(|k| w[1][k] - w[0][k]).collect())
        .collect();
    let difference_ratios = differences
        .windows(2)
        .map(|w| (0..levels).map(|k| (w[0][k] / w[1][k]).abs()).collect())
        .collect();
    let estimated_order = (0..sizes.len() - 2)
        .map(|t| {
            (0..levels)
                .map(|k| {
                    richardson_order(
                        [spacing[t], spacing[t + 1], spacing[t + 2]],
                        [
                            scaled_levels[t][k],
                            scaled_levels[t + 1][k],
                            scaled_levels[t + 2][k],
                        ],
                    )
                })
                .collect()
        })
        .collect();
    Ok(ConvergenceStudy {
        lambda,
        sizes: sizes.to_vec(),
        scaled_levels,
        estimated_order,
        differences,
        difference_ratios,
    })
}

/// Order `p` of `f(h) = f₀ + c·hᵖ` through three samples with `h₀ > h₁ > h₂`.
/// Returns NaN when the samples are not monotone.
pub fn richardson_order(h: [f64; 3], f: [f64; 3]) -> f64 {
    let observed = (f[0] - f[1]) / (f[1] - f[2]);
    if !(observed > 0.0) || !observed.is_finite() {
        return f64::NAN;
    }
    let target = observed.ln();
    let model = |p: f64| ((h[0].powf(p) - h[1].powf(p)) / (h[1].powf(p) - h[2].powf(p))).ln();
    // Monotone increasing in p for decreasing h.
    let (mut lo, mut hi) = (1e-6, 32.0);
    if target <= model(lo) || target >= model(hi) {
        return f64::NAN;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
