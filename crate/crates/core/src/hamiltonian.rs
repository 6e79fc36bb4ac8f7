//! The corner-perturbed tridiagonal Hamiltonian `H(λ, μ)`.
//!
//! `H` is stored as three arrays. Bond `i` couples sites `i` and `i + 1`
//! with `H[i][i+1] = sup[i]` and `H[i+1][i] = sub[i]`. The first bond carries
//! `(-1-λ, -1+λ)`, the last bond `(-1-μ, -1+μ)`, every interior bond `-1`.
//! For `n = 2` the single bond is `(-1-λ, -1+μ)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The two corner couplings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub lambda: f64,
    pub mu: f64,
}

impl Couplings {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::NonFiniteCoupling {
                name: "lambda",
                value: lambda,
            });
        }
        if !mu.is_finite() {
            return Err(Error::NonFiniteCoupling {
                name: "mu",
                value: mu,
            });
        }
        Ok(Couplings { lambda, mu })
    }

    /// `μ = +λ`, the model with coupling-independent parity.
    pub fn symmetric(lambda: f64) -> Result<Self> {
        Self::new(lambda, lambda)
    }

    /// `μ = -λ`.
    pub fn antisymmetric(lambda: f64) -> Result<Self> {
        Self::new(lambda, -lambda)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteHamiltonian {
    couplings: Couplings,
    diag: Vec<f64>,
    sup: Vec<f64>,
    sub: Vec<f64>,
}

impl DiscreteHamiltonian {
    pub fn build(n: usize, couplings: Couplings) -> Result<Self> {
        if n < 2 {
            return Err(Error::Dimension { n, min: 2 });
        }
        let Couplings { lambda, mu } = couplings;
        let mut sup = vec![-1.0; n - 1];
        let mut sub = vec![-1.0; n - 1];
        sup[0] = -1.0 - lambda;
        sub[0] = -1.0 + lambda;
        if n == 2 {
            sub[0] = -1.0 + mu;
        } else {
            sup[n - 2] = -1.0 - mu;
            sub[n - 2] = -1.0 + mu;
        }
        Ok(DiscreteHamiltonian {
            couplings,
            diag: vec![2.0; n],
            sup,
            sub,
        })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn couplings(&self) -> Couplings {
        self.couplings
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn sup(&self) -> &[f64] {
        &self.sup
    }

    pub fn sub(&self) -> &[f64] {
        &self.sub
    }

    /// `sup[i] * sub[i]` per bond; these are the only quantities the
    /// characteristic polynomial depends on.
    pub fn bond_products(&self) -> Vec<f64> {
        self.sup.iter().zip(&self.sub).map(|(a, b)| a * b).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.diag
            .iter()
            .chain(&self.sup)
            .chain(&self.sub)
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Gershgorin bound on the spectral radius.
    pub fn gershgorin_radius(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut r = self.diag[i].abs();
                if i > 0 {
                    r += self.sub[i - 1].abs();
                }
                if i + 1 < n {
                    r += self.sup[i].abs();
                }
                r
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
        }
        for i in 0..n - 1 {
            m[(i, i + 1)] = self.sup[i];
            m[(i + 1, i)] = self.sub[i];
        }
        m
    }

    /// `H x` without materializing `H`.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.n();
        DVector::from_fn(n, |i, _| {
            let mut y = self.diag[i] * x[i];
            if i > 0 {
                y += self.sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                y += self.sup[i] * x[i + 1];
            }
            y
        })
    }

    /// `Hᵀ x`.
    pub fn apply_transpose(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.n();
        DVector::from_fn(n, |i, _| {
            let mut y = self.diag[i] * x[i];
            if i > 0 {
                y += self.sup[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                y += self.sub[i] * x[i + 1];
            }
            y
        })
    }

    /// Diagonal similarity `S = D H D⁻¹` onto a symmetric tridiagonal.
    ///
    /// Requires every bond product to be strictly positive, which for this
    /// family means `|λ| < 1` and `|μ| < 1`.
    pub fn symmetrize(&self) -> Result<SymmetrizedForm> {
        let n = self.n();
        let mut off = Vec::with_capacity(n - 1);
        let mut weights = Vec::with_capacity(n);
        weights.push(1.0);
        for (bond, (&a, &b)) in self.sup.iter().zip(&self.sub).enumerate() {
            let product = a * b;
            if !(product > 0.0) {
                return Err(Error::NotSymmetrizable { bond, product });
            }
            // sup and sub share a sign here, so the ratio is positive.
            off.push(-product.sqrt());
            let last = weights[bond];
            weights.push(last * (a / b).sqrt());
        }
        Ok(SymmetrizedForm {
            diag: self.diag.clone(),
            off,
            weights,
        })
    }
}

/// Symmetric tridiagonal `S = D H D⁻¹` with `D = diag(weights)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrizedForm {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SymmetrizedForm {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
        }
        for (i, &e) in self.off.iter().enumerate() {
            m[(i, i + 1)] = e;
            m[(i + 1, i)] = e;
        }
        m
    }

    /// Dense `D`.
    pub fn similarity(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.weights))
    }

    /// Largest absolute entry of `S`.
    pub fn max_abs(&self) -> f64 {
        self.diag
            .iter()
            .chain(&self.off)
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

#[derive(Serialize, Deserialize)]
struct TridiagonalJson {
    n: usize,
    diag: Vec<f64>,
    #[serde(rename = "super")]
    sup: Vec<f64>,
    sub: Vec<f64>,
    lambda: f64,
    mu: f64,
}

impl Serialize for DiscreteHamiltonian {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TridiagonalJson {
            n: self.n(),
            diag: self.diag.clone(),
            sup: self.sup.clone(),
            sub: self.sub.clone(),
            lambda: self.couplings.lambda,
            mu: self.couplings.mu,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiscreteHamiltonian {
    /// Rebuilds from `n`, `lambda`, `mu` and rejects arrays that disagree
    /// with the construction.
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = TridiagonalJson::deserialize(d)?;
        let couplings = Couplings::new(raw.lambda, raw.mu).map_err(D::Error::custom)?;
        let h = DiscreteHamiltonian::build(raw.n, couplings).map_err(D::Error::custom)?;
        if h.diag != raw.diag || h.sup != raw.sup || h.sub != raw.sub {
            return Err(D::Error::custom(
                "tridiagonal arrays do not match lambda/mu",
            ));
        }
        Ok(h)
    }
}
