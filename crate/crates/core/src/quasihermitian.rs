//! Metric `Θ`, charge `C` and hermitizing map `Ω`.
//!
//! Everything is real here: `H` has real entries and, inside the
//! symmetrizable regime, real eigenvalues and eigenvectors. Time reversal
//! acts as entrywise conjugation and is therefore the identity on matrix
//! entries; it only enters through the adjoints, see [`theta_adjoint`].
//!
//! Spectral route: with right eigenvectors `|k⟩`, left eigenvectors `|k⟩⟩`
//! and overlaps `μ_k = ⟨⟨k|k⟩`, a pseudometric `P` with `P⁻¹ = Σ |m⟩ν_m⟨m|`
//! fixes `C = Σ |n⟩ω_n⟨⟨n|` and `Θ = Σ |k⟩⟩κ_k²⟨⟨k|` through
//! `ω_n = μ_n ν_n κ_n²` and `μ_n ω_n² = 1/μ_n`, i.e. `ω_n = ε_n/μ_n` with the
//! sign `ε_n` forced by `κ_n² > 0`.
//!
//! Closed route: for `H(λ, λ)` and `P = J`, `C` is antidiagonal with corners
//! `1/α` (top right) and `α` (bottom left) and `Θ = P·C = diag(α, 1, …, 1, 1/α)`.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::dieudonne::{self, PseudometricBasis};
use crate::error::{Error, Result};
use crate::hamiltonian::{Couplings, DiscreteHamiltonian};
use crate::linalg::{exchange, max_abs, min_symmetric_eigenvalue, DenseMatrix};
use crate::spectra::{self, fix_sign, Tolerances};

fn check_square(m: &DMatrix<f64>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

fn dense<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    DenseMatrix::from(m).serialize(s)
}

/// Paired right and left eigenvectors, ascending energy.
#[derive(Debug, Clone)]
pub struct BiorthogonalSystem {
    pub energies: Vec<f64>,
    pub right: Vec<DVector<f64>>,
    pub left: Vec<DVector<f64>>,
    pub overlaps: Vec<f64>,
}

impl BiorthogonalSystem {
    pub fn n(&self) -> usize {
        self.energies.len()
    }

    /// `|k⟩⟨⟨k| / μ_k`.
    pub fn projector(&self, k: usize) -> DMatrix<f64> {
        &self.right[k] * self.left[k].transpose() / self.overlaps[k]
    }

    /// `max_{j≠k} |⟨⟨j|k⟩|`.
    pub fn cross_overlap(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0_f64;
        for j in 0..n {
            for k in 0..n {
                if j != k {
                    worst = worst.max(self.left[j].dot(&self.right[k]).abs());
                }
            }
        }
        worst
    }
}

/// Unit-norm right/left eigenvectors, first nonzero entry positive.
///
/// Works in the symmetrizable regime only: with `S = D H D⁻¹` and
/// `S v = E v`, the right vector is `D⁻¹v` and the left vector `D v`.
pub fn biorthogonalize(h: &DiscreteHamiltonian) -> Result<BiorthogonalSystem> {
    let s = h.symmetrize()?;
    let pairs = spectra::eigen_real_vectors(&s)?;
    let spectrum = pairs.spectrum();
    if spectrum.is_degenerate(&Tolerances::default()) {
        return Err(Error::DegenerateSpectrum {
            min_gap: spectrum.min_gap(),
        });
    }
    let d = DVector::from_column_slice(&s.weights);
    let mut right = Vec::with_capacity(h.n());
    let mut left = Vec::with_capacity(h.n());
    let mut overlaps = Vec::with_capacity(h.n());
    for v in &pairs.vectors {
        let mut r = v.component_div(&d);
        let mut l = v.component_mul(&d);
        r /= r.norm();
        l /= l.norm();
        fix_sign(&mut r);
        fix_sign(&mut l);
        overlaps.push(l.dot(&r));
        right.push(r);
        left.push(l);
    }
    Ok(BiorthogonalSystem {
        energies: pairs.values,
        right,
        left,
        overlaps,
    })
}

/// Coefficients `ν_m` of `P⁻¹ = Σ |m⟩ν_m⟨m|`, ascending energy.
pub fn decompose_inverse_pseudometric(p: &DMatrix<f64>, sys: &BiorthogonalSystem) -> Result<Vec<f64>> {
    let n = sys.n();
    check_square(p, n)?;
    let p_inv = p.clone().try_inverse().ok_or(Error::SingularPseudometric)?;
    let nu: Vec<f64> = (0..n)
        .map(|k| {
            let l = &sys.left[k];
            l.dot(&(&p_inv * l)) / (sys.overlaps[k] * sys.overlaps[k])
        })
        .collect();
    let mut rebuilt = DMatrix::zeros(n, n);
    for (k, &v) in nu.iter().enumerate() {
        rebuilt += &sys.right[k] * sys.right[k].transpose() * v;
    }
    let residual = max_abs(&(rebuilt - &p_inv));
    if !(residual <= 1e-9 * max_abs(&p_inv).max(1.0)) {
        return Err(Error::NotDyadRepresentable { residual });
    }
    Ok(nu)
}

#[derive(Debug, Clone, Serialize)]
pub struct ChargeAssembly {
    pub nu: Vec<f64>,
    pub omega: Vec<f64>,
    pub kappa_sq: Vec<f64>,
    pub signs: Vec<i8>,
    #[serde(serialize_with = "dense")]
    pub charge: DMatrix<f64>,
    /// `Σ |k⟩⟩κ_k²⟨⟨k|`.
    #[serde(serialize_with = "dense")]
    pub metric: DMatrix<f64>,
}

impl ChargeAssembly {
    /// `(max |ω_n − μ_n ν_n κ_n²|, max |μ_n ω_n² − 1/μ_n|)`.
    pub fn relation_residuals(&self, sys: &BiorthogonalSystem) -> (f64, f64) {
        let mut first = 0.0_f64;
        let mut second = 0.0_f64;
        for k in 0..sys.n() {
            let mu = sys.overlaps[k];
            first = first.max((self.omega[k] - mu * self.nu[k] * self.kappa_sq[k]).abs());
            second = second.max((mu * self.omega[k] * self.omega[k] - 1.0 / mu).abs());
        }
        (first, second)
    }
}

pub fn assemble_charge_spectral(sys: &BiorthogonalSystem, nu: &[f64]) -> Result<ChargeAssembly> {
    let n = sys.n();
    if nu.len() != n {
        return Err(Error::CoefficientCount {
            expected: n,
            found: nu.len(),
        });
    }
    let scale = nu.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if let Some(index) = nu.iter().position(|v| v.abs() <= 1e-12 * scale || *v == 0.0) {
        return Err(Error::InadmissiblePseudometric { index });
    }
    let mut omega = Vec::with_capacity(n);
    let mut kappa_sq = Vec::with_capacity(n);
    let mut signs = Vec::with_capacity(n);
    let mut charge = DMatrix::zeros(n, n);
    let mut metric = DMatrix::zeros(n, n);
    for k in 0..n {
        let mu = sys.overlaps[k];
        // κ² = ε / (μ² ν) must be positive.
        let eps: i8 = if nu[k] > 0.0 { 1 } else { -1 };
        let w = f64::from(eps) / mu;
        let kap = w / (mu * nu[k]);
        charge += &sys.right[k] * sys.left[k].transpose() * w;
        metric += &sys.left[k] * sys.left[k].transpose() * kap;
        omega.push(w);
        kappa_sq.push(kap);
        signs.push(eps);
    }
    Ok(ChargeAssembly {
        nu: nu.to_vec(),
        omega,
        kappa_sq,
        signs,
        charge,
        metric,
    })
}

/// A metric candidate that passed the positivity certificate.
#[derive(Debug, Clone, Serialize)]
pub struct CertifiedMetric {
    #[serde(serialize_with = "dense")]
    pub theta: DMatrix<f64>,
    pub min_eigenvalue: f64,
}

/// `Θ = Σ c_k P_k` over a kernel basis, certified positive by a Cholesky
/// factorization and a smallest eigenvalue above `1e-12·‖Θ‖`.
pub fn metric_from_ansatz(basis: &PseudometricBasis, coeffs: &[f64]) -> Result<CertifiedMetric> {
    let theta = basis.combine(coeffs)?;
    certify(theta)
}

fn certify(theta: DMatrix<f64>) -> Result<CertifiedMetric> {
    let min_eigenvalue = min_symmetric_eigenvalue(&theta);
    let floor = 1e-12 * max_abs(&theta);
    if !(min_eigenvalue > floor) || Cholesky::new(theta.clone()).is_none() {
        return Err(Error::IndefiniteMetric { min_eigenvalue });
    }
    Ok(CertifiedMetric {
        theta,
        min_eigenvalue,
    })
}

/// `(P, C, Θ = P·C)` with their residuals against a Hamiltonian.
#[derive(Debug, Clone, Serialize)]
pub struct OperatorTriple {
    #[serde(serialize_with = "dense")]
    pub p: DMatrix<f64>,
    #[serde(serialize_with = "dense")]
    pub c: DMatrix<f64>,
    #[serde(serialize_with = "dense")]
    pub theta: DMatrix<f64>,
    pub residual_dieudonne_theta: f64,
    pub residual_involution: f64,
    /// Smallest eigenvalue of `Θ`.
    pub positivity: f64,
}

impl OperatorTriple {
    pub fn new(p: DMatrix<f64>, c: DMatrix<f64>, h: &DiscreteHamiltonian) -> Result<Self> {
        let n = h.n();
        check_square(&p, n)?;
        check_square(&c, n)?;
        let theta = &p * &c;
        let residual_dieudonne_theta = dieudonne::residual(h, &theta)?;
        let residual_involution = max_abs(&(&c * &c - DMatrix::identity(n, n)));
        let positivity = min_symmetric_eigenvalue(&theta);
        Ok(OperatorTriple {
            p,
            c,
            theta,
            residual_dieudonne_theta,
            residual_involution,
            positivity,
        })
    }
}

/// Antidiagonal charge with corners `1/α` (top right) and `α` (bottom left).
///
/// Needs `n ≥ 3`: for `n = 2` both couplings sit on one bond and this
/// pattern no longer commutes with `H`.
pub fn closed_form_charge(n: usize, lambda: f64) -> Result<DMatrix<f64>> {
    if n < 3 {
        return Err(Error::Dimension { n, min: 3 });
    }
    let a = dieudonne::alpha(lambda)?;
    if a == 0.0 {
        return Err(Error::SingularAlpha { lambda });
    }
    let mut c = exchange(n);
    c[(0, n - 1)] = 1.0 / a;
    c[(n - 1, 0)] = a;
    Ok(c)
}

/// Closed-form `(J, C, Θ)` for `H(λ, λ)`.
pub fn closed_form_operators(n: usize, lambda: f64) -> Result<OperatorTriple> {
    let c = closed_form_charge(n, lambda)?;
    let h = DiscreteHamiltonian::build(n, Couplings::symmetric(lambda)?)?;
    OperatorTriple::new(exchange(n), c, &h)
}

/// `Ω` with `ΩᵀΩ = Θ`, taken as the transposed Cholesky factor.
#[derive(Debug, Clone, Serialize)]
pub struct Omega {
    #[serde(serialize_with = "dense")]
    pub omega: DMatrix<f64>,
    #[serde(serialize_with = "dense")]
    pub omega_inv: DMatrix<f64>,
}

impl Omega {
    /// `Ω H Ω⁻¹`, symmetric whenever `Θ` is a metric for `H`.
    pub fn hermitize(&self, h: &DiscreteHamiltonian) -> Result<DMatrix<f64>> {
        check_square(&self.omega, h.n())?;
        Ok(&self.omega * h.to_dense() * &self.omega_inv)
    }
}

pub fn omega_factorize(theta: &DMatrix<f64>) -> Result<Omega> {
    let n = theta.nrows();
    check_square(theta, n)?;
    let sym = (theta + theta.transpose()) * 0.5;
    let chol = Cholesky::new(sym).ok_or_else(|| Error::IndefiniteMetric {
        min_eigenvalue: min_symmetric_eigenvalue(theta),
    })?;
    let l = chol.l();
    let omega = l.transpose();
    let omega_inv = omega
        .clone()
        .solve_upper_triangular(&DMatrix::identity(n, n))
        .ok_or(Error::SingularPseudometric)?;
    Ok(Omega { omega, omega_inv })
}

/// Bra of `ψ` in the metric space, `⟨ψ|Θ`, returned as a column.
pub fn theta_bra(theta: &DMatrix<f64>, psi: &DVector<f64>) -> DVector<f64> {
    theta.transpose() * psi
}

/// Adjoint in the metric space, `A‡ = Θ⁻¹ Aᵀ Θ`.
pub fn theta_adjoint(theta: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let inv = theta.clone().try_inverse().ok_or(Error::SingularPseudometric)?;
    Ok(inv * a.transpose() * theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryReport {
    /// `‖HᵀP − PH‖`
    pub pseudometric: f64,
    /// `‖HᵀΘ − ΘH‖`
    pub metric: f64,
    /// `‖CH − HC‖`
    pub commutator: f64,
    /// `‖C² − I‖`
    pub involution: f64,
    /// `‖Θ − PC‖`
    pub factorization: f64,
    pub min_eigenvalue_theta: f64,
}

impl SymmetryReport {
    pub fn max_residual(&self) -> f64 {
        self.pseudometric
            .max(self.metric)
            .max(self.commutator)
            .max(self.involution)
            .max(self.factorization)
    }
}

pub fn symmetry_report(h: &DiscreteHamiltonian, triple: &OperatorTriple) -> Result<SymmetryReport> {
    let n = h.n();
    check_square(&triple.p, n)?;
    let hd = h.to_dense();
    Ok(SymmetryReport {
        pseudometric: dieudonne::residual(h, &triple.p)?,
        metric: dieudonne::residual(h, &triple.theta)?,
        commutator: max_abs(&(&triple.c * &hd - &hd * &triple.c)),
        involution: max_abs(&(&triple.c * &triple.c - DMatrix::identity(n, n))),
        factorization: max_abs(&(&triple.theta - &triple.p * &triple.c)),
        min_eigenvalue_theta: min_symmetric_eigenvalue(&triple.theta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(n: usize, lambda: f64, mu: f64) -> DiscreteHamiltonian {
        DiscreteHamiltonian::build(n, Couplings::new(lambda, mu).unwrap()).unwrap()
    }

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    #[test]
    fn zero_coupling_is_orthogonal() {
        let sys = biorthogonalize(&h(6, 0.0, 0.0)).unwrap();
        for k in 0..6 {
            assert!((&sys.left[k] - &sys.right[k]).amax() < 1e-12);
            assert!((sys.overlaps[k] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_by_two_vectors() {
        let sys = biorthogonalize(&h(2, 0.5, 0.5)).unwrap();
        let r3 = 3.0_f64.sqrt();
        assert!((sys.energies[0] - (2.0 - r3 / 2.0)).abs() < 1e-14);
        let r = DVector::from_column_slice(&[r3 / 2.0, 0.5]);
        let l = DVector::from_column_slice(&[0.5, r3 / 2.0]);
        assert!((&sys.right[0] - r).amax() < 1e-12);
        assert!((&sys.left[0] - l).amax() < 1e-12);
        assert!((sys.overlaps[0] - r3 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn left_is_weighted_right() {
        for &(l, m) in &[(0.5, 0.5), (-0.8, 0.3), (0.95, -0.95)] {
            let ham = h(9, l, m);
            let d2 = DVector::from_iterator(9, ham.symmetrize().unwrap().weights.iter().map(|w| w * w));
            let sys = biorthogonalize(&ham).unwrap();
            for k in 0..9 {
                let t = sys.right[k].component_mul(&d2);
                let t = &t / t.norm();
                assert!((t - &sys.left[k]).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn biorthogonal_invariants() {
        let ham = h(12, 0.7, 0.7);
        let sys = biorthogonalize(&ham).unwrap();
        for k in 0..12 {
            let e = sys.energies[k];
            assert!((ham.apply(&sys.right[k]) - &sys.right[k] * e).amax() < 1e-10);
            assert!((ham.apply_transpose(&sys.left[k]) - &sys.left[k] * e).amax() < 1e-10);
            assert!(sys.overlaps[k].abs() > 1e-12);
        }
        assert!(sys.cross_overlap() < 1e-10);
    }

    #[test]
    fn biorthogonalize_errors() {
        assert!(matches!(
            biorthogonalize(&h(4, 1.5, 1.5)),
            Err(Error::NotSymmetrizable { .. })
        ));
    }

    #[test]
    fn nu_for_exchange_at_zero_coupling() {
        let sys = biorthogonalize(&h(3, 0.0, 0.0)).unwrap();
        let nu = decompose_inverse_pseudometric(&exchange(3), &sys).unwrap();
        for (v, e) in nu.iter().zip([1.0, -1.0, 1.0]) {
            assert!((v - e).abs() < 1e-12);
        }
        let nu = decompose_inverse_pseudometric(&DMatrix::identity(3, 3), &sys).unwrap();
        assert!(nu.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn nu_two_by_two_signs() {
        let sys = biorthogonalize(&h(2, 0.5, 0.5)).unwrap();
        let nu = decompose_inverse_pseudometric(&exchange(2), &sys).unwrap();
        assert!(nu[0] > 0.0 && nu[1] < 0.0);
        // Oracle: solve J = a r0 r0ᵀ + b r1 r1ᵀ entrywise by least squares.
        let r0 = &sys.right[0];
        let r1 = &sys.right[1];
        let a = DMatrix::from_row_slice(3, 2, &[
            r0[0] * r0[0], r1[0] * r1[0],
            r0[0] * r0[1], r1[0] * r1[1],
            r0[1] * r0[1], r1[1] * r1[1],
        ]);
        let b = DVector::from_column_slice(&[0.0, 1.0, 0.0]);
        let x = (a.transpose() * &a).try_inverse().unwrap() * a.transpose() * b;
        assert!((x[0] - nu[0]).abs() < 1e-10 && (x[1] - nu[1]).abs() < 1e-10);
    }

    #[test]
    fn identity_is_not_dyad_representable_off_zero() {
        let sys = biorthogonalize(&h(4, 0.5, 0.5)).unwrap();
        assert!(matches!(
            decompose_inverse_pseudometric(&DMatrix::identity(4, 4), &sys),
            Err(Error::NotDyadRepresentable { .. })
        ));
        let mut singular = exchange(4);
        singular[(0, 3)] = 0.0;
        assert_eq!(
            decompose_inverse_pseudometric(&singular, &sys).unwrap_err(),
            Error::SingularPseudometric
        );
    }

    #[test]
    fn spectral_charge_matches_closed_form() {
        for &(n, l) in &[(3, 0.5), (4, 0.5), (6, -0.7), (11, 0.85)] {
            let ham = h(n, l, l);
            let sys = biorthogonalize(&ham).unwrap();
            let nu = decompose_inverse_pseudometric(&exchange(n), &sys).unwrap();
            let asm = assemble_charge_spectral(&sys, &nu).unwrap();
            let closed = closed_form_charge(n, l).unwrap();
            assert!(max_abs(&(&asm.charge - closed)) < 1e-10);
            let c2 = &asm.charge * &asm.charge - DMatrix::identity(n, n);
            assert!(max_abs(&c2) < 1e-10);
            let (a, b) = asm.relation_residuals(&sys);
            assert!(a < 1e-10 && b < 1e-10);
            assert!(asm.kappa_sq.iter().all(|k| *k > 0.0));
        }
    }

    #[test]
    fn spectral_charge_zero_coupling_is_parity() {
        let sys = biorthogonalize(&h(5, 0.0, 0.0)).unwrap();
        let nu = decompose_inverse_pseudometric(&exchange(5), &sys).unwrap();
        let asm = assemble_charge_spectral(&sys, &nu).unwrap();
        assert!(max_abs(&(asm.charge - exchange(5))) < 1e-12);
    }

    #[test]
    fn two_by_two_metric() {
        // The single bond carries both couplings, so the metric is
        // diag(√α, 1/√α) rather than the n ≥ 3 pattern diag(α, …, 1/α).
        let sys = biorthogonalize(&h(2, 0.5, 0.5)).unwrap();
        let nu = decompose_inverse_pseudometric(&exchange(2), &sys).unwrap();
        let asm = assemble_charge_spectral(&sys, &nu).unwrap();
        let theta = exchange(2) * &asm.charge;
        let r3 = 3.0_f64.sqrt();
        assert!(max_abs(&(&theta - diag(&[1.0 / r3, r3]))) < 1e-10);
        assert!(max_abs(&(&theta - &asm.metric)) < 1e-10);
        assert!(closed_form_operators(2, 0.5).is_err());
    }

    #[test]
    fn vanishing_nu_rejected() {
        let sys = biorthogonalize(&h(3, 0.2, 0.2)).unwrap();
        assert_eq!(
            assemble_charge_spectral(&sys, &[1.0, 0.0, 1.0]).unwrap_err(),
            Error::InadmissiblePseudometric { index: 1 }
        );
        assert!(assemble_charge_spectral(&sys, &[1.0]).is_err());
    }

    #[test]
    fn assembly_is_deterministic() {
        let sys = biorthogonalize(&h(8, 0.45, 0.45)).unwrap();
        let nu = decompose_inverse_pseudometric(&exchange(8), &sys).unwrap();
        let a = assemble_charge_spectral(&sys, &nu).unwrap();
        let b = assemble_charge_spectral(&sys, &nu).unwrap();
        assert_eq!(a.signs, b.signs);
        assert_eq!(a.charge, b.charge);
        // Flipping any sign makes κ² negative, so the choice is forced.
        for k in 0..8 {
            let mu = sys.overlaps[k];
            let flipped = -a.omega[k] / (mu * nu[k]);
            assert!(flipped < 0.0);
        }
    }

    #[test]
    fn ansatz_identity_at_zero_coupling() {
        let basis = dieudonne::dyad_basis(&h(5, 0.0, 0.0)).unwrap();
        let m = metric_from_ansatz(&basis, &[1.0; 5]).unwrap();
        assert!(max_abs(&(m.theta - DMatrix::identity(5, 5))) < 1e-12);
    }

    #[test]
    fn ansatz_reproduces_diagonal_metric() {
        let ham = h(3, 0.5, 0.5);
        let sys = biorthogonalize(&ham).unwrap();
        let nu = decompose_inverse_pseudometric(&exchange(3), &sys).unwrap();
        let asm = assemble_charge_spectral(&sys, &nu).unwrap();
        let basis = dieudonne::dyad_basis(&ham).unwrap();
        let m = metric_from_ansatz(&basis, &asm.kappa_sq).unwrap();
        assert!(max_abs(&(m.theta - diag(&[1.0 / 3.0, 1.0, 3.0]))) < 1e-10);
        assert!((m.min_eigenvalue - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn alternating_ansatz_is_indefinite() {
        let ham = h(4, 0.3, 0.3);
        let basis = dieudonne::dyad_basis(&ham).unwrap();
        let err = metric_from_ansatz(&basis, &[1.0, -1.0, 1.0, -1.0]).unwrap_err();
        assert!(matches!(err, Error::IndefiniteMetric { min_eigenvalue } if min_eigenvalue < 0.0));
    }

    #[test]
    fn closed_forms_zero_coupling() {
        let t = closed_form_operators(5, 0.0).unwrap();
        assert_eq!(t.p, exchange(5));
        assert_eq!(t.c, exchange(5));
        assert_eq!(t.theta, DMatrix::identity(5, 5));
    }

    #[test]
    fn closed_forms_n3_half() {
        let t = closed_form_operators(3, 0.5).unwrap();
        assert!((t.c[(0, 2)] - 3.0).abs() < 1e-15);
        assert_eq!(t.c[(1, 1)], 1.0);
        assert!((t.c[(2, 0)] - 1.0 / 3.0).abs() < 1e-15);
        assert!(max_abs(&(&t.theta - diag(&[1.0 / 3.0, 1.0, 3.0]))) < 1e-15);
        assert!(t.residual_involution < 1e-15);
        assert!(t.residual_dieudonne_theta < 1e-14);
    }

    #[test]
    fn closed_forms_negative_lambda() {
        let t = closed_form_operators(4, -0.5).unwrap();
        assert!(max_abs(&(&t.theta - diag(&[3.0, 1.0, 1.0, 1.0 / 3.0]))) < 1e-15);
        assert!((t.positivity - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn closed_forms_reject_exceptional_points() {
        assert!(closed_form_operators(4, 1.0).is_err());
        assert!(closed_form_operators(4, -1.0).is_err());
    }

    #[test]
    fn charge_spectrum_and_trace() {
        for n in 3..9 {
            let t = closed_form_operators(n, 0.6).unwrap();
            let trace = t.c.trace();
            let expect = if n % 2 == 0 { 0.0 } else { 1.0 };
            assert!((trace - expect).abs() < 1e-14);
            let eig = t.c.complex_eigenvalues();
            for z in eig.iter() {
                assert!((z.re.abs() - 1.0).abs() < 1e-10 && z.im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn positivity_window() {
        for &l in &[-0.99, -0.5, 0.2, 0.9, 0.999] {
            let t = closed_form_operators(6, l).unwrap();
            let a = (1.0 - l) / (1.0 + l);
            assert!((t.positivity - a.min(1.0 / a)).abs() < 1e-12);
            assert!(t.positivity > 0.0);
        }
        let t = closed_form_operators(6, 1.5).unwrap();
        assert!(t.positivity < 0.0);
    }

    #[test]
    fn omega_identity() {
        let o = omega_factorize(&DMatrix::identity(4, 4)).unwrap();
        assert_eq!(o.omega, DMatrix::identity(4, 4));
        let ham = h(4, 0.3, 0.3);
        assert!(max_abs(&(o.hermitize(&ham).unwrap() - ham.to_dense())) < 1e-15);
    }

    #[test]
    fn omega_diagonal_metric() {
        let o = omega_factorize(&diag(&[1.0 / 3.0, 1.0, 3.0])).unwrap();
        let r3 = 3.0_f64.sqrt();
        assert!(max_abs(&(&o.omega - diag(&[1.0 / r3, 1.0, r3]))) < 1e-15);
        let hh = o.hermitize(&h(3, 0.5, 0.5)).unwrap();
        for i in 0..2 {
            assert!((hh[(i, i + 1)] + r3 / 2.0).abs() < 1e-14);
            assert!((hh[(i + 1, i)] + r3 / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn omega_reproduces_symmetrized_form() {
        for &l in &[-0.9, -0.3, 0.4, 0.85] {
            let ham = h(7, l, l);
            let t = closed_form_operators(7, l).unwrap();
            let hh = omega_factorize(&t.theta).unwrap().hermitize(&ham).unwrap();
            let s = ham.symmetrize().unwrap().to_dense();
            assert!(max_abs(&(hh - s)) < 1e-12);
        }
    }

    #[test]
    fn omega_rejects_indefinite() {
        assert!(matches!(
            omega_factorize(&diag(&[1.0, -1.0])),
            Err(Error::IndefiniteMetric { .. })
        ));
    }

    #[test]
    fn theta_adjoint_makes_h_self_adjoint() {
        let ham = h(5, 0.6, 0.6);
        let t = closed_form_operators(5, 0.6).unwrap();
        let adj = theta_adjoint(&t.theta, &ham.to_dense()).unwrap();
        assert!(max_abs(&(adj - ham.to_dense())) < 1e-12);
        // ⟨⟨φ|Hψ⟩ = ⟨⟨Hφ|ψ⟩
        let phi = DVector::from_fn(5, |i, _| (i as f64).cos());
        let psi = DVector::from_fn(5, |i, _| 1.0 + i as f64);
        let lhs = theta_bra(&t.theta, &phi).dot(&ham.apply(&psi));
        let rhs = theta_bra(&t.theta, &ham.apply(&phi)).dot(&psi);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn report_closed_forms() {
        let ham = h(6, 0.7, 0.7);
        let t = closed_form_operators(6, 0.7).unwrap();
        let r = symmetry_report(&ham, &t).unwrap();
        assert!(r.max_residual() <= 1e-12, "{r:?}");
        assert!((r.min_eigenvalue_theta - 3.0 / 17.0).abs() < 1e-12);
        assert!((r.min_eigenvalue_theta - 0.17647).abs() < 1e-5);

        let zero = symmetry_report(&h(4, 0.0, 0.0), &closed_form_operators(4, 0.0).unwrap()).unwrap();
        assert_eq!(zero.max_residual(), 0.0);
    }

    #[test]
    fn report_on_wrong_model() {
        let l = 0.35;
        let ham = h(6, l, -l);
        let t = closed_form_operators(6, l).unwrap();
        let r = symmetry_report(&ham, &t).unwrap();
        assert!((r.pseudometric - 2.0 * l).abs() < 1e-14);
    }

    #[test]
    fn intertwining_chain() {
        for &l in &[-0.9, 0.1, 0.6] {
            let ham = h(10, l, l);
            let t = closed_form_operators(10, l).unwrap();
            let r = symmetry_report(&ham, &t).unwrap();
            assert!(r.commutator <= 1e-9);
        }
    }
}
