//! Eigenvalues of `H(λ, μ)` in the real and the complex regime.
//!
//! Inside the symmetrizable region the spectrum is computed on the
//! symmetric tridiagonal `S` by Sturm-sequence bisection, with eigenvectors
//! from inverse iteration. Elsewhere the roots of the characteristic
//! polynomial are found by Newton's method with implicit deflation.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{Couplings, DiscreteHamiltonian, SymmetrizedForm};

const EPS: f64 = f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// `|Im E| ≤ reality · max(1, ρ)` counts as real.
    pub reality: f64,
    /// Eigenvalues closer than this are degenerate.
    pub degeneracy: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            reality: 1e-9,
            degeneracy: 1e-10,
        }
    }
}

/// Eigenvalues sorted by `(Re, Im)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<Complex64>,
    all_real: bool,
    min_gap: f64,
    complex_pairs: usize,
}

impl Spectrum {
    fn from_values(mut values: Vec<Complex64>, tol: &Tolerances) -> Self {
        let radius = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let cut = tol.reality * radius.max(1.0);
        for z in &mut values {
            if z.im.abs() <= cut {
                z.im = 0.0;
            }
        }
        values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let complex_pairs = values.iter().filter(|z| z.im > 0.0).count();
        let mut min_gap = f64::INFINITY;
        for i in 0..values.len() {
            for j in i + 1..values.len() {
                min_gap = min_gap.min((values[i] - values[j]).norm());
            }
        }
        Spectrum {
            all_real: complex_pairs == 0,
            values,
            min_gap,
            complex_pairs,
        }
    }

    fn from_real(values: Vec<f64>) -> Self {
        Self::from_values(
            values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
            &Tolerances::default(),
        )
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn all_real(&self) -> bool {
        self.all_real
    }

    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    pub fn complex_pairs(&self) -> usize {
        self.complex_pairs
    }

    pub fn is_degenerate(&self, tol: &Tolerances) -> bool {
        self.min_gap <= tol.degeneracy
    }

    /// Real parts, ascending. Only meaningful when [`Self::all_real`].
    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn sum(&self) -> Complex64 {
        self.values.iter().sum()
    }

    pub fn product(&self) -> Complex64 {
        self.values.iter().product()
    }
}

#[derive(Serialize, Deserialize)]
struct ComplexJson {
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct SpectrumJson {
    values: Vec<ComplexJson>,
    all_real: bool,
    min_gap: f64,
}

impl Serialize for Spectrum {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SpectrumJson {
            values: self
                .values
                .iter()
                .map(|z| ComplexJson { re: z.re, im: z.im })
                .collect(),
            all_real: self.all_real,
            min_gap: self.min_gap,
        }
        .serialize(s)
    }
}

/// Eigenvalues together with orthonormal eigenvectors of `S`.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<DVector<f64>>,
}

impl EigenPairs {
    pub fn spectrum(&self) -> Spectrum {
        Spectrum::from_real(self.values.clone())
    }
}

/// Number of eigenvalues of `S` strictly below `x`.
pub fn sturm_count(s: &SymmetrizedForm, x: f64) -> usize {
    let pivmin = pivot_floor(s);
    let mut count = 0;
    let mut q = s.diag[0] - x;
    for i in 0..s.n() {
        if i > 0 {
            q = s.diag[i] - x - s.off[i - 1] * s.off[i - 1] / q;
        }
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn pivot_floor(s: &SymmetrizedForm) -> f64 {
    let e2 = s.off.iter().map(|e| e * e).fold(1.0, f64::max);
    f64::MIN_POSITIVE / EPS * e2
}

fn gershgorin(s: &SymmetrizedForm) -> (f64, f64) {
    let n = s.n();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut r = 0.0;
        if i > 0 {
            r += s.off[i - 1].abs();
        }
        if i + 1 < n {
            r += s.off[i].abs();
        }
        lo = lo.min(s.diag[i] - r);
        hi = hi.max(s.diag[i] + r);
    }
    let pad = EPS * hi.abs().max(lo.abs()).max(1.0);
    (lo - pad, hi + pad)
}

/// `k`-th smallest eigenvalue (0-based) of `S` by bisection.
fn bisect(s: &SymmetrizedForm, k: usize, bounds: (f64, f64)) -> f64 {
    let (mut lo, mut hi) = bounds;
    let pivmin = pivot_floor(s);
    for _ in 0..4096 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 2.0 * EPS * lo.abs().max(hi.abs()) + pivmin {
            break;
        }
        if sturm_count(s, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All eigenvalues of the symmetric tridiagonal, ascending.
pub fn eigen_real(s: &SymmetrizedForm) -> Result<Spectrum> {
    Ok(Spectrum::from_real(real_eigenvalues(s)))
}

fn real_eigenvalues(s: &SymmetrizedForm) -> Vec<f64> {
    let bounds = gershgorin(s);
    (0..s.n()).map(|k| bisect(s, k, bounds)).collect()
}

/// Eigenvalues plus unit eigenvectors of `S` (first nonzero entry positive).
pub fn eigen_real_vectors(s: &SymmetrizedForm) -> Result<EigenPairs> {
    let values = real_eigenvalues(s);
    let n = s.n();
    let norm = s.max_abs().max(f64::MIN_POSITIVE);
    let cluster = 1e-3 * norm;
    let mut vectors: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for (k, &e) in values.iter().enumerate() {
        let lu = TridiagonalLu::factor(s, e);
        let mut x = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        x /= x.norm();
        let neighbours: Vec<usize> = (0..k).filter(|&j| (values[j] - e).abs() <= cluster).collect();
        let mut shifts = Vec::new();
        for _ in 0..5 {
            let mut y = lu.solve(&x);
            for &j in &neighbours {
                let c = vectors[j].dot(&y);
                y.axpy(-c, &vectors[j], 1.0);
            }
            let ny = y.norm();
            if !ny.is_finite() || ny == 0.0 {
                break;
            }
            x = y / ny;
            shifts.push(e);
        }
        let r = apply_symmetric(s, &x) - &x * e;
        let residual = r.norm();
        if !(residual <= 1e-10 * norm) {
            return Err(Error::IterationFailure {
                index: k,
                residual,
                shifts,
            });
        }
        fix_sign(&mut x);
        vectors.push(x);
    }
    Ok(EigenPairs { values, vectors })
}

pub(crate) fn fix_sign(x: &mut DVector<f64>) {
    let scale = x.amax();
    if let Some(first) = x.iter().copied().find(|v| v.abs() > 1e-12 * scale) {
        if first < 0.0 {
            x.neg_mut();
        }
    }
}

fn apply_symmetric(s: &SymmetrizedForm, x: &DVector<f64>) -> DVector<f64> {
    let n = s.n();
    DVector::from_fn(n, |i, _| {
        let mut y = s.diag[i] * x[i];
        if i > 0 {
            y += s.off[i - 1] * x[i - 1];
        }
        if i + 1 < n {
            y += s.off[i] * x[i + 1];
        }
        y
    })
}

/// LU with partial pivoting of `S − σI`, stored in band form.
struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(s: &SymmetrizedForm, shift: f64) -> Self {
        let n = s.n();
        let floor = EPS * s.max_abs().max(f64::MIN_POSITIVE);
        let mut d: Vec<f64> = s.diag.iter().map(|a| a - shift).collect();
        let mut dl = s.off.clone();
        let mut du = s.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = floor;
                }
                let f = dl[i] / d[i];
                dl[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let t = du[i];
                du[i] = d[i + 1];
                d[i + 1] = t - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -f;
                }
                swapped[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = floor;
        }
        TridiagonalLu {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.d.len();
        let mut x = b.clone();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let t = x[i];
                x[i] = x[i + 1];
                x[i + 1] = t - self.dl[i] * x[i];
            } else {
                x[i + 1] -= self.dl[i] * x[i];
            }
        }
        x[n - 1] /= self.d[n - 1];
        if n > 1 {
            x[n - 2] = (x[n - 2] - self.du[n - 2] * x[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - self.du[i] * x[i + 1] - self.du2[i] * x[i + 2]) / self.d[i];
        }
        x
    }
}

/// `det(H − eI)` by the three-term recurrence.
pub fn char_poly(h: &DiscreteHamiltonian, e: Complex64) -> Complex64 {
    char_poly_tridiagonal(h.diag(), &h.bond_products(), e)
}

/// `det(T − eI)` for a tridiagonal with diagonal `diag` and bond products
/// `products[i] = T[i][i+1]·T[i+1][i]`. A single diagonal entry gives `diag[0] − e`.
pub fn char_poly_tridiagonal(diag: &[f64], products: &[f64], e: Complex64) -> Complex64 {
    let mut prev = Complex64::new(1.0, 0.0);
    let mut cur = Complex64::new(diag[0], 0.0) - e;
    for k in 1..diag.len() {
        let next = (diag[k] - e) * cur - products[k - 1] * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `(p, p')` up to a common positive factor, so `p'/p` is exact while the
/// magnitudes stay in range.
fn poly_and_derivative(diag: &[f64], products: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let (mut p_prev, mut dp_prev) = (one, zero);
    let (mut p, mut dp) = (diag[0] - z, -one);
    for k in 1..diag.len() {
        let a = diag[k] - z;
        let b = products[k - 1];
        let p_next = a * p - b * p_prev;
        let dp_next = -p + a * dp - b * dp_prev;
        p_prev = p;
        dp_prev = dp;
        p = p_next;
        dp = dp_next;
        let m = p.norm().max(p_prev.norm());
        if m > 1e150 || (m < 1e-150 && m > 0.0) {
            let f = 1.0 / m;
            p *= f;
            p_prev *= f;
            dp *= f;
            dp_prev *= f;
        }
    }
    (p, dp)
}

const NEWTON_ITERATIONS: usize = 500;
const RESTARTS: usize = 32;

/// All eigenvalues of `H`, valid for any couplings.
pub fn eigen_general(h: &DiscreteHamiltonian, tol: &Tolerances) -> Result<Spectrum> {
    let diag = h.diag();
    let products = h.bond_products();
    let n = h.n();
    let radius = h.gershgorin_radius().max(1.0);
    let guesses = initial_guesses(h)?;
    let mut roots: Vec<Complex64> = Vec::with_capacity(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let mut guess_iter = guesses.into_iter();
    while roots.len() < n {
        let index = roots.len();
        let seed = guess_iter.next();
        let mut found = None;
        let mut last_iterates = Vec::new();
        for attempt in 0..=RESTARTS {
            let start = match (attempt, seed) {
                (0, Some(g)) => Complex64::new(g, 1e-2 * (1.0 + g.abs())),
                _ => {
                    let r = radius * rng.gen_range(0.05..1.0);
                    let t = rng.gen_range(0.0..std::f64::consts::TAU);
                    Complex64::new(2.0 + r * t.cos(), r * t.sin())
                }
            };
            match deflated_newton(diag, &products, &roots, start, radius) {
                Ok(z) => {
                    found = Some(z);
                    break;
                }
                Err(iterates) => last_iterates = iterates,
            }
        }
        let Some(z) = found else {
            return Err(Error::RootFinding {
                index,
                iterations: NEWTON_ITERATIONS,
                iterates: last_iterates.iter().map(|z| (z.re, z.im)).collect(),
            });
        };
        let z = polish(diag, &products, z);
        let cut = tol.reality * radius;
        if z.im.abs() > cut && roots.len() + 2 <= n {
            roots.push(Complex64::new(z.re, z.im.abs()));
            roots.push(Complex64::new(z.re, -z.im.abs()));
        } else {
            roots.push(Complex64::new(z.re, if z.im.abs() > cut { z.im } else { 0.0 }));
        }
    }
    Ok(Spectrum::from_values(roots, tol))
}

/// Starting points from the real branch with couplings clamped into `(-1, 1)`.
fn initial_guesses(h: &DiscreteHamiltonian) -> Result<Vec<f64>> {
    let clamp = |v: f64| v.clamp(-0.999, 0.999);
    let c = h.couplings();
    let clamped = DiscreteHamiltonian::build(h.n(), Couplings::new(clamp(c.lambda), clamp(c.mu))?)?;
    Ok(real_eigenvalues(&clamped.symmetrize()?))
}

fn deflated_newton(
    diag: &[f64],
    products: &[f64],
    found: &[Complex64],
    start: Complex64,
    radius: f64,
) -> std::result::Result<Complex64, Vec<Complex64>> {
    let mut z = start;
    let mut history = Vec::new();
    for _ in 0..NEWTON_ITERATIONS {
        let (p, dp) = poly_and_derivative(diag, products, z);
        if p == Complex64::new(0.0, 0.0) {
            return Ok(z);
        }
        let mut s = dp / p;
        for r in found {
            s -= 1.0 / (z - r);
        }
        if !s.is_finite() || s.norm() == 0.0 {
            return Err(history);
        }
        let mut step = 1.0 / s;
        if step.norm() > radius {
            step *= radius / step.norm();
        }
        z -= step;
        history.push(z);
        if history.len() > 8 {
            history.remove(0);
        }
        if step.norm() <= 4.0 * EPS * z.norm().max(1.0) {
            return Ok(z);
        }
    }
    Err(history)
}

/// A few undeflated Newton steps, kept only while `|p|` decreases.
fn polish(diag: &[f64], products: &[f64], mut z: Complex64) -> Complex64 {
    let mut best = char_poly_tridiagonal(diag, products, z).norm();
    for _ in 0..3 {
        let (p, dp) = poly_and_derivative(diag, products, z);
        if dp.norm() == 0.0 || p.norm() == 0.0 {
            break;
        }
        let trial = z - p / dp;
        let val = char_poly_tridiagonal(diag, products, trial).norm();
        if !(val < best) {
            break;
        }
        best = val;
        z = trial;
    }
    z
}

/// Real branch when symmetrizable, complex branch otherwise.
pub fn spectrum(h: &DiscreteHamiltonian, tol: &Tolerances) -> Result<Spectrum> {
    match h.symmetrize() {
        Ok(s) => eigen_real(&s),
        Err(Error::NotSymmetrizable { .. }) => eigen_general(h, tol),
        Err(e) => Err(e),
    }
}

/// Classification of one `(λ, μ)` point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub lambda: f64,
    pub mu: f64,
    pub all_real: bool,
    pub complex_pairs: usize,
    pub min_gap: f64,
    /// Solver diagnostic when the cell could not be classified.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Reality classification over a parameter grid. `cells[i][j]` belongs to
/// `lambda_grid[i]` and `mu_grid[j]`; a line scan has one column whose `mu`
/// is stored per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainScan {
    pub n: usize,
    pub lambda_grid: Vec<f64>,
    pub mu_grid: Vec<f64>,
    pub cells: Vec<Vec<ScanCell>>,
}

impl DomainScan {
    pub fn iter(&self) -> impl Iterator<Item = &ScanCell> {
        self.cells.iter().flatten()
    }
}

fn classify(n: usize, lambda: f64, mu: f64, tol: &Tolerances) -> ScanCell {
    let outcome = Couplings::new(lambda, mu)
        .and_then(|c| DiscreteHamiltonian::build(n, c))
        .and_then(|h| spectrum(&h, tol));
    match outcome {
        Ok(s) => ScanCell {
            lambda,
            mu,
            all_real: s.all_real(),
            complex_pairs: s.complex_pairs(),
            min_gap: s.min_gap(),
            error: None,
        },
        Err(e) => ScanCell {
            lambda,
            mu,
            all_real: false,
            complex_pairs: 0,
            min_gap: f64::NAN,
            error: Some(e.to_string()),
        },
    }
}

/// Full `lambda × mu` grid.
pub fn scan_domain(
    n: usize,
    lambda_grid: &[f64],
    mu_grid: &[f64],
    tol: &Tolerances,
) -> Result<DomainScan> {
    if n < 2 {
        return Err(Error::Dimension { n, min: 2 });
    }
    let cells = lambda_grid
        .par_iter()
        .map(|&l| mu_grid.iter().map(|&m| classify(n, l, m, tol)).collect())
        .collect();
    Ok(DomainScan {
        n,
        lambda_grid: lambda_grid.to_vec(),
        mu_grid: mu_grid.to_vec(),
        cells,
    })
}

/// Scan along `μ = sign · λ`.
pub fn scan_line(n: usize, lambda_grid: &[f64], sign: f64, tol: &Tolerances) -> Result<DomainScan> {
    if n < 2 {
        return Err(Error::Dimension { n, min: 2 });
    }
    let cells = lambda_grid
        .par_iter()
        .map(|&l| vec![classify(n, l, sign * l, tol)])
        .collect();
    Ok(DomainScan {
        n,
        lambda_grid: lambda_grid.to_vec(),
        mu_grid: lambda_grid.iter().map(|l| sign * l).collect(),
        cells,
    })
}
