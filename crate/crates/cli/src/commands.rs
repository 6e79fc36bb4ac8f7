use cpt_well::continuum::convergence_study;
use cpt_well::dieudonne::{self, closed_form, kernel_basis, KernelMethod, Variant};
use cpt_well::linalg::{max_abs, min_symmetric_eigenvalue, DenseMatrix};
use cpt_well::quasihermitian::{
    assemble_charge_spectral, biorthogonalize, closed_form_charge, closed_form_operators,
    decompose_inverse_pseudometric, omega_factorize, symmetry_report, SymmetryReport,
};
use cpt_well::spectra::{self, scan_domain, scan_line, Tolerances};
use cpt_well::{Couplings, DiscreteHamiltonian, Spectrum};
use serde::Serialize;

use crate::args::{ContinuumArgs, Format, Line, PointArgs, ScanArgs};
use crate::Failure;

/// Closed-form residuals above this mark make `verify` fail.
const VERIFY_TOLERANCE: f64 = 1e-12;

fn tolerances(tol: Option<f64>) -> Result<Tolerances, Failure> {
    let mut t = Tolerances::default();
    if let Some(x) = tol {
        if !(x.is_finite() && x > 0.0) {
            return Err(Failure::Usage(format!("--tol must be positive, got {x}")));
        }
        t.reality = x;
    }
    Ok(t)
}

fn hamiltonian(args: &PointArgs) -> Result<DiscreteHamiltonian, Failure> {
    Ok(DiscreteHamiltonian::build(args.n, Couplings::new(args.lambda, args.mu())?)?)
}

fn json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_rows<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Failure::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Io(e.to_string()))
}

fn json_only(format: Format, command: &str) -> Result<(), Failure> {
    match format {
        Format::Json => Ok(()),
        Format::Csv => Err(Failure::Usage(format!("{command} has no CSV form; use --format json"))),
    }
}

#[derive(Serialize)]
struct SpectrumReport<'a> {
    n: usize,
    lambda: f64,
    mu: f64,
    #[serde(flatten)]
    spectrum: &'a Spectrum,
}

#[derive(Serialize)]
struct EigenRow {
    k: usize,
    re: f64,
    im: f64,
}

pub fn spectrum(args: &PointArgs) -> Result<String, Failure> {
    let tol = tolerances(args.tol)?;
    let s = spectra::spectrum(&hamiltonian(args)?, &tol)?;
    match args.out.format {
        Format::Json => json(&SpectrumReport { n: args.n, lambda: args.lambda, mu: args.mu(), spectrum: &s }),
        Format::Csv => csv_rows(s.values().iter().enumerate().map(|(k, z)| EigenRow { k: k + 1, re: z.re, im: z.im })),
    }
}

#[derive(Serialize)]
struct ScanRow {
    lambda: f64,
    mu: f64,
    all_real: bool,
    complex_pairs: usize,
    min_gap: f64,
}

pub fn scan(args: &ScanArgs) -> Result<String, Failure> {
    let tol = tolerances(args.tol)?;
    let grid = &args.grid.0;
    let result = match &args.mu_grid {
        Some(mu) => scan_domain(args.n, grid, &mu.0, &tol)?,
        None => scan_line(args.n, grid, args.line.unwrap_or(Line::Symmetric).sign(), &tol)?,
    };
    if let Some(cell) = result.iter().find(|c| c.error.is_some()) {
        return Err(Failure::Numerical(format!(
            "λ={} μ={}: {}",
            cell.lambda,
            cell.mu,
            cell.error.as_deref().unwrap_or_default()
        )));
    }
    match args.out.format {
        Format::Json => json(&result),
        Format::Csv => csv_rows(result.iter().map(|c| ScanRow {
            lambda: c.lambda,
            mu: c.mu,
            all_real: c.all_real,
            complex_pairs: c.complex_pairs,
            min_gap: c.min_gap,
        })),
    }
}

#[derive(Serialize)]
struct PseudometricReport<'a> {
    n: usize,
    lambda: f64,
    mu: f64,
    method: KernelMethod,
    dimension: usize,
    independence: f64,
    basis: &'a dieudonne::PseudometricBasis,
}

pub fn pseudometrics(args: &PointArgs) -> Result<String, Failure> {
    json_only(args.out.format, "pseudometrics")?;
    let basis = kernel_basis(&hamiltonian(args)?)?;
    json(&PseudometricReport {
        n: args.n,
        lambda: args.lambda,
        mu: args.mu(),
        method: basis.method,
        dimension: basis.dimension(),
        independence: basis.independence,
        basis: &basis,
    })
}

/// Closed-form pseudometric for the two partner lines.
fn partner_pseudometric(args: &PointArgs) -> Result<DenseMatrix, Failure> {
    let (l, m) = (args.lambda, args.mu());
    let variant = if m == l {
        Variant::Exchange
    } else if m == -l {
        Variant::Weighted
    } else {
        return Err(Failure::Usage("a closed-form pseudometric exists only for mu = lambda or mu = -lambda".into()));
    };
    Ok((&closed_form(args.n, Couplings::symmetric(l)?, variant)?.matrix()).into())
}

#[derive(Serialize)]
struct MetricReport {
    n: usize,
    lambda: f64,
    mu: f64,
    pseudometric: DenseMatrix,
    energies: Vec<f64>,
    overlaps: Vec<f64>,
    #[serde(flatten)]
    assembly: cpt_well::quasihermitian::ChargeAssembly,
    min_eigenvalue: f64,
    omega: DenseMatrix,
}

pub fn metric(args: &PointArgs) -> Result<String, Failure> {
    json_only(args.out.format, "metric")?;
    let ham = hamiltonian(args)?;
    let p = partner_pseudometric(args)?;
    let sys = biorthogonalize(&ham)?;
    let nu = decompose_inverse_pseudometric(&p.to_matrix(), &sys)?;
    let assembly = assemble_charge_spectral(&sys, &nu)?;
    let omega = omega_factorize(&assembly.metric)?;
    json(&MetricReport {
        n: args.n,
        lambda: args.lambda,
        mu: args.mu(),
        pseudometric: p,
        energies: sys.energies.clone(),
        overlaps: sys.overlaps.clone(),
        min_eigenvalue: min_symmetric_eigenvalue(&assembly.metric),
        omega: (&omega.omega).into(),
        assembly,
    })
}

#[derive(Serialize)]
struct ChargeReport {
    n: usize,
    lambda: f64,
    spectral: DenseMatrix,
    closed_form: DenseMatrix,
    max_difference: f64,
    involution_residual: f64,
}

pub fn charge(args: &PointArgs) -> Result<String, Failure> {
    json_only(args.out.format, "charge")?;
    if args.mu() != args.lambda {
        return Err(Failure::Usage("charge compares against the closed form for mu = lambda".into()));
    }
    let ham = hamiltonian(args)?;
    let closed = closed_form_charge(args.n, args.lambda)?;
    let sys = biorthogonalize(&ham)?;
    let p = cpt_well::linalg::exchange(args.n);
    let spectral = assemble_charge_spectral(&sys, &decompose_inverse_pseudometric(&p, &sys)?)?.charge;
    let n = args.n;
    json(&ChargeReport {
        n,
        lambda: args.lambda,
        max_difference: max_abs(&(&spectral - &closed)),
        involution_residual: max_abs(&(&spectral * &spectral - nalgebra::DMatrix::identity(n, n))),
        spectral: (&spectral).into(),
        closed_form: (&closed).into(),
    })
}

#[derive(Serialize)]
struct VerifyReport {
    n: usize,
    lambda: f64,
    tolerance: f64,
    pass: bool,
    #[serde(flatten)]
    residuals: SymmetryReport,
}

pub fn verify(args: &PointArgs) -> Result<String, Failure> {
    json_only(args.out.format, "verify")?;
    if args.mu() != args.lambda {
        return Err(Failure::Usage("verify checks the closed forms for mu = lambda".into()));
    }
    let ham = hamiltonian(args)?;
    let triple = closed_form_operators(args.n, args.lambda)?;
    let residuals = symmetry_report(&ham, &triple)?;
    let pass = residuals.max_residual() <= VERIFY_TOLERANCE;
    let out = json(&VerifyReport { n: args.n, lambda: args.lambda, tolerance: VERIFY_TOLERANCE, pass, residuals })?;
    if pass {
        Ok(out)
    } else {
        Err(Failure::Rejected(out, format!("residual {:.3e} exceeds {VERIFY_TOLERANCE:e}", residuals.max_residual())))
    }
}

#[derive(Serialize)]
struct ContinuumRow {
    n: usize,
    k: usize,
    scaled_energy: f64,
    richardson_order: Option<f64>,
}

pub fn continuum(args: &ContinuumArgs) -> Result<String, Failure> {
    let study = convergence_study(&args.sizes, args.lambda, args.levels)?;
    match args.out.format {
        Format::Json => json(&study),
        Format::Csv => csv_rows(study.rows().into_iter().map(|(n, k, e, p)| ContinuumRow {
            n,
            k,
            scaled_energy: e,
            richardson_order: p,
        })),
    }
}
