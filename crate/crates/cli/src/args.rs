use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "cpt-well", version, about = "Spectra, pseudometrics and metrics of the discrete square well")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues of H(λ, μ) with reality and gap diagnostics.
    Spectrum(PointArgs),
    /// Reality classification over a grid of couplings.
    Scan(ScanArgs),
    /// Basis of all symmetric solutions of HᵀX = XH.
    Pseudometrics(PointArgs),
    /// Metric Θ assembled from the spectral decomposition of a pseudometric.
    Metric(PointArgs),
    /// Spectral charge compared against the closed form.
    Charge(PointArgs),
    /// Residuals of the closed-form pseudometric, charge and metric.
    Verify(PointArgs),
    /// Convergence of scaled levels towards the continuum well.
    Continuum(ContinuumArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[arg(short = 'N', long = "size")]
    pub n: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lambda: f64,
    /// Defaults to λ.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Relative reality tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

impl PointArgs {
    pub fn mu(&self) -> f64 {
        self.mu.unwrap_or(self.lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Line {
    Symmetric,
    Antisymmetric,
}

impl Line {
    pub fn sign(self) -> f64 {
        match self {
            Line::Symmetric => 1.0,
            Line::Antisymmetric => -1.0,
        }
    }
}

fn parse_line(s: &str) -> Result<Line, String> {
    match s {
        "mu=lambda" => Ok(Line::Symmetric),
        "mu=-lambda" => Ok(Line::Antisymmetric),
        _ => Err(format!("expected mu=lambda or mu=-lambda, got {s:?}")),
    }
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(short = 'N', long = "size")]
    pub n: usize,
    /// λ grid as lo:hi:step.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_grid)]
    pub grid: Grid,
    /// Scan along a line; the default when no μ grid is given.
    #[arg(long, value_parser = parse_line, conflicts_with = "mu_grid")]
    pub line: Option<Line>,
    /// μ grid as lo:hi:step for a full two-parameter scan.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_grid)]
    pub mu_grid: Option<Grid>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ContinuumArgs {
    /// Comma-separated, strictly increasing lattice sizes.
    #[arg(short = 'N', long = "size", value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1)]
    pub levels: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Inclusive arithmetic grid whose points are the nearest doubles to the
/// exact decimal values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

/// Decimal literal as an integer mantissa and a count of fractional digits.
fn decimal(s: &str) -> Result<(i64, u32), String> {
    let bad = || format!("invalid decimal {s:?}");
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 12 {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let m: i64 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| bad())? };
    Ok((if neg { -m } else { m }, frac.len() as u32))
}

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err(format!("expected lo:hi:step, got {s:?}"));
    };
    let parsed = [decimal(lo)?, decimal(hi)?, decimal(step)?];
    let scale = parsed.iter().map(|p| p.1).max().unwrap_or(0);
    let [lo, hi, step] = parsed.map(|(m, d)| m * 10i64.pow(scale - d));
    if step <= 0 {
        return Err("grid step must be positive".into());
    }
    if hi < lo {
        return Err("grid upper bound is below its lower bound".into());
    }
    let count = (hi - lo) / step + 1;
    if count > 1_000_000 {
        return Err(format!("grid has {count} points; the limit is 1000000"));
    }
    let denom = 10f64.powi(scale as i32);
    Ok(Grid((0..count).map(|k| (lo + k * step) as f64 / denom).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_hits_exact_decimals() {
        let g = parse_grid("-1.2:1.2:0.05").unwrap().0;
        assert_eq!(g.len(), 49);
        assert_eq!(g[0], -1.2);
        assert_eq!(g[24], 0.0);
        assert_eq!(g[44], 1.0);
        assert_eq!(g[48], 1.2);
    }

    #[test]
    fn grid_stops_at_last_whole_step() {
        assert_eq!(parse_grid("0:1:0.3").unwrap().0, vec![0.0, 0.3, 0.6, 0.9]);
        assert_eq!(parse_grid("2:2:1").unwrap().0, vec![2.0]);
    }

    #[test]
    fn grid_rejects_malformed() {
        for s in ["1:2", "a:1:0.1", "0:1:0", "1:0:0.1", "1e-3:1:0.1", "-:1:1"] {
            assert!(parse_grid(s).is_err(), "{s}");
        }
    }

    #[test]
    fn line_spellings() {
        assert_eq!(parse_line("mu=-lambda").unwrap(), Line::Antisymmetric);
        assert!(parse_line("mu=lam").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
