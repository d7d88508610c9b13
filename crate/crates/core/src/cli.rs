//! Command-line front end: `bands`, `halfsolid`, `design`, `cluster` and
//! `discriminant-sweep`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 numerical
//! failure, 4 design did not converge, 5 cluster validation failed.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bands::{BandSolver, BandStructure};
use crate::cluster::{assemble, count_in_interval, normalize, ClusterSpectrum};
use crate::designer::{self, DesignTarget};
use crate::error::SpectralError;
use crate::halfsolid::{spectrum_with, verify_sqrt_rate, JunctionScanner};
use crate::potential::Potential;

pub const EXIT_IO: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_NO_CONVERGENCE: i32 = 4;
pub const EXIT_VALIDATION: i32 = 5;

const SWEEP_POINTS: usize = 401;

#[derive(Parser, Debug)]
#[command(name = "hill-octant", version, about = "Band structure, gap states and cluster spectra of periodic Schrödinger operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Band edges, Dirichlet/Neumann data and a discriminant sweep.
    Bands(Flags),
    /// Junction eigenvalues over a τ-grid and the square-root rate fit.
    Halfsolid(Flags),
    /// Equal-gap design (`--gamma`) or the model potential (`--kappa`).
    Design(Flags),
    /// Cluster spectrum of the separable half-space operator.
    Cluster(Flags),
    /// `𝔉(λ)` on a grid.
    DiscriminantSweep(Flags),
}

/// Flags shared by every subcommand. A `--config` file supplies defaults;
/// flags given on the command line win.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Flags {
    /// JSON file with any of the flags below (snake_case keys).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub potential: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// `lo:hi:count`, log-spaced; append `:lin` for linear spacing.
    #[arg(long = "tau-grid")]
    pub tau_grid: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Fourier modes available to the designer.
    #[arg(long)]
    pub basis: Option<usize>,
    /// Gap used by the rate fit.
    #[arg(long)]
    pub gap: Option<usize>,
    /// `lo:hi:count`, linear, for the discriminant sweep.
    #[arg(long = "lambda-grid")]
    pub lambda_grid: Option<String>,
}

/// Flags merged with the config file and checked.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub potential: Option<PathBuf>,
    pub out: PathBuf,
    pub n: Option<usize>,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub tau: Vec<f64>,
    pub dim: usize,
    pub tol: f64,
    pub jobs: Option<usize>,
    pub basis: Option<usize>,
    pub gap: usize,
    pub lambda_grid: Option<Vec<f64>>,
}

#[derive(Debug)]
enum Failure {
    Io(String),
    Spectral(SpectralError),
    Validation(String),
}

impl From<SpectralError> for Failure {
    fn from(e: SpectralError) -> Self {
        Failure::Spectral(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Spectral(SpectralError::InvalidArgument(msg.into()))
}

pub fn exit_code(e: &SpectralError) -> i32 {
    match e {
        SpectralError::InvalidArgument(_) | SpectralError::InvalidSpec(_) | SpectralError::NonFiniteInput(_) => EXIT_INPUT,
        SpectralError::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
        SpectralError::SeparationFail { .. } => EXIT_VALIDATION,
        _ => EXIT_NUMERICAL,
    }
}

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// `lo:hi:count[:lin|:log]`.
pub fn parse_grid(text: &str, log_default: bool) -> std::result::Result<Vec<f64>, SpectralError> {
    let bad = |m: &str| SpectralError::InvalidArgument(format!("grid '{text}': {m}"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() < 3 || parts.len() > 4 {
        return Err(bad("expected lo:hi:count"));
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad("lo is not a number"))?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad("hi is not a number"))?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad("count is not a positive integer"))?;
    let log = match parts.get(3).map(|s| s.trim()) {
        None => log_default,
        Some("log") => true,
        Some("lin") => false,
        Some(_) => return Err(bad("spacing must be lin or log")),
    };
    if !(lo.is_finite() && hi.is_finite()) || count == 0 {
        return Err(bad("bounds must be finite and count positive"));
    }
    if count > 1 && !(hi > lo) {
        return Err(bad("grid must be strictly increasing"));
    }
    if log && lo <= 0.0 {
        return Err(bad("log spacing needs lo > 0"));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let t = |i: usize| i as f64 / (count - 1) as f64;
    Ok((0..count)
        .map(|i| if log { (lo.ln() + t(i) * (hi.ln() - lo.ln())).exp() } else { lo + t(i) * (hi - lo) })
        .collect())
}

impl RunConfig {
    pub fn from_flags(flags: &Flags) -> std::result::Result<Self, SpectralError> {
        let file = match &flags.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| SpectralError::InvalidSpec(format!("{}: {e}", path.display())))?;
                serde_json::from_str::<Flags>(&text).map_err(|e| SpectralError::InvalidSpec(format!("{}: {e}", path.display())))?
            }
            None => Flags::default(),
        };
        let f = Flags {
            config: None,
            potential: flags.potential.clone().or(file.potential),
            out: flags.out.clone().or(file.out),
            n: flags.n.or(file.n),
            kappa: flags.kappa.or(file.kappa),
            gamma: flags.gamma.or(file.gamma),
            tau: flags.tau.or(file.tau),
            tau_grid: flags.tau_grid.clone().or(file.tau_grid),
            dim: flags.dim.or(file.dim),
            tol: flags.tol.or(file.tol),
            jobs: flags.jobs.or(file.jobs),
            basis: flags.basis.or(file.basis),
            gap: flags.gap.or(file.gap),
            lambda_grid: flags.lambda_grid.clone().or(file.lambda_grid),
        };
        let bad = |m: String| Err(SpectralError::InvalidArgument(m));
        if f.n == Some(0) {
            return bad("N must be at least 1".into());
        }
        if let Some(k) = f.kappa {
            if !(k > 0.0 && k <= 0.1) {
                return bad(format!("kappa = {k} outside (0, 0.1]"));
            }
        }
        if let Some(g) = f.gamma {
            if !(g >= 0.0 && g.is_finite()) {
                return bad(format!("gamma = {g} must be finite and non-negative"));
            }
        }
        let dim = f.dim.unwrap_or(2);
        if !(2..=3).contains(&dim) {
            return bad(format!("dim = {dim}; only 2 and 3 are supported"));
        }
        let tol = f.tol.unwrap_or(1e-4);
        if !(tol > 0.0 && tol < 1.0) {
            return bad(format!("tol = {tol} outside (0, 1)"));
        }
        if f.jobs == Some(0) {
            return bad("jobs must be at least 1".into());
        }
        let mut tau = Vec::new();
        if let Some(t) = f.tau {
            if !t.is_finite() {
                return bad(format!("tau = {t} is not finite"));
            }
            tau.push(t);
        }
        if let Some(g) = &f.tau_grid {
            if !tau.is_empty() {
                return bad("give --tau or --tau-grid, not both".into());
            }
            tau = parse_grid(g, true)?;
        }
        let lambda_grid = f.lambda_grid.as_deref().map(|g| parse_grid(g, false)).transpose()?;
        Ok(RunConfig {
            potential: f.potential,
            out: f.out.unwrap_or_else(|| PathBuf::from(".")),
            n: f.n,
            kappa: f.kappa,
            gamma: f.gamma,
            tau,
            dim,
            tol,
            jobs: f.jobs,
            basis: f.basis,
            gap: f.gap.unwrap_or(1),
            lambda_grid,
        })
    }

    fn load_potential(&self) -> Outcome<Potential> {
        let path = self.potential.as_ref().ok_or_else(|| invalid("--potential is required"))?;
        Ok(Potential::load(path)?)
    }

    fn out_file(&self, name: &str) -> Outcome<PathBuf> {
        fs::create_dir_all(&self.out)?;
        Ok(self.out.join(name))
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Outcome<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

struct SweepRow {
    lambda: f64,
    discriminant: f64,
    a: f64,
    phi: f64,
    scale_exp: i32,
    scaled: (f64, f64, f64),
}

fn sweep(p: &Potential, grid: &[f64]) -> Outcome<Vec<SweepRow>> {
    let solver = BandSolver::new(p)?;
    let rows = grid
        .par_iter()
        .map(|&l| {
            solver.at(l).map(|md| SweepRow {
                lambda: l,
                discriminant: md.discriminant(),
                a: md.a_value(),
                phi: md.phi_1 * 2f64.powi(md.scale_exp),
                scale_exp: md.scale_exp,
                scaled: (md.scaled_discriminant(), md.scaled_a(), md.phi_1),
            })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    Ok(rows)
}

fn default_sweep_grid(p: &Potential, bs: &BandStructure) -> Vec<f64> {
    let lo = p.bounds().0.min(bs.lambda0_plus) - 1.0;
    let hi = bs.top + 0.25 * (bs.top - lo).max(1.0);
    (0..SWEEP_POINTS).map(|i| lo + (hi - lo) * i as f64 / (SWEEP_POINTS - 1) as f64).collect()
}

/// Deep wells overflow the unscaled columns; the `scaled_*` columns times
/// `2^scale_exp` give the same values.
fn write_sweep(path: &Path, rows: &[SweepRow]) -> Outcome<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["lambda", "discriminant", "a", "phi_1", "scale_exp", "scaled_discriminant", "scaled_a", "scaled_phi_1"])?;
    for r in rows {
        w.write_record([
            num(r.lambda),
            num(r.discriminant),
            num(r.a),
            num(r.phi),
            r.scale_exp.to_string(),
            num(r.scaled.0),
            num(r.scaled.1),
            num(r.scaled.2),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_bands(cfg: &RunConfig) -> Outcome<()> {
    let p = cfg.load_potential()?;
    let n = cfg.n.unwrap_or(5);
    let bs = BandSolver::new(&p)?.structure(n, true, None)?;
    let mut w = csv::Writer::from_path(cfg.out_file("bands.csv")?)?;
    w.write_record(["n", "lambda_minus", "lambda_plus", "mu", "nu", "sign", "xi1", "xi2"])?;
    for g in &bs.gaps {
        let sign = if g.sign == 0 { String::new() } else { g.sign.to_string() };
        w.write_record([g.n.to_string(), num(g.lower), num(g.upper), num(g.mu), num(bs.neumann[g.n]), sign, num(g.xi.0), num(g.xi.1)])?;
    }
    w.flush()?;
    let grid = cfg.lambda_grid.clone().unwrap_or_else(|| default_sweep_grid(&p, &bs));
    write_sweep(&cfg.out_file("discriminant.csv")?, &sweep(&p, &grid)?)
}

fn cmd_sweep(cfg: &RunConfig) -> Outcome<()> {
    let p = cfg.load_potential()?;
    let grid = match &cfg.lambda_grid {
        Some(g) => g.clone(),
        None => default_sweep_grid(&p, &BandSolver::new(&p)?.structure(cfg.n.unwrap_or(5), false, None)?),
    };
    write_sweep(&cfg.out_file("discriminant.csv")?, &sweep(&p, &grid)?)
}

fn cmd_halfsolid(cfg: &RunConfig) -> Outcome<()> {
    let p = cfg.load_potential()?;
    if cfg.tau.is_empty() {
        return Err(invalid("--tau or --tau-grid is required"));
    }
    let n = cfg.n.unwrap_or(3).max(cfg.gap);
    let solver = BandSolver::new(&p)?;
    let bs = solver.structure(n, false, None)?;
    let rows = cfg
        .tau
        .par_iter()
        .map(|&tau| -> crate::Result<Vec<(f64, usize, f64, f64)>> {
            let hs = spectrum_with(&solver, &bs, tau)?;
            let scanner = JunctionScanner::new(&solver, tau);
            hs.eigenvalues.iter().map(|&(j, e)| Ok((tau, j, e, scanner.w(e, j)?))).collect()
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let mut w = csv::Writer::from_path(cfg.out_file("halfsolid.csv")?)?;
    w.write_record(["tau", "j", "mu_j_tau", "w_residual"])?;
    for (tau, j, e, r) in rows.iter().flatten() {
        w.write_record([num(*tau), j.to_string(), num(*e), num(*r)])?;
    }
    w.flush()?;
    let rate_path = cfg.out_file("rate.json")?;
    if cfg.gap > bs.n_gaps() || bs.gap(cfg.gap).sign != 1 {
        if cfg.tau.len() < 4 {
            return Err(SpectralError::InsufficientPoints { found: cfg.tau.len() }.into());
        }
        let note = format!("gap {} carries no bound state", cfg.gap);
        return write_json(&rate_path, &json!({ "gap": cfg.gap, "slope": null, "constant": null, "c_direct": null, "note": note }));
    }
    match verify_sqrt_rate(&p, cfg.gap, &cfg.tau) {
        Ok(fit) => write_json(&rate_path, &json!({ "gap": cfg.gap, "slope": fit.slope, "constant": fit.constant, "c_direct": fit.c_direct, "points": fit.points })),
        Err(e) => {
            write_json(&rate_path, &json!({ "gap": cfg.gap, "slope": null, "constant": null, "c_direct": null, "error": e.to_string() }))?;
            Err(e.into())
        }
    }
}

fn cmd_design(cfg: &RunConfig) -> Outcome<()> {
    let n = cfg.n.unwrap_or(1);
    let report_path = cfg.out_file("design_report.json")?;
    let failed = |e: SpectralError| -> Outcome<()> {
        let mut report = json!({ "status": "failed", "error": e.to_string() });
        if let SpectralError::NoConvergence { iterations, best_residual } = &e {
            report["iterations"] = json!(iterations);
            report["best_residual"] = json!(best_residual);
        }
        write_json(&report_path, &report)?;
        Err(e.into())
    };
    match (cfg.kappa, cfg.gamma) {
        (Some(kappa), None) => {
            let basis = cfg.basis.unwrap_or(designer::DEFAULT_BASIS.max(n + 1));
            if basis < n + 1 {
                return Err(invalid(format!("basis size {basis} is smaller than N + 1 = {}", n + 1)));
            }
            let placement = designer::PLACEMENT_BASIS.max(basis);
            match designer::construct_with_basis(n, kappa, cfg.dim, basis, placement) {
                Ok(m) => {
                    write_json(&cfg.out_file("potential.json")?, &m.potential.to_spec())?;
                    write_json(
                        &report_path,
                        &json!({ "status": "ok", "gamma": m.gamma, "kappa": m.kappa, "dim": m.dim, "N": m.n, "report": m.report, "bands": m.bands }),
                    )
                }
                Err(e) => failed(e),
            }
        }
        (None, Some(gamma)) => {
            let mut target = DesignTarget::equal(n, gamma, 0.5, cfg.basis.unwrap_or(designer::DEFAULT_BASIS.max(n)));
            target.state_fractions.clear();
            target.state_signs.clear();
            target.tolerance = cfg.tol;
            target.validate()?;
            match designer::design_gap_lengths(&target) {
                Ok(d) => {
                    write_json(&cfg.out_file("potential.json")?, &d.potential.to_spec())?;
                    write_json(&report_path, &json!({ "status": "ok", "report": d.report, "bands": d.bands }))
                }
                Err(e) => failed(e),
            }
        }
        (Some(_), Some(_)) => Err(invalid("give --kappa or --gamma, not both")),
        (None, None) => Err(invalid("--kappa or --gamma is required")),
    }
}

fn cmd_cluster(cfg: &RunConfig) -> Outcome<()> {
    let p = cfg.load_potential()?;
    let n = cfg.n.ok_or_else(|| invalid("--N is required"))?;
    let kappa = cfg.kappa.ok_or_else(|| invalid("--kappa is required"))?;
    let gamma = cfg.gamma.unwrap_or(4.0 * PI * PI * ((n + 1) as f64).powi(2) / kappa);
    let bs = BandSolver::new(&p)?.structure(n + 1, false, None)?;
    let bs = bs.shifted(-bs.lambda0_plus);
    let factor = normalize(&bs, gamma)?;
    let cs = assemble(&vec![factor; cfg.dim], kappa, n)?;
    write_cluster(cfg, &cs, gamma)?;
    cs.require_separation()?;
    if !cs.all_checks_pass() {
        let failed: Vec<&str> = cs.checks.iter().filter(|c| !c.pass).map(|c| c.label.as_str()).collect();
        return Err(Failure::Validation(format!("{} check(s) failed: {}", failed.len(), failed.join("; "))));
    }
    Ok(())
}

fn write_cluster(cfg: &RunConfig, cs: &ClusterSpectrum, gamma: f64) -> Outcome<()> {
    let counts: Vec<_> = cs
        .separating_intervals
        .iter()
        .map(|s| {
            let c = count_in_interval(cs, s.interval);
            json!({ "n": s.n, "interval": s.interval, "count": c.count, "distance_to_ac": c.distance_to_ac })
        })
        .collect();
    write_json(
        &cfg.out_file("cluster_report.json")?,
        &json!({ "gamma": gamma, "dim": cs.dim(), "all_checks_pass": cs.all_checks_pass(), "counts": counts, "spectrum": cs }),
    )?;
    let mut w = csv::Writer::from_path(cfg.out_file("cluster_spectrum.csv")?)?;
    w.write_record(["kind", "lower", "upper", "indices"])?;
    for (a, b) in &cs.ac {
        w.write_record(["ac".to_string(), num(*a), num(*b), String::new()])?;
    }
    for (idx, e) in &cs.eigenvalues {
        let idx: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
        w.write_record(["eigenvalue".to_string(), num(*e), num(*e), idx.join(" ")])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses `args` (program name first), runs the subcommand, and returns the
/// exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (flags, f): (&Flags, fn(&RunConfig) -> Outcome<()>) = match &cli.command {
        Command::Bands(fl) => (fl, cmd_bands),
        Command::Halfsolid(fl) => (fl, cmd_halfsolid),
        Command::Design(fl) => (fl, cmd_design),
        Command::Cluster(fl) => (fl, cmd_cluster),
        Command::DiscriminantSweep(fl) => (fl, cmd_sweep),
    };
    let cfg = match RunConfig::from_flags(flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    if let Some(j) = cfg.jobs {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    match f(&cfg) {
        Ok(()) => 0,
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            EXIT_IO
        }
        Err(Failure::Spectral(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            EXIT_VALIDATION
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = parse_grid("1e2:1e6:5", true).unwrap();
        for (a, b) in g.iter().zip([1e2, 1e3, 1e4, 1e5, 1e6]) {
            assert!((a / b - 1.0).abs() < 1e-12);
        }
        assert_eq!(parse_grid("0:1:3:lin", true).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("-1:1:3", false).unwrap(), vec![-1.0, 0.0, 1.0]);
        for bad in ["1:1:3", "2:1:3", "0:1:3", "1:2", "1:2:x", "1:2:0", "1:2:3:cubic"] {
            assert!(parse_grid(bad, true).is_err(), "{bad}");
        }
    }

    #[test]
    fn config_validation() {
        let ok = Flags { n: Some(3), kappa: Some(0.05), ..Flags::default() };
        let c = RunConfig::from_flags(&ok).unwrap();
        assert_eq!((c.dim, c.gap, c.out.clone()), (2, 1, PathBuf::from(".")));
        for bad in [
            Flags { n: Some(0), ..Flags::default() },
            Flags { kappa: Some(0.5), ..Flags::default() },
            Flags { dim: Some(4), ..Flags::default() },
            Flags { tau: Some(1.0), tau_grid: Some("1:2:3".into()), ..Flags::default() },
        ] {
            assert_eq!(exit_code(&RunConfig::from_flags(&bad).unwrap_err()), EXIT_INPUT);
        }
    }
}
