//! Junction operator `T_τ`: constant `τ` on the negative half-line, the
//! periodic potential on the positive one.

use serde::Serialize;

use crate::bands::{BandSolver, BandStructure};
use crate::error::{Result, SpectralError};
use crate::monodromy::{check_parity, scaled_branch_from, MonodromyData};
use crate::potential::Potential;
use crate::roots::illinois;

const SCAN_POINTS: usize = 64;
const POLE_GAP: f64 = 1e-8;
const BRANCH_GAP: f64 = 1e-9;
const NORMALIZED_TOL: f64 = 1e-8;

/// A gap of `T_τ`; `lower` is `-∞` for index 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JunctionGap {
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundState {
    pub rho: f64,
    pub nu0: f64,
    pub count: u8,
    /// The eigenvalue below the a.c. spectrum when `count == 1`.
    pub energy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfSolidSpectrum {
    pub tau: f64,
    /// Closed bands; the last one is `[τ_J, ∞)`.
    pub ac_bands: Vec<(f64, f64)>,
    pub gaps: Vec<JunctionGap>,
    pub eigenvalues: Vec<(usize, f64)>,
    pub ground_state: Option<GroundState>,
    /// Energy up to which the band data of `h` was resolved.
    pub resolved_to: f64,
}

impl HalfSolidSpectrum {
    /// `τ_0`, the bottom of the a.c. spectrum.
    pub fn ac_bottom(&self) -> f64 {
        self.ac_bands[0].0
    }
}

/// Bands and gaps of `T_τ` from the band data of `h`.
pub fn ac_from_bands(bs: &BandStructure, tau: f64) -> HalfSolidSpectrum {
    let n_max = bs.n_gaps();
    let mut ac_bands = Vec::new();
    let mut gaps = Vec::new();
    let mut tail = None;
    for j in 0..=n_max {
        let lower = if j == 0 { f64::NEG_INFINITY } else { bs.edge_minus(j) };
        if tau <= lower {
            break;
        }
        let upper = bs.edge_plus(j);
        let cut = upper.min(tau);
        if j > 0 && cut > lower {
            gaps.push(JunctionGap { n: j, lower, upper: cut });
        }
        if tau <= bs.edge_minus(j + 1) {
            tail = Some(cut);
            break;
        }
        ac_bands.push(bs.band(j));
    }
    let tail_start = tail.unwrap_or(tau);
    ac_bands.push((tail_start, f64::INFINITY));
    gaps.insert(0, JunctionGap { n: 0, lower: f64::NEG_INFINITY, upper: ac_bands[0].0 });
    HalfSolidSpectrum { tau, ac_bands, gaps, eigenvalues: Vec::new(), ground_state: None, resolved_to: bs.top }
}

/// `σ_ac(T_τ)` using band data up to gap `n`.
pub fn ac_spectrum(p: &Potential, tau: f64, n: usize) -> Result<HalfSolidSpectrum> {
    if !tau.is_finite() {
        return Err(SpectralError::NonFiniteInput(format!("tau = {tau}")));
    }
    let bs = BandSolver::new(p)?.structure(n, false, None)?;
    Ok(ac_from_bands(&bs, tau))
}

/// `m_+(λ) − √(τ − λ)` from precomputed monodromy data.
fn wronskian_from(md: &MonodromyData, tau: f64, gap: usize) -> Result<f64> {
    if md.lambda >= tau {
        return Err(SpectralError::InvalidArgument(format!("lambda = {} must lie below tau = {tau}", md.lambda)));
    }
    Ok(md.weyl_plus(gap)? - (tau - md.lambda).sqrt())
}

/// Wronskian of the decaying solutions of `T_τ` in gap `n`.
pub fn wronskian(p: &Potential, tau: f64, lambda: f64, gap_index: usize) -> Result<f64> {
    let md = BandSolver::new(p)?.at(lambda)?;
    check_parity(&md, gap_index)?;
    wronskian_from(&md, tau, gap_index)
}

/// Evaluates `w` in one junction gap and finds its roots.
pub struct JunctionScanner<'a> {
    solver: &'a BandSolver,
    tau: f64,
}

impl<'a> JunctionScanner<'a> {
    pub fn new(solver: &'a BandSolver, tau: f64) -> Self {
        JunctionScanner { solver, tau }
    }

    pub fn w(&self, lambda: f64, gap: usize) -> Result<f64> {
        let md = self.solver.at(lambda)?;
        match wronskian_from(&md, self.tau, gap) {
            // computed edges may sit a rounding error inside a band
            Err(SpectralError::OutsideGap { .. }) if md.gap_indicator() > -1e-9 * md.unit() * md.unit() => {
                Ok(md.scaled_a() / md.phi_1 - (self.tau - lambda).sqrt())
            }
            r => r,
        }
    }

    fn roots_on(&self, a: f64, b: f64, gap: usize, out: &mut Vec<f64>) -> Result<()> {
        if !(b > a) {
            return Ok(());
        }
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..=SCAN_POINTS {
            let x = a + (b - a) * i as f64 / SCAN_POINTS as f64;
            let fx = self.w(x, gap)?;
            if fx == 0.0 {
                out.push(x);
                prev = None;
                continue;
            }
            if let Some((xp, fp)) = prev {
                if fp.signum() != fx.signum() {
                    let tol = 1e-12 * x.abs().max(1.0);
                    out.push(illinois(|l| self.w(l, gap), (xp, fp), (x, fx), tol)?);
                }
            }
            prev = Some((x, fx));
        }
        Ok(())
    }

    /// The eigenvalue of `T_τ` in `gap`, if any; `mu` splits the scan.
    pub fn gap_root(&self, gap: &JunctionGap, mu: Option<f64>, floor: f64) -> Result<Option<f64>> {
        let tau = self.tau;
        let lo = if gap.lower.is_finite() { gap.lower } else { floor.min(gap.upper - 1.0) };
        let mut hi = gap.upper;
        if hi >= tau {
            hi = tau - BRANCH_GAP * tau.abs().max(1.0);
        }
        let mut roots = Vec::new();
        match mu.filter(|m| *m > lo && *m < hi) {
            Some(m) => {
                let d = POLE_GAP * (gap.upper - gap.lower);
                self.roots_on(lo, m - d, gap.n, &mut roots)?;
                self.roots_on(m + d, hi, gap.n, &mut roots)?;
            }
            None => self.roots_on(lo, hi, gap.n, &mut roots)?,
        }
        roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-10 * a.abs().max(1.0));
        match roots.len() {
            0 => Ok(None),
            1 => Ok(Some(roots[0])),
            _ => Err(SpectralError::MultipleRoots { gap: gap.n }),
        }
    }
}

/// Eigenvalues of `T_τ` in gaps `0..=n`, at most one per gap.
pub fn gap_eigenvalues(p: &Potential, tau: f64, n: usize) -> Result<Vec<(usize, f64)>> {
    Ok(half_solid_spectrum(p, tau, n)?.eigenvalues)
}

/// Bands, gaps and eigenvalues of `T_τ` up to gap `n`.
pub fn half_solid_spectrum(p: &Potential, tau: f64, n: usize) -> Result<HalfSolidSpectrum> {
    let solver = BandSolver::new(p)?;
    let bs = solver.structure(n, false, None)?;
    spectrum_with(&solver, &bs, tau)
}

pub(crate) fn spectrum_with(solver: &BandSolver, bs: &BandStructure, tau: f64) -> Result<HalfSolidSpectrum> {
    if !tau.is_finite() {
        return Err(SpectralError::NonFiniteInput(format!("tau = {tau}")));
    }
    let mut hs = ac_from_bands(bs, tau);
    let scanner = JunctionScanner::new(solver, tau);
    let floor = solver.shooter().bounds().0.min(tau) - 1.0;
    for g in &hs.gaps {
        let mu = if g.n == 0 { None } else { Some(bs.gap(g.n).mu) };
        if let Some(e) = scanner.gap_root(g, mu, floor)? {
            hs.eigenvalues.push((g.n, e));
        }
    }
    if bs.lambda0_plus.abs() <= NORMALIZED_TOL {
        hs.ground_state = Some(ground_state_with(solver, bs, tau)?);
    }
    Ok(hs)
}

/// `c(μ_n) = 2b(μ_n)/φ_λ(1, μ_n)` for a bound state in gap `n`.
pub fn asymptotic_coefficient(p: &Potential, gap_index: usize) -> Result<f64> {
    let solver = BandSolver::new(p)?;
    let bs = solver.structure(gap_index.max(1), false, None)?;
    coefficient_with(&solver, &bs, gap_index)
}

pub(crate) fn coefficient_with(solver: &BandSolver, bs: &BandStructure, n: usize) -> Result<f64> {
    if n == 0 || n > bs.n_gaps() || bs.gap(n).sign != 1 {
        return Err(SpectralError::NotBoundState { gap: n });
    }
    let md = solver.at(bs.gap(n).mu)?;
    // b and φ_λ carry the same scale factor
    Ok(2.0 * scaled_branch_from(&md, n, 1)? / md.d_lambda[2])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub constant: f64,
    pub c_direct: f64,
    /// `(τ, μ_n(τ))` for every point used in the fit.
    pub points: Vec<(f64, f64)>,
}

/// Least-squares fit of `log|μ_n(τ) − μ_n|` against `log τ`.
pub fn verify_sqrt_rate(p: &Potential, gap_index: usize, tau_grid: &[f64]) -> Result<RateFit> {
    let solver = BandSolver::new(p)?;
    let bs = solver.structure(gap_index.max(1), false, None)?;
    let c_direct = coefficient_with(&solver, &bs, gap_index)?;
    let gap = bs.gap(gap_index);
    let floor = solver.shooter().bounds().0 - 1.0;
    let mut points = Vec::new();
    for &tau in tau_grid {
        let hs = ac_from_bands(&bs, tau);
        let Some(jg) = hs.gaps.iter().find(|g| g.n == gap_index) else { continue };
        let scanner = JunctionScanner::new(&solver, tau);
        if let Some(e) = scanner.gap_root(jg, Some(gap.mu), floor)? {
            if (e - gap.mu).abs() > 1e-11 * gap.mu.abs().max(1.0) {
                points.push((tau, e));
            }
        }
    }
    if points.len() < 4 {
        return Err(SpectralError::InsufficientPoints { found: points.len() });
    }
    let xs: Vec<f64> = points.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, e)| (e - gap.mu).abs().ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let constant = (my - slope * mx).exp();
    Ok(RateFit { slope, constant, c_direct, points })
}

/// Count of eigenvalues of `T_τ` below `λ_0^+ = 0`, with `ρ = m_+(0)`.
pub fn ground_state_count(p: &Potential, tau: f64) -> Result<GroundState> {
    let solver = BandSolver::new(p)?;
    let bs = solver.structure(1, false, None)?;
    ground_state_with(&solver, &bs, tau)
}

pub(crate) fn ground_state_with(solver: &BandSolver, bs: &BandStructure, tau: f64) -> Result<GroundState> {
    if bs.lambda0_plus.abs() > NORMALIZED_TOL {
        return Err(SpectralError::NotNormalized { edge: bs.lambda0_plus });
    }
    let md = solver.at(0.0)?;
    let rho = md.scaled_a() / md.phi_1;
    let nu0 = solver.neumann(1, None)?[0];
    let count = u8::from(rho > 0.0 && nu0 < tau && tau < rho * rho);
    let mut energy = None;
    if count == 1 {
        let top = tau.min(0.0);
        let gap = JunctionGap { n: 0, lower: f64::NEG_INFINITY, upper: top };
        let floor = solver.shooter().bounds().0.min(tau) - 1.0;
        energy = JunctionScanner::new(solver, tau).gap_root(&gap, None, floor)?;
    }
    Ok(GroundState { rho, nu0, count, energy })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_junction_bands() {
        let hs = ac_spectrum(&Potential::zero(), 4.0, 3).unwrap();
        assert_eq!(hs.ac_bands.len(), 1);
        assert!(hs.ac_bottom().abs() < 1e-12);
        let hs = ac_spectrum(&Potential::zero(), -4.0, 3).unwrap();
        assert_eq!(hs.ac_bands, vec![(-4.0, f64::INFINITY)]);
        assert!(gap_eigenvalues(&Potential::zero(), 4.0, 3).unwrap().is_empty());
    }

    #[test]
    fn free_wronskian_is_negative() {
        let p = Potential::zero();
        for l in [-10.0, -1.0, -0.01] {
            let w = wronskian(&p, 2.0, l, 0).unwrap();
            let expect = -(-l).sqrt() - (2.0 - l).sqrt();
            assert!((w - expect).abs() < 1e-9);
        }
    }
}
