//! Inverse design: potentials with prescribed gap lengths, gap states, and
//! positivity near the origin.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bands::{BandSolver, BandStructure};
use crate::error::{Result, SpectralError};
use crate::galerkin::Model;
use crate::halfsolid::ground_state_with;
use crate::potential::Potential;

const MAX_ITER: usize = 200;
const FD_STEP: f64 = 1e-6;
const MAX_CONDITION: f64 = 1e10;
const ANGLE_STAGES: usize = 16;
const POLISH: usize = 8;
const RESTARTS: usize = 8;
const SCAN: usize = 128;

/// What the designer should achieve in gaps `1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignTarget {
    pub n: usize,
    pub gap_lengths: Vec<f64>,
    /// Position of `μ_n` as a fraction of the gap, from the lower edge.
    pub state_fractions: Vec<f64>,
    pub state_signs: Vec<i8>,
    pub basis_size: usize,
    pub tolerance: f64,
}

impl DesignTarget {
    /// `n` gaps of length `gamma`, bound states at fraction `f`.
    pub fn equal(n: usize, gamma: f64, f: f64, basis_size: usize) -> Self {
        DesignTarget {
            n,
            gap_lengths: vec![gamma; n],
            state_fractions: vec![f; n],
            state_signs: vec![1; n],
            basis_size,
            tolerance: 1e-4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SpectralError::InvalidArgument(m));
        if self.n == 0 {
            return bad("N must be at least 1".into());
        }
        if self.gap_lengths.len() != self.n {
            return bad(format!("{} gap lengths for N = {}", self.gap_lengths.len(), self.n));
        }
        if self.gap_lengths.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return bad("gap lengths must be finite and non-negative".into());
        }
        if self.basis_size < self.n {
            return bad(format!("basis size {} is smaller than N = {}", self.basis_size, self.n));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return bad(format!("tolerance {} outside (0, 1)", self.tolerance));
        }
        if !self.state_fractions.is_empty() {
            if self.state_fractions.len() != self.n || self.state_signs.len() != self.n {
                return bad("one state fraction and sign per gap required".into());
            }
            if self.state_fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
                return bad("state fractions must lie in (0, 1)".into());
            }
            if self.state_signs.iter().any(|s| s.abs() != 1) {
                return bad("state signs must be +1 or -1".into());
            }
        }
        Ok(())
    }

    fn scale(&self) -> f64 {
        self.gap_lengths.iter().fold(0.0f64, |m, g| m.max(*g))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub target: DesignTarget,
    pub achieved_lengths: Vec<f64>,
    pub achieved_fractions: Vec<f64>,
    pub achieved_signs: Vec<i8>,
    /// Largest relative deviation over all targeted quantities.
    pub residual: f64,
    pub iterations: usize,
    pub stages: usize,
    pub restarts: usize,
}

#[derive(Debug, Clone)]
pub struct Design {
    pub potential: Potential,
    pub bands: BandStructure,
    pub report: DesignReport,
}

fn seed() -> u64 {
    std::env::var("HILL_OCTANT_SEED").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(0)
}

/// Cosine and sine coefficient vectors of length `m` (shift folded in).
pub fn coefficient_vectors(p: &Potential, m: usize) -> (Vec<f64>, Vec<f64>) {
    let q = p.bake_shift();
    let mut c = vec![0.0; m];
    let mut s = vec![0.0; m];
    for t in q.fourier_terms() {
        let i = t.k as usize - 1;
        if i < m {
            c[i] = t.cos;
            s[i] = t.sin;
        }
    }
    (c, s)
}

struct LmOutcome {
    y: Vec<f64>,
    r: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn fd_jacobian<F>(f: &F, y: &[f64], m: usize) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let cols: Vec<Vec<f64>> = (0..y.len())
        .into_par_iter()
        .map(|j| {
            let mut yp = y.to_vec();
            let mut ym = y.to_vec();
            yp[j] += FD_STEP;
            ym[j] -= FD_STEP;
            let (rp, rm) = (f(&yp)?, f(&ym)?);
            Ok(rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * FD_STEP)).collect())
        })
        .collect::<Result<_>>()?;
    let jac = DMatrix::from_fn(m, y.len(), |i, j| cols[j][i]);
    let sv = jac.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if smin <= 0.0 || smax / smin > MAX_CONDITION {
        return Err(SpectralError::IllConditioned { condition: if smin > 0.0 { smax / smin } else { f64::INFINITY } });
    }
    Ok(jac)
}

/// Levenberg–Marquardt with minimum-norm steps, for `len(r) ≤ len(y)`.
///
/// The Jacobian is differenced once and then kept
/// current with Broyden updates; it is differenced again when progress stalls.
fn levenberg_marquardt<F, A>(f: &F, y0: Vec<f64>, done: A, max_iter: usize) -> Result<LmOutcome>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
    A: Fn(&[f64]) -> bool,
{
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut y = y0;
    let mut r = f(&y)?;
    let m = r.len();
    let mut jac = fd_jacobian(f, &y, m)?;
    let mut fresh = true;
    let mut damping = 1e-3;
    let mut it = 0;
    while it < max_iter {
        if done(&r) {
            return Ok(LmOutcome { y, r, iterations: it, converged: true });
        }
        it += 1;
        let rv = DVector::from_column_slice(&r);
        let r0 = norm(&r);
        let mut improved = false;
        for _ in 0..12 {
            let jjt = &jac * jac.transpose();
            let diag_max = (0..m).map(|i| jjt[(i, i)]).fold(0.0f64, f64::max);
            let a = &jjt + DMatrix::identity(m, m) * (damping * diag_max);
            let Some(ch) = a.cholesky() else {
                damping *= 4.0;
                continue;
            };
            let step = -(jac.transpose() * ch.solve(&rv));
            let trial: Vec<f64> = y.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let Ok(rt) = f(&trial) else {
                damping *= 4.0;
                continue;
            };
            let dr = DVector::from_column_slice(&rt) - &rv;
            let ss = step.norm_squared();
            if ss > 0.0 {
                let miss = dr - &jac * &step;
                jac += miss * step.transpose() / ss;
            }
            let rn = norm(&rt);
            if rn < r0 {
                y = trial;
                r = rt;
                damping = (damping / 3.0).max(1e-12);
                improved = true;
                if rn > 0.5 * r0 && !fresh {
                    jac = fd_jacobian(f, &y, m)?;
                    fresh = true;
                } else {
                    fresh = false;
                }
                break;
            }
            damping *= 4.0;
            if !fresh {
                break;
            }
        }
        if !improved {
            if fresh {
                break;
            }
            jac = fd_jacobian(f, &y, m)?;
            fresh = true;
            damping = 1e-3;
        }
    }
    let converged = done(&r);
    Ok(LmOutcome { y, r, iterations: it, converged })
}

/// Gap lengths `|μ_k − ν_k|` of an even potential, exact for cosine series.
fn even_lengths(solver: &BandSolver, n: usize, hint: Option<&(Vec<f64>, Vec<f64>)>) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mu: Vec<f64> = solver.dirichlet(n, hint.map(|h| h.0.as_slice()))?.into_iter().map(|r| r.0).collect();
    let nu = solver.neumann(n + 1, hint.map(|h| h.1.as_slice()))?;
    let len = (0..n).map(|k| (mu[k] - nu[k + 1]).abs()).collect();
    Ok((len, mu, nu))
}

/// Single deep well `A cos(2πx)` whose mean gap over `1..=n` is `mean`.
///
/// Its low levels are nearly harmonic with spacing `2π√(2A)`, so the gaps
/// come out almost equal when they are large.
fn harmonic_well(n: usize, mean: f64) -> Result<f64> {
    let mut amp = 0.5 * (mean / (2.0 * PI)).powi(2);
    for _ in 0..8 {
        let p = Potential::from_coefficients(&[amp], &[])?;
        let (len, _, _) = even_lengths(&BandSolver::new(&p)?, n, None)?;
        let g = len.iter().sum::<f64>() / n as f64;
        let ratio = mean / g;
        amp *= ratio * ratio;
        if (ratio - 1.0).abs() < 1e-6 {
            break;
        }
    }
    Ok(amp)
}

/// Levenberg–Marquardt on the gap-length residual in units of `gt`.
fn polish_lengths(c: &[f64], goal: &[f64], gt: f64, tol: f64) -> Result<(Vec<f64>, LmOutcome)> {
    let n = goal.len();
    let base = Potential::from_coefficients(c, &[])?;
    let hint = even_lengths(&BandSolver::new(&base)?, n, None).map(|(_, a, b)| (a, b))?;
    let f = |y: &[f64]| -> Result<Vec<f64>> {
        let coef: Vec<f64> = y.iter().map(|v| v * gt).collect();
        let p = Potential::from_coefficients(&coef, &[])?;
        let (len, _, _) = even_lengths(&BandSolver::new(&p)?, n, Some(&hint))?;
        Ok(len.iter().zip(goal).map(|(a, g)| (a - g) / gt).collect())
    };
    let done = |r: &[f64]| r.iter().zip(goal).all(|(ri, g)| (ri * gt).abs() <= tol * g.max(1e-12 * gt));
    let y0: Vec<f64> = c.iter().map(|v| v / gt).collect();
    let out = levenberg_marquardt(&f, y0, done, MAX_ITER)?;
    let c = out.y.iter().map(|v| v * gt).collect();
    Ok((c, out))
}

fn worst(r: &[f64], goal: &[f64], gt: f64) -> f64 {
    r.iter().zip(goal).map(|(ri, g)| (ri * gt).abs() / g.max(1e-300)).fold(0.0, f64::max)
}

/// Mean-zero cosine series whose first `n` gaps have the target lengths.
///
/// Large targets start from [`harmonic_well`]; otherwise, or if that fails,
/// the targets are scaled up from the first-order regime in doubling stages.
pub fn design_gap_lengths(target: &DesignTarget) -> Result<Design> {
    target.validate()?;
    let n = target.n;
    let m = target.basis_size;
    let gmax = target.scale();
    if gmax == 0.0 {
        let p = Potential::zero();
        let bands = BandSolver::new(&p)?.structure(n, true, None)?;
        return Ok(finish(p, bands, target, 0, 0, 0));
    }
    let final_tol = 0.05 * target.tolerance;
    let mut iterations = 0;
    if gmax > 10.0 * n as f64 {
        let mean = target.gap_lengths.iter().sum::<f64>() / n as f64;
        if let Ok(amp) = harmonic_well(n, mean) {
            let mut c = vec![0.0; m];
            c[0] = amp;
            if let Ok((c, out)) = polish_lengths(&c, &target.gap_lengths, gmax, final_tol) {
                iterations += out.iterations;
                if out.converged {
                    let p = Potential::from_coefficients(&c, &[])?;
                    let bands = BandSolver::new(&p)?.structure(n, true, None)?;
                    return Ok(finish(p, bands, target, iterations, 1, 0));
                }
            }
        }
    }
    let s0 = if gmax > 1.0 { 1.0 / gmax } else { 1.0 };
    let mut scales = vec![s0];
    while *scales.last().unwrap() < 1.0 {
        let next = (scales.last().unwrap() * 2.0).min(1.0);
        scales.push(next);
    }
    let mut c: Vec<f64> = (0..m).map(|k| if k < n { s0 * target.gap_lengths[k] } else { 0.0 }).collect();
    let mut prev_scale = s0;
    for (stage, &s) in scales.iter().enumerate() {
        let last = stage + 1 == scales.len();
        let gt = (s * gmax).max(1e-300);
        let goal: Vec<f64> = target.gap_lengths.iter().map(|g| s * g).collect();
        for v in &mut c {
            *v *= s / prev_scale;
        }
        prev_scale = s;
        let (next, out) = polish_lengths(&c, &goal, gt, if last { final_tol } else { 1e-3 })?;
        iterations += out.iterations;
        c = next;
        if !out.converged {
            return Err(SpectralError::NoConvergence { iterations, best_residual: worst(&out.r, &goal, gt) });
        }
    }
    let p = Potential::from_coefficients(&c, &[])?;
    let bands = BandSolver::new(&p)?.structure(n, true, None)?;
    Ok(finish(p, bands, target, iterations, scales.len() + 1, 0))
}

fn finish(p: Potential, bands: BandStructure, target: &DesignTarget, iterations: usize, stages: usize, restarts: usize) -> Design {
    let n = target.n;
    let lengths: Vec<f64> = (1..=n).map(|k| bands.gap(k).length()).collect();
    let fractions: Vec<f64> = (1..=n)
        .map(|k| {
            let g = bands.gap(k);
            if g.length() > 0.0 {
                (g.mu - g.lower) / g.length()
            } else {
                0.0
            }
        })
        .collect();
    let signs: Vec<i8> = (1..=n).map(|k| bands.gap(k).sign).collect();
    let mut residual = 0.0f64;
    for k in 0..n {
        let g = target.gap_lengths[k];
        residual = residual.max((lengths[k] - g).abs() / g.max(1e-300));
        if let Some(f) = target.state_fractions.get(k) {
            residual = residual.max((fractions[k] - f).abs());
        }
    }
    let report = DesignReport {
        target: target.clone(),
        achieved_lengths: lengths,
        achieved_fractions: fractions,
        achieved_signs: signs,
        residual,
        iterations,
        stages,
        restarts,
    };
    Design { potential: p, bands, report }
}

/// Target `ξ` for gap `k` at angle `θ` on the circle of radius `|γ_k|/2`.
fn xi_on_circle(len: f64, theta: f64) -> (f64, f64) {
    (0.5 * len * theta.cos(), 0.5 * len * theta.sin())
}

fn target_angle(f: f64, sign: i8) -> f64 {
    let x1 = 0.5 - f;
    let x2 = f64::from(sign) * (f * (1.0 - f)).sqrt();
    x2.atan2(x1)
}

fn angle_of(xi: (f64, f64)) -> f64 {
    xi.1.atan2(xi.0)
}

/// Moves the Dirichlet states of `p0` to the target positions and sheets
/// while keeping the gap lengths.
pub fn place_states(p0: &Potential, target: &DesignTarget) -> Result<Design> {
    target.validate()?;
    if target.state_fractions.is_empty() {
        return Err(SpectralError::InvalidArgument("no state targets given".into()));
    }
    let n = target.n;
    let m = target.basis_size;
    let gt = target.scale().max(1.0);
    let solver = BandSolver::new(p0)?;
    let bands0 = solver.structure(n, false, None)?;
    if meets(&bands0, target) {
        return Ok(finish(p0.clone(), bands0, target, 0, 0, 0));
    }

    // restarts: translations of p0 ranked by angle cost; the edges do not
    // move under translation, so the scan only tracks the Dirichlet data
    let goal: Vec<f64> = (0..n).map(|k| target_angle(target.state_fractions[k], target.state_signs[k])).collect();
    let cost_at = |t: f64, hint: Option<&[f64]>| -> Result<(f64, Vec<f64>)> {
        let mus = BandSolver::new(&p0.translate(t))?.dirichlet(n, hint)?;
        let cost = mus
            .iter()
            .enumerate()
            .map(|(k, (mu, md))| {
                let g = bands0.gap(k + 1);
                let raw: f64 = if md.scaled_a() * md.scaled_discriminant() < 0.0 { 1.0 } else { -1.0 };
                let x1 = 0.5 * (g.lower + g.upper) - mu;
                let x2 = raw * (0.25 * g.length() * g.length() - x1 * x1).max(0.0).sqrt();
                let d = (goal[k] - x2.atan2(x1)).abs();
                d.min(2.0 * PI - d)
            })
            .sum();
        Ok((cost, mus.into_iter().map(|m| m.0).collect()))
    };
    let mut scan: Vec<(f64, f64)> = Vec::with_capacity(SCAN);
    let mut hint: Option<Vec<f64>> = None;
    for i in 0..SCAN {
        let t = i as f64 / SCAN as f64;
        match cost_at(t, hint.as_deref()) {
            Ok((c, mus)) => {
                scan.push((t, c));
                hint = Some(mus);
            }
            Err(_) => hint = None,
        }
    }
    let mut minima: Vec<(f64, f64)> = (0..scan.len())
        .filter(|&i| {
            let l = scan[(i + scan.len() - 1) % scan.len()].1;
            let r = scan[(i + 1) % scan.len()].1;
            scan[i].1 <= l && scan[i].1 <= r && (scan[i].1 < l || scan[i].1 < r)
        })
        .map(|i| scan[i])
        .collect();
    minima.sort_by(|a, b| a.1.total_cmp(&b.1));
    minima.truncate(RESTARTS);
    let mut iterations = 0;
    let mut last_err = SpectralError::SignUnreachable;
    // golden-section polish of each minimum within one grid step, done
    // only for the starts actually tried
    let h = 1.0 / SCAN as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed());
    for (restart, &(t0, c0)) in minima.iter().enumerate() {
        let (mut a, mut b) = (t0 - h, t0 + h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut best = (t0, c0);
        for _ in 0..10 {
            let (x1, x2) = (b - g * (b - a), a + g * (b - a));
            let (Ok((f1, _)), Ok((f2, _))) = (cost_at(x1, None), cost_at(x2, None)) else { break };
            for (x, f) in [(x1, f1), (x2, f2)] {
                if f < best.1 {
                    best = (x, f);
                }
            }
            if f1 < f2 {
                b = x2;
            } else {
                a = x1;
            }
        }
        let jitter = if restart == 0 { 0.0 } else { rng.gen_range(-0.05..0.05) * h };
        let p = p0.translate(best.0 + jitter).bake_shift();
        let bs = match BandSolver::new(&p).and_then(|s| s.structure(n, false, Some(&bands0))) {
            Ok(bs) => bs,
            Err(e) => {
                last_err = e;
                continue;
            }
        };
        match angle_continuation(&p, &bs, target, m, gt, &mut iterations) {
            Ok((q, qb)) if meets(&qb, target) => {
                return Ok(finish(q, qb, target, iterations, ANGLE_STAGES, restart));
            }
            Ok(_) => last_err = SpectralError::SignUnreachable,
            Err(e) => last_err = e,
        }
    }
    Err(match last_err {
        SpectralError::NoConvergence { best_residual, .. } => SpectralError::NoConvergence { iterations, best_residual },
        SpectralError::IllConditioned { .. } | SpectralError::SignUnreachable => last_err,
        _ => SpectralError::SignUnreachable,
    })
}

fn meets(bs: &BandStructure, target: &DesignTarget) -> bool {
    (0..target.n).all(|k| {
        let g = bs.gap(k + 1);
        let len_ok = (g.length() - target.gap_lengths[k]).abs() <= target.tolerance * target.gap_lengths[k];
        let pos_ok = g.length() > 0.0 && ((g.mu - g.lower) / g.length() - target.state_fractions[k]).abs() <= target.tolerance;
        len_ok && pos_ok && g.sign == target.state_signs[k]
    })
}

/// `ξ` residual of the model in units of `gt`, with its Jacobian.
fn model_residual(model: &Model, y: &[f64], want: &[(f64, f64)], gt: f64) -> (Vec<f64>, DMatrix<f64>) {
    let n = want.len();
    let c: Vec<f64> = y.iter().map(|v| v * gt).collect();
    let s = model.snapshot(&c, n);
    let mut r = Vec::with_capacity(2 * n);
    let mut jac = DMatrix::zeros(2 * n, y.len());
    for k in 0..n {
        let (lo, hi, mu, sh) = (s.lower[k], s.upper[k], s.mu[k], s.sheet[k]);
        let prod = ((mu - lo) * (hi - mu)).max(0.0);
        let root = prod.sqrt();
        r.push((0.5 * (lo + hi) - mu - want[k].0) / gt);
        r.push((sh * root - want[k].1) / gt);
        let floor = 1e-9 * (hi - lo).abs().max(1e-300);
        for i in 0..y.len() {
            let (dl, dh, dm) = (s.d_lower[k][i], s.d_upper[k][i], s.d_mu[k][i]);
            jac[(2 * k, i)] = 0.5 * (dl + dh) - dm;
            jac[(2 * k + 1, i)] = sh * ((dm - dl) * (hi - mu) + (mu - lo) * (dh - dm)) / (2.0 * root.max(floor));
        }
    }
    (r, jac)
}

/// Levenberg–Marquardt with an exact Jacobian and minimum-norm steps.
fn lm_exact<F, A>(f: &F, y0: Vec<f64>, done: A, max_iter: usize) -> Result<LmOutcome>
where
    F: Fn(&[f64]) -> (Vec<f64>, DMatrix<f64>),
    A: Fn(&[f64]) -> bool,
{
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut y = y0;
    let (mut r, mut jac) = f(&y);
    if !r.iter().all(|v| v.is_finite()) {
        return Err(SpectralError::NonFiniteInput("model residual".into()));
    }
    let m = r.len();
    let mut damping = 1e-6;
    let mut it = 0;
    while it < max_iter && !done(&r) {
        it += 1;
        let rv = DVector::from_column_slice(&r);
        let r0 = norm(&r);
        let jjt = &jac * jac.transpose();
        let diag_max = (0..m).map(|i| jjt[(i, i)]).fold(0.0f64, f64::max);
        let mut improved = false;
        for _ in 0..30 {
            let a = &jjt + DMatrix::identity(m, m) * (damping * diag_max);
            let Some(ch) = a.cholesky() else {
                damping *= 4.0;
                continue;
            };
            let step = -(jac.transpose() * ch.solve(&rv));
            let trial: Vec<f64> = y.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let (rt, jt) = f(&trial);
            if rt.iter().all(|v| v.is_finite()) && norm(&rt) < r0 {
                y = trial;
                r = rt;
                jac = jt;
                damping = (damping / 4.0).max(1e-14);
                improved = true;
                break;
            }
            damping *= 4.0;
        }
        if !improved {
            break;
        }
    }
    let converged = done(&r);
    Ok(LmOutcome { y, r, iterations: it, converged })
}

/// Walks the states along their gap circles in the plane-wave model, then
/// corrects the model error with Newton steps on the shooting residual.
fn angle_continuation(
    p: &Potential,
    bs: &BandStructure,
    target: &DesignTarget,
    m: usize,
    gt: f64,
    iterations: &mut usize,
) -> Result<(Potential, BandStructure)> {
    let n = target.n;
    let start: Vec<f64> = bs.xi_raw().iter().map(|x| angle_of(*x)).collect();
    let goal: Vec<f64> = (0..n).map(|k| target_angle(target.state_fractions[k], target.state_signs[k])).collect();
    // travel the short arc
    let sweep: Vec<f64> = (0..n)
        .map(|k| {
            let mut d = goal[k] - start[k];
            if d > PI {
                d -= 2.0 * PI;
            } else if d < -PI {
                d += 2.0 * PI;
            }
            d
        })
        .collect();
    let (c, s) = coefficient_vectors(p, m);
    let mut y: Vec<f64> = c.iter().chain(&s).map(|v| v / gt).collect();
    let vmin = p.bounds().0;
    let model = Model::new(m, n, vmin, bs.gap(n).upper + target.scale());
    let final_want: Vec<(f64, f64)> = (0..n).map(|k| xi_on_circle(target.gap_lengths[k], goal[k])).collect();
    let ok = |r: &[f64], tol: f64| {
        (0..n).all(|k| {
            let e = (r[2 * k].powi(2) + r[2 * k + 1].powi(2)).sqrt() * gt;
            e <= tol * target.gap_lengths[k].max(1e-12 * gt)
        })
    };
    let best_of = |r: &[f64]| {
        (0..n)
            .map(|k| (r[2 * k].powi(2) + r[2 * k + 1].powi(2)).sqrt() * gt / target.gap_lengths[k].max(1e-300))
            .fold(0.0, f64::max)
    };
    for stage in 1..=ANGLE_STAGES {
        let frac = stage as f64 / ANGLE_STAGES as f64;
        let want: Vec<(f64, f64)> = (0..n).map(|k| xi_on_circle(target.gap_lengths[k], start[k] + frac * sweep[k])).collect();
        let f = |y: &[f64]| model_residual(&model, y, &want, gt);
        let tol = if stage == ANGLE_STAGES { 0.01 * target.tolerance } else { 1e-3 };
        let out = lm_exact(&f, y, |r| ok(r, tol), MAX_ITER)?;
        *iterations += out.iterations;
        if !out.converged {
            return Err(SpectralError::NoConvergence { iterations: *iterations, best_residual: best_of(&out.r) });
        }
        y = out.y;
    }
    // the model is off by its truncation error; remove it against the
    // shooting solver
    let mut prev = bs.clone();
    let mut best = f64::INFINITY;
    for _ in 0..POLISH {
        let q = from_scaled(&y, m, gt)?;
        let b = BandSolver::new(&q)?.structure(n, false, Some(&prev))?;
        let xi = b.xi_raw();
        let r: Vec<f64> = (0..n).flat_map(|k| [(xi[k].0 - final_want[k].0) / gt, (xi[k].1 - final_want[k].1) / gt]).collect();
        prev = b;
        best = best_of(&r);
        if ok(&r, 0.05 * target.tolerance) {
            let b = BandSolver::new(&q)?.structure(n, true, Some(&prev))?;
            return Ok((q, b));
        }
        *iterations += 1;
        let (_, jac) = model_residual(&model, &y, &final_want, gt);
        let rv = DVector::from_column_slice(&r);
        let jjt = &jac * jac.transpose();
        let ch = jjt.cholesky().ok_or(SpectralError::IllConditioned { condition: f64::INFINITY })?;
        let step = -(jac.transpose() * ch.solve(&rv));
        for (a, b) in y.iter_mut().zip(step.iter()) {
            *a += b;
        }
    }
    Err(SpectralError::NoConvergence { iterations: *iterations, best_residual: best })
}

fn from_scaled(y: &[f64], m: usize, gt: f64) -> Result<Potential> {
    let c: Vec<f64> = y[..m].iter().map(|v| v * gt).collect();
    let s: Vec<f64> = y[m..].iter().map(|v| v * gt).collect();
    Potential::from_coefficients(&c, &s)
}

/// Output of [`construct_model_potential`].
#[derive(Debug, Clone)]
pub struct ModelPotential {
    /// Normalized so that `λ_0^+ = 0`.
    pub potential: Potential,
    pub gamma: f64,
    pub kappa: f64,
    pub dim: usize,
    pub n: usize,
    /// Band data of the normalized potential, gaps `1..=n+1`.
    pub bands: BandStructure,
    pub report: DesignReport,
}

pub const DEFAULT_BASIS: usize = 12;
/// Modes available to [`place_states`] inside [`construct_model_potential`].
///
/// A deep well of width `ℓ` needs modes up to about `1/ℓ` before the tails
/// of its levels can be cut independently.
pub const PLACEMENT_BASIS: usize = 64;

/// Equal gaps `γ = 4π²(N+1)²/ϰ` with bound states at `λ_n^- + γ/(4d)`.
///
/// Gap `N+1` is designed as well: the separating interval above cluster `N`
/// is bounded by the band and the state that follow it.
pub fn construct_model_potential(n: usize, kappa: f64, dim: usize) -> Result<ModelPotential> {
    construct_with_basis(n, kappa, dim, DEFAULT_BASIS.max(n + 1), PLACEMENT_BASIS.max(n + 1))
}

pub fn construct_with_basis(n: usize, kappa: f64, dim: usize, basis: usize, placement_basis: usize) -> Result<ModelPotential> {
    if n == 0 {
        return Err(SpectralError::InvalidArgument("N must be at least 1".into()));
    }
    if !(kappa > 0.0 && kappa <= 0.1) {
        return Err(SpectralError::InvalidArgument(format!("kappa = {kappa} outside (0, 0.1]")));
    }
    if dim < 2 {
        return Err(SpectralError::InvalidArgument(format!("dimension {dim} below 2")));
    }
    let gamma = 4.0 * PI * PI * ((n + 1) as f64).powi(2) / kappa;
    let f = 1.0 / (4.0 * dim as f64);
    let target = DesignTarget::equal(n + 1, gamma, f, basis.max(n + 1));
    let lengths = design_gap_lengths(&target)?;
    let placement = DesignTarget { basis_size: placement_basis.max(target.basis_size), ..target };
    let placed = place_states(&lengths.potential, &placement)?;
    let shift = placed.bands.lambda0_plus;
    let potential = placed.potential.add_constant(-shift);
    let bands = placed.bands.shifted(-shift);
    let bound = kappa * gamma / 4.0;
    for k in 0..=n {
        let a = bands.band_sum(k);
        if a > bound {
            return Err(SpectralError::PostconditionFail(format!("A_{k} = {a} exceeds kappa*gamma/4 = {bound}")));
        }
    }
    Ok(ModelPotential { potential, gamma, kappa, dim, n, bands, report: placed.report })
}

/// Even potential `A cos(2πx)` above `δ` on `[0, ε]`, normalized and translated by `t`.
pub fn condition_p_potential(delta: f64, eps: f64, t: f64) -> Result<Potential> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(SpectralError::InvalidArgument(format!("delta = {delta} must be positive")));
    }
    if !(eps > 0.0 && eps < 0.25) {
        return Err(SpectralError::InvalidArgument(format!("eps = {eps} outside (0, 1/4)")));
    }
    if !(t >= 0.0 && t <= eps) {
        return Err(SpectralError::InvalidArgument(format!("t = {t} outside [0, eps]")));
    }
    let amp = (2.0 * delta / (2.0 * PI * eps).cos()).max(1.0);
    let base = Potential::from_coefficients(&[amp], &[])?;
    let edge = BandSolver::new(&base)?.structure(1, false, None)?.lambda0_plus;
    let p = base.add_constant(-edge).translate(t);
    if t > 0.0 {
        let solver = BandSolver::new(&p)?;
        let bs = solver.structure(1, false, None)?;
        let gs = ground_state_with(&solver, &bs, 0.0)?;
        if !(gs.rho > 0.0) {
            return Err(SpectralError::RhoNotPositive { rho: gs.rho });
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_targets_give_zero_potential() {
        let t = DesignTarget { gap_lengths: vec![0.0, 0.0], ..DesignTarget::equal(2, 0.0, 0.5, 4) };
        let d = design_gap_lengths(&DesignTarget { state_fractions: vec![], state_signs: vec![], ..t }).unwrap();
        assert_eq!(d.potential.l2_norm(), 0.0);
    }

    #[test]
    fn small_gap_design_converges() {
        let mut t = DesignTarget::equal(2, 1.5, 0.5, 4);
        t.state_fractions.clear();
        t.state_signs.clear();
        let d = design_gap_lengths(&t).unwrap();
        for l in &d.report.achieved_lengths {
            assert!((l - 1.5).abs() < 1.5e-4, "{l}");
        }
    }

    #[test]
    fn rejects_bad_targets() {
        let t = DesignTarget::equal(3, 1.0, 0.5, 2);
        assert!(matches!(design_gap_lengths(&t), Err(SpectralError::InvalidArgument(_))));
    }
}
