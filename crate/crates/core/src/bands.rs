//! Band edges, Dirichlet and Neumann spectra, gap states and the ξ-map.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Result, SpectralError};
use crate::monodromy::{MonodromyData, Shooter};
use crate::potential::Potential;
use crate::roots::newton_bracketed;

const ROOT_TOL: f64 = 1e-13;
const MERGE_TOL: f64 = 1e-9;
const VIRTUAL_TOL: f64 = 1e-7;

/// One finite gap `γ_n = (λ_n^−, λ_n^+)` with its Dirichlet state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRecord {
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
    pub mu: f64,
    /// Closed gaps carry no state.
    pub closed: bool,
    /// +1 bound, −1 anti-bound, 0 virtual (or closed).
    pub sign: i8,
    /// Sheet of `μ_n` read off `a(μ_n)` without the virtual-state tolerance.
    pub raw_sign: i8,
    pub xi: (f64, f64),
}

impl GapRecord {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Band data up to gap index `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandStructure {
    pub lambda0_plus: f64,
    /// Gaps `1..=N` in order.
    pub gaps: Vec<GapRecord>,
    /// `λ_{N+1}^−`, the top of band `σ_N`.
    pub top: f64,
    /// `μ_{N+1}`.
    pub mu_next: f64,
    /// `ν_0..=ν_N`; empty unless requested.
    pub neumann: Vec<f64>,
    /// Zeros of 𝔉 inside the bands `0..=N`.
    pub centers: Vec<f64>,
}

impl BandStructure {
    pub fn n_gaps(&self) -> usize {
        self.gaps.len()
    }

    pub fn gap(&self, n: usize) -> &GapRecord {
        &self.gaps[n - 1]
    }

    /// `λ_n^+` for `n = 0..=N`.
    pub fn edge_plus(&self, n: usize) -> f64 {
        if n == 0 {
            self.lambda0_plus
        } else {
            self.gaps[n - 1].upper
        }
    }

    /// `λ_n^−` for `n = 1..=N+1`.
    pub fn edge_minus(&self, n: usize) -> f64 {
        if n == self.gaps.len() + 1 {
            self.top
        } else {
            self.gaps[n - 1].lower
        }
    }

    /// `σ_n = [λ_n^+, λ_{n+1}^−]` for `n = 0..=N`.
    pub fn band(&self, n: usize) -> (f64, f64) {
        (self.edge_plus(n), self.edge_minus(n + 1))
    }

    pub fn dirichlet(&self) -> Vec<f64> {
        self.gaps.iter().map(|g| g.mu).collect()
    }

    /// `(μ_n, sign_n)` for every open gap.
    pub fn states(&self) -> Vec<(usize, f64, i8)> {
        self.gaps.iter().filter(|g| !g.closed).map(|g| (g.n, g.mu, g.sign)).collect()
    }

    pub fn xi(&self) -> Vec<(f64, f64)> {
        self.gaps.iter().map(|g| g.xi).collect()
    }

    pub fn xi_norm(&self) -> f64 {
        self.gaps.iter().map(|g| g.xi.0 * g.xi.0 + g.xi.1 * g.xi.1).sum::<f64>().sqrt()
    }

    /// `Σ_{j ≤ n} |σ_j|`.
    pub fn band_sum(&self, n: usize) -> f64 {
        (0..=n).map(|j| {
            let (a, b) = self.band(j);
            b - a
        })
        .sum()
    }

    /// Same structure with every energy shifted by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.lambda0_plus += c;
        out.top += c;
        out.mu_next += c;
        for g in &mut out.gaps {
            g.lower += c;
            g.upper += c;
            g.mu += c;
        }
        for v in &mut out.centers {
            *v += c;
        }
        for v in &mut out.neumann {
            *v += c;
        }
        out
    }
}

type Bracket = (f64, MonodromyData, f64, MonodromyData);

/// Spectral solver bound to one potential.
pub struct BandSolver {
    shooter: Shooter,
    lo: f64,
    vmax: f64,
}

impl BandSolver {
    pub fn new(p: &Potential) -> Result<Self> {
        let shooter = Shooter::new(p)?;
        let (vmin, vmax) = shooter.bounds();
        Ok(BandSolver { shooter, lo: vmin - 1.0, vmax })
    }

    pub fn shooter(&self) -> &Shooter {
        &self.shooter
    }

    pub fn at(&self, lambda: f64) -> Result<MonodromyData> {
        self.shooter.at(lambda)
    }

    /// Brackets holding exactly the `j`-th eigenvalue, `j = 0..k`, of the
    /// problem whose counting function is `count`.
    fn isolate(&self, k: usize, count: fn(&MonodromyData) -> usize, hint: Option<&[f64]>) -> Result<Vec<Bracket>> {
        let mut found: Vec<Option<Bracket>> = vec![None; k];
        if let Some(h) = hint {
            self.isolate_from_hint(k, count, h, &mut found)?;
        }
        if found.iter().all(Option::is_some) {
            return Ok(found.into_iter().map(Option::unwrap).collect());
        }
        let lo = self.lo;
        let md_lo = self.at(lo)?;
        if count(&md_lo) != 0 {
            return Err(SpectralError::BracketFailure(format!("eigenvalues below the potential minimum {lo}")));
        }
        let mut hi = (PI * (k as f64 + 1.0)).powi(2) + self.vmax + PI * PI;
        let mut md_hi = self.at(hi)?;
        let mut grow = 0;
        while count(&md_hi) < k {
            hi += 2.0 * (hi - lo);
            md_hi = self.at(hi)?;
            grow += 1;
            if grow > 40 {
                return Err(SpectralError::CountMismatch { expected: k, found: count(&md_hi) });
            }
        }
        let mut stack: Vec<Bracket> = vec![(lo, md_lo, hi, md_hi)];
        while let Some((a, ma, b, mb)) = stack.pop() {
            let ca = count(&ma);
            let cb = count(&mb);
            if ca >= k || cb <= ca || (ca..cb.min(k)).all(|j| found[j].is_some()) {
                continue;
            }
            if cb == ca + 1 {
                found[ca] = Some((a, ma, b, mb));
                continue;
            }
            if b - a <= 1e-13 * a.abs().max(1.0) {
                return Err(SpectralError::BracketFailure(format!(
                    "{} eigenvalues unresolved near {a}",
                    cb - ca
                )));
            }
            let m = 0.5 * (a + b);
            let mm = self.at(m)?;
            stack.push((m, mm, b, mb));
            stack.push((a, ma, m, mm));
        }
        let got = found.iter().filter(|f| f.is_some()).count();
        if got != k {
            return Err(SpectralError::CountMismatch { expected: k, found: got });
        }
        Ok(found.into_iter().map(Option::unwrap).collect())
    }

    fn isolate_from_hint(
        &self,
        k: usize,
        count: fn(&MonodromyData) -> usize,
        hint: &[f64],
        found: &mut [Option<Bracket>],
    ) -> Result<()> {
        for j in 0..k.min(hint.len()) {
            let left = if j > 0 { hint[j] - hint[j - 1] } else { f64::INFINITY };
            let right = if j + 1 < hint.len() { hint[j + 1] - hint[j] } else { f64::INFINITY };
            let w = 0.05 * left.min(right).min(hint[j].abs().max(1.0));
            if !(w > 0.0) || !w.is_finite() {
                continue;
            }
            let (a, b) = (hint[j] - w, hint[j] + w);
            let ma = self.at(a)?;
            if count(&ma) != j {
                continue;
            }
            let mb = self.at(b)?;
            if count(&mb) == j + 1 {
                found[j] = Some((a, ma, b, mb));
            }
        }
        Ok(())
    }

    /// Newton from a nearby guess. Accepted only when the count and the
    /// slope sign pin the root to index `j`.
    fn newton_near(
        &self,
        j: usize,
        guess: f64,
        count: fn(&MonodromyData) -> usize,
        f: fn(&MonodromyData) -> (f64, f64),
    ) -> Result<Option<(f64, MonodromyData)>> {
        let slope = if j % 2 == 0 { -1.0 } else { 1.0 };
        let mut x = guess;
        for _ in 0..8 {
            let md = self.at(x)?;
            let (v, dv) = f(&md);
            let c = count(&md);
            if dv * slope <= 0.0 || (c != j && c != j + 1) {
                return Ok(None);
            }
            let dx = v / dv;
            if dx.abs() <= ROOT_TOL * x.abs().max(1.0) {
                return Ok(Some((x, md)));
            }
            x -= dx;
        }
        Ok(None)
    }

    fn roots(
        &self,
        k: usize,
        hint: Option<&[f64]>,
        count: fn(&MonodromyData) -> usize,
        f: fn(&MonodromyData) -> (f64, f64),
    ) -> Result<Vec<(f64, MonodromyData)>> {
        if let Some(h) = hint.filter(|h| h.len() >= k) {
            let mut quick = Vec::with_capacity(k);
            for (j, g) in h.iter().take(k).enumerate() {
                match self.newton_near(j, *g, count, f)? {
                    Some(r) => quick.push(r),
                    None => break,
                }
            }
            if quick.len() == k {
                return Ok(quick);
            }
        }
        let brackets = self.isolate(k, count, hint)?;
        brackets
            .into_iter()
            .map(|(a, ma, b, mb)| {
                newton_bracketed(
                    |l| {
                        let md = self.at(l)?;
                        let (v, dv) = f(&md);
                        Ok((v, dv, md))
                    },
                    (a, f(&ma).0),
                    (b, f(&mb).0),
                    None,
                    ROOT_TOL,
                )
            })
            .collect()
    }

    /// `(μ_n, data at μ_n)` for `n = 1..=k`.
    pub fn dirichlet(&self, k: usize, hint: Option<&[f64]>) -> Result<Vec<(f64, MonodromyData)>> {
        self.roots(k, hint, MonodromyData::dirichlet_count, |m| (m.phi_1, m.d_lambda[2]))
    }

    /// `ν_n` for `n = 0..k`.
    pub fn neumann(&self, k: usize, hint: Option<&[f64]>) -> Result<Vec<f64>> {
        let r = self.roots(k, hint, MonodromyData::neumann_count, |m| (m.theta_prime_1, m.d_lambda[1]))?;
        Ok(r.into_iter().map(|r| r.0).collect())
    }

    /// Zero of 𝔉 inside band `i`, between a point of gap `i` (or below the
    /// spectrum) and a point of gap `i + 1`. A band thinner than the local
    /// float spacing can leave an endpoint on the wrong side; such an end
    /// moves to the nearest point with the right sign.
    fn discriminant_zero(&self, i: usize, a: (f64, &MonodromyData), b: (f64, &MonodromyData)) -> Result<(f64, MonodromyData)> {
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        let mut fa = a.1.scaled_discriminant();
        let mut fb = b.1.scaled_discriminant();
        let (mut xa, mut xb) = (a.0, b.0);
        // the nearer side is the one facing the band
        let push = |x: f64, want: f64| -> Result<(f64, f64)> {
            let mut d = 4.0 * f64::EPSILON * x.abs().max(1.0);
            for _ in 0..60 {
                for y in [x - d, x + d] {
                    let v = self.at(y)?.scaled_discriminant();
                    if v * want > 0.0 {
                        return Ok((y, v));
                    }
                }
                d *= 2.0;
            }
            Err(SpectralError::BracketFailure(format!("band {i} not located near {x}")))
        };
        if fa * s <= 0.0 {
            (xa, fa) = push(xa, s)?;
        }
        if fb * s >= 0.0 {
            (xb, fb) = push(xb, -s)?;
        }
        newton_bracketed(
            |l| {
                let md = self.at(l)?;
                Ok((md.scaled_discriminant(), md.scaled_d_discriminant(), md))
            },
            (xa, fa),
            (xb, fb),
            None,
            ROOT_TOL,
        )
    }

    /// Newton on 𝔉 from a nearby guess; accepted when it lands in
    /// `[a, b]` on a crossing of the slope band `i` must have.
    fn center_near(&self, i: usize, guess: f64, a: f64, b: f64) -> Result<Option<(f64, MonodromyData)>> {
        let slope = if i % 2 == 0 { -1.0 } else { 1.0 };
        let pad = 64.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0);
        let mut x = guess;
        for _ in 0..8 {
            if x < a - pad || x > b + pad {
                return Ok(None);
            }
            let md = self.at(x)?;
            let (v, dv) = (md.scaled_discriminant(), md.scaled_d_discriminant());
            if dv * slope <= 0.0 {
                return Ok(None);
            }
            let dx = v / dv;
            if dx.abs() <= ROOT_TOL * x.abs().max(1.0) {
                return Ok(Some((x, md)));
            }
            x -= dx;
        }
        Ok(None)
    }

    /// Root of the gap indicator between a gap point `g` and a band point `c`.
    fn edge(&self, g: (f64, &MonodromyData), c: (f64, &MonodromyData), guess: Option<f64>) -> Result<f64> {
        let mut from = (g.0, g.1.gap_indicator());
        let mut band = (c.0, c.1.gap_indicator());
        if band.1 >= 0.0 {
            // band below float resolution
            return Ok(c.0);
        }
        if from.1 <= 0.0 {
            // g sits on an edge; the gap may still open towards c
            if (c.0 - g.0) * g.1.d_gap_indicator() <= 0.0 {
                return Ok(g.0);
            }
            let tol = 0.25 * MERGE_TOL * g.0.abs().max(1.0);
            loop {
                let m = 0.5 * (g.0 + band.0);
                if (m - g.0).abs() < tol {
                    return Ok(g.0);
                }
                let d = self.at(m)?.gap_indicator();
                if d > 0.0 {
                    from = (m, d);
                    break;
                }
                band = (m, d);
            }
        }
        let r = newton_bracketed(
            |l| {
                let md = self.at(l)?;
                Ok((md.gap_indicator(), md.d_gap_indicator(), ()))
            },
            from,
            band,
            guess,
            ROOT_TOL,
        )?;
        Ok(r.0)
    }

    /// Full structure up to gap `n_gaps`; Neumann values only on request.
    /// A nearby structure `prev` seeds the root searches.
    pub fn structure(&self, n_gaps: usize, with_neumann: bool, prev: Option<&BandStructure>) -> Result<BandStructure> {
        if n_gaps == 0 {
            return Err(SpectralError::InvalidArgument("N must be at least 1".into()));
        }
        let hint: Option<Vec<f64>> = prev.map(|b| {
            let mut h = b.dirichlet();
            h.push(b.mu_next);
            h
        });
        let mus = self.dirichlet(n_gaps + 1, hint.as_deref())?;
        let md_lo = self.at(self.lo)?;
        let mut left: (f64, MonodromyData) = (self.lo, md_lo);
        let mut plus = Vec::with_capacity(n_gaps + 1);
        let mut minus = Vec::with_capacity(n_gaps + 1);
        let mut centers = Vec::with_capacity(n_gaps + 1);
        for (i, (mu, md_mu)) in mus.iter().enumerate() {
            let hint_c = prev.and_then(|b| b.centers.get(i).copied());
            let (lc, md_c) = match hint_c.map(|h| self.center_near(i, h, left.0, *mu)).transpose()?.flatten() {
                Some(r) => r,
                None => self.discriminant_zero(i, (left.0, &left.1), (*mu, md_mu))?,
            };
            centers.push(lc);
            let guess_plus = prev.filter(|b| i <= b.n_gaps()).map(|b| b.edge_plus(i));
            let guess_minus = prev.filter(|b| i < b.n_gaps()).map(|b| b.edge_minus(i + 1));
            plus.push(self.edge((left.0, &left.1), (lc, &md_c), guess_plus)?);
            minus.push(self.edge((*mu, md_mu), (lc, &md_c), guess_minus)?);
            left = (*mu, *md_mu);
        }
        let mut gaps = Vec::with_capacity(n_gaps);
        for n in 1..=n_gaps {
            let (mu, md_mu) = &mus[n - 1];
            let mut lower = minus[n - 1];
            let mut upper = plus[n];
            let closed = upper - lower < MERGE_TOL * lower.abs().max(1.0);
            if closed {
                lower = *mu;
                upper = *mu;
            }
            let raw_sign: i8 = if md_mu.scaled_a() * md_mu.scaled_discriminant() < 0.0 { 1 } else { -1 };
            let len = upper - lower;
            let sign = if closed || (mu - lower).min(upper - mu) < VIRTUAL_TOL * len {
                0
            } else {
                raw_sign
            };
            let x1 = 0.5 * (lower + upper) - mu;
            let x2 = f64::from(sign) * (0.25 * len * len - x1 * x1).abs().sqrt();
            gaps.push(GapRecord { n, lower, upper, mu: *mu, closed, sign, raw_sign, xi: (x1, x2) });
        }
        let nu_hint = prev.filter(|b| !b.neumann.is_empty()).map(|b| b.neumann.as_slice());
        let neumann = if with_neumann { self.neumann(n_gaps + 1, nu_hint)? } else { Vec::new() };
        Ok(BandStructure {
            lambda0_plus: plus[0],
            gaps,
            top: minus[n_gaps],
            mu_next: mus[n_gaps].0,
            neumann,
            centers,
        })
    }
}

impl BandStructure {
    /// ξ-coordinates with the raw sheet sign, continuous through gap edges.
    pub fn xi_raw(&self) -> Vec<(f64, f64)> {
        self.gaps
            .iter()
            .map(|g| {
                let len = g.length();
                let x1 = 0.5 * (g.lower + g.upper) - g.mu;
                (x1, f64::from(g.raw_sign) * (0.25 * len * len - x1 * x1).max(0.0).sqrt())
            })
            .collect()
    }
}

/// Edges, gaps and Dirichlet data up to gap `n`.
pub fn band_edges(p: &Potential, n: usize) -> Result<BandStructure> {
    BandSolver::new(p)?.structure(n, false, None)
}

/// Everything, Neumann spectrum included.
pub fn band_structure(p: &Potential, n: usize) -> Result<BandStructure> {
    BandSolver::new(p)?.structure(n, true, None)
}

pub fn dirichlet_eigs(p: &Potential, n: usize) -> Result<Vec<f64>> {
    Ok(BandSolver::new(p)?.dirichlet(n, None)?.into_iter().map(|r| r.0).collect())
}

/// `ν_0..=ν_n`.
pub fn neumann_eigs(p: &Potential, n: usize) -> Result<Vec<f64>> {
    BandSolver::new(p)?.neumann(n + 1, None)
}

pub fn classify_states(p: &Potential, n: usize) -> Result<Vec<(usize, f64, i8)>> {
    Ok(band_edges(p, n)?.states())
}

pub fn xi_map(p: &Potential, n: usize) -> Result<Vec<(f64, f64)>> {
    Ok(band_edges(p, n)?.xi())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::FourierTerm;

    #[test]
    fn free_edges_are_squares() {
        let bs = band_structure(&Potential::zero(), 5).unwrap();
        assert!(bs.lambda0_plus.abs() < 1e-10);
        for g in &bs.gaps {
            let e = (PI * g.n as f64).powi(2);
            assert!(g.closed);
            assert!((g.lower - e).abs() < 1e-9 && (g.mu - e).abs() < 1e-9);
            assert!((bs.neumann[g.n] - e).abs() < 1e-9);
        }
        assert!(bs.neumann[0].abs() < 1e-9);
        assert!(bs.states().is_empty());
    }

    #[test]
    fn mathieu_first_gap_is_open() {
        let p = Potential::fourier(0.0, &[FourierTerm { k: 1, cos: 2.0, sin: 0.0 }]).unwrap();
        let bs = band_structure(&p, 3).unwrap();
        let g = bs.gap(1);
        assert!(!g.closed);
        assert!((g.length() - 2.0).abs() < 0.3, "{}", g.length());
        assert!(g.lower <= g.mu && g.mu <= g.upper);
        assert!(bs.neumann[0] <= bs.lambda0_plus + 1e-12);
    }
}
