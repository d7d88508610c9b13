//! Fundamental solutions of `-y'' + v y = λ y` over one period.
//!
//! The eight-dimensional state `(ϑ, ϑ', φ, φ', ϑ_λ, ϑ'_λ, φ_λ, φ'_λ)` is
//! integrated jointly. Deep wells make the solutions grow past the range of
//! `f64`, so the state is renormalized by powers of two on the way and the
//! exponent is carried in [`MonodromyData::scale_exp`]. Every quantity that is
//! homogeneous in the state (signs, ratios such as `m_+`, roots) is exact
//! in that representation.

use crate::error::{Result, SpectralError};
use crate::ode::{self, StepControl};
use crate::potential::{FourierSampler, Potential};

const RESCALE_BITS: i32 = 200;
const RESCALE_AT: f64 = 1.606_938_044_258_990_3e60; // 2^200

/// Monodromy entries and their λ-derivatives at one energy.
///
/// Stored entries equal the true values times `2^-scale_exp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonodromyData {
    pub lambda: f64,
    pub theta_1: f64,
    pub theta_prime_1: f64,
    pub phi_1: f64,
    pub phi_prime_1: f64,
    /// `ϑ_λ, ϑ'_λ, φ_λ, φ'_λ` at `x = 1`.
    pub d_lambda: [f64; 4],
    pub scale_exp: i32,
    /// Zeros of `φ(·, λ)` in `(0, 1)`.
    pub phi_zeros: usize,
    /// Zeros of `ϑ(·, λ)` in `(0, 1)`.
    pub theta_zeros: usize,
}

impl MonodromyData {
    fn scale(&self) -> f64 {
        pow2(self.scale_exp)
    }

    /// The number one expressed in stored units.
    pub fn unit(&self) -> f64 {
        pow2(-self.scale_exp)
    }

    pub fn is_scaled(&self) -> bool {
        self.scale_exp != 0
    }

    /// `𝔉(λ)`; overflows to infinity for deep wells, see [`Self::scaled_discriminant`].
    pub fn discriminant(&self) -> f64 {
        self.scaled_discriminant() * self.scale()
    }

    pub fn a_value(&self) -> f64 {
        self.scaled_a() * self.scale()
    }

    pub fn scaled_discriminant(&self) -> f64 {
        0.5 * (self.phi_prime_1 + self.theta_1)
    }

    pub fn scaled_a(&self) -> f64 {
        0.5 * (self.phi_prime_1 - self.theta_1)
    }

    pub fn d_discriminant(&self) -> f64 {
        0.5 * (self.d_lambda[0] + self.d_lambda[3]) * self.scale()
    }

    pub fn scaled_d_discriminant(&self) -> f64 {
        0.5 * (self.d_lambda[0] + self.d_lambda[3])
    }

    pub fn scaled_d_a(&self) -> f64 {
        0.5 * (self.d_lambda[3] - self.d_lambda[0])
    }

    /// `a² + φ(1)ϑ'(1)`, equal to `𝔉² − 1`, in squared stored units.
    ///
    /// Positive inside gaps and negative inside bands. Written this way the
    /// first-order errors of `ϑ(1)` and `φ'(1)` cancel at closed gaps.
    pub fn gap_indicator(&self) -> f64 {
        let a = self.scaled_a();
        a * a + self.phi_1 * self.theta_prime_1
    }

    pub fn d_gap_indicator(&self) -> f64 {
        2.0 * self.scaled_a() * self.scaled_d_a()
            + self.d_lambda[2] * self.theta_prime_1
            + self.phi_1 * self.d_lambda[1]
    }

    /// `ϑφ' − ϑ'φ` in true units (one for exact solutions).
    pub fn wronskian(&self) -> f64 {
        (self.theta_1 * self.phi_prime_1 - self.theta_prime_1 * self.phi_1) * self.scale() * self.scale()
    }

    /// `a² + 1 − 𝔉² + φϑ'` in true units (zero for exact solutions).
    pub fn identity_defect(&self) -> f64 {
        let f = self.discriminant();
        let a = self.a_value();
        let s2 = self.scale() * self.scale();
        a * a + 1.0 - f * f + self.phi_1 * self.theta_prime_1 * s2
    }

    /// Number of Dirichlet eigenvalues strictly below `λ`.
    pub fn dirichlet_count(&self) -> usize {
        self.phi_zeros
    }

    /// Number of Neumann eigenvalues strictly below `λ`.
    pub fn neumann_count(&self) -> usize {
        self.theta_zeros + usize::from(self.theta_1 * self.theta_prime_1 < 0.0)
    }

    /// Sheet-one branch `b = sign(𝔉)√(𝔉² − 1)` in stored units, or `None` inside a band.
    pub(crate) fn scaled_branch(&self) -> Option<f64> {
        let d = self.gap_indicator();
        let u = self.unit();
        if d < -1e-12 * u * u {
            return None;
        }
        Some(self.scaled_discriminant().signum() * d.max(0.0).sqrt())
    }

    /// `m_+` from this data; `gap` only selects the sign convention check.
    pub(crate) fn weyl_plus(&self, gap: usize) -> Result<f64> {
        let b = self
            .scaled_branch()
            .ok_or(SpectralError::OutsideGap { lambda: self.lambda, gap })?;
        let a = self.scaled_a();
        if (a - b).abs() >= (a + b).abs() {
            if self.phi_1.abs() < 1e-13 * (a - b).abs().max(self.unit()) {
                return Err(SpectralError::PoleAt { lambda: self.lambda });
            }
            Ok((a - b) / self.phi_1)
        } else {
            Ok(-self.theta_prime_1 / (a + b))
        }
    }
}

pub(crate) fn pow2(e: i32) -> f64 {
    if e == 0 {
        1.0
    } else if e > 1023 {
        f64::INFINITY
    } else if e < -1074 {
        0.0
    } else if e < -1022 {
        2f64.powi(-1022) * 2f64.powi(e + 1022)
    } else {
        2f64.powi(e)
    }
}

enum Kind {
    Smooth(FourierSampler),
    Segments(Vec<(f64, f64, f64)>),
}

/// Reusable integrator for one potential.
pub struct Shooter {
    kind: Kind,
    vmin: f64,
    vmax: f64,
}

impl Shooter {
    pub fn new(p: &Potential) -> Result<Self> {
        if !p.is_finite() {
            return Err(SpectralError::NonFiniteInput("potential coefficients".into()));
        }
        let (vmin, vmax) = p.bounds();
        let kind = if p.fourier_terms().is_empty() {
            Kind::Segments(p.segments())
        } else {
            Kind::Smooth(FourierSampler::new(p))
        };
        Ok(Shooter { kind, vmin, vmax })
    }

    /// Forces the Runge–Kutta path even for constant potentials.
    #[doc(hidden)]
    pub fn new_ode(p: &Potential) -> Result<Self> {
        let mut s = Self::new(p)?;
        if let Kind::Segments(seg) = &s.kind {
            if seg.len() == 1 {
                s.kind = Kind::Smooth(FourierSampler::new(p));
            }
        }
        Ok(s)
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.vmin, self.vmax)
    }

    pub fn at(&self, lambda: f64) -> Result<MonodromyData> {
        self.run(lambda, &[], |_, _| {})
    }

    /// Integrates to `x = 1` and reports the unscaled Wronskian at each of `xs`.
    pub fn wronskian_path(&self, lambda: f64, xs: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        let mut stops: Vec<f64> = xs.iter().copied().filter(|x| *x > 0.0 && *x < 1.0).collect();
        stops.sort_by(f64::total_cmp);
        self.run(lambda, &stops, |x, y| {
            if stops.iter().any(|s| *s == x) {
                out.push(y);
            }
        })?;
        Ok(out)
    }

    fn run<O: FnMut(f64, f64)>(&self, lambda: f64, stops: &[f64], mut probe: O) -> Result<MonodromyData> {
        if !lambda.is_finite() {
            return Err(SpectralError::NonFiniteInput(format!("lambda = {lambda}")));
        }
        match &self.kind {
            Kind::Smooth(s) => self.run_ode(s, lambda, stops, &mut probe),
            Kind::Segments(seg) => Ok(run_transfer(seg, lambda, stops, &mut probe)),
        }
    }

    fn run_ode<O: FnMut(f64, f64)>(
        &self,
        sampler: &FourierSampler,
        lambda: f64,
        stops: &[f64],
        probe: &mut O,
    ) -> Result<MonodromyData> {
        let rate = (lambda - self.vmin).max(1.0).sqrt();
        let ctl = StepControl { h_max: (1.5 / rate).min(0.05), ..StepControl::default() };
        let rhs = |x: f64, y: &[f64; 8]| {
            let q = sampler.eval(x) - lambda;
            [y[1], q * y[0], y[3], q * y[2], y[5], q * y[4] - y[0], y[7], q * y[6] - y[2]]
        };
        let mut exp = 0i32;
        let mut sign_t = 1.0f64;
        let mut sign_p = 1.0f64;
        let (mut zt, mut zp) = (0usize, 0usize);
        let y0 = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let y = ode::integrate(rhs, 0.0, 1.0, y0, &ctl, stops, |x, y| {
            count_sign(y[0], &mut sign_t, &mut zt);
            count_sign(y[2], &mut sign_p, &mut zp);
            let m = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if m > RESCALE_AT {
                let f = pow2(-RESCALE_BITS);
                for v in y.iter_mut() {
                    *v *= f;
                }
                exp += RESCALE_BITS;
            }
            if !stops.is_empty() {
                let s = pow2(exp);
                probe(x, (y[0] * y[3] - y[1] * y[2]) * s * s);
            }
        })
        .map_err(|x| SpectralError::StepUnderflow { x, lambda })?;
        Ok(MonodromyData {
            lambda,
            theta_1: y[0],
            theta_prime_1: y[1],
            phi_1: y[2],
            phi_prime_1: y[3],
            d_lambda: [y[4], y[5], y[6], y[7]],
            scale_exp: exp,
            phi_zeros: zp,
            theta_zeros: zt,
        })
    }
}

// a sign change over one step is a zero strictly inside it; steps never
// advance the phase by π or more
fn count_sign(v: f64, sign: &mut f64, zeros: &mut usize) {
    if v != 0.0 && v.signum() != *sign {
        *sign = v.signum();
        *zeros += 1;
    }
}

/// `(cos√z, sin√z/√z, d/dz of the latter)`, entire in `z`.
fn entire_trig(z: f64) -> (f64, f64, f64) {
    if z.abs() < 0.5 {
        let mut c = 0.0;
        let mut s = 0.0;
        let mut ds = 0.0;
        let mut zn = 1.0; // (-z)^n
        let mut fact_even = 1.0; // (2n)!
        for n in 0..12 {
            let fact_odd = fact_even * (2 * n + 1) as f64;
            c += zn / fact_even;
            s += zn / fact_odd;
            if n + 1 < 12 {
                // derivative of (-z)^(n+1)/(2n+3)!
                let fo_next = fact_odd * (2 * n + 2) as f64 * (2 * n + 3) as f64;
                ds += -((n + 1) as f64) * zn / fo_next;
            }
            zn *= -z;
            fact_even = fact_odd * (2 * n + 2) as f64;
        }
        (c, s, ds)
    } else if z > 0.0 {
        let r = z.sqrt();
        let (sn, cs) = r.sin_cos();
        let s = sn / r;
        (cs, s, (cs - s) / (2.0 * z))
    } else {
        let r = (-z).sqrt();
        let cs = r.cosh();
        let s = r.sinh() / r;
        (cs, s, (cs - s) / (2.0 * z))
    }
}

fn run_transfer<O: FnMut(f64, f64)>(
    segments: &[(f64, f64, f64)],
    lambda: f64,
    stops: &[f64],
    probe: &mut O,
) -> MonodromyData {
    // columns (ϑ, φ); rows (value, derivative)
    let mut y = [[1.0, 0.0], [0.0, 1.0]];
    let mut yl = [[0.0, 0.0], [0.0, 0.0]];
    let mut exp = 0i32;
    let (mut sign_t, mut sign_p) = (1.0f64, 1.0f64);
    let (mut zt, mut zp) = (0usize, 0usize);

    for &(start, len, value) in segments {
        let q = lambda - value;
        let rate = q.abs().sqrt();
        let mut cuts: Vec<f64> = Vec::new();
        let pieces = if q > 0.0 { (rate * len).ceil().max(1.0) } else { (rate * len / 150.0).ceil().max(1.0) };
        let n = pieces as usize;
        for i in 1..n {
            cuts.push(start + len * i as f64 / n as f64);
        }
        for s in stops {
            if *s > start && *s < start + len {
                cuts.push(*s);
            }
        }
        cuts.push(start + len);
        cuts.sort_by(f64::total_cmp);
        let mut x = start;
        for &xe in &cuts {
            let h = xe - x;
            if h <= 0.0 {
                continue;
            }
            let (c, s0, ds0) = entire_trig(q * h * h);
            let cc = c;
            let ss = h * s0;
            let dc = -0.5 * h * h * s0;
            let dss = h * h * h * ds0;
            let t = [[cc, ss], [-q * ss, cc]];
            let tl = [[dc, dss], [-ss - q * dss, dc]];
            let mut ny = [[0.0; 2]; 2];
            let mut nyl = [[0.0; 2]; 2];
            for r in 0..2 {
                for col in 0..2 {
                    ny[r][col] = t[r][0] * y[0][col] + t[r][1] * y[1][col];
                    nyl[r][col] = tl[r][0] * y[0][col]
                        + tl[r][1] * y[1][col]
                        + t[r][0] * yl[0][col]
                        + t[r][1] * yl[1][col];
                }
            }
            y = ny;
            yl = nyl;
            x = xe;
            count_sign(y[0][0], &mut sign_t, &mut zt);
            count_sign(y[0][1], &mut sign_p, &mut zp);
            let m = y.iter().chain(yl.iter()).flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            if m > RESCALE_AT {
                let f = pow2(-RESCALE_BITS);
                for v in y.iter_mut().chain(yl.iter_mut()).flatten() {
                    *v *= f;
                }
                exp += RESCALE_BITS;
            }
            if stops.contains(&x) {
                let sc = pow2(exp);
                probe(x, (y[0][0] * y[1][1] - y[1][0] * y[0][1]) * sc * sc);
            }
        }
    }
    MonodromyData {
        lambda,
        theta_1: y[0][0],
        theta_prime_1: y[1][0],
        phi_1: y[0][1],
        phi_prime_1: y[1][1],
        d_lambda: [yl[0][0], yl[1][0], yl[0][1], yl[1][1]],
        scale_exp: exp,
        phi_zeros: zp,
        theta_zeros: zt,
    }
}

/// Monodromy data of `p` at `lambda`.
pub fn integrate(p: &Potential, lambda: f64) -> Result<MonodromyData> {
    Shooter::new(p)?.at(lambda)
}

pub fn discriminant(p: &Potential, lambda: f64) -> Result<f64> {
    Ok(integrate(p, lambda)?.discriminant())
}

/// Sheet-one value `(−1)^n √(𝔉² − 1)` (negated on sheet two).
pub fn branch_b(p: &Potential, lambda: f64, gap_index: usize, sheet: u8) -> Result<f64> {
    let md = integrate(p, lambda)?;
    branch_from(&md, gap_index, sheet)
}

pub(crate) fn branch_from(md: &MonodromyData, gap_index: usize, sheet: u8) -> Result<f64> {
    Ok(scaled_branch_from(md, gap_index, sheet)? * pow2(md.scale_exp))
}

/// [`branch_from`] in stored units.
pub(crate) fn scaled_branch_from(md: &MonodromyData, gap_index: usize, sheet: u8) -> Result<f64> {
    let parity = if gap_index % 2 == 0 { 1.0 } else { -1.0 };
    let outside = SpectralError::OutsideGap { lambda: md.lambda, gap: gap_index };
    let b = md.scaled_branch().ok_or(outside.clone())?;
    if b != 0.0 && b.signum() != parity {
        return Err(outside);
    }
    Ok(if sheet == 2 { -parity * b.abs() } else { parity * b.abs() })
}

/// Weyl function `m_+ = (a − b)/φ(1)` on the physical sheet.
pub fn m_plus(p: &Potential, lambda: f64, gap_index: usize) -> Result<f64> {
    let md = integrate(p, lambda)?;
    check_parity(&md, gap_index)?;
    md.weyl_plus(gap_index)
}

pub(crate) fn check_parity(md: &MonodromyData, gap_index: usize) -> Result<()> {
    let parity = if gap_index % 2 == 0 { 1.0 } else { -1.0 };
    if md.scaled_discriminant().signum() != parity {
        return Err(SpectralError::OutsideGap { lambda: md.lambda, gap: gap_index });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::FourierTerm;

    #[test]
    fn entire_trig_matches_closed_forms() {
        for &z in &[-3.0, -0.4, -1e-6, 0.0, 1e-6, 0.3, 0.49, 0.51, 7.0] {
            let (c, s, ds) = entire_trig(z);
            let h = 1e-5;
            let (_, sp, _) = entire_trig(z + h);
            let (_, sm, _) = entire_trig(z - h);
            assert!((ds - (sp - sm) / (2.0 * h)).abs() < 1e-8, "z = {z}");
            if z > 0.0 {
                assert!((c - z.sqrt().cos()).abs() < 1e-15);
                assert!((s - z.sqrt().sin() / z.sqrt()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn ode_and_transfer_agree_on_constant() {
        let p = Potential::constant(1.5);
        let a = Shooter::new(&p).unwrap().at(20.0).unwrap();
        let b = Shooter::new_ode(&p).unwrap().at(20.0).unwrap();
        for (x, y) in [
            (a.theta_1, b.theta_1),
            (a.phi_1, b.phi_1),
            (a.theta_prime_1, b.theta_prime_1),
            (a.d_lambda[2], b.d_lambda[2]),
        ] {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
        assert_eq!(a.phi_zeros, b.phi_zeros);
    }

    #[test]
    fn deep_well_stays_finite() {
        let p = Potential::fourier(0.0, &[FourierTerm { k: 1, cos: 4.0e5, sin: 0.0 }]).unwrap();
        let md = integrate(&p, -3.9e5).unwrap();
        assert!(md.scale_exp > 0);
        assert!(md.theta_1.is_finite() && md.gap_indicator().is_finite());
    }
}
