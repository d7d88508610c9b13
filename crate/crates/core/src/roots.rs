//! Bracketed scalar root polishing.

use crate::error::{Result, SpectralError};

/// Safeguarded Newton iteration on a sign-changing bracket.
///
/// `f` returns `(value, derivative, payload)`; value and derivative only
/// need a common positive scale at each point. Returns the root together
/// with the payload evaluated there.
pub(crate) fn newton_bracketed<T, F>(
    mut f: F,
    (lo, flo): (f64, f64),
    (hi, fhi): (f64, f64),
    guess: Option<f64>,
    rel_tol: f64,
) -> Result<(f64, T)>
where
    F: FnMut(f64) -> Result<(f64, f64, T)>,
{
    if flo.signum() == fhi.signum() && flo != 0.0 && fhi != 0.0 {
        return Err(SpectralError::BracketFailure(format!(
            "no sign change on [{lo}, {hi}] ({flo:e}, {fhi:e})"
        )));
    }
    let (mut xl, mut xh) = if flo < 0.0 || fhi > 0.0 { (lo, hi) } else { (hi, lo) };
    let mut x = guess.filter(|g| *g > lo.min(hi) && *g < lo.max(hi)).unwrap_or(0.5 * (lo + hi));
    let mut dxold = (hi - lo).abs();
    let mut dx = dxold;
    let (mut fx, mut dfx, mut pay) = f(x)?;
    for _ in 0..200 {
        if fx == 0.0 {
            return Ok((x, pay));
        }
        if fx < 0.0 {
            xl = x;
        } else {
            xh = x;
        }
        let tol = rel_tol * x.abs().max(1.0);
        let newton_ok = dfx != 0.0
            && ((x - xh) * dfx - fx) * ((x - xl) * dfx - fx) < 0.0
            && (2.0 * fx).abs() <= (dxold * dfx).abs();
        dxold = dx;
        if newton_ok {
            dx = fx / dfx;
            x -= dx;
        } else {
            dx = 0.5 * (xh - xl);
            x = xl + dx;
        }
        let (a, b, c) = f(x)?;
        fx = a;
        dfx = b;
        pay = c;
        if dx.abs() <= tol || (xh - xl).abs() <= 2.0 * tol {
            return Ok((x, pay));
        }
    }
    Err(SpectralError::BracketFailure(format!("root polishing stalled near {x}")))
}

/// Bisection with Illinois-style secant acceleration; for functions without
/// a cheap derivative.
pub(crate) fn illinois<F>(mut f: F, (mut a, mut fa): (f64, f64), (mut b, mut fb): (f64, f64), abs_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(SpectralError::BracketFailure(format!("no sign change on [{a}, {b}]")));
    }
    let mut side = 0i32;
    for _ in 0..300 {
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !c.is_finite() || c <= a.min(b) || c >= a.max(b) {
            c = 0.5 * (a + b);
        }
        let fc = f(c)?;
        if fc == 0.0 || (b - a).abs() <= abs_tol {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= abs_tol {
            return Ok(0.5 * (a + b));
        }
    }
    Err(SpectralError::BracketFailure("secant bisection stalled".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_finds_cos_root() {
        let (x, _) = newton_bracketed(
            |x| Ok((x.cos(), -x.sin(), ())),
            (1.0, 1f64.cos()),
            (2.0, 2f64.cos()),
            None,
            1e-15,
        )
        .unwrap();
        assert!((x - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn illinois_handles_steep_function() {
        let x = illinois(|x| Ok((x - 0.3).powi(3)), (0.0, -0.027), (1.0, 0.343), 1e-14).unwrap();
        assert!((x - 0.3).abs() < 1e-4);
        let y = illinois(|x| Ok(x.exp() - 2.0), (0.0, -1.0), (1.0, 1f64.exp() - 2.0), 1e-14).unwrap();
        assert!((y - 2f64.ln()).abs() < 1e-13);
    }
}
