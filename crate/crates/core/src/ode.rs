//! Embedded Runge–Kutta–Fehlberg 7(8) integrator with local extrapolation.

const C: [f64; 13] = [
    0.0,
    2.0 / 27.0,
    1.0 / 9.0,
    1.0 / 6.0,
    5.0 / 12.0,
    0.5,
    5.0 / 6.0,
    1.0 / 6.0,
    2.0 / 3.0,
    1.0 / 3.0,
    1.0,
    0.0,
    1.0,
];

const A: [[f64; 12]; 13] = [
    [0.0; 12],
    [2.0 / 27.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 36.0, 1.0 / 12.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 24.0, 0.0, 1.0 / 8.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [5.0 / 12.0, 0.0, -25.0 / 16.0, 25.0 / 16.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 20.0, 0.0, 0.0, 1.0 / 4.0, 1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [-25.0 / 108.0, 0.0, 0.0, 125.0 / 108.0, -65.0 / 27.0, 125.0 / 54.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [31.0 / 300.0, 0.0, 0.0, 0.0, 61.0 / 225.0, -2.0 / 9.0, 13.0 / 900.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [2.0, 0.0, 0.0, -53.0 / 6.0, 704.0 / 45.0, -107.0 / 9.0, 67.0 / 90.0, 3.0, 0.0, 0.0, 0.0, 0.0],
    [
        -91.0 / 108.0,
        0.0,
        0.0,
        23.0 / 108.0,
        -976.0 / 135.0,
        311.0 / 54.0,
        -19.0 / 60.0,
        17.0 / 6.0,
        -1.0 / 12.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        2383.0 / 4100.0,
        0.0,
        0.0,
        -341.0 / 164.0,
        4496.0 / 1025.0,
        -301.0 / 82.0,
        2133.0 / 4100.0,
        45.0 / 82.0,
        45.0 / 164.0,
        18.0 / 41.0,
        0.0,
        0.0,
    ],
    [3.0 / 205.0, 0.0, 0.0, 0.0, 0.0, -6.0 / 41.0, -3.0 / 205.0, -3.0 / 41.0, 3.0 / 41.0, 6.0 / 41.0, 0.0, 0.0],
    [
        -1777.0 / 4100.0,
        0.0,
        0.0,
        -341.0 / 164.0,
        4496.0 / 1025.0,
        -289.0 / 82.0,
        2193.0 / 4100.0,
        51.0 / 82.0,
        33.0 / 164.0,
        12.0 / 41.0,
        0.0,
        1.0,
    ],
];

// eighth-order weights (stages 0 and 10 drop out)
const B8: [f64; 13] = [
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    34.0 / 105.0,
    9.0 / 35.0,
    9.0 / 35.0,
    9.0 / 280.0,
    9.0 / 280.0,
    0.0,
    41.0 / 840.0,
    41.0 / 840.0,
];

const ERR: f64 = 41.0 / 840.0;

#[derive(Debug, Clone, Copy)]
pub(crate) struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl { rtol: 1e-12, atol: 1e-13, h_max: 0.05, max_steps: 2_000_000 }
    }
}

/// Integrates `y' = f(x, y)` from `x0` to `x1`, landing exactly on every
/// point of `stops`. `on_step` sees each accepted state and may rescale it.
///
/// Returns the final state, or `Err(x)` with the position where the step
/// size collapsed.
pub(crate) fn integrate<const D: usize, F, O>(
    f: F,
    x0: f64,
    x1: f64,
    y0: [f64; D],
    ctl: &StepControl,
    stops: &[f64],
    mut on_step: O,
) -> Result<[f64; D], f64>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
    O: FnMut(f64, &mut [f64; D]),
{
    let mut x = x0;
    let mut y = y0;
    let mut h = ctl.h_max.min(x1 - x0).min(0.01);
    let mut stop_idx = 0;
    let mut k = [[0.0; D]; 13];
    let mut steps = 0usize;

    while x < x1 {
        while stop_idx < stops.len() && stops[stop_idx] <= x {
            stop_idx += 1;
        }
        let target = if stop_idx < stops.len() { stops[stop_idx].min(x1) } else { x1 };
        if target - x <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            x = target;
            on_step(x, &mut y);
            continue;
        }
        let mut h_try = h.min(ctl.h_max);
        let mut landing = false;
        if x + 1.01 * h_try >= target {
            h_try = target - x;
            landing = true;
        }
        if h_try <= 1e-15 * x.abs().max(1.0) || steps > ctl.max_steps {
            return Err(x);
        }

        for s in 0..13 {
            let mut ys = y;
            for (j, a) in A[s].iter().enumerate().take(s) {
                if *a != 0.0 {
                    for d in 0..D {
                        ys[d] += h_try * a * k[j][d];
                    }
                }
            }
            k[s] = f(x + C[s] * h_try, &ys);
        }

        let mut y_new = y;
        let mut err_norm = 0.0f64;
        for d in 0..D {
            let mut incr = 0.0;
            for s in 0..13 {
                incr += B8[s] * k[s][d];
            }
            y_new[d] += h_try * incr;
            let e = h_try * ERR * (k[0][d] + k[10][d] - k[11][d] - k[12][d]);
            let sc = ctl.atol + ctl.rtol * y[d].abs().max(y_new[d].abs());
            err_norm = err_norm.max(e.abs() / sc);
        }
        steps += 1;

        if !err_norm.is_finite() {
            h = 0.25 * h_try;
            continue;
        }
        if err_norm <= 1.0 {
            x = if landing { target } else { x + h_try };
            y = y_new;
            on_step(x, &mut y);
            let grow = if err_norm == 0.0 { 4.0 } else { (0.9 * err_norm.powf(-0.125)).clamp(0.2, 4.0) };
            // a short landing step says nothing about the natural step size
            if !landing || h_try >= h {
                h = h_try * grow;
            }
        } else {
            h = h_try * (0.9 * err_norm.powf(-0.125)).clamp(0.2, 1.0);
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tableau_rows_sum_to_nodes() {
        for i in 0..13 {
            let s: f64 = A[i].iter().sum();
            assert!((s - C[i]).abs() < 1e-14, "row {i}");
        }
        assert!((B8.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn harmonic_oscillator_one_period() {
        let ctl = StepControl::default();
        let y = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            2.0 * std::f64::consts::PI,
            [1.0, 0.0],
            &ctl,
            &[],
            |_, _| {},
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-11);
        assert!(y[1].abs() < 1e-11);
    }

    #[test]
    fn lands_on_stops() {
        let mut seen = Vec::new();
        let ctl = StepControl::default();
        integrate(|_, _y: &[f64; 1]| [1.0], 0.0, 1.0, [0.0], &ctl, &[0.25, 0.5], |x, _| seen.push(x))
            .unwrap();
        assert!(seen.contains(&0.25) && seen.contains(&0.5));
        assert_eq!(*seen.last().unwrap(), 1.0);
    }
}
