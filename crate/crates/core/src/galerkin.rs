//! Truncated plane-wave model of a mean-zero Fourier series, with the
//! first-order sensitivities of its edges and Dirichlet eigenvalues.
//!
//! Parameters are `[cos_1..cos_m, sin_1..sin_m]`. The model is only as good
//! as its cutoff; the designer uses it for Jacobians and checks every result
//! against the shooting solver.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, SymmetricEigen};

#[derive(Debug, Clone)]
pub(crate) struct Model {
    m: usize,
    /// Plane waves `e^{iπqx}` with `|q| ≤ 2k + 1`.
    k: usize,
    /// Sine modes `√2 sin(πjx)`, `j = 1..=j`.
    j: usize,
}

/// Gaps `1..=n` of the model: edges, Dirichlet eigenvalue, sheet, gradients.
#[derive(Debug, Clone)]
pub(crate) struct Snapshot {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub mu: Vec<f64>,
    pub sheet: Vec<f64>,
    pub d_lower: Vec<Vec<f64>>,
    pub d_upper: Vec<Vec<f64>>,
    pub d_mu: Vec<Vec<f64>>,
}

fn sorted(e: SymmetricEigen<Complex<f64>, nalgebra::Dyn>) -> Vec<(f64, Vec<Complex<f64>>)> {
    let mut out: Vec<(f64, Vec<Complex<f64>>)> =
        (0..e.eigenvalues.len()).map(|i| (e.eigenvalues[i], e.eigenvectors.column(i).iter().copied().collect())).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

impl Model {
    /// Cutoff chosen so that states up to energy `emax` are resolved for a
    /// potential bounded below by `vmin`.
    pub fn new(m: usize, n: usize, vmin: f64, emax: f64) -> Self {
        let pmax = 1.5 * (emax - vmin).max(0.0).sqrt() + 2.0 * PI * (n + 8) as f64;
        let k = (pmax / (2.0 * PI)).ceil() as usize + 4;
        Model { m, k, j: 2 * k + 2 }
    }

    fn floquet(&self, y: &[f64], anti: bool) -> Vec<(f64, Vec<Complex<f64>>)> {
        let k = self.k as i64;
        let qs: Vec<f64> = if anti {
            (-k - 1..=k).map(|i| PI * (2 * i + 1) as f64).collect()
        } else {
            (-k..=k).map(|i| 2.0 * PI * i as f64).collect()
        };
        let size = qs.len();
        let m = self.m;
        let h = DMatrix::from_fn(size, size, |r, c| {
            let d = r as i64 - c as i64;
            if d == 0 {
                Complex::new(qs[r] * qs[r], 0.0)
            } else if d.unsigned_abs() as usize <= m {
                let i = d.unsigned_abs() as usize - 1;
                let (a, b) = (y[i], y[m + i]);
                if d > 0 {
                    Complex::new(0.5 * a, -0.5 * b)
                } else {
                    Complex::new(0.5 * a, 0.5 * b)
                }
            } else {
                Complex::new(0.0, 0.0)
            }
        });
        sorted(SymmetricEigen::new(h))
    }

    fn floquet_gradient(&self, v: &[Complex<f64>]) -> Vec<f64> {
        let m = self.m;
        let mut g = vec![0.0; 2 * m];
        for d in 1..=m.min(v.len().saturating_sub(1)) {
            let s: Complex<f64> = (0..v.len() - d).map(|i| v[i + d].conj() * v[i]).sum();
            g[d - 1] = s.re;
            g[m + d - 1] = s.im;
        }
        g
    }

    fn dirichlet(&self, y: &[f64]) -> Vec<(f64, Vec<f64>)> {
        let m = self.m;
        let jn = self.j;
        let c: Vec<f64> = (0..=2 * jn)
            .map(|p| {
                if p == 0 {
                    0.0
                } else if p % 2 == 0 {
                    if p / 2 <= m {
                        0.5 * y[p / 2 - 1]
                    } else {
                        0.0
                    }
                } else {
                    (1..=m).map(|d| y[m + d - 1] * odd_weight(d, p)).sum()
                }
            })
            .collect();
        let h = DMatrix::from_fn(jn, jn, |r, s| {
            let (a, b) = (r + 1, s + 1);
            let diag = if a == b { (PI * a as f64).powi(2) } else { 0.0 };
            diag + c[a.abs_diff(b)] - c[a + b]
        });
        let e = SymmetricEigen::new(h);
        let mut out: Vec<(f64, Vec<f64>)> =
            (0..jn).map(|i| (e.eigenvalues[i], e.eigenvectors.column(i).iter().copied().collect())).collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    fn dirichlet_gradient(&self, v: &[f64]) -> Vec<f64> {
        let m = self.m;
        let jn = v.len();
        // D(p) = Σ_{|j-k|=p} v_j v_k − Σ_{j+k=p} v_j v_k, sine index j = i + 1
        let mut d = vec![0.0; 2 * jn + 1];
        for p in 0..jn {
            let s: f64 = (0..jn - p).map(|i| v[i] * v[i + p]).sum();
            d[p] += if p == 0 { s } else { 2.0 * s };
        }
        for i in 0..jn {
            for l in 0..jn {
                d[i + l + 2] -= v[i] * v[l];
            }
        }
        let mut g = vec![0.0; 2 * m];
        for dd in 1..=m {
            if 2 * dd < d.len() {
                g[dd - 1] = 0.5 * d[2 * dd];
            }
            g[m + dd - 1] = (1..d.len()).step_by(2).map(|p| d[p] * odd_weight(dd, p)).sum();
        }
        g
    }

    /// Model data for gaps `1..=n` at parameters `y`.
    pub fn snapshot(&self, y: &[f64], n: usize) -> Snapshot {
        let ((per, anti), dir) = rayon::join(|| rayon::join(|| self.floquet(y, false), || self.floquet(y, true)), || self.dirichlet(y));
        let mut s = Snapshot {
            lower: Vec::with_capacity(n),
            upper: Vec::with_capacity(n),
            mu: Vec::with_capacity(n),
            sheet: Vec::with_capacity(n),
            d_lower: Vec::with_capacity(n),
            d_upper: Vec::with_capacity(n),
            d_mu: Vec::with_capacity(n),
        };
        for gap in 1..=n {
            let list = if gap % 2 == 1 { &anti } else { &per };
            let (lo, hi) = (&list[gap - 1], &list[gap]);
            s.lower.push(lo.0);
            s.upper.push(hi.0);
            s.d_lower.push(self.floquet_gradient(&lo.1));
            s.d_upper.push(self.floquet_gradient(&hi.1));
            let (mu, v) = &dir[gap - 1];
            s.mu.push(*mu);
            s.d_mu.push(self.dirichlet_gradient(v));
            // φ'(0) and φ'(1) up to a common factor; the state decays to the
            // right when the slope at 1 is the smaller one
            let d0: f64 = v.iter().enumerate().map(|(i, c)| (i + 1) as f64 * c).sum();
            let d1: f64 = v.iter().enumerate().map(|(i, c)| if i % 2 == 0 { -((i + 1) as f64) * c } else { (i + 1) as f64 * c }).sum();
            s.sheet.push(if d1.abs() < d0.abs() { 1.0 } else { -1.0 });
        }
        s
    }
}

/// `∫_0^1 cos(πpx) sin(2πdx) dx` for odd `p`.
fn odd_weight(d: usize, p: usize) -> f64 {
    let (d, p) = (d as f64, p as f64);
    4.0 * d / (PI * (4.0 * d * d - p * p))
}
