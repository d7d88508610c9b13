//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use hill_octant::{FourierTerm, Potential};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn mathieu() -> Potential {
    Potential::fourier(0.0, &[FourierTerm { k: 1, cos: 2.0, sin: 0.0 }]).unwrap()
}

/// Three-mode potential with coefficients uniform in [-5, 5].
pub fn random_potential(rng: &mut ChaCha8Rng) -> Potential {
    let terms: Vec<FourierTerm> = (1..=3)
        .map(|k| FourierTerm { k, cos: rng.gen_range(-5.0..5.0), sin: rng.gen_range(-5.0..5.0) })
        .collect();
    Potential::fourier(0.0, &terms).unwrap()
}

pub fn corpus(seed: u64, n: usize) -> Vec<Potential> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_potential(&mut rng)).collect()
}

/// `(constant, [(k, cos, sin)])` with the shift folded in.
fn coefficients(p: &Potential) -> (f64, Vec<(usize, f64, f64)>) {
    let q = p.bake_shift();
    (q.constant_term(), q.fourier_terms().iter().map(|t| (t.k as usize, t.cos, t.sin)).collect())
}

fn sorted_eigs(m: DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Hill matrix in a real trigonometric basis with frequencies `π·(2k + shift)`.
/// Matrix elements by trapezoid quadrature, exact for these trig products.
fn hill(p: &Potential, kmax: usize, anti: bool) -> Vec<f64> {
    let mut freqs: Vec<(f64, bool)> = Vec::new(); // (ω, is_sine)
    if anti {
        for k in 0..=kmax {
            let w = PI * (2 * k + 1) as f64;
            freqs.push((w, false));
            freqs.push((w, true));
        }
    } else {
        freqs.push((0.0, false));
        for k in 1..=kmax {
            let w = 2.0 * PI * k as f64;
            freqs.push((w, false));
            freqs.push((w, true));
        }
    }
    let npts = 1024;
    let xs: Vec<f64> = (0..npts).map(|i| i as f64 / npts as f64).collect();
    let vs: Vec<f64> = xs.iter().map(|x| p.evaluate(*x)).collect();
    let basis: Vec<Vec<f64>> = freqs
        .iter()
        .map(|&(w, s)| {
            let norm = if w == 0.0 { 1.0 } else { 2f64.sqrt() };
            xs.iter().map(|x| norm * if s { (w * x).sin() } else { (w * x).cos() }).collect()
        })
        .collect();
    let n = freqs.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let s: f64 = (0..npts).map(|q| basis[i][q] * basis[j][q] * vs[q]).sum::<f64>() / npts as f64;
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
        m[(i, i)] += freqs[i].0 * freqs[i].0;
    }
    sorted_eigs(m)
}

/// Edges `(λ_n^-, λ_n^+)` for `n = 1..=n_gaps` and `λ_0^+`.
pub fn hill_edges(p: &Potential, n_gaps: usize) -> (f64, Vec<(f64, f64)>) {
    let per = hill(p, 64, false);
    let anti = hill(p, 64, true);
    let gaps = (1..=n_gaps)
        .map(|n| {
            let l = if n % 2 == 0 { &per } else { &anti };
            (l[n - 1], l[n])
        })
        .collect();
    (per[0], gaps)
}

/// `∫_0^1 cos(πqx) dx` for integer `q`.
fn int_cos(q: i64) -> f64 {
    if q == 0 {
        1.0
    } else {
        0.0
    }
}

/// `∫_0^1 sin(πqx) dx` for integer `q`.
fn int_sin(q: i64) -> f64 {
    if q.rem_euclid(2) == 1 {
        2.0 / (PI * q as f64)
    } else {
        0.0
    }
}

/// `∫_0^1 cos(πpx) v(x) dx`.
fn cos_moment(c0: f64, terms: &[(usize, f64, f64)], pp: i64) -> f64 {
    let mut s = c0 * int_cos(pp);
    for &(k, a, b) in terms {
        let m2 = 2 * k as i64;
        s += a * 0.5 * (int_cos(pp - m2) + int_cos(pp + m2));
        s += b * 0.5 * (int_sin(m2 + pp) + int_sin(m2 - pp));
    }
    s
}

/// Dirichlet eigenvalues on `[0,1]` in the sine basis of size `dim`.
pub fn galerkin_dirichlet(p: &Potential, dim: usize) -> Vec<f64> {
    let (c0, terms) = coefficients(p);
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let (a, b) = ((i + 1) as i64, (j + 1) as i64);
            m[(i, j)] = cos_moment(c0, &terms, a - b) - cos_moment(c0, &terms, a + b);
        }
        m[(i, i)] += (PI * (i + 1) as f64).powi(2);
    }
    sorted_eigs(m)
}

/// Neumann eigenvalues on `[0,1]` in the cosine basis of size `dim`.
pub fn galerkin_neumann(p: &Potential, dim: usize) -> Vec<f64> {
    let (c0, terms) = coefficients(p);
    let norm = |i: usize| if i == 0 { 1.0 } else { 2f64.sqrt() };
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let (a, b) = (i as i64, j as i64);
            m[(i, j)] = norm(i) * norm(j) * 0.5 * (cos_moment(c0, &terms, a - b) + cos_moment(c0, &terms, a + b));
        }
        m[(i, i)] += (PI * i as f64).powi(2);
    }
    sorted_eigs(m)
}

/// Classical RK4 on the fundamental system; returns `[ϑ, ϑ', φ, φ']` at 1.
pub fn rk4_monodromy(p: &Potential, lambda: f64, steps: usize) -> [f64; 4] {
    let f = |x: f64, y: [f64; 4]| {
        let q = p.evaluate(x) - lambda;
        [y[1], q * y[0], y[3], q * y[2]]
    };
    let h = 1.0 / steps as f64;
    let mut y = [1.0, 0.0, 0.0, 1.0];
    for i in 0..steps {
        let x = i as f64 * h;
        let add = |y: [f64; 4], k: [f64; 4], s: f64| [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2], y[3] + s * k[3]];
        let k1 = f(x, y);
        let k2 = f(x + 0.5 * h, add(y, k1, 0.5 * h));
        let k3 = f(x + 0.5 * h, add(y, k2, 0.5 * h));
        let k4 = f(x + h, add(y, k3, h));
        for d in 0..4 {
            y[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
        }
    }
    y
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
