mod common;

use std::f64::consts::PI;

use common::*;
use hill_octant::bands::{band_structure, dirichlet_eigs, neumann_eigs};
use hill_octant::monodromy::{discriminant, integrate};
use hill_octant::{FourierTerm, Potential, Shooter};

#[test]
fn mathieu_monodromy_matches_rk4() {
    let p = mathieu();
    for lambda in [0.0, 5.0, 20.0] {
        let md = integrate(&p, lambda).unwrap();
        let r = rk4_monodromy(&p, lambda, 8192);
        let got = [md.theta_1, md.theta_prime_1, md.phi_1, md.phi_prime_1];
        for d in 0..4 {
            assert!((got[d] - r[d]).abs() < 1e-9, "λ={lambda} comp {d}: {} vs {}", got[d], r[d]);
        }
    }
}

#[test]
fn free_discriminant_is_cosine() {
    let p = Potential::zero();
    let ode = Shooter::new_ode(&p).unwrap();
    for i in 0..=82 {
        let lambda = -10.0 + 5.0 * i as f64;
        let expect = if lambda >= 0.0 { lambda.sqrt().cos() } else { (-lambda).sqrt().cosh() };
        let f = discriminant(&p, lambda).unwrap();
        assert!((f - expect).abs() < 1e-10, "{lambda}");
        let g = ode.at(lambda).unwrap().discriminant();
        assert!((g - expect).abs() < 1e-10, "ode {lambda}: {g} vs {expect}");
    }
}

#[test]
fn constant_potential_shifts_everything() {
    let c = 3.5;
    let bs = band_structure(&Potential::constant(c), 4).unwrap();
    assert!((bs.lambda0_plus - c).abs() < 1e-9);
    for g in &bs.gaps {
        let e = (PI * g.n as f64).powi(2) + c;
        assert!(g.closed && (g.lower - e).abs() < 1e-8 && (g.mu - e).abs() < 1e-8);
    }
}

#[test]
fn mathieu_edges_match_hill_matrix() {
    let p = mathieu();
    let bs = band_structure(&p, 4).unwrap();
    let (l0, gaps) = hill_edges(&p, 4);
    assert!(rel(bs.lambda0_plus, l0) < 1e-6);
    for (g, (lo, hi)) in bs.gaps.iter().zip(gaps) {
        assert!(rel(g.lower, lo) < 1e-6, "gap {} lower {} vs {lo}", g.n, g.lower);
        assert!(rel(g.upper, hi) < 1e-6, "gap {} upper {} vs {hi}", g.n, g.upper);
    }
}

#[test]
fn mathieu_dirichlet_and_neumann_match_galerkin() {
    let p = mathieu();
    let mu = dirichlet_eigs(&p, 4).unwrap();
    let gd = galerkin_dirichlet(&p, 256);
    for (a, b) in mu.iter().zip(&gd) {
        assert!(rel(*a, *b) < 1e-6, "{a} vs {b}");
    }
    let nu = neumann_eigs(&p, 4).unwrap();
    let gn = galerkin_neumann(&p, 256);
    for (a, b) in nu.iter().zip(&gn) {
        assert!(rel(*a, *b) < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn shifted_potential_galerkin_agrees() {
    let p = Potential::fourier(1.0, &[FourierTerm { k: 2, cos: -3.0, sin: 1.5 }]).unwrap().translate(0.2);
    let mu = dirichlet_eigs(&p, 3).unwrap();
    let gd = galerkin_dirichlet(&p, 256);
    for (a, b) in mu.iter().zip(&gd) {
        assert!(rel(*a, *b) < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn piecewise_edges_match_hill_matrix_loosely() {
    // Hill truncation converges slowly for jumps; only a coarse check.
    let p = Potential::from_json(r#"{"piecewise":[{"from":0.0,"to":0.5,"value":4.0},{"from":0.5,"to":1.0,"value":-4.0}]}"#)
        .unwrap();
    let bs = band_structure(&p, 3).unwrap();
    let (l0, gaps) = hill_edges(&p, 3);
    assert!((bs.lambda0_plus - l0).abs() < 1e-2);
    for (g, (lo, hi)) in bs.gaps.iter().zip(gaps) {
        assert!((g.lower - lo).abs() < 5e-2 && (g.upper - hi).abs() < 5e-2, "{g:?} vs {lo} {hi}");
    }
}

#[test]
fn random_corpus_matches_oracles() {
    for p in corpus(7, 5) {
        let bs = band_structure(&p, 4).unwrap();
        let (l0, gaps) = hill_edges(&p, 4);
        assert!(rel(bs.lambda0_plus, l0) < 1e-6);
        for (g, (lo, hi)) in bs.gaps.iter().zip(gaps) {
            assert!(rel(g.lower, lo) < 1e-6 && rel(g.upper, hi) < 1e-6, "{g:?} vs ({lo}, {hi})");
        }
        let gd = galerkin_dirichlet(&p, 256);
        for (g, b) in bs.gaps.iter().zip(&gd) {
            assert!(rel(g.mu, *b) < 1e-6);
        }
        let gn = galerkin_neumann(&p, 256);
        for (a, b) in bs.neumann.iter().zip(&gn) {
            assert!(rel(*a, *b) < 1e-6);
        }
    }
}
