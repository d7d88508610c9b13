mod common;

use std::f64::consts::PI;

use hill_octant::bands::BandSolver;
use hill_octant::{FourierTerm, Potential};
use proptest::prelude::*;

const GAPS: usize = 6;

fn three_modes() -> impl Strategy<Value = Potential> {
    proptest::collection::vec(-5.0f64..5.0, 6).prop_map(|c| {
        let terms: Vec<FourierTerm> = (0..3).map(|k| FourierTerm { k: k as u32 + 1, cos: c[2 * k], sin: c[2 * k + 1] }).collect();
        Potential::fourier(0.0, &terms).unwrap()
    })
}

fn norms_hold(p: &Potential, gaps: usize) -> Result<(), TestCaseError> {
    let bs = BandSolver::new(p).unwrap().structure(gaps, false, None).unwrap();
    let v = p.mean_zero().l2_norm();
    let xi = (0.25 * bs.gaps.iter().map(|g| g.length().powi(2)).sum::<f64>()).sqrt();
    prop_assert!(v <= 4.0 * xi * (1.0 + xi.cbrt()) + 1e-9, "|v| = {v}, |xi| = {xi}");
    prop_assert!(xi <= v * (1.0 + v).cbrt() + 1e-9, "|v| = {v}, |xi| = {xi}");
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn band_structure_invariants(p in three_modes()) {
        let solver = BandSolver::new(&p).unwrap();
        let bs = solver.structure(GAPS, true, None).unwrap();

        // λ_0^+ < λ_1^- ≤ λ_1^+ < λ_2^- ≤ ...
        let mut prev = bs.lambda0_plus;
        for g in &bs.gaps {
            prop_assert!(prev < g.lower, "gap {}: {} !< {}", g.n, prev, g.lower);
            prop_assert!(g.lower <= g.upper);
            prev = g.upper;
        }

        for n in 0..GAPS {
            let (a, b) = bs.band(n);
            prop_assert!(b - a <= PI * PI * (2 * n + 1) as f64 + 1e-9, "band {n} has width {}", b - a);
        }

        prop_assert!(bs.neumann[0] <= bs.lambda0_plus + 1e-9);
        for g in &bs.gaps {
            let slack = 1e-9 * g.upper.abs().max(1.0);
            prop_assert!(g.lower - slack <= g.mu && g.mu <= g.upper + slack, "mu_{} = {} outside gap", g.n, g.mu);
            let nu = bs.neumann[g.n];
            prop_assert!(g.lower - slack <= nu && nu <= g.upper + slack, "nu_{} = {} outside gap", g.n, nu);
            let lhs = g.xi.0 * g.xi.0 + g.xi.1 * g.xi.1;
            let rhs = 0.25 * g.length().powi(2);
            prop_assert!((lhs - rhs).abs() <= 1e-7 * rhs.max(1.0), "xi identity at gap {}: {lhs} vs {rhs}", g.n);
        }

        for &lam in &[bs.lambda0_plus - 5.0, bs.gap(1).mu, 0.5 * (bs.gap(2).lower + bs.gap(2).upper), bs.top + 3.0] {
            let md = solver.at(lam).unwrap();
            prop_assert!((md.wronskian() - 1.0).abs() < 1e-9, "Wronskian {} at {lam}", md.wronskian());
            let f = md.discriminant();
            prop_assert!(md.identity_defect().abs() < 1e-8 * (1.0 + f * f), "identity defect {} at {lam}", md.identity_defect());
        }
        let xs: Vec<f64> = (1..=8).map(|i| i as f64 / 9.0).collect();
        for w in solver.shooter().wronskian_path(bs.gap(1).upper + 1.0, &xs).unwrap() {
            prop_assert!((w - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn norm_estimates(p in three_modes()) {
        norms_hold(&p, 12)?;
    }
}

#[test]
fn norm_estimates_on_fixed_corpus() {
    let mut pots = common::corpus(11, 20);
    pots.push(common::mathieu());
    pots.push(hill_octant::designer::condition_p_potential(1.0, 0.1, 0.05).unwrap());
    for p in &pots {
        norms_hold(p, 16).unwrap();
    }
}
