use hill_octant::bands::band_structure;
use hill_octant::cluster::{merge, minkowski_sum, set_distance};
use hill_octant::halfsolid::{half_solid_spectrum, verify_sqrt_rate, wronskian};
use hill_octant::Potential;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn moderate() -> Potential {
    Potential::from_coefficients(&[20.0, 5.0], &[0.0, 3.0]).unwrap().translate(0.3)
}

#[test]
fn rate_fit_on_moderate_gap() {
    let p = moderate();
    assert_eq!(band_structure(&p, 1).unwrap().gap(1).sign, 1);
    let f = verify_sqrt_rate(&p, 1, &[1e4, 1e5, 1e6, 1e7, 1e8]).unwrap();
    assert!((f.slope + 0.5).abs() < 0.05, "slope {}", f.slope);
    assert!((f.constant / f.c_direct - 1.0).abs() < 0.05, "{} vs {}", f.constant, f.c_direct);
    // μ(τ) approaches μ from inside the gap
    let bs = band_structure(&p, 1).unwrap();
    for (_, e) in &f.points {
        assert!(*e > bs.gap(1).lower && *e < bs.gap(1).upper);
    }
}

#[test]
fn junction_eigenvalues_are_wronskian_zeros() {
    let p = moderate();
    for tau in [30.0, 300.0, 3000.0] {
        let hs = half_solid_spectrum(&p, tau, 3).unwrap();
        for &(j, e) in &hs.eigenvalues {
            let w = wronskian(&p, tau, e, j).unwrap();
            assert!(w.abs() < 1e-8, "tau {tau} gap {j}: w = {w}");
            assert!(hs.ac_bands.iter().all(|(a, b)| e < *a || e > *b));
        }
    }
}

fn random_set(rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let k = rng.gen_range(1..5);
    merge(
        (0..k)
            .map(|_| {
                let a = rng.gen_range(-3.0..3.0);
                (a, a + rng.gen_range(0.0..1.0))
            })
            .collect(),
        0.0,
    )
}

fn contains(set: &[(f64, f64)], x: f64, tol: f64) -> bool {
    set.iter().any(|(a, b)| x >= a - tol && x <= b + tol)
}

#[test]
fn minkowski_sum_matches_dense_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let step = 1e-3;
    for _ in 0..50 {
        let (a, b) = (random_set(&mut rng), random_set(&mut rng));
        let sum = minkowski_sum(&a, &b);
        let pts = |s: &[(f64, f64)]| -> Vec<f64> {
            s.iter().flat_map(|&(lo, hi)| (0..=((hi - lo) / step) as usize).map(move |i| lo + i as f64 * step).chain([hi])).collect()
        };
        let (pa, pb) = (pts(&a), pts(&b));
        for x in &pa {
            for y in pb.iter().step_by(7) {
                assert!(contains(&sum, x + y, 1e-12));
            }
        }
        // every point of the sum is reached by a sampled pair
        for z in pts(&sum) {
            assert!(pa.iter().any(|x| contains(&b, z - x, step)), "{z} not reached");
        }
        let d = set_distance(&a, &b);
        let brute = pa.iter().flat_map(|x| pb.iter().map(move |y| (x - y).abs())).fold(f64::INFINITY, f64::min);
        assert!((d - brute).abs() <= step, "{d} vs {brute}");
    }
}
