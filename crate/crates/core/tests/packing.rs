use decohist_core::packing::*;
use decohist_core::Error;

#[test]
fn bound_examples() {
    let b = lower_bounds(101, 0.3).unwrap();
    assert!((b.geometric_approx - 9f64.exp()).abs() < 1e-9);
    assert!((b.geometric_approx - 8103.08).abs() < 0.01);
    let z = lower_bounds(40, 0.0).unwrap();
    assert_eq!(z.geometric_exact, 1.0);
    assert!(matches!(lower_bounds(10, 1.0), Err(Error::InvalidInput(_))));
}

#[test]
fn exact_bound_matches_trigonometric_form() {
    for (d, eps) in [(2, 0.5), (30, 0.2), (300, 0.05)] {
        let b = lower_bounds(d, eps).unwrap();
        let direct = eps.acos().sin().powi(-(2 * d as i32 - 2));
        assert!((b.geometric_exact / direct - 1.0).abs() < 1e-10);
    }
}

#[test]
fn probabilistic_crossover() {
    for d in [10usize, 101, 1000] {
        let threshold = (2f64.ln() / (d - 1) as f64).sqrt();
        let below = lower_bounds(d, 0.98 * threshold).unwrap();
        let above = lower_bounds(d, 1.02 * threshold).unwrap();
        assert!(below.probabilistic > below.geometric_approx);
        assert!(above.probabilistic < above.geometric_approx);
    }
}

#[test]
fn bounds_are_at_least_one_and_ordered() {
    for d in [2usize, 50, 400] {
        for k in 0..20 {
            let eps = k as f64 * 0.045;
            let b = lower_bounds(d, eps).unwrap();
            assert!(b.geometric_exact >= 1.0 && b.geometric_approx >= 1.0 && b.probabilistic >= 1.0);
            if eps <= 0.3 {
                assert!(b.geometric_exact >= 0.9 * b.geometric_approx);
            }
            if eps <= 0.2 && d >= 50 {
                assert!(b.geometric_exact >= b.geometric_approx);
            }
        }
    }
}

#[test]
fn greedy_beats_probabilistic_bound() {
    let w = greedy_pack(30, 0.5, 100_000, 1).unwrap();
    let bound = lower_bounds(30, 0.5).unwrap().probabilistic;
    assert!((bound - 53.0).abs() < 1.0);
    assert!(w.achieved as f64 >= bound, "achieved {}", w.achieved);
    assert_eq!(w.kept.dim(), (30, w.achieved));
    assert!(max_pairwise_overlap(&w.kept) <= 0.5 + 1e-12);
}

#[test]
fn orthogonality_caps_the_count() {
    let w = greedy_pack(4, 0.0, 1000, 2).unwrap();
    assert!(w.achieved <= 4);
    assert!(greedy_pack(4, 0.1, 0, 2).is_err());
}

#[test]
fn greedy_monotone_in_epsilon() {
    let counts: Vec<usize> = [0.2, 0.3, 0.4, 0.5, 0.6].iter().map(|&e| greedy_pack(20, e, 5000, 9).unwrap().achieved).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
}
