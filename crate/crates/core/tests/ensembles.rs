use decohist_core::ensembles::*;
use decohist_core::seeds::rng_from_seed;
use decohist_core::stats::{ks_statistic, mean};
use decohist_core::{DigitStream, Error, C64};
use ndarray::Array1;

fn mean_offdiag_sq(g: &GramMatrix) -> f64 {
    let e = g.entries();
    let n = g.n();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += e[[i, j]].norm_sqr();
        }
    }
    s / (n * (n - 1) / 2) as f64
}

#[test]
fn gaussian_single_entry_variance() {
    let mut rng = rng_from_seed(1);
    let xs: Vec<f64> = (0..10_000).map(|_| gaussian_vector(1, &mut rng).unwrap().norm_sqr()).collect();
    assert!((mean(&xs) - 1.0).abs() < 0.05);
}

#[test]
fn gaussian_norm_is_one_on_average() {
    let mut rng = rng_from_seed(2);
    for dim in [3, 40] {
        let xs: Vec<f64> = (0..10_000).map(|_| gaussian_vector(dim, &mut rng).unwrap().norm_sqr()).collect();
        // ‖ψ'‖² is Gamma(dim, 1/dim): variance 1/dim.
        let sigma = (1.0 / dim as f64 / xs.len() as f64).sqrt();
        assert!((mean(&xs) - 1.0).abs() < 3.0 * sigma);
    }
}

#[test]
fn norm_concentration_bound_holds() {
    let mut rng = rng_from_seed(3);
    let dim = 600;
    let draws = 5_000;
    let norms: Vec<f64> = (0..draws).map(|_| gaussian_vector(dim, &mut rng).unwrap().norm_sqr()).collect();
    for eps in [0.05, 0.1] {
        let freq = norms.iter().filter(|&&n| (n - 1.0).abs() > eps).count() as f64 / draws as f64;
        assert!(freq <= norm_concentration_bound(dim, eps), "eps {eps}: {freq}");
    }
    let b = norm_concentration_bound(6000, 0.1);
    assert!((b - 2.0 * (-0.01f64 * 1000.0).exp()).abs() < 1e-18);
}

#[test]
fn haar_fidelity_follows_beta_law() {
    let mut rng = rng_from_seed(4);
    let dim = 50;
    let chi = haar_state(dim, &mut rng).unwrap();
    let f2: Vec<f64> = (0..100_000).map(|_| haar_state(dim, &mut rng).unwrap().inner(&chi).norm_sqr()).collect();
    let ks = ks_statistic(&f2, |x| fidelity_sq_cdf(x, dim));
    assert!(ks < 0.01, "KS {ks}");
}

#[test]
fn haar_overlap_mean() {
    let mut rng = rng_from_seed(5);
    let chi = haar_state(100, &mut rng).unwrap();
    let xs: Vec<f64> = (0..20_000).map(|_| haar_state(100, &mut rng).unwrap().inner(&chi).norm_sqr()).collect();
    assert!((mean(&xs) * 100.0 - 1.0).abs() < 0.05);
}

#[test]
fn permutation_family_structure() {
    let f = permutation_family(400, 200, 6).unwrap();
    for m in f.members() {
        assert!((m.norm_sqr() - 1.0).abs() < 1e-12);
    }
    // Same multiset of moduli as the seed state.
    let sorted = |v: &StateVector| {
        let mut a: Vec<f64> = v.coeffs().iter().map(|z| z.norm()).collect();
        a.sort_by(f64::total_cmp);
        a
    };
    assert_eq!(sorted(&f.members()[0]), sorted(&f.members()[17]));
    let m = mean_offdiag_sq(&gram_matrix(&f).unwrap());
    assert!((m * 400.0 - 1.0).abs() < 0.2, "{m}");
}

#[test]
fn sign_family_structure() {
    let mut s = DigitStream::pi();
    let f = sign_family(400, 200, &mut s).unwrap();
    assert_eq!(s.cursor(), 80_000);
    let a = 1.0 / 20.0;
    assert!(f.members().iter().all(|m| m.coeffs().iter().all(|z| (z.norm() - a).abs() < 1e-15 && z.im == 0.0)));
    let g = gram_matrix(&f).unwrap();
    assert!(g.is_real());
    let m = mean_offdiag_sq(&g);
    assert!((m * 400.0 - 1.0).abs() < 0.2, "{m}");
    // Member j, coordinate x is bit j·dim + x.
    let bit = s.bit_at(3 * 400 + 7).unwrap();
    let c = f.members()[3].coeffs()[7].re;
    assert_eq!(c < 0.0, bit == 1);
}

#[test]
fn sign_family_underflow_on_short_file() {
    let mut s = DigitStream::from_bytes(vec![0xAA; 10]);
    assert!(matches!(sign_family(10, 9, &mut s), Err(Error::StreamUnderflow { .. })));
    assert!(sign_family(10, 8, &mut s).is_ok());
}

#[test]
fn mub_overlaps() {
    let d = 7;
    for a in 0..d * (d + 1) {
        let sa = mub_state(d, a).unwrap();
        for b in (a + 1)..d * (d + 1) {
            let ov = sa.inner(&mub_state(d, b).unwrap()).norm();
            if a / d == b / d {
                assert!(ov < 1e-10);
            } else {
                assert!((ov - 1.0 / (d as f64).sqrt()).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn mub_family_limits() {
    assert!(matches!(mub_family(499, 499 * 500 + 1, 0), Err(Error::ExhaustedDesign { .. })));
    assert!(matches!(mub_family(12, 3, 0), Err(Error::InvalidDimension(_))));
    let f = mub_family(11, 11 * 12, 3).unwrap();
    let g = gram_matrix(&f).unwrap();
    let fro: f64 = g.entries().iter().map(|z| z.norm_sqr()).sum();
    // Complete set: each state has overlap 1 with itself, 0 with its basis
    // partners and 1/d with the d² states of the other bases.
    let d = 11.0;
    let expected = d * (d + 1.0) * (1.0 + d);
    assert!((fro - expected).abs() < 1e-8);
}

#[test]
fn dirichlet_moments() {
    assert_eq!(dirichlet_weights(1, 0).unwrap().weights()[0], 1.0);
    let draws = 20_000;
    let mut w0 = Vec::with_capacity(draws);
    let mut w01 = Vec::with_capacity(draws);
    for s in 0..draws {
        let w = dirichlet_weights(10, s as u64).unwrap();
        w0.push(w.weights()[0]);
        w01.push(w.weights()[0] * w.weights()[1]);
    }
    // Dirichlet(1,…,1), n=10: Var w = 9/(100·11), Var(w0 w1) from the fourth moments.
    let sigma0 = (9.0 / 1100.0 / draws as f64).sqrt();
    assert!((mean(&w0) - 0.1).abs() < 3.0 * sigma0);
    let e_prod = 1.0 / 110.0;
    let e_sq = 4.0 / (10.0 * 11.0 * 12.0 * 13.0);
    let sigma01 = ((e_sq - e_prod * e_prod) / draws as f64).sqrt();
    assert!((mean(&w01) - e_prod).abs() < 3.0 * sigma01);
}

#[test]
fn gram_examples() {
    let e0 = StateVector::basis(3, 0).unwrap();
    let e1 = StateVector::basis(3, 1).unwrap();
    let fam = StateFamily::new(vec![e0.clone(), e1.clone()], Provenance::Haar, 0).unwrap();
    let g = gram_matrix(&fam).unwrap();
    assert_eq!(g.entries()[[0, 1]], C64::new(0.0, 0.0));
    // Two states with overlap 0.6.
    let b = StateVector::normalized(Array1::from(vec![C64::new(0.6, 0.0), C64::new(0.8, 0.0), C64::new(0.0, 0.0)])).unwrap();
    let g = gram_matrix(&StateFamily::new(vec![e0, b], Provenance::Haar, 0).unwrap()).unwrap();
    let ev = g.eigenvalues().unwrap();
    assert!((ev[0] * ev[1] - 0.64).abs() < 1e-12);
    let h = gram_matrix(&haar_family(30, 20, 1).unwrap()).unwrap();
    assert!((h.trace() - 20.0).abs() < 1e-12);
}

#[test]
fn families_regenerate_bit_identically() {
    let a = haar_family(50, 10, 9).unwrap();
    let b = haar_family(50, 10, 9).unwrap();
    assert_eq!(a.to_matrix(), b.to_matrix());
    assert_eq!(permutation_family(20, 5, 1).unwrap().to_matrix(), permutation_family(20, 5, 1).unwrap().to_matrix());
    assert_eq!(mub_family(13, 30, 2).unwrap().to_matrix(), mub_family(13, 30, 2).unwrap().to_matrix());
    let mut s1 = DigitStream::pi();
    let mut s2 = DigitStream::pi();
    assert_eq!(sign_family(16, 4, &mut s1).unwrap().to_matrix(), sign_family(16, 4, &mut s2).unwrap().to_matrix());
}

#[test]
fn wishart_single_entry_mean() {
    let xs: Vec<f64> = (0..10_000).map(|s| wishart_sample(1, 7, s).unwrap().entries()[[0, 0]].re).collect();
    assert!((mean(&xs) - 1.0).abs() < 0.05);
}

#[test]
fn wishart_spectrum_matches_mp() {
    let g = wishart_sample(500, 1000, 11).unwrap();
    let ev = g.eigenvalues().unwrap().to_vec();
    // Cumulative trapezoid of the closed-form density on a fine grid.
    let (lo, hi) = ((1.0 - 0.5f64.sqrt()).powi(2), (1.0 + 0.5f64.sqrt()).powi(2));
    let m = 200_000;
    let h = (hi - lo) / m as f64;
    let rho = |l: f64| ((hi - l).max(0.0) * (l - lo).max(0.0)).sqrt() / (2.0 * std::f64::consts::PI * 0.5 * l);
    let mut cum = vec![0.0; m + 1];
    for k in 1..=m {
        let (a, b) = (lo + (k - 1) as f64 * h, lo + k as f64 * h);
        cum[k] = cum[k - 1] + 0.5 * h * (rho(a) + rho(b));
    }
    let cdf = |x: f64| {
        if x <= lo {
            0.0
        } else if x >= hi {
            1.0
        } else {
            cum[(((x - lo) / h) as usize).min(m)]
        }
    };
    let ks = ks_statistic(&ev, cdf);
    assert!(ks < 0.02, "KS {ks}");
    let full = wishart_sample(400, 400, 12).unwrap().eigenvalues().unwrap();
    assert!(full[0] < 0.01 && (full[399] - 4.0).abs() < 0.3);
}
