use decohist_core::discrimination::*;
use decohist_core::ensembles::{gaussian_family, gram_matrix, haar_family};
use decohist_core::histories::*;
use decohist_core::linalg::{adjoint_dot, max_abs_diff};
use decohist_core::rmt::{mp_expectation, MpLaw, DEFAULT_TOL};
use decohist_core::{GramMatrix, StateVector, WeightVector, C64};
use ndarray::Array2;
use proptest::prelude::*;

fn permuted(g: &GramMatrix, perm: &[usize]) -> GramMatrix {
    let e = g.entries();
    GramMatrix::from_entries(Array2::from_shape_fn((g.n(), g.n()), |(i, j)| e[[perm[i], perm[j]]])).unwrap()
}

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut decohist_core::seeds::rng_from_seed(seed));
    p
}

fn small_model_ndf(d0: usize, seed: u64, l: usize) -> (BranchStates, GramMatrix) {
    let m = build_model(d0, seed).unwrap();
    let psi = initial_state(&m, InitialKind::HaarGlobal, seed).unwrap();
    let b = branch_states(&m, &psi, &HistorySet::full_tree(l, None).unwrap(), tau(&m)).unwrap();
    let g = ndf(&b).unwrap();
    (b, g)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn gram_is_psd(d in 2usize..30, n in 1usize..40, seed in any::<u64>()) {
        let g = gram_matrix(&gaussian_family(d, n, seed).unwrap()).unwrap();
        let ev = g.eigenvalues().unwrap();
        prop_assert!(ev[0] >= -1e-10 * g.trace().max(1.0));
    }

    #[test]
    fn sqrt_gram_squares_back(d in 4usize..40, frac in 0.1f64..1.0, seed in any::<u64>()) {
        let n = ((frac * d as f64) as usize).max(1);
        let fam = haar_family(d, n, seed).unwrap();
        let g = gram_matrix(&fam).unwrap();
        if g.eigenvalues().unwrap()[0] <= 1e-6 {
            return Ok(());
        }
        let sm = sqrt_measurement(&g).unwrap();
        let s = sm.sqrt_gram().to_owned();
        prop_assert!(max_abs_diff(s.dot(&s).view(), g.entries()) < 1e-8);
        let r = sm.records(&fam);
        let eye = Array2::<f64>::eye(n).mapv(|x| C64::new(x, 0.0));
        prop_assert!(max_abs_diff(adjoint_dot(r.view(), r.view()).view(), eye.view()) < 1e-8);
        let (p_un, det_root) = unambiguous_bounds(&g).unwrap();
        prop_assert!(p_un <= det_root + 1e-12 && det_root <= 1.0 + 1e-12);
    }

    #[test]
    fn slp_never_beats_sqrt_measurement(d in 6usize..40, frac in 0.2f64..1.0, seed in any::<u64>()) {
        let n = ((frac * d as f64) as usize).max(2);
        let fam = haar_family(d, n, seed).unwrap();
        let g = gram_matrix(&fam).unwrap();
        if g.eigenvalues().unwrap()[0] <= 1e-6 {
            return Ok(());
        }
        let w = WeightVector::uniform(n).unwrap();
        let psi = universal_state(&fam, &w).unwrap();
        let sol = slp_solve(&g, &fam, &psi, &w).unwrap();
        prop_assert!(sol.success_slp <= sol.success_qsd + 1e-8);
        prop_assert!((sol.success_qsd - sol.success_slp).abs() <= sol.gap_bound + 1e-8);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&sol.fidelity));
    }

    #[test]
    fn joint_table_marginals(d in 4usize..30, n in 2usize..20, seed in any::<u64>()) {
        let g = gram_matrix(&haar_family(d.max(n), n, seed).unwrap()).unwrap();
        let w = decohist_core::ensembles::dirichlet_weights(n, seed).unwrap();
        let t = joint_table(&g, &w).unwrap();
        let total: f64 = t.entries().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        for (i, r) in t.entries().rows().into_iter().enumerate() {
            prop_assert!((r.sum() - t.row_marginal()[i]).abs() < 1e-12);
        }
        prop_assert!(mutual_information(&t) >= -1e-12);
    }

    #[test]
    fn mp_measure_has_unit_mass(gamma in 0.01f64..1.0) {
        let law = MpLaw::new(gamma).unwrap();
        prop_assert!((mp_expectation(|_| 1.0, law, DEFAULT_TOL).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn markov_conserves_probability(a in 0.0f64..1.0, b in 0.0f64..1.0, p in 0.0f64..1.0, l in 1usize..60) {
        let t = [[1.0 - a, b], [a, 1.0 - b]];
        for row in markov_trajectory(&t, l, [p, 1.0 - p]).unwrap() {
            let s: f64 = row.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn bernoulli_is_normalized(l in 0usize..200, p in 0.0f64..=1.0) {
        let s: f64 = bernoulli_distribution(l, p).unwrap().iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unitarity_over_two_hundred_steps(d0 in 3usize..15, seed in any::<u64>(), dt in 0.1f64..200.0) {
        let m = build_model(d0, seed).unwrap();
        let prop = m.propagator(dt);
        let mut psi = initial_state(&m, InitialKind::HaarGlobal, seed).unwrap();
        for _ in 0..200 {
            psi = prop.apply(&psi);
        }
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn histories_telescope(d0 in 3usize..10, seed in any::<u64>(), l in 1usize..7, dt in 1.0f64..300.0) {
        let m = build_model(d0, seed).unwrap();
        let psi = initial_state(&m, InitialKind::HaarInH1, seed).unwrap();
        let b = branch_states(&m, &psi, &HistorySet::full_tree(l, None).unwrap(), dt).unwrap();
        let global = m.propagator(l as f64 * dt).apply(&psi);
        let diff = b.sum_states().iter().zip(global.coeffs().iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-8);
    }

    #[test]
    fn truncation_is_prefix_consistent(bits in prop::collection::vec(0u8..2, 1..40), cut in 1usize..40) {
        let x = HistoryLabel::new(bits.clone()).unwrap();
        let cut = cut.min(bits.len());
        let t = x.truncate(cut).unwrap();
        prop_assert_eq!(&t.bits()[..cut - 1], &bits[..cut - 1]);
        prop_assert_eq!(t.final_bit(), 0);
        for inner in 1..=cut {
            prop_assert_eq!(t.truncate(inner).unwrap(), x.truncate(inner).unwrap());
        }
        let s: HistoryLabel = x.to_string().parse().unwrap();
        prop_assert_eq!(s, x);
    }

    #[test]
    fn truncated_branches_match_direct_runs(d0 in 3usize..8, seed in any::<u64>(), l in 5usize..9) {
        let m = build_model(d0, seed).unwrap();
        let psi = initial_state(&m, InitialKind::HaarGlobal, seed).unwrap();
        let set = sample_history_set(l, 10, seed).unwrap();
        let dt = tau(&m) / 2.0;
        let lens: Vec<usize> = (1..=l).collect();
        let multi = branch_states_multi(&m, &psi, &set, dt, &lens).unwrap();
        for (b, &k) in multi.iter().zip(&lens) {
            let direct = branch_states(&m, &psi, &set.truncate(k).unwrap(), dt).unwrap();
            prop_assert!(max_abs_diff(b.states().view(), direct.states().view()) < 1e-12);
        }
    }

    #[test]
    fn petz_purity_bounds(d0 in 3usize..8, seed in any::<u64>(), bits in prop::collection::vec(0u8..2, 1..5)) {
        let m = build_model(d0, seed).unwrap();
        let x = HistoryLabel::new(bits).unwrap();
        if let Ok(p) = petz_purity(&m, &x, tau(&m) / 2.0) {
            prop_assert!(p >= 1.0 / m.d1() as f64 - 1e-12 && p <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn summaries_are_permutation_invariant(d0 in 3usize..8, seed in any::<u64>(), l in 2usize..5) {
        let (b, g) = small_model_ndf(d0, seed, l);
        let perm = permutation(g.n(), seed);
        let gp = permuted(&g, &perm);
        let s = decoherence_summary(&g).unwrap();
        let sp = decoherence_summary(&gp).unwrap();
        prop_assert!((s.g_bar - sp.g_bar).abs() < 1e-12 && s.g_max == sp.g_max);
        prop_assert!((inverse_snr(&g).unwrap() - inverse_snr(&gp).unwrap()).abs() < 1e-10);
        let labels: Vec<HistoryLabel> = perm.iter().map(|&i| b.labels()[i].clone()).collect();
        let h = heatmap_nn(&g, b.labels()).unwrap();
        let hp = heatmap_nn(&gp, &labels).unwrap();
        prop_assert!(h.mean.iter().zip(hp.mean.iter()).all(|(x, y)| (x - y).abs() < 1e-12));
        prop_assert_eq!(h.max, hp.max);
    }

    #[test]
    fn single_bin_averages_everything(xs in prop::collection::vec(0.01f64..100.0, 1..50), log_x in any::<bool>()) {
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let bins = binned_correlation(&xs, &ys, 1, log_x).unwrap();
        prop_assert_eq!(bins.len(), 1);
        prop_assert_eq!(bins[0].count, xs.len());
        let m = ys.iter().sum::<f64>() / ys.len() as f64;
        prop_assert!((bins[0].mean_y.unwrap() - m).abs() < 1e-12);
    }

    #[test]
    fn inhomogeneous_states_partition_the_tree(d0 in 3usize..8, seed in any::<u64>(), l in 1usize..7) {
        let m = build_model(d0, seed).unwrap();
        let psi = initial_state(&m, InitialKind::RandomEigenstate, seed).unwrap();
        let dt = tau(&m) / 2.0;
        let b = branch_states(&m, &psi, &HistorySet::full_tree(l, None).unwrap(), dt).unwrap();
        let fam = inhomogeneous_states(&b, l).unwrap();
        let direct = inhomogeneous_states_direct(&m, &psi, l, dt).unwrap();
        prop_assert!(max_abs_diff(fam.states().view(), direct.states().view()) < 1e-10);
        let global = m.propagator(l as f64 * dt).apply(&psi);
        let diff = fam.sum_states().iter().zip(global.coeffs().iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-8);
    }

    #[test]
    fn subset_filter_picks_extremes(values in prop::collection::vec(-10.0f64..10.0, 1..60), frac in 0.01f64..=1.0) {
        let low = subset_filter(&values, frac, Direction::Lowest).unwrap();
        prop_assert_eq!(low.len(), (frac * values.len() as f64).floor() as usize);
        let max_in = low.iter().map(|&i| values[i]).fold(f64::NEG_INFINITY, f64::max);
        let outside_min = (0..values.len()).filter(|i| !low.contains(i)).map(|i| values[i]).fold(f64::INFINITY, f64::min);
        prop_assert!(low.is_empty() || max_in <= outside_min);
    }
}

#[test]
fn dilation_counterexample() {
    let m = dilation_model(2, 2, 3, 5, false).unwrap();
    let g = m.history_states().ndf().unwrap();
    assert!(dhc_check(&g, 1e-10));
    assert!(!m.commutativity_check(1e-8).unwrap());
    let c = dilation_model(2, 2, 3, 5, true).unwrap();
    assert!(c.commutativity_check(1e-8).unwrap());
}

#[test]
fn normalized_state_round_trip() {
    let s = StateVector::basis(4, 2).unwrap();
    assert!(localization(&s).is_ok());
}
