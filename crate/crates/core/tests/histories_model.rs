use decohist_core::histories::*;
use decohist_core::{StateVector, C64};
use ndarray::{Array1, Array2};

fn small_model(d0: usize, seed: u64) -> ModelSpec {
    build_model(d0, seed).unwrap()
}

/// Dense `Π_{x_L}U ⋯ Π_{x_1}U ψ`, evaluated label by label.
fn naive_branch(u: &Array2<C64>, d0: usize, psi: &Array1<C64>, bits: &[u8]) -> Array1<C64> {
    let mut v = psi.clone();
    for &b in bits {
        v = u.dot(&v);
        for (i, z) in v.iter_mut().enumerate() {
            if (i < d0) != (b == 0) {
                *z = C64::new(0.0, 0.0);
            }
        }
    }
    v
}

fn max_diff(a: &Array1<C64>, b: ndarray::ArrayView1<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn default_parameters() {
    let m = small_model(200, 1);
    let expected = 0.5 / (15.0 * 600f64.sqrt());
    assert!((m.params().lambda - expected).abs() < 1e-15);
    assert!((m.params().lambda - 1.3608e-3).abs() < 1e-7);
    assert_eq!(m.d1(), 400);
}

#[test]
fn hamiltonian_structure() {
    let p = ModelParams::new(6, 3);
    let h = p.hamiltonian();
    let lam = p.lambda;
    for i in 0..18 {
        for j in 0..18 {
            assert_eq!(h[[i, j]], h[[j, i]]);
            let cross = (i < 6) != (j < 6);
            if cross {
                assert!((h[[i, j]].abs() - lam).abs() < 1e-15);
            } else if i != j {
                assert_eq!(h[[i, j]], 0.0);
            }
        }
    }
    // Evenly spaced diagonal blocks spanning [0, δε].
    for i in 0..6 {
        assert!((h[[i, i]] - 0.5 * i as f64 / 5.0).abs() < 1e-15);
    }
    assert_eq!(h[[6, 6]], 0.0);
    assert!((h[[17, 17]] - 0.5).abs() < 1e-15);
}

#[test]
fn eigenvectors_orthogonal() {
    let m = small_model(30, 2);
    let v = m.eigenvectors();
    let g = v.t().dot(v);
    let err = (&g - &Array2::<f64>::eye(90)).iter().map(|x| x.abs()).fold(0.0, f64::max);
    assert!(err < 1e-10);
}

#[test]
fn tau_is_dimension_independent() {
    let expected = 225.0 / std::f64::consts::PI;
    for d0 in [20, 200] {
        assert!((tau(&small_model(d0, 0)) - expected).abs() < 1e-9);
    }
    let m = ModelSpec::from_params(ModelParams::new(20, 0).with_lambda(2.0 * ModelParams::new(20, 0).lambda)).unwrap();
    assert!((tau(&m) - expected / 4.0).abs() < 1e-9);
}

#[test]
fn propagator_group_law_and_identity() {
    let m = small_model(20, 5);
    let psi = initial_state(&m, InitialKind::HaarGlobal, 9).unwrap();
    let same = m.propagator(0.0).apply(&psi);
    assert!(max_diff(&psi.coeffs().to_owned(), same.coeffs()) < 1e-12);
    let a = m.propagator(3.0).apply(&m.propagator(4.5).apply(&psi));
    let b = m.propagator(7.5).apply(&psi);
    assert!(max_diff(&a.coeffs().to_owned(), b.coeffs()) < 1e-8);
}

#[test]
fn unitarity_over_many_steps() {
    let m = small_model(20, 6);
    let t = tau(&m);
    let mut psi = StateVector::unnormalized(initial_state(&m, InitialKind::HaarGlobal, 1).unwrap().into_coeffs()).unwrap();
    let prop = m.propagator(t / 2.0);
    for _ in 0..200 {
        psi = prop.apply(&psi);
    }
    assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
}

#[test]
fn initial_state_kinds() {
    let m = small_model(20, 7);
    let h1 = initial_state(&m, InitialKind::HaarInH1, 3).unwrap();
    assert_eq!(block_populations(&m, &h1), (0.0, 1.0));
    let e = initial_state(&m, InitialKind::RandomEigenstate, 3).unwrap();
    let h = m.params().hamiltonian().mapv(|x| C64::new(x, 0.0));
    let hv = h.dot(&e.coeffs());
    let energy: C64 = e.coeffs().iter().zip(hv.iter()).map(|(a, b)| a.conj() * b).sum();
    let res = hv.iter().zip(e.coeffs().iter()).map(|(a, b)| (a - energy * b).norm_sqr()).sum::<f64>().sqrt();
    assert!(res < 1e-8);
}

#[test]
fn expectations_complete_and_start_in_h1() {
    let m = small_model(20, 8);
    let psi = initial_state(&m, InitialKind::HaarInH1, 2).unwrap();
    let rows = evolve_expectations(&m, &psi, &[0.0, 10.0, 100.0, 1000.0]).unwrap();
    assert!(rows[0].1.abs() < 1e-12 && (rows[0].2 - 1.0).abs() < 1e-12);
    for (_, p0, p1) in rows {
        assert!((p0 + p1 - 1.0).abs() < 1e-10);
    }
}

#[test]
fn full_tree_matches_naive_evaluation() {
    let m = small_model(8, 11);
    let dt = tau(&m) / 2.0;
    let psi = initial_state(&m, InitialKind::HaarGlobal, 4).unwrap();
    let set = HistorySet::full_tree(5, None).unwrap();
    let b = branch_states(&m, &psi, &set, dt).unwrap();
    let u = m.propagator(dt).matrix();
    let psi_c = psi.coeffs().to_owned();
    for (i, l) in set.labels().iter().enumerate() {
        let v = naive_branch(&u, m.d0(), &psi_c, l.bits());
        assert!(max_diff(&v, b.state(i)) < 1e-12, "label {l}");
    }
}

#[test]
fn full_tree_telescopes_to_global_state() {
    let m = small_model(10, 12);
    let dt = 8.0 * tau(&m);
    let psi = initial_state(&m, InitialKind::HaarInH1, 4).unwrap();
    for l in [1, 4, 7] {
        let set = HistorySet::full_tree(l, None).unwrap();
        let b = branch_states(&m, &psi, &set, dt).unwrap();
        let global = m.propagator(l as f64 * dt).apply(&psi);
        assert!(max_diff(&b.sum_states(), global.coeffs()) < 1e-8);
        let total: f64 = b.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-8);
    }
}

#[test]
fn single_step_weights_are_populations() {
    let m = small_model(15, 13);
    let dt = 3.0;
    let psi = initial_state(&m, InitialKind::HaarGlobal, 8).unwrap();
    let b = branch_states(&m, &psi, &HistorySet::full_tree(1, None).unwrap(), dt).unwrap();
    let (_, p0, p1) = evolve_expectations(&m, &psi, &[dt]).unwrap()[0];
    assert!((b.weights()[0] - p0).abs() < 1e-12);
    assert!((b.weights()[1] - p1).abs() < 1e-12);
}

#[test]
fn truncations_share_one_pass() {
    let m = small_model(10, 14);
    let dt = tau(&m) / 2.0;
    let psi = initial_state(&m, InitialKind::RandomEigenstate, 2).unwrap();
    let set = sample_history_set(12, 40, 77).unwrap();
    let lens = [1, 3, 7, 12];
    let multi = branch_states_multi(&m, &psi, &set, dt, &lens).unwrap();
    for (b, &l) in multi.iter().zip(&lens) {
        let direct = branch_states(&m, &psi, &set.truncate(l).unwrap(), dt).unwrap();
        assert_eq!(b.labels(), direct.labels());
        for i in 0..b.len() {
            assert!(max_diff(&b.state(i).to_owned(), direct.state(i)) < 1e-12);
        }
    }
}

#[test]
fn ndf_is_unit_diagonal_and_separates_final_bits() {
    let m = small_model(10, 15);
    let psi = initial_state(&m, InitialKind::HaarGlobal, 5).unwrap();
    let b = branch_states(&m, &psi, &HistorySet::full_tree(4, None).unwrap(), 10.0).unwrap();
    let g = ndf(&b).unwrap();
    let e = g.entries();
    for (i, x) in b.labels().iter().enumerate() {
        assert!((e[[i, i]].re - 1.0).abs() < 1e-10);
        for (j, y) in b.labels().iter().enumerate() {
            if x.final_bit() != y.final_bit() {
                assert!(e[[i, j]].norm() < 1e-10);
            }
        }
    }
    assert!(!dhc_check(&g, 1e-10));
    assert!(dhc_check(&decohist_core::ensembles::GramMatrix::identity(4), 0.0));
}

#[test]
fn null_histories_are_rejected_by_ndf() {
    // Uncoupled model starting in H1 never reaches H0.
    let m = ModelSpec::from_params(ModelParams::new(6, 1).with_lambda(0.0)).unwrap();
    let psi = initial_state(&m, InitialKind::HaarInH1, 1).unwrap();
    let b = branch_states(&m, &psi, &HistorySet::full_tree(3, None).unwrap(), 1.0).unwrap();
    let nulls: Vec<usize> = (0..b.len()).filter(|&i| b.is_null(i)).collect();
    assert_eq!(nulls.len(), 7);
    assert!(matches!(ndf(&b), Err(decohist_core::Error::InvalidBranch(_))));
    assert!(b.normalized(nulls[0]).is_none());
}

#[test]
fn conserved_model_is_decoherent_and_commuting() {
    let m = ModelSpec::from_params(ModelParams::new(6, 2).with_lambda(0.0)).unwrap();
    let psi = initial_state(&m, InitialKind::HaarGlobal, 1).unwrap();
    let b = branch_states(&m, &psi, &HistorySet::full_tree(4, None).unwrap(), 2.0).unwrap();
    let g = ndf(&b.without_null()).unwrap();
    assert!(dhc_check(&g, 1e-10));
    assert!(commutativity_check(&m, 2.0, 4, 1e-10).unwrap());
}

#[test]
fn generic_model_does_not_commute() {
    let m = small_model(10, 3);
    assert!(!commutativity_check(&m, tau(&m) / 2.0, 3, 1e-8).unwrap());
}

#[test]
fn commutativity_refuses_large_dense_problems() {
    let m = small_model(400, 3);
    assert!(matches!(commutativity_check(&m, 1.0, 2, 1e-8), Err(decohist_core::Error::TooLarge(_))));
}
