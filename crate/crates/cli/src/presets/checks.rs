//! Numerical identity checks on a small model, reported as a table.

use decohist_core::discrimination::sqrt_measurement;
use decohist_core::histories::{
    branch_states, dhc_check, dilation_model, markov_trajectory, markov_transition, petz_purities, HistorySet,
};
use decohist_core::linalg::max_abs_diff;
use decohist_core::seeds::derive_seed;
use decohist_core::C64;
use ndarray::Array2;

use super::{initial, model, Step};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::table::ResultTable;

pub fn properties(config: &ExperimentConfig, t: &mut ResultTable) -> Result<()> {
    let m = model(config, config.usize("d0")?)?;
    let length = config.usize("length")?;
    let step = Step::Eq;
    let dt = step.dt(&m);
    let psi = initial(config, &m, step.initial_kind())?;
    let prop = m.propagator(dt);

    // Summing every branch over both outcomes telescopes to U^L Ψ.
    let all = branch_states(&m, &psi, &HistorySet::full_tree(length, None)?, dt)?;
    let mut evolved = psi.clone();
    for _ in 0..length {
        evolved = prop.apply(&evolved);
    }
    let tele = (&all.sum_states() - &evolved.coeffs()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    t.set_summary("telescoping_err", tele);

    let mut state = psi.clone();
    let mut norm_err: f64 = 0.0;
    for _ in 0..config.usize("steps")? {
        state = prop.apply(&state);
        norm_err = norm_err.max((state.norm_sqr() - 1.0).abs());
    }
    t.set_summary("unitarity_state_err", norm_err);
    let u = prop.matrix();
    let uu = u.t().mapv(|z| z.conj()).dot(&u);
    let eye = Array2::from_diag_elem(m.dim(), C64::new(1.0, 0.0));
    t.set_summary("unitarity_matrix_err", max_abs_diff(uu.view(), eye.view()));

    let b = branch_states(&m, &psi, &HistorySet::full_tree(length, Some(0))?, dt)?;
    let live = b.non_null();
    let g = decohist_core::histories::ndf_subset(&b, &live)?;
    let root = sqrt_measurement(&g)?.sqrt_gram().to_owned();
    t.set_summary("sqrt_gram_err", max_abs_diff(root.dot(&root).view(), g.entries()));

    let labels: Vec<_> = live.iter().map(|&i| b.labels()[i].clone()).collect();
    let pur = petz_purities(&m, &labels, dt)?;
    let floor = 1.0 / m.d1() as f64;
    t.set_summary("petz_min_margin", pur.iter().map(|p| p - floor).fold(f64::INFINITY, f64::min));
    t.set_summary("petz_max_excess", pur.iter().map(|p| p - 1.0).fold(f64::NEG_INFINITY, f64::max));

    let tr = markov_transition(&m, dt, 64, derive_seed(config.seed, "markov"))?;
    let traj = markov_trajectory(&tr, config.usize("markov_length")?, [0.0, 1.0])?;
    let rows: Vec<Vec<f64>> = traj.iter().enumerate().map(|(k, p)| vec![k as f64, (p.iter().sum::<f64>() - 1.0).abs()]).collect();
    t.set_summary("markov_max_err", rows.iter().map(|r| r[1]).fold(0.0, f64::max));
    t.set_rows(&["step", "markov_mass_err"], &rows)?;

    let seed = derive_seed(config.seed, "dilation");
    let dil = dilation_model(2, 2, 3, seed, false)?;
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    t.set_summary("dilation_dhc", flag(dhc_check(&dil.history_states().ndf()?, 1e-10)));
    t.set_summary("dilation_commutes", flag(dil.commutativity_check(1e-8)?));
    t.set_summary("dilation_commuting_variant", flag(dilation_model(2, 2, 3, seed, true)?.commutativity_check(1e-8)?));
    Ok(())
}
