//! Presets over the two-block model and its histories.

use decohist_core::histories::{
    block_populations, branch_localizations, branch_states, decoherence_summary, evolve_expectations, hamming as label_hamming,
    heatmap_nn, inhomogeneous_states_direct, inverse_snr, markov_distribution, markov_transition, ndf_subset, n_profile,
    off_diagonal_magnitudes, petz_purities, sample_history_set, scaling_fit, stationary_distribution, subset_filter, tau,
    bernoulli_distribution, binned_correlation, decoherent_window, total_variation, Direction, InitialKind,
};
use decohist_core::rmt::mp_fit;
use decohist_core::seeds::derive_seed;
use decohist_core::{BranchStates, GramMatrix, HistorySet};

use super::{ensure_fits, initial, model, pearson, Step};
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::table::ResultTable;

pub fn relaxation(config: &ExperimentConfig, t: &mut ResultTable) -> Result<()> {
    let m = model(config, config.usize("d0")?)?;
    let step = Step::from_config(config)?;
    let psi = initial(config, &m, step.initial_kind())?;
    let steps = config.usize("steps")?.max(1);
    let t_max = config.f64("t_max_tau")?;
    let tau = tau(&m);
    let mut times: Vec<f64> = (0..=steps).map(|k| k as f64 * t_max / steps as f64 * tau).collect();
    times.push(8.0 * tau);
    let mut ev = evolve_expectations(&m, &psi, &times)?;
    let at_eight = ev.pop().expect("8τ was appended");
    let rows: Vec<Vec<f64>> = ev.iter().map(|&(s, p0, p1)| vec![s, s / tau, p0, p1]).collect();
    t.set_rows(&["t", "t_over_tau", "p0", "p1"], &rows)?;
    t.set_summary("tau", tau);
    t.set_summary("p0_at_8tau", at_eight.1);
    let late: Vec<f64> = rows.iter().filter(|r| r[1] >= 5.0).map(|r| r[2]).collect();
    t.set_summary("p0_late_mean", if late.is_empty() { f64::NAN } else { late.iter().sum::<f64>() / late.len() as f64 });
    Ok(())
}

struct Branches {
    branches: BranchStates,
    /// Indices of non-null branches.
    live: Vec<usize>,
    g: GramMatrix,
}

fn full_tree_branches(config: &ExperimentConfig, d0: usize, length: usize) -> Result<Branches> {
    let set = HistorySet::full_tree(length, Some(0))?;
    branches_for(config, d0, &set)
}

fn branches_for(config: &ExperimentConfig, d0: usize, set: &HistorySet) -> Result<Branches> {
    let m = model(config, d0)?;
    ensure_fits(16.0 * m.dim() as f64 * set.len() as f64 * 4.0, &format!("{} branch states of dimension {}", set.len(), m.dim()))?;
    let step = Step::from_config(config)?;
    let psi = initial(config, &m, step.initial_kind())?;
    let branches = branch_states(&m, &psi, set, step.dt(&m))?;
    let live = branches.non_null();
    if live.len() < 3 {
        return Err(CliError::Core(decohist_core::Error::NullHistory(format!(
            "only {} of {} histories carry weight",
            live.len(),
            branches.len()
        ))));
    }
    let g = ndf_subset(&branches, &live)?;
    Ok(Branches { branches, live, g })
}

/// Mean `|G_{x,x'}|` over `x' ≠ x` for each history.
fn row_means(g: &GramMatrix) -> Vec<f64> {
    let e = g.entries();
    let n = g.n();
    (0..n).map(|i| (0..n).filter(|&j| j != i).map(|j| e[[i, j]].norm()).sum::<f64>() / (n - 1) as f64).collect()
}

fn fit_or_nan(dims: &[f64], values: &[f64]) -> f64 {
    scaling_fit(dims, values).map_or(f64::NAN, |f| f.alpha)
}

pub fn ndf_scaling(config: &ExperimentConfig, t: &mut ResultTable) -> Result<()> {
    let d0s = config.usize_list("d0s")?;
    let length = config.usize("length")?;
    let mut rows = Vec::new();
    let mut last = None;
    for &d0 in &d0s {
        let b = full_tree_branches(config, d0, length)?;
        let s = decoherence_summary(&b.g)?;
        rows.push(vec![d0 as f64, 3.0 * d0 as f64, b.branches.len() as f64, b.live.len() as f64, s.g_bar, s.g_max]);
        last = Some((d0, b.g));
    }
    t.set_rows(&["d0", "dim", "histories", "non_null", "g_bar", "g_max"], &rows)?;
    let dims: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let gbar: Vec<f64> = rows.iter().map(|r| r[4]).collect();
    let gmax: Vec<f64> = rows.iter().map(|r| r[5]).collect();
    if let Ok(f) = scaling_fit(&dims, &gbar) {
        t.set_summary("alpha_bar", f.alpha);
        t.set_summary("alpha_bar_r2", f.r_squared);
    }
    t.set_summary("alpha_max", fit_or_nan(&dims, &gmax));
    if let Some((d0, g)) = last {
        let ev = g.eigenvalues()?.to_vec();
        let fit = mp_fit(&ev, g.n())?;
        t.set_summary("d_eff", fit.d_eff);
        t.set_summary("d_eff_ratio", fit.d_eff / d0 as f64);
        t.set_summary("gamma_eff", fit.gamma_eff);
    }
    Ok(())
}

pub fn localization(config: &ExperimentConfig, t: &mut ResultTable) -> Result<()> {
    let d0s = config.usize_list("d0s")?;
    let length = config.usize("length")?;
    let count = config.usize("count")?;
    let fraction = config.f64("fraction")?;
    let bins = config.usize("bins")?;
    let set = sample_history_set(length, count, derive_seed(config.seed, "histories"))?;
    let mut rows = Vec::new();
    let mut per: Vec<[f64; 6]> = Vec::new();
    for &d0 in &d0s {
        let b = branches_for(config, d0, &set)?;
        let all = decoherence_summary(&b.g)?;
        let loc: Vec<f64> = branch_localizations(&b.branches)
            .into_iter()
            .enumerate()
            .filter(|(i, _)| b.live.binary_search(i).is_ok())
            .map(|(_, v)| v.expect("live branches have a localization"))
            .collect();
        let pick = |dir| -> Result<_> {
            let sub: Vec<usize> = subset_filter(&loc, fraction, dir)?.into_iter().map(|k| b.live[k]).collect();
            Ok(decoherence_summary(&ndf_subset(&b.branches, &sub)?)?)
        };
        let low = pick(Direction::Lowest)?;
        let high = pick(Direction::Highest)?;
        per.push([d0 as f64, all.g_bar, all.g_max, low.g_bar, low.g_max, high.g_bar]);
        for (name, v) in [
            ("g_bar", all.g_bar),
            ("g_max", all.g_max),
            ("g_bar_low_loc", low.g_bar),
            ("g_max_low_loc", low.g_max),
            ("g_bar_high_loc", high.g_bar),
        ] {
            t.set_summary(&format!("{name}_d0_{d0}"), v);
        }
        t.set_summary(&format!("non_null_d0_{d0}"), b.live.len() as f64);
        for (k, bin) in binned_correlation(&loc, &row_means(&b.g), bins, true)?.into_iter().enumerate() {
            rows.push(vec![
                d0 as f64,
                k as f64,
                bin.center,
                bin.count as f64,
                bin.mean_x.unwrap_or(f64::NAN),
                bin.mean_y.unwrap_or(f64::NAN),
            ]);
        }
    }
    t.set_rows(&["d0", "bin", "center", "count", "mean_localization", "mean_row_decoherence"], &rows)?;
    let dims: Vec<f64> = per.iter().map(|p| p[0]).collect();
    let col = |k: usize| per.iter().map(|p| p[k]).collect::<Vec<f64>>();
    t.set_summary("alpha_bar", fit_or_nan(&dims, &col(1)));
    t.set_summary("alpha_max", fit_or_nan(&dims, &col(2)));
    t.set_summary("alpha_bar_low_loc", fit_or_nan(&dims, &col(3)));
    t.set_summary("alpha_max_low_loc", fit_or_nan(&dims, &col(4)));
    t.set_summary("alpha_bar_high_loc", fit_or_nan(&dims, &col(5)));
    Ok(())
}

pub fn petz(config: &ExperimentConfig, t: &mut ResultTable) -> Result<()> {
    let d0 = config.usize("d0")?;
    let b = full_tree_branches(config, d0, config.usize("length")?)?;
    let m = model(config, d0)?;
    let dt = Step::from_config(config)?.dt(&m);
    let live = b.branches.select(&b.live);
    let purity = petz_purities(&m, live.labels(), dt)?;
    let prof = n_profile(&live, Some(&purity))?;
    let rows: Vec<Vec<f64>> = (0..prof.count.len())
        .map(|n| {
            vec![
                n as f64,
                prof.count[n] as f64,
                prof.weight[n],
                prof.localization[n].unwrap_or(f64::NAN),
                prof.purity[n].unwrap_or(f64::NAN),
            ]
        })
        .collect();
    t.set_rows(&["n", "count", "weight", "localization", "purity"], &rows)?;
    t.set_summary("n_bar", prof.n_bar);
    t.set_summary("purity_vs_row_decoherence", pearson(&purity, &row_means(&b.g)));
    let loc: Vec<f64> = branch_localizations(&live).into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();
    t.set_summary("purity_vs_localization", pearson(&purity, &loc));
    Ok(())
}

pub fn hamming(config: &ExperimentConfig, t: &mut ResultTable) -> Result<()> {
    let length = config.usize("length")?;
    let b = full_tree_branches(config, config.usize("d0")?, length)?;
    let labels: Vec<_> = b.live.iter().map(|&i| &b.branches.labels()[i]).collect();
    let e = b.g.entries();
    let mut sum = vec![0.0; length + 1];
    let mut max = vec![0.0f64; length + 1];
    let mut count = vec![0usize; length + 1];
    for i in 0..labels.len() {
        for j in (i + 1)..labels.len() {
            let h = label_hamming(labels[i], labels[j])?;
            let v = e[[i, j]].norm();
            sum[h] += v;
            max[h] = max[h].max(v);
            count[h] += 1;
        }
    }
    let rows: Vec<Vec<f64>> = (1..=length)
        .filter(|&h| count[h] > 0)
        .map(|h| vec![h as f64, count[h] as f64, sum[h] / count[h] as f64, max[h]])
        .collect();
    t.set_rows(&["distance", "pairs", "mean_abs_g", "max_abs_g"], &rows)?;
    if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
        t.set_summary("mean_abs_g_nearest", first[2]);
        t.set_summary("mean_abs_g_farthest", last[2]);
    }
    Ok(())
}

pub fn heatmap(config: &ExperimentConfig, t: &mut ResultTable) -> Result<()> {
    let length = config.usize("length")?;
    let b = full_tree_branches(config, config.usize("d0")?, length)?;
    let labels: Vec<_> = b.live.iter().map(|&i| b.branches.labels()[i].clone()).collect();
    let h = heatmap_nn(&b.g, &labels)?;
    let top = length.saturating_sub(1);
    let (lo, hi) = (length as f64 / 4.0, 3.0 * length as f64 / 4.0);
    let mut rows = Vec::new();
    let (mut edge, mut centre) = (Vec::new(), Vec::new());
    for ((n, n2), &mean) in h.mean.indexed_iter() {
        rows.push(vec![n as f64, n2 as f64, mean, h.max[[n, n2]]]);
        if n > top || n2 > top || mean == 0.0 {
            continue;
        }
        if n == 0 || n2 == 0 || n == top || n2 == top {
            edge.push(mean);
        } else if (lo..=hi).contains(&(n as f64)) && (lo..=hi).contains(&(n2 as f64)) {
            centre.push(mean);
        }
    }
    t.set_rows(&["n", "n_prime", "mean_abs_g", "max_abs_g"], &rows)?;
    let avg = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    t.set_summary("edge_mean", avg(&edge));
    t.set_summary("centre_mean", avg(&centre));
    Ok(())
}

pub fn born(config: &ExperimentConfig, t: &mut ResultTable) -> Result<()> {
    let m = model(config, config.usize("d0")?)?;
    let length = config.usize("length")?;
    let step = Step::from_config(config)?;
    // The equilibrium comparison starts from a state spread over both blocks.
    let kind = if step == Step::Neq { InitialKind::RandomEigenstate } else { InitialKind::HaarGlobal };
    let psi = initial(config, &m, kind)?;
    let dt = step.dt(&m);
    let fam = inhomogeneous_states_direct(&m, &psi, length, dt)?;
    let total: f64 = fam.weights().iter().sum();
    let q: Vec<f64> = fam.weights().iter().map(|w| w / total).collect();
    let g_max = fam.g_max()?;
    let tr = markov_transition(&m, dt, config.usize("markov_samples")?, derive_seed(config.seed, "markov"))?;
    let (p0, p1) = block_populations(&m, &psi);
    let p_markov = markov_distribution(&tr, length, [p0 / (p0 + p1), p1 / (p0 + p1)])?;
    let pi = stationary_distribution(&tr)?;
    let p_bern = bernoulli_distribution(length, m.d1() as f64 / m.dim() as f64)?;
    let threshold = config.f64("threshold")?;
    let window = decoherent_window(&g_max, threshold);
    let rows: Vec<Vec<f64>> = (0..=length)
        .map(|n| {
            let inside = if window.binary_search(&n).is_ok() { 1.0 } else { 0.0 };
            vec![n as f64, g_max[n].unwrap_or(f64::NAN), q[n], p_markov[n], p_bern[n], inside]
        })
        .collect();
    t.set_rows(&["n", "g_max", "q", "p_markov", "p_bernoulli", "in_window"], &rows)?;
    t.set_summary("tv_window", total_variation(&q, &p_markov, &window)?);
    t.set_summary("tv_bernoulli_window", total_variation(&q, &p_bern, &window)?);
    t.set_summary("window_size", window.len() as f64);
    t.set_summary("window_mass_q", window.iter().map(|&n| q[n]).sum());
    let outside = (0..=length).filter(|n| window.binary_search(n).is_err()).filter_map(|n| g_max[n]);
    t.set_summary("max_gmax_outside", outside.fold(f64::NAN, f64::max));
    t.set_summary("min_gmax", g_max.iter().flatten().copied().fold(f64::NAN, f64::min));
    t.set_summary("t_10", tr[1][0]);
    t.set_summary("t_01", tr[0][1]);
    t.set_summary("t_ratio", tr[1][0] / tr[0][1]);
    t.set_summary("pi_1", pi[1]);
    Ok(())
}

pub fn snr(config: &ExperimentConfig, t: &mut ResultTable) -> Result<()> {
    let d0s = config.usize_list("d0s")?;
    let length = config.usize("length")?;
    let mut rows = Vec::new();
    for &d0 in &d0s {
        let b = full_tree_branches(config, d0, length)?;
        let mags = off_diagonal_magnitudes(&b.g);
        let mean = mags.iter().sum::<f64>() / mags.len() as f64;
        rows.push(vec![d0 as f64, inverse_snr(&b.g)?, mean]);
    }
    t.set_rows(&["d0", "inverse_snr", "g_bar"], &rows)?;
    let nondecreasing = rows.windows(2).all(|w| w[1][1] >= w[0][1]);
    t.set_summary("nondecreasing", if nondecreasing { 1.0 } else { 0.0 });
    Ok(())
}
