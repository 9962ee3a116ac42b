//! State discrimination presets over random families.

use decohist_core::discrimination::{
    average_success, joint_table, mi_fluct, mi_mean_field, mutual_information, slp_solve, unambiguous_bounds,
    universal_state,
};
use decohist_core::ensembles::{gram_matrix, wishart_sample};
use decohist_core::histories::scaling_fit;
use decohist_core::rmt::{mp_expectation, DEFAULT_TOL};
use decohist_core::seeds::derive_seed;
use decohist_core::{GramMatrix, MpLaw, WeightVector};

use super::{count_for, family, family_code};
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::table::ResultTable;

/// `E f(λ)` under the MP law, NaN outside `0 < γ ≤ 1`.
fn mp(f: fn(f64) -> f64, gamma: f64) -> Result<f64> {
    if gamma > 1.0 {
        return Ok(f64::NAN);
    }
    Ok(mp_expectation(f, MpLaw::new(gamma)?, DEFAULT_TOL)?)
}

fn leading(g: &GramMatrix, n: usize) -> GramMatrix {
    g.select(&(0..n).collect::<Vec<_>>())
}

fn grid_counts(config: &ExperimentConfig, d: usize) -> Result<Vec<(f64, usize)>> {
    config.f64_list("gamma_grid")?.into_iter().map(|g| Ok((g, count_for(g, d)?))).collect()
}

pub fn qsd_curves(config: &ExperimentConfig, t: &mut ResultTable) -> Result<()> {
    let d = config.usize("d")?;
    let name = config.str("family")?;
    let grid = grid_counts(config, d)?;
    let n_max = grid.iter().map(|&(_, n)| n).max().unwrap_or(2);
    let g = gram_matrix(&family(name, d, n_max, config.seed)?)?;
    let mut rows = Vec::new();
    for &(gamma, n) in &grid {
        let p = average_success(&leading(&g, n), &WeightVector::uniform(n)?)?;
        let gam = n as f64 / d as f64;
        let mu = mp(f64::sqrt, gam)?;
        rows.push(vec![gamma, n as f64, gam, p, mu * mu, (p - mu * mu).abs()]);
    }
    t.set_rows(&["gamma", "n", "gamma_actual", "p_s", "mu_sqrt_sq", "abs_dev"], &rows)?;
    t.set_summary("max_abs_dev", rows.iter().map(|r| r[5]).fold(0.0, f64::max));
    let at_one = rows.iter().find(|r| (r[0] - 1.0).abs() < 1e-12).map_or(f64::NAN, |r| r[3]);
    t.set_summary("p_s_at_one", at_one);
    t.set_summary("family", family_code(name));
    Ok(())
}

pub fn det_bounds(config: &ExperimentConfig, t: &mut ResultTable) -> Result<()> {
    let d = config.usize("d")?;
    let grid = grid_counts(config, d)?;
    let n_max = grid.iter().map(|&(_, n)| n).max().unwrap_or(2);
    let g = gram_matrix(&family("haar", d, n_max, config.seed)?)?;
    let with_wishart = config.bool("wishart")?;
    let mut rows = Vec::new();
    for &(gamma, n) in &grid {
        let (p_un, det_root) = unambiguous_bounds(&leading(&g, n))?;
        let gam = n as f64 / d as f64;
        let bound = mp(f64::ln, gam)?.exp();
        let w = if with_wishart {
            let s = derive_seed(config.seed, &format!("wishart:{n}"));
            unambiguous_bounds(&wishart_sample(n, d, s)?)?.1
        } else {
            f64::NAN
        };
        rows.push(vec![gamma, n as f64, det_root, p_un, bound, (det_root - bound).abs(), w]);
    }
    t.set_rows(&["gamma", "n", "det_root", "p_un", "exp_mu_ln", "abs_dev", "det_root_wishart"], &rows)?;
    t.set_summary("max_abs_dev", rows.iter().map(|r| r[5]).fold(0.0, f64::max));
    let at_one = rows.iter().find(|r| (r[0] - 1.0).abs() < 1e-12).map_or(f64::NAN, |r| r[2]);
    t.set_summary("det_root_at_one", at_one);
    Ok(())
}

pub fn mi_curves(config: &ExperimentConfig, t: &mut ResultTable) -> Result<()> {
    let d = config.usize("d")?;
    let grid = grid_counts(config, d)?;
    let n_max = grid.iter().map(|&(_, n)| n).max().unwrap_or(2);
    let g = gram_matrix(&family("haar", d, n_max, config.seed)?)?;
    let mut rows = Vec::new();
    for &(gamma, n) in &grid {
        let table = joint_table(&leading(&g, n), &WeightVector::uniform(n)?)?;
        // Uniform priors: the success probability is the trace of the table.
        let p = table.entries().diag().sum();
        let i = mutual_information(&table);
        let (mf, fl) = (mi_mean_field(p, n)?, mi_fluct(p, n)?);
        let ln_n = (n as f64).ln();
        rows.push(vec![gamma, n as f64, p, i, mf, fl, (i - fl).abs() / ln_n, (i - mf) / ln_n]);
    }
    t.set_rows(&["gamma", "n", "p_s", "mi", "mi_mean_field", "mi_fluct", "fluct_dev", "mf_margin"], &rows)?;
    t.set_summary("max_fluct_dev", rows.iter().map(|r| r[6]).fold(0.0, f64::max));
    t.set_summary("min_mf_margin", rows.iter().map(|r| r[7]).fold(f64::INFINITY, f64::min));
    Ok(())
}

pub fn ensemble_compare(config: &ExperimentConfig, t: &mut ResultTable) -> Result<()> {
    let names = config.str_list("families")?;
    let mut rows = Vec::new();
    let mut overall: f64 = 0.0;
    for name in &names {
        let d = if name == "mub" { config.usize("mub_d")? } else { config.usize("d")? };
        let grid = grid_counts(config, d)?;
        let n_max = grid.iter().map(|&(_, n)| n).max().unwrap_or(2);
        let g = gram_matrix(&family(name, d, n_max, config.seed)?)?;
        let mut worst: f64 = 0.0;
        for &(gamma, n) in &grid {
            let p = average_success(&leading(&g, n), &WeightVector::uniform(n)?)?;
            let mu = mp(f64::sqrt, n as f64 / d as f64)?;
            let dev = (p - mu * mu).abs();
            worst = worst.max(dev);
            rows.push(vec![family_code(name), d as f64, gamma, n as f64, p, mu * mu, dev]);
        }
        t.set_summary(&format!("max_abs_dev_{name}"), worst);
        overall = overall.max(worst);
    }
    t.set_rows(&["family", "d", "gamma", "n", "p_s", "mu_sqrt_sq", "abs_dev"], &rows)?;
    t.set_summary("max_abs_dev", overall);
    Ok(())
}

/// Gap rows on the `gamma_grid` at dimension `d`, plus a fixed-`γ` series
/// `N ∈ n_slope`, `d = N/slope_gamma` for the scaling with `N`.
pub fn slp_gap(config: &ExperimentConfig, t: &mut ResultTable) -> Result<()> {
    let d = config.usize("d")?;
    let reps = config.usize("realizations")?.max(1);
    let slope_gamma = config.f64("slope_gamma")?;
    let mut cases: Vec<(usize, usize, bool)> = grid_counts(config, d)?.into_iter().map(|(_, n)| (d, n, false)).collect();
    for n in config.usize_list("n_slope")? {
        cases.push((((n as f64 / slope_gamma).round() as usize).max(n), n, true));
    }
    if let Some(&(dd, n, _)) = cases.iter().find(|&&(dd, n, _)| n > dd) {
        return Err(CliError::InvalidConfig(format!("the global state must lie in the span: N = {n} > d = {dd}")));
    }
    let mut rows = Vec::new();
    for &(dd, n, in_slope) in &cases {
        let w = WeightVector::uniform(n)?;
        let mut acc = [0.0; 5];
        for r in 0..reps {
            let fam = family("haar", dd, n, derive_seed(config.seed, &format!("slp:{dd}:{n}:{r}")))?;
            let g = gram_matrix(&fam)?;
            let psi = universal_state(&fam, &w)?;
            let s = slp_solve(&g, &fam, &psi, &w)?;
            let vals = [s.success_qsd, s.success_slp, s.success_qsd - s.success_slp, s.gap_bound, s.fidelity];
            for (a, v) in acc.iter_mut().zip(vals) {
                *a += v / reps as f64;
            }
        }
        let flag = if in_slope { 1.0 } else { 0.0 };
        rows.push(vec![dd as f64, n as f64 / dd as f64, n as f64, acc[0], acc[1], acc[2], acc[3], acc[4], flag]);
    }
    t.set_rows(&["d", "gamma", "n", "p_s", "q_s", "gap", "gap_bound", "fidelity", "in_slope"], &rows)?;
    t.set_summary("max_q_minus_p", rows.iter().map(|r| r[4] - r[3]).fold(f64::NEG_INFINITY, f64::max));
    t.set_summary("max_gap_excess", rows.iter().map(|r| r[5].abs() - r[6]).fold(f64::NEG_INFINITY, f64::max));
    t.set_summary("gap_slope", log_slope(rows.iter().filter(|r| r[8] == 1.0))?);
    t.set_summary("gap_slope_fixed_d", log_slope(rows.iter().filter(|r| r[8] == 0.0))?);
    Ok(())
}

/// Slope of `ln gap` against `ln N`; NaN with fewer than two positive points.
fn log_slope<'a>(rows: impl Iterator<Item = &'a Vec<f64>>) -> Result<f64> {
    let pts: Vec<&Vec<f64>> = rows.collect();
    if pts.len() < 2 || pts.iter().any(|r| !(r[5] > 0.0)) {
        return Ok(f64::NAN);
    }
    let ns: Vec<f64> = pts.iter().map(|r| r[2]).collect();
    let gaps: Vec<f64> = pts.iter().map(|r| r[5]).collect();
    // scaling_fit reports minus the slope.
    Ok(-scaling_fit(&ns, &gaps)?.alpha)
}
