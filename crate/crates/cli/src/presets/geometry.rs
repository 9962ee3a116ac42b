//! Packing bounds and norm/fidelity concentration.

use decohist_core::ensembles::{fidelity_sq_cdf, gaussian_vector, haar_state, norm_concentration_bound};
use decohist_core::packing::{greedy_pack, lower_bounds, max_pairwise_overlap};
use decohist_core::seeds::{derive_seed, rng_from_seed, rng_stream};
use decohist_core::stats::ks_statistic;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::table::ResultTable;

pub fn packing(config: &ExperimentConfig, t: &mut ResultTable) -> Result<()> {
    let dims = config.usize_list("dims")?;
    let eps = config.f64_list("epsilons")?;
    let greedy_max = config.usize("greedy_max_d")?;
    let budget = config.usize("budget")?;
    let mut rows = Vec::new();
    let mut violations = 0usize;
    for &d in &dims {
        for &e in &eps {
            let b = lower_bounds(d, e)?;
            let (achieved, overlap) = if d <= greedy_max {
                let w = greedy_pack(d, e, budget, derive_seed(config.seed, &format!("greedy:{d}:{e}")))?;
                let o = if w.achieved > 1 { max_pairwise_overlap(&w.kept) } else { 0.0 };
                if o > e + 1e-12 {
                    violations += 1;
                }
                (w.achieved as f64, o)
            } else {
                (f64::NAN, f64::NAN)
            };
            rows.push(vec![d as f64, e, b.geometric_exact, b.geometric_approx, b.probabilistic, achieved, overlap]);
        }
    }
    t.set_rows(
        &["d", "epsilon", "geometric_exact", "geometric_approx", "probabilistic", "greedy_achieved", "greedy_max_overlap"],
        &rows,
    )?;
    t.set_summary("greedy_overlap_violations", violations as f64);
    Ok(())
}

/// Fraction of `draws` Gaussian vectors with `|‖ψ‖² − 1| > ε`, one per `ε`.
fn tail_frequencies(dim: usize, eps: &[f64], draws: usize, seed: u64) -> Result<Vec<f64>> {
    let norms: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|j| gaussian_vector(dim, &mut rng_stream(seed, j as u64)).map(|v| v.norm_sqr()))
        .collect::<std::result::Result<_, _>>()?;
    Ok(eps.iter().map(|&e| norms.iter().filter(|&&n| (n - 1.0).abs() > e).count() as f64 / draws as f64).collect())
}

pub fn concentration(config: &ExperimentConfig, t: &mut ResultTable) -> Result<()> {
    let dims = config.usize_list("dims")?;
    let eps = config.f64_list("epsilons")?;
    let draws = config.usize("draws")?;
    let mut rows = Vec::new();
    for &d in &dims {
        let freq = tail_frequencies(d, &eps, draws, derive_seed(config.seed, &format!("norms:{d}")))?;
        for (&e, f) in eps.iter().zip(freq) {
            rows.push(vec![d as f64, e, f, norm_concentration_bound(d, e), draws as f64]);
        }
    }
    t.set_rows(&["dim", "epsilon", "frequency", "bound", "draws"], &rows)?;
    t.set_summary("max_excess", rows.iter().map(|r| r[2] - r[3]).fold(f64::NEG_INFINITY, f64::max));

    let ks_dim = config.usize("ks_dim")?;
    let samples = config.usize("ks_samples")?;
    let seed = derive_seed(config.seed, "fidelity");
    let chi = haar_state(ks_dim, &mut rng_from_seed(seed))?;
    let f2: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|j| haar_state(ks_dim, &mut rng_stream(seed, j as u64 + 1)).map(|s| s.inner(&chi).norm_sqr()))
        .collect::<std::result::Result<_, _>>()?;
    t.set_summary("ks_fidelity", ks_statistic(&f2, |x| fidelity_sq_cdf(x, ks_dim)));
    Ok(())
}
