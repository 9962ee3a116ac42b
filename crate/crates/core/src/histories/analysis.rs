//! Statistics over branch ensembles: decoherence aggregates, exponent fits,
//! localization, n-resolved profiles, inhomogeneous histories and the
//! Markov/Bernoulli reference distributions.

use ndarray::{s, Array1, Array2, Axis};

use super::branches::{BranchStates, NULL_WEIGHT};
use super::labels::HistoryLabel;
use super::model::{join, split, Block, ModelSpec};
use crate::ensembles::{haar_state, GramMatrix, StateVector};
use crate::error::{Error, Result};
use crate::linalg::adjoint_dot;
use crate::seeds::rng_stream;
use crate::stats;
use crate::C64;

/// `Ḡ = Σ_{x≠x'}|G|/(N²−N)` and `G_max = max_{x≠x'}|G|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecoherenceSummary {
    pub g_bar: f64,
    pub g_max: f64,
    pub n: usize,
}

/// `|G_ij|` for `i < j`.
pub fn off_diagonal_magnitudes(g: &GramMatrix) -> Vec<f64> {
    let e = g.entries();
    let n = g.n();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(e[[i, j]].norm());
        }
    }
    out
}

pub fn decoherence_summary(g: &GramMatrix) -> Result<DecoherenceSummary> {
    if g.n() < 2 {
        return Err(Error::InvalidInput("decoherence summary needs at least 2 histories".into()));
    }
    // |G| is symmetric, so the upper triangle gives the same mean.
    let mags = off_diagonal_magnitudes(g);
    Ok(DecoherenceSummary {
        g_bar: stats::mean(&mags),
        g_max: mags.iter().copied().fold(0.0, f64::max),
        n: g.n(),
    })
}

/// Power-law fit `value ∝ D0^{−α}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingFit {
    pub alpha: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares of `ln value` against `ln D0`; `alpha` is minus the slope.
pub fn scaling_fit(dims: &[f64], values: &[f64]) -> Result<ScalingFit> {
    if dims.len() != values.len() || dims.len() < 2 {
        return Err(Error::InvalidInput("scaling fit needs at least 2 paired points".into()));
    }
    if values.iter().chain(dims).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidInput("scaling fit needs positive dims and values".into()));
    }
    let x: Vec<f64> = dims.iter().map(|d| d.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let f = stats::ols(&x, &y);
    Ok(ScalingFit { alpha: -f.slope, intercept: f.intercept, r_squared: f.r_squared.clamp(0.0, 1.0) })
}

/// `Σ_i |c_i|⁴` in the computational basis.
pub fn localization(state: &StateVector) -> Result<f64> {
    if !state.is_normalized() {
        return Err(Error::InvalidInput("localization needs a normalized state".into()));
    }
    Ok(stats::sum(state.coeffs().iter().map(|z| z.norm_sqr().powi(2))))
}

/// Localization of each branch; `None` for null histories.
pub fn branch_localizations(branches: &BranchStates) -> Vec<Option<f64>> {
    (0..branches.len())
        .map(|i| {
            if branches.is_null(i) {
                return None;
            }
            let w = branches.weights()[i];
            Some(stats::sum(branches.state(i).iter().map(|z| (z.norm_sqr() / w).powi(2))))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bin {
    pub center: f64,
    pub count: usize,
    pub mean_x: Option<f64>,
    pub mean_y: Option<f64>,
}

/// Splits the range of `xs` (of `ln xs` with `log_x`) into `bins` equal bins
/// and averages `xs` and `ys` in each. Centers are reported on the original
/// scale.
pub fn binned_correlation(xs: &[f64], ys: &[f64], bins: usize, log_x: bool) -> Result<Vec<Bin>> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::InvalidInput("binned correlation needs equal nonempty inputs".into()));
    }
    if bins == 0 {
        return Err(Error::InvalidInput("need at least one bin".into()));
    }
    if log_x && xs.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidInput("logarithmic bins need positive x".into()));
    }
    let t = |x: f64| if log_x { x.ln() } else { x };
    let lo = xs.iter().map(|&x| t(x)).fold(f64::INFINITY, f64::min);
    let hi = xs.iter().map(|&x| t(x)).fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); bins];
    for (i, &x) in xs.iter().enumerate() {
        let k = if width > 0.0 { (((t(x) - lo) / width) as usize).min(bins - 1) } else { 0 };
        members[k].push(i);
    }
    Ok(members
        .into_iter()
        .enumerate()
        .map(|(k, idx)| {
            let c = lo + (k as f64 + 0.5) * width;
            let center = if log_x { c.exp() } else { c };
            let avg = |v: &[f64]| (!idx.is_empty()).then(|| stats::sum(idx.iter().map(|&i| v[i])) / idx.len() as f64);
            Bin { center, count: idx.len(), mean_x: avg(xs), mean_y: avg(ys) }
        })
        .collect())
}

/// Per-`n` statistics, `n = #₁(x) ∈ {0, …, L}`.
#[derive(Clone, Debug, PartialEq)]
pub struct NProfile {
    pub localization: Vec<Option<f64>>,
    pub purity: Vec<Option<f64>>,
    pub weight: Vec<f64>,
    pub count: Vec<usize>,
    /// `Σ n q(n) / Σ q(n)`.
    pub n_bar: f64,
}

/// Aggregates branches by their number of ones. `petz` holds one purity per
/// branch when given.
pub fn n_profile(branches: &BranchStates, petz: Option<&[f64]>) -> Result<NProfile> {
    if branches.is_empty() {
        return Err(Error::InvalidInput("empty branch set".into()));
    }
    if matches!(petz, Some(p) if p.len() != branches.len()) {
        return Err(Error::InvalidInput("one purity per branch is required".into()));
    }
    let l = branches.labels()[0].len();
    let loc = branch_localizations(branches);
    let mut count = vec![0usize; l + 1];
    let mut loc_acc: Vec<Vec<f64>> = vec![Vec::new(); l + 1];
    let mut pur_acc: Vec<Vec<f64>> = vec![Vec::new(); l + 1];
    let mut w_acc: Vec<Vec<f64>> = vec![Vec::new(); l + 1];
    for (i, label) in branches.labels().iter().enumerate() {
        let n = label.count_ones();
        count[n] += 1;
        w_acc[n].push(branches.weights()[i]);
        if let Some(v) = loc[i] {
            loc_acc[n].push(v);
        }
        if let Some(p) = petz {
            pur_acc[n].push(p[i]);
        }
    }
    let avg = |v: &Vec<f64>| (!v.is_empty()).then(|| stats::mean(v));
    let weight: Vec<f64> = w_acc.iter().map(|v| stats::sum(v.iter().copied())).collect();
    let total = stats::sum(weight.iter().copied());
    let n_bar = if total > 0.0 { stats::sum(weight.iter().enumerate().map(|(n, w)| n as f64 * w)) / total } else { 0.0 };
    Ok(NProfile {
        localization: loc_acc.iter().map(avg).collect(),
        purity: pur_acc.iter().map(avg).collect(),
        weight,
        count,
        n_bar,
    })
}

/// Mean and max of `|G_{x,x'}|` over pairs `x ≠ x'` with `#₁(x) = n`,
/// `#₁(x') = n'`. Cells without pairs are 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub mean: Array2<f64>,
    pub max: Array2<f64>,
}

pub fn heatmap_nn(g: &GramMatrix, labels: &[HistoryLabel]) -> Result<Heatmap> {
    if labels.len() != g.n() || labels.is_empty() {
        return Err(Error::InvalidInput("labels must align with G".into()));
    }
    let l = labels[0].len();
    let ns: Vec<usize> = labels.iter().map(|x| x.count_ones()).collect();
    let e = g.entries();
    let mut sum = Array2::<f64>::zeros((l + 1, l + 1));
    let mut cnt = Array2::<f64>::zeros((l + 1, l + 1));
    let mut max = Array2::<f64>::zeros((l + 1, l + 1));
    for i in 0..g.n() {
        for j in (i + 1)..g.n() {
            let v = e[[i, j]].norm();
            for (a, b) in [(ns[i], ns[j]), (ns[j], ns[i])] {
                sum[[a, b]] += v;
                cnt[[a, b]] += 1.0;
                max[[a, b]] = max[[a, b]].max(v);
            }
            if ns[i] == ns[j] {
                // Same cell counted twice above; keep one copy.
                sum[[ns[i], ns[i]]] -= v;
                cnt[[ns[i], ns[i]]] -= 1.0;
            }
        }
    }
    let mean = ndarray::Zip::from(&sum).and(&cnt).map_collect(|&s, &c| if c > 0.0 { s / c } else { 0.0 });
    Ok(Heatmap { mean, max })
}

/// `|ψ'(n)⟩ = Σ_x δ_{n,#₁(x)}|ψ'(x)⟩` for `n = 0..=L` with `q(n) = ‖ψ'(n)‖²`.
#[derive(Clone, Debug)]
pub struct InhomogeneousFamily {
    states: Array2<C64>,
    weights: Vec<f64>,
}

impl InhomogeneousFamily {
    fn new(states: Array2<C64>) -> Self {
        let weights = states
            .columns()
            .into_iter()
            .map(|c| {
                let w = stats::sum(c.iter().map(|z| z.norm_sqr()));
                if w < NULL_WEIGHT {
                    0.0
                } else {
                    w
                }
            })
            .collect();
        InhomogeneousFamily { states, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn states(&self) -> &Array2<C64> {
        &self.states
    }

    /// `q(n)`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `|ψ(n)⟩`, or `None` for an empty sector.
    pub fn normalized(&self, n: usize) -> Option<StateVector> {
        let w = self.weights[n];
        (w > 0.0).then(|| StateVector::normalize(self.states.column(n).mapv(|z| z / w.sqrt())).expect("nonzero"))
    }

    /// `Σ_n |ψ'(n)⟩`.
    pub fn sum_states(&self) -> Array1<C64> {
        self.states.sum_axis(Axis(1))
    }

    /// Sectors with nonzero weight.
    pub fn non_null(&self) -> Vec<usize> {
        (0..self.len()).filter(|&n| self.weights[n] > 0.0).collect()
    }

    /// NDF over the non-null sectors, in increasing `n`.
    pub fn ndf(&self) -> Result<GramMatrix> {
        let keep = self.non_null();
        let mut m = Array2::<C64>::zeros((self.states.nrows(), keep.len()));
        for (k, &n) in keep.iter().enumerate() {
            let s = self.weights[n].sqrt();
            m.column_mut(k).assign(&self.states.column(n).mapv(|z| z / s));
        }
        let mut g = adjoint_dot(m.view(), m.view());
        for i in 0..g.nrows() {
            g[[i, i]] = C64::new(1.0, 0.0);
        }
        GramMatrix::from_entries(g)
    }

    /// `G_max(n) = max_{n'≠n}|G_{n,n'}|` over non-null sectors; `None` for
    /// empty sectors.
    pub fn g_max(&self) -> Result<Vec<Option<f64>>> {
        let keep = self.non_null();
        let g = self.ndf()?;
        let e = g.entries();
        let mut out = vec![None; self.len()];
        for (a, &n) in keep.iter().enumerate() {
            let m = (0..keep.len()).filter(|&b| b != a).map(|b| e[[a, b]].norm()).fold(0.0, f64::max);
            out[n] = Some(m);
        }
        Ok(out)
    }
}

/// Regroups a full tree over both final outcomes by number of ones.
pub fn inhomogeneous_states(branches: &BranchStates, l: usize) -> Result<InhomogeneousFamily> {
    if l == 0 || l >= usize::BITS as usize || branches.len() != 1usize << l {
        return Err(Error::InvalidInput(format!("need the full tree of 2^{l} histories")));
    }
    if branches.labels().iter().any(|x| x.len() != l) {
        return Err(Error::InvalidInput(format!("histories must have length {l}")));
    }
    let mut states = Array2::<C64>::zeros((branches.dim(), l + 1));
    for (i, x) in branches.labels().iter().enumerate() {
        let mut col = states.column_mut(x.count_ones());
        col += &branches.state(i);
    }
    Ok(InhomogeneousFamily::new(states))
}

/// The same family without enumerating histories:
/// `φ_n ← Π0 U φ_n + Π1 U φ_{n−1}`, starting from `φ_0 = Ψ0`.
pub fn inhomogeneous_states_direct(model: &ModelSpec, psi0: &StateVector, l: usize, dt: f64) -> Result<InhomogeneousFamily> {
    if psi0.dim() != model.dim() {
        return Err(Error::InvalidInput("state dimension does not match the model".into()));
    }
    if l == 0 {
        return Err(Error::InvalidInput("need L >= 1".into()));
    }
    let prop = model.propagator(dt);
    let d = model.dim();
    let d0 = model.d0();
    let mut re = Array2::<f64>::zeros((d, l + 1));
    let mut im = Array2::<f64>::zeros((d, l + 1));
    let (r0, i0) = split(psi0.coeffs().insert_axis(Axis(1)));
    re.column_mut(0).assign(&r0.column(0));
    im.column_mut(0).assign(&i0.column(0));
    for k in 0..l {
        // Sectors 0..=k are populated after k steps.
        let (yr, yi) = prop.step(Block::All, Block::All, re.slice(s![.., ..=k]), im.slice(s![.., ..=k]));
        let mut nr = Array2::<f64>::zeros((d, l + 1));
        let mut ni = Array2::<f64>::zeros((d, l + 1));
        nr.slice_mut(s![..d0, ..=k]).assign(&yr.slice(s![..d0, ..]));
        ni.slice_mut(s![..d0, ..=k]).assign(&yi.slice(s![..d0, ..]));
        nr.slice_mut(s![d0.., 1..=k + 1]).assign(&yr.slice(s![d0.., ..]));
        ni.slice_mut(s![d0.., 1..=k + 1]).assign(&yi.slice(s![d0.., ..]));
        re = nr;
        im = ni;
    }
    Ok(InhomogeneousFamily::new(join(re.view(), im.view())))
}

/// Column-stochastic `T[x'][x] = T_{x'|x}`.
pub type Transition = [[f64; 2]; 2];

/// Averages `‖Π_{x'}U(dt)Π_x Ψ‖²/‖Π_x Ψ‖²` over `samples` Haar states on the
/// full space.
pub fn markov_transition(model: &ModelSpec, dt: f64, samples: usize, seed: u64) -> Result<Transition> {
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let d = model.dim();
    let mut psi = Array2::<C64>::zeros((d, samples));
    for j in 0..samples {
        let h = haar_state(d, &mut rng_stream(seed, j as u64))?;
        psi.column_mut(j).assign(&h.coeffs());
    }
    let prop = model.propagator(dt);
    let mut t = [[0.0; 2]; 2];
    for x in [0u8, 1] {
        let block = Block::from_bit(x);
        let rows = model.rows(block);
        let (re, im) = split(psi.slice(s![rows, ..]));
        let (yr, yi) = prop.step(block, Block::All, re.view(), im.view());
        let mut ratios = [Vec::with_capacity(samples), Vec::with_capacity(samples)];
        for j in 0..samples {
            let input = stats::sum(re.column(j).iter().chain(im.column(j).iter()).map(|v| v * v));
            for xp in [0u8, 1] {
                let out = model.rows(Block::from_bit(xp));
                let m = stats::sum(out.map(|i| yr[[i, j]] * yr[[i, j]] + yi[[i, j]] * yi[[i, j]]));
                ratios[xp as usize].push(m / input);
            }
        }
        for xp in 0..2 {
            t[xp][x as usize] = stats::mean(&ratios[xp]);
        }
    }
    Ok(t)
}

fn check_stochastic(t: &Transition) -> Result<()> {
    for x in 0..2 {
        let col = t[0][x] + t[1][x];
        if t[0][x] < 0.0 || t[1][x] < 0.0 || (col - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidInput(format!("column {x} of T is not a distribution")));
        }
    }
    Ok(())
}

/// Stationary distribution `(π0, π1)` of `T`.
pub fn stationary_distribution(t: &Transition) -> Result<[f64; 2]> {
    check_stochastic(t)?;
    let a = t[1][0];
    let b = t[0][1];
    if a + b == 0.0 {
        return Err(Error::InvalidInput("T is the identity; stationary distribution is not unique".into()));
    }
    Ok([b / (a + b), a / (a + b)])
}

/// `p(n; t_k)` for `k = 0..=L`, each of length `L + 1`, from the joint
/// recursion over the occupied subspace and the number of ones.
pub fn markov_trajectory(t: &Transition, l: usize, p0: [f64; 2]) -> Result<Vec<Vec<f64>>> {
    check_stochastic(t)?;
    if p0.iter().any(|&p| p < 0.0) || (p0[0] + p0[1] - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidInput("p0 must be a distribution".into()));
    }
    let mut a = vec![0.0; l + 1];
    let mut b = vec![0.0; l + 1];
    a[0] = p0[0];
    b[0] = p0[1];
    let mut out = vec![a.iter().zip(&b).map(|(x, y)| x + y).collect::<Vec<f64>>()];
    for _ in 0..l {
        let mut na = vec![0.0; l + 1];
        let mut nb = vec![0.0; l + 1];
        for n in 0..=l {
            na[n] = t[0][0] * a[n] + t[0][1] * b[n];
            if n > 0 {
                nb[n] = t[1][0] * a[n - 1] + t[1][1] * b[n - 1];
            }
        }
        a = na;
        b = nb;
        out.push(a.iter().zip(&b).map(|(x, y)| x + y).collect());
    }
    Ok(out)
}

/// `p_Markov(n) = p_0(n; t_L) + p_1(n; t_L)`.
pub fn markov_distribution(t: &Transition, l: usize, p0: [f64; 2]) -> Result<Vec<f64>> {
    Ok(markov_trajectory(t, l, p0)?.pop().expect("at least the initial row"))
}

/// `C(L,n)(1−p)^{L−n}p^n`.
pub fn bernoulli_distribution(l: usize, p: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("p = {p} outside [0, 1]")));
    }
    Ok((0..=l)
        .map(|n| {
            let (k, m) = (n as i32, (l - n) as i32);
            if p == 0.0 || p == 1.0 {
                // Avoid 0·ln 0.
                return (1.0 - p).powi(m) * p.powi(k);
            }
            (stats::ln_binomial(l as u64, n as u64) + m as f64 * (1.0 - p).ln() + k as f64 * p.ln()).exp()
        })
        .collect())
}

/// `{n : G_max(n) < threshold}`.
pub fn decoherent_window(g_max: &[Option<f64>], threshold: f64) -> Vec<usize> {
    g_max.iter().enumerate().filter(|(_, g)| matches!(g, Some(v) if *v < threshold)).map(|(n, _)| n).collect()
}

/// `½ Σ_{n∈window} |q(n) − p(n)|`.
pub fn total_variation(q: &[f64], p: &[f64], window: &[usize]) -> Result<f64> {
    if q.len() != p.len() || window.iter().any(|&n| n >= q.len()) {
        return Err(Error::InvalidInput("distributions and window must align".into()));
    }
    Ok(0.5 * stats::sum(window.iter().map(|&n| (q[n] - p[n]).abs())))
}

/// Standard deviation over mean of `|G_ij|`, `i < j`.
pub fn inverse_snr(g: &GramMatrix) -> Result<f64> {
    if g.n() < 3 {
        return Err(Error::InvalidInput("inverse SNR needs at least 3 histories".into()));
    }
    let mags = off_diagonal_magnitudes(g);
    let m = stats::mean(&mags);
    if m == 0.0 {
        return Err(Error::UndefinedSnr);
    }
    Ok(stats::std_population(&mags) / m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Lowest,
    Highest,
}

/// Indices of the `⌊fraction·N⌋` most extreme values, returned in increasing
/// index order. Ties go to the lower index.
pub fn subset_filter(values: &[f64], fraction: f64, direction: Direction) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidInput(format!("fraction {fraction} outside (0, 1]")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("metric values contain NaN".into()));
    }
    let k = (fraction * values.len() as f64).floor() as usize;
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        let o = values[a].total_cmp(&values[b]);
        let o = if direction == Direction::Highest { o.reverse() } else { o };
        o.then(a.cmp(&b))
    });
    let mut out = idx[..k].to_vec();
    out.sort_unstable();
    Ok(out)
}
