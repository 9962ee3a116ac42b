//! Marchenko–Pastur analytics, spectral fits and the eigenvector bridge path.

use ndarray::{Array2, ArrayView2};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::ensembles::StateVector;
use crate::error::{Error, Result};
use crate::quad;
use crate::C64;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const FIT_BINS: usize = 40;
pub const FIT_GRID: usize = 200;

/// Marchenko–Pastur law with ratio `γ = N/D ∈ (0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MpLaw {
    gamma: f64,
}

impl MpLaw {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidInput(format!("gamma must be positive, got {gamma}")));
        }
        if gamma > 1.0 {
            return Err(Error::UnsupportedRegime(format!("gamma = {gamma} > 1 carries a point mass at zero")));
        }
        Ok(MpLaw { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `(λ−, λ+) = ((1−√γ)², (1+√γ)²)`.
    pub fn support(&self) -> (f64, f64) {
        support(self.gamma)
    }
}

fn support(gamma: f64) -> (f64, f64) {
    let s = gamma.sqrt();
    ((1.0 - s).powi(2), (1.0 + s).powi(2))
}

/// Absolutely continuous part of the law for any `γ > 0`. For `γ > 1` it has
/// mass `1/γ`; the rest sits at zero.
fn continuous_density(lambda: f64, gamma: f64) -> f64 {
    let (lo, hi) = support(gamma);
    if lambda <= lo || lambda >= hi || lambda <= 0.0 {
        return 0.0;
    }
    ((hi - lambda) * (lambda - lo)).sqrt() / (2.0 * PI * gamma * lambda)
}

pub fn mp_density(lambda: f64, law: MpLaw) -> f64 {
    continuous_density(lambda, law.gamma)
}

/// `∫ f dρ` over `λ = λ− + (λ+−λ−)sin²θ` restricted to `θ ∈ [t0, t1]`. The
/// substitution cancels both square-root edges of the density.
fn theta_integral(f: &impl Fn(f64) -> f64, gamma: f64, t0: f64, t1: f64, tol: f64) -> Result<f64> {
    let (lo, hi) = support(gamma);
    let w = hi - lo;
    let g = |t: f64| {
        let (s, c) = t.sin_cos();
        let lambda = lo + w * s * s;
        if lambda <= 0.0 {
            return 0.0;
        }
        f(lambda) * w * w * 2.0 * s * s * c * c / (2.0 * PI * gamma * lambda)
    };
    quad::integrate(g, t0, t1, tol)
}

/// `μ_f(γ) = ∫ f(λ) dρ_MP(λ)` to absolute tolerance `tol`.
pub fn mp_expectation(f: impl Fn(f64) -> f64, law: MpLaw, tol: f64) -> Result<f64> {
    theta_integral(&f, law.gamma, 0.0, FRAC_PI_2, tol)
}

/// Continuous MP mass inside `[a, b]`, any `γ > 0`.
fn continuous_mass(a: f64, b: f64, gamma: f64) -> Result<f64> {
    let (lo, hi) = support(gamma);
    let a = a.max(lo);
    let b = b.min(hi);
    if b <= a {
        return Ok(0.0);
    }
    let th = |x: f64| (((x - lo) / (hi - lo)).clamp(0.0, 1.0)).sqrt().asin();
    theta_integral(&|_| 1.0, gamma, th(a), th(b), 1e-10)
}

/// Best-matching MP law for an empirical spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralFit {
    pub d_eff: f64,
    pub gamma_eff: f64,
    pub residual: f64,
}

/// Fits `d_eff` by least squares between a fixed-width histogram of the
/// spectrum on `[0, max λ]` and the MP law with `γ = n/d_eff`, scanning a
/// logarithmic grid over `[n/4, 50n]`. Candidates with `γ > 1` carry the
/// point mass `1 − 1/γ` in the first bin.
pub fn mp_fit(eigenvalues: &[f64], n: usize) -> Result<SpectralFit> {
    if eigenvalues.is_empty() || n == 0 {
        return Err(Error::InvalidInput("empty spectrum".into()));
    }
    if eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite eigenvalue".into()));
    }
    let max = eigenvalues.iter().copied().fold(f64::MIN, f64::max);
    let min = eigenvalues.iter().copied().fold(f64::MAX, f64::min);
    if max <= 0.0 || max - min <= 1e-12 * max.abs() {
        return Err(Error::DegenerateSpectrum(format!("spectrum spread {:e}", max - min)));
    }
    let width = max / FIT_BINS as f64;
    let mut counts = vec![0usize; FIT_BINS];
    for &x in eigenvalues {
        let b = ((x.max(0.0) / width) as usize).min(FIT_BINS - 1);
        counts[b] += 1;
    }
    let total = eigenvalues.len() as f64;
    let hist: Vec<f64> = counts.iter().map(|&c| c as f64 / (total * width)).collect();

    let lo = (n as f64 / 4.0).ln();
    let hi = (50.0 * n as f64).ln();
    let mut best: Option<SpectralFit> = None;
    for k in 0..FIT_GRID {
        let d_eff = (lo + (hi - lo) * k as f64 / (FIT_GRID - 1) as f64).exp();
        let gamma = n as f64 / d_eff;
        let mut residual = 0.0;
        for (b, h) in hist.iter().enumerate() {
            let a = b as f64 * width;
            let mut m = continuous_mass(a, a + width, gamma)?;
            if b == 0 && gamma > 1.0 {
                m += 1.0 - 1.0 / gamma;
            }
            residual += (h - m / width).powi(2);
        }
        if best.map_or(true, |f| residual < f.residual) {
            best = Some(SpectralFit { d_eff, gamma_eff: gamma, residual });
        }
    }
    Ok(best.expect("grid is nonempty"))
}

/// `X_N(i/N) = √(N/2)·Σ_{k≤i}(|d_k|² − 1/N)` for `d = U†x`, `i = 0..=N`.
pub fn bridge_process(unitary_columns: ArrayView2<C64>, probe: &StateVector) -> Result<Vec<f64>> {
    let (rows, n) = unitary_columns.dim();
    if rows != n {
        return Err(Error::InvalidInput(format!("expected a square unitary, got {rows}x{n}")));
    }
    if probe.dim() != n {
        return Err(Error::InvalidInput(format!("probe dim {} does not match {n}", probe.dim())));
    }
    if (probe.norm_sqr() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidInput("probe is not unit norm".into()));
    }
    let x = probe.coeffs();
    let weights: Vec<f64> = (0..n)
        .map(|k| unitary_columns.column(k).iter().zip(x.iter()).map(|(u, v)| u.conj() * v).sum::<C64>().norm_sqr())
        .collect();
    Ok(bridge_from_weights(&weights))
}

/// Bridge path for real orthonormal columns and a real unit probe.
pub fn bridge_process_real(columns: ArrayView2<f64>, probe: &[f64]) -> Result<Vec<f64>> {
    let (rows, n) = columns.dim();
    if rows != n || probe.len() != n {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let p2: f64 = probe.iter().map(|v| v * v).sum();
    if (p2 - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidInput("probe is not unit norm".into()));
    }
    let p = ndarray::ArrayView1::from(probe);
    let d = columns.t().dot(&p);
    let weights: Vec<f64> = d.iter().map(|v| v * v).collect();
    Ok(bridge_from_weights(&weights))
}

fn bridge_from_weights(weights: &[f64]) -> Vec<f64> {
    let n = weights.len() as f64;
    let scale = (n / 2.0).sqrt();
    let mut path = Vec::with_capacity(weights.len() + 1);
    let mut acc = 0.0;
    path.push(0.0);
    for w in weights {
        acc += w - 1.0 / n;
        path.push(scale * acc);
    }
    path
}

/// Real eigenvectors as a complex matrix for [`bridge_process`].
pub fn complexify(m: ArrayView2<f64>) -> Array2<C64> {
    m.mapv(|x| C64::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_gamma() {
        assert!(matches!(MpLaw::new(1.5), Err(Error::UnsupportedRegime(_))));
        assert!(MpLaw::new(0.0).is_err());
    }

    #[test]
    fn continuous_mass_for_large_gamma() {
        let m = continuous_mass(0.0, 100.0, 2.0).unwrap();
        assert!((m - 0.5).abs() < 1e-8);
    }

    #[test]
    fn degenerate_fit() {
        assert!(matches!(mp_fit(&[1.0; 10], 10), Err(Error::DegenerateSpectrum(_))));
    }
}
