//! Random and pseudo-random state families and their Gram matrices.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use crate::digits::DigitStream;
use crate::error::{Error, Result};
use crate::linalg;
use crate::seeds::{rng_stream, Rng as StreamRng};
use crate::C64;

pub const NORM_TOL: f64 = 1e-10;

/// A dense complex state, normalized or not.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    coeffs: Array1<C64>,
    normalized: bool,
}

impl StateVector {
    /// Wraps coefficients without touching their norm.
    pub fn unnormalized(coeffs: Array1<C64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidDimension("state dimension must be at least 1".into()));
        }
        Ok(StateVector { coeffs, normalized: false })
    }

    /// Wraps coefficients that are already unit-norm.
    pub fn normalized(coeffs: Array1<C64>) -> Result<Self> {
        let s = StateVector::unnormalized(coeffs)?;
        let n2 = s.norm_sqr();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!("squared norm {n2} is not 1")));
        }
        Ok(StateVector { normalized: true, ..s })
    }

    /// Rescales to unit norm; fails on the zero vector.
    pub fn normalize(coeffs: Array1<C64>) -> Result<Self> {
        let s = StateVector::unnormalized(coeffs)?;
        s.into_normalized()
    }

    pub fn into_normalized(self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidInput("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(StateVector { coeffs: self.coeffs.mapv(|z| z / n), normalized: true })
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidDimension(format!("basis index {index} out of range for dim {dim}")));
        }
        let mut c = Array1::zeros(dim);
        c[index] = C64::new(1.0, 0.0);
        StateVector::normalized(c)
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> ArrayView1<'_, C64> {
        self.coeffs.view()
    }

    pub fn into_coeffs(self) -> Array1<C64> {
        self.coeffs
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sqr(&self) -> f64 {
        crate::stats::sum(self.coeffs.iter().map(|z| z.norm_sqr()))
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.coeffs.iter().zip(other.coeffs.iter()).map(|(a, b)| a.conj() * b).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    Haar,
    Gaussian,
    Permutation,
    Sign,
    Mub,
}

/// Ordered family of same-dimension states.
#[derive(Clone, Debug)]
pub struct StateFamily {
    members: Vec<StateVector>,
    provenance: Provenance,
    seed: u64,
}

impl StateFamily {
    pub fn new(members: Vec<StateVector>, provenance: Provenance, seed: u64) -> Result<Self> {
        let first = members.first().ok_or_else(|| Error::InvalidFamily("family is empty".into()))?;
        let d = first.dim();
        if let Some(bad) = members.iter().position(|m| m.dim() != d) {
            return Err(Error::InvalidFamily(format!("member {bad} has dim {} instead of {d}", members[bad].dim())));
        }
        Ok(StateFamily { members, provenance, seed })
    }

    pub fn members(&self) -> &[StateVector] {
        &self.members
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Members as the columns of a `dim × N` matrix.
    pub fn to_matrix(&self) -> Array2<C64> {
        let mut m = Array2::zeros((self.dim(), self.len()));
        for (mut col, s) in m.axis_iter_mut(Axis(1)).zip(&self.members) {
            col.assign(&s.coeffs);
        }
        m
    }

    /// The first `n` members.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        StateFamily::new(self.members[..n.min(self.len())].to_vec(), self.provenance, self.seed)
    }
}

/// Hermitian positive semidefinite matrix of pairwise overlaps.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    entries: Array2<C64>,
}

impl GramMatrix {
    /// Validates Hermitian symmetry to `1e-10` and then symmetrizes exactly.
    pub fn from_entries(mut entries: Array2<C64>) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c || r == 0 {
            return Err(Error::InvalidInput(format!("Gram matrix must be square and nonempty, got {r}x{c}")));
        }
        let asym = (0..r)
            .flat_map(|i| (i..r).map(move |j| (i, j)))
            .map(|(i, j)| (entries[[i, j]] - entries[[j, i]].conj()).norm())
            .fold(0.0, f64::max);
        if asym > 1e-10 {
            return Err(Error::InvalidInput(format!("matrix is not Hermitian (deviation {asym:e})")));
        }
        linalg::hermitize(&mut entries);
        Ok(GramMatrix { entries })
    }

    pub fn identity(n: usize) -> Self {
        GramMatrix { entries: Array2::eye(n) }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> ArrayView2<'_, C64> {
        self.entries.view()
    }

    pub fn into_entries(self) -> Array2<C64> {
        self.entries
    }

    /// True when every entry has an exactly zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im == 0.0)
    }

    pub fn real_part(&self) -> Array2<f64> {
        self.entries.mapv(|z| z.re)
    }

    pub fn trace(&self) -> f64 {
        self.entries.diag().iter().map(|z| z.re).sum()
    }

    /// Principal submatrix on `indices`.
    pub fn select(&self, indices: &[usize]) -> GramMatrix {
        let n = indices.len();
        let e = Array2::from_shape_fn((n, n), |(a, b)| self.entries[[indices[a], indices[b]]]);
        GramMatrix { entries: e }
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Array1<f64>> {
        if self.is_real() {
            linalg::eigvalsh_real(self.real_part().view())
        } else {
            linalg::eigvalsh_herm(self.entries.view())
        }
    }
}

/// Probability vector over N items.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    weights: Array1<f64>,
}

impl WeightVector {
    pub fn new(weights: Array1<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("weight vector is empty".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidInput("weights must be nonnegative".into()));
        }
        let s = crate::stats::sum(weights.iter().copied());
        if (s - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!("weights sum to {s}, not 1")));
        }
        Ok(WeightVector { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("weight vector is empty".into()));
        }
        Ok(WeightVector { weights: Array1::from_elem(n, 1.0 / n as f64) })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidDimension("dimension must be at least 1".into()));
    }
    Ok(())
}

/// Complex Gaussian vector whose components have real and imaginary parts
/// drawn from `N(0, 1/(2·dim))`, so that `E‖ψ'‖² = 1`.
pub fn gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<StateVector> {
    check_dim(dim)?;
    let sigma = (0.5 / dim as f64).sqrt();
    let normal = Normal::new(0.0, sigma).expect("positive standard deviation");
    let c = Array1::from_iter((0..dim).map(|_| C64::new(normal.sample(rng), normal.sample(rng))));
    StateVector::unnormalized(c)
}

/// Haar-random unit vector (normalized Gaussian vector).
pub fn haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<StateVector> {
    check_dim(dim)?;
    loop {
        let g = gaussian_vector(dim, rng)?;
        // A zero draw has probability zero; redraw from the advanced stream.
        if g.norm_sqr() > 0.0 {
            return g.into_normalized();
        }
    }
}

/// Standard normal real vector, normalized; used for real-symmetric ensembles.
pub fn real_haar_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Array1<f64>> {
    check_dim(dim)?;
    loop {
        let v: Array1<f64> = Array1::from_iter((0..dim).map(|_| StandardNormal.sample(rng)));
        let n = v.dot(&v).sqrt();
        if n > 0.0 {
            return Ok(v / n);
        }
    }
}

fn member_rng(seed: u64, index: usize) -> StreamRng {
    rng_stream(seed, index as u64)
}

/// `count` independent Haar states; member `i` uses its own stream of `seed`.
pub fn haar_family(dim: usize, count: usize, seed: u64) -> Result<StateFamily> {
    check_dim(dim)?;
    let members = (0..count)
        .into_par_iter()
        .map(|i| haar_state(dim, &mut member_rng(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    StateFamily::new(members, Provenance::Haar, seed)
}

/// `count` independent unnormalized Gaussian vectors.
pub fn gaussian_family(dim: usize, count: usize, seed: u64) -> Result<StateFamily> {
    check_dim(dim)?;
    let members = (0..count)
        .into_par_iter()
        .map(|i| gaussian_vector(dim, &mut member_rng(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    StateFamily::new(members, Provenance::Gaussian, seed)
}

/// Member 0 is a Haar seed state; member `i > 0` permutes its coordinates
/// with an independent uniform (Fisher–Yates) permutation.
pub fn permutation_family(dim: usize, count: usize, seed: u64) -> Result<StateFamily> {
    check_dim(dim)?;
    if count == 0 {
        return Err(Error::InvalidFamily("count must be at least 1".into()));
    }
    let base = haar_state(dim, &mut member_rng(seed, 0))?;
    let mut members = vec![base.clone()];
    members.par_extend((1..count).into_par_iter().map(|i| {
        let mut perm: Vec<usize> = (0..dim).collect();
        perm.shuffle(&mut member_rng(seed, i));
        let c = Array1::from_iter(perm.iter().map(|&k| base.coeffs[k]));
        StateVector { coeffs: c, normalized: true }
    }));
    StateFamily::new(members, Provenance::Permutation, seed)
}

/// Member `j` has coefficients `(−1)^{f_j(x)}/√dim`, where `f_j(x)` is bit
/// `j·dim + x` of `stream`, counted from the stream's cursor. The cursor is
/// advanced past the consumed bits.
pub fn sign_family(dim: usize, count: usize, stream: &mut DigitStream) -> Result<StateFamily> {
    check_dim(dim)?;
    if count == 0 {
        return Err(Error::InvalidFamily("count must be at least 1".into()));
    }
    let start = stream.cursor();
    let total = dim.checked_mul(count).ok_or_else(|| Error::TooLarge("dim·count overflows".into()))?;
    if let Some(cap) = stream.capacity() {
        if start + total > cap {
            return Err(Error::StreamUnderflow { requested: start + total, available: cap });
        }
    }
    let bits = stream.take(total)?;
    let a = 1.0 / (dim as f64).sqrt();
    let members = bits
        .chunks(dim)
        .map(|chunk| {
            let c = Array1::from_iter(chunk.iter().map(|&b| C64::new(if b == 0 { a } else { -a }, 0.0)));
            StateVector { coeffs: c, normalized: true }
        })
        .collect();
    StateFamily::new(members, Provenance::Sign, start as u64)
}

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2;
    while k * k <= n {
        if n % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

/// State `index` of the complete set of mutually unbiased bases in prime
/// dimension `d`. Indices `b·d + j` for `b < d` are the quadratic-phase bases
/// `Σ_x ω^{b x² + j x}|x⟩/√d`; indices `d² + j` are the computational basis.
pub fn mub_state(d: usize, index: usize) -> Result<StateVector> {
    if !is_prime(d) {
        return Err(Error::InvalidDimension(format!("{d} is not prime")));
    }
    if index >= d * (d + 1) {
        return Err(Error::ExhaustedDesign { requested: index + 1, available: d * (d + 1) });
    }
    if index >= d * d {
        return StateVector::basis(d, index - d * d);
    }
    let (b, j) = (index / d, index % d);
    let a = 1.0 / (d as f64).sqrt();
    let coeffs = if d == 2 {
        // ω = −1 would make the two quadratic bases coincide; use i^{b x}.
        Array1::from_iter((0..2).map(|x| {
            let phase = C64::new(0.0, 1.0).powu((b * x) as u32) * if j * x % 2 == 1 { -1.0 } else { 1.0 };
            phase * a
        }))
    } else {
        Array1::from_iter((0..d).map(|x| {
            let m = (b * x % d * x + j * x) % d;
            C64::from_polar(a, 2.0 * std::f64::consts::PI * m as f64 / d as f64)
        }))
    };
    Ok(StateVector { coeffs, normalized: true })
}

/// `count` distinct states drawn uniformly without replacement from the
/// `d(d+1)` states of the complete MUB set.
pub fn mub_family(prime_dim: usize, count: usize, seed: u64) -> Result<StateFamily> {
    if !is_prime(prime_dim) {
        return Err(Error::InvalidDimension(format!("{prime_dim} is not prime")));
    }
    let total = prime_dim * (prime_dim + 1);
    if count > total {
        return Err(Error::ExhaustedDesign { requested: count, available: total });
    }
    if count == 0 {
        return Err(Error::InvalidFamily("count must be at least 1".into()));
    }
    let picks = rand::seq::index::sample(&mut member_rng(seed, 0), total, count);
    let members = picks.iter().map(|i| mub_state(prime_dim, i)).collect::<Result<Vec<_>>>()?;
    StateFamily::new(members, Provenance::Mub, seed)
}

/// Flat Dirichlet weights, `w_i = |ψ_i|²` of a Haar vector.
pub fn dirichlet_weights(n: usize, seed: u64) -> Result<WeightVector> {
    let psi = haar_state(n, &mut member_rng(seed, 0))?;
    let w = psi.coeffs.mapv(|z| z.norm_sqr());
    let s = w.sum();
    WeightVector::new(w / s)
}

/// `G_ij = ⟨ψ_i|ψ_j⟩`, exactly Hermitian. Families whose coefficients are
/// all real use a real product and yield an exactly real matrix.
pub fn gram_matrix(family: &StateFamily) -> Result<GramMatrix> {
    let a = family.to_matrix();
    gram_of_columns(a.view())
}

/// Gram matrix of the columns of `a`.
pub fn gram_of_columns(a: ArrayView2<C64>) -> Result<GramMatrix> {
    if a.ncols() == 0 {
        return Err(Error::InvalidFamily("no columns".into()));
    }
    let mut g = if a.iter().all(|z| z.im == 0.0) {
        let r = a.mapv(|z| z.re);
        r.t().dot(&r).mapv(|x| C64::new(x, 0.0))
    } else {
        linalg::adjoint_dot(a, a)
    };
    linalg::hermitize(&mut g);
    Ok(GramMatrix { entries: g })
}

/// Gram matrix of `n` independent Gaussian vectors in dimension `d`.
pub fn wishart_sample(n: usize, d: usize, seed: u64) -> Result<GramMatrix> {
    check_dim(d)?;
    if n == 0 {
        return Err(Error::InvalidDimension("n must be at least 1".into()));
    }
    gram_matrix(&gaussian_family(d, n, seed)?)
}

/// Gram matrix of `n` real Gaussian vectors (entries `N(0, 1/d)`).
pub fn real_wishart_sample(n: usize, d: usize, seed: u64) -> Result<Array2<f64>> {
    check_dim(d)?;
    let sigma = (1.0 / d as f64).sqrt();
    let normal = Normal::new(0.0, sigma).expect("positive standard deviation");
    let mut rng = member_rng(seed, 0);
    let x = Array2::from_shape_fn((d, n), |_| normal.sample(&mut rng));
    Ok(x.t().dot(&x))
}

/// Upper bound `2·exp(−ε²D/6)` on `Pr[|‖ψ'‖² − 1| > ε]` for Gaussian vectors.
pub fn norm_concentration_bound(dim: usize, eps: f64) -> f64 {
    2.0 * (-eps * eps * dim as f64 / 6.0).exp()
}

/// CDF of the squared overlap between a fixed state and a Haar state in
/// dimension `D`: density `(D−1)(1−F²)^{D−2}`, i.e. `Beta(1, D−1)`.
pub fn fidelity_sq_cdf(x: f64, dim: usize) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        1.0 - (1.0 - x).powi(dim as i32 - 1)
    }
}
