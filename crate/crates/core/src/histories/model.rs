//! Block random-matrix Hamiltonian and exact propagation in its eigenbasis.

use ndarray::{s, Array1, Array2, ArrayView2, Axis, ShapeBuilder};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::ensembles::{haar_state, StateVector};
use crate::error::{Error, Result};
use crate::linalg::{self, RealEigen};
use crate::seeds::{derive_seed, rng_from_seed};
use crate::C64;

pub const DEFAULT_DELTA_EPS: f64 = 0.5;

/// How the diagonal blocks `H00`, `H11` are populated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiagonalKind {
    /// Evenly spaced on `[0, δε]`.
    Even,
    /// Independent uniform draws on `[0, δε]`.
    Uniform,
}

/// Parameters of the two-block Hamiltonian
/// `H = [[H00, λR], [λRᵀ, H11]]` with `R ∈ {±1}^{D0×D1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub d0: usize,
    pub d1: usize,
    pub delta_eps: f64,
    pub lambda: f64,
    pub seed: u64,
    pub diagonal: DiagonalKind,
}

impl ModelParams {
    /// Defaults: `D1 = 2·D0`, `δε = 0.5`, `λ = δε/(15√D)`.
    pub fn new(d0: usize, seed: u64) -> Self {
        let d1 = 2 * d0;
        let lambda = DEFAULT_DELTA_EPS / (15.0 * ((d0 + d1) as f64).sqrt());
        ModelParams { d0, d1, delta_eps: DEFAULT_DELTA_EPS, lambda, seed, diagonal: DiagonalKind::Even }
    }

    pub fn with_d1(mut self, d1: usize) -> Self {
        self.d1 = d1;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_diagonal(mut self, diagonal: DiagonalKind) -> Self {
        self.diagonal = diagonal;
        self
    }

    pub fn dim(&self) -> usize {
        self.d0 + self.d1
    }

    fn validate(&self) -> Result<()> {
        if self.d0 < 2 || self.d1 < 2 {
            return Err(Error::InvalidDimension(format!("block dimensions {}+{} must be at least 2", self.d0, self.d1)));
        }
        if !(self.delta_eps > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidInput("bandwidth must be positive and coupling finite".into()));
        }
        Ok(())
    }

    /// Diagonal of `H`: `H00` entries followed by `H11` entries.
    pub fn diagonal_entries(&self) -> Array1<f64> {
        let block = |n: usize, label: &str| -> Vec<f64> {
            match self.diagonal {
                DiagonalKind::Even => (0..n).map(|i| self.delta_eps * i as f64 / (n - 1) as f64).collect(),
                DiagonalKind::Uniform => {
                    let mut rng = rng_from_seed(derive_seed(self.seed, label));
                    let u = Uniform::new_inclusive(0.0, self.delta_eps).expect("valid range");
                    (0..n).map(|_| u.sample(&mut rng)).collect()
                }
            }
        };
        let mut d = block(self.d0, "diag0");
        d.extend(block(self.d1, "diag1"));
        Array1::from(d)
    }

    /// The sign matrix `R`.
    pub fn coupling_signs(&self) -> Array2<f64> {
        let mut rng = rng_from_seed(derive_seed(self.seed, "coupling"));
        Array2::from_shape_simple_fn((self.d0, self.d1), || if rng.random::<bool>() { 1.0 } else { -1.0 })
    }

    /// Dense real symmetric `H`.
    pub fn hamiltonian(&self) -> Array2<f64> {
        let d = self.dim();
        let mut h = Array2::zeros((d, d));
        h.diag_mut().assign(&self.diagonal_entries());
        let r = self.coupling_signs() * self.lambda;
        h.slice_mut(s![..self.d0, self.d0..]).assign(&r);
        h.slice_mut(s![self.d0.., ..self.d0]).assign(&r.t());
        h
    }
}

/// Coarse-graining block: `Π0` (rows `0..D0`), `Π1` (rows `D0..D`), or the identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Block {
    Zero,
    One,
    All,
}

impl Block {
    pub fn from_bit(bit: u8) -> Block {
        if bit == 0 {
            Block::Zero
        } else {
            Block::One
        }
    }
}

/// A model with its cached eigendecomposition. The Hamiltonian is real
/// symmetric, so eigenvectors are stored as a real orthogonal matrix.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    params: ModelParams,
    eigen: RealEigen,
}

/// `build_model` with the default parameters.
pub fn build_model(d0: usize, seed: u64) -> Result<ModelSpec> {
    ModelSpec::from_params(ModelParams::new(d0, seed))
}

impl ModelSpec {
    pub fn from_params(params: ModelParams) -> Result<Self> {
        params.validate()?;
        let eigen = linalg::eigh_real(params.hamiltonian().view())?;
        Ok(ModelSpec { params, eigen })
    }

    /// Reattaches a previously computed eigendecomposition. The residual
    /// `‖H v − E v‖` is checked on a few columns.
    pub fn from_cached(params: ModelParams, values: Array1<f64>, vectors: Array2<f64>) -> Result<Self> {
        params.validate()?;
        let d = params.dim();
        if values.len() != d || vectors.dim() != (d, d) {
            return Err(Error::InvalidInput(format!("cached eigendecomposition does not have dimension {d}")));
        }
        let h = params.hamiltonian();
        for k in [0, d / 2, d - 1] {
            let v = vectors.column(k);
            let r = &h.dot(&v) - &(&v * values[k]);
            let res = r.dot(&r).sqrt();
            if res > 1e-8 {
                return Err(Error::InvalidInput(format!("cached eigenpair {k} has residual {res:e}")));
            }
        }
        // Match the column-major layout of a fresh solve so that products
        // take the same BLAS path and round identically.
        let vectors = if vectors.t().is_standard_layout() {
            vectors
        } else {
            let mut f = Array2::zeros((d, d).f());
            f.assign(&vectors);
            f
        };
        Ok(ModelSpec { params, eigen: RealEigen { values, vectors } })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn d0(&self) -> usize {
        self.params.d0
    }

    pub fn d1(&self) -> usize {
        self.params.d1
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigen.values
    }

    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigen.vectors
    }

    /// Row range of a block.
    pub fn rows(&self, block: Block) -> std::ops::Range<usize> {
        match block {
            Block::Zero => 0..self.params.d0,
            Block::One => self.params.d0..self.dim(),
            Block::All => 0..self.dim(),
        }
    }

    /// Rows of the eigenvector matrix belonging to `block`.
    pub fn vectors_rows(&self, block: Block) -> ArrayView2<'_, f64> {
        let r = self.rows(block);
        self.eigen.vectors.slice(s![r, ..])
    }

    pub fn propagator(&self, dt: f64) -> Propagator<'_> {
        Propagator::new(self, dt)
    }
}

/// `τ = δε/(2πλ²D)`; infinite for an uncoupled model.
pub fn tau(model: &ModelSpec) -> f64 {
    let p = model.params();
    p.delta_eps / (2.0 * std::f64::consts::PI * p.lambda * p.lambda * p.dim() as f64)
}

/// `U(dt) = V e^{−iΛdt} Vᵀ`, applied through the cached eigenbasis.
#[derive(Clone, Debug)]
pub struct Propagator<'a> {
    model: &'a ModelSpec,
    dt: f64,
    cos: Array1<f64>,
    sin: Array1<f64>,
}

impl<'a> Propagator<'a> {
    pub fn new(model: &'a ModelSpec, dt: f64) -> Self {
        let cos = model.eigen.values.mapv(|e| (e * dt).cos());
        let sin = model.eigen.values.mapv(|e| (e * dt).sin());
        Propagator { model, dt, cos, sin }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn model(&self) -> &'a ModelSpec {
        self.model
    }

    /// Eigen-coefficients `Vᵀψ` of columns supported on `block`, given as
    /// the block rows only.
    pub fn to_eigen(&self, block: Block, re: ArrayView2<f64>, im: ArrayView2<f64>) -> (Array2<f64>, Array2<f64>) {
        let vb = self.model.vectors_rows(block);
        (vb.t().dot(&re), vb.t().dot(&im))
    }

    /// Multiplies eigen-coefficient columns by `e^{−iE dt}` in place.
    pub fn phase(&self, re: &mut Array2<f64>, im: &mut Array2<f64>) {
        for ((mut a, mut b), (c, s)) in
            re.axis_iter_mut(Axis(0)).zip(im.axis_iter_mut(Axis(0))).zip(self.cos.iter().zip(self.sin.iter()))
        {
            for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                let (xr, yi) = (*x, *y);
                *x = xr * c + yi * s;
                *y = yi * c - xr * s;
            }
        }
    }

    /// Rows of `V c` belonging to `block`.
    pub fn from_eigen(&self, block: Block, re: ArrayView2<f64>, im: ArrayView2<f64>) -> (Array2<f64>, Array2<f64>) {
        let vb = self.model.vectors_rows(block);
        (vb.dot(&re), vb.dot(&im))
    }

    /// `Π_out U Π_in` on a batch of columns given on the rows of `input`.
    pub fn step(
        &self,
        input: Block,
        output: Block,
        re: ArrayView2<f64>,
        im: ArrayView2<f64>,
    ) -> (Array2<f64>, Array2<f64>) {
        let (mut cr, mut ci) = self.to_eigen(input, re, im);
        self.phase(&mut cr, &mut ci);
        self.from_eigen(output, cr.view(), ci.view())
    }

    /// `U ψ` for a full state.
    pub fn apply(&self, psi: &StateVector) -> StateVector {
        let (re, im) = split(psi.coeffs().insert_axis(Axis(1)));
        let (r, i) = self.step(Block::All, Block::All, re.view(), im.view());
        let out = join(r.view(), i.view()).column(0).to_owned();
        if psi.is_normalized() {
            // U is unitary; renormalizing only removes rounding drift.
            StateVector::normalize(out).expect("unitary image of a unit vector")
        } else {
            StateVector::unnormalized(out).expect("nonempty")
        }
    }

    /// Dense `U(dt)`.
    pub fn matrix(&self) -> Array2<C64> {
        let v = &self.model.eigen.vectors;
        let mut vc = v.clone();
        let mut vs = v.clone();
        for (mut col, c) in vc.axis_iter_mut(Axis(1)).zip(self.cos.iter()) {
            col *= *c;
        }
        for (mut col, s) in vs.axis_iter_mut(Axis(1)).zip(self.sin.iter()) {
            col *= *s;
        }
        let re = vc.dot(&v.t());
        let im = -vs.dot(&v.t());
        join(re.view(), im.view())
    }
}

/// Real and imaginary parts of a complex matrix.
pub fn split(a: ArrayView2<C64>) -> (Array2<f64>, Array2<f64>) {
    (a.mapv(|z| z.re), a.mapv(|z| z.im))
}

pub fn join(re: ArrayView2<f64>, im: ArrayView2<f64>) -> Array2<C64> {
    ndarray::Zip::from(re).and(im).map_collect(|&a, &b| C64::new(a, b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InitialKind {
    /// Haar state confined to `H1`.
    HaarInH1,
    /// Haar state on the full space.
    HaarGlobal,
    /// Eigenvector of `H` at a uniformly drawn index.
    RandomEigenstate,
}

pub fn initial_state(model: &ModelSpec, kind: InitialKind, seed: u64) -> Result<StateVector> {
    let mut rng = rng_from_seed(derive_seed(seed, "initial-state"));
    let d = model.dim();
    match kind {
        InitialKind::HaarInH1 => {
            let h = haar_state(model.d1(), &mut rng)?;
            let mut c = Array1::zeros(d);
            c.slice_mut(s![model.d0()..]).assign(&h.coeffs());
            StateVector::normalized(c)
        }
        InitialKind::HaarGlobal => haar_state(d, &mut rng),
        InitialKind::RandomEigenstate => {
            let k = rng.random_range(0..d);
            StateVector::normalize(model.eigenvectors().column(k).mapv(|x| C64::new(x, 0.0)))
        }
    }
}

/// `(⟨Π0⟩, ⟨Π1⟩)` of a state.
pub fn block_populations(model: &ModelSpec, psi: &StateVector) -> (f64, f64) {
    let c = psi.coeffs();
    let p0 = crate::stats::sum(c.slice(s![..model.d0()]).iter().map(|z| z.norm_sqr()));
    let p1 = crate::stats::sum(c.slice(s![model.d0()..]).iter().map(|z| z.norm_sqr()));
    (p0, p1)
}

/// `(t, ⟨Π0⟩(t), ⟨Π1⟩(t))` for each requested time.
pub fn evolve_expectations(model: &ModelSpec, psi0: &StateVector, times: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    if psi0.dim() != model.dim() {
        return Err(Error::InvalidInput(format!("state dim {} does not match model dim {}", psi0.dim(), model.dim())));
    }
    let v = model.eigenvectors();
    let (re, im) = split(psi0.coeffs().insert_axis(Axis(1)));
    let cr = v.t().dot(&re.column(0));
    let ci = v.t().dot(&im.column(0));
    let e = model.eigenvalues();
    let nt = times.len();
    let mut pr = Array2::zeros((model.dim(), nt));
    let mut pi = Array2::zeros((model.dim(), nt));
    for (j, &t) in times.iter().enumerate() {
        for k in 0..model.dim() {
            let (s, c) = (e[k] * t).sin_cos();
            pr[[k, j]] = cr[k] * c + ci[k] * s;
            pi[[k, j]] = ci[k] * c - cr[k] * s;
        }
    }
    let xr = v.dot(&pr);
    let xi = v.dot(&pi);
    let d0 = model.d0();
    Ok(times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let mass = |r: std::ops::Range<usize>| {
                crate::stats::sum(r.map(|i| xr[[i, j]] * xr[[i, j]] + xi[[i, j]] * xi[[i, j]]))
            };
            (t, mass(0..d0), mass(d0..model.dim()))
        })
        .collect())
}
