//! Repeated measurement of a small system, dilated onto `L` ancilla
//! registers: history states decohere exactly through orthogonal records,
//! yet the Heisenberg projectors do not commute.

use ndarray::{Array1, Array2};
use rand_distr::{Distribution, StandardNormal};

use super::consistency::{heisenberg_projectors, projectors_commute};
use crate::ensembles::{haar_state, GramMatrix, StateVector};
use crate::error::{Error, Result};
use crate::linalg::{adjoint_dot, eigh_herm};
use crate::seeds::{derive_seed, rng_from_seed};
use crate::C64;

/// Largest composite dimension `system_dim·M^L`.
pub const MAX_DILATION_DIM: usize = 1024;
/// Outcome strings the dilation forbids come out as rounding noise from the
/// dense products rather than exact zeros.
pub const DILATION_NULL_WEIGHT: f64 = 1e-24;

/// System `S` (most significant index) times ancillas `A_1 … A_L`, each of
/// dimension `M`. Step `k` is `W_k = V_k (U_S ⊗ 1)` with
/// `V_k = Σ_x Π_x^S ⊗ X_x^{(k)}`, where `X_x^{(k)}` shifts ancilla `k` by `x`.
#[derive(Clone, Debug)]
pub struct DilationModel {
    system_dim: usize,
    m: usize,
    l: usize,
    system_unitary: Array2<C64>,
    system_initial: StateVector,
    steps: Vec<Array2<C64>>,
    initial: StateVector,
}

/// Builds the dilation with a Haar system state `ψ0`. With `commuting`, `U_S`
/// is a diagonal phase matrix and so commutes with every `Π_x^S`; otherwise
/// it is the eigenbasis-exponential of a random Hermitian matrix.
pub fn dilation_model(system_dim: usize, m: usize, l: usize, seed: u64, commuting: bool) -> Result<DilationModel> {
    if m < 2 || l == 0 {
        return Err(Error::InvalidInput(format!("need M >= 2 and L >= 1, got M = {m}, L = {l}")));
    }
    if system_dim < m {
        return Err(Error::InvalidDimension(format!("system dimension {system_dim} < M = {m}")));
    }
    let total = (m as u128).checked_pow(l as u32).map(|a| a * system_dim as u128);
    let total = match total {
        Some(t) if t <= MAX_DILATION_DIM as u128 => t as usize,
        _ => return Err(Error::TooLarge(format!("{system_dim}*{m}^{l} exceeds {MAX_DILATION_DIM}"))),
    };
    let mut rng = rng_from_seed(derive_seed(seed, "dilation-unitary"));
    let u_s = if commuting {
        Array2::from_diag(&Array1::from_shape_fn(system_dim, |_| {
            let t: f64 = StandardNormal.sample(&mut rng);
            C64::from_polar(1.0, t)
        }))
    } else {
        let a = Array2::from_shape_simple_fn((system_dim, system_dim), || {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        });
        let h = (&a + &a.t().mapv(|z| z.conj())).mapv(|z| z * 0.5);
        let e = eigh_herm(h.view())?;
        let phased = Array2::from_shape_fn((system_dim, system_dim), |(i, j)| {
            e.vectors[[i, j]] * C64::from_polar(1.0, -e.values[j])
        });
        phased.dot(&e.vectors.t().mapv(|z| z.conj()))
    };
    let psi0 = haar_state(system_dim, &mut rng_from_seed(derive_seed(seed, "dilation-state")))?;

    let anc = total / system_dim;
    let blocks = system_blocks(system_dim, m);
    let mut steps = Vec::with_capacity(l);
    for k in 0..l {
        // Stride of ancilla k (A_1 is the most significant ancilla).
        let stride = m.pow((l - 1 - k) as u32);
        let mut w = Array2::<C64>::zeros((total, total));
        for s in 0..system_dim {
            let x = blocks[s];
            for a in 0..anc {
                let digit = (a / stride) % m;
                let target = a - digit * stride + ((digit + x) % m) * stride;
                // Row (s, target) of W_k is row (s, a) of U_S ⊗ 1.
                for s2 in 0..system_dim {
                    w[[s * anc + target, s2 * anc + a]] = u_s[[s, s2]];
                }
            }
        }
        steps.push(w);
    }
    let mut init = Array1::<C64>::zeros(total);
    for s in 0..system_dim {
        init[s * anc] = psi0.coeffs()[s];
    }
    Ok(DilationModel {
        system_dim,
        m,
        l,
        system_unitary: u_s,
        system_initial: psi0,
        steps,
        initial: StateVector::normalize(init)?,
    })
}

/// Block index `x` of each system basis state; blocks are contiguous and
/// differ in size by at most one.
fn system_blocks(system_dim: usize, m: usize) -> Vec<usize> {
    (0..system_dim).map(|s| s * m / system_dim).collect()
}

/// History states of the dilation over all `M^L` outcome strings.
#[derive(Clone, Debug)]
pub struct DilationHistories {
    /// Outcome strings `(x_1, …, x_L)`.
    pub outcomes: Vec<Vec<usize>>,
    /// Composite history states as columns.
    pub states: Array2<C64>,
}

impl DilationHistories {
    pub fn weights(&self) -> Vec<f64> {
        self.states.columns().into_iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum()).collect()
    }

    /// NDF over the non-null histories.
    pub fn ndf(&self) -> Result<GramMatrix> {
        let w = self.weights();
        let keep: Vec<usize> = (0..w.len()).filter(|&i| w[i] >= DILATION_NULL_WEIGHT).collect();
        let mut m = Array2::<C64>::zeros((self.states.nrows(), keep.len()));
        for (k, &i) in keep.iter().enumerate() {
            let s = w[i].sqrt();
            m.column_mut(k).assign(&self.states.column(i).mapv(|z| z / s));
        }
        let mut g = adjoint_dot(m.view(), m.view());
        for i in 0..g.nrows() {
            g[[i, i]] = C64::new(1.0, 0.0);
        }
        GramMatrix::from_entries(g)
    }
}

impl DilationModel {
    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn outcomes(&self) -> usize {
        self.m
    }

    pub fn length(&self) -> usize {
        self.l
    }

    pub fn dim(&self) -> usize {
        self.initial.dim()
    }

    pub fn steps(&self) -> &[Array2<C64>] {
        &self.steps
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.initial
    }

    pub fn system_unitary(&self) -> &Array2<C64> {
        &self.system_unitary
    }

    pub fn system_initial(&self) -> &StateVector {
        &self.system_initial
    }

    /// `P_x = Π_x^S ⊗ 1` as dense diagonal matrices.
    pub fn projectors(&self) -> Vec<Array2<C64>> {
        let anc = self.dim() / self.system_dim;
        let blocks = system_blocks(self.system_dim, self.m);
        (0..self.m)
            .map(|x| {
                let diag = Array1::from_shape_fn(self.dim(), |i| {
                    if blocks[i / anc] == x {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                });
                Array2::from_diag(&diag)
            })
            .collect()
    }

    /// `Ψ_L = W_L ⋯ W_1 Ψ0`.
    pub fn final_state(&self) -> Array1<C64> {
        self.steps.iter().fold(self.initial.coeffs().to_owned(), |v, w| w.dot(&v))
    }

    /// `P_{x_L} W_L ⋯ P_{x_1} W_1 Ψ0` for every outcome string.
    pub fn history_states(&self) -> DilationHistories {
        let proj = self.projectors();
        let mut level: Vec<(Vec<usize>, Array1<C64>)> = vec![(Vec::new(), self.initial.coeffs().to_owned())];
        for w in &self.steps {
            let mut next = Vec::with_capacity(level.len() * self.m);
            for (prefix, v) in &level {
                let wv = w.dot(v);
                for (x, p) in proj.iter().enumerate() {
                    let mut label = prefix.clone();
                    label.push(x);
                    next.push((label, p.dot(&wv)));
                }
            }
            level = next;
        }
        let mut states = Array2::<C64>::zeros((self.dim(), level.len()));
        let mut outcomes = Vec::with_capacity(level.len());
        for (k, (label, v)) in level.into_iter().enumerate() {
            states.column_mut(k).assign(&v);
            outcomes.push(label);
        }
        DilationHistories { outcomes, states }
    }

    /// Unnormalized system branch `Π_{x_L}U_S ⋯ Π_{x_1}U_S ψ0`.
    pub fn system_branch(&self, outcome: &[usize]) -> Array1<C64> {
        let blocks = system_blocks(self.system_dim, self.m);
        let mut v = self.system_initial.coeffs().to_owned();
        for &x in outcome {
            v = self.system_unitary.dot(&v);
            for (s, z) in v.iter_mut().enumerate() {
                if blocks[s] != x {
                    *z = C64::new(0.0, 0.0);
                }
            }
        }
        v
    }

    /// `⟨x|_A Ψ_L` as a system vector.
    pub fn record_component(&self, outcome: &[usize]) -> Result<Array1<C64>> {
        if outcome.len() != self.l || outcome.iter().any(|&x| x >= self.m) {
            return Err(Error::InvalidInput(format!("outcome string must have {} entries below {}", self.l, self.m)));
        }
        let anc = self.dim() / self.system_dim;
        let a = outcome.iter().fold(0, |acc, &x| acc * self.m + x);
        let psi = self.final_state();
        Ok(Array1::from_shape_fn(self.system_dim, |s| psi[s * anc + a]))
    }

    /// Largest deviation between `⟨x|_A Ψ_L` and the system branch over all strings.
    pub fn record_residual(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for h in self.history_states().outcomes {
            let r = self.record_component(&h)?;
            let b = self.system_branch(&h);
            worst = worst.max((&r - &b).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        Ok(worst)
    }

    /// Heisenberg commutativity of `P_x` under the step unitaries.
    pub fn commutativity_check(&self, tol: f64) -> Result<bool> {
        let heis = heisenberg_projectors(&self.steps, &self.projectors())?;
        Ok(projectors_commute(&heis, tol))
    }
}
