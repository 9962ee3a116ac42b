//! Lower bounds on the number of approximately orthogonal states and a
//! greedy random packer that witnesses them.

use ndarray::Array2;

use crate::ensembles::haar_state;
use crate::error::{Error, Result};
use crate::seeds::rng_from_seed;
use crate::C64;

/// Lower bounds on `N_C(D, ε)`, the largest number of unit vectors in `C^D`
/// with pairwise `|⟨ψ_i|ψ_j⟩| ≤ ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PackingBound {
    pub d: usize,
    pub epsilon: f64,
    /// `sin^{−(2D−2)}(arccos ε) = (1 − ε²)^{−(D−1)}`.
    pub geometric_exact: f64,
    /// `e^{(D−1)ε²}`.
    pub geometric_approx: f64,
    /// `√2·e^{(D−1)ε²/2}`.
    pub probabilistic: f64,
}

pub fn lower_bounds(d: usize, epsilon: f64) -> Result<PackingBound> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("D = {d} < 2")));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidInput(format!("epsilon = {epsilon} outside [0, 1)")));
    }
    let m = (d - 1) as f64;
    let e2 = epsilon * epsilon;
    Ok(PackingBound {
        d,
        epsilon,
        geometric_exact: (-m * (-e2).ln_1p()).exp(),
        geometric_approx: (m * e2).exp(),
        probabilistic: std::f64::consts::SQRT_2 * (m * e2 / 2.0).exp(),
    })
}

/// Outcome of [`greedy_pack`]: the accepted states as columns.
#[derive(Clone, Debug)]
pub struct PackingWitness {
    pub achieved: usize,
    pub draws: usize,
    pub kept: Array2<C64>,
}

/// Draws `budget` Haar states in sequence from `seed` and keeps each one whose
/// overlap modulus with every kept state is at most `epsilon`.
pub fn greedy_pack(d: usize, epsilon: f64, budget: usize, seed: u64) -> Result<PackingWitness> {
    if budget == 0 {
        return Err(Error::InvalidInput("budget must be at least 1".into()));
    }
    if d == 0 {
        return Err(Error::InvalidDimension("D must be at least 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let eps2 = epsilon * epsilon;
    let mut kept: Vec<C64> = Vec::new();
    for _ in 0..budget {
        let s = haar_state(d, &mut rng)?;
        let c = s.coeffs();
        let c = c.as_slice().expect("owned state is contiguous");
        let clash = kept.chunks_exact(d).any(|k| {
            let o: C64 = k.iter().zip(c).map(|(a, b)| a.conj() * b).sum();
            o.norm_sqr() > eps2
        });
        if !clash {
            kept.extend_from_slice(c);
        }
    }
    let achieved = kept.len() / d;
    let rows = Array2::from_shape_vec((achieved, d), kept).expect("length is a multiple of d");
    Ok(PackingWitness { achieved, draws: budget, kept: rows.reversed_axes().as_standard_layout().to_owned() })
}

/// Largest `|⟨ψ_i|ψ_j⟩|` over distinct kept columns.
pub fn max_pairwise_overlap(kept: &Array2<C64>) -> f64 {
    let n = kept.ncols();
    let g = crate::linalg::adjoint_dot(kept.view(), kept.view());
    let mut m: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            m = m.max(g[[i, j]].norm());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_domain() {
        assert!(lower_bounds(10, 1.0).is_err());
        assert!(lower_bounds(1, 0.1).is_err());
        assert_eq!(lower_bounds(10, 0.0).unwrap().geometric_exact, 1.0);
    }
}
