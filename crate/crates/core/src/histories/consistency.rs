//! Heisenberg-picture commutativity and Petz-recovery purity.

use ndarray::Array2;

use super::labels::HistoryLabel;
use super::model::{Block, ModelSpec};
use crate::error::{Error, Result};
use crate::linalg::adjoint_dot;
use crate::C64;

/// Largest dimension for which dense Heisenberg projectors are built.
pub const MAX_DENSE_DIM: usize = 1024;

/// `Π^{(k)} = (W_k ⋯ W_1)† Π (W_k ⋯ W_1)` for `k = 1..=L` and every projector.
/// Result is indexed `[k − 1][x]`.
pub fn heisenberg_projectors(steps: &[Array2<C64>], projectors: &[Array2<C64>]) -> Result<Vec<Vec<Array2<C64>>>> {
    let d = steps
        .first()
        .map(|w| w.nrows())
        .ok_or_else(|| Error::InvalidInput("at least one step is required".into()))?;
    if steps.iter().chain(projectors).any(|m| m.dim() != (d, d)) {
        return Err(Error::InvalidInput(format!("all operators must be {d}x{d}")));
    }
    let mut acc = Array2::<C64>::eye(d);
    let mut out = Vec::with_capacity(steps.len());
    for w in steps {
        acc = w.dot(&acc);
        out.push(projectors.iter().map(|p| adjoint_dot(acc.view(), p.dot(&acc).view())).collect());
    }
    Ok(out)
}

/// Max-entry norm of `[a, b]`.
pub fn commutator_norm(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    let c = a.dot(b) - b.dot(a);
    c.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// True iff all Heisenberg projectors at different times commute to `tol`.
/// Projectors at equal times are orthogonal and commute trivially.
pub fn projectors_commute(heis: &[Vec<Array2<C64>>], tol: f64) -> bool {
    for (k, pk) in heis.iter().enumerate() {
        for pj in &heis[k + 1..] {
            for a in pk {
                for b in pj {
                    if commutator_norm(a, b) > tol {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Heisenberg commutativity for `L` steps of `U(dt)` with projectors `Π0`, `Π1`.
pub fn commutativity_check(model: &ModelSpec, dt: f64, l: usize, tol: f64) -> Result<bool> {
    let d = model.dim();
    if d > MAX_DENSE_DIM {
        return Err(Error::TooLarge(format!("dense commutators need D <= {MAX_DENSE_DIM}, got {d}")));
    }
    if l == 0 || !(dt * l as f64).is_finite() {
        return Err(Error::InvalidInput("need L >= 1 and finite L*dt".into()));
    }
    let u = model.propagator(dt).matrix();
    let steps = vec![u; l];
    let proj = |block: Block| {
        let mut p = Array2::<C64>::zeros((d, d));
        for i in model.rows(block) {
            p[[i, i]] = C64::new(1.0, 0.0);
        }
        p
    };
    // Π1 = 1 − Π0, so commutators with Π0 alone decide the question.
    let heis = heisenberg_projectors(&steps, &[proj(Block::Zero)])?;
    Ok(projectors_commute(&heis, tol))
}

/// Purity of the Petz-recovered initial state for the prior `Π1/D1`:
/// `tr{(K†KΠ1)²}/tr{K†KΠ1}²` with `K = Π_{x_L}U ⋯ Π_{x_1}U`, clipped to
/// `[1/D1, 1]`.
pub fn petz_purity(model: &ModelSpec, label: &HistoryLabel, dt: f64) -> Result<f64> {
    let prop = model.propagator(dt);
    let d1 = model.d1();
    // Columns of K Π1, kept on the rows of the current block.
    let mut block = Block::One;
    let mut re = Array2::<f64>::eye(d1);
    let mut im = Array2::<f64>::zeros((d1, d1));
    for &bit in label.bits() {
        let out = Block::from_bit(bit);
        let (r, i) = prop.step(block, out, re.view(), im.view());
        re = r;
        im = i;
        block = out;
    }
    // M = K Π1 restricted, rows × D1. Purity = ‖M†M‖_F² / ‖M‖_F⁴.
    let m = super::model::join(re.view(), im.view());
    let tr: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    if tr < super::branches::NULL_WEIGHT {
        return Err(Error::NullHistory(format!("history {label} has no support on the prior")));
    }
    let g = if m.nrows() < m.ncols() {
        // conj(M M†) has the same Frobenius norm.
        let mt = m.t().to_owned();
        adjoint_dot(mt.view(), mt.view())
    } else {
        adjoint_dot(m.view(), m.view())
    };
    let f2: f64 = g.iter().map(|z| z.norm_sqr()).sum();
    Ok((f2 / (tr * tr)).clamp(1.0 / d1 as f64, 1.0))
}

/// Petz purity for each label.
pub fn petz_purities(model: &ModelSpec, labels: &[HistoryLabel], dt: f64) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    labels.par_iter().map(|l| petz_purity(model, l, dt)).collect()
}
