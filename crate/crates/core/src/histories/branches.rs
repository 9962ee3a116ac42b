//! Branch (history) states `Π_{x_L}U ⋯ Π_{x_1}U|Ψ0⟩` and the normalized
//! decoherence functional.

use std::collections::HashMap;

use ndarray::{s, Array1, Array2, ArrayView1, Axis};

use super::labels::{HistoryLabel, HistorySet};
use super::model::{split, Block, ModelSpec, Propagator};
use crate::ensembles::{gram_of_columns, GramMatrix, StateVector};
use crate::error::{Error, Result};
use crate::C64;

/// Branches lighter than this are null histories. Long histories carry
/// weights far below any fixed small number (a typical branch of length
/// `L` weighs about `2^−L`), so only weights at the edge of the `f64`
/// range count as null.
pub const NULL_WEIGHT: f64 = 1e-280;

/// Unnormalized branch states (columns) with their weights. Null branches
/// keep their raw vector but report weight 0.
#[derive(Clone, Debug)]
pub struct BranchStates {
    labels: Vec<HistoryLabel>,
    states: Array2<C64>,
    weights: Vec<f64>,
}

impl BranchStates {
    pub fn new(labels: Vec<HistoryLabel>, states: Array2<C64>) -> Result<Self> {
        if labels.len() != states.ncols() {
            return Err(Error::InvalidInput(format!("{} labels for {} states", labels.len(), states.ncols())));
        }
        let weights = states
            .columns()
            .into_iter()
            .map(|c| {
                let w = crate::stats::sum(c.iter().map(|z| z.norm_sqr()));
                if w < NULL_WEIGHT {
                    0.0
                } else {
                    w
                }
            })
            .collect();
        Ok(BranchStates { labels, states, weights })
    }

    pub fn labels(&self) -> &[HistoryLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.nrows()
    }

    /// `q(x) = ‖ψ'(x)‖²`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn state(&self, i: usize) -> ArrayView1<'_, C64> {
        self.states.column(i)
    }

    pub fn states(&self) -> &Array2<C64> {
        &self.states
    }

    pub fn is_null(&self, i: usize) -> bool {
        self.weights[i] == 0.0
    }

    pub fn non_null(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.is_null(i)).collect()
    }

    /// `|ψ(x)⟩`, or `None` for a null history.
    pub fn normalized(&self, i: usize) -> Option<StateVector> {
        if self.is_null(i) {
            return None;
        }
        let w = self.weights[i].sqrt();
        StateVector::normalize(self.states.column(i).mapv(|z| z / w)).ok()
    }

    /// Normalized states at `indices` as columns.
    pub fn normalized_matrix(&self, indices: &[usize]) -> Result<Array2<C64>> {
        let mut m = Array2::zeros((self.dim(), indices.len()));
        for (k, &i) in indices.iter().enumerate() {
            if self.is_null(i) {
                return Err(Error::InvalidBranch(format!("history {} is null", self.labels[i])));
            }
            let w = self.weights[i].sqrt();
            m.column_mut(k).assign(&self.states.column(i).mapv(|z| z / w));
        }
        Ok(m)
    }

    /// `Σ_x |ψ'(x)⟩`.
    pub fn sum_states(&self) -> Array1<C64> {
        self.states.sum_axis(Axis(1))
    }

    /// Branches at `indices`, in order.
    pub fn select(&self, indices: &[usize]) -> BranchStates {
        BranchStates {
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
            states: self.states.select(Axis(1), indices),
            weights: indices.iter().map(|&i| self.weights[i]).collect(),
        }
    }

    /// Drops null histories.
    pub fn without_null(&self) -> BranchStates {
        self.select(&self.non_null())
    }
}

/// Batch of column states, each supported on one block and stored on that
/// block's rows only.
struct Level {
    groups: Vec<(Block, Array2<f64>, Array2<f64>)>,
    /// Node → (group, column).
    loc: Vec<(usize, usize)>,
}

impl Level {
    /// Phased eigen-coefficients of every node, columns in node order.
    fn phased_coefficients(&self, prop: &Propagator) -> (Array2<f64>, Array2<f64>) {
        let d = prop.model().dim();
        let m = self.loc.len();
        let mut re = Array2::zeros((d, m));
        let mut im = Array2::zeros((d, m));
        for (g, (block, gr, gi)) in self.groups.iter().enumerate() {
            let (cr, ci) = prop.to_eigen(*block, gr.view(), gi.view());
            for (node, &(gg, col)) in self.loc.iter().enumerate() {
                if gg == g {
                    re.column_mut(node).assign(&cr.column(col));
                    im.column_mut(node).assign(&ci.column(col));
                }
            }
        }
        prop.phase(&mut re, &mut im);
        (re, im)
    }
}

/// Projects phased coefficients of `parents` onto `block`.
fn project(prop: &Propagator, block: Block, cr: &Array2<f64>, ci: &Array2<f64>, parents: &[usize]) -> (Array2<f64>, Array2<f64>) {
    let gr = cr.select(Axis(1), parents);
    let gi = ci.select(Axis(1), parents);
    prop.from_eigen(block, gr.view(), gi.view())
}

fn embed(model: &ModelSpec, block: Block, re: &Array2<f64>, im: &Array2<f64>, out: &mut Array2<C64>, cols: &[usize]) {
    let rows = model.rows(block);
    for (k, &c) in cols.iter().enumerate() {
        let mut dst = out.slice_mut(s![rows.clone(), c]);
        for (i, z) in dst.iter_mut().enumerate() {
            *z = C64::new(re[[i, k]], im[[i, k]]);
        }
    }
}

/// Evaluates every label of `set` by sequential project–propagate steps,
/// computing each distinct prefix once (level by level).
pub fn branch_states(model: &ModelSpec, psi0: &StateVector, set: &HistorySet, dt: f64) -> Result<BranchStates> {
    Ok(branch_states_multi(model, psi0, set, dt, &[set.length()])?.pop().expect("one length requested"))
}

/// Like [`branch_states`] for each truncation `set.truncate(L)`, `L ∈ lengths`,
/// sharing one pass over the prefixes.
pub fn branch_states_multi(
    model: &ModelSpec,
    psi0: &StateVector,
    set: &HistorySet,
    dt: f64,
    lengths: &[usize],
) -> Result<Vec<BranchStates>> {
    if psi0.dim() != model.dim() {
        return Err(Error::InvalidInput(format!("state dim {} does not match model dim {}", psi0.dim(), model.dim())));
    }
    let l_max = set.length();
    if let Some(&bad) = lengths.iter().find(|&&l| l == 0 || l > l_max) {
        return Err(Error::InvalidInput(format!("length {bad} outside 1..={l_max}")));
    }
    let prop = model.propagator(dt);
    let d = model.dim();
    let mut results: Vec<Option<BranchStates>> = vec![None; lengths.len()];

    let (r0, i0) = split(psi0.coeffs().insert_axis(Axis(1)));
    let mut level = Level { groups: vec![(Block::All, r0, i0)], loc: vec![(0, 0)] };
    // Prefix (of the current length) → node index.
    let mut index: HashMap<&[u8], usize> = HashMap::from([(&set.labels()[0].bits()[..0], 0)]);

    for p in 0..l_max {
        let (cr, ci) = level.phased_coefficients(&prop);

        // Truncations of length p + 1 < l_max end with Π0 on the nodes of length p.
        for (slot, _) in lengths.iter().enumerate().filter(|(_, &l)| l == p + 1 && l < l_max) {
            let trunc = set.truncate(p + 1)?;
            let parents: Vec<usize> = trunc.labels().iter().map(|t| index[&t.bits()[..p]]).collect();
            let (yr, yi) = project(&prop, Block::Zero, &cr, &ci, &parents);
            let mut states = Array2::zeros((d, parents.len()));
            embed(model, Block::Zero, &yr, &yi, &mut states, &(0..parents.len()).collect::<Vec<_>>());
            results[slot] = Some(BranchStates::new(trunc.labels().to_vec(), states)?);
        }

        let mut next: HashMap<&[u8], usize> = HashMap::new();
        let mut children: Vec<(&[u8], usize, u8)> = Vec::new();
        for l in set.labels() {
            let pre = &l.bits()[..p + 1];
            if !next.contains_key(pre) {
                next.insert(pre, children.len());
                children.push((pre, index[&pre[..p]], pre[p]));
            }
        }
        let mut groups = Vec::new();
        let mut loc = vec![(0, 0); children.len()];
        for bit in [0u8, 1] {
            let members: Vec<usize> = (0..children.len()).filter(|&c| children[c].2 == bit).collect();
            if members.is_empty() {
                continue;
            }
            let parents: Vec<usize> = members.iter().map(|&c| children[c].1).collect();
            let (yr, yi) = project(&prop, Block::from_bit(bit), &cr, &ci, &parents);
            for (col, &c) in members.iter().enumerate() {
                loc[c] = (groups.len(), col);
            }
            groups.push((Block::from_bit(bit), yr, yi));
        }
        level = Level { groups, loc };
        index = next;
    }

    for (slot, _) in lengths.iter().enumerate().filter(|(_, &l)| l == l_max) {
        let mut states = Array2::zeros((d, set.len()));
        for (k, l) in set.labels().iter().enumerate() {
            let (g, col) = level.loc[index[l.bits()]];
            let (block, gr, gi) = &level.groups[g];
            embed(
                model,
                *block,
                &gr.slice(s![.., col..col + 1]).to_owned(),
                &gi.slice(s![.., col..col + 1]).to_owned(),
                &mut states,
                &[k],
            );
        }
        results[slot] = Some(BranchStates::new(set.labels().to_vec(), states)?);
    }
    Ok(results.into_iter().map(|r| r.expect("every requested length is produced")).collect())
}

/// `G_{x,x'} = ⟨ψ(x)|ψ(x')⟩` over all branches; null histories are an error.
pub fn ndf(branches: &BranchStates) -> Result<GramMatrix> {
    let all: Vec<usize> = (0..branches.len()).collect();
    ndf_subset(branches, &all)
}

/// NDF restricted to `indices`.
pub fn ndf_subset(branches: &BranchStates, indices: &[usize]) -> Result<GramMatrix> {
    let m = branches.normalized_matrix(indices)?;
    let mut g = gram_of_columns(m.view())?.into_entries();
    for i in 0..g.nrows() {
        // Normalized columns: pin the diagonal to exactly 1.
        g[[i, i]] = C64::new(1.0, 0.0);
    }
    GramMatrix::from_entries(g)
}

/// True iff every off-diagonal `|G_ij| ≤ tol`.
pub fn dhc_check(g: &GramMatrix, tol: f64) -> bool {
    let e = g.entries();
    let n = g.n();
    (0..n).all(|i| (0..n).all(|j| i == j || e[[i, j]].norm() <= tol))
}
