//! Square-root measurement, success probabilities, unambiguous-detection
//! bounds, the self-location rotation and mutual-information estimators.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::ensembles::{GramMatrix, StateFamily, StateVector, WeightVector};
use crate::error::{Error, Result};
use crate::linalg;
use crate::stats::{binary_entropy, harmonic, sum};
use crate::C64;

/// Eigenvalues below this are treated as zero.
pub const EIG_FLOOR: f64 = 1e-12;
/// Smallest eigenvalue accepted as invertible.
pub const INVERTIBLE_MIN: f64 = 1e-10;
pub const SPAN_TOL: f64 = 1e-6;

enum Vectors {
    Real(Array2<f64>),
    Complex(Array2<C64>),
}

/// Eigendecomposition of a Gram matrix, real when the matrix is exactly real.
struct Spectral {
    values: Array1<f64>,
    vectors: Vectors,
}

impl Spectral {
    fn of(g: &GramMatrix) -> Result<Self> {
        if g.is_real() {
            let e = linalg::eigh_real(g.real_part().view())?;
            Ok(Spectral { values: e.values, vectors: Vectors::Real(e.vectors) })
        } else {
            let e = linalg::eigh_herm(g.entries())?;
            Ok(Spectral { values: e.values, vectors: Vectors::Complex(e.vectors) })
        }
    }

    fn min(&self) -> f64 {
        self.values[0]
    }

    /// `V f(Λ) V†`.
    fn apply(&self, f: impl Fn(f64) -> f64) -> Array2<C64> {
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = match &self.vectors {
            Vectors::Real(v) => {
                let mut scaled = v.clone();
                for (mut col, s) in scaled.axis_iter_mut(Axis(1)).zip(&fl) {
                    col *= *s;
                }
                scaled.dot(&v.t()).mapv(|x| C64::new(x, 0.0))
            }
            Vectors::Complex(v) => {
                let mut scaled = v.clone();
                for (mut col, s) in scaled.axis_iter_mut(Axis(1)).zip(&fl) {
                    col.mapv_inplace(|z| z * *s);
                }
                scaled.dot(&v.t().mapv(|z| z.conj()))
            }
        };
        linalg::hermitize(&mut out);
        out
    }

    /// Diagonal of `V f(Λ) V†`, `Σ_k |V_jk|² f(λ_k)`.
    fn diag_apply(&self, f: impl Fn(f64) -> f64) -> Array1<f64> {
        let fl = Array1::from_iter(self.values.iter().map(|&l| f(l)));
        match &self.vectors {
            Vectors::Real(v) => v.mapv(|x| x * x).dot(&fl),
            Vectors::Complex(v) => v.mapv(|z| z.norm_sqr()).dot(&fl),
        }
    }
}

fn sqrt_floor(l: f64) -> f64 {
    if l > EIG_FLOOR {
        l.sqrt()
    } else {
        0.0
    }
}

fn inv_sqrt_floor(l: f64) -> f64 {
    if l > EIG_FLOOR {
        1.0 / l.sqrt()
    } else {
        0.0
    }
}

/// The pretty-good measurement for a set of pure states.
#[derive(Clone, Debug)]
pub struct SqrtMeasurement {
    record_coefficients: Array2<C64>,
    sqrt_gram: Array2<C64>,
}

impl SqrtMeasurement {
    /// `G^{−1/2}`: column `j` expands `|s_j⟩` in the input states.
    pub fn record_coefficients(&self) -> ArrayView2<'_, C64> {
        self.record_coefficients.view()
    }

    /// `G^{1/2}`: column `j` expands `|ψ_j⟩` in the records.
    pub fn sqrt_gram(&self) -> ArrayView2<'_, C64> {
        self.sqrt_gram.view()
    }

    /// `|√G_jj|²` for every state.
    pub fn success_probabilities(&self) -> Array1<f64> {
        self.sqrt_gram.diag().mapv(|z| z.norm_sqr())
    }

    /// Records as columns in the ambient space of `states`.
    pub fn records(&self, states: &StateFamily) -> Array2<C64> {
        states.to_matrix().dot(&self.record_coefficients)
    }
}

fn check_weights(g: &GramMatrix, w: &WeightVector) -> Result<()> {
    if w.len() != g.n() {
        return Err(Error::InvalidInput(format!("{} weights for {} states", w.len(), g.n())));
    }
    Ok(())
}

/// Builds `G^{±1/2}` from a Hermitian eigendecomposition.
pub fn sqrt_measurement(g: &GramMatrix) -> Result<SqrtMeasurement> {
    let sp = Spectral::of(g)?;
    if sp.min() <= INVERTIBLE_MIN {
        return Err(Error::RankDeficient(sp.min()));
    }
    Ok(SqrtMeasurement { record_coefficients: sp.apply(inv_sqrt_floor), sqrt_gram: sp.apply(sqrt_floor) })
}

/// `P̄_S = Σ_j q_j |√G_jj|²`. Singular (positive semidefinite) `G` is
/// accepted; eigenvalues below the floor count as zero.
pub fn average_success(g: &GramMatrix, weights: &WeightVector) -> Result<f64> {
    check_weights(g, weights)?;
    let d = Spectral::of(g)?.diag_apply(sqrt_floor);
    Ok(sum(d.iter().zip(weights.weights()).map(|(s, q)| q * s * s)))
}

/// `(P_UN, (det G)^{1/N})` with `P_UN` the smallest eigenvalue.
pub fn unambiguous_bounds(g: &GramMatrix) -> Result<(f64, f64)> {
    let ev = g.eigenvalues()?;
    let n = ev.len() as f64;
    let p_un = if ev[0] > EIG_FLOOR { ev[0] } else { 0.0 };
    if p_un == 0.0 {
        return Ok((0.0, 0.0));
    }
    let det_root = (sum(ev.iter().map(|l| l.ln())) / n).exp();
    Ok((p_un, det_root))
}

/// Two-plane rotation `V` taking `|Φ⟩` to `|Ψ⟩`, in record coordinates.
#[derive(Clone, Debug)]
pub struct SlpRotation {
    pub u1: Array1<C64>,
    /// `None` when `F = 1` and `V` is the identity.
    pub u2: Option<Array1<C64>>,
    /// `arccos F`.
    pub angle: f64,
}

#[derive(Clone, Debug)]
pub struct SlpSolution {
    pub fidelity: f64,
    pub overlap_t: f64,
    pub rotation: SlpRotation,
    pub success_qsd: f64,
    pub success_slp: f64,
    pub gap_bound: f64,
}

/// `2√(2(1−F)P̄T) + 2(1−F)T`.
pub fn slp_gap_bound(fidelity: f64, success: f64, overlap_t: f64) -> f64 {
    let one_minus = (1.0 - fidelity).max(0.0);
    2.0 * (2.0 * one_minus * success * overlap_t).sqrt() + 2.0 * one_minus * overlap_t
}

/// `Σ_j √q_j |ψ_j⟩`, normalized.
pub fn universal_state(states: &StateFamily, weights: &WeightVector) -> Result<StateVector> {
    if weights.len() != states.len() {
        return Err(Error::InvalidInput(format!("{} weights for {} states", weights.len(), states.len())));
    }
    let a = states.to_matrix();
    let w = weights.weights().mapv(|q| C64::new(q.sqrt(), 0.0));
    StateVector::normalize(a.dot(&w))
}

/// Rotates the sqrt-measurement records so that `Σ_j |s_j⟩/√N` becomes `Ψ`
/// and compares the resulting average success with the unrotated one.
pub fn slp_solve(
    g: &GramMatrix,
    states: &StateFamily,
    psi: &StateVector,
    weights: &WeightVector,
) -> Result<SlpSolution> {
    check_weights(g, weights)?;
    if states.len() != g.n() {
        return Err(Error::InvalidInput(format!("{} states for a {}x{} Gram matrix", states.len(), g.n(), g.n())));
    }
    if psi.dim() != states.dim() {
        return Err(Error::InvalidInput(format!("psi has dim {} but states have {}", psi.dim(), states.dim())));
    }
    let sm = sqrt_measurement(g)?;
    let n = g.n();
    let q = weights.weights();

    // Coordinates of Ψ on the records: ⟨s_j|Ψ⟩ = (G^{−1/2} A†Ψ)_j.
    let overlaps = linalg::adjoint_dot(states.to_matrix().view(), psi.coeffs().insert_axis(Axis(1)));
    let c = sm.record_coefficients.dot(&overlaps.column(0));
    let psi_norm2 = psi.norm_sqr();
    let captured = sum(c.iter().map(|z| z.norm_sqr()));
    let residual = 1.0 - captured / psi_norm2;
    if residual > SPAN_TOL {
        return Err(Error::SpanViolation(residual));
    }
    let mut c = c.mapv(|z| z / captured.sqrt());

    let inv_rt = 1.0 / (n as f64).sqrt();
    let s: C64 = c.sum() * inv_rt;
    let fidelity = s.norm().min(1.0);
    if fidelity > 0.0 {
        let phase = s.conj() / s.norm();
        c.mapv_inplace(|z| z * phase);
    }
    let u1 = Array1::from_elem(n, C64::new(inv_rt, 0.0));
    let diag = sm.sqrt_gram.diag().to_owned();
    let success_qsd = sum((0..n).map(|j| q[j] * diag[j].norm_sqr()));

    let sin2 = 1.0 - fidelity * fidelity;
    if sin2 <= 1e-15 {
        let overlap_t = sum(q.iter().map(|qj| qj * inv_rt * inv_rt));
        return Ok(SlpSolution {
            fidelity: 1.0,
            overlap_t,
            rotation: SlpRotation { u1, u2: None, angle: 0.0 },
            success_qsd,
            success_slp: success_qsd,
            gap_bound: 0.0,
        });
    }
    let b = sin2.sqrt();
    let u2 = (&c - &u1.mapv(|z| z * fidelity)).mapv(|z| z / b);
    let w1 = sm.sqrt_gram.dot(&u1);
    let w2 = sm.sqrt_gram.dot(&u2);
    let a = fidelity - 1.0;
    let mut success_slp = 0.0;
    let mut overlap_t = 0.0;
    for j in 0..n {
        let (v1, v2) = (u1[j].conj(), u2[j].conj());
        let y = (w1[j] * v1 + w2[j] * v2) * a + (w2[j] * v1 - w1[j] * v2) * b;
        success_slp += q[j] * (diag[j].conj() + y).norm_sqr();
        overlap_t += q[j] * (u1[j].norm_sqr() + u2[j].norm_sqr());
    }
    Ok(SlpSolution {
        fidelity,
        overlap_t,
        rotation: SlpRotation { u1, u2: Some(u2), angle: fidelity.acos() },
        success_qsd,
        success_slp,
        gap_bound: slp_gap_bound(fidelity, success_qsd, overlap_t),
    })
}

/// Joint probabilities `q_ij` of history `i` and record `j`, with marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTable {
    q: Array2<f64>,
    rows: Array1<f64>,
    cols: Array1<f64>,
}

impl JointTable {
    /// Validates a nonnegative table summing to 1 and derives its marginals.
    pub fn new(q: Array2<f64>) -> Result<Self> {
        if q.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidInput("joint table has negative entries".into()));
        }
        let total = sum(q.iter().copied());
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!("joint table sums to {total}")));
        }
        let rows = q.rows().into_iter().map(|r| sum(r.iter().copied())).collect();
        let cols = q.columns().into_iter().map(|c| sum(c.iter().copied())).collect();
        Ok(JointTable { q, rows, cols })
    }

    /// Product `q_i μ_{j|i}` of a row distribution and a conditional table.
    pub fn from_conditional(row: ArrayView1<f64>, conditional: ArrayView2<f64>) -> Result<Self> {
        let mut q = conditional.to_owned();
        for (mut r, p) in q.rows_mut().into_iter().zip(row.iter()) {
            r *= *p;
        }
        JointTable::new(q)
    }

    pub fn entries(&self) -> ArrayView2<'_, f64> {
        self.q.view()
    }

    pub fn row_marginal(&self) -> ArrayView1<'_, f64> {
        self.rows.view()
    }

    pub fn column_marginal(&self) -> ArrayView1<'_, f64> {
        self.cols.view()
    }
}

/// `q_ij = |√G_ji|² q_i` for the sqrt measurement. `G` must come from
/// normalized states; singular `G` is accepted as in [`average_success`].
pub fn joint_table(g: &GramMatrix, weights: &WeightVector) -> Result<JointTable> {
    check_weights(g, weights)?;
    if let Some(j) = g.entries().diag().iter().position(|z| (z.re - 1.0).abs() > 1e-8) {
        return Err(Error::InvalidInput(format!("G_{j}{j} is not 1; states must be normalized")));
    }
    let r = Spectral::of(g)?.apply(sqrt_floor);
    let w = weights.weights();
    let q = Array2::from_shape_fn((g.n(), g.n()), |(i, j)| r[[j, i]].norm_sqr() * w[i]);
    // Absorb the rounding of √G·√G against the unit diagonal.
    let total = sum(q.iter().copied());
    JointTable::new(q / total)
}

/// `Σ q_ij [ln q_ij − ln(q_i q'_j)]` in nats.
pub fn mutual_information(table: &JointTable) -> f64 {
    let (r, c) = (table.row_marginal(), table.column_marginal());
    sum(table.q.indexed_iter().filter(|(_, &x)| x > 0.0).map(|((i, j), &x)| x * (x.ln() - (r[i] * c[j]).ln())))
}

fn check_mf(p: f64, n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 histories, got {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("success probability {p} outside [0, 1]")));
    }
    Ok(())
}

/// `ln N − H₂(P) − (1−P) ln(N−1)`.
pub fn mi_mean_field(p_s: f64, n: usize) -> Result<f64> {
    check_mf(p_s, n)?;
    let nf = n as f64;
    Ok(nf.ln() - binary_entropy(p_s) - (1.0 - p_s) * (nf - 1.0).ln())
}

/// `ln N − H₂(P) − (1−P)(H_{N−1} − 1)`.
pub fn mi_fluct(p_s: f64, n: usize) -> Result<f64> {
    check_mf(p_s, n)?;
    Ok((n as f64).ln() - binary_entropy(p_s) - (1.0 - p_s) * (harmonic(n as u64 - 1) - 1.0))
}

fn check_large_n(d: usize, n: usize) -> Result<()> {
    if d < 3 {
        return Err(Error::InvalidInput(format!("record dimension {d} < 3")));
    }
    if n <= d {
        return Err(Error::UnsupportedRegime(format!("N = {n} ≤ d = {d}; use the standard mean-field path")));
    }
    Ok(())
}

/// Conditional table `μ_{j|i}` (rows: histories, columns: `d` records) when
/// `N > d`: the first `d−1` histories are tuned to the first `d−1` records,
/// the remaining histories spread `1/d` over all records.
pub fn large_n_table(p_s: f64, d: usize, n: usize) -> Result<Array2<f64>> {
    check_large_n(d, n)?;
    let off = (1.0 - p_s) / (d - 2) as f64;
    Ok(Array2::from_shape_fn((n, d), |(i, j)| {
        if i + 1 >= d {
            1.0 / d as f64
        } else if j + 1 == d {
            0.0
        } else if i == j {
            p_s
        } else {
            off
        }
    }))
}

/// Mutual information of [`large_n_table`] under uniform `q_i = 1/N`,
/// evaluated blockwise without forming the table.
pub fn large_n_mutual_information(p_s: f64, d: usize, n: usize) -> Result<f64> {
    check_large_n(d, n)?;
    let (nf, df) = (n as f64, d as f64);
    let extra = (n - d + 1) as f64;
    let off = (1.0 - p_s) / (df - 2.0);
    let col_tuned = 1.0 / nf + extra / (df * nf);
    let col_dull = extra / (df * nf);
    let term = |mu: f64, col: f64| if mu > 0.0 { mu / nf * (mu / col).ln() } else { 0.0 };
    let tuned_rows = (df - 1.0) * (term(p_s, col_tuned) + (df - 2.0) * term(off, col_tuned));
    let dull_rows = extra * ((df - 1.0) * term(1.0 / df, col_tuned) + term(1.0 / df, col_dull));
    Ok(tuned_rows + dull_rows)
}

/// Approximate location and value of the largest mean-field mutual
/// information at `d = 2^K`, in bits. Returns `(N*, I_max)`.
pub fn mi_max_estimate(k: u32, c: f64) -> Result<(f64, f64)> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("K = {k} < 2")));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidInput(format!("c = {c} outside (0, 1)")));
    }
    let kf = k as f64;
    let beta = 2.0 * std::f64::consts::LN_2 / c;
    let s = kf + beta.log2();
    let i_max = (1.0 - 1.0 / s) * (kf - (c * s).log2());
    let n_star = 2f64.powi(k as i32) / (c * s);
    Ok((n_star, i_max))
}

/// `β = 2 ln 2 / c`.
pub fn mi_max_beta(c: f64) -> f64 {
    2.0 * std::f64::consts::LN_2 / c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_gram_is_rank_deficient() {
        let g = GramMatrix::from_entries(Array2::from_elem((2, 2), C64::new(1.0, 0.0))).unwrap();
        assert!(matches!(sqrt_measurement(&g), Err(Error::RankDeficient(_))));
        assert_eq!(unambiguous_bounds(&g).unwrap().0, 0.0);
    }

    #[test]
    fn large_n_requires_more_histories() {
        assert!(matches!(large_n_table(0.7, 8, 8), Err(Error::UnsupportedRegime(_))));
        assert!(large_n_table(0.7, 2, 8).is_err());
    }

    #[test]
    fn mean_field_domain() {
        assert!(mi_mean_field(0.5, 1).is_err());
        assert!(mi_fluct(1.5, 10).is_err());
    }
}
