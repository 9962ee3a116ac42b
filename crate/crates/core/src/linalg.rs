//! Dense symmetric/Hermitian eigensolvers and a few matrix helpers.
//!
//! The eigensolvers call the LAPACK divide-and-conquer drivers (`dsyevd`,
//! `zheevd`) directly. They are several times faster than the QR-iteration
//! drivers for the full-spectrum problems that dominate this crate.

use std::os::raw::{c_char, c_int};

use ndarray::{Array1, Array2, ArrayView2, ShapeBuilder};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

// Keeps the OpenBLAS link alive; nothing else in the crate names it.
extern crate openblas_src as _;

extern "C" {
    fn openblas_set_num_threads(n: c_int);
}

/// Caps the number of BLAS/LAPACK worker threads.
pub fn set_blas_threads(n: usize) {
    let n = n.clamp(1, c_int::MAX as usize) as c_int;
    // SAFETY: takes a plain integer and only updates OpenBLAS's thread count.
    unsafe { openblas_set_num_threads(n) }
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a real symmetric matrix.
#[derive(Clone, Debug)]
pub struct RealEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<C64>,
}

fn lapack_dim(n: usize) -> Result<i32> {
    i32::try_from(n).map_err(|_| Error::TooLarge(format!("matrix order {n} exceeds LAPACK index range")))
}

fn square(shape: &[usize]) -> Result<usize> {
    if shape[0] != shape[1] {
        return Err(Error::InvalidInput(format!("expected a square matrix, got {}x{}", shape[0], shape[1])));
    }
    Ok(shape[0])
}

fn dsyevd(jobz: u8, n: usize, buf: &mut [f64]) -> Result<Vec<f64>> {
    let ni = lapack_dim(n)?;
    let lda = ni.max(1);
    let mut w = vec![0.0; n];
    let mut info = 0;
    let mut work_q = [0.0f64];
    let mut iwork_q = [0i32];
    unsafe {
        lapack_sys::dsyevd_(
            &(jobz as c_char), &(b'L' as c_char), &ni, buf.as_mut_ptr(), &lda, w.as_mut_ptr(),
            work_q.as_mut_ptr(), &-1, iwork_q.as_mut_ptr(), &-1, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::NumericFailure(format!("dsyevd workspace query failed (info={info})")));
    }
    let lwork = work_q[0] as i32;
    let liwork = iwork_q[0];
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack_sys::dsyevd_(
            &(jobz as c_char), &(b'L' as c_char), &ni, buf.as_mut_ptr(), &lda, w.as_mut_ptr(),
            work.as_mut_ptr(), &lwork, iwork.as_mut_ptr(), &liwork, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::NumericFailure(format!("dsyevd did not converge (info={info})")));
    }
    Ok(w)
}

fn zheevd(jobz: u8, n: usize, buf: &mut [C64]) -> Result<Vec<f64>> {
    let ni = lapack_dim(n)?;
    let lda = ni.max(1);
    let mut w = vec![0.0; n];
    let mut info = 0;
    let mut work_q = [C64::new(0.0, 0.0)];
    let mut rwork_q = [0.0f64];
    let mut iwork_q = [0i32];
    unsafe {
        lapack_sys::zheevd_(
            &(jobz as c_char), &(b'L' as c_char), &ni, buf.as_mut_ptr() as *mut _, &lda, w.as_mut_ptr(),
            work_q.as_mut_ptr() as *mut _, &-1, rwork_q.as_mut_ptr(), &-1, iwork_q.as_mut_ptr(), &-1,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::NumericFailure(format!("zheevd workspace query failed (info={info})")));
    }
    let lwork = work_q[0].re as i32;
    let lrwork = rwork_q[0] as i32;
    let liwork = iwork_q[0];
    let mut work = vec![C64::new(0.0, 0.0); lwork.max(1) as usize];
    let mut rwork = vec![0.0f64; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack_sys::zheevd_(
            &(jobz as c_char), &(b'L' as c_char), &ni, buf.as_mut_ptr() as *mut _, &lda, w.as_mut_ptr(),
            work.as_mut_ptr() as *mut _, &lwork, rwork.as_mut_ptr(), &lrwork, iwork.as_mut_ptr(), &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::NumericFailure(format!("zheevd did not converge (info={info})")));
    }
    Ok(w)
}

/// Full eigendecomposition of a real symmetric matrix. Only the lower
/// triangle is read.
pub fn eigh_real(a: ArrayView2<f64>) -> Result<RealEigen> {
    let n = square(a.shape())?;
    // A symmetric matrix is its own transpose, so row-major data is already
    // the column-major input LAPACK expects.
    let mut buf: Vec<f64> = a.iter().copied().collect();
    let w = dsyevd(b'V', n, &mut buf)?;
    let vectors = Array2::from_shape_vec((n, n).f(), buf).expect("buffer length matches n*n");
    Ok(RealEigen { values: Array1::from(w), vectors })
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn eigvalsh_real(a: ArrayView2<f64>) -> Result<Array1<f64>> {
    let n = square(a.shape())?;
    let mut buf: Vec<f64> = a.iter().copied().collect();
    Ok(Array1::from(dsyevd(b'N', n, &mut buf)?))
}

/// Full eigendecomposition of a Hermitian matrix.
pub fn eigh_herm(a: ArrayView2<C64>) -> Result<HermEigen> {
    let n = square(a.shape())?;
    // Row-major data read as column-major is the transpose, i.e. the complex
    // conjugate of a Hermitian matrix; conjugating restores A itself.
    let mut buf: Vec<C64> = a.iter().map(|z| z.conj()).collect();
    let w = zheevd(b'V', n, &mut buf)?;
    let vectors = Array2::from_shape_vec((n, n).f(), buf).expect("buffer length matches n*n");
    Ok(HermEigen { values: Array1::from(w), vectors })
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh_herm(a: ArrayView2<C64>) -> Result<Array1<f64>> {
    let n = square(a.shape())?;
    let mut buf: Vec<C64> = a.iter().map(|z| z.conj()).collect();
    Ok(Array1::from(zheevd(b'N', n, &mut buf)?))
}

/// `A† B` for column-stacked state matrices.
pub fn adjoint_dot(a: ArrayView2<C64>, b: ArrayView2<C64>) -> Array2<C64> {
    let ah = a.t().mapv(|z| z.conj());
    ah.dot(&b)
}

/// Overwrite the lower triangle with the conjugate of the upper one, making
/// the matrix exactly Hermitian (and its diagonal exactly real).
pub fn hermitize(m: &mut Array2<C64>) {
    let n = m.nrows();
    for i in 0..n {
        m[[i, i]].im = 0.0;
        for j in (i + 1)..n {
            m[[j, i]] = m[[i, j]].conj();
        }
    }
}

/// Largest entry-wise modulus of `a − b`.
pub fn max_abs_diff(a: ArrayView2<C64>, b: ArrayView2<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
