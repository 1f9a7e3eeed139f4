//! Spectral radius by block power iteration.
//!
//! A plain single-vector power iteration stalls when the dominant eigenvalue
//! of a real nonsymmetric matrix is a complex-conjugate pair, which is the
//! common case for random reservoirs. We iterate a small orthonormal block
//! instead (subspace iteration) and read the estimate off the Ritz values of
//! the projected `k x k` matrix.

use nalgebra::DMatrix;

use super::matrix::{gemm, GemmOperand, Matrix2D};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 10_000;

/// Tolerance used by [`scale_to_radius`]; tighter than [`DEFAULT_TOL`] so the
/// rescaled matrix lands on the target to well under 1e-6 relative.
pub const SCALE_TOL: f64 = 1e-12;

const BLOCK: usize = 16;

/// Estimate `max |eigenvalue|` of a square matrix.
///
/// The start block is fixed: column 0 is the normalised all-ones vector and
/// column `j > 0` is the `j`-th DCT-II basis vector. Iteration stops once two
/// successive estimates differ by less than `tol * max(1, estimate)`.
pub fn spectral_radius(w: &Matrix2D, tol: f64, max_iters: usize) -> Result<f64> {
    if !w.is_square() {
        return Err(Error::dim(format!(
            "spectral radius of a {}x{} matrix",
            w.rows(),
            w.cols()
        )));
    }
    if max_iters == 0 {
        return Err(Error::param("max_iters must be >= 1"));
    }
    let n = w.rows();
    if n == 0 {
        return Err(Error::dim("spectral radius of an empty matrix"));
    }
    let k = BLOCK.min(n);

    let mut q = vec![0.0; n * k];
    for i in 0..n {
        q[i * k] = 1.0;
        for j in 1..k {
            q[i * k + j] = (std::f64::consts::PI * j as f64 * (i as f64 + 0.5) / n as f64).cos();
        }
    }
    orthonormalize_columns(&mut q, n, k);

    let mut z = vec![0.0; n * k];
    let mut h = vec![0.0; k * k];
    let mut previous: Option<f64> = None;
    for _ in 0..max_iters {
        gemm(
            n,
            n,
            k,
            GemmOperand::row_major(w.as_slice(), n),
            GemmOperand::row_major(&q, k),
            &mut z,
        );
        gemm(
            k,
            n,
            k,
            GemmOperand::transposed(&q, k),
            GemmOperand::row_major(&z, k),
            &mut h,
        );
        let estimate = ritz_radius(&h, k)?;
        if let Some(prev) = previous {
            if (estimate - prev).abs() < tol * estimate.max(1.0) {
                return Ok(estimate);
            }
        }
        previous = Some(estimate);
        std::mem::swap(&mut q, &mut z);
        orthonormalize_columns(&mut q, n, k);
    }
    Err(Error::Convergence {
        iterations: max_iters,
        last_estimate: previous.unwrap_or(f64::NAN),
    })
}

/// Rescale `w` so its spectral radius equals `target`.
pub fn scale_to_radius(w: &Matrix2D, target: f64) -> Result<Matrix2D> {
    if !target.is_finite() || target < 0.0 {
        return Err(Error::param(format!("target radius {target}")));
    }
    if w.as_slice().iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate(
            "cannot rescale the zero matrix to a spectral radius".into(),
        ));
    }
    let rho = spectral_radius(w, SCALE_TOL, DEFAULT_MAX_ITERS)?;
    let frobenius = w.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
    if rho <= f64::EPSILON * frobenius {
        return Err(Error::Degenerate(format!(
            "matrix has spectral radius {rho}; nothing to rescale"
        )));
    }
    Ok(w.scaled(target / rho))
}

fn ritz_radius(h: &[f64], k: usize) -> Result<f64> {
    let m = DMatrix::from_row_slice(k, k, h);
    let radius = m
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max);
    if radius.is_finite() {
        Ok(radius)
    } else {
        Err(Error::Numerical("non-finite Ritz value".into()))
    }
}

/// Modified Gram-Schmidt, two passes, over the columns of a row-major
/// `n x k` buffer. Columns that collapse to (numerically) zero are zeroed.
fn orthonormalize_columns(q: &mut [f64], n: usize, k: usize) {
    for j in 0..k {
        for _pass in 0..2 {
            for p in 0..j {
                let mut d = 0.0;
                for i in 0..n {
                    d += q[i * k + p] * q[i * k + j];
                }
                for i in 0..n {
                    q[i * k + j] -= d * q[i * k + p];
                }
            }
        }
        let norm = (0..n).map(|i| q[i * k + j] * q[i * k + j]).sum::<f64>().sqrt();
        if norm > 1e-200 {
            for i in 0..n {
                q[i * k + j] /= norm;
            }
        } else {
            for i in 0..n {
                q[i * k + j] = 0.0;
            }
        }
    }
}
