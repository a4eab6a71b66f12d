// SPDX-License-Identifier: MIT OR Apache-2.0

//! SVD and symmetric eigendecomposition through LAPACK.
//!
//! nalgebra's own SVD returns wrong factors for some rank-deficient inputs,
//! which PCA and Procrustes hit routinely, so both decompositions go through
//! `ndarray-linalg` instead. Matrices stay `nalgebra` types at the boundary.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use ndarray_linalg::{Eigh, SVD, UPLO};

use crate::error::{Error, Result};

/// Thin SVD `m = U diag(σ) Vᵀ` with `r = min(n, d)` singular values in
/// descending order. `u` is `None` unless requested.
pub(crate) struct Svd {
    pub u: Option<DMatrix<f64>>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

fn to_ndarray(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn(m.shape(), |(i, j)| m[(i, j)])
}

fn lapack_err(e: ndarray_linalg::error::LinalgError) -> Error {
    Error::Numerical(e.to_string())
}

pub(crate) fn svd(m: &DMatrix<f64>, want_u: bool) -> Result<Svd> {
    let (n, d) = m.shape();
    let r = n.min(d);
    if r == 0 {
        return Ok(Svd {
            u: want_u.then(|| DMatrix::zeros(n, 0)),
            singular_values: DVector::zeros(0),
            v_t: DMatrix::zeros(0, d),
        });
    }
    let (u, s, vt) = to_ndarray(m).svd(want_u, true).map_err(lapack_err)?;
    let vt = vt.expect("vt requested");
    Ok(Svd {
        u: u.map(|u| DMatrix::from_fn(n, r, |i, j| u[(i, j)])),
        singular_values: DVector::from_fn(r, |i, _| s[i]),
        v_t: DMatrix::from_fn(r, d, |i, j| vt[(i, j)]),
    })
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a
/// symmetric matrix. Only the lower triangle is read.
pub(crate) fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let (w, v) = to_ndarray(m).eigh(UPLO::Lower).map_err(lapack_err)?;
    Ok((
        DVector::from_fn(n, |i, _| w[i]),
        DMatrix::from_fn(n, n, |i, j| v[(i, j)]),
    ))
}
