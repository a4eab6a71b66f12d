// SPDX-License-Identifier: MIT OR Apache-2.0

//! Dense numeric kernels shared by the higher-level modules.
//!
//! Everything here is a pure function over `nalgebra` matrices in `f64`.
//! Decompositions (SVD, symmetric eigen) go to LAPACK; the PCA sign
//! convention, the Procrustes tie-break, the natural spline and Isomap are
//! implemented here.

mod isomap;
mod linalg;
mod pca;
mod procrustes;
mod spline;

pub use isomap::{classical_mds, geodesic_distances, isomap};
pub use pca::{pca_fit, pca_fit_with, Centering, PcaBasis, PcaFit};
pub use procrustes::{procrustes, procrustes_objective};
pub use spline::CubicSpline1D;

use nalgebra::DMatrix;

/// Flip each column so that its largest-magnitude entry is positive.
/// Ties pick the first such entry.
pub(crate) fn fix_column_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > best_abs {
                best_abs = x.abs();
                best = i;
            }
        }
        if best_abs > 0.0 && col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Indices of `values` sorted in descending order (stable).
pub(crate) fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

/// Numerical-rank cutoff in the style of `matrix_rank`: `max(n, d) · ε · σ_max`.
pub(crate) fn rank_tolerance(sigma_max: f64, nrows: usize, ncols: usize) -> f64 {
    sigma_max * nrows.max(ncols) as f64 * f64::EPSILON * 4.0
}
