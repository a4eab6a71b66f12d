// SPDX-License-Identifier: MIT OR Apache-2.0

use nalgebra::DMatrix;

use super::linalg::svd;
use super::{descending_order, rank_tolerance};
use crate::error::{Error, Result};

/// Orthogonal Procrustes: the `d × d` orthogonal `R` minimising
/// `Σᵢ ‖targetᵢ − R·sourceᵢ‖²` over the full orthogonal group (reflections
/// allowed). Rows of `source` and `target` are paired correspondences.
///
/// With `M = targetᵀ·source = U Σ Vᵀ`, the optimum on the span of the data
/// is `U_r V_rᵀ`. Directions with no support in the data (rank-deficient
/// `M`) are completed with the orthogonal map closest to the identity, so
/// the result is deterministic and equals `I` whenever the two complements
/// coincide (in particular when `source` is all zeros).
pub fn procrustes(source: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if source.shape() != target.shape() {
        return Err(Error::ShapeMismatch(format!(
            "procrustes source {:?} vs target {:?}",
            source.shape(),
            target.shape()
        )));
    }
    let (m, d) = source.shape();
    if m == 0 || d == 0 {
        return Err(Error::ShapeMismatch(
            "procrustes needs at least one correspondence".into(),
        ));
    }

    let cross = target.tr_mul(source);
    let dec = svd(&cross, true)?;
    let u = dec.u.expect("u requested");
    let v = dec.v_t.transpose();
    let sigma = dec.singular_values;
    let order = descending_order(sigma.as_slice());
    let u = reorder_columns(&u, &order);
    let v = reorder_columns(&v, &order);

    let sigma_max = sigma[order[0]];
    let tol = rank_tolerance(sigma_max, m.max(d), d);
    let rank = if sigma_max > 0.0 {
        order.iter().take_while(|&&i| sigma[i] > tol).count()
    } else {
        0
    };

    let u_r = u.columns(0, rank);
    let v_r = v.columns(0, rank);
    let mut r = u_r * v_r.transpose();

    if rank < d {
        let u_c = u.columns(rank, d - rank);
        let v_c = v.columns(rank, d - rank);
        // Closest orthogonal map between the two complements: polar factor
        // of U_cᵀ V_c.
        let overlap = u_c.tr_mul(&v_c);
        let psvd = svd(&overlap, true)?;
        let polar = psvd.u.expect("u requested") * psvd.v_t;
        r += u_c * polar * v_c.transpose();
    }
    Ok(r)
}

/// `Σᵢ ‖targetᵢ − R·sourceᵢ‖²`.
pub fn procrustes_objective(source: &DMatrix<f64>, target: &DMatrix<f64>, r: &DMatrix<f64>) -> f64 {
    (target - source * r.transpose()).norm_squared()
}

fn reorder_columns(m: &DMatrix<f64>, order: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), order.len(), |i, j| m[(i, order[j])])
}
