// SPDX-License-Identifier: MIT OR Apache-2.0

use nalgebra::{DMatrix, DVector};

use super::{descending_order, fix_column_signs, rank_tolerance};
use crate::error::{Error, Result};

/// Whether rows are mean-centred before the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Centering {
    /// Classical PCA: subtract the row mean.
    Mean,
    /// Principal directions of the raw rows (second-moment PCA). The stored
    /// mean is zero.
    None,
}

/// Mean, orthonormal principal directions (`d × k`) and their variances.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    pub mean: DVector<f64>,
    pub components: DMatrix<f64>,
    pub explained_variance: DVector<f64>,
}

impl PcaBasis {
    pub fn k(&self) -> usize {
        self.components.ncols()
    }

    pub fn dim(&self) -> usize {
        self.components.nrows()
    }

    /// Latent coordinates `Uᵀ (x − μ)`.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        self.components.tr_mul(&(x - &self.mean))
    }

    /// `μ + U z`.
    pub fn reconstruct(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.mean + &self.components * z
    }
}

/// Result of a PCA fit. `requested_k > basis.k()` when the data's numerical
/// rank forced a smaller basis; a warning is logged in that case.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaFit {
    pub basis: PcaBasis,
    pub requested_k: usize,
}

impl PcaFit {
    pub fn was_reduced(&self) -> bool {
        self.basis.k() < self.requested_k
    }
}

/// Mean-centred PCA of the `n × d` matrix `rows`, keeping `k` components.
pub fn pca_fit(rows: &DMatrix<f64>, k: usize) -> Result<PcaFit> {
    pca_fit_with(rows, k, Centering::Mean)
}

pub fn pca_fit_with(rows: &DMatrix<f64>, k: usize, centering: Centering) -> Result<PcaFit> {
    let (n, d) = rows.shape();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    if k == 0 {
        return Err(Error::InvalidArgument("PCA needs k >= 1".into()));
    }
    if rows.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "PCA input contains non-finite values".into(),
        ));
    }

    let (mean, centred, dof) = match centering {
        Centering::Mean => {
            let mean = rows.row_mean().transpose();
            let mut c = rows.clone();
            for mut r in c.row_iter_mut() {
                r -= mean.transpose();
            }
            (mean, c, (n - 1) as f64)
        }
        Centering::None => (DVector::zeros(d), rows.clone(), n as f64),
    };

    let svd = super::linalg::svd(&centred, false)?;
    let v_t = svd.v_t;
    let sigma = svd.singular_values;
    let order = descending_order(sigma.as_slice());

    let sigma_max = sigma[order[0]];
    let tol = rank_tolerance(sigma_max, n, d);
    let mut rank = order.iter().take_while(|&&i| sigma[i] > tol).count();
    if centering == Centering::Mean {
        rank = rank.min(n - 1);
    }
    if rank == 0 {
        return Err(Error::RankDeficient {
            requested: k,
            rank: 0,
        });
    }
    let kept = k.min(rank);
    if kept < k {
        log::warn!("PCA: requested k={k} exceeds numerical rank {rank}; using k={kept}");
    }

    let mut components = DMatrix::zeros(d, kept);
    let mut explained = DVector::zeros(kept);
    for (j, &src) in order.iter().take(kept).enumerate() {
        components.set_column(j, &v_t.row(src).transpose());
        explained[j] = sigma[src] * sigma[src] / dof;
    }
    fix_column_signs(&mut components);

    Ok(PcaFit {
        basis: PcaBasis {
            mean,
            components,
            explained_variance: explained,
        },
        requested_k: k,
    })
}
