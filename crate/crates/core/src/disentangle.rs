// SPDX-License-Identifier: MIT OR Apache-2.0

//! Style/cognition separation.
//!
//! The style subspace is spanned by the top principal directions of
//! `archaic − modern` activation differences over semantically matched
//! pairs. A cognitive vector is what remains of a time vector after
//! rejecting that subspace: `v − U (Uᵀ v)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::acts::{ActivationSet, EraLabel, Language};
use crate::error::{Error, Result};
use crate::numerics::{pca_fit_with, Centering};
use crate::steer::{Method, SteerVector};

pub const DEFAULT_STYLE_COMPONENTS: usize = 2;
pub const MAX_STYLE_COMPONENTS: usize = 8;

/// Relative norm below which a cognitive vector is reported as degenerate.
const DEGENERATE_RATIO: f64 = 1e-6;

/// Per-pair difference vectors (`archaic − modern`) for one layer and language.
#[derive(Debug, Clone, PartialEq)]
pub struct StylePairs {
    pub layer: usize,
    pub language: Language,
    /// One row per pair.
    pub differences: DMatrix<f64>,
}

impl StylePairs {
    pub fn len(&self) -> usize {
        self.differences.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pair row `i` of `archaic` with row `i` of `modern`.
    pub fn from_sets(archaic: &ActivationSet, modern: &ActivationSet) -> Result<Self> {
        Self::pooled(&[archaic], modern)
    }

    /// Pool pairs from several archaic eras against the same modern set.
    pub fn pooled(archaic: &[&ActivationSet], modern: &ActivationSet) -> Result<Self> {
        if modern.era != EraLabel::ANCHOR {
            return Err(Error::KeyMismatch(format!(
                "modern side of style pairs is {}",
                modern.era
            )));
        }
        let mut rows: Vec<f64> = Vec::new();
        let mut count = 0;
        for set in archaic {
            if set.layer != modern.layer
                || set.language != modern.language
                || set.dim() != modern.dim()
            {
                return Err(Error::KeyMismatch(format!(
                    "style pair sides differ: {} vs {}",
                    set.key(),
                    modern.key()
                )));
            }
            if set.era == EraLabel::ANCHOR {
                return Err(Error::KeyMismatch(
                    "archaic side of a style pair cannot be Modern".into(),
                ));
            }
            if set.n() != modern.n() {
                return Err(Error::ShapeMismatch(format!(
                    "{} has {} rows but {} has {}",
                    set.key(),
                    set.n(),
                    modern.key(),
                    modern.n()
                )));
            }
            for (a, m) in set.rows().zip(modern.rows()) {
                rows.extend(a.iter().zip(m).map(|(&x, &y)| f64::from(x) - f64::from(y)));
                count += 1;
            }
        }
        Ok(Self {
            layer: modern.layer,
            language: modern.language,
            differences: DMatrix::from_row_slice(count, modern.dim(), &rows),
        })
    }
}

/// Orthonormal `d × m` basis of the dominant stylistic directions.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleSubspace {
    pub layer: usize,
    pub language: Language,
    pub basis: DMatrix<f64>,
}

impl StyleSubspace {
    pub fn m(&self) -> usize {
        self.basis.ncols()
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.basis * self.basis.tr_mul(v)
    }

    /// `v − U (Uᵀ v)`.
    pub fn reject(&self, v: &DVector<f64>) -> DVector<f64> {
        v - self.project(v)
    }
}

/// Top-`m` principal directions of the pair differences. Differences are
/// not mean-centred: a shift shared by every pair is the style signal.
pub fn fit_style_subspace(pairs: &StylePairs, m: usize) -> Result<StyleSubspace> {
    if m == 0 || m > MAX_STYLE_COMPONENTS {
        return Err(Error::InvalidArgument(format!(
            "style components m={m} outside 1..={MAX_STYLE_COMPONENTS}"
        )));
    }
    if pairs.len() < m + 1 {
        return Err(Error::TooFewPairs {
            needed: m + 1,
            got: pairs.len(),
        });
    }
    let fit = pca_fit_with(&pairs.differences, m, Centering::None)?;
    Ok(StyleSubspace {
        layer: pairs.layer,
        language: pairs.language,
        basis: fit.basis.components,
    })
}

/// Reject the style subspace from a time vector.
pub fn cognitive_vector(v_time: &SteerVector, style: &StyleSubspace) -> Result<SteerVector> {
    if v_time.layer != style.layer
        || v_time.language != style.language
        || v_time.dim() != style.dim()
    {
        return Err(Error::KeyMismatch(format!(
            "time vector (layer {}, {}, d={}) vs style subspace (layer {}, {}, d={})",
            v_time.layer,
            v_time.language,
            v_time.dim(),
            style.layer,
            style.language,
            style.dim()
        )));
    }
    let v = style.reject(&v_time.v);
    let before = v_time.norm();
    if before > 0.0 && v.norm() <= DEGENERATE_RATIO * before {
        log::warn!(
            "cognitive vector at layer {} ({}, {}) vanished: style spans the whole time vector",
            v_time.layer,
            v_time.era,
            v_time.language
        );
    }
    let mut out = SteerVector::new(
        v_time.layer,
        v_time.era,
        v_time.language,
        Method::Cognitive,
        v,
    );
    out.provenance = v_time.provenance.clone();
    out.provenance.base_method = Some(v_time.method);
    Ok(out)
}

/// Numeric checks on one decomposition, emitted by front ends.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub layer: usize,
    pub era: EraLabel,
    pub language: Language,
    /// `max_u |⟨v_cog, u⟩|` over style basis columns.
    pub max_style_overlap: f64,
    /// `| ‖v‖² − ‖v_cog‖² − ‖proj‖² |`.
    pub pythagoras_residual: f64,
    pub time_norm: f64,
    pub cognitive_norm: f64,
    pub degenerate: bool,
}

pub fn decomposition_report(
    v_time: &SteerVector,
    v_cog: &SteerVector,
    style: &StyleSubspace,
) -> DecompositionReport {
    let overlap = style.basis.tr_mul(&v_cog.v).amax();
    let proj = style.project(&v_time.v);
    let pyth = (v_time.v.norm_squared() - v_cog.v.norm_squared() - proj.norm_squared()).abs();
    DecompositionReport {
        layer: v_time.layer,
        era: v_time.era,
        language: v_time.language,
        max_style_overlap: overlap,
        pythagoras_residual: pyth,
        time_norm: v_time.norm(),
        cognitive_norm: v_cog.norm(),
        degenerate: v_time.norm() > 0.0 && v_cog.norm() <= DEGENERATE_RATIO * v_time.norm(),
    }
}
