// SPDX-License-Identifier: MIT OR Apache-2.0

//! Cross-lingual temporal transfer.
//!
//! *Direct* transfer reuses a source-language vector verbatim in the target
//! language. *Aligned* transfer first rotates it with an orthogonal map fit
//! by Procrustes on era-matched correspondences between the two languages.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::acts::{
    f32_rows_to_matrix, matrix_to_f32_rows, read_f32_blob, read_json, write_f32_blob, write_json,
};
use crate::acts::{EraLabel, Language};
use crate::error::{Error, Result};
use crate::numerics::procrustes;
use crate::steer::{Method, SteerVector, TransferMode};

/// Tolerance for `RᵀR = I` on rotations read back from `f32` storage.
const STORED_ROTATION_TOL: f64 = 1e-5;

/// Which correspondences a rotation was fit on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrespondenceSet {
    Anchors,
    AnchorsAndSamples,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentMap {
    pub source_language: Language,
    pub target_language: Language,
    pub layer: usize,
    /// `d × d` orthogonal; maps source vectors to target vectors.
    pub rotation: DMatrix<f64>,
    /// Frobenius misfit `‖Y − X Rᵀ‖` over the correspondences.
    pub residual: f64,
    pub correspondences: usize,
    pub correspondence_set: CorrespondenceSet,
}

impl AlignmentMap {
    pub fn dim(&self) -> usize {
        self.rotation.nrows()
    }
}

fn stack_anchors(
    source: &BTreeMap<EraLabel, SteerVector>,
    target: &BTreeMap<EraLabel, SteerVector>,
) -> Result<(DMatrix<f64>, DMatrix<f64>, usize, Language, Language)> {
    for era in source.keys() {
        if !target.contains_key(era) {
            return Err(Error::MissingEra(*era));
        }
    }
    for era in target.keys() {
        if !source.contains_key(era) {
            return Err(Error::MissingEra(*era));
        }
    }
    let first_src = source
        .values()
        .next()
        .ok_or_else(|| Error::InvalidArgument("alignment needs at least one era".into()))?;
    let first_tgt = &target[&first_src.era];
    let (d, layer) = (first_src.dim(), first_src.layer);
    for (side, vecs, lang) in [
        ("source", source, first_src.language),
        ("target", target, first_tgt.language),
    ] {
        for sv in vecs.values() {
            if sv.dim() != d {
                return Err(Error::ShapeMismatch(format!(
                    "{side} vector {} has d={}, expected {d}",
                    sv.era,
                    sv.dim()
                )));
            }
            if sv.layer != layer {
                return Err(Error::KeyMismatch(format!(
                    "{side} vector {} at layer {}, expected {layer}",
                    sv.era, sv.layer
                )));
            }
            if sv.language != lang {
                return Err(Error::KeyMismatch(format!("{side} vectors mix languages")));
            }
        }
    }
    let eras: Vec<EraLabel> = source.keys().copied().collect();
    let x = DMatrix::from_fn(eras.len(), d, |i, j| source[&eras[i]].v[j]);
    let y = DMatrix::from_fn(eras.len(), d, |i, j| target[&eras[i]].v[j]);
    Ok((x, y, layer, first_src.language, first_tgt.language))
}

/// Rotation from the era anchors alone.
pub fn fit_alignment(
    source: &BTreeMap<EraLabel, SteerVector>,
    target: &BTreeMap<EraLabel, SteerVector>,
) -> Result<AlignmentMap> {
    let (x, y, layer, src_lang, tgt_lang) = stack_anchors(source, target)?;
    finish(x, y, layer, src_lang, tgt_lang, CorrespondenceSet::Anchors)
}

/// Rotation from the era anchors plus extra matched rows (e.g. per-prompt
/// sample centroids paired across languages). Row `i` of `extra_source`
/// corresponds to row `i` of `extra_target`.
pub fn fit_alignment_augmented(
    source: &BTreeMap<EraLabel, SteerVector>,
    target: &BTreeMap<EraLabel, SteerVector>,
    extra_source: &DMatrix<f64>,
    extra_target: &DMatrix<f64>,
) -> Result<AlignmentMap> {
    let (x, y, layer, src_lang, tgt_lang) = stack_anchors(source, target)?;
    if extra_source.shape() != extra_target.shape() || extra_source.ncols() != x.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "extra correspondences {:?} / {:?} vs d={}",
            extra_source.shape(),
            extra_target.shape(),
            x.ncols()
        )));
    }
    let stack = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
        let mut m = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
        m.rows_mut(0, a.nrows()).copy_from(a);
        m.rows_mut(a.nrows(), b.nrows()).copy_from(b);
        m
    };
    finish(
        stack(&x, extra_source),
        stack(&y, extra_target),
        layer,
        src_lang,
        tgt_lang,
        CorrespondenceSet::AnchorsAndSamples,
    )
}

fn finish(
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    layer: usize,
    source_language: Language,
    target_language: Language,
    set: CorrespondenceSet,
) -> Result<AlignmentMap> {
    let rotation = procrustes(&x, &y)?;
    let residual = (&y - &x * rotation.transpose()).norm();
    Ok(AlignmentMap {
        source_language,
        target_language,
        layer,
        rotation,
        residual,
        correspondences: x.nrows(),
        correspondence_set: set,
    })
}

/// Relabel a vector for use in another language, numerically unchanged.
pub fn transfer_direct(v_src: &SteerVector, target_language: Language) -> SteerVector {
    let mut out = v_src.clone();
    out.language = target_language;
    out.method = Method::Transferred;
    out.provenance.transfer = Some(TransferMode::Direct);
    out.provenance.origin_language.get_or_insert(v_src.language);
    if v_src.method != Method::Transferred {
        out.provenance.base_method = Some(v_src.method);
    }
    out
}

/// `R · v_src`, relabelled with the map's target language.
pub fn transfer_aligned(v_src: &SteerVector, map: &AlignmentMap) -> Result<SteerVector> {
    if v_src.language != map.source_language {
        return Err(Error::LanguageMismatch {
            expected: map.source_language,
            got: v_src.language,
        });
    }
    if v_src.dim() != map.dim() {
        return Err(Error::ShapeMismatch(format!(
            "vector d={} vs rotation d={}",
            v_src.dim(),
            map.dim()
        )));
    }
    if v_src.layer != map.layer {
        return Err(Error::KeyMismatch(format!(
            "vector at layer {} vs alignment at layer {}",
            v_src.layer, map.layer
        )));
    }
    let mut out = v_src.clone();
    out.v = &map.rotation * &v_src.v;
    out.language = map.target_language;
    out.method = Method::Transferred;
    out.provenance.transfer = Some(TransferMode::Aligned);
    out.provenance.origin_language.get_or_insert(v_src.language);
    if v_src.method != Method::Transferred {
        out.provenance.base_method = Some(v_src.method);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

pub const ALIGNMENT_FILE: &str = "alignment.json";
const ROTATION_BLOB: &str = "rotation.f32";

#[derive(Debug, Serialize, Deserialize)]
struct AlignmentDoc {
    format: String,
    source_language: Language,
    target_language: Language,
    layer: usize,
    d: usize,
    residual: f64,
    correspondences: usize,
    correspondence_set: CorrespondenceSet,
    rotation_blob: String,
}

pub fn save_alignment(map: &AlignmentMap, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_f32_blob(&dir.join(ROTATION_BLOB), &matrix_to_f32_rows(&map.rotation))?;
    write_json(
        &dir.join(ALIGNMENT_FILE),
        &AlignmentDoc {
            format: "chronosteer.alignment".into(),
            source_language: map.source_language,
            target_language: map.target_language,
            layer: map.layer,
            d: map.dim(),
            residual: map.residual,
            correspondences: map.correspondences,
            correspondence_set: map.correspondence_set,
            rotation_blob: ROTATION_BLOB.into(),
        },
    )
}

pub fn load_alignment(dir: &Path) -> Result<AlignmentMap> {
    let doc: AlignmentDoc = read_json(&dir.join(ALIGNMENT_FILE))?;
    if doc.format != "chronosteer.alignment" {
        return Err(Error::MalformedManifest(format!(
            "unexpected format `{}`",
            doc.format
        )));
    }
    if doc.residual.is_nan() || doc.residual < 0.0 {
        return Err(Error::MalformedManifest(
            "alignment residual must be >= 0".into(),
        ));
    }
    let raw = read_f32_blob(
        &dir.join(&doc.rotation_blob),
        &doc.rotation_blob,
        doc.d,
        doc.d,
    )?;
    let rotation = f32_rows_to_matrix(&raw, doc.d, doc.d);
    let err = (rotation.tr_mul(&rotation) - DMatrix::identity(doc.d, doc.d)).norm();
    if err > STORED_ROTATION_TOL * (doc.d as f64).sqrt() {
        return Err(Error::MalformedManifest(format!(
            "stored rotation is not orthogonal ({err:e})"
        )));
    }
    Ok(AlignmentMap {
        source_language: doc.source_language,
        target_language: doc.target_language,
        layer: doc.layer,
        rotation,
        residual: doc.residual,
        correspondences: doc.correspondences,
        correspondence_set: doc.correspondence_set,
    })
}
