// SPDX-License-Identifier: MIT OR Apache-2.0

//! Discrete era steering vectors and the norm-relative intervention.
//!
//! A steering vector is a contrast of centroids: target-era activations
//! minus Modern-anchor activations at the same layer. Vectors from
//! model-generated prompts (CAA) and from authentic corpora (real) are
//! blended convexly into an ensemble vector.
//!
//! The intervention adds a fixed fraction of the hidden state's own norm
//! along the unit steering direction:
//!
//! ```text
//! h' = h + λ · ‖h‖₂ · v / ‖v‖₂
//! ```
//!
//! so `‖h' − h‖₂ = λ‖h‖₂` regardless of layer scale.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::acts::{centroid, ActivationBundle, ActivationSet, EraLabel, Language};
use crate::error::{Error, Result};

/// Strength range that is accepted without a warning by front ends.
pub const RECOMMENDED_LAMBDA: RangeInclusive<f64> = 0.05..=0.15;

/// Mixing weight used when none is configured.
pub const DEFAULT_ALPHA: f64 = 0.5;

/// How a steering vector was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "CAA")]
    Caa,
    /// Mean shift over authentic corpus activations (input to the ensemble).
    #[serde(rename = "Real")]
    Real,
    #[serde(rename = "EnsCAA")]
    EnsCaa,
    #[serde(rename = "CMP")]
    Cmp,
    #[serde(rename = "EnsCMP")]
    EnsCmp,
    Cognitive,
    Transferred,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Caa => "CAA",
            Method::Real => "Real",
            Method::EnsCaa => "EnsCAA",
            Method::Cmp => "CMP",
            Method::EnsCmp => "EnsCMP",
            Method::Cognitive => "Cognitive",
            Method::Transferred => "Transferred",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Method::Caa,
            Method::Real,
            Method::EnsCaa,
            Method::Cmp,
            Method::EnsCmp,
            Method::Cognitive,
            Method::Transferred,
        ]
        .into_iter()
        .find(|m| m.name().eq_ignore_ascii_case(s))
        .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransferMode {
    Direct,
    Aligned,
}

impl FromStr for TransferMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(TransferMode::Direct),
            "aligned" => Ok(TransferMode::Aligned),
            other => Err(Error::InvalidArgument(format!(
                "unknown transfer mode `{other}`"
            ))),
        }
    }
}

/// Optional provenance carried alongside a vector and persisted in manifests.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Real-valued manifold time the vector was reconstructed at.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transfer: Option<TransferMode>,
    /// Language the vector was extracted in, before any transfer.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin_language: Option<Language>,
    /// Method of the vector before it was transferred or disentangled.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_method: Option<Method>,
}

/// A single per-layer direction with era, language and method provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SteerVector {
    pub layer: usize,
    pub era: EraLabel,
    pub language: Language,
    pub method: Method,
    pub v: DVector<f64>,
    pub provenance: Provenance,
}

impl SteerVector {
    pub fn new(
        layer: usize,
        era: EraLabel,
        language: Language,
        method: Method,
        v: DVector<f64>,
    ) -> Self {
        Self {
            layer,
            era,
            language,
            method,
            v,
            provenance: Provenance::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn norm(&self) -> f64 {
        self.v.norm()
    }

    fn check_same_cell(&self, other: &SteerVector, what: &str) -> Result<()> {
        if self.layer != other.layer
            || self.era != other.era
            || self.language != other.language
            || self.dim() != other.dim()
        {
            return Err(Error::KeyMismatch(format!(
                "{what}: (layer {}, {}, {}, d={}) vs (layer {}, {}, {}, d={})",
                self.layer,
                self.era,
                self.language,
                self.dim(),
                other.layer,
                other.era,
                other.language,
                other.dim()
            )));
        }
        Ok(())
    }
}

fn contrast(target: &ActivationSet, anchor: &ActivationSet, method: Method) -> Result<SteerVector> {
    if anchor.era != EraLabel::ANCHOR {
        return Err(Error::KeyMismatch(format!(
            "anchor set must be {}, got {}",
            EraLabel::ANCHOR,
            anchor.era
        )));
    }
    if target.layer != anchor.layer
        || target.language != anchor.language
        || target.dim() != anchor.dim()
    {
        return Err(Error::KeyMismatch(format!(
            "target (layer {}, {}, d={}) vs anchor (layer {}, {}, d={})",
            target.layer,
            target.language,
            target.dim(),
            anchor.layer,
            anchor.language,
            anchor.dim()
        )));
    }
    // The anchor contrasted with its own era is zero by definition.
    let v = if target.era == EraLabel::ANCHOR {
        DVector::zeros(target.dim())
    } else {
        centroid(target) - centroid(anchor)
    };
    Ok(SteerVector::new(
        target.layer,
        target.era,
        target.language,
        method,
        v,
    ))
}

/// Contrastive activation addition: `centroid(target) − centroid(anchor)`.
pub fn extract_caa(target: &ActivationSet, anchor: &ActivationSet) -> Result<SteerVector> {
    contrast(target, anchor, Method::Caa)
}

/// Same mean-difference over authentic-corpus activations; tagged [`Method::Real`].
pub fn extract_real(corpus_set: &ActivationSet, anchor: &ActivationSet) -> Result<SteerVector> {
    contrast(corpus_set, anchor, Method::Real)
}

/// Convex blend `α·v_caa + (1 − α)·v_real`.
pub fn ensemble(v_caa: &SteerVector, v_real: &SteerVector, alpha: f64) -> Result<SteerVector> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    v_caa.check_same_cell(v_real, "ensemble")?;
    let v = &v_caa.v * alpha + &v_real.v * (1.0 - alpha);
    let mut out = SteerVector::new(v_caa.layer, v_caa.era, v_caa.language, Method::EnsCaa, v);
    out.provenance.alpha = Some(alpha);
    Ok(out)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidLambda(lambda));
    }
    Ok(())
}

/// Unit direction of `v`; `ZeroVector` when it has no length.
pub fn unit_direction(v: &DVector<f64>) -> Result<DVector<f64>> {
    let norm = v.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(v / norm)
}

/// In-place `h += λ·‖h‖·unit`. `unit` must already be normalised.
pub fn steer_in_place(h: &mut [f64], unit: &[f64], lambda: f64) {
    if lambda == 0.0 {
        return;
    }
    let scale = lambda * h.iter().map(|x| x * x).sum::<f64>().sqrt();
    for (x, u) in h.iter_mut().zip(unit) {
        *x += scale * u;
    }
}

/// Norm-relative intervention on one hidden state.
pub fn apply_intervention(h: &DVector<f64>, v: &SteerVector, lambda: f64) -> Result<DVector<f64>> {
    check_lambda(lambda)?;
    if h.len() != v.dim() {
        return Err(Error::ShapeMismatch(format!(
            "hidden state d={} vs steering vector d={}",
            h.len(),
            v.dim()
        )));
    }
    if lambda == 0.0 {
        return Ok(h.clone());
    }
    let unit = unit_direction(&v.v)?;
    let mut out = h.clone();
    steer_in_place(out.as_mut_slice(), unit.as_slice(), lambda);
    Ok(out)
}

/// Which sequence positions an intervention touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PositionPolicy {
    #[default]
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionConfig {
    pub lambda: f64,
    pub layers: BTreeSet<usize>,
    #[serde(default)]
    pub positions: PositionPolicy,
}

impl InterventionConfig {
    pub fn new(lambda: f64, layers: BTreeSet<usize>) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self {
            lambda,
            layers,
            positions: PositionPolicy::All,
        })
    }

    /// Middle third of an `n_layers`-deep model.
    pub fn default_for(lambda: f64, n_layers: usize) -> Result<Self> {
        Self::new(lambda, default_layers(n_layers))
    }

    pub fn is_recommended(&self) -> bool {
        RECOMMENDED_LAMBDA.contains(&self.lambda)
    }
}

/// Layer indices `⌊n/3⌋ .. ⌈2n/3⌉`, never empty for `n ≥ 1`.
pub fn default_layers(n_layers: usize) -> BTreeSet<usize> {
    let start = n_layers / 3;
    let end = (2 * n_layers).div_ceil(3).max(start + 1).min(n_layers);
    (start..end).collect()
}

// ---------------------------------------------------------------------------
// Persistence as an activation bundle with one row per set
// ---------------------------------------------------------------------------

/// Pack vectors into a bundle: one `n = 1` set per vector, with `method`
/// and any provenance written as manifest fields.
pub fn vectors_to_bundle(vectors: &[SteerVector], source: &str) -> Result<ActivationBundle> {
    let sets = vectors
        .iter()
        .map(|sv| {
            let data = sv.v.iter().map(|&x| x as f32).collect();
            let mut set =
                ActivationSet::new(sv.layer, sv.era, sv.language, sv.dim(), data, source)?;
            set.tags
                .insert("method".into(), Value::from(sv.method.name()));
            if let Value::Object(map) = serde_json::to_value(&sv.provenance)? {
                set.tags.extend(map);
            }
            Ok(set)
        })
        .collect::<Result<Vec<_>>>()?;
    ActivationBundle::new(sets)
}

/// Inverse of [`vectors_to_bundle`]. Every set must have exactly one row
/// and a `method` field.
pub fn vectors_from_bundle(bundle: &ActivationBundle) -> Result<Vec<SteerVector>> {
    bundle
        .sets()
        .iter()
        .map(|set| {
            if set.n() != 1 {
                return Err(Error::MalformedManifest(format!(
                    "steering set `{}` has {} rows, expected 1",
                    set.key(),
                    set.n()
                )));
            }
            let mut tags = set.tags.clone();
            let method = match tags.remove("method") {
                Some(Value::String(s)) => s.parse::<Method>()?,
                _ => {
                    return Err(Error::MalformedManifest(format!(
                        "steering set `{}` lacks a method field",
                        set.key()
                    )))
                }
            };
            let provenance: Provenance =
                serde_json::from_value(Value::Object(tags.into_iter().collect()))
                    .map_err(|e| Error::MalformedManifest(format!("set `{}`: {e}", set.key())))?;
            let v = DVector::from_iterator(set.dim(), set.row(0).iter().map(|&x| f64::from(x)));
            Ok(SteerVector {
                layer: set.layer,
                era: set.era,
                language: set.language,
                method,
                v,
                provenance,
            })
        })
        .collect()
}

/// Index vectors by `(layer, language)` then era.
pub fn group_by_cell(
    vectors: &[SteerVector],
) -> BTreeMap<(usize, Language), BTreeMap<EraLabel, SteerVector>> {
    let mut out: BTreeMap<(usize, Language), BTreeMap<EraLabel, SteerVector>> = BTreeMap::new();
    for sv in vectors {
        out.entry((sv.layer, sv.language))
            .or_default()
            .insert(sv.era, sv.clone());
    }
    out
}
