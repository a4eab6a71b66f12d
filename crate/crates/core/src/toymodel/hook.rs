// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::manifold::ChronoManifold;
use crate::steer::{unit_direction, InterventionConfig, SteerVector};

/// Where the per-layer steering direction comes from.
#[derive(Debug, Clone)]
pub enum HookSource {
    /// A fixed vector per layer.
    Vectors(BTreeMap<usize, SteerVector>),
    /// A manifold per layer, read at time `t`.
    Manifolds {
        manifolds: BTreeMap<usize, ChronoManifold>,
        t: f64,
    },
}

/// Residual-stream intervention applied after each listed block, at every
/// position.
#[derive(Debug, Clone)]
pub struct HookSpec {
    pub layers: BTreeSet<usize>,
    pub source: HookSource,
    pub lambda: f64,
}

impl HookSpec {
    pub fn vectors(config: &InterventionConfig, vectors: BTreeMap<usize, SteerVector>) -> Self {
        Self {
            layers: config.layers.clone(),
            source: HookSource::Vectors(vectors),
            lambda: config.lambda,
        }
    }

    pub fn manifolds(
        config: &InterventionConfig,
        manifolds: BTreeMap<usize, ChronoManifold>,
        t: f64,
    ) -> Self {
        Self {
            layers: config.layers.clone(),
            source: HookSource::Manifolds { manifolds, t },
            lambda: config.lambda,
        }
    }

    /// Unit directions per hooked layer, validated against the model shape.
    /// `None` when the hook is a no-op (λ = 0).
    pub(crate) fn resolve(
        &self,
        n_layers: usize,
        dim: usize,
    ) -> Result<Option<BTreeMap<usize, Vec<f64>>>> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::InvalidLambda(self.lambda));
        }
        for &layer in &self.layers {
            if layer >= n_layers {
                return Err(Error::LayerOutOfRange {
                    layer,
                    layers: n_layers,
                });
            }
        }
        if self.lambda == 0.0 {
            return Ok(None);
        }
        let mut units = BTreeMap::new();
        for &layer in &self.layers {
            let v: DVector<f64> = match &self.source {
                HookSource::Vectors(map) => map
                    .get(&layer)
                    .ok_or_else(|| {
                        Error::KeyMismatch(format!("no steering vector for layer {layer}"))
                    })?
                    .v
                    .clone(),
                HookSource::Manifolds { manifolds, t } => {
                    manifolds
                        .get(&layer)
                        .ok_or_else(|| {
                            Error::KeyMismatch(format!("no manifold for layer {layer}"))
                        })?
                        .reconstruct(*t)
                        .v
                }
            };
            if v.len() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "layer {layer} vector d={} vs model dim {dim}",
                    v.len()
                )));
            }
            units.insert(layer, unit_direction(&v)?.as_slice().to_vec());
        }
        Ok(Some(units))
    }
}
