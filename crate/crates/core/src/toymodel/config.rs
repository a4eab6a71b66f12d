// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::acts::{read_json, write_json};
use crate::error::{Error, Result};

/// Shape and seed of the toy decoder. Weights are a pure function of this
/// struct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyModelConfig {
    pub layers: usize,
    pub dim: usize,
    pub heads: usize,
    pub vocab: usize,
    pub context: usize,
    pub seed: u64,
}

impl Default for ToyModelConfig {
    fn default() -> Self {
        Self {
            layers: 4,
            dim: 32,
            heads: 4,
            vocab: 256,
            context: 128,
            seed: 0,
        }
    }
}

impl ToyModelConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("layers", self.layers),
            ("dim", self.dim),
            ("heads", self.heads),
            ("vocab", self.vocab),
            ("context", self.context),
        ] {
            if v == 0 {
                return Err(Error::InvalidArgument(format!(
                    "toy model {name} must be positive"
                )));
            }
        }
        if !self.dim.is_multiple_of(self.heads) {
            return Err(Error::InvalidArgument(format!(
                "toy model dim {} not divisible by heads {}",
                self.dim, self.heads
            )));
        }
        if self.vocab > 256 {
            return Err(Error::InvalidArgument(
                "toy model is byte-level: vocab <= 256".into(),
            ));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.dim / self.heads
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Self = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}
