// SPDX-License-Identifier: MIT OR Apache-2.0

pub mod align;
pub mod disentangle;
pub mod eval;
pub mod extract;
pub mod manifold;
pub mod steer;
pub mod toygen;

use std::path::{Path, PathBuf};

use chronosteer::steer::{vectors_from_bundle, vectors_to_bundle};
use chronosteer::{load_bundle, save_bundle, Language, SteerVector, ToyModelConfig};

use crate::error::{config_err, CliResult};
use crate::run::Run;

/// Name of the model config written by `toygen` and read by `steer`.
pub const MODEL_FILE: &str = "model.json";

pub(crate) fn require<T>(value: Option<T>, section: &str, key: &str) -> CliResult<T> {
    value.ok_or_else(|| {
        config_err(format!(
            "missing `{key}` (flag --{} or [{section}] {key})",
            key.replace('_', "-")
        ))
    })
}

pub(crate) fn load_vectors(path: &Path) -> CliResult<Vec<SteerVector>> {
    Ok(vectors_from_bundle(&load_bundle(path)?)?)
}

pub(crate) fn save_vectors(
    run: &mut Run,
    name: &str,
    vectors: &[SteerVector],
    source: &str,
) -> CliResult<PathBuf> {
    let dir = run.output(name);
    save_bundle(&vectors_to_bundle(vectors, source)?, &dir)?;
    Ok(dir)
}

/// `layer{L:02}-{lang}`, the directory name used for per-cell artifacts.
pub(crate) fn cell_dir(layer: usize, language: Language) -> String {
    format!("layer{layer:02}-{}", language.tag())
}

pub(crate) fn model_config(path: Option<&Path>, seed: Option<u64>) -> CliResult<ToyModelConfig> {
    let mut cfg = match path {
        Some(p) => ToyModelConfig::load(p)?,
        None => ToyModelConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

pub(crate) fn lossy(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

/// Rows of `(layer, era, language, method, norm)` for a vector listing.
pub(crate) fn write_vector_csv(
    run: &mut Run,
    name: &str,
    vectors: &[SteerVector],
) -> CliResult<()> {
    let mut w = run.csv_writer(name)?;
    w.write_record(["layer", "era", "language", "method", "norm"])?;
    for v in vectors {
        w.write_record([
            v.layer.to_string(),
            v.era.name().to_string(),
            v.language.tag().to_string(),
            v.method.name().to_string(),
            v.norm().to_string(),
        ])?;
    }
    w.flush()
        .map_err(|e| crate::error::CliError::io(run.dir.join(name), e))?;
    Ok(())
}
