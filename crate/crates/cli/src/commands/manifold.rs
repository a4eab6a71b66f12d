// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use chronosteer::manifold::{trajectory_points, write_trajectory_csv, DEFAULT_K};
use chronosteer::steer::group_by_cell;
use chronosteer::{fit_manifold, load_bundle, save_manifold, trajectory_coords, Cell, EraLabel};

use super::{cell_dir, load_vectors, require};
use crate::error::{CliError, CliResult};
use crate::run::Run;

/// Directory (inside the run) holding one manifold per `(layer, language)`.
pub const MANIFOLDS_DIR: &str = "manifolds";

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifoldArgs {
    /// Anchor vectors (CAA or EnsCAA) for all four eras.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Latent rank [default: 3].
    #[arg(long)]
    pub k: Option<usize>,
    /// Times at which to report reconstructions [default: 0,0.5,...,3].
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// Activation bundle for the per-sample trajectory embedding.
    #[arg(long)]
    pub acts: Option<PathBuf>,
    /// Neighbours in the trajectory graph [default: 8].
    #[arg(long)]
    pub neighbors: Option<usize>,
}

pub fn run(args: ManifoldArgs, out: PathBuf) -> CliResult<()> {
    let vectors_path = require(args.vectors.clone(), "manifold", "vectors")?;
    let k = args.k.unwrap_or(DEFAULT_K);
    let times = args
        .times
        .clone()
        .unwrap_or_else(|| (0..=6).map(|i| i as f64 * 0.5).collect());
    let neighbors = args.neighbors.unwrap_or(8);
    let args = ManifoldArgs {
        k: Some(k),
        times: Some(times.clone()),
        neighbors: Some(neighbors),
        ..args
    };

    let mut run = Run::start(out, "manifold", &args)?;
    run.input("vectors", &vectors_path)?;
    let vectors = load_vectors(&vectors_path)?;

    let mut summary = run.csv_writer("manifolds.csv")?;
    summary.write_record([
        "layer",
        "language",
        "method",
        "k",
        "requested_k",
        "explained_variance",
    ])?;
    let mut recon = run.csv_writer("reconstruct.csv")?;
    recon.write_record(["layer", "language", "t", "nearest_era", "norm"])?;

    for ((layer, language), anchors) in group_by_cell(&vectors) {
        let cell = Cell {
            layer,
            era: None,
            language,
        };
        let m = fit_manifold(&anchors, k).map_err(|e| e.in_cell(cell))?;
        save_manifold(
            &m,
            &run.output(MANIFOLDS_DIR).join(cell_dir(layer, language)),
        )?;
        let variance: Vec<String> = m
            .basis
            .explained_variance
            .iter()
            .map(|x| x.to_string())
            .collect();
        summary.write_record([
            layer.to_string(),
            language.tag().to_string(),
            m.method.name().to_string(),
            m.k().to_string(),
            m.requested_k.to_string(),
            variance.join(" "),
        ])?;
        for &t in &times {
            let v = m.reconstruct(t);
            recon.write_record([
                layer.to_string(),
                language.tag().to_string(),
                t.to_string(),
                v.era.name().to_string(),
                v.norm().to_string(),
            ])?;
        }
    }
    summary
        .flush()
        .map_err(|e| CliError::io("manifolds.csv", e))?;
    recon
        .flush()
        .map_err(|e| CliError::io("reconstruct.csv", e))?;

    if let Some(acts_path) = &args.acts {
        run.input("acts", acts_path)?;
        let acts = load_bundle(acts_path)?;
        for layer in acts.layers() {
            for language in acts.languages() {
                let sets: Vec<_> = EraLabel::ALL
                    .iter()
                    .filter_map(|&e| acts.get(layer, e, language))
                    .collect();
                if sets.is_empty() {
                    continue;
                }
                let cell = Cell {
                    layer,
                    era: None,
                    language,
                };
                let rows = trajectory_coords(&trajectory_points(&sets), neighbors)
                    .map_err(|e| e.in_cell(cell))?;
                let name = format!("trajectory/{}.csv", cell_dir(layer, language));
                write_trajectory_csv(run.file_writer(&name)?, &rows)?;
            }
        }
    }
    run.finish()?;
    Ok(())
}
