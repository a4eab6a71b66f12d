// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use chronosteer::steer::group_by_cell;
use chronosteer::{
    fit_alignment, save_alignment, transfer_aligned, transfer_direct, AlignmentMap, Cell, Error,
    Language, TransferMode,
};

use super::{load_vectors, require, save_vectors, write_vector_csv};
use crate::error::{CliError, CliResult};
use crate::run::Run;

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignArgs {
    /// Era anchors in the source language (one per era and layer).
    #[arg(long)]
    pub source: Option<PathBuf>,
    /// Era anchors in the target language [default: the source bundle].
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Source language [default: zh].
    #[arg(long)]
    pub from: Option<Language>,
    /// Target language [default: en].
    #[arg(long)]
    pub to: Option<Language>,
    /// `direct` relabels vectors, `aligned` rotates them [default: aligned].
    #[arg(long)]
    pub mode: Option<TransferMode>,
    /// Vectors to transfer [default: the source-language anchors].
    #[arg(long)]
    pub vectors: Option<PathBuf>,
}

pub fn run(args: AlignArgs, out: PathBuf) -> CliResult<()> {
    let source_path = require(args.source.clone(), "align", "source")?;
    let from = args.from.unwrap_or(Language::Zh);
    let to = args.to.unwrap_or(Language::En);
    let mode = args.mode.unwrap_or(TransferMode::Aligned);
    let args = AlignArgs {
        from: Some(from),
        to: Some(to),
        mode: Some(mode),
        ..args
    };

    let mut run = Run::start(out, "align", &args)?;
    run.input("source", &source_path)?;
    let source = load_vectors(&source_path)?;
    let target = match &args.target {
        Some(p) => {
            run.input("target", p)?;
            load_vectors(p)?
        }
        None => source.clone(),
    };
    let to_transfer: Vec<_> = match &args.vectors {
        Some(p) => {
            run.input("vectors", p)?;
            load_vectors(p)?
        }
        None => source.clone(),
    }
    .into_iter()
    .filter(|v| v.language == from)
    .collect();

    let mut maps: BTreeMap<usize, AlignmentMap> = BTreeMap::new();
    if mode == TransferMode::Aligned {
        let src_cells = group_by_cell(&source);
        let tgt_cells = group_by_cell(&target);
        let mut csv = run.csv_writer("alignment.csv")?;
        csv.write_record(["layer", "source", "target", "residual", "correspondences"])?;
        for ((layer, lang), src) in &src_cells {
            if *lang != from {
                continue;
            }
            let cell = Cell {
                layer: *layer,
                era: None,
                language: to,
            };
            let tgt = tgt_cells
                .get(&(*layer, to))
                .ok_or_else(|| Error::KeyMismatch(format!("no {to} anchors")).in_cell(cell))?;
            let map = fit_alignment(src, tgt).map_err(|e| e.in_cell(cell))?;
            save_alignment(
                &map,
                &run.output("alignment").join(format!("layer{layer:02}")),
            )?;
            csv.write_record([
                layer.to_string(),
                from.tag().to_string(),
                to.tag().to_string(),
                map.residual.to_string(),
                map.correspondences.to_string(),
            ])?;
            maps.insert(*layer, map);
        }
        csv.flush().map_err(|e| CliError::io("alignment.csv", e))?;
    }

    let transferred = to_transfer
        .iter()
        .map(|v| match mode {
            TransferMode::Direct => Ok(transfer_direct(v, to)),
            TransferMode::Aligned => {
                let cell = Cell {
                    layer: v.layer,
                    era: Some(v.era),
                    language: v.language,
                };
                let map = maps.get(&v.layer).ok_or_else(|| {
                    Error::KeyMismatch("no alignment fitted for this layer".into()).in_cell(cell)
                })?;
                transfer_aligned(v, map).map_err(|e| e.in_cell(cell))
            }
        })
        .collect::<Result<Vec<_>, Error>>()?;
    save_vectors(&mut run, "transferred", &transferred, "chronosteer align")?;
    write_vector_csv(&mut run, "transferred.csv", &transferred)?;
    run.finish()?;
    Ok(())
}
