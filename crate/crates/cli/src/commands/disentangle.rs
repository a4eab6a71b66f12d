// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use chronosteer::disentangle::{decomposition_report, DEFAULT_STYLE_COMPONENTS};
use chronosteer::{
    cognitive_vector, fit_style_subspace, load_bundle, Cell, EraLabel, Error, Language, StylePairs,
    StyleSubspace,
};

use super::{load_vectors, require, save_vectors, write_vector_csv};
use crate::error::{CliError, CliResult};
use crate::run::Run;

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisentangleArgs {
    /// Time vectors to decompose.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Paired style bundle: row i of each historical era set and of the
    /// Modern set express the same content.
    #[arg(long)]
    pub style: Option<PathBuf>,
    /// Style subspace rank [default: 2].
    #[arg(long)]
    pub m: Option<usize>,
}

pub fn run(args: DisentangleArgs, out: PathBuf) -> CliResult<()> {
    let vectors_path = require(args.vectors.clone(), "disentangle", "vectors")?;
    let style_path = require(args.style.clone(), "disentangle", "style")?;
    let m = args.m.unwrap_or(DEFAULT_STYLE_COMPONENTS);
    let args = DisentangleArgs { m: Some(m), ..args };

    let mut run = Run::start(out, "disentangle", &args)?;
    run.input("vectors", &vectors_path)?;
    run.input("style", &style_path)?;
    let vectors = load_vectors(&vectors_path)?;
    let style = load_bundle(&style_path)?;

    let mut subspaces: BTreeMap<(usize, Language), StyleSubspace> = BTreeMap::new();
    let mut cognitive = Vec::new();
    let mut report = run.csv_writer("disentangle.csv")?;
    report.write_record([
        "layer",
        "era",
        "language",
        "time_norm",
        "cognitive_norm",
        "max_style_overlap",
        "pythagoras_residual",
        "degenerate",
    ])?;
    for v in &vectors {
        let cell = Cell {
            layer: v.layer,
            era: Some(v.era),
            language: v.language,
        };
        let sub = match subspaces.entry((v.layer, v.language)) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(slot) => {
                let fit = || -> Result<StyleSubspace, Error> {
                    let modern = style
                        .get(v.layer, EraLabel::ANCHOR, v.language)
                        .ok_or(Error::MissingEra(EraLabel::ANCHOR))?;
                    let archaic: Vec<_> = EraLabel::HISTORICAL
                        .iter()
                        .filter_map(|&e| style.get(v.layer, e, v.language))
                        .collect();
                    fit_style_subspace(&StylePairs::pooled(&archaic, modern)?, m)
                };
                let cell = Cell { era: None, ..cell };
                slot.insert(fit().map_err(|e| CliError::Core(e.in_cell(cell)))?)
            }
        };
        let cog = cognitive_vector(v, sub).map_err(|e| e.in_cell(cell))?;
        let r = decomposition_report(v, &cog, sub);
        report.write_record([
            r.layer.to_string(),
            r.era.name().to_string(),
            r.language.tag().to_string(),
            r.time_norm.to_string(),
            r.cognitive_norm.to_string(),
            r.max_style_overlap.to_string(),
            r.pythagoras_residual.to_string(),
            r.degenerate.to_string(),
        ])?;
        cognitive.push(cog);
    }
    report
        .flush()
        .map_err(|e| CliError::io("disentangle.csv", e))?;
    save_vectors(&mut run, "cognitive", &cognitive, "chronosteer disentangle")?;
    write_vector_csv(&mut run, "cognitive.csv", &cognitive)?;
    run.finish()?;
    Ok(())
}
