// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use chronosteer::evaluate::{
    aggregate_historical, write_ppl_csv, write_scores_csv, EraAggregate, ScoreRow,
};
use chronosteer::{
    diagonal_dominance, extract_entities, fixtures, ppl_matrix, score_epistemic, Averaging,
    EpistemicScore, EraKnowledgeBase, EraLabel, NllTable,
};

use crate::error::{config_err, CliError, CliResult};
use crate::run::Run;

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalArgs {
    /// JSON array of `{dataset, era, method, text}` generations to score.
    #[arg(long)]
    pub outputs: Option<PathBuf>,
    /// Entity knowledge base (TSV: entity, era) [default: built-in].
    #[arg(long)]
    pub kb: Option<PathBuf>,
    /// JSON array of `{signal, corpus, texts}` token-NLL cells.
    #[arg(long)]
    pub nll: Option<PathBuf>,
    /// `micro` pools tokens, `macro` averages per text [default: micro].
    #[arg(long)]
    pub averaging: Option<Averaging>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputRecord {
    pub dataset: String,
    /// Target era the generation was steered toward.
    pub era: EraLabel,
    pub method: String,
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NllRecord {
    pub signal: EraLabel,
    pub corpus: EraLabel,
    pub texts: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
struct GroupScore {
    dataset: String,
    method: String,
    score: EpistemicScore,
    entities: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Aggregate {
    dataset: String,
    method: String,
    #[serde(flatten)]
    aggregate: EraAggregate,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn run(args: EvalArgs, out: PathBuf) -> CliResult<()> {
    if args.outputs.is_none() && args.nll.is_none() {
        return Err(config_err("eval needs `outputs` and/or `nll`"));
    }
    let averaging = args.averaging.unwrap_or_default();
    let args = EvalArgs {
        averaging: Some(averaging),
        ..args
    };
    let mut run = Run::start(out, "eval", &args)?;

    if let Some(path) = &args.outputs {
        run.input("outputs", path)?;
        let kb = match &args.kb {
            Some(p) => {
                run.input("kb", p)?;
                EraKnowledgeBase::load(p)?
            }
            None => fixtures::knowledge_base(),
        };
        let records: Vec<OutputRecord> = read_json(path)?;
        let mut groups: BTreeMap<(String, String, EraLabel), Vec<String>> = BTreeMap::new();
        for r in &records {
            groups
                .entry((r.dataset.clone(), r.method.clone(), r.era))
                .or_default()
                .extend(extract_entities(&r.text, &kb));
        }
        let mut scored = Vec::new();
        let mut rows = Vec::new();
        let mut per_method: BTreeMap<(String, String), Vec<EpistemicScore>> = BTreeMap::new();
        for ((dataset, method, era), entities) in groups {
            if entities.is_empty() {
                log::warn!("{dataset}/{method}/{era}: no entities found; skipped");
                continue;
            }
            let score = score_epistemic(&entities, era, &kb)?;
            rows.push(ScoreRow::new(&dataset, &method, &score));
            per_method
                .entry((dataset.clone(), method.clone()))
                .or_default()
                .push(score);
            scored.push(GroupScore {
                dataset,
                method,
                score,
                entities,
            });
        }
        write_scores_csv(run.file_writer("scores.csv")?, &rows)?;
        run.write_json("scores.json", &scored)?;
        let aggregates: Vec<Aggregate> = per_method
            .into_iter()
            .filter_map(|((dataset, method), scores)| {
                aggregate_historical(&scores).map(|aggregate| Aggregate {
                    dataset,
                    method,
                    aggregate,
                })
            })
            .collect();
        let mut w = run.csv_writer("aggregate.csv")?;
        w.write_record([
            "dataset", "method", "flr_mean", "flr_std", "pr_mean", "pr_std", "eras",
        ])?;
        for a in &aggregates {
            w.write_record([
                a.dataset.clone(),
                a.method.clone(),
                a.aggregate.flr.mean.to_string(),
                a.aggregate.flr.std.to_string(),
                a.aggregate.pr.mean.to_string(),
                a.aggregate.pr.std.to_string(),
                a.aggregate.eras.to_string(),
            ])?;
        }
        w.flush().map_err(|e| CliError::io("aggregate.csv", e))?;
    }

    if let Some(path) = &args.nll {
        run.input("nll", path)?;
        let records: Vec<NllRecord> = read_json(path)?;
        let mut table = NllTable::new();
        for r in records {
            table
                .entry((r.signal, r.corpus))
                .or_default()
                .extend(r.texts);
        }
        let m = ppl_matrix(&table, averaging)?;
        write_ppl_csv(run.file_writer("ppl.csv")?, &m)?;
        let dominance = diagonal_dominance(&m)?;
        let dominant = dominance.iter().filter(|r| r.is_min_on_diagonal).count();
        log::info!(
            "eval: diagonal dominance in {dominant}/{} rows",
            dominance.len()
        );
        run.write_json("dominance.json", &dominance)?;
    }
    run.finish()?;
    Ok(())
}
