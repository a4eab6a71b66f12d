// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic era corpora run through the toy model, captured into bundles.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use chronosteer::toymodel::corpus::{era_alphabet, synth_corpus};
use chronosteer::{save_bundle, ActivationBundle, EraLabel, Language, ToyModel};

use super::{lossy, model_config, MODEL_FILE};
use crate::error::CliResult;
use crate::run::Run;

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToygenArgs {
    /// Model seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Corpus seed [default: the model seed].
    #[arg(long)]
    pub corpus_seed: Option<u64>,
    /// Model config JSON; `--seed` overrides its seed.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Languages to generate [default: zh,en].
    #[arg(long, value_delimiter = ',')]
    pub languages: Option<Vec<Language>>,
    /// Layers to capture [default: all].
    #[arg(long, value_delimiter = ',')]
    pub layers: Option<Vec<usize>>,
    /// Documents per (era, language) [default: 16].
    #[arg(long)]
    pub docs: Option<usize>,
    /// Style pairs per (era, language) [default: 16].
    #[arg(long)]
    pub style_docs: Option<usize>,
}

#[derive(Debug, Serialize)]
struct CorpusRecord<'a> {
    corpus: &'a str,
    era: EraLabel,
    language: Language,
    index: usize,
    text: String,
}

/// The modern document with each marker byte swapped for the same position
/// in `era`'s alphabet: same content, different surface style.
fn restyle(doc: &[u8], era: EraLabel) -> Vec<u8> {
    let modern = era_alphabet(EraLabel::Modern);
    let target = era_alphabet(era);
    doc.iter()
        .map(|b| match modern.iter().position(|m| m == b) {
            Some(i) => target[i],
            None => *b,
        })
        .collect()
}

pub fn run(args: ToygenArgs, out: PathBuf) -> CliResult<()> {
    let cfg = model_config(args.model.as_deref(), args.seed)?;
    let corpus_seed = args.corpus_seed.unwrap_or(cfg.seed);
    let languages = args
        .languages
        .clone()
        .unwrap_or_else(|| Language::ALL.to_vec());
    let layers = args
        .layers
        .clone()
        .unwrap_or_else(|| (0..cfg.layers).collect());
    let docs = args.docs.unwrap_or(16);
    let style_docs = args.style_docs.unwrap_or(16);
    let args = ToygenArgs {
        seed: Some(cfg.seed),
        corpus_seed: Some(corpus_seed),
        languages: Some(languages.clone()),
        layers: Some(layers.clone()),
        docs: Some(docs),
        style_docs: Some(style_docs),
        ..args
    };
    let mut run = Run::start(out, "toygen", &args)?;
    if let Some(p) = &args.model {
        run.input("model", p)?;
    }
    let model = ToyModel::new(cfg)?;
    run.seed("model", cfg.seed);
    run.seed("corpus", corpus_seed);

    cfg.save(&run.output(MODEL_FILE))?;

    let mut records = Vec::new();
    let mut acts = Vec::new();
    let mut real = Vec::new();
    let mut style = Vec::new();
    for &language in &languages {
        for era in EraLabel::ALL {
            // Two independent draws: prompts for contrastive extraction and
            // an "authentic" corpus for the real-text shift.
            for (name, seed, sink) in [
                ("acts", corpus_seed, &mut acts),
                ("real", corpus_seed.wrapping_add(1), &mut real),
            ] {
                let corpus = synth_corpus(era, language, docs, seed)?;
                records.extend(corpus.iter().enumerate().map(|(index, d)| CorpusRecord {
                    corpus: name,
                    era,
                    language,
                    index,
                    text: lossy(d),
                }));
                sink.extend(model.capture_corpus(&corpus, &layers, era, language)?);
            }
        }
        let modern = synth_corpus(
            EraLabel::Modern,
            language,
            style_docs,
            corpus_seed.wrapping_add(2),
        )?;
        for era in EraLabel::ALL {
            let docs: Vec<Vec<u8>> = modern.iter().map(|d| restyle(d, era)).collect();
            style.extend(model.capture_corpus(&docs, &layers, era, language)?);
        }
    }
    save_bundle(&ActivationBundle::new(acts)?, &run.output("acts"))?;
    save_bundle(&ActivationBundle::new(real)?, &run.output("real"))?;
    save_bundle(&ActivationBundle::new(style)?, &run.output("style"))?;
    run.write_json("corpus.json", &records)?;
    log::info!(
        "toygen: {} languages x {} layers written to {}",
        languages.len(),
        layers.len(),
        run.dir.display()
    );
    run.finish()?;
    Ok(())
}
