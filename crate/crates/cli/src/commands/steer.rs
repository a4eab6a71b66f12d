// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use chronosteer::manifold::EraCoords;
use chronosteer::steer::RECOMMENDED_LAMBDA;
use chronosteer::toymodel::corpus::{neutral_prompts, planted_ngram_count, synth_corpus};
use chronosteer::{
    load_manifold, ChronoManifold, EraLabel, Error, HookSpec, InterventionConfig, Language,
    SteerVector, ToyModel,
};

use super::eval::NllRecord;
use super::manifold::MANIFOLDS_DIR;
use super::{load_vectors, lossy, model_config};
use crate::error::{config_err, CliError, CliResult};
use crate::run::Run;

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteerArgs {
    /// Model config JSON (e.g. `model.json` from toygen).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Model seed, overriding the config's [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Manifold directory (or a `manifold` run directory).
    #[arg(long, conflicts_with = "vectors")]
    pub manifolds: Option<PathBuf>,
    /// Fixed steering vectors, one per layer, for `--era`.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Target era; with manifolds it selects the era's knot.
    #[arg(long)]
    pub era: Option<EraLabel>,
    /// Manifold time, overriding `--era`.
    #[arg(long)]
    pub t: Option<f64>,
    /// Prompt and vector language [default: en].
    #[arg(long)]
    pub language: Option<Language>,
    /// Norm-relative strength [default: 0.1].
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Hooked layers [default: every layer with a vector or manifold].
    #[arg(long, value_delimiter = ',')]
    pub layers: Option<Vec<usize>>,
    /// Literal prompts; neutral synthetic prompts are used when absent.
    #[arg(long = "prompt")]
    pub prompts: Option<Vec<String>>,
    /// Number of synthetic prompts [default: 20].
    #[arg(long)]
    pub n_prompts: Option<usize>,
    /// Synthetic prompt length in bytes [default: 12].
    #[arg(long)]
    pub prompt_len: Option<usize>,
    /// Seed for synthetic prompts and corpora [default: the model seed].
    #[arg(long)]
    pub corpus_seed: Option<u64>,
    /// Bytes to generate per prompt [default: 16].
    #[arg(long)]
    pub max_new: Option<usize>,
    /// Also score every era's signal on every era's corpus (writes nll.json).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub ppl: Option<bool>,
    /// Documents per corpus era for `--ppl` [default: 8].
    #[arg(long)]
    pub ppl_docs: Option<usize>,
}

enum Source {
    Manifolds(BTreeMap<usize, ChronoManifold>),
    Vectors(Vec<SteerVector>),
}

fn load_manifolds(path: &Path, language: Language) -> CliResult<BTreeMap<usize, ChronoManifold>> {
    let dir = if path.join(MANIFOLDS_DIR).is_dir() {
        path.join(MANIFOLDS_DIR)
    } else {
        path.to_path_buf()
    };
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| CliError::io(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    entries.sort();
    let mut out = BTreeMap::new();
    for p in entries {
        let m = load_manifold(&p)?;
        if m.language == language {
            out.insert(m.layer, m);
        }
    }
    Ok(out)
}

impl Source {
    fn layers(&self, language: Language, era: EraLabel) -> BTreeSet<usize> {
        match self {
            Source::Manifolds(m) => m.keys().copied().collect(),
            Source::Vectors(v) => v
                .iter()
                .filter(|v| v.language == language && v.era == era)
                .map(|v| v.layer)
                .collect(),
        }
    }

    /// Hook steering toward `era` (or time `t`); `None` for the anchor era,
    /// whose direction is zero by construction.
    fn hook(
        &self,
        config: &InterventionConfig,
        language: Language,
        era: EraLabel,
        t: Option<f64>,
    ) -> Option<HookSpec> {
        match self {
            Source::Manifolds(m) => {
                let t = t.unwrap_or_else(|| EraCoords::default().get(era));
                if t == EraCoords::default().get(EraLabel::ANCHOR) {
                    return None;
                }
                Some(HookSpec::manifolds(config, m.clone(), t))
            }
            Source::Vectors(v) => {
                if era == EraLabel::ANCHOR {
                    return None;
                }
                let map = v
                    .iter()
                    .filter(|v| v.language == language && v.era == era)
                    .map(|v| (v.layer, v.clone()))
                    .collect();
                Some(HookSpec::vectors(config, map))
            }
        }
    }
}

#[derive(Debug, Serialize)]
struct Generation {
    index: usize,
    prompt: String,
    baseline: String,
    steered: String,
}

pub fn run(args: SteerArgs, out: PathBuf) -> CliResult<()> {
    let language = args.language.unwrap_or(Language::En);
    let lambda = args.lambda.unwrap_or(0.1);
    let max_new = args.max_new.unwrap_or(16);
    let args = SteerArgs {
        language: Some(language),
        lambda: Some(lambda),
        max_new: Some(max_new),
        n_prompts: Some(args.n_prompts.unwrap_or(20)),
        prompt_len: Some(args.prompt_len.unwrap_or(12)),
        ppl: Some(args.ppl.unwrap_or(false)),
        ppl_docs: Some(args.ppl_docs.unwrap_or(8)),
        ..args
    };
    if !RECOMMENDED_LAMBDA.contains(&lambda) {
        log::warn!(
            "lambda {lambda} is outside the recommended range [{}, {}]",
            RECOMMENDED_LAMBDA.start(),
            RECOMMENDED_LAMBDA.end()
        );
    }

    let mut run = Run::start(out, "steer", &args)?;
    let cfg = model_config(args.model.as_deref(), args.seed)?;
    if let Some(p) = &args.model {
        run.input("model", p)?;
    }
    let corpus_seed = args.corpus_seed.unwrap_or(cfg.seed);
    run.seed("model", cfg.seed);
    run.seed("corpus", corpus_seed);
    let model = ToyModel::new(cfg)?;

    let source = match (&args.manifolds, &args.vectors) {
        (Some(p), _) => {
            run.input("manifolds", p)?;
            Source::Manifolds(load_manifolds(p, language)?)
        }
        (None, Some(p)) => {
            run.input("vectors", p)?;
            Source::Vectors(load_vectors(p)?)
        }
        (None, None) => return Err(config_err("steer needs `manifolds` or `vectors`")),
    };
    let era = match (args.era, args.t, &source) {
        (Some(e), _, _) => e,
        (None, Some(t), Source::Manifolds(_)) => EraCoords::default().nearest(t),
        _ => return Err(config_err("steer needs `era` (or `t` with manifolds)")),
    };
    let layers = match &args.layers {
        Some(l) => l.iter().copied().collect(),
        None => source.layers(language, era),
    };
    if layers.is_empty() {
        return Err(CliError::Core(Error::KeyMismatch(format!(
            "no steering directions for era {era}, language {language}"
        ))));
    }
    let config = InterventionConfig::new(lambda, layers)?;

    let prompts: Vec<Vec<u8>> = match &args.prompts {
        Some(p) => p.iter().map(|s| s.as_bytes().to_vec()).collect(),
        None => neutral_prompts(
            language,
            args.n_prompts.unwrap_or(20),
            args.prompt_len.unwrap_or(12),
            corpus_seed,
        ),
    };
    let hook = source.hook(&config, language, era, args.t);
    let mut generations = Vec::new();
    let mut csv = run.csv_writer("steer.csv")?;
    csv.write_record([
        "index",
        "era",
        "lambda",
        "baseline_planted",
        "steered_planted",
    ])?;
    let (mut base_total, mut steer_total) = (0, 0);
    for (index, p) in prompts.iter().enumerate() {
        let baseline = model.generate(p, max_new)?;
        let steered = match &hook {
            Some(h) => model.generate_steered(p, h, max_new)?,
            None => baseline.clone(),
        };
        let (b, s) = (
            planted_ngram_count(&baseline, era),
            planted_ngram_count(&steered, era),
        );
        base_total += b;
        steer_total += s;
        csv.write_record([
            index.to_string(),
            era.name().to_string(),
            lambda.to_string(),
            b.to_string(),
            s.to_string(),
        ])?;
        generations.push(Generation {
            index,
            prompt: lossy(p),
            baseline: lossy(&baseline),
            steered: lossy(&steered),
        });
    }
    csv.flush().map_err(|e| CliError::io("steer.csv", e))?;
    run.write_json("generations.json", &generations)?;
    log::info!(
        "steer: {era} planted n-grams {base_total} -> {steer_total} over {} prompts",
        prompts.len()
    );

    if args.ppl.unwrap_or(false) {
        let docs = args.ppl_docs.unwrap_or(8);
        let mut records = Vec::new();
        for signal in EraLabel::ALL {
            let hook = source.hook(&config, language, signal, None);
            for corpus in EraLabel::ALL {
                let texts = synth_corpus(corpus, language, docs, corpus_seed.wrapping_add(3))?
                    .iter()
                    .map(|d| model.token_nll(d, hook.as_ref()))
                    .collect::<chronosteer::Result<Vec<_>>>()?;
                records.push(NllRecord {
                    signal,
                    corpus,
                    texts,
                });
            }
        }
        run.write_json("nll.json", &records)?;
    }
    run.finish()?;
    Ok(())
}
