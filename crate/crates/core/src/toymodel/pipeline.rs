// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synth corpora → capture → CAA → manifold → steered generation, scored by
//! planted n-gram counts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::corpus::{neutral_prompts, planted_ngram_count, synth_corpus};
use super::hook::HookSpec;
use super::model::ToyModel;
use crate::acts::{ActivationSet, EraLabel, Language};
use crate::error::Result;
use crate::manifold::{fit_manifold, ChronoManifold, EraCoords};
use crate::steer::{extract_caa, InterventionConfig, SteerVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineOptions {
    pub language: Language,
    pub docs_per_era: usize,
    pub prompts: usize,
    pub prompt_len: usize,
    pub max_new: usize,
    pub lambda: f64,
    pub layers: BTreeSet<usize>,
    pub k: usize,
    pub corpus_seed: u64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            language: Language::En,
            docs_per_era: 16,
            prompts: 20,
            prompt_len: 12,
            max_new: 16,
            lambda: 0.1,
            layers: (0..4).collect(),
            k: crate::manifold::DEFAULT_K,
            corpus_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EraEffect {
    pub era: EraLabel,
    pub baseline: usize,
    pub steered: usize,
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub sets: Vec<ActivationSet>,
    pub anchors: BTreeMap<usize, BTreeMap<EraLabel, SteerVector>>,
    pub manifolds: BTreeMap<usize, ChronoManifold>,
    pub effects: Vec<EraEffect>,
}

impl PipelineReport {
    pub fn baseline_total(&self) -> usize {
        self.effects.iter().map(|e| e.baseline).sum()
    }

    pub fn steered_total(&self) -> usize {
        self.effects.iter().map(|e| e.steered).sum()
    }
}

/// Per-document captures for all four eras at `layers`.
pub fn capture_eras(model: &ToyModel, opts: &PipelineOptions) -> Result<Vec<ActivationSet>> {
    let layers: Vec<usize> = opts.layers.iter().copied().collect();
    let mut sets = Vec::new();
    for era in EraLabel::ALL {
        let docs = synth_corpus(era, opts.language, opts.docs_per_era, opts.corpus_seed)?;
        sets.extend(model.capture_corpus(&docs, &layers, era, opts.language)?);
    }
    Ok(sets)
}

pub fn run_pipeline(model: &ToyModel, opts: &PipelineOptions) -> Result<PipelineReport> {
    let sets = capture_eras(model, opts)?;
    let mut anchors: BTreeMap<usize, BTreeMap<EraLabel, SteerVector>> = BTreeMap::new();
    for &layer in &opts.layers {
        let modern = sets
            .iter()
            .find(|s| s.layer == layer && s.era == EraLabel::Modern)
            .expect("captured every era");
        for target in sets.iter().filter(|s| s.layer == layer) {
            anchors
                .entry(layer)
                .or_default()
                .insert(target.era, extract_caa(target, modern)?);
        }
    }
    let manifolds: BTreeMap<usize, ChronoManifold> = anchors
        .iter()
        .map(|(&l, a)| Ok((l, fit_manifold(a, opts.k)?)))
        .collect::<Result<_>>()?;

    let prompts = neutral_prompts(
        opts.language,
        opts.prompts,
        opts.prompt_len,
        opts.corpus_seed,
    );
    let baseline: Vec<Vec<u8>> = prompts
        .iter()
        .map(|p| model.generate(p, opts.max_new))
        .collect::<Result<_>>()?;
    let config = InterventionConfig::new(opts.lambda, opts.layers.clone())?;
    let coords = EraCoords::default();
    let mut effects = Vec::new();
    for era in EraLabel::HISTORICAL {
        let hook = HookSpec::manifolds(&config, manifolds.clone(), coords.get(era));
        let mut steered = 0;
        for p in &prompts {
            steered += planted_ngram_count(&model.generate_steered(p, &hook, opts.max_new)?, era);
        }
        effects.push(EraEffect {
            era,
            baseline: baseline.iter().map(|o| planted_ngram_count(o, era)).sum(),
            steered,
        });
    }
    Ok(PipelineReport {
        sets,
        anchors,
        manifolds,
        effects,
    })
}
