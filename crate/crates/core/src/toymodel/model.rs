// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rand_xoshiro::Xoshiro256PlusPlus;

use super::config::ToyModelConfig;
use super::hook::HookSpec;
use crate::acts::{ActivationSet, EraLabel, Language};
use crate::error::{Error, Result};
use crate::steer::steer_in_place;

/// Recorded in each captured set's `source`.
pub const CAPTURE_SOURCE: &str = "toymodel/post-block/mean-over-positions";

const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone)]
struct Block {
    wq: DMatrix<f64>,
    wk: DMatrix<f64>,
    wv: DMatrix<f64>,
    wo: DMatrix<f64>,
    w_in: DMatrix<f64>,
    w_out: DMatrix<f64>,
}

/// Byte-level pre-LN decoder with tied embeddings and random weights.
///
/// Token and position embeddings are N(0, 1). Input projections have
/// std 1/√fan_in; the two residual projections of each block are further
/// scaled by 1/√(2·layers).
#[derive(Debug, Clone)]
pub struct ToyModel {
    config: ToyModelConfig,
    tok_emb: DMatrix<f64>,
    pos_emb: DMatrix<f64>,
    blocks: Vec<Block>,
}

/// States after every block (post-hook) and the output logits.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub states: Vec<DMatrix<f64>>,
    pub logits: DMatrix<f64>,
}

fn layer_norm(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    let d = x.ncols() as f64;
    for mut row in out.row_iter_mut() {
        let mean = row.sum() / d;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        for v in row.iter_mut() {
            *v = (*v - mean) * inv;
        }
    }
    out
}

fn gelu(x: f64) -> f64 {
    const C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
    0.5 * x * (1.0 + (C * (x + 0.044_715 * x * x * x)).tanh())
}

impl ToyModel {
    pub fn new(config: ToyModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed);
        let d = config.dim;
        let ff = 4 * d;
        let mut gaussian = |rows: usize, cols: usize, std: f64| {
            let dist = Normal::new(0.0, std).expect("positive std");
            DMatrix::from_fn(rows, cols, |_, _| dist.sample(&mut rng))
        };
        let tok_emb = gaussian(config.vocab, d, 1.0);
        let pos_emb = gaussian(config.context, d, 1.0);
        let resid = 1.0 / (2.0 * config.layers as f64).sqrt();
        let proj = 1.0 / (d as f64).sqrt();
        let blocks = (0..config.layers)
            .map(|_| Block {
                wq: gaussian(d, d, proj),
                wk: gaussian(d, d, proj),
                wv: gaussian(d, d, proj),
                wo: gaussian(d, d, proj * resid),
                w_in: gaussian(d, ff, proj),
                w_out: gaussian(ff, d, resid / (ff as f64).sqrt()),
            })
            .collect();
        Ok(Self {
            config,
            tok_emb,
            pos_emb,
            blocks,
        })
    }

    pub fn config(&self) -> &ToyModelConfig {
        &self.config
    }

    /// Row `token` of the tied embedding / unembedding matrix.
    pub fn token_embedding(&self, token: u8) -> DVector<f64> {
        self.tok_emb.row(token as usize).transpose()
    }

    fn check_tokens(&self, tokens: &[u8]) -> Result<()> {
        if tokens.is_empty() {
            return Err(Error::InvalidArgument("token sequence is empty".into()));
        }
        if tokens.len() > self.config.context {
            return Err(Error::ContextOverflow {
                len: tokens.len(),
                context: self.config.context,
            });
        }
        if let Some(&t) = tokens.iter().find(|&&t| t as usize >= self.config.vocab) {
            return Err(Error::InvalidArgument(format!(
                "token {t} outside vocab {}",
                self.config.vocab
            )));
        }
        Ok(())
    }

    pub(crate) fn embed(&self, tokens: &[u8]) -> DMatrix<f64> {
        DMatrix::from_fn(tokens.len(), self.config.dim, |i, j| {
            self.tok_emb[(tokens[i] as usize, j)] + self.pos_emb[(i, j)]
        })
    }

    fn attention(&self, block: &Block, h: &DMatrix<f64>) -> DMatrix<f64> {
        let t = h.nrows();
        let dh = self.config.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();
        let (q, k, v) = (h * &block.wq, h * &block.wk, h * &block.wv);
        let mut out = DMatrix::zeros(t, self.config.dim);
        let mut weights = vec![0.0; t];
        for head in 0..self.config.heads {
            let cols = head * dh..(head + 1) * dh;
            for i in 0..t {
                let mut max = f64::NEG_INFINITY;
                for (j, w) in weights.iter_mut().enumerate().take(i + 1) {
                    *w = cols.clone().map(|c| q[(i, c)] * k[(j, c)]).sum::<f64>() * scale;
                    max = max.max(*w);
                }
                let mut total = 0.0;
                for w in weights.iter_mut().take(i + 1) {
                    *w = (*w - max).exp();
                    total += *w;
                }
                for c in cols.clone() {
                    out[(i, c)] = (0..=i).map(|j| weights[j] * v[(j, c)]).sum::<f64>() / total;
                }
            }
        }
        out * &block.wo
    }

    /// Run all blocks from an embedded input. `units` holds unit steering
    /// directions per hooked layer.
    pub(crate) fn run(
        &self,
        mut x: DMatrix<f64>,
        units: Option<&BTreeMap<usize, Vec<f64>>>,
        lambda: f64,
    ) -> ForwardPass {
        let mut states = Vec::with_capacity(self.blocks.len());
        for (l, block) in self.blocks.iter().enumerate() {
            x += self.attention(block, &layer_norm(&x));
            x += (layer_norm(&x) * &block.w_in).map(gelu) * &block.w_out;
            if let Some(unit) = units.and_then(|u| u.get(&l)) {
                for i in 0..x.nrows() {
                    let mut row: Vec<f64> = x.row(i).iter().copied().collect();
                    steer_in_place(&mut row, unit, lambda);
                    x.row_mut(i).copy_from_slice(&row);
                }
            }
            states.push(x.clone());
        }
        let logits = layer_norm(&x) * self.tok_emb.transpose() / (self.config.dim as f64).sqrt();
        ForwardPass { states, logits }
    }

    pub fn forward(&self, tokens: &[u8], hook: Option<&HookSpec>) -> Result<ForwardPass> {
        self.check_tokens(tokens)?;
        let (units, lambda) = self.resolve(hook)?;
        Ok(self.run(self.embed(tokens), units.as_ref(), lambda))
    }

    fn resolve(&self, hook: Option<&HookSpec>) -> Result<(Option<BTreeMap<usize, Vec<f64>>>, f64)> {
        match hook {
            None => Ok((None, 0.0)),
            Some(h) => Ok((h.resolve(self.config.layers, self.config.dim)?, h.lambda)),
        }
    }

    fn check_layer(&self, layer: usize) -> Result<()> {
        if layer >= self.config.layers {
            return Err(Error::LayerOutOfRange {
                layer,
                layers: self.config.layers,
            });
        }
        Ok(())
    }

    /// Post-block residual states at `layer`, one row per token.
    pub fn capture(&self, tokens: &[u8], layer: usize) -> Result<DMatrix<f64>> {
        self.check_layer(layer)?;
        Ok(self.forward(tokens, None)?.states.swap_remove(layer))
    }

    pub fn forward_capture(
        &self,
        tokens: &[u8],
        layer: usize,
        era: EraLabel,
        language: Language,
    ) -> Result<ActivationSet> {
        let states = self.capture(tokens, layer)?;
        let rows: Vec<Vec<f64>> = states
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect();
        ActivationSet::from_rows(
            layer,
            era,
            language,
            &rows,
            "toymodel/post-block/per-position",
        )
    }

    /// One row per document per layer: the mean post-block state over the
    /// document's positions.
    pub fn capture_corpus(
        &self,
        docs: &[Vec<u8>],
        layers: &[usize],
        era: EraLabel,
        language: Language,
    ) -> Result<Vec<ActivationSet>> {
        for &l in layers {
            self.check_layer(l)?;
        }
        let mut rows: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(docs.len()); layers.len()];
        for doc in docs {
            let pass = self.forward(doc, None)?;
            for (slot, &l) in layers.iter().enumerate() {
                let mean = pass.states[l].row_mean();
                rows[slot].push(mean.iter().copied().collect());
            }
        }
        layers
            .iter()
            .zip(rows)
            .map(|(&l, r)| {
                Ok(
                    ActivationSet::from_rows(l, era, language, &r, CAPTURE_SOURCE)?
                        .with_tag("model_seed", self.config.seed.into()),
                )
            })
            .collect()
    }

    /// Greedy continuation of `prompt`, steered by `hook`.
    pub fn generate_steered(
        &self,
        prompt: &[u8],
        hook: &HookSpec,
        max_new: usize,
    ) -> Result<Vec<u8>> {
        self.generate_inner(prompt, Some(hook), max_new)
    }

    pub fn generate(&self, prompt: &[u8], max_new: usize) -> Result<Vec<u8>> {
        self.generate_inner(prompt, None, max_new)
    }

    fn generate_inner(
        &self,
        prompt: &[u8],
        hook: Option<&HookSpec>,
        max_new: usize,
    ) -> Result<Vec<u8>> {
        if max_new == 0 {
            return Err(Error::InvalidArgument("max_new must be >= 1".into()));
        }
        self.check_tokens(prompt)?;
        let total = prompt.len() + max_new;
        if total > self.config.context {
            return Err(Error::ContextOverflow {
                len: total,
                context: self.config.context,
            });
        }
        let (units, lambda) = self.resolve(hook)?;
        let mut tokens = prompt.to_vec();
        for _ in 0..max_new {
            let pass = self.run(self.embed(&tokens), units.as_ref(), lambda);
            tokens.push(argmax(pass.logits.row(tokens.len() - 1).iter().copied()) as u8);
        }
        Ok(tokens.split_off(prompt.len()))
    }

    /// Per-token negative log-likelihood of `tokens[1..]` given its prefix.
    pub fn token_nll(&self, tokens: &[u8], hook: Option<&HookSpec>) -> Result<Vec<f64>> {
        if tokens.len() < 2 {
            return Err(Error::InvalidArgument(
                "need at least two tokens to score".into(),
            ));
        }
        let pass = self.forward(tokens, hook)?;
        Ok((0..tokens.len() - 1)
            .map(|i| {
                let row = pass.logits.row(i);
                let max = row.max();
                let lse = max + row.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
                lse - row[tokens[i + 1] as usize]
            })
            .collect())
    }
}

/// First index of the maximum.
fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}
