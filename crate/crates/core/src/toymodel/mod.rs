// SPDX-License-Identifier: MIT OR Apache-2.0

//! A seeded, untrained, byte-level decoder with a residual-stream hook.

mod config;
pub mod corpus;
mod hook;
mod model;
pub mod pipeline;

pub use config::ToyModelConfig;
pub use corpus::{neutral_prompts, planted_ngram_count, planted_ngrams, synth_corpus};
pub use hook::{HookSource, HookSpec};
pub use model::{ForwardPass, ToyModel, CAPTURE_SOURCE};
