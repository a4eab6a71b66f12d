// SPDX-License-Identifier: MIT OR Apache-2.0

//! Bundled text fixtures: extraction tasks, contrastive style pairs,
//! evaluation prompts and a small era knowledge base.

use serde::{Deserialize, Serialize};

use crate::acts::{EraLabel, Language};
use crate::evaluate::EraKnowledgeBase;

const TASKS: &str = include_str!("../fixtures/tasks.json");
const STYLE_PAIRS: &str = include_str!("../fixtures/style_pairs.json");
const EVAL_PROMPTS: &str = include_str!("../fixtures/eval_prompts.json");
const KB: &str = include_str!("../fixtures/kb.tsv");

/// An immersive task shared by every era persona.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskPrompt {
    pub id: u32,
    pub language: Language,
    pub text: String,
}

/// One period's rendering of a topic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StylePair {
    pub topic: String,
    pub period: EraLabel,
    pub language: Language,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalPrompt {
    pub id: String,
    pub language: Language,
    pub dataset: String,
    pub text: String,
}

pub const DATASETS: [&str; 3] = [
    "epistemic_cutoff",
    "causal_remodeling",
    "mismatch_entanglement",
];

pub fn tasks() -> Vec<TaskPrompt> {
    serde_json::from_str(TASKS).expect("bundled tasks.json is valid")
}

pub fn style_pairs() -> Vec<StylePair> {
    serde_json::from_str(STYLE_PAIRS).expect("bundled style_pairs.json is valid")
}

pub fn eval_prompts() -> Vec<EvalPrompt> {
    serde_json::from_str(EVAL_PROMPTS).expect("bundled eval_prompts.json is valid")
}

pub fn knowledge_base_tsv() -> &'static str {
    KB
}

pub fn knowledge_base() -> EraKnowledgeBase {
    EraKnowledgeBase::from_tsv(KB).expect("bundled kb.tsv is valid")
}
