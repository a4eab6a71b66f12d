// SPDX-License-Identifier: MIT OR Apache-2.0

//! Scoring of steered outputs: future leakage / precision against an era
//! knowledge base, and the signal × corpus perplexity matrix.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::acts::EraLabel;
use crate::error::{Error, Result};
use crate::manifold::csv_err;

/// Case-fold and collapse runs of whitespace to a single space.
pub fn normalize(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: BTreeMap<char, usize>,
    terminal: bool,
}

/// Entity → era of first existence. Keys are stored normalized.
#[derive(Debug, Clone)]
pub struct EraKnowledgeBase {
    entries: BTreeMap<String, EraLabel>,
    trie: Vec<TrieNode>,
}

impl Default for EraKnowledgeBase {
    fn default() -> Self {
        Self::new()
    }
}

impl EraKnowledgeBase {
    pub fn new() -> Self {
        Self {
            entries: BTreeMap::new(),
            trie: vec![TrieNode::default()],
        }
    }

    /// Insert an entity. If it is already present the earlier era wins.
    pub fn insert(&mut self, entity: &str, era: EraLabel) {
        let key = normalize(entity);
        if key.is_empty() {
            return;
        }
        let slot = self.entries.entry(key.clone()).or_insert(era);
        *slot = (*slot).min(era);

        let mut node = 0;
        for c in key.chars() {
            node = match self.trie[node].children.get(&c) {
                Some(&next) => next,
                None => {
                    self.trie.push(TrieNode::default());
                    let next = self.trie.len() - 1;
                    self.trie[node].children.insert(c, next);
                    next
                }
            };
        }
        self.trie[node].terminal = true;
    }

    pub fn lookup(&self, entity: &str) -> Option<EraLabel> {
        self.entries.get(&normalize(entity)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &BTreeMap<String, EraLabel> {
        &self.entries
    }

    /// Two-column UTF-8 TSV: `entity<TAB>era`. Blank lines and lines starting
    /// with `#` are skipped.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut kb = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let (entity, era) = match (cols.next(), cols.next(), cols.next()) {
                (Some(e), Some(r), None) => (e.trim(), r.trim()),
                _ => {
                    return Err(Error::MalformedKb {
                        line: line_no,
                        reason: "expected two tab-separated columns".into(),
                    })
                }
            };
            if normalize(entity).is_empty() {
                return Err(Error::MalformedKb {
                    line: line_no,
                    reason: "empty entity".into(),
                });
            }
            let era: EraLabel = era.parse().map_err(|_| Error::MalformedKb {
                line: line_no,
                reason: format!("unknown era `{era}`"),
            })?;
            kb.insert(entity, era);
        }
        Ok(kb)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&text)
    }
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric()
}

/// ASCII keys only match on word boundaries; other scripts match anywhere.
pub(crate) fn boundary_ok(chars: &[char], start: usize, end: usize) -> bool {
    let left = !is_word_char(chars[start]) || start == 0 || !is_word_char(chars[start - 1]);
    let right = !is_word_char(chars[end - 1]) || end == chars.len() || !is_word_char(chars[end]);
    left && right
}

/// Longest-match dictionary scan, left to right, non-overlapping. Returned
/// strings are normalized kb keys in order of appearance.
pub fn extract_entities(text: &str, kb: &EraKnowledgeBase) -> Vec<String> {
    let chars: Vec<char> = normalize(text).chars().collect();
    let mut found = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let mut node = 0;
        let mut best = None;
        for (j, c) in chars.iter().enumerate().skip(i) {
            match kb.trie[node].children.get(c) {
                Some(&next) => node = next,
                None => break,
            }
            if kb.trie[node].terminal && boundary_ok(&chars, i, j + 1) {
                best = Some(j + 1);
            }
        }
        match best {
            Some(end) => {
                found.push(chars[i..end].iter().collect());
                i = end;
            }
            None => i += 1,
        }
    }
    found
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EntityCounts {
    pub future: usize,
    pub in_scope: usize,
    pub unresolved: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpistemicScore {
    pub target_era: EraLabel,
    /// Future leakage rate.
    pub flr: f64,
    /// Precision rate (in-scope entities).
    pub pr: f64,
    pub counts: EntityCounts,
}

impl EpistemicScore {
    pub fn unresolved_rate(&self) -> f64 {
        self.counts.unresolved as f64 / self.counts.total as f64
    }
}

/// Entities dated after `target` are future, at or before it in scope, and
/// entities missing from the kb unresolved. All three share the denominator.
pub fn score_epistemic<S: AsRef<str>>(
    entities: &[S],
    target: EraLabel,
    kb: &EraKnowledgeBase,
) -> Result<EpistemicScore> {
    if entities.is_empty() {
        return Err(Error::EmptyEntityList);
    }
    let mut counts = EntityCounts {
        total: entities.len(),
        ..Default::default()
    };
    for e in entities {
        match kb.lookup(e.as_ref()) {
            Some(era) if era > target => counts.future += 1,
            Some(_) => counts.in_scope += 1,
            None => counts.unresolved += 1,
        }
    }
    let total = counts.total as f64;
    Ok(EpistemicScore {
        target_era: target,
        flr: counts.future as f64 / total,
        pr: counts.in_scope as f64 / total,
        counts,
    })
}

// ---------------------------------------------------------------------------
// Perplexity matrix
// ---------------------------------------------------------------------------

/// (signal era, corpus era) → per-text token NLLs.
pub type NllTable = BTreeMap<(EraLabel, EraLabel), Vec<Vec<f64>>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Pool every token of the cell.
    #[default]
    Micro,
    /// Average per-text mean NLLs.
    Macro,
}

impl std::str::FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "micro" => Ok(Averaging::Micro),
            "macro" => Ok(Averaging::Macro),
            other => Err(Error::InvalidArgument(format!(
                "unknown averaging `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PplMatrix {
    pub signals: Vec<EraLabel>,
    pub corpora: Vec<EraLabel>,
    pub cells: DMatrix<f64>,
}

impl PplMatrix {
    pub fn get(&self, signal: EraLabel, corpus: EraLabel) -> Option<f64> {
        let r = self.signals.iter().position(|&e| e == signal)?;
        let c = self.corpora.iter().position(|&e| e == corpus)?;
        Some(self.cells[(r, c)])
    }
}

fn cell_mean_nll(texts: &[Vec<f64>], averaging: Averaging) -> Option<f64> {
    match averaging {
        Averaging::Micro => {
            let n: usize = texts.iter().map(Vec::len).sum();
            (n > 0).then(|| texts.iter().flatten().sum::<f64>() / n as f64)
        }
        Averaging::Macro => {
            let means: Vec<f64> = texts
                .iter()
                .filter(|t| !t.is_empty())
                .map(|t| t.iter().sum::<f64>() / t.len() as f64)
                .collect();
            (!means.is_empty()).then(|| means.iter().sum::<f64>() / means.len() as f64)
        }
    }
}

/// `exp(mean NLL)` per cell. The table must cover the full grid of the
/// signal and corpus eras it mentions.
pub fn ppl_matrix(table: &NllTable, averaging: Averaging) -> Result<PplMatrix> {
    let signals: Vec<EraLabel> = table
        .keys()
        .map(|k| k.0)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let corpora: Vec<EraLabel> = table
        .keys()
        .map(|k| k.1)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if signals.is_empty() {
        return Err(Error::InvalidArgument("empty NLL table".into()));
    }
    let mut cells = DMatrix::zeros(signals.len(), corpora.len());
    for (r, &signal) in signals.iter().enumerate() {
        for (c, &corpus) in corpora.iter().enumerate() {
            let texts = table
                .get(&(signal, corpus))
                .ok_or(Error::EmptyCell { signal, corpus })?;
            if texts.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteNll { signal, corpus });
            }
            let mean =
                cell_mean_nll(texts, averaging).ok_or(Error::EmptyCell { signal, corpus })?;
            cells[(r, c)] = mean.exp();
        }
    }
    Ok(PplMatrix {
        signals,
        corpora,
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceRow {
    pub signal: EraLabel,
    pub is_min_on_diagonal: bool,
    pub diagonal: f64,
    pub row_min: f64,
}

/// Whether each signal era's matched corpus attains the row minimum. Ties
/// count for the diagonal.
pub fn diagonal_dominance(m: &PplMatrix) -> Result<Vec<DominanceRow>> {
    if m.signals != m.corpora {
        return Err(Error::NotSquare);
    }
    Ok(m.signals
        .iter()
        .enumerate()
        .map(|(i, &signal)| {
            let row = m.cells.row(i);
            let row_min = row.iter().copied().fold(f64::INFINITY, f64::min);
            let diagonal = row[i];
            DominanceRow {
                signal,
                is_min_on_diagonal: diagonal <= row_min,
                diagonal,
                row_min,
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Aggregation and output
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EraAggregate {
    pub flr: MeanStd,
    pub pr: MeanStd,
    pub eras: usize,
}

/// Mean ± std of FLR and PR over the historical-era scores in `scores`.
/// Modern targets are excluded.
pub fn aggregate_historical(scores: &[EpistemicScore]) -> Option<EraAggregate> {
    let hist: Vec<&EpistemicScore> = scores
        .iter()
        .filter(|s| s.target_era != EraLabel::Modern)
        .collect();
    let flr: Vec<f64> = hist.iter().map(|s| s.flr).collect();
    let pr: Vec<f64> = hist.iter().map(|s| s.pr).collect();
    Some(EraAggregate {
        flr: MeanStd::of(&flr)?,
        pr: MeanStd::of(&pr)?,
        eras: hist.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub dataset: String,
    pub era: EraLabel,
    pub method: String,
    pub flr: f64,
    pub pr: f64,
    pub unresolved: usize,
    pub total: usize,
}

impl ScoreRow {
    pub fn new(dataset: &str, method: &str, score: &EpistemicScore) -> Self {
        Self {
            dataset: dataset.to_string(),
            era: score.target_era,
            method: method.to_string(),
            flr: score.flr,
            pr: score.pr,
            unresolved: score.counts.unresolved,
            total: score.counts.total,
        }
    }
}

pub fn write_scores_csv<W: Write>(out: W, rows: &[ScoreRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "dataset",
        "era",
        "method",
        "flr",
        "pr",
        "unresolved",
        "total",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.dataset.as_str(),
            r.era.name(),
            r.method.as_str(),
            &r.flr.to_string(),
            &r.pr.to_string(),
            &r.unresolved.to_string(),
            &r.total.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// Header `signal,<corpus eras...>`, one row per signal era.
pub fn write_ppl_csv<W: Write>(out: W, m: &PplMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["signal".to_string()];
    header.extend(m.corpora.iter().map(|e| e.name().to_string()));
    w.write_record(&header).map_err(csv_err)?;
    for (i, s) in m.signals.iter().enumerate() {
        let mut rec = vec![s.name().to_string()];
        rec.extend(m.cells.row(i).iter().map(|x| x.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}
