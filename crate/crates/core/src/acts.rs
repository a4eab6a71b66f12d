// SPDX-License-Identifier: MIT OR Apache-2.0

//! Activation exchange format.
//!
//! A bundle is a directory holding `manifest.json` and one `<key>.f32` blob
//! per activation set. Blobs are IEEE-754 binary32, little-endian, row-major
//! `n × d`. The manifest lists every set with its `key`, `layer`, `era`,
//! `language`, `n`, `d` and `source`; steering-vector bundles add `method`
//! and `alpha` (and other provenance) as extra per-set fields.
//!
//! Validation is eager: [`load_bundle`] checks blob lengths, finiteness,
//! duplicate keys and dangling or orphaned blobs before returning.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const BLOB_EXT: &str = "f32";
const FORMAT_TAG: &str = "chronosteer.bundle";
const FORMAT_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Era and language labels
// ---------------------------------------------------------------------------

/// Canonical periodisation. `Modern` is the anchor era.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String")]
pub enum EraLabel {
    Old,
    Middle,
    EarlyModern,
    Modern,
}

impl EraLabel {
    pub const ALL: [EraLabel; 4] = [
        EraLabel::Old,
        EraLabel::Middle,
        EraLabel::EarlyModern,
        EraLabel::Modern,
    ];
    /// The three historical target eras, i.e. everything except the anchor.
    pub const HISTORICAL: [EraLabel; 3] = [EraLabel::Old, EraLabel::Middle, EraLabel::EarlyModern];
    pub const ANCHOR: EraLabel = EraLabel::Modern;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            EraLabel::Old => "Old",
            EraLabel::Middle => "Middle",
            EraLabel::EarlyModern => "EarlyModern",
            EraLabel::Modern => "Modern",
        }
    }

    fn key_part(self) -> &'static str {
        match self {
            EraLabel::Old => "old",
            EraLabel::Middle => "middle",
            EraLabel::EarlyModern => "early_modern",
            EraLabel::Modern => "modern",
        }
    }
}

impl fmt::Display for EraLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl TryFrom<String> for EraLabel {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for EraLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        // Case and `_`/`-` separators are ignored: `EarlyModern`, `early_modern`.
        let folded: String = s.chars().filter(|c| *c != '_' && *c != '-').collect();
        match folded.to_ascii_lowercase().as_str() {
            "old" => Ok(EraLabel::Old),
            "middle" => Ok(EraLabel::Middle),
            "earlymodern" => Ok(EraLabel::EarlyModern),
            "modern" => Ok(EraLabel::Modern),
            _ => Err(Error::InvalidArgument(format!("unknown era `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Zh,
    En,
}

impl Language {
    pub const ALL: [Language; 2] = [Language::Zh, Language::En];

    pub fn tag(self) -> &'static str {
        match self {
            Language::Zh => "zh",
            Language::En => "en",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zh" => Ok(Language::Zh),
            "en" => Ok(Language::En),
            other => Err(Error::InvalidArgument(format!(
                "unknown language `{other}`"
            ))),
        }
    }
}

/// Blob key for a `(layer, era, language)` cell, e.g. `l02-early_modern-en`.
pub fn set_key(layer: usize, era: EraLabel, language: Language) -> String {
    format!("l{layer:02}-{}-{}", era.key_part(), language.tag())
}

// ---------------------------------------------------------------------------
// ActivationSet
// ---------------------------------------------------------------------------

/// Residual-stream states for one `(layer, era, language)` cell, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSet {
    pub layer: usize,
    pub era: EraLabel,
    pub language: Language,
    /// Free-text provenance: model id, prompt set, token-position policy.
    pub source: String,
    /// Extra manifest fields carried verbatim (e.g. `method`, `alpha`).
    pub tags: BTreeMap<String, Value>,
    dim: usize,
    data: Vec<f32>,
}

impl ActivationSet {
    /// Build a set from row-major data. Rejects empty sets, ragged data and
    /// non-finite values.
    pub fn new(
        layer: usize,
        era: EraLabel,
        language: Language,
        dim: usize,
        data: Vec<f32>,
        source: impl Into<String>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ShapeMismatch(
                "activation dim must be positive".into(),
            ));
        }
        if data.is_empty() {
            return Err(Error::EmptySet);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::ShapeMismatch(format!(
                "{} values do not divide into rows of width {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteValue {
                key: set_key(layer, era, language),
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self {
            layer,
            era,
            language,
            source: source.into(),
            tags: BTreeMap::new(),
            dim,
            data,
        })
    }

    /// Build from `f64` rows, rounding to the `f32` storage precision.
    pub fn from_rows(
        layer: usize,
        era: EraLabel,
        language: Language,
        rows: &[Vec<f64>],
        source: impl Into<String>,
    ) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or(Error::EmptySet)?;
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::ShapeMismatch("rows have differing widths".into()));
        }
        let data = rows.iter().flatten().map(|&x| x as f32).collect();
        Self::new(layer, era, language, dim, data, source)
    }

    pub fn key(&self) -> String {
        set_key(self.layer, self.era, self.language)
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Rows as an `n × d` matrix in `f64`.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(self.n(), self.dim, self.data.iter().map(|&x| f64::from(x)))
    }

    pub fn with_tag(mut self, name: &str, value: Value) -> Self {
        self.tags.insert(name.to_owned(), value);
        self
    }
}

/// Arithmetic mean of the rows, accumulated in `f64`.
pub fn centroid(set: &ActivationSet) -> DVector<f64> {
    let mut acc = DVector::<f64>::zeros(set.dim());
    for row in set.rows() {
        for (a, &x) in acc.iter_mut().zip(row) {
            *a += f64::from(x);
        }
    }
    acc / set.n() as f64
}

// ---------------------------------------------------------------------------
// Bundle + manifest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestEntry {
    pub key: String,
    pub layer: usize,
    pub era: EraLabel,
    pub language: Language,
    pub n: usize,
    pub d: usize,
    pub source: String,
    #[serde(flatten)]
    pub tags: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub sets: Vec<ManifestEntry>,
}

/// A validated collection of activation sets, at most one per `(layer, era, language)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActivationBundle {
    sets: Vec<ActivationSet>,
}

impl ActivationBundle {
    pub fn new(sets: Vec<ActivationSet>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for s in &sets {
            if !seen.insert((s.layer, s.era, s.language)) {
                return Err(Error::DuplicateKey(s.key()));
            }
        }
        Ok(Self { sets })
    }

    pub fn sets(&self) -> &[ActivationSet] {
        &self.sets
    }

    pub fn into_sets(self) -> Vec<ActivationSet> {
        self.sets
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn get(&self, layer: usize, era: EraLabel, language: Language) -> Option<&ActivationSet> {
        self.sets
            .iter()
            .find(|s| s.layer == layer && s.era == era && s.language == language)
    }

    pub fn layers(&self) -> BTreeSet<usize> {
        self.sets.iter().map(|s| s.layer).collect()
    }

    pub fn languages(&self) -> BTreeSet<Language> {
        self.sets.iter().map(|s| s.language).collect()
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            format: FORMAT_TAG.to_owned(),
            version: FORMAT_VERSION,
            sets: self
                .sets
                .iter()
                .map(|s| ManifestEntry {
                    key: s.key(),
                    layer: s.layer,
                    era: s.era,
                    language: s.language,
                    n: s.n(),
                    d: s.dim(),
                    source: s.source.clone(),
                    tags: s.tags.clone(),
                })
                .collect(),
        }
    }
}

/// Write `bundle` into directory `path`, creating it if needed. Stale `.f32`
/// blobs left in the directory by an earlier bundle are removed so the
/// result always loads cleanly.
pub fn save_bundle(bundle: &ActivationBundle, path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;
    let manifest = bundle.manifest();
    let keep: BTreeSet<String> = manifest.sets.iter().map(|e| blob_name(&e.key)).collect();
    for name in list_blobs(path)? {
        if !keep.contains(&name) {
            let p = path.join(&name);
            fs::remove_file(&p).map_err(|e| Error::io(p, e))?;
        }
    }
    for set in bundle.sets() {
        write_f32_blob(&path.join(blob_name(&set.key())), set.data())?;
    }
    write_json(&path.join(MANIFEST_FILE), &manifest)
}

pub fn load_bundle(path: &Path) -> Result<ActivationBundle> {
    let manifest_path = path.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::MalformedManifest(e.to_string()))?;
    if manifest.format != FORMAT_TAG {
        return Err(Error::MalformedManifest(format!(
            "unexpected format tag `{}`",
            manifest.format
        )));
    }
    if manifest.version != FORMAT_VERSION {
        return Err(Error::MalformedManifest(format!(
            "unsupported version {}",
            manifest.version
        )));
    }

    let mut referenced = BTreeSet::new();
    let mut sets = Vec::with_capacity(manifest.sets.len());
    for entry in manifest.sets {
        let expected_key = set_key(entry.layer, entry.era, entry.language);
        if entry.key != expected_key {
            return Err(Error::MalformedManifest(format!(
                "key `{}` does not match its cell (expected `{expected_key}`)",
                entry.key
            )));
        }
        if entry.n == 0 || entry.d == 0 {
            return Err(Error::MalformedManifest(format!(
                "set `{}` declares an empty shape {}x{}",
                entry.key, entry.n, entry.d
            )));
        }
        let name = blob_name(&entry.key);
        let blob_path = path.join(&name);
        if !blob_path.is_file() {
            return Err(Error::MissingBlob(name));
        }
        let data = read_f32_blob(&blob_path, &entry.key, entry.n, entry.d)?;
        referenced.insert(name);
        let mut set = ActivationSet::new(
            entry.layer,
            entry.era,
            entry.language,
            entry.d,
            data,
            entry.source,
        )?;
        set.tags = entry.tags;
        sets.push(set);
    }

    for name in list_blobs(path)? {
        if !referenced.contains(&name) {
            return Err(Error::UnreferencedBlob(name));
        }
    }
    ActivationBundle::new(sets)
}

fn blob_name(key: &str) -> String {
    format!("{key}.{BLOB_EXT}")
}

fn list_blobs(dir: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let p = entry.path();
        if p.extension().is_some_and(|e| e == BLOB_EXT) && p.is_file() {
            if let Some(name) = p.file_name().and_then(|n| n.to_str()) {
                out.push(name.to_owned());
            }
        }
    }
    out.sort();
    Ok(out)
}

// ---------------------------------------------------------------------------
// Raw blob + JSON helpers shared by the other persisted documents
// ---------------------------------------------------------------------------

pub(crate) fn write_f32_blob(path: &Path, data: &[f32]) -> Result<()> {
    let mut bytes = Vec::with_capacity(data.len() * 4);
    for x in data {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Read an `n × d` blob and check its length and finiteness.
pub(crate) fn read_f32_blob(path: &Path, key: &str, n: usize, d: usize) -> Result<Vec<f32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = n * d * 4;
    if bytes.len() != expected {
        return Err(Error::DimMismatch {
            key: key.to_owned(),
            n,
            d,
            bytes: bytes.len(),
            expected,
        });
    }
    let data: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteValue {
            key: key.to_owned(),
            row: pos / d,
            col: pos % d,
        });
    }
    Ok(data)
}

pub(crate) fn matrix_to_f32_rows(m: &DMatrix<f64>) -> Vec<f32> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)] as f32);
        }
    }
    out
}

pub(crate) fn f32_rows_to_matrix(data: &[f32], n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_row_iterator(n, d, data.iter().map(|&x| f64::from(x)))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::MalformedManifest(format!("{}: {e}", path.display())))
}
