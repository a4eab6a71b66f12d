// SPDX-License-Identifier: MIT OR Apache-2.0

//! Crate-wide error type.

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::acts::{EraLabel, Language};

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Identifies one `(layer, era, language)` cell of a pipeline run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub layer: usize,
    pub era: Option<EraLabel>,
    pub language: Language,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.era {
            Some(era) => write!(
                f,
                "layer={} era={} language={}",
                self.layer, era, self.language
            ),
            None => write!(f, "layer={} language={}", self.layer, self.language),
        }
    }
}

/// Error categories, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorClass {
    /// Filesystem failures.
    Io,
    /// Unreadable or inconsistent persisted data.
    Format,
    /// Inputs that do not fit together: shapes, keys, eras, languages.
    Mismatch,
    /// Inputs that are well-formed but numerically unusable.
    Data,
    /// Out-of-range parameters.
    Parameter,
}

#[derive(Debug, Error)]
pub enum Error {
    // -- bundle format --
    #[error("manifest references missing blob `{0}`")]
    MissingBlob(String),
    #[error("blob `{0}` is not referenced by the manifest")]
    UnreferencedBlob(String),
    #[error("blob `{key}` holds {bytes} bytes, expected {expected} for n={n}, d={d}")]
    DimMismatch {
        key: String,
        n: usize,
        d: usize,
        bytes: usize,
        expected: usize,
    },
    #[error("non-finite value in `{key}` at row {row}, column {col}")]
    NonFiniteValue { key: String, row: usize, col: usize },
    #[error("malformed manifest: {0}")]
    MalformedManifest(String),
    #[error("duplicate set key {0}")]
    DuplicateKey(String),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    // -- numerics --
    #[error("activation set is empty")]
    EmptySet,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("requested rank {requested} but data has numerical rank {rank}")]
    RankDeficient { requested: usize, rank: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("linear algebra routine failed: {0}")]
    Numerical(String),
    #[error("spline knots must be strictly increasing")]
    NonMonotoneKnots,
    #[error("spline needs at least 2 knots, got {0}")]
    TooFewKnots(usize),
    #[error("neighbourhood graph is disconnected; component sizes {component_sizes:?}")]
    DisconnectedGraph { component_sizes: Vec<usize> },

    // -- steering --
    #[error("key mismatch: {0}")]
    KeyMismatch(String),
    #[error("alpha {0} outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("steering vector has zero norm but lambda > 0")]
    ZeroVector,
    #[error("lambda must be finite and non-negative, got {0}")]
    InvalidLambda(f64),
    #[error("missing era {0}")]
    MissingEra(EraLabel),
    #[error("need at least {needed} contrastive pairs, got {got}")]
    TooFewPairs { needed: usize, got: usize },
    #[error("language mismatch: expected {expected}, got {got}")]
    LanguageMismatch { expected: Language, got: Language },

    // -- evaluation --
    #[error("entity list is empty")]
    EmptyEntityList,
    #[error("perplexity cell (signal={signal}, corpus={corpus}) is empty")]
    EmptyCell { signal: EraLabel, corpus: EraLabel },
    #[error("non-finite NLL in cell (signal={signal}, corpus={corpus})")]
    NonFiniteNll { signal: EraLabel, corpus: EraLabel },
    #[error("perplexity matrix is not square over identical eras")]
    NotSquare,
    #[error("knowledge base line {line}: {reason}")]
    MalformedKb { line: usize, reason: String },

    // -- toy model --
    #[error("layer {layer} out of range for a {layers}-layer model")]
    LayerOutOfRange { layer: usize, layers: usize },
    #[error("sequence of {len} tokens exceeds context {context}")]
    ContextOverflow { len: usize, context: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{cell}: {source}")]
    InCell {
        cell: Cell,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a pipeline cell to this error.
    pub fn in_cell(self, cell: Cell) -> Self {
        Error::InCell {
            cell,
            source: Box::new(self),
        }
    }

    /// Coarse category of the innermost error.
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self.root() {
            Io { .. } => ErrorClass::Io,
            MissingBlob(_)
            | UnreferencedBlob(_)
            | DimMismatch { .. }
            | NonFiniteValue { .. }
            | MalformedManifest(_)
            | DuplicateKey(_)
            | Json(_)
            | MalformedKb { .. } => ErrorClass::Format,
            ShapeMismatch(_)
            | KeyMismatch(_)
            | MissingEra(_)
            | LanguageMismatch { .. }
            | LayerOutOfRange { .. }
            | NotSquare => ErrorClass::Mismatch,
            EmptySet
            | TooFewSamples { .. }
            | RankDeficient { .. }
            | Numerical(_)
            | NonMonotoneKnots
            | TooFewKnots(_)
            | DisconnectedGraph { .. }
            | ZeroVector
            | TooFewPairs { .. }
            | EmptyEntityList
            | EmptyCell { .. }
            | NonFiniteNll { .. } => ErrorClass::Data,
            AlphaOutOfRange(_) | InvalidLambda(_) | ContextOverflow { .. } | InvalidArgument(_) => {
                ErrorClass::Parameter
            }
            InCell { .. } => unreachable!("root() strips cell wrappers"),
        }
    }

    /// Innermost error, skipping any cell wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::InCell { source, .. } => source.root(),
            other => other,
        }
    }
}
