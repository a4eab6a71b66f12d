// SPDX-License-Identifier: MIT OR Apache-2.0

//! Era steering vectors for language-model residual streams: extraction,
//! a continuous chronological manifold through the era anchors, style/content
//! disentanglement, cross-lingual transfer, and the metrics used to score
//! steered generations. A small seeded decoder stands in for a real model.

pub mod acts;
pub mod disentangle;
pub mod error;
pub mod evaluate;
pub mod fixtures;
pub mod manifold;
pub mod numerics;
pub mod steer;
pub mod toymodel;
pub mod xfer;

/// Crate version, recorded in run provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use acts::{
    centroid, load_bundle, save_bundle, ActivationBundle, ActivationSet, EraLabel, Language,
};
pub use disentangle::{cognitive_vector, fit_style_subspace, StylePairs, StyleSubspace};
pub use error::{Cell, Error, ErrorClass, Result};
pub use evaluate::{
    diagonal_dominance, extract_entities, ppl_matrix, score_epistemic, Averaging, EpistemicScore,
    EraKnowledgeBase, NllTable, PplMatrix,
};
pub use manifold::{
    fit_manifold, load_manifold, save_manifold, trajectory_coords, ChronoManifold, EraCoords,
};
pub use steer::{
    apply_intervention, ensemble, extract_caa, extract_real, InterventionConfig, Method,
    Provenance, SteerVector, TransferMode,
};
pub use toymodel::{HookSpec, ToyModel, ToyModelConfig};
pub use xfer::{
    fit_alignment, load_alignment, save_alignment, transfer_aligned, transfer_direct, AlignmentMap,
};
