//! Weak-supervision pipeline for classifying lifestyle factors
//! (physical activity, excessive diet) in clinical-style sentences.
//!
//! The crate provides:
//! - [`corpus`]: sentence records, tokenization/encoding, deterministic
//!   splits, and the train/gold-standard note-id disjointness guarantee;
//! - [`lexicon`]: the rule-based weak labeler (concept-dictionary
//!   matching plus negation scoping);
//! - [`synthgen`]: a template-driven synthetic corpus generator with
//!   known gold labels and controlled label noise;
//! - [`model`]: a small trainable transformer encoder with hand-written
//!   backpropagation, Adam, and bit-exact checkpoints;
//! - [`eval`]: confusion matrices, precision/recall/F1 and Cohen's kappa.
//!
//! Everything is deterministic under explicit seeds; see [`rng`] for the
//! PRNG and seed-derivation scheme.

pub mod corpus;
pub mod eval;
pub mod lexicon;
pub mod model;
pub mod rng;
pub mod synthgen;

/// Data files shipped with the repo, embedded so library users (and the
/// Python bindings) can run without path configuration. The files under
/// `assets/` are the source of truth.
pub mod builtin {
    pub const LEXICON_TSV: &str = include_str!("../../../assets/lexicon.tsv");
    pub const PA_TEMPLATES: &str = include_str!("../../../assets/templates_pa.txt");
    pub const DIET_TEMPLATES: &str = include_str!("../../../assets/templates_diet.txt");
}
