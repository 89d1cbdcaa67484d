//! Mining, annotation, and learning pipeline for sense-perception commonsense
//! relations: which sources produce which sounds, which sounds belong to which
//! acoustic scenes, and whether a smell is pleasant.
//!
//! The crate is organised as the pipeline runs:
//!
//! * [`mining`] streams a plain-text corpus for `sound of <y>` / `smell of <y>`
//!   phrases and derives gerund bi-gram sound-source candidates.
//! * [`depgraph`] reads CoNLL-U parses, finds scene/sound co-mentions and ranks
//!   dependency shortest paths by how many distinct pairs they connect.
//! * [`annotation`] turns candidates into multiple-choice questions and
//!   aggregates worker answers (majority vote, Fleiss' kappa).
//! * [`embeddings`] loads word vectors and composes pair features.
//! * [`models`] holds the learners: softmax regression, an LSTM encoder and an
//!   end-to-end memory network, all with hand-written gradients.
//! * [`experiments`] assembles datasets, splits, cross-validates and reports.

pub mod annotation;
pub mod depgraph;
pub mod embeddings;
pub mod experiments;
pub mod fixtures;
pub mod jsonl;
pub mod mining;
pub mod models;
