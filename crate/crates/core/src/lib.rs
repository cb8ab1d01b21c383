//! Emotion recognition from high-level image context.
//!
//! Captions are reduced to valid words, mined for word/emotion and
//! word/word co-occurrence, expanded into weighted context graphs using an
//! affective lexicon, and classified by a GIN into 26 emotion categories
//! plus continuous valence/arousal/dominance.

pub mod artifact;
pub mod cooccur;
pub mod emotions;
pub mod error;
pub mod eval;
pub mod gin;
pub mod graph;
pub mod lexicon;
pub mod pipeline;
pub mod text;

pub use cooccur::CooccurrenceModel;
pub use error::{Error, Result};
pub use gin::{GinModel, LossConfig, ModelConfig, Pooling, Prediction, TrainConfig};
pub use graph::{build_graph, ContextGraph, NodeKind};
pub use lexicon::Lexicon;
pub use text::{Caption, NormalizationConfig, NormalizedCaption};
