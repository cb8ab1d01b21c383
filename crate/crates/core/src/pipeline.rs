//! End-to-end inference: normalize, build the context graph, run the
//! classifier in eval mode.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cooccur::CooccurrenceModel;
use crate::emotions::{CATEGORIES, NUM_CATEGORIES};
use crate::error::{Error, Result};
use crate::gin::{GinModel, Prediction, VAD_DIM};
use crate::graph::build_graph;
use crate::lexicon::Lexicon;
use crate::text::{normalize, Caption, NormalizationConfig};

/// Output for captions that produce no graph.
pub const DEGENERATE: Prediction = Prediction {
    cat: [0.5; NUM_CATEGORIES],
    cont: [0.5; VAD_DIM],
};

#[derive(Debug, Clone, PartialEq)]
pub struct CaptionPrediction {
    pub id: String,
    pub prediction: Prediction,
    pub degenerate: bool,
}

/// One JSONL row of `infer` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub id: String,
    pub scores: Vec<f64>,
    pub vad: [f64; VAD_DIM],
    pub top: Vec<(String, f64)>,
    pub degenerate: bool,
}

impl CaptionPrediction {
    /// The `k` highest-scoring categories, ties in category order.
    pub fn top_k(&self, k: usize) -> Vec<(String, f64)> {
        let mut idx: Vec<usize> = (0..NUM_CATEGORIES).collect();
        idx.sort_by(|&a, &b| self.prediction.cat[b].total_cmp(&self.prediction.cat[a]));
        idx.into_iter()
            .take(k)
            .map(|i| (CATEGORIES[i].to_string(), self.prediction.cat[i]))
            .collect()
    }

    pub fn to_row(&self, k: usize) -> PredictionRow {
        PredictionRow {
            id: self.id.clone(),
            scores: self.prediction.cat.to_vec(),
            vad: self.prediction.cont,
            top: self.top_k(k),
            degenerate: self.degenerate,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Predictor {
    pub normalization: NormalizationConfig,
    pub cooccur: CooccurrenceModel,
    pub lexicon: Lexicon,
    pub model: GinModel,
}

impl Predictor {
    pub fn predict_one(&self, caption: &Caption) -> Result<CaptionPrediction> {
        let nc = normalize(caption, &self.normalization);
        let Some(graph) = build_graph(&nc, &self.cooccur, &self.lexicon) else {
            return Ok(CaptionPrediction {
                id: caption.id.clone(),
                prediction: DEGENERATE,
                degenerate: true,
            });
        };
        Ok(CaptionPrediction {
            id: caption.id.clone(),
            prediction: self.model.predict_graph(&graph)?,
            degenerate: false,
        })
    }

    pub fn predict_text(&self, id: &str, text: &str) -> Result<CaptionPrediction> {
        self.predict_one(&Caption {
            id: id.to_string(),
            text: text.to_string(),
            labels: Vec::new(),
            vad: [0.5; VAD_DIM],
        })
    }

    pub fn predict(&self, captions: &[Caption]) -> Result<Vec<CaptionPrediction>> {
        captions.iter().map(|c| self.predict_one(c)).collect()
    }

    /// Same results as [`Predictor::predict`], in input order.
    pub fn predict_parallel(&self, captions: &[Caption], threads: usize) -> Result<Vec<CaptionPrediction>> {
        if threads <= 1 {
            return self.predict(captions);
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
        pool.install(|| captions.par_iter().map(|c| self.predict_one(c)).collect())
    }
}
