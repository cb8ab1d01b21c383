//! Mean average precision over the categorical scores and inference
//! latency measurement.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::artifact::ArtifactMeta;
use crate::emotions::{CATEGORIES, NUM_CATEGORIES};
use crate::error::{Error, Result};
use crate::gin::Prediction;
use crate::pipeline::{CaptionPrediction, Predictor};
use crate::text::Caption;

/// Non-interpolated AP: the mean of precision at the rank of every
/// positive, ranking by descending score with ties kept in input order.
/// `Ok(None)` when there are no positives.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<Option<f64>> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Ok(None);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // Stable sort keeps the original index order among equal scores.
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if labels[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(Some(sum / positives as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<ArtifactMeta>,
    /// `None` for categories without positive samples.
    pub per_category_ap: Vec<Option<f64>>,
    pub excluded: Vec<String>,
    pub map: f64,
    pub n_samples: usize,
    pub degenerate_count: usize,
}

impl EvalReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{:<18} {:>8}", "category", "AP").unwrap();
        for (name, ap) in CATEGORIES.iter().zip(&self.per_category_ap) {
            match ap {
                Some(ap) => writeln!(out, "{name:<18} {ap:>8.4}").unwrap(),
                None => writeln!(out, "{name:<18} {:>8}", "n/a").unwrap(),
            }
        }
        writeln!(out, "{:<18} {:>8.4}", "mAP", self.map).unwrap();
        write!(
            out,
            "samples: {}  degenerate: {}  excluded categories: {}",
            self.n_samples,
            self.degenerate_count,
            self.excluded.len()
        )
        .unwrap();
        out
    }
}

/// Per-category AP and their mean over categories that have positives.
pub fn evaluate(preds: &[Prediction], targets: &[Vec<usize>]) -> Result<EvalReport> {
    if preds.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} targets",
            preds.len(),
            targets.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::Domain("cannot evaluate zero samples".into()));
    }
    let mut per_category_ap = Vec::with_capacity(NUM_CATEGORIES);
    let mut excluded = Vec::new();
    for c in 0..NUM_CATEGORIES {
        let scores: Vec<f64> = preds.iter().map(|p| p.cat[c]).collect();
        let labels: Vec<bool> = targets.iter().map(|t| t.contains(&c)).collect();
        let ap = average_precision(&scores, &labels)?;
        if ap.is_none() {
            excluded.push(CATEGORIES[c].to_string());
        }
        per_category_ap.push(ap);
    }
    let defined: Vec<f64> = per_category_ap.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::Domain("no category has a positive sample".into()));
    }
    Ok(EvalReport {
        meta: None,
        map: defined.iter().sum::<f64>() / defined.len() as f64,
        per_category_ap,
        excluded,
        n_samples: preds.len(),
        degenerate_count: 0,
    })
}

/// [`evaluate`] over pipeline outputs, counting degenerate predictions.
pub fn evaluate_predictions(preds: &[CaptionPrediction], targets: &[Vec<usize>]) -> Result<EvalReport> {
    let scores: Vec<Prediction> = preds.iter().map(|p| p.prediction).collect();
    let mut report = evaluate(&scores, targets)?;
    report.degenerate_count = preds.iter().filter(|p| p.degenerate).count();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<ArtifactMeta>,
    pub per_sample_ms: Vec<f64>,
    pub min_ms: f64,
    pub mean_ms: f64,
    pub fps_min: f64,
    pub fps_mean: f64,
    pub warmup: usize,
    pub reps: usize,
}

impl LatencyReport {
    pub fn from_samples(per_sample_ms: Vec<f64>, warmup: usize, reps: usize) -> Result<Self> {
        if per_sample_ms.is_empty() {
            return Err(Error::Domain("no latency samples".into()));
        }
        let min_ms = per_sample_ms.iter().copied().fold(f64::INFINITY, f64::min);
        let mean_ms = per_sample_ms.iter().sum::<f64>() / per_sample_ms.len() as f64;
        Ok(LatencyReport {
            meta: None,
            per_sample_ms,
            min_ms,
            mean_ms,
            fps_min: 1000.0 / min_ms,
            fps_mean: 1000.0 / mean_ms,
            warmup,
            reps,
        })
    }

    pub fn to_table(&self) -> String {
        format!(
            "{:<10} {:>10} {:>10}\n{:<10} {:>10.4} {:>10.1}\n{:<10} {:>10.4} {:>10.1}\nsamples: {}",
            "", "ms", "fps", "min", self.min_ms, self.fps_min, "mean", self.mean_ms, self.fps_mean,
            self.per_sample_ms.len()
        )
    }
}

/// Times end-to-end prediction one caption at a time on the calling
/// thread. `reps` passes are made over `captions`; the first `warmup`
/// passes are discarded.
pub fn bench_inference(
    captions: &[Caption],
    predictor: &Predictor,
    warmup: usize,
    reps: usize,
) -> Result<LatencyReport> {
    if reps == 0 {
        return Err(Error::Domain("reps must be >= 1".into()));
    }
    if warmup >= reps {
        return Err(Error::Domain(format!("warmup ({warmup}) must be smaller than reps ({reps})")));
    }
    if captions.is_empty() {
        return Err(Error::Domain("no captions to benchmark".into()));
    }
    let mut samples = Vec::with_capacity((reps - warmup) * captions.len());
    for pass in 0..reps {
        for c in captions {
            let start = Instant::now();
            let out = predictor.predict_one(c)?;
            let elapsed = start.elapsed().as_secs_f64() * 1000.0;
            std::hint::black_box(out);
            if pass >= warmup {
                samples.push(elapsed);
            }
        }
    }
    LatencyReport::from_samples(samples, warmup, reps)
}
