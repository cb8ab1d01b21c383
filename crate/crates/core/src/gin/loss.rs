use super::forward::{ForwardPass, Prediction};
use super::linalg::Matrix;
use super::model::VAD_DIM;
use crate::emotions::NUM_CATEGORIES;
use crate::error::{Error, Result};
use crate::text::NormalizedCaption;

/// Training target: 0/1 category indicators and normalized VAD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub cat: [f64; NUM_CATEGORIES],
    pub cont: [f64; VAD_DIM],
}

impl Target {
    pub fn from_caption(c: &NormalizedCaption) -> Self {
        Target {
            cat: c.label_indicator(),
            cont: c.vad,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossConfig {
    pub lambda_cat: f64,
    pub lambda_cont: f64,
    /// Offset inside the log of the category weights; must exceed 1 when a
    /// prior can be 0.
    pub c: f64,
    pub category_prior: [f64; NUM_CATEGORIES],
}

impl LossConfig {
    pub fn new(category_prior: [f64; NUM_CATEGORIES]) -> Self {
        LossConfig {
            lambda_cat: 1.0,
            lambda_cont: 1.0,
            c: 1.2,
            category_prior,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_cat < 0.0 || self.lambda_cont < 0.0 {
            return Err(Error::Domain("loss weights must be non-negative".into()));
        }
        if let Some(p) = self
            .category_prior
            .iter()
            .find(|&&p| !((self.c + p).ln() > 0.0))
        {
            return Err(Error::Domain(format!(
                "ln(c + p) must be positive; c = {}, p = {p}",
                self.c
            )));
        }
        Ok(())
    }

    /// `w_i = 1 / ln(c + p_i)`
    pub fn category_weights(&self) -> [f64; NUM_CATEGORIES] {
        self.category_prior.map(|p| 1.0 / (self.c + p).ln())
    }

    /// Weighted squared error on the categories plus squared error on VAD.
    pub fn loss(&self, pred: &Prediction, target: &Target) -> f64 {
        let w = self.category_weights();
        let cat: f64 = (0..NUM_CATEGORIES)
            .map(|i| w[i] * (pred.cat[i] - target.cat[i]).powi(2))
            .sum();
        let cont: f64 = (0..VAD_DIM)
            .map(|j| (pred.cont[j] - target.cont[j]).powi(2))
            .sum();
        self.lambda_cat * cat + self.lambda_cont * cont
    }

    /// Mean loss over the batch and its derivatives with respect to the
    /// categorical scores and VAD outputs.
    pub fn batch_loss(&self, pass: &ForwardPass, targets: &[Target]) -> (f64, Matrix, Matrix) {
        let preds = pass.predictions();
        assert_eq!(preds.len(), targets.len(), "one target per graph");
        let b = preds.len() as f64;
        let w = self.category_weights();
        let mut d_cat = Matrix::zeros(preds.len(), NUM_CATEGORIES);
        let mut d_cont = Matrix::zeros(preds.len(), VAD_DIM);
        let mut total = 0.0;
        for (g, (p, t)) in preds.iter().zip(targets).enumerate() {
            total += self.loss(p, t);
            for (i, d) in d_cat.row_mut(g).iter_mut().enumerate() {
                *d = self.lambda_cat * 2.0 * w[i] * (p.cat[i] - t.cat[i]) / b;
            }
            for (j, d) in d_cont.row_mut(g).iter_mut().enumerate() {
                *d = self.lambda_cont * 2.0 * (p.cont[j] - t.cont[j]) / b;
            }
        }
        (total / b, d_cat, d_cont)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(cat: f64, cont: f64) -> Prediction {
        Prediction {
            cat: [cat; NUM_CATEGORIES],
            cont: [cont; VAD_DIM],
        }
    }

    #[test]
    fn zero_residual_gives_zero_loss() {
        let cfg = LossConfig::new([0.1; NUM_CATEGORIES]);
        let mut t = Target {
            cat: [0.0; NUM_CATEGORIES],
            cont: [0.3; VAD_DIM],
        };
        t.cat[4] = 1.0;
        let mut p = pred(0.0, 0.3);
        p.cat[4] = 1.0;
        assert_eq!(cfg.loss(&p, &t), 0.0);
    }

    #[test]
    fn c_equal_e_gives_unit_weights() {
        let mut cfg = LossConfig::new([0.0; NUM_CATEGORIES]);
        cfg.c = std::f64::consts::E;
        for w in cfg.category_weights() {
            assert!((w - 1.0).abs() < 1e-15);
        }
        let t = Target {
            cat: [1.0; NUM_CATEGORIES],
            cont: [0.0; VAD_DIM],
        };
        let loss = cfg.loss(&pred(0.5, 0.0), &t);
        assert!((loss - 26.0 * 0.25).abs() < 1e-12);
    }

    #[test]
    fn weight_at_half_prior() {
        let cfg = LossConfig::new([0.5; NUM_CATEGORIES]);
        // 1 / ln(1.7) from an independent scalar evaluation.
        let expected = 1.884_558_536_033_989_4;
        assert!((cfg.category_weights()[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_log() {
        let mut cfg = LossConfig::new([0.0; NUM_CATEGORIES]);
        cfg.c = 1.0;
        assert!(cfg.validate().is_err());
        cfg.c = 1.2;
        assert!(cfg.validate().is_ok());
    }
}
