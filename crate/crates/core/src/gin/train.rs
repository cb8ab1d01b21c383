use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::forward::{GraphBatch, Mode};
use super::loss::{LossConfig, Target};
use super::model::{GinModel, OptimizerState};
use super::optim::Adadelta;
use crate::error::{Error, Result};
use crate::graph::ContextGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub seed: u64,
    pub rho: f64,
    pub adadelta_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 16,
            lr: 0.001,
            weight_decay: 0.0004,
            epochs: 50,
            seed: 0,
            rho: 0.9,
            adadelta_eps: 1e-6,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Domain("batch size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.rho) || self.adadelta_eps <= 0.0 || self.lr < 0.0 {
            return Err(Error::Domain(format!("invalid optimizer settings: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainSample {
    pub graph: ContextGraph,
    pub target: Target,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Mean per-sample training loss of each epoch.
    pub loss_history: Vec<f64>,
    pub optimizer: OptimizerState,
}

/// Shuffled minibatch training with Adadelta. `on_epoch` runs after every
/// epoch with the epoch index (1-based), its mean loss and the model.
pub fn train(
    model: &mut GinModel,
    data: &[TrainSample],
    tc: &TrainConfig,
    lc: &LossConfig,
    mut on_epoch: impl FnMut(usize, f64, &GinModel) -> Result<()>,
) -> Result<TrainOutcome> {
    tc.validate()?;
    lc.validate()?;
    if data.is_empty() {
        return Err(Error::Domain("training set is empty".into()));
    }
    let mut opt = Adadelta::new(&model.params, tc.lr, tc.rho, tc.adadelta_eps, tc.weight_decay);
    // Stream 1 keeps shuffling independent of the initialization stream.
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(tc.epochs);

    for epoch in 1..=tc.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (bi, chunk) in order.chunks(tc.batch_size).enumerate() {
            let graphs: Vec<&ContextGraph> = chunk.iter().map(|&i| &data[i].graph).collect();
            let targets: Vec<Target> = chunk.iter().map(|&i| data[i].target).collect();
            let batch = GraphBatch::new(&graphs)?;
            let pass = model.forward(&batch, Mode::Train)?;
            let (loss, d_cat, d_cont) = lc.batch_loss(&pass, &targets);
            if !loss.is_finite() {
                return Err(Error::NonFinite {
                    epoch,
                    batch: bi,
                    param_norms: model.params.norms(),
                });
            }
            let grads = model.backward(&batch, &pass, &d_cat, &d_cont);
            model.update_running_stats(&pass);
            opt.step(&mut model.params, &grads);
            if !model.params.all_finite() {
                return Err(Error::NonFinite {
                    epoch,
                    batch: bi,
                    param_norms: model.params.norms(),
                });
            }
            epoch_loss += loss * chunk.len() as f64;
        }
        let mean = epoch_loss / data.len() as f64;
        history.push(mean);
        on_epoch(epoch, mean, model)?;
    }
    Ok(TrainOutcome {
        loss_history: history,
        optimizer: opt.state(&model.params),
    })
}

/// Mean loss over `data` with the model in eval mode.
pub fn eval_loss(model: &GinModel, data: &[TrainSample], lc: &LossConfig) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Domain("evaluation set is empty".into()));
    }
    let mut total = 0.0;
    for s in data {
        let pred = model.predict_graph(&s.graph)?;
        total += lc.loss(&pred, &s.target);
    }
    Ok(total / data.len() as f64)
}
