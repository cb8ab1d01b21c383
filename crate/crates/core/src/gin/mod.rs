//! Graph Isomorphism Network classifier with categorical and VAD heads.

mod forward;
pub mod linalg;
mod loss;
mod model;
mod optim;
mod train;

pub use forward::{GraphBatch, ForwardPass, Mode, Prediction, BN_EPS, BN_MOMENTUM};
pub use loss::{LossConfig, Target};
pub use model::{
    BlockParams, BnRunning, Checkpoint, GinModel, Linear, ModelConfig, OptimizerState, Params,
    Pooling, TensorMut, TensorRef, CHECKPOINT_VERSION, VAD_DIM,
};
pub use optim::Adadelta;
pub use train::{eval_loss, train, TrainConfig, TrainOutcome, TrainSample};
