use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linalg::Matrix;
use crate::artifact::ArtifactMeta;
use crate::emotions::NUM_CATEGORIES;
use crate::error::{Error, Result};
use crate::lexicon::EMBED_DIM;

pub const CHECKPOINT_VERSION: u32 = 1;
pub const VAD_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    Avg,
    Sum,
}

impl std::str::FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "avg" | "mean" => Ok(Pooling::Avg),
            "sum" => Ok(Pooling::Sum),
            other => Err(Error::Domain(format!("unknown pooling {other:?} (expected avg or sum)"))),
        }
    }
}

impl std::fmt::Display for Pooling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Pooling::Avg => "avg",
            Pooling::Sum => "sum",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input: usize,
    pub hidden: usize,
    pub d_read: usize,
    /// Number of GIN blocks.
    pub layers: usize,
    pub pooling: Pooling,
    /// Leave the raw input features out of the readout.
    pub readout_skip_h0: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input: EMBED_DIM,
            hidden: 64,
            d_read: 64,
            layers: 5,
            pooling: Pooling::Avg,
            readout_skip_h0: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input == 0 || self.hidden == 0 || self.d_read == 0 || self.layers == 0 {
            return Err(Error::Domain(format!("model dimensions must be positive: {self:?}")));
        }
        Ok(())
    }

    /// Indices into the hidden-representation stack that feed the readout.
    pub fn readout_layers(&self) -> std::ops::RangeInclusive<usize> {
        (if self.readout_skip_h0 { 1 } else { 0 })..=self.layers
    }

    pub fn layer_dim(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input
        } else {
            self.hidden
        }
    }
}

/// Affine map `x · weight + bias`, weight stored `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Linear {
            weight: Matrix::zeros(fan_in, fan_out),
            bias: vec![0.0; fan_out],
        }
    }

    fn glorot(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..fan_in * fan_out)
            .map(|_| rng.gen_range(-bound..=bound))
            .collect();
        Linear {
            weight: Matrix::from_vec(fan_in, fan_out, data),
            bias: vec![0.0; fan_out],
        }
    }

    pub fn forward(&self, x: &Matrix) -> Matrix {
        let mut y = x.matmul(&self.weight);
        y.add_row_vector(&self.bias);
        y
    }

    pub fn fan_in(&self) -> usize {
        self.weight.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    pub eps: f64,
    pub mlp1: Linear,
    pub mlp2: Linear,
    pub bn_scale: Vec<f64>,
    pub bn_shift: Vec<f64>,
}

/// Every learnable tensor of the classifier. Also used as the gradient
/// container.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub blocks: Vec<BlockParams>,
    pub readout: Vec<Linear>,
    pub head_cat: Linear,
    pub head_cont: Linear,
}

pub struct TensorRef<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: &'a [f64],
}

pub struct TensorMut<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: &'a mut [f64],
}

impl Params {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let blocks = (1..=cfg.layers)
            .map(|k| BlockParams {
                eps: 0.0,
                mlp1: Linear::zeros(cfg.layer_dim(k - 1), cfg.hidden),
                mlp2: Linear::zeros(cfg.hidden, cfg.hidden),
                bn_scale: vec![0.0; cfg.hidden],
                bn_shift: vec![0.0; cfg.hidden],
            })
            .collect();
        Params {
            blocks,
            readout: cfg
                .readout_layers()
                .map(|l| Linear::zeros(cfg.layer_dim(l), cfg.d_read))
                .collect(),
            head_cat: Linear::zeros(cfg.d_read, NUM_CATEGORIES),
            head_cont: Linear::zeros(cfg.d_read, VAD_DIM),
        }
    }

    fn init(cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> Self {
        let blocks = (1..=cfg.layers)
            .map(|k| BlockParams {
                eps: 0.0,
                mlp1: Linear::glorot(cfg.layer_dim(k - 1), cfg.hidden, rng),
                mlp2: Linear::glorot(cfg.hidden, cfg.hidden, rng),
                bn_scale: vec![1.0; cfg.hidden],
                bn_shift: vec![0.0; cfg.hidden],
            })
            .collect();
        let readout = cfg
            .readout_layers()
            .map(|l| Linear::glorot(cfg.layer_dim(l), cfg.d_read, rng))
            .collect();
        Params {
            blocks,
            readout,
            head_cat: Linear::glorot(cfg.d_read, NUM_CATEGORIES, rng),
            head_cont: Linear::glorot(cfg.d_read, VAD_DIM, rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.values.fill(0.0);
        }
        z
    }

    /// Named tensors in a fixed order shared by the optimizer and the
    /// checkpoint format.
    pub fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut out = Vec::new();
        walk(self, &mut |name, shape, values| out.push(TensorRef { name, shape, values }));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let mut out = Vec::new();
        walk_mut(self, &mut |name, shape, values| out.push(TensorMut { name, shape, values }));
        out
    }

    /// Stack index read by `readout[0]` (1 when h0 is skipped).
    pub fn first_readout_layer(&self) -> usize {
        self.blocks.len() + 1 - self.readout.len()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.values.iter().all(|v| v.is_finite()))
    }

    pub fn norms(&self) -> Vec<(String, f64)> {
        self.tensors()
            .into_iter()
            .map(|t| (t.name, t.values.iter().map(|v| v * v).sum::<f64>().sqrt()))
            .collect()
    }
}

fn linear_name(prefix: &str) -> (String, String) {
    (format!("{prefix}.weight"), format!("{prefix}.bias"))
}

fn walk<'a>(p: &'a Params, f: &mut dyn FnMut(String, Vec<usize>, &'a [f64])) {
    for (k, b) in p.blocks.iter().enumerate() {
        let k = k + 1;
        f(format!("block{k}.eps"), vec![1], std::slice::from_ref(&b.eps));
        for (tag, lin) in [("mlp1", &b.mlp1), ("mlp2", &b.mlp2)] {
            let (w, bias) = linear_name(&format!("block{k}.{tag}"));
            f(w, vec![lin.fan_in(), lin.fan_out()], lin.weight.data());
            f(bias, vec![lin.fan_out()], &lin.bias);
        }
        f(format!("block{k}.bn.scale"), vec![b.bn_scale.len()], &b.bn_scale);
        f(format!("block{k}.bn.shift"), vec![b.bn_shift.len()], &b.bn_shift);
    }
    let first = p.first_readout_layer();
    for (i, lin) in p.readout.iter().enumerate() {
        let (w, bias) = linear_name(&format!("readout{}", first + i));
        f(w, vec![lin.fan_in(), lin.fan_out()], lin.weight.data());
        f(bias, vec![lin.fan_out()], &lin.bias);
    }
    for (tag, lin) in [("head_cat", &p.head_cat), ("head_cont", &p.head_cont)] {
        let (w, bias) = linear_name(tag);
        f(w, vec![lin.fan_in(), lin.fan_out()], lin.weight.data());
        f(bias, vec![lin.fan_out()], &lin.bias);
    }
}

fn walk_mut<'a>(p: &'a mut Params, f: &mut dyn FnMut(String, Vec<usize>, &'a mut [f64])) {
    let first = p.first_readout_layer();
    for (k, b) in p.blocks.iter_mut().enumerate() {
        let k = k + 1;
        f(format!("block{k}.eps"), vec![1], std::slice::from_mut(&mut b.eps));
        for (tag, lin) in [("mlp1", &mut b.mlp1), ("mlp2", &mut b.mlp2)] {
            let (w, bias) = linear_name(&format!("block{k}.{tag}"));
            let shape = vec![lin.fan_in(), lin.fan_out()];
            f(w, shape, lin.weight.data_mut());
            f(bias, vec![lin.bias.len()], &mut lin.bias);
        }
        f(format!("block{k}.bn.scale"), vec![b.bn_scale.len()], &mut b.bn_scale);
        f(format!("block{k}.bn.shift"), vec![b.bn_shift.len()], &mut b.bn_shift);
    }
    for (i, lin) in p.readout.iter_mut().enumerate() {
        let (w, bias) = linear_name(&format!("readout{}", first + i));
        let shape = vec![lin.fan_in(), lin.fan_out()];
        f(w, shape, lin.weight.data_mut());
        f(bias, vec![lin.bias.len()], &mut lin.bias);
    }
    for (tag, lin) in [("head_cat", &mut p.head_cat), ("head_cont", &mut p.head_cont)] {
        let (w, bias) = linear_name(tag);
        let shape = vec![lin.fan_in(), lin.fan_out()];
        f(w, shape, lin.weight.data_mut());
        f(bias, vec![lin.bias.len()], &mut lin.bias);
    }
}

/// Batch-norm running statistics of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct BnRunning {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GinModel {
    pub config: ModelConfig,
    pub params: Params,
    pub running: Vec<BnRunning>,
}

/// Adadelta accumulators keyed by tensor name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct OptimizerState {
    pub steps: u64,
    pub sq_grad: BTreeMap<String, Vec<f64>>,
    pub sq_delta: BTreeMap<String, Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Dims {
    input: usize,
    hidden: usize,
    d_read: usize,
    layers: usize,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<ArtifactMeta>,
    dims: Dims,
    pooling: Pooling,
    #[serde(default)]
    readout_skip_h0: bool,
    tensors: BTreeMap<String, TensorRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    optimizer_state: Option<OptimizerState>,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

impl GinModel {
    /// Glorot-uniform affine weights, zero biases, ε = 0, unit BN scale.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(GinModel {
            config,
            params: Params::init(&config, &mut rng),
            running: (0..config.layers)
                .map(|_| BnRunning {
                    mean: vec![0.0; config.hidden],
                    var: vec![1.0; config.hidden],
                })
                .collect(),
        })
    }

    pub fn to_checkpoint_json(
        &self,
        meta: Option<&ArtifactMeta>,
        optimizer: Option<&OptimizerState>,
    ) -> String {
        let mut tensors = BTreeMap::new();
        for t in self.params.tensors() {
            tensors.insert(
                t.name,
                TensorRecord {
                    shape: t.shape,
                    values: t.values.to_vec(),
                },
            );
        }
        for (k, bn) in self.running.iter().enumerate() {
            let k = k + 1;
            for (tag, v) in [("running_mean", &bn.mean), ("running_var", &bn.var)] {
                tensors.insert(
                    format!("block{k}.bn.{tag}"),
                    TensorRecord {
                        shape: vec![v.len()],
                        values: v.clone(),
                    },
                );
            }
        }
        let file = CheckpointFile {
            version: CHECKPOINT_VERSION,
            meta: meta.cloned(),
            dims: Dims {
                input: self.config.input,
                hidden: self.config.hidden,
                d_read: self.config.d_read,
                layers: self.config.layers,
            },
            pooling: self.config.pooling,
            readout_skip_h0: self.config.readout_skip_h0,
            tensors,
            optimizer_state: optimizer.cloned(),
        };
        serde_json::to_string(&file).expect("checkpoint serialization is infallible")
    }

    pub fn save_checkpoint(
        &self,
        path: &Path,
        meta: Option<&ArtifactMeta>,
        optimizer: Option<&OptimizerState>,
    ) -> Result<()> {
        fs::write(path, self.to_checkpoint_json(meta, optimizer)).map_err(|e| Error::io(path, e))
    }

    pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint_json(&text)
    }

    /// Loads a checkpoint and checks it matches the expected architecture.
    pub fn load_checkpoint_for(path: &Path, expected: &ModelConfig) -> Result<Checkpoint> {
        let ckpt = Self::load_checkpoint(path)?;
        if &ckpt.model.config != expected {
            return Err(Error::Shape(format!(
                "checkpoint architecture {:?} does not match configured {:?}",
                ckpt.model.config, expected
            )));
        }
        Ok(ckpt)
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Checkpoint> {
        let probe: VersionProbe =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("checkpoint: {e}")))?;
        if probe.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                probe.version
            )));
        }
        let mut file: CheckpointFile =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("checkpoint: {e}")))?;
        let config = ModelConfig {
            input: file.dims.input,
            hidden: file.dims.hidden,
            d_read: file.dims.d_read,
            layers: file.dims.layers,
            pooling: file.pooling,
            readout_skip_h0: file.readout_skip_h0,
        };
        config.validate().map_err(|e| Error::Format(e.to_string()))?;

        let mut take = |name: &str, shape: &[usize]| -> Result<Vec<f64>> {
            let rec = file
                .tensors
                .remove(name)
                .ok_or_else(|| Error::Format(format!("checkpoint is missing tensor {name}")))?;
            let n: usize = shape.iter().product();
            if rec.shape != shape || rec.values.len() != n {
                return Err(Error::Format(format!(
                    "tensor {name} has shape {:?} with {} values, declared dims require {shape:?}",
                    rec.shape,
                    rec.values.len()
                )));
            }
            if rec.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Format(format!("tensor {name} has non-finite values")));
            }
            Ok(rec.values)
        };

        let mut params = Params::zeros(&config);
        for t in params.tensors_mut() {
            let values = take(&t.name, &t.shape)?;
            t.values.copy_from_slice(&values);
        }
        let mut running = Vec::with_capacity(config.layers);
        for k in 1..=config.layers {
            let mean = take(&format!("block{k}.bn.running_mean"), &[config.hidden])?;
            let var = take(&format!("block{k}.bn.running_var"), &[config.hidden])?;
            if var.iter().any(|&v| v < 0.0) {
                return Err(Error::Format(format!("block{k} running variance is negative")));
            }
            running.push(BnRunning { mean, var });
        }
        if let Some(extra) = file.tensors.keys().next() {
            return Err(Error::Format(format!("unexpected tensor {extra} in checkpoint")));
        }
        Ok(Checkpoint {
            model: GinModel {
                config,
                params,
                running,
            },
            meta: file.meta,
            optimizer: file.optimizer_state,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: GinModel,
    pub meta: Option<ArtifactMeta>,
    pub optimizer: Option<OptimizerState>,
}
