//! GIN forward pass over a block-diagonal batch of graphs, and the
//! matching reverse-mode gradient computation.

use super::linalg::{axpy, Matrix};
use super::model::{GinModel, Params, Pooling, VAD_DIM};
use crate::emotions::NUM_CATEGORIES;
use crate::error::{Error, Result};
use crate::graph::ContextGraph;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch-norm uses statistics of the current batch.
    Train,
    /// Batch-norm uses the running statistics.
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub cat: [f64; NUM_CATEGORIES],
    pub cont: [f64; VAD_DIM],
}

/// Disjoint union of one or more graphs.
#[derive(Debug, Clone)]
pub struct GraphBatch {
    features: Matrix,
    /// (src, dst, weight) with node indices into the union.
    edges: Vec<(usize, usize, f64)>,
    graph_of: Vec<usize>,
    sizes: Vec<usize>,
}

impl GraphBatch {
    pub fn new(graphs: &[&ContextGraph]) -> Result<Self> {
        if graphs.is_empty() {
            return Err(Error::Shape("empty batch".into()));
        }
        let dim = graphs[0].nodes.first().map(|n| n.feature.len()).unwrap_or(0);
        let total: usize = graphs.iter().map(|g| g.num_nodes()).sum();
        let mut data = Vec::with_capacity(total * dim);
        let mut edges = Vec::new();
        let mut graph_of = Vec::with_capacity(total);
        let mut sizes = Vec::with_capacity(graphs.len());
        let mut offset = 0;
        for (gi, g) in graphs.iter().enumerate() {
            if g.nodes.is_empty() {
                return Err(Error::Shape(format!("graph {:?} has no nodes", g.caption_id)));
            }
            for n in &g.nodes {
                if n.feature.len() != dim {
                    return Err(Error::Shape(format!(
                        "graph {:?}: node feature width {} differs from {dim}",
                        g.caption_id,
                        n.feature.len()
                    )));
                }
                data.extend_from_slice(&n.feature);
                graph_of.push(gi);
            }
            for e in &g.edges {
                if e.src >= g.nodes.len() || e.dst >= g.nodes.len() {
                    return Err(Error::Shape(format!("graph {:?}: dangling edge", g.caption_id)));
                }
                edges.push((offset + e.src, offset + e.dst, e.weight));
            }
            sizes.push(g.nodes.len());
            offset += g.nodes.len();
        }
        Ok(GraphBatch {
            features: Matrix::from_vec(total, dim, data),
            edges,
            graph_of,
            sizes,
        })
    }

    pub fn single(graph: &ContextGraph) -> Result<Self> {
        Self::new(&[graph])
    }

    pub fn num_graphs(&self) -> usize {
        self.sizes.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.graph_of.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }
}

struct BlockCache {
    agg: Matrix,
    z1: Matrix,
    r1: Matrix,
    xhat: Matrix,
    inv_std: Vec<f64>,
    y: Matrix,
}

/// Intermediate values of one forward pass, kept for the backward pass.
pub struct ForwardPass {
    /// h0 .. hL
    hidden: Vec<Matrix>,
    blocks: Vec<BlockCache>,
    pooled: Vec<Matrix>,
    z: Matrix,
    cat: Matrix,
    cont: Matrix,
    mode: Mode,
    /// Per block: batch mean and unbiased batch variance (train mode only).
    batch_stats: Vec<(Vec<f64>, Vec<f64>)>,
}

impl ForwardPass {
    pub fn predictions(&self) -> Vec<Prediction> {
        (0..self.cat.rows())
            .map(|g| Prediction {
                cat: self.cat.row(g).try_into().unwrap(),
                cont: self.cont.row(g).try_into().unwrap(),
            })
            .collect()
    }

    /// Graph-level embedding fed to the two heads.
    pub fn readout(&self) -> &Matrix {
        &self.z
    }

    pub fn hidden(&self, layer: usize) -> &Matrix {
        &self.hidden[layer]
    }

    /// Which ReLU inputs are positive, over every block. Two passes with the
    /// same pattern lie on the same linear piece of the network.
    pub fn relu_pattern(&self) -> Vec<bool> {
        self.blocks
            .iter()
            .flat_map(|b| b.z1.data().iter().chain(b.y.data()).map(|&x| x > 0.0))
            .collect()
    }
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `(1 + eps) h[v] + Σ_{u -> v} w(u, v) h[u]`
fn aggregate(h: &Matrix, edges: &[(usize, usize, f64)], eps: f64) -> Matrix {
    let mut agg = h.map(|x| (1.0 + eps) * x);
    for &(src, dst, w) in edges {
        if w == 0.0 {
            continue;
        }
        let cols = h.cols();
        let (s, d) = (src * cols, dst * cols);
        let data = agg.data_mut();
        for c in 0..cols {
            data[d + c] += w * h.data()[s + c];
        }
    }
    agg
}

fn pool(h: &Matrix, batch: &GraphBatch, pooling: Pooling) -> Matrix {
    let mut out = Matrix::zeros(batch.num_graphs(), h.cols());
    for (v, &g) in batch.graph_of.iter().enumerate() {
        axpy(out.row_mut(g), 1.0, h.row(v));
    }
    if pooling == Pooling::Avg {
        for (g, &n) in batch.sizes.iter().enumerate() {
            for x in out.row_mut(g) {
                *x /= n as f64;
            }
        }
    }
    out
}

impl GinModel {
    pub fn forward(&self, batch: &GraphBatch, mode: Mode) -> Result<ForwardPass> {
        let cfg = &self.config;
        if batch.feature_dim() != cfg.input {
            return Err(Error::Shape(format!(
                "node features have width {}, model expects {}",
                batch.feature_dim(),
                cfg.input
            )));
        }
        let n = batch.num_nodes() as f64;
        let mut hidden = vec![batch.features.clone()];
        let mut blocks = Vec::with_capacity(cfg.layers);
        let mut batch_stats = Vec::new();

        for (k, block) in self.params.blocks.iter().enumerate() {
            let prev = hidden.last().unwrap();
            let agg = aggregate(prev, &batch.edges, block.eps);
            let z1 = block.mlp1.forward(&agg);
            let r1 = z1.map(relu);
            let z2 = block.mlp2.forward(&r1);

            let (mean, var) = match mode {
                Mode::Train => {
                    let mean: Vec<f64> = z2.col_sums().into_iter().map(|s| s / n).collect();
                    let mut var = vec![0.0; cfg.hidden];
                    for i in 0..z2.rows() {
                        for (c, &x) in z2.row(i).iter().enumerate() {
                            var[c] += (x - mean[c]).powi(2);
                        }
                    }
                    var.iter_mut().for_each(|v| *v /= n);
                    let unbiased = if n > 1.0 {
                        var.iter().map(|v| v * n / (n - 1.0)).collect()
                    } else {
                        var.clone()
                    };
                    batch_stats.push((mean.clone(), unbiased));
                    (mean, var)
                }
                Mode::Eval => (self.running[k].mean.clone(), self.running[k].var.clone()),
            };
            let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();

            let mut xhat = z2;
            let mut y = Matrix::zeros(xhat.rows(), xhat.cols());
            for i in 0..xhat.rows() {
                let xr = xhat.row_mut(i);
                for c in 0..xr.len() {
                    xr[c] = (xr[c] - mean[c]) * inv_std[c];
                }
                let yr = y.row_mut(i);
                for c in 0..yr.len() {
                    yr[c] = block.bn_scale[c] * xr[c] + block.bn_shift[c];
                }
            }
            hidden.push(y.map(relu));
            blocks.push(BlockCache {
                agg,
                z1,
                r1,
                xhat,
                inv_std,
                y,
            });
        }

        let first = self.params.first_readout_layer();
        let mut z = Matrix::zeros(batch.num_graphs(), cfg.d_read);
        let mut pooled = Vec::with_capacity(self.params.readout.len());
        for (i, proj) in self.params.readout.iter().enumerate() {
            let p = pool(&hidden[first + i], batch, cfg.pooling);
            let contrib = proj.forward(&p);
            axpy(z.data_mut(), 1.0, contrib.data());
            pooled.push(p);
        }
        let cat = self.params.head_cat.forward(&z).map(sigmoid);
        let cont = self.params.head_cont.forward(&z);

        Ok(ForwardPass {
            hidden,
            blocks,
            pooled,
            z,
            cat,
            cont,
            mode,
            batch_stats,
        })
    }

    pub fn predict_graph(&self, graph: &ContextGraph) -> Result<Prediction> {
        let batch = GraphBatch::single(graph)?;
        Ok(self.forward(&batch, Mode::Eval)?.predictions()[0])
    }

    /// Folds the batch statistics of a train-mode pass into the running
    /// estimates.
    pub fn update_running_stats(&mut self, pass: &ForwardPass) {
        for (bn, (mean, var)) in self.running.iter_mut().zip(&pass.batch_stats) {
            for c in 0..bn.mean.len() {
                bn.mean[c] = (1.0 - BN_MOMENTUM) * bn.mean[c] + BN_MOMENTUM * mean[c];
                bn.var[c] = (1.0 - BN_MOMENTUM) * bn.var[c] + BN_MOMENTUM * var[c];
            }
        }
    }

    /// Gradients of a scalar loss given its derivatives with respect to
    /// the categorical scores (post-sigmoid) and the VAD outputs.
    pub fn backward(
        &self,
        batch: &GraphBatch,
        pass: &ForwardPass,
        d_cat: &Matrix,
        d_cont: &Matrix,
    ) -> Params {
        let p = &self.params;
        let mut grads = p.zeros_like();

        let d_logit = Matrix::from_vec(
            d_cat.rows(),
            d_cat.cols(),
            d_cat
                .data()
                .iter()
                .zip(pass.cat.data())
                .map(|(g, s)| g * s * (1.0 - s))
                .collect(),
        );
        grads.head_cat.weight = pass.z.t_matmul(&d_logit);
        grads.head_cat.bias = d_logit.col_sums();
        grads.head_cont.weight = pass.z.t_matmul(d_cont);
        grads.head_cont.bias = d_cont.col_sums();
        let mut dz = d_logit.matmul_t(&p.head_cat.weight);
        axpy(dz.data_mut(), 1.0, d_cont.matmul_t(&p.head_cont.weight).data());

        let mut d_hidden: Vec<Matrix> = pass
            .hidden
            .iter()
            .map(|h| Matrix::zeros(h.rows(), h.cols()))
            .collect();
        let first = p.first_readout_layer();
        for (i, proj) in p.readout.iter().enumerate() {
            grads.readout[i].weight = pass.pooled[i].t_matmul(&dz);
            grads.readout[i].bias = dz.col_sums();
            let d_pooled = dz.matmul_t(&proj.weight);
            let dh = &mut d_hidden[first + i];
            for (v, &g) in batch.graph_of.iter().enumerate() {
                let scale = match self.config.pooling {
                    Pooling::Avg => 1.0 / batch.sizes[g] as f64,
                    Pooling::Sum => 1.0,
                };
                axpy(dh.row_mut(v), scale, d_pooled.row(g));
            }
        }

        let n = batch.num_nodes() as f64;
        for k in (0..p.blocks.len()).rev() {
            let block = &p.blocks[k];
            let cache = &pass.blocks[k];
            let gb = &mut grads.blocks[k];
            let dh = std::mem::replace(&mut d_hidden[k + 1], Matrix::zeros(0, 0));

            let width = dh.cols();
            let mut dy = dh;
            for (g, &y) in dy.data_mut().iter_mut().zip(cache.y.data()) {
                if y <= 0.0 {
                    *g = 0.0;
                }
            }
            let mut dxhat = Matrix::zeros(dy.rows(), width);
            for i in 0..dy.rows() {
                for c in 0..width {
                    let g = dy.get(i, c);
                    gb.bn_scale[c] += g * cache.xhat.get(i, c);
                    gb.bn_shift[c] += g;
                    dxhat.row_mut(i)[c] = g * block.bn_scale[c];
                }
            }
            let dz2 = match pass.mode {
                Mode::Eval => {
                    let mut d = dxhat;
                    for i in 0..d.rows() {
                        for (c, x) in d.row_mut(i).iter_mut().enumerate() {
                            *x *= cache.inv_std[c];
                        }
                    }
                    d
                }
                Mode::Train => {
                    let sum_d = dxhat.col_sums();
                    let mut sum_dx = vec![0.0; width];
                    for i in 0..dxhat.rows() {
                        for c in 0..width {
                            sum_dx[c] += dxhat.get(i, c) * cache.xhat.get(i, c);
                        }
                    }
                    let mut d = Matrix::zeros(dxhat.rows(), width);
                    for i in 0..d.rows() {
                        for c in 0..width {
                            d.row_mut(i)[c] = cache.inv_std[c] / n
                                * (n * dxhat.get(i, c) - sum_d[c] - cache.xhat.get(i, c) * sum_dx[c]);
                        }
                    }
                    d
                }
            };

            gb.mlp2.weight = cache.r1.t_matmul(&dz2);
            gb.mlp2.bias = dz2.col_sums();
            let mut dz1 = dz2.matmul_t(&block.mlp2.weight);
            for (g, &z) in dz1.data_mut().iter_mut().zip(cache.z1.data()) {
                if z <= 0.0 {
                    *g = 0.0;
                }
            }
            gb.mlp1.weight = cache.agg.t_matmul(&dz1);
            gb.mlp1.bias = dz1.col_sums();
            let d_agg = dz1.matmul_t(&block.mlp1.weight);

            let prev = &pass.hidden[k];
            gb.eps = d_agg
                .data()
                .iter()
                .zip(prev.data())
                .map(|(a, b)| a * b)
                .sum();
            if k == 0 {
                // No parameters below the first block.
                break;
            }
            let d_prev = &mut d_hidden[k];
            axpy(d_prev.data_mut(), 1.0 + block.eps, d_agg.data());
            for &(src, dst, w) in &batch.edges {
                if w != 0.0 {
                    axpy(d_prev.row_mut(src), w, d_agg.row(dst));
                }
            }
        }
        grads
    }
}
