use super::model::{OptimizerState, Params};
use crate::error::{Error, Result};

/// Adadelta with decoupled weight decay.
///
/// Per element: `E[g²] ← ρE[g²] + (1−ρ)g²`,
/// `Δ = √(E[Δ²]+ε) / √(E[g²]+ε) · g`, `E[Δ²] ← ρE[Δ²] + (1−ρ)Δ²`,
/// `θ ← θ − lr·Δ`, then `θ ← θ(1 − lr·wd)`.
#[derive(Debug, Clone)]
pub struct Adadelta {
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
    pub weight_decay: f64,
    sq_grad: Vec<Vec<f64>>,
    sq_delta: Vec<Vec<f64>>,
    steps: u64,
}

impl Adadelta {
    pub fn new(params: &Params, lr: f64, rho: f64, eps: f64, weight_decay: f64) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .tensors()
            .iter()
            .map(|t| vec![0.0; t.values.len()])
            .collect();
        Adadelta {
            lr,
            rho,
            eps,
            weight_decay,
            sq_grad: zeros.clone(),
            sq_delta: zeros,
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self, params: &mut Params, grads: &Params) {
        let grads = grads.tensors();
        let decay = 1.0 - self.lr * self.weight_decay;
        for (i, t) in params.tensors_mut().into_iter().enumerate() {
            let g = grads[i].values;
            let sq_g = &mut self.sq_grad[i];
            let sq_d = &mut self.sq_delta[i];
            for j in 0..t.values.len() {
                sq_g[j] = self.rho * sq_g[j] + (1.0 - self.rho) * g[j] * g[j];
                let delta = ((sq_d[j] + self.eps).sqrt() / (sq_g[j] + self.eps).sqrt()) * g[j];
                sq_d[j] = self.rho * sq_d[j] + (1.0 - self.rho) * delta * delta;
                t.values[j] -= self.lr * delta;
                t.values[j] *= decay;
            }
        }
        self.steps += 1;
    }

    pub fn state(&self, params: &Params) -> OptimizerState {
        let mut state = OptimizerState {
            steps: self.steps,
            ..OptimizerState::default()
        };
        for (i, t) in params.tensors().into_iter().enumerate() {
            state.sq_grad.insert(t.name.clone(), self.sq_grad[i].clone());
            state.sq_delta.insert(t.name, self.sq_delta[i].clone());
        }
        state
    }

    /// Restores accumulators saved by [`Adadelta::state`].
    pub fn restore(&mut self, params: &Params, state: &OptimizerState) -> Result<()> {
        for (i, t) in params.tensors().into_iter().enumerate() {
            for (dst, src) in [
                (&mut self.sq_grad[i], state.sq_grad.get(&t.name)),
                (&mut self.sq_delta[i], state.sq_delta.get(&t.name)),
            ] {
                let src = src.ok_or_else(|| Error::Format(format!("optimizer state missing {}", t.name)))?;
                if src.len() != dst.len() {
                    return Err(Error::Shape(format!("optimizer state for {} has wrong length", t.name)));
                }
                dst.copy_from_slice(src);
            }
        }
        self.steps = state.steps;
        Ok(())
    }
}
