//! Bias-corrected Adam.

use crate::autograd::ParamStore;
use crate::error::{shape_err, Result};
use crate::tensor::{Real, Tensor};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Tensor<T>>,
    second: Vec<Tensor<T>>,
}

impl<T: Real> AdamState<T> {
    pub fn new(config: AdamConfig, store: &ParamStore<T>) -> Self {
        let zeros = || store.iter().map(|p| Tensor::zeros(p.value.shape())).collect::<Vec<_>>();
        Self { config, step: 0, first: zeros(), second: zeros() }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, index: usize) -> &Tensor<T> {
        &self.first[index]
    }

    pub fn second_moment(&self, index: usize) -> &Tensor<T> {
        &self.second[index]
    }

    /// Apply one update from the gradients currently held in `store`.
    pub fn step(&mut self, store: &mut ParamStore<T>) -> Result<()> {
        if store.len() != self.first.len() {
            return shape_err(format!(
                "optimizer tracks {} parameters, store has {}",
                self.first.len(),
                store.len()
            ));
        }
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let t = self.step as i32;
        let correction1 = 1.0 - beta1.powi(t);
        let correction2 = 1.0 - beta2.powi(t);

        let b1 = T::from_f64_lossy(beta1);
        let b2 = T::from_f64_lossy(beta2);
        let one = T::one();
        let step_size = T::from_f64_lossy(lr / correction1);
        let inv_sqrt_c2 = T::from_f64_lossy(1.0 / correction2.sqrt());
        let eps = T::from_f64_lossy(eps);

        for ((p, m), v) in store.iter_mut().zip(&mut self.first).zip(&mut self.second) {
            if p.grad.shape() != m.shape() {
                return shape_err(format!("parameter {} changed shape under the optimizer", p.name));
            }
            let values = p.value.data_mut();
            for (((w, &g), m), v) in
                values.iter_mut().zip(p.grad.data()).zip(m.data_mut()).zip(v.data_mut())
            {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                *w -= step_size * *m / ((*v).sqrt() * inv_sqrt_c2 + eps);
            }
        }
        Ok(())
    }
}
