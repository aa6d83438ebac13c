//! Small dense feed-forward networks with hand-rolled reverse mode.
//!
//! Everything is f64 and single-threaded; training must be bitwise
//! reproducible for a fixed seed, so no parallel reductions are used
//! anywhere in the parameter path.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Fully connected rectifier network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    pub dims: Vec<usize>,
    /// `weights[k]` maps layer k (dims[k]) to layer k+1 (dims[k+1]).
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
    /// Sparsity mask (1 keeps, 0 prunes); parallel to `weights`.
    pub mask: Option<Vec<DMatrix<f64>>>,
}

/// Per-layer pre-activations and activations from a cached forward pass.
pub struct MlpCache {
    /// Input and every hidden activation (post-ReLU), final output last.
    pub activations: Vec<DVector<f64>>,
    /// Pre-activation values per affine layer.
    pub pre: Vec<DVector<f64>>,
}

/// Parameter-shaped gradient accumulator.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

impl Mlp {
    /// He-initialized network with the given layer sizes.
    pub fn new(dims: &[usize], rng: &mut ChaCha8Rng) -> Self {
        assert!(dims.len() >= 2);
        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = Vec::with_capacity(dims.len() - 1);
        for k in 0..dims.len() - 1 {
            let scale = (2.0 / dims[k] as f64).sqrt();
            let w = DMatrix::from_fn(dims[k + 1], dims[k], |_, _| {
                let z: f64 = rng.sample(StandardNormal);
                z * scale
            });
            weights.push(w);
            biases.push(DVector::zeros(dims[k + 1]));
        }
        Self {
            dims: dims.to_vec(),
            weights,
            biases,
            mask: None,
        }
    }

    pub fn num_weights(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum()
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    /// Plain forward pass.
    pub fn forward(&self, x: &[f64]) -> DVector<f64> {
        let mut a = DVector::from_column_slice(x);
        let last = self.weights.len() - 1;
        for (k, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = w * &a + b;
            if k != last {
                z.apply(|v| *v = v.max(0.0));
            }
            a = z;
        }
        a
    }

    /// Forward pass retaining the tape needed by [`Mlp::backward`].
    pub fn forward_cached(&self, x: &[f64]) -> MlpCache {
        let mut activations = Vec::with_capacity(self.dims.len());
        let mut pre = Vec::with_capacity(self.weights.len());
        let mut a = DVector::from_column_slice(x);
        activations.push(a.clone());
        let last = self.weights.len() - 1;
        for (k, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = w * &a + b;
            pre.push(z.clone());
            a = if k != last {
                z.map(|v| v.max(0.0))
            } else {
                z
            };
            activations.push(a.clone());
        }
        MlpCache { activations, pre }
    }

    /// Accumulate parameter gradients for one sample given the gradient of
    /// the loss with respect to the network output.
    pub fn backward(&self, cache: &MlpCache, grad_out: &DVector<f64>, grads: &mut MlpGrads) {
        let mut delta = grad_out.clone();
        for k in (0..self.weights.len()).rev() {
            if k != self.weights.len() - 1 {
                // Gate by the rectifier derivative.
                for (d, z) in delta.iter_mut().zip(cache.pre[k].iter()) {
                    if *z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            grads.weights[k].ger(1.0, &delta, &cache.activations[k], 1.0);
            grads.biases[k] += &delta;
            if k > 0 {
                delta = self.weights[k].transpose() * delta;
            }
        }
    }

    pub fn zero_grads(&self) -> MlpGrads {
        MlpGrads {
            weights: self
                .weights
                .iter()
                .map(|w| DMatrix::zeros(w.nrows(), w.ncols()))
                .collect(),
            biases: self.biases.iter().map(|b| DVector::zeros(b.len())).collect(),
        }
    }

    /// One-shot global magnitude pruning to the given sparsity: the
    /// `ceil(sparsity * #weights)` smallest-magnitude weights are zeroed
    /// and masked; ties break deterministically by position.
    pub fn prune_to_sparsity(&mut self, sparsity: f64) -> usize {
        let total = self.num_weights();
        let target = (sparsity * total as f64).ceil() as usize;
        let mut entries: Vec<(f64, usize, usize, usize)> = Vec::with_capacity(total);
        for (k, w) in self.weights.iter().enumerate() {
            for j in 0..w.ncols() {
                for i in 0..w.nrows() {
                    entries.push((w[(i, j)].abs(), k, i, j));
                }
            }
        }
        entries.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
                .then(a.3.cmp(&b.3))
        });
        let mut mask: Vec<DMatrix<f64>> = self
            .weights
            .iter()
            .map(|w| DMatrix::from_element(w.nrows(), w.ncols(), 1.0))
            .collect();
        for &(_, k, i, j) in entries.iter().take(target) {
            mask[k][(i, j)] = 0.0;
            self.weights[k][(i, j)] = 0.0;
        }
        self.mask = Some(mask);
        target
    }

    /// Count exactly-zero weights.
    pub fn zero_weight_count(&self) -> usize {
        self.weights
            .iter()
            .map(|w| w.iter().filter(|v| **v == 0.0).count())
            .sum()
    }
}

/// Adam state for one network.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: MlpGrads,
    v: MlpGrads,
    t: usize,
}

impl AdamState {
    pub fn new(net: &Mlp) -> Self {
        Self {
            m: net.zero_grads(),
            v: net.zero_grads(),
            t: 0,
        }
    }

    /// One adaptive-moment update; gradients and parameters of masked
    /// weights stay exactly zero.
    pub fn step(&mut self, net: &mut Mlp, grads: &MlpGrads, lr: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.t += 1;
        let bc1 = 1.0 - B1.powi(self.t as i32);
        let bc2 = 1.0 - B2.powi(self.t as i32);
        for k in 0..net.weights.len() {
            for idx in 0..net.weights[k].len() {
                let masked = net
                    .mask
                    .as_ref()
                    .map(|m| m[k].as_slice()[idx] == 0.0)
                    .unwrap_or(false);
                if masked {
                    self.m.weights[k].as_mut_slice()[idx] = 0.0;
                    self.v.weights[k].as_mut_slice()[idx] = 0.0;
                    net.weights[k].as_mut_slice()[idx] = 0.0;
                    continue;
                }
                let g = grads.weights[k].as_slice()[idx];
                let m = &mut self.m.weights[k].as_mut_slice()[idx];
                *m = B1 * *m + (1.0 - B1) * g;
                let v = &mut self.v.weights[k].as_mut_slice()[idx];
                *v = B2 * *v + (1.0 - B2) * g * g;
                let mhat = self.m.weights[k].as_slice()[idx] / bc1;
                let vhat = self.v.weights[k].as_slice()[idx] / bc2;
                net.weights[k].as_mut_slice()[idx] -= lr * mhat / (vhat.sqrt() + EPS);
            }
            for idx in 0..net.biases[k].len() {
                let g = grads.biases[k][idx];
                let m = &mut self.m.biases[k][idx];
                *m = B1 * *m + (1.0 - B1) * g;
                let v = &mut self.v.biases[k][idx];
                *v = B2 * *v + (1.0 - B2) * g * g;
                let mhat = self.m.biases[k][idx] / bc1;
                let vhat = self.v.biases[k][idx] / bc2;
                net.biases[k][idx] -= lr * mhat / (vhat.sqrt() + EPS);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{namespaced_rng, StreamKind};
    use approx::assert_abs_diff_eq;

    #[test]
    fn forward_matches_hand_computation() {
        let mut rng = namespaced_rng(1, StreamKind::Test, 0);
        let mut net = Mlp::new(&[2, 3, 1], &mut rng);
        net.weights[0] = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, -1.0]);
        net.biases[0] = DVector::from_vec(vec![0.0, -0.5, 0.0]);
        net.weights[1] = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        net.biases[1] = DVector::from_vec(vec![0.25]);
        // x = (1, 2): pre = (1, 1.5, -1) -> relu (1, 1.5, 0); out = 1 + 3 + 0 + 0.25.
        let y = net.forward(&[1.0, 2.0]);
        assert_abs_diff_eq!(y[0], 4.25, epsilon = 1e-15);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = namespaced_rng(2, StreamKind::Test, 0);
        let net = Mlp::new(&[3, 8, 8, 2], &mut rng);
        let x = [0.3, -0.7, 1.1];
        // Loss: 0.5 * ||y||^2 so grad_out = y.
        let loss = |n: &Mlp| {
            let y = n.forward(&x);
            0.5 * y.norm_squared()
        };
        let cache = net.forward_cached(&x);
        let mut grads = net.zero_grads();
        let y = cache.activations.last().unwrap().clone();
        net.backward(&cache, &y, &mut grads);
        let mut probe = namespaced_rng(3, StreamKind::Test, 0);
        for _ in 0..30 {
            let k = probe.gen_range(0..net.weights.len());
            let idx = probe.gen_range(0..net.weights[k].len());
            let h = 1e-6;
            let mut plus = net.clone();
            plus.weights[k].as_mut_slice()[idx] += h;
            let mut minus = net.clone();
            minus.weights[k].as_mut_slice()[idx] -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let an = grads.weights[k].as_slice()[idx];
            assert_abs_diff_eq!(an, fd, epsilon = 1e-6 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn pruning_hits_exact_count_and_sticks() {
        let mut rng = namespaced_rng(4, StreamKind::Test, 0);
        let mut net = Mlp::new(&[2, 16, 16, 3], &mut rng);
        let total = net.num_weights();
        let pruned = net.prune_to_sparsity(0.5);
        assert_eq!(pruned, total.div_ceil(2));
        assert_eq!(net.zero_weight_count(), pruned);
        // A few optimizer steps with nonzero gradients keep the mask zeros.
        let mut adam = AdamState::new(&net);
        for step in 0..5 {
            let cache = net.forward_cached(&[0.5, -0.5 + step as f64 * 0.1]);
            let mut grads = net.zero_grads();
            let y = cache.activations.last().unwrap().clone();
            net.backward(&cache, &y, &mut grads);
            adam.step(&mut net, &grads, 1e-2);
        }
        assert!(net.zero_weight_count() >= pruned);
        let mask = net.mask.as_ref().unwrap();
        for (k, w) in net.weights.iter().enumerate() {
            for idx in 0..w.len() {
                if mask[k].as_slice()[idx] == 0.0 {
                    assert_eq!(w.as_slice()[idx], 0.0);
                }
            }
        }
    }

    #[test]
    fn deterministic_initialization() {
        let mut a = namespaced_rng(9, StreamKind::Test, 0);
        let mut b = namespaced_rng(9, StreamKind::Test, 0);
        let n1 = Mlp::new(&[4, 32, 2], &mut a);
        let n2 = Mlp::new(&[4, 32, 2], &mut b);
        assert_eq!(n1.weights[0], n2.weights[0]);
        assert_eq!(n1.weights[1], n2.weights[1]);
    }
}
