//! A small fully connected network: rectifier hidden layers, log-softmax
//! output, mean negative log-likelihood loss, trained with Adadelta.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::MetaRng;

pub const LAYER_SIZES: [usize; 6] = [75, 100, 50, 25, 12, 2];

/// Parameters are one flat vector; layer `l` stores its `out × in` weight
/// matrix row-major followed by its `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsfNet {
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

impl BsfNet {
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::invalid(format!("invalid layer sizes {sizes:?}")));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; param_count(sizes)],
        })
    }

    /// Weights uniform in `±sqrt(6 / (fan_in + fan_out))`, biases zero.
    pub fn init(sizes: &[usize], rng: &mut MetaRng) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        for l in 0..net.layers() {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let (w, _) = net.layer_offsets(l);
            for p in &mut net.params[w..w + fan_in * fan_out] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Ok(net)
    }

    pub fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two layers")
    }

    /// Offsets of layer `l`'s weights and biases in `params`.
    pub fn layer_offsets(&self, l: usize) -> (usize, usize) {
        let start: usize = self.sizes[..=l].windows(2).map(|w| w[1] * w[0] + w[1]).sum();
        (start, start + self.sizes[l] * self.sizes[l + 1])
    }

    /// Which layer a flat parameter index belongs to.
    pub fn layer_of(&self, index: usize) -> usize {
        (0..self.layers())
            .find(|&l| {
                let (w, _) = self.layer_offsets(l);
                index < w + self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1]
            })
            .unwrap_or(self.layers() - 1)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: self.input_dim(),
            });
        }
        Ok(())
    }

    /// Pre-activations of every layer for one example.
    fn pre_activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.layers());
        let mut input = x.to_vec();
        for l in 0..self.layers() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w, b) = self.layer_offsets(l);
            let z: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &self.params[w + o * n_in..w + (o + 1) * n_in];
                    self.params[b + o] + row.iter().zip(&input).map(|(a, v)| a * v).sum::<f64>()
                })
                .collect();
            input = if l + 1 < self.layers() { z.iter().map(|v| v.max(0.0)).collect() } else { Vec::new() };
            out.push(z);
        }
        out
    }

    /// Log-probabilities for one example.
    pub fn log_probs(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let pre = self.pre_activations(x);
        Ok(log_softmax(pre.last().expect("at least one layer")))
    }

    pub fn forward(&self, batch: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        batch.iter().map(|x| self.log_probs(x)).collect()
    }

    /// Smallest absolute hidden pre-activation over the batch; a measure of
    /// distance from the rectifier kinks.
    pub fn min_hidden_margin(&self, batch: &[Vec<f64>]) -> Result<f64> {
        let mut margin = f64::INFINITY;
        for x in batch {
            self.check_input(x)?;
            let pre = self.pre_activations(x);
            for z in &pre[..pre.len() - 1] {
                margin = z.iter().fold(margin, |m, v| m.min(v.abs()));
            }
        }
        Ok(margin)
    }

    /// Mean NLL of the batch and its gradient with respect to `params`.
    pub fn loss_and_gradient(&self, batch: &[Vec<f64>], labels: &[usize]) -> Result<(f64, Vec<f64>)> {
        check_batch(self, batch, labels)?;
        let scale = 1.0 / batch.len() as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        for (x, &y) in batch.iter().zip(labels) {
            let pre = self.pre_activations(x);
            let logp = log_softmax(pre.last().expect("at least one layer"));
            loss -= logp[y];
            let mut delta: Vec<f64> = logp.iter().map(|lp| lp.exp() * scale).collect();
            delta[y] -= scale;
            for l in (0..self.layers()).rev() {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                let (w, b) = self.layer_offsets(l);
                let input: Vec<f64> = if l == 0 { x.clone() } else { pre[l - 1].iter().map(|v| v.max(0.0)).collect() };
                for o in 0..n_out {
                    grad[b + o] += delta[o];
                    let row = &mut grad[w + o * n_in..w + (o + 1) * n_in];
                    for (g, v) in row.iter_mut().zip(&input) {
                        *g += delta[o] * v;
                    }
                }
                if l > 0 {
                    let mut prev = vec![0.0; n_in];
                    for o in 0..n_out {
                        let row = &self.params[w + o * n_in..w + (o + 1) * n_in];
                        for (p, wt) in prev.iter_mut().zip(row) {
                            *p += wt * delta[o];
                        }
                    }
                    for (p, z) in prev.iter_mut().zip(&pre[l - 1]) {
                        if *z <= 0.0 {
                            *p = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }
        Ok((loss * scale, grad))
    }

    pub fn mean_nll(&self, batch: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
        check_batch(self, batch, labels)?;
        let mut total = 0.0;
        for (x, &y) in batch.iter().zip(labels) {
            total -= self.log_probs(x)?[y];
        }
        Ok(total / batch.len() as f64)
    }
}

fn check_batch(net: &BsfNet, batch: &[Vec<f64>], labels: &[usize]) -> Result<()> {
    if batch.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: batch.len(),
            right: labels.len(),
        });
    }
    if batch.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(&y) = labels.iter().find(|&&y| y >= net.output_dim()) {
        return Err(Error::invalid(format!("label {y} out of range")));
    }
    batch.iter().try_for_each(|x| net.check_input(x))
}

pub fn log_softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdadeltaState {
    pub rho: f64,
    pub epsilon: f64,
    /// Running mean of squared gradients.
    pub eg2: Vec<f64>,
    /// Running mean of squared updates.
    pub edx2: Vec<f64>,
}

impl AdadeltaState {
    pub const RHO: f64 = 0.9;
    pub const EPSILON: f64 = 1e-6;

    pub fn new(len: usize) -> Self {
        Self {
            rho: Self::RHO,
            epsilon: Self::EPSILON,
            eg2: vec![0.0; len],
            edx2: vec![0.0; len],
        }
    }

    /// Applies one update to `params` in place.
    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != grad.len() || params.len() != self.eg2.len() {
            return Err(Error::LengthMismatch {
                left: grad.len(),
                right: self.eg2.len(),
            });
        }
        let (rho, eps) = (self.rho, self.epsilon);
        for i in 0..params.len() {
            let g = grad[i];
            self.eg2[i] = rho * self.eg2[i] + (1.0 - rho) * g * g;
            let dx = -((self.edx2[i] + eps).sqrt() / (self.eg2[i] + eps).sqrt()) * g;
            params[i] += dx;
            self.edx2[i] = rho * self.edx2[i] + (1.0 - rho) * dx * dx;
        }
        Ok(())
    }
}

/// One Adadelta step on a batch; returns the batch's mean NLL before the
/// update.
pub fn adadelta_step(
    net: &mut BsfNet,
    state: &mut AdadeltaState,
    batch: &[Vec<f64>],
    labels: &[usize],
) -> Result<f64> {
    let (loss, grad) = net.loss_and_gradient(batch, labels)?;
    if let Some(bad) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient { block: format!("layer {} (parameter {bad})", net.layer_of(bad)) });
    }
    state.update(&mut net.params, &grad)?;
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    fn random_batch(rng: &mut MetaRng, len: usize, dim: usize) -> Vec<Vec<f64>> {
        (0..len).map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
    }

    #[test]
    fn parameter_layout() {
        let net = BsfNet::zeros(&LAYER_SIZES).unwrap();
        assert_eq!(net.params.len(), 75 * 100 + 100 + 100 * 50 + 50 + 50 * 25 + 25 + 25 * 12 + 12 + 12 * 2 + 2);
        assert_eq!(net.layer_offsets(0), (0, 7500));
        assert_eq!(net.layer_offsets(1), (7600, 12600));
        assert_eq!(net.layer_of(7599), 0);
        assert_eq!(net.layer_of(7600), 1);
        assert_eq!(net.layer_of(net.params.len() - 1), 4);
    }

    #[test]
    fn zero_net_is_uniform() {
        let net = BsfNet::zeros(&LAYER_SIZES).unwrap();
        let lp = net.log_probs(&[0.3; 75]).unwrap();
        assert!(lp.iter().all(|v| (v - 0.5f64.ln()).abs() < 1e-15));
        assert!(net.log_probs(&[0.0; 74]).is_err());
    }

    #[test]
    fn outputs_normalized_and_batch_independent() {
        let mut rng = seeded_rng(1);
        let net = BsfNet::init(&LAYER_SIZES, &mut rng).unwrap();
        let batch = random_batch(&mut rng, 8, 75);
        let full = net.forward(&batch).unwrap();
        for lp in &full {
            assert!((lp.iter().map(|v| v.exp()).sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let mut halves = net.forward(&batch[..4]).unwrap();
        halves.extend(net.forward(&batch[4..]).unwrap());
        assert_eq!(full, halves);
    }

    #[test]
    fn first_adadelta_step() {
        let mut state = AdadeltaState::new(1);
        let mut p = [0.0];
        state.update(&mut p, &[1.0]).unwrap();
        let expected = -(1e-6f64).sqrt() / (0.1f64 + 1e-6).sqrt();
        assert!((p[0] - expected).abs() < 1e-15);
        assert!((p[0] + 3.1623e-3).abs() < 1e-7);
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut state = AdadeltaState::new(2);
        state.eg2 = vec![1.0, 2.0];
        state.edx2 = vec![0.5, 0.5];
        let mut p = [1.0, -1.0];
        state.update(&mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, [1.0, -1.0]);
        assert_eq!(state.eg2, vec![0.9, 1.8]);
        assert_eq!(state.edx2, vec![0.45, 0.45]);
    }

    /// Central differences on a sample of parameters.
    fn gradient_error(net: &BsfNet, batch: &[Vec<f64>], labels: &[usize], rng: &mut MetaRng) -> f64 {
        let (_, grad) = net.loss_and_gradient(batch, labels).unwrap();
        let h = 1e-5;
        let (mut diff, mut a_norm, mut n_norm) = (0.0, 0.0, 0.0);
        let mut probe = net.clone();
        for _ in 0..150 {
            let i = rng.random_range(0..net.params.len());
            let orig = probe.params[i];
            probe.params[i] = orig + h;
            let up = probe.mean_nll(batch, labels).unwrap();
            probe.params[i] = orig - h;
            let down = probe.mean_nll(batch, labels).unwrap();
            probe.params[i] = orig;
            let fd = (up - down) / (2.0 * h);
            diff += (fd - grad[i]).powi(2);
            a_norm += grad[i].powi(2);
            n_norm += fd.powi(2);
        }
        diff.sqrt() / a_norm.sqrt().max(n_norm.sqrt()).max(1e-300)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = seeded_rng(9);
        let mut checked = 0;
        while checked < 5 {
            let mut net = BsfNet::init(&LAYER_SIZES, &mut rng).unwrap();
            for p in net.params.iter_mut() {
                *p += rng.random_range(-0.05..0.05);
            }
            let batch = random_batch(&mut rng, 3, 75);
            if net.min_hidden_margin(&batch).unwrap() < 1e-3 {
                continue;
            }
            let labels: Vec<usize> = (0..3).map(|_| rng.random_range(0..2)).collect();
            let err = gradient_error(&net, &batch, &labels, &mut rng);
            assert!(err < 1e-4, "relative error {err}");
            checked += 1;
        }
    }

    #[test]
    fn non_finite_gradient_reports_layer() {
        let mut net = BsfNet::zeros(&[2, 2]).unwrap();
        let mut state = AdadeltaState::new(net.params.len());
        let r = adadelta_step(&mut net, &mut state, &[vec![f64::NAN, 0.0]], &[0]);
        assert!(matches!(r, Err(Error::NonFiniteGradient { block }) if block.starts_with("layer 0")));
    }
}
