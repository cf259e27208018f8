//! Mini-batch training and symmetric prediction.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::bsf::net::{adadelta_step, AdadeltaState, BsfNet, LAYER_SIZES};
use crate::bsf::pairs::{swap_blocks, MetaSplits, PairExample, PairFeaturizer};
use crate::clustering::normalize_features;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded_rng, stream_rng};
use crate::types::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsfConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl BsfConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            epochs: 10,
            batch_size: 250,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsfModel {
    pub config: BsfConfig,
    pub net: BsfNet,
    pub optimizer: AdadeltaState,
    /// Mean NLL over the training pairs before training and after each
    /// epoch.
    pub trace: Vec<f64>,
}

fn as_batch(pairs: &[&PairExample]) -> (Vec<Vec<f64>>, Vec<usize>) {
    pairs.iter().map(|p| (p.features.clone(), p.label as usize)).unzip()
}

/// Trains a fresh network on `pairs`. Epoch `e` shuffles with its own
/// stream, so runs are reproducible from the seed alone.
pub fn train_on_pairs(pairs: &[PairExample], config: &BsfConfig) -> Result<BsfModel> {
    if pairs.is_empty() {
        return Err(Error::invalid("no training pairs"));
    }
    if config.batch_size == 0 {
        return Err(Error::invalid("batch_size must be positive"));
    }
    let mut net = BsfNet::init(&LAYER_SIZES, &mut seeded_rng(derive_seed(config.seed, 0)))?;
    let mut optimizer = AdadeltaState::new(net.params.len());
    let all: Vec<&PairExample> = pairs.iter().collect();
    let (xs, ys) = as_batch(&all);
    let mut trace = vec![net.mean_nll(&xs, &ys)?];
    let shuffle_seed = derive_seed(config.seed, 1);
    for epoch in 0..config.epochs {
        let mut order = all.clone();
        order.shuffle(&mut stream_rng(shuffle_seed, epoch as u64));
        for chunk in order.chunks(config.batch_size) {
            let (bx, by) = as_batch(chunk);
            adadelta_step(&mut net, &mut optimizer, &bx, &by)?;
        }
        trace.push(net.mean_nll(&xs, &ys)?);
    }
    Ok(BsfModel {
        config: *config,
        net,
        optimizer,
        trace,
    })
}

pub fn train_bsf(splits: &MetaSplits, config: &BsfConfig) -> Result<BsfModel> {
    train_on_pairs(&splits.meta_train, config)
}

/// Average same-class probability of a feature vector and its swapped twin;
/// predicts 1 iff it exceeds one half.
pub fn predict_features(net: &BsfNet, features: &[f64]) -> Result<(u8, f64)> {
    let forward = net.log_probs(features)?[1].exp();
    let backward = net.log_probs(&swap_blocks(features))?[1].exp();
    let p = 0.5 * (forward + backward);
    Ok(((p > 0.5) as u8, p))
}

/// Prediction for points `i` and `j` of a raw dataset (normalized here).
pub fn bsf_predict(net: &BsfNet, x: &Dataset, i: usize, j: usize) -> Result<(u8, f64)> {
    let normalized = normalize_features(x);
    let f = PairFeaturizer::new(&normalized)?.features(i, j)?;
    predict_features(net, &f)
}

/// Fraction of pairs whose symmetric prediction matches the label.
pub fn pair_accuracy(net: &BsfNet, pairs: &[PairExample]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut correct = 0usize;
    for p in pairs {
        correct += (predict_features(net, &p.features)?.0 == p.label) as usize;
    }
    Ok(correct as f64 / pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bsf::pairs::FEATURE_DIM;
    use rand::Rng;

    /// Linearly separable pairs: the label is the sign of a fixed direction.
    fn toy_pairs(count: usize, seed: u64) -> Vec<PairExample> {
        let mut rng = seeded_rng(seed);
        (0..count)
            .map(|k| {
                let features: Vec<f64> = (0..FEATURE_DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
                let score = features[0] + features[10] - 0.5 * features[30];
                PairExample {
                    features,
                    label: (score > 0.0) as u8,
                    problem: 0,
                    i: 2 * k,
                    j: 2 * k + 1,
                }
            })
            .collect()
    }

    #[test]
    fn zero_epochs_returns_initial_net() {
        let pairs = toy_pairs(20, 1);
        let cfg = BsfConfig {
            epochs: 0,
            ..BsfConfig::new(3)
        };
        let m = train_on_pairs(&pairs, &cfg).unwrap();
        let init = BsfNet::init(&LAYER_SIZES, &mut seeded_rng(derive_seed(3, 0))).unwrap();
        assert_eq!(m.net, init);
        assert_eq!(m.trace.len(), 1);
    }

    #[test]
    fn deterministic_training() {
        let pairs = toy_pairs(60, 2);
        let cfg = BsfConfig {
            epochs: 2,
            batch_size: 16,
            seed: 4,
        };
        assert_eq!(train_on_pairs(&pairs, &cfg).unwrap(), train_on_pairs(&pairs, &cfg).unwrap());
    }

    #[test]
    fn overfits_separable_toy_set() {
        let pairs = toy_pairs(500, 5);
        let cfg = BsfConfig {
            epochs: 200,
            batch_size: 50,
            seed: 6,
        };
        let m = train_on_pairs(&pairs, &cfg).unwrap();
        let mut correct = 0;
        for p in &pairs {
            let lp = m.net.log_probs(&p.features).unwrap();
            correct += ((lp[1] > lp[0]) as u8 == p.label) as usize;
        }
        assert!(correct as f64 / 500.0 >= 0.95, "train accuracy {}", correct as f64 / 500.0);
        assert!(m.trace.last().unwrap() < &m.trace[0]);
    }

    #[test]
    fn prediction_symmetry_and_boundary() {
        let net = BsfNet::zeros(&LAYER_SIZES).unwrap();
        let x = Dataset::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.5], vec![1.0, 1.0]]).unwrap();
        assert_eq!(bsf_predict(&net, &x, 0, 1).unwrap(), (0, 0.5));
        let trained = BsfNet::init(&LAYER_SIZES, &mut seeded_rng(8)).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert_eq!(bsf_predict(&trained, &x, i, j).unwrap(), bsf_predict(&trained, &x, j, i).unwrap());
        }
    }
}
