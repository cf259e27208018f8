//! Least-squares linear regression with an optional ridge penalty on the
//! weights (the intercept is never penalized).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub ridge_lambda: f64,
}

impl LinearModel {
    pub fn constant(value: f64) -> Self {
        Self {
            weights: Vec::new(),
            intercept: value,
            ridge_lambda: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: self.weights.len(),
            });
        }
        Ok(self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
    }
}

/// Minimizes `Σ (w·x + b − y)² + λ‖w‖²` through the centered normal
/// equations.
pub fn fit_linear(features: &[Vec<f64>], targets: &[f64], ridge_lambda: f64) -> Result<LinearModel> {
    if features.is_empty() {
        return Err(Error::EmptyInput);
    }
    if features.len() != targets.len() {
        return Err(Error::LengthMismatch {
            left: features.len(),
            right: targets.len(),
        });
    }
    if !(ridge_lambda >= 0.0) {
        return Err(Error::invalid(format!("ridge_lambda must be >= 0, got {ridge_lambda}")));
    }
    let dim = features[0].len();
    if let Some(bad) = features.iter().position(|f| f.len() != dim) {
        return Err(Error::LengthMismatch {
            left: features[bad].len(),
            right: dim,
        });
    }
    if features.iter().flatten().chain(targets).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite regression input"));
    }

    let m = features.len() as f64;
    let mut x_mean = vec![0.0; dim];
    for f in features {
        for (acc, v) in x_mean.iter_mut().zip(f) {
            *acc += v;
        }
    }
    x_mean.iter_mut().for_each(|v| *v /= m);
    let y_mean = targets.iter().sum::<f64>() / m;
    if dim == 0 {
        return Ok(LinearModel {
            weights: Vec::new(),
            intercept: y_mean,
            ridge_lambda,
        });
    }

    let mut gram = vec![0.0; dim * dim];
    let mut rhs = vec![0.0; dim];
    for (f, &y) in features.iter().zip(targets) {
        let centered: Vec<f64> = f.iter().zip(&x_mean).map(|(v, mu)| v - mu).collect();
        let yc = y - y_mean;
        for a in 0..dim {
            rhs[a] += centered[a] * yc;
            for b in a..dim {
                gram[a * dim + b] += centered[a] * centered[b];
            }
        }
    }
    for a in 0..dim {
        for b in 0..a {
            gram[a * dim + b] = gram[b * dim + a];
        }
        gram[a * dim + a] += ridge_lambda;
    }
    let weights = solve(&gram, &rhs, dim)?;
    let intercept = y_mean - weights.iter().zip(&x_mean).map(|(w, mu)| w * mu).sum::<f64>();
    Ok(LinearModel {
        weights,
        intercept,
        ridge_lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn interpolates_two_points() {
        let m = fit_linear(&[vec![0.0], vec![1.0]], &[0.0, 1.0], 0.0).unwrap();
        assert!((m.weights[0] - 1.0).abs() < 1e-12 && m.intercept.abs() < 1e-12);
    }

    #[test]
    fn constant_targets() {
        let m = fit_linear(&[vec![0.0], vec![1.0], vec![3.0]], &[2.5, 2.5, 2.5], 0.0).unwrap();
        assert!(m.weights[0].abs() < 1e-12 && (m.intercept - 2.5).abs() < 1e-12);
    }

    #[test]
    fn singular_without_ridge() {
        let f = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        assert!(matches!(fit_linear(&f, &[1.0, 2.0, 3.0], 0.0), Err(Error::SingularSystem)));
        let m = fit_linear(&f, &[1.0, 2.0, 3.0], 1e-3).unwrap();
        assert!((m.predict(&[2.0, 4.0]).unwrap() - 2.0).abs() < 1e-3);
        assert!(m.predict(&[1.0]).is_err());
    }

    #[test]
    fn residuals_orthogonal_to_features() {
        let mut rng = crate::rng::seeded_rng(50);
        let features: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..4).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let targets: Vec<f64> = features
            .iter()
            .map(|f| 0.5 * f[0] - 2.0 * f[2] + 1.0 + rng.random_range(-0.5..0.5))
            .collect();
        let m = fit_linear(&features, &targets, 0.0).unwrap();
        let residuals: Vec<f64> = features
            .iter()
            .zip(&targets)
            .map(|(f, y)| y - m.predict(f).unwrap())
            .collect();
        let scale: f64 = targets.iter().map(|y| y * y).sum::<f64>().sqrt();
        assert!(residuals.iter().sum::<f64>().abs() / scale < 1e-8);
        for c in 0..4 {
            let dot: f64 = features.iter().zip(&residuals).map(|(f, r)| f[c] * r).sum();
            let norm: f64 = features.iter().map(|f| f[c] * f[c]).sum::<f64>().sqrt();
            assert!(dot.abs() / (norm * scale) < 1e-8);
        }
    }
}
