//! Normalized spectral clustering: RBF affinity, symmetric normalized
//! Laplacian, bottom-`k` eigenvectors by cyclic Jacobi, row-normalized
//! embedding, then k-means on the rows.

use crate::clustering::kmeans::{kmeans, KMeansConfig};
use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;
use crate::types::{Clustering, Dataset};

/// The RBF width used when none is given: `1 / d`.
pub fn default_gamma(x: &Dataset) -> f64 {
    1.0 / x.d() as f64
}

pub fn spectral(x: &Dataset, k: usize, gamma: f64, seed: u64) -> Result<Clustering> {
    let n = x.n();
    if k < 2 || k > n {
        return Err(Error::invalid(format!("spectral needs 2 <= k <= n, got k = {k}, n = {n}")));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    let mut affinity = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let a = (-gamma * x.squared_distance(i, j)).exp();
            affinity[i * n + j] = a;
            affinity[j * n + i] = a;
        }
    }
    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|i| {
            let deg: f64 = affinity[i * n..(i + 1) * n].iter().sum();
            if deg > 0.0 {
                1.0 / deg.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    // L_sym = I − D^{-1/2} A D^{-1/2}
    let mut laplacian = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let off = affinity[i * n + j] * inv_sqrt_deg[i] * inv_sqrt_deg[j];
            laplacian[i * n + j] = if i == j { 1.0 - off } else { -off };
        }
    }
    let eigen = jacobi_eigen(&laplacian, n)?;

    let mut embedding = vec![0.0; n * k];
    for i in 0..n {
        let row = &mut embedding[i * k..(i + 1) * k];
        for (c, slot) in row.iter_mut().enumerate() {
            *slot = eigen.vectors[i * n + c];
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
    let rows = Dataset::with_ids(embedding, n, k, x.point_ids().to_vec())?;
    Ok(kmeans(&rows, &KMeansConfig::new(k, seed))?.clustering)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::adjusted_rand_index;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn recovers_two_blobs() {
        let mut rng = crate::rng::seeded_rng(21);
        let mut rows = Vec::new();
        let mut planted = Vec::new();
        for (label, cx) in [(0usize, 0.0), (1, 20.0)] {
            for _ in 0..20 {
                let dx: f64 = rng.sample(StandardNormal);
                let dy: f64 = rng.sample(StandardNormal);
                rows.push(vec![cx + 0.5 * dx, 0.5 * dy]);
                planted.push(label);
            }
        }
        let x = Dataset::from_rows(&rows).unwrap();
        let got = spectral(&x, 2, default_gamma(&x), 5).unwrap();
        let truth = Clustering::from_assignment(planted).unwrap();
        assert_eq!(adjusted_rand_index(&truth, &got).unwrap(), 1.0);
    }

    #[test]
    fn k_range_and_duplicates() {
        let x = Dataset::from_rows(&[vec![0.0], vec![0.0], vec![5.0], vec![5.0]]).unwrap();
        assert!(spectral(&x, 1, 1.0, 0).is_err());
        assert!(spectral(&x, 5, 1.0, 0).is_err());
        let c = spectral(&x, 2, 1.0, 0).unwrap();
        assert_eq!(c.assignment(), &[0, 0, 1, 1]);
        let x = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        assert_eq!(spectral(&x, 3, 1.0, 0).unwrap().k(), 3);
    }
}
