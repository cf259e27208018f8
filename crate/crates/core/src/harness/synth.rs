//! Synthetic meta-distribution: repositories of labeled clustering problems
//! with planted structure.
//!
//! Blob problems place `k` isotropic Gaussian clusters with Gaussian centers
//! redrawn until every pairwise center distance is at least
//! `separation · spread`. Chain problems lay out `k` parallel noisy line
//! segments in a random plane; they are easy for single linkage and hard for
//! centroid methods. Planted outliers are appended after
//! the inliers, so in a problem of `n` points with `m` outliers they occupy
//! indices `n − m .. n`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, MetaRng};
use crate::types::{squared_euclidean, Dataset, LabeledProblem, Labeling, MetaRepository, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Blobs,
    Chains,
    /// Each problem is blobs or chains with equal probability.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub problems: usize,
    /// `k` is drawn uniformly from this list.
    pub k_choices: Vec<usize>,
    /// Inclusive.
    pub d_range: (usize, usize),
    /// Inclusive. Only values `lo + j · n_step` are drawn.
    pub n_range: (usize, usize),
    pub n_step: usize,
    /// Minimum center distance, in units of `spread`.
    pub separation: f64,
    /// Per-coordinate standard deviation of blob points.
    pub spread: f64,
    /// Blob centers are Gaussian with this standard deviation, in units of
    /// `separation · spread`, redrawn until pairwise distances reach
    /// `separation · spread`.
    pub center_scale: f64,

    /// `⌊fraction · n⌋` of the `n` points are planted outliers.
    pub outlier_fraction: f64,
    pub shape: Shape,
    pub chain_length: f64,
    pub chain_gap: f64,
    pub chain_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            problems: 60,
            k_choices: vec![2, 3, 4, 5],
            d_range: (2, 10),
            n_range: (60, 300),
            n_step: 1,
            separation: 6.0,
            spread: 1.0,
            center_scale: 1.0,
            outlier_fraction: 0.0,
            shape: Shape::Blobs,
            chain_length: 40.0,
            chain_gap: 2.0,
            chain_noise: 0.1,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k_choices.is_empty() || self.k_choices.contains(&0) {
            return Err(Error::invalid("k_choices must be non-empty and positive"));
        }
        if self.d_range.0 < 1 || self.d_range.0 > self.d_range.1 {
            return Err(Error::invalid("d_range must be a non-empty range of positive sizes"));
        }
        if self.n_range.0 > self.n_range.1 || self.n_step == 0 {
            return Err(Error::invalid("n_range must be non-empty and n_step positive"));
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(positive(self.separation) && positive(self.spread) && positive(self.center_scale)) {
            return Err(Error::invalid("separation, spread and center_scale must be positive"));
        }
        if !(0.0..0.5).contains(&self.outlier_fraction) {
            return Err(Error::invalid("outlier_fraction must lie in [0, 0.5)"));
        }
        if self.shape != Shape::Blobs && !(self.chain_length > 0.0 && self.chain_gap > 0.0 && self.chain_noise >= 0.0) {
            return Err(Error::invalid("chain parameters must be positive"));
        }
        let max_k = *self.k_choices.iter().max().expect("non-empty");
        let min_inliers = self.n_range.0 - outlier_total(self.outlier_fraction, self.n_range.0);
        if min_inliers < 2 * max_k {
            return Err(Error::invalid(format!(
                "n_range starts at {} which leaves fewer than two inliers per cluster for k = {max_k}",
                self.n_range.0
            )));
        }
        Ok(())
    }

    /// Minimum distance of a planted outlier from the global mean.
    pub fn outlier_radius(&self) -> f64 {
        5.0 * self.separation * self.spread
    }
}

fn outlier_total(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 + 1e-9).floor() as usize
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<MetaRepository> {
    spec.validate()?;
    let problems = (0..spec.problems)
        .map(|i| generate_problem(spec, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(MetaRepository::new(problems))
}

fn gaussian(rng: &mut MetaRng) -> f64 {
    rng.sample(StandardNormal)
}

fn unit_vector(d: usize, rng: &mut MetaRng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn generate_problem(spec: &SyntheticSpec, index: usize) -> Result<LabeledProblem> {
    let mut rng = stream_rng(spec.seed, index as u64);
    let k = spec.k_choices[rng.random_range(0..spec.k_choices.len())];
    let d = rng.random_range(spec.d_range.0..=spec.d_range.1);
    let steps = (spec.n_range.1 - spec.n_range.0) / spec.n_step;
    let n = spec.n_range.0 + spec.n_step * rng.random_range(0..=steps);
    let m = outlier_total(spec.outlier_fraction, n);
    let chains = match spec.shape {
        Shape::Blobs => false,
        Shape::Chains => true,
        Shape::Mixed => rng.random_bool(0.5),
    };

    let inliers = n - m;
    let sizes: Vec<usize> = (0..k).map(|c| inliers / k + usize::from(c < inliers % k)).collect();
    let (mut rows, mut labels) = if chains {
        chain_points(spec, k, d, &sizes, &mut rng)
    } else {
        blob_points(spec, k, d, &sizes, &mut rng)
    };
    plant_outliers(spec, m, k, &mut rows, &mut labels, &mut rng);

    let name = format!("synth-{index:03}");
    let domain = if chains { "synthetic-chains" } else { "synthetic-blobs" };
    let x = Dataset::from_rows(&rows)?.named(name.clone());
    Ok(LabeledProblem::euclidean(x, &Labeling::new(labels))?.with_provenance(Provenance {
        name,
        source: format!("synthetic seed {} problem {index}", spec.seed),
        domain: domain.into(),
    }))
}

type Points = (Vec<Vec<f64>>, Vec<i64>);

fn blob_points(spec: &SyntheticSpec, k: usize, d: usize, sizes: &[usize], rng: &mut MetaRng) -> Points {
    let min_dist = spec.separation * spec.spread;
    let mut scale = spec.center_scale * min_dist;
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    while centers.len() < k {
        let mut placed = false;
        for _ in 0..1000 {
            let c: Vec<f64> = (0..d).map(|_| scale * gaussian(rng)).collect();
            if centers.iter().all(|o| squared_euclidean(o, &c) >= min_dist * min_dist) {
                centers.push(c);
                placed = true;
                break;
            }
        }
        if !placed {
            scale *= 1.2;
        }
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, &size) in sizes.iter().enumerate() {
        for _ in 0..size {
            rows.push(centers[c].iter().map(|m| m + spec.spread * gaussian(rng)).collect());
            labels.push(c as i64);
        }
    }
    (rows, labels)
}

fn chain_points(spec: &SyntheticSpec, k: usize, d: usize, sizes: &[usize], rng: &mut MetaRng) -> Points {
    // Orthonormal u (along the chains) and v (across them), via Gram–Schmidt.
    let u = unit_vector(d, rng);
    let v = if d == 1 {
        vec![0.0]
    } else {
        loop {
            let w = unit_vector(d, rng);
            let dot: f64 = w.iter().zip(&u).map(|(a, b)| a * b).sum();
            let p: Vec<f64> = w.iter().zip(&u).map(|(a, b)| a - dot * b).collect();
            let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                break p.into_iter().map(|x| x / norm).collect();
            }
        }
    };
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, &size) in sizes.iter().enumerate() {
        let offset = (c as f64 - (k - 1) as f64 / 2.0) * spec.chain_gap;
        let step = spec.chain_length / size as f64;
        for s in 0..size {
            let t = -spec.chain_length / 2.0 + step * (s as f64 + 0.5 + rng.random_range(-0.1..0.1));
            let row: Vec<f64> = (0..d)
                .map(|j| t * u[j] + offset * v[j] + spec.chain_noise * gaussian(rng))
                .collect();
            rows.push(row);
            labels.push(c as i64);
        }
    }
    (rows, labels)
}

fn mean_of(rows: &[Vec<f64>]) -> Vec<f64> {
    let d = rows[0].len();
    let mut m = vec![0.0; d];
    for r in rows {
        for (a, b) in m.iter_mut().zip(r) {
            *a += b;
        }
    }
    m.iter().map(|v| v / rows.len() as f64).collect()
}

/// Appends `m` points far from the inliers, each labeled with the cluster
/// whose inlier mean is nearest. The radius grows until every outlier is
/// farther from the final global mean than every inlier.
fn plant_outliers(
    spec: &SyntheticSpec,
    m: usize,
    k: usize,
    rows: &mut Vec<Vec<f64>>,
    labels: &mut Vec<i64>,
    rng: &mut MetaRng,
) {
    if m == 0 {
        return;
    }
    let inliers = rows.len();
    let d = rows[0].len();
    let mu = mean_of(rows);
    let centroids: Vec<Vec<f64>> = (0..k as i64)
        .map(|c| {
            let members: Vec<Vec<f64>> = rows.iter().zip(labels.iter()).filter(|(_, &l)| l == c).map(|(r, _)| r.clone()).collect();
            mean_of(&members)
        })
        .collect();
    let spread_out = rows.iter().map(|r| squared_euclidean(r, &mu)).fold(0.0, f64::max).sqrt();
    let dirs: Vec<(Vec<f64>, f64)> = (0..m).map(|_| (unit_vector(d, rng), rng.random_range(1.0..1.5))).collect();
    let mut radius = spec.outlier_radius().max(2.0 * spread_out);
    loop {
        rows.truncate(inliers);
        for (dir, scale) in &dirs {
            rows.push(mu.iter().zip(dir).map(|(a, b)| a + radius * scale * b).collect());
        }
        let global = mean_of(rows);
        let far_inlier = rows[..inliers].iter().map(|r| squared_euclidean(r, &global)).fold(0.0, f64::max);
        let near_outlier = rows[inliers..].iter().map(|r| squared_euclidean(r, &global)).fold(f64::INFINITY, f64::min);
        if near_outlier > far_inlier && near_outlier >= spec.outlier_radius().powi(2) {
            break;
        }
        radius *= 2.0;
    }
    labels.truncate(inliers);
    for r in &rows[inliers..] {
        let nearest = (0..k)
            .min_by(|&a, &b| squared_euclidean(r, &centroids[a]).total_cmp(&squared_euclidean(r, &centroids[b])))
            .expect("k >= 1");
        labels.push(nearest as i64);
    }
}
