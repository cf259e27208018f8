//! Clustering quality measures: Rand index, the pair-disagreement loss,
//! adjusted Rand index, silhouette and the RMSE used to compare chosen `k`s.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::types::{Clustering, Dataset};

/// Counts `n_ij` of points in cluster `i` of one clustering and cluster `j`
/// of the other.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub counts: HashMap<(usize, usize), u64>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub total: u64,
}

impl ContingencyTable {
    pub fn new(y: &Clustering, z: &Clustering) -> Result<Self> {
        let z = aligned(y, z)?;
        let mut counts = HashMap::new();
        let mut row_sums = vec![0; y.k()];
        let mut col_sums = vec![0; z.k()];
        for (&a, &b) in y.assignment().iter().zip(z.assignment()) {
            *counts.entry((a, b)).or_insert(0) += 1;
            row_sums[a] += 1;
            col_sums[b] += 1;
        }
        Ok(Self {
            counts,
            row_sums,
            col_sums,
            total: y.len() as u64,
        })
    }

    fn sum_pairs_cells(&self) -> u64 {
        self.counts.values().map(|&c| choose2(c)).sum()
    }

    fn sum_pairs_rows(&self) -> u64 {
        self.row_sums.iter().map(|&c| choose2(c)).sum()
    }

    fn sum_pairs_cols(&self) -> u64 {
        self.col_sums.iter().map(|&c| choose2(c)).sum()
    }

    /// Unordered pairs on which the two clusterings agree.
    pub fn agreeing_pairs(&self) -> u64 {
        // together in both + apart in both
        let together = self.sum_pairs_cells();
        let apart = choose2(self.total) + together - self.sum_pairs_rows() - self.sum_pairs_cols();
        together + apart
    }
}

pub fn choose2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

fn aligned(y: &Clustering, z: &Clustering) -> Result<Clustering> {
    if !y.same_point_set(z) {
        return Err(Error::MismatchedPointSets);
    }
    z.reordered(y.point_ids())
}

/// Loss from an agreeing-pair count; shared by every code path that reports
/// a Rand-based loss so that results compare exactly.
pub fn loss_from_agreement(agreeing: u64, pairs: u64) -> f64 {
    if pairs == 0 {
        return 0.0;
    }
    1.0 - agreeing as f64 / pairs as f64
}

/// Fraction of point pairs on which the two clusterings agree.
pub fn rand_index(y: &Clustering, z: &Clustering) -> Result<f64> {
    if !y.same_point_set(z) {
        return Err(Error::MismatchedPointSets);
    }
    if y.len() < 2 {
        return Err(Error::UndefinedDenominator);
    }
    let table = ContingencyTable::new(y, z)?;
    // Ordered-pair counts are exactly twice the unordered ones.
    Ok(table.agreeing_pairs() as f64 / choose2(table.total) as f64)
}

/// `1 − RI` on matching point sets, `1` otherwise. A single shared point has
/// no pairs and loss 0.
pub fn clustering_loss(y: &Clustering, z: &Clustering) -> f64 {
    if !y.same_point_set(z) {
        return 1.0;
    }
    match ContingencyTable::new(y, z) {
        Ok(table) => loss_from_agreement(table.agreeing_pairs(), choose2(table.total)),
        Err(_) => 1.0,
    }
}

/// Hubert–Arabie adjusted Rand index.
///
/// When the expected and maximum index coincide (both clusterings
/// all-singletons, or both a single cluster) the value is 1 for identical
/// partitions and 0 otherwise.
pub fn adjusted_rand_index(y: &Clustering, z: &Clustering) -> Result<f64> {
    if !y.same_point_set(z) {
        return Err(Error::MismatchedPointSets);
    }
    if y.len() < 2 {
        return Err(Error::UndefinedDenominator);
    }
    let table = ContingencyTable::new(y, z)?;
    let index = table.sum_pairs_cells() as f64;
    let rows = table.sum_pairs_rows() as f64;
    let cols = table.sum_pairs_cols() as f64;
    let expected = rows * cols / choose2(table.total) as f64;
    let max = 0.5 * (rows + cols);
    if max == expected {
        let z = z.reordered(y.point_ids())?;
        return Ok(if y.assignment() == z.assignment() { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

/// Mean silhouette with Euclidean distances.
pub fn silhouette(x: &Dataset, c: &Clustering) -> Result<f64> {
    let c = c.reordered(x.point_ids())?;
    let dist = x.distance_matrix();
    silhouette_from_distances(&dist, x.n(), &c)
}

/// Silhouette from a precomputed `n × n` distance matrix whose rows follow
/// the clustering's point order.
pub fn silhouette_from_distances(dist: &[f64], n: usize, c: &Clustering) -> Result<f64> {
    if c.len() != n || dist.len() != n * n {
        return Err(Error::LengthMismatch {
            left: c.len(),
            right: n,
        });
    }
    if n < 2 {
        return Err(Error::UndefinedDenominator);
    }
    if c.k() < 2 {
        return Err(Error::SingleCluster);
    }
    let k = c.k();
    let sizes = c.cluster_sizes();
    let assignment = c.assignment();
    let mut sums = vec![0.0; k];
    let mut total = 0.0;
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        let row = &dist[i * n..(i + 1) * n];
        for (j, &dij) in row.iter().enumerate() {
            sums[assignment[j]] += dij;
        }
        let own = assignment[i];
        if sizes[own] == 1 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&cl| cl != own)
            .map(|cl| sums[cl] / sizes[cl] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Root-mean-square difference between two integer vectors.
pub fn rmse_k(k_hat: &[usize], k_star: &[usize]) -> Result<f64> {
    if k_hat.len() != k_star.len() {
        return Err(Error::LengthMismatch {
            left: k_hat.len(),
            right: k_star.len(),
        });
    }
    if k_hat.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sq: f64 = k_hat
        .iter()
        .zip(k_star)
        .map(|(&a, &b)| {
            let diff = a as f64 - b as f64;
            diff * diff
        })
        .sum();
    Ok((sq / k_hat.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{labels_to_clustering, Labeling};

    fn cl(labels: &[i64]) -> Clustering {
        labels_to_clustering(&Labeling::new(labels.to_vec())).unwrap()
    }

    /// Ordered-pair enumeration straight from the definition.
    fn rand_index_oracle(y: &[i64], z: &[i64]) -> f64 {
        let n = y.len();
        let mut agree = 0;
        for a in 0..n {
            for b in 0..n {
                if a != b && ((y[a] == y[b]) == (z[a] == z[b])) {
                    agree += 1;
                }
            }
        }
        agree as f64 / (n * (n - 1)) as f64
    }

    #[test]
    fn rand_index_examples() {
        assert_eq!(rand_index(&cl(&[0, 1, 0, 2]), &cl(&[0, 1, 0, 2])).unwrap(), 1.0);
        let ri = rand_index(&cl(&[0, 0, 1]), &cl(&[0, 1, 2])).unwrap();
        assert!((ri - rand_index_oracle(&[0, 0, 1], &[0, 1, 2])).abs() < 1e-15);
        assert!((ri - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(rand_index(&cl(&[0, 1, 2, 3]), &cl(&[0, 0, 0, 0])).unwrap(), 0.0);
    }

    #[test]
    fn rand_index_errors() {
        assert!(matches!(
            rand_index(&cl(&[0]), &cl(&[0])),
            Err(Error::UndefinedDenominator)
        ));
        let other = Clustering::new(vec![0, 0], vec![5, 6]).unwrap();
        assert!(matches!(
            rand_index(&cl(&[0, 1]), &other),
            Err(Error::MismatchedPointSets)
        ));
    }

    #[test]
    fn loss_examples() {
        assert_eq!(clustering_loss(&cl(&[0, 0, 1]), &cl(&[0, 0, 1])), 0.0);
        let l = clustering_loss(&cl(&[0, 0, 1]), &cl(&[0, 1, 2]));
        assert!((l - 1.0 / 3.0).abs() < 1e-15);
        let other = Clustering::new(vec![0, 0, 1], vec![0, 1, 7]).unwrap();
        assert_eq!(clustering_loss(&cl(&[0, 0, 1]), &other), 1.0);
    }

    #[test]
    fn ari_examples() {
        assert_eq!(adjusted_rand_index(&cl(&[0, 0, 1, 1]), &cl(&[0, 0, 1, 1])).unwrap(), 1.0);
        // Index=1, Expected=1, Max=2.5
        let a = adjusted_rand_index(&cl(&[1, 1, 2, 2]), &cl(&[1, 1, 1, 2])).unwrap();
        assert!(a.abs() < 1e-15);
        // Index=1, Expected=1/3, Max=1.5
        let a = adjusted_rand_index(&cl(&[1, 1, 2, 2]), &cl(&[1, 1, 2, 3])).unwrap();
        assert!((a - 4.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn ari_degenerate_marginals() {
        let singletons = cl(&[0, 1, 2]);
        let one = cl(&[0, 0, 0]);
        assert_eq!(adjusted_rand_index(&singletons, &singletons).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&one, &one).unwrap(), 1.0);
        // Max = 1.5, Expected = 0: not degenerate.
        assert_eq!(adjusted_rand_index(&singletons, &one).unwrap(), 0.0);
    }

    #[test]
    fn silhouette_examples() {
        let x = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![10.0], vec![11.0]]).unwrap();
        // Outer points: a=1, b=10.5; inner points: a=1, b=9.5.
        let s = silhouette(&x, &cl(&[0, 0, 1, 1])).unwrap();
        assert!((s - (19.0 / 21.0 + 17.0 / 19.0) / 2.0).abs() < 1e-12);
        assert!((s - 359.0 / 399.0).abs() < 1e-12);

        let x = Dataset::from_rows(&[vec![0.0], vec![0.0], vec![50.0]]).unwrap();
        let s = silhouette(&x, &cl(&[0, 0, 1])).unwrap();
        assert!((s - 2.0 / 3.0).abs() < 1e-12);

        let x = Dataset::from_rows(&[vec![0.0], vec![3.0], vec![7.0]]).unwrap();
        assert_eq!(silhouette(&x, &cl(&[0, 1, 2])).unwrap(), 0.0);
        assert!(matches!(
            silhouette(&x, &cl(&[0, 0, 0])),
            Err(Error::SingleCluster)
        ));
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse_k(&[2, 3], &[2, 3]).unwrap(), 0.0);
        assert!((rmse_k(&[2, 4], &[3, 4]).unwrap() - 0.5_f64.sqrt()).abs() < 1e-15);
        assert_eq!(rmse_k(&[2], &[5]).unwrap(), 3.0);
        assert!(rmse_k(&[2], &[5, 1]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn labels(n: usize) -> impl Strategy<Value = Vec<i64>> {
            prop::collection::vec(0i64..4, n)
        }

        proptest! {
            #[test]
            fn rand_index_symmetric_and_bounded(
                (y, z) in (2usize..20).prop_flat_map(|n| (labels(n), labels(n)))
            ) {
                let (a, b) = (cl(&y), cl(&z));
                let ri = rand_index(&a, &b).unwrap();
                prop_assert_eq!(ri, rand_index(&b, &a).unwrap());
                prop_assert!((0.0..=1.0).contains(&ri));
                prop_assert!((ri - rand_index_oracle(&y, &z)).abs() < 1e-12);
                prop_assert!((clustering_loss(&a, &b) + ri - 1.0).abs() < 1e-15);
                let ari = adjusted_rand_index(&a, &b).unwrap();
                prop_assert!(ari <= 1.0 + 1e-12);
                prop_assert!((ari - adjusted_rand_index(&b, &a).unwrap()).abs() < 1e-12);
            }

            #[test]
            fn silhouette_bounded_and_invariant(
                pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 4..25),
                shift in (-100.0f64..100.0, -100.0f64..100.0),
                seed in 0u64..1000,
            ) {
                let n = pts.len();
                let rows: Vec<Vec<f64>> = pts.iter().map(|&(a, b)| vec![a, b]).collect();
                let assignment: Vec<usize> = (0..n).map(|i| (i * 7 + seed as usize) % 3).collect();
                let c = Clustering::from_assignment(assignment.clone()).unwrap();
                prop_assume!(c.k() >= 2);
                let x = Dataset::from_rows(&rows).unwrap();
                let s = silhouette(&x, &c).unwrap();
                prop_assert!((-1.0..=1.0).contains(&s));

                let moved: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0] + shift.0, r[1] + shift.1]).collect();
                let s2 = silhouette(&Dataset::from_rows(&moved).unwrap(), &c).unwrap();
                prop_assert!((s - s2).abs() < 1e-9);

                let perm: Vec<usize> = (0..n).rev().collect();
                let rows_p: Vec<Vec<f64>> = perm.iter().map(|&i| rows[i].clone()).collect();
                let c_p = Clustering::from_assignment(perm.iter().map(|&i| assignment[i]).collect()).unwrap();
                let s3 = silhouette(&Dataset::from_rows(&rows_p).unwrap(), &c_p).unwrap();
                prop_assert!((s - s3).abs() < 1e-9);
            }
        }
    }
}
