//! Shared domain types: datasets, clusterings, weighted graphs and labeled
//! problem repositories.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `n × d` matrix of finite reals, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<f64>,
    n: usize,
    d: usize,
    pub name: String,
    point_ids: Vec<usize>,
}

impl Dataset {
    pub fn new(points: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        Self::with_ids(points, n, d, (0..n).collect())
    }

    pub fn with_ids(points: Vec<f64>, n: usize, d: usize, point_ids: Vec<usize>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidDataset(format!("need n >= 1 and d >= 1, got {n}x{d}")));
        }
        if points.len() != n * d {
            return Err(Error::InvalidDataset(format!(
                "{} values for a {n}x{d} matrix",
                points.len()
            )));
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        if point_ids.len() != n {
            return Err(Error::LengthMismatch {
                left: point_ids.len(),
                right: n,
            });
        }
        if point_ids.iter().collect::<HashSet<_>>().len() != n {
            return Err(Error::InvalidDataset("duplicate point ids".into()));
        }
        Ok(Self {
            points,
            n,
            d,
            name: String::new(),
            point_ids,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::InvalidDataset(format!("row {bad} has a different width")));
        }
        Self::new(rows.concat(), n, d)
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }

    pub fn point_ids(&self) -> &[usize] {
        &self.point_ids
    }

    /// Keeps the rows at `indices` (in that order), carrying their ids.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut points = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            points.extend_from_slice(self.row(i));
        }
        let ids = indices.iter().map(|&i| self.point_ids[i]).collect();
        Ok(Self::with_ids(points, indices.len(), self.d, ids)?.named(self.name.clone()))
    }

    /// Same rows with every value transformed; ids and name are kept.
    pub fn map_values(&self, f: impl Fn(usize, f64) -> f64) -> Result<Self> {
        let d = self.d;
        let points = self
            .points
            .iter()
            .enumerate()
            .map(|(idx, &v)| f(idx % d, v))
            .collect();
        Ok(Self::with_ids(points, self.n, d, self.point_ids.clone())?.named(self.name.clone()))
    }

    pub fn squared_distance(&self, i: usize, j: usize) -> f64 {
        squared_euclidean(self.row(i), self.row(j))
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.squared_distance(i, j).sqrt()
    }

    /// Full `n × n` Euclidean distance matrix, row-major.
    pub fn distance_matrix(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let dist = self.distance(i, j);
                out[i * n + j] = dist;
                out[j * n + i] = dist;
            }
        }
        out
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.d];
        for row in self.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= self.n as f64;
        }
        mean
    }

    /// Population (divide-by-n) covariance matrix, `d × d` row-major.
    pub fn covariance(&self) -> Vec<f64> {
        let d = self.d;
        let mean = self.mean();
        let mut cov = vec![0.0; d * d];
        for row in self.rows() {
            for a in 0..d {
                let da = row[a] - mean[a];
                for b in a..d {
                    cov[a * d + b] += da * (row[b] - mean[b]);
                }
            }
        }
        for a in 0..d {
            for b in a..d {
                let v = cov[a * d + b] / self.n as f64;
                cov[a * d + b] = v;
                cov[b * d + a] = v;
            }
        }
        cov
    }
}

pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A vector of class labels, one per point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labeling {
    pub labels: Vec<i64>,
}

impl Labeling {
    pub fn new(labels: Vec<i64>) -> Self {
        Self { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// One cluster per distinct label, ids dense in order of first appearance.
pub fn labels_to_clustering(y: &Labeling) -> Result<Clustering> {
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut ids: HashMap<i64, usize> = HashMap::new();
    let assignment = y
        .labels
        .iter()
        .map(|&l| {
            let next = ids.len();
            *ids.entry(l).or_insert(next)
        })
        .collect();
    Clustering::new(assignment, (0..y.len()).collect())
}

/// Relabels so that cluster ids appear densely in order of first appearance.
pub fn canonicalize(assignment: &[usize]) -> Vec<usize> {
    let mut map: HashMap<usize, usize> = HashMap::new();
    assignment
        .iter()
        .map(|&c| {
            let next = map.len();
            *map.entry(c).or_insert(next)
        })
        .collect()
}

/// A partition of a point set, stored as a canonical assignment vector.
///
/// Cluster ids are always dense (`0..k`) and ordered by first appearance, so
/// two clusterings of the same ordered point set are equal as partitions iff
/// their assignment vectors are equal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ClusteringRepr", into = "ClusteringRepr")]
pub struct Clustering {
    assignment: Vec<usize>,
    point_ids: Vec<usize>,
    k: usize,
}

#[derive(Serialize, Deserialize)]
struct ClusteringRepr {
    assignment: Vec<usize>,
    point_ids: Vec<usize>,
}

impl TryFrom<ClusteringRepr> for Clustering {
    type Error = Error;

    fn try_from(r: ClusteringRepr) -> Result<Self> {
        Clustering::new(r.assignment, r.point_ids)
    }
}

impl From<Clustering> for ClusteringRepr {
    fn from(c: Clustering) -> Self {
        ClusteringRepr {
            assignment: c.assignment,
            point_ids: c.point_ids,
        }
    }
}

impl Clustering {
    pub fn new(assignment: Vec<usize>, point_ids: Vec<usize>) -> Result<Self> {
        if assignment.is_empty() {
            return Err(Error::EmptyInput);
        }
        if assignment.len() != point_ids.len() {
            return Err(Error::LengthMismatch {
                left: assignment.len(),
                right: point_ids.len(),
            });
        }
        if point_ids.iter().collect::<HashSet<_>>().len() != point_ids.len() {
            return Err(Error::InvalidClustering("duplicate point ids".into()));
        }
        let assignment = canonicalize(&assignment);
        let k = assignment.iter().max().map_or(0, |m| m + 1);
        Ok(Self {
            assignment,
            point_ids,
            k,
        })
    }

    /// Clustering over the implicit point ids `0..n`.
    pub fn from_assignment(assignment: Vec<usize>) -> Result<Self> {
        let n = assignment.len();
        Self::new(assignment, (0..n).collect())
    }

    pub fn from_clusters(clusters: &[Vec<usize>], point_ids: Vec<usize>) -> Result<Self> {
        let pos: HashMap<usize, usize> = point_ids.iter().enumerate().map(|(p, &id)| (id, p)).collect();
        let mut assignment = vec![usize::MAX; point_ids.len()];
        for (c, members) in clusters.iter().enumerate() {
            for id in members {
                let p = *pos
                    .get(id)
                    .ok_or_else(|| Error::InvalidClustering(format!("unknown point id {id}")))?;
                if assignment[p] != usize::MAX {
                    return Err(Error::InvalidClustering(format!("point {id} in two clusters")));
                }
                assignment[p] = c;
            }
        }
        if assignment.contains(&usize::MAX) {
            return Err(Error::InvalidClustering("clusters do not cover all points".into()));
        }
        Self::new(assignment, point_ids)
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn point_ids(&self) -> &[usize] {
        &self.point_ids
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// Member positions (not ids) of each cluster.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (p, &c) in self.assignment.iter().enumerate() {
            out[c].push(p);
        }
        out
    }

    pub fn same_point_set(&self, other: &Clustering) -> bool {
        if self.point_ids.len() != other.point_ids.len() {
            return false;
        }
        if self.point_ids == other.point_ids {
            return true;
        }
        let mine: HashSet<_> = self.point_ids.iter().collect();
        other.point_ids.iter().all(|id| mine.contains(id))
    }

    /// This clustering re-expressed in the point order of `ids`.
    pub fn reordered(&self, ids: &[usize]) -> Result<Clustering> {
        if ids == self.point_ids.as_slice() {
            return Ok(self.clone());
        }
        let pos: HashMap<usize, usize> =
            self.point_ids.iter().enumerate().map(|(p, &id)| (id, p)).collect();
        if ids.len() != self.point_ids.len() {
            return Err(Error::MismatchedPointSets);
        }
        let assignment = ids
            .iter()
            .map(|id| pos.get(id).map(|&p| self.assignment[p]))
            .collect::<Option<Vec<_>>>()
            .ok_or(Error::MismatchedPointSets)?;
        Clustering::new(assignment, ids.to_vec())
    }
}

/// An undirected edge between local vertex indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Undirected graph with nonnegative edge weights, vertices `0..n` locally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph {
    vertex_ids: Vec<usize>,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        Self::with_ids((0..n).collect(), edges)
    }

    pub fn with_ids(vertex_ids: Vec<usize>, edges: Vec<Edge>) -> Result<Self> {
        let n = vertex_ids.len();
        if vertex_ids.iter().collect::<HashSet<_>>().len() != n {
            return Err(Error::InvalidGraph("duplicate vertex ids".into()));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.u >= n || e.v >= n {
                return Err(Error::InvalidGraph(format!("edge ({}, {}) out of range", e.u, e.v)));
            }
            if e.u == e.v {
                return Err(Error::InvalidGraph(format!("self-loop at {}", e.u)));
            }
            if !e.w.is_finite() || e.w < 0.0 {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) has weight {}",
                    e.u, e.v, e.w
                )));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", e.u, e.v)));
            }
        }
        Ok(Self { vertex_ids, edges })
    }

    /// Complete graph from a full distance matrix. The matrix must be a valid
    /// distance function: symmetric, zero diagonal, positive off the diagonal.
    pub fn from_distance_matrix(dist: &[Vec<f64>]) -> Result<Self> {
        let n = dist.len();
        if dist.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidDistance("matrix is not square".into()));
        }
        let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            if dist[i][i] != 0.0 {
                return Err(Error::InvalidDistance(format!("d({i},{i}) != 0")));
            }
            for j in (i + 1)..n {
                if dist[i][j] != dist[j][i] {
                    return Err(Error::InvalidDistance(format!("d({i},{j}) != d({j},{i})")));
                }
                if !(dist[i][j] > 0.0) || !dist[i][j].is_finite() {
                    return Err(Error::InvalidDistance(format!(
                        "d({i},{j}) = {} for distinct points",
                        dist[i][j]
                    )));
                }
                edges.push(Edge {
                    u: i,
                    v: j,
                    w: dist[i][j],
                });
            }
        }
        Self::new(n, edges)
    }

    pub fn n(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn vertex_ids(&self) -> &[usize] {
        &self.vertex_ids
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Every weight multiplied by `alpha > 0`.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::invalid(format!("scale must be positive, got {alpha}")));
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { w: e.w * alpha, ..*e })
            .collect();
        Self::with_ids(self.vertex_ids.clone(), edges)
    }

    /// Weight lookup keyed by the unordered local pair.
    pub fn weight_map(&self) -> HashMap<(usize, usize), f64> {
        self.edges
            .iter()
            .map(|e| ((e.u.min(e.v), e.u.max(e.v)), e.w))
            .collect()
    }
}

/// The observable part of a problem: points in ℝ^d or a weighted graph.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemData {
    Euclidean(Dataset),
    Graph(WeightedGraph),
}

impl ProblemData {
    pub fn point_ids(&self) -> &[usize] {
        match self {
            ProblemData::Euclidean(x) => x.point_ids(),
            ProblemData::Graph(g) => g.vertex_ids(),
        }
    }

    pub fn n(&self) -> usize {
        self.point_ids().len()
    }

    pub fn as_dataset(&self) -> Option<&Dataset> {
        match self {
            ProblemData::Euclidean(x) => Some(x),
            ProblemData::Graph(_) => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub name: String,
    pub source: String,
    pub domain: String,
}

/// A dataset (or graph) together with its ground-truth clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledProblem {
    pub data: ProblemData,
    pub truth: Clustering,
    pub provenance: Provenance,
}

impl LabeledProblem {
    /// The truth is reordered to the data's point order; its point set must
    /// equal the data's.
    pub fn new(data: ProblemData, truth: Clustering) -> Result<Self> {
        let truth = truth.reordered(data.point_ids())?;
        Ok(Self {
            data,
            truth,
            provenance: Provenance::default(),
        })
    }

    pub fn euclidean(x: Dataset, labels: &Labeling) -> Result<Self> {
        if labels.len() != x.n() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: x.n(),
            });
        }
        let truth = labels_to_clustering(labels)?;
        let truth = Clustering::new(truth.assignment().to_vec(), x.point_ids().to_vec())?;
        let name = x.name.clone();
        let mut p = Self::new(ProblemData::Euclidean(x), truth)?;
        p.provenance.name = name;
        Ok(p)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn name(&self) -> &str {
        &self.provenance.name
    }

    pub fn dataset(&self) -> Result<&Dataset> {
        self.data
            .as_dataset()
            .ok_or_else(|| Error::invalid(format!("problem '{}' is not Euclidean", self.name())))
    }
}

/// Ordered collection of labeled problems.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetaRepository {
    pub problems: Vec<LabeledProblem>,
}

impl MetaRepository {
    pub fn new(problems: Vec<LabeledProblem>) -> Self {
        Self { problems }
    }

    pub fn len(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn require_non_empty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::EmptyInput)
        } else {
            Ok(())
        }
    }

    pub fn subset(&self, indices: &[usize]) -> MetaRepository {
        MetaRepository::new(indices.iter().map(|&i| self.problems[i].clone()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assign(labels: &[i64]) -> Vec<usize> {
        labels_to_clustering(&Labeling::new(labels.to_vec()))
            .unwrap()
            .assignment()
            .to_vec()
    }

    #[test]
    fn labels_map_to_first_appearance_ids() {
        assert_eq!(assign(&[1, 1, 2]), vec![0, 0, 1]);
        assert_eq!(assign(&[7]), vec![0]);
        assert_eq!(assign(&[3, 1, 3, 1]), vec![0, 1, 0, 1]);
    }

    #[test]
    fn empty_labeling_is_rejected() {
        assert!(matches!(
            labels_to_clustering(&Labeling::new(vec![])),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn dataset_rejects_non_finite() {
        assert!(Dataset::new(vec![0.0, f64::NAN], 1, 2).is_err());
        assert!(Dataset::new(vec![], 0, 2).is_err());
    }

    #[test]
    fn reorder_follows_ids() {
        let c = Clustering::new(vec![0, 1, 1], vec![10, 20, 30]).unwrap();
        let r = c.reordered(&[30, 10, 20]).unwrap();
        assert_eq!(r.assignment(), &[0, 1, 0]);
        assert!(c.reordered(&[10, 20, 40]).is_err());
    }

    #[test]
    fn graph_validation() {
        let e = |u, v, w| Edge { u, v, w };
        assert!(WeightedGraph::new(2, vec![e(0, 0, 1.0)]).is_err());
        assert!(WeightedGraph::new(2, vec![e(0, 1, -1.0)]).is_err());
        assert!(WeightedGraph::new(2, vec![e(0, 1, 1.0), e(1, 0, 2.0)]).is_err());
        assert!(WeightedGraph::new(2, vec![e(0, 1, 1.0)]).is_ok());
    }

    #[test]
    fn distance_matrix_checks() {
        assert!(WeightedGraph::from_distance_matrix(&[vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(WeightedGraph::from_distance_matrix(&[vec![0.0, 0.0], vec![0.0, 0.0]]).is_err());
        let g = WeightedGraph::from_distance_matrix(&[vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        assert_eq!(g.edges().len(), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn clusters_match_label_equality(labels in prop::collection::vec(0i64..5, 1..30)) {
                let c = labels_to_clustering(&Labeling::new(labels.clone())).unwrap();
                let distinct: HashSet<_> = labels.iter().collect();
                prop_assert_eq!(c.k(), distinct.len());
                let a = c.assignment();
                for i in 0..labels.len() {
                    for j in 0..labels.len() {
                        prop_assert_eq!(a[i] == a[j], labels[i] == labels[j]);
                    }
                }
            }
        }
    }
}
