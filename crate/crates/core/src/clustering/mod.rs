//! The base clustering family: k-means, agglomerative (single, complete,
//! Ward), spectral, and threshold single linkage on graphs.

pub mod agglomerative;
pub mod graph;
pub mod kmeans;
pub mod normalize;
pub mod spectral;

use serde::{Deserialize, Serialize};

pub use agglomerative::{agglomerative, Linkage};
pub use graph::{euclidean_to_graph, single_linkage_threshold_cluster};
pub use kmeans::{kmeans, KMeansConfig, KMeansResult};
pub use normalize::normalize_features;
pub use spectral::{default_gamma, spectral};

use crate::error::Result;
use crate::types::{Clustering, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Kmeans,
    Spectral,
    SingleLinkage,
    CompleteLinkage,
    Ward,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Kmeans,
        Family::Spectral,
        Family::SingleLinkage,
        Family::CompleteLinkage,
        Family::Ward,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            Family::Kmeans => "kmeans",
            Family::Spectral => "spectral",
            Family::SingleLinkage => "single",
            Family::CompleteLinkage => "complete",
            Family::Ward => "ward",
        }
    }

    pub fn from_short_name(s: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.short_name() == s)
    }
}

/// One member of the algorithm family: which algorithm, whether features are
/// standardized first, and the number of clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub family: Family,
    pub normalize_first: bool,
    pub k: usize,
}

impl AlgorithmSpec {
    pub fn new(family: Family, normalize_first: bool, k: usize) -> Self {
        Self {
            family,
            normalize_first,
            k,
        }
    }

    /// The five algorithms, raw then normalized: ten specs at a fixed `k`.
    pub fn default_family(k: usize) -> Vec<AlgorithmSpec> {
        [false, true]
            .into_iter()
            .flat_map(|norm| Family::ALL.into_iter().map(move |f| AlgorithmSpec::new(f, norm, k)))
            .collect()
    }

    pub fn with_k(self, k: usize) -> Self {
        Self { k, ..self }
    }

    pub fn label(&self) -> String {
        if self.normalize_first {
            format!("{}-N", self.family.short_name())
        } else {
            self.family.short_name().to_string()
        }
    }

    /// Runs the algorithm; the clustering is over `x`'s points in `x`'s order.
    pub fn run(&self, x: &Dataset, seed: u64) -> Result<Clustering> {
        let normalized;
        let input = if self.normalize_first {
            normalized = normalize_features(x);
            &normalized
        } else {
            x
        };
        match self.family {
            Family::Kmeans => Ok(kmeans(input, &KMeansConfig::new(self.k, seed))?.clustering),
            Family::Spectral => spectral(input, self.k, default_gamma(input), seed),
            Family::SingleLinkage => agglomerative(input, Linkage::Single, self.k),
            Family::CompleteLinkage => agglomerative(input, Linkage::Complete, self.k),
            Family::Ward => agglomerative(input, Linkage::Ward, self.k),
        }
    }
}
