use crate::types::Dataset;

/// Per-column zero mean and unit population variance. Constant columns
/// become all zeros.
pub fn normalize_features(x: &Dataset) -> Dataset {
    let mean = x.mean();
    let mut var = vec![0.0; x.d()];
    for row in x.rows() {
        for (c, v) in row.iter().enumerate() {
            var[c] += (v - mean[c]) * (v - mean[c]);
        }
    }
    let std: Vec<f64> = var.iter().map(|v| (v / x.n() as f64).sqrt()).collect();
    x.map_values(|c, v| if std[c] > 0.0 { (v - mean[c]) / std[c] } else { 0.0 })
        .expect("normalization keeps values finite")
}
