//! Maps a raw estimate back onto the probability simplex `Δ_k`.

/// Euclidean projection onto `{w : w ≥ 0, Σw = 1}` by sorting and
/// thresholding.
pub fn project_onto_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Clips negatives to zero and rescales to sum one; all-zero input maps to
/// the uniform distribution.
pub fn normalize_clipped(v: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total > 0.0 && total.is_finite() {
        clipped.into_iter().map(|x| x / total).collect()
    } else {
        vec![1.0 / v.len() as f64; v.len()]
    }
}
