use crate::error::{Error, Result};

/// Euclidean projection onto `{x : x >= 0, sum x = 1}` by sorting and
/// thresholding.
pub fn project_simplex(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::Dimension("cannot project an empty vector".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Invalid("projection input must be finite".into()));
    }
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    // One rescale removes the rounding left by the threshold.
    let total: f64 = out.iter().sum();
    if total > 0.0 && total != 1.0 {
        out.iter_mut().for_each(|x| *x /= total);
    }
    Ok(out)
}
