use ndarray::{Array1, Array2};

/// Run `iterations` power-iteration steps, updating the left singular
/// vector estimate `u` in place. Returns the estimated largest singular
/// value `u^T W v`.
pub fn power_iteration(weight: &Array2<f64>, u: &mut Array1<f64>, iterations: usize) -> f64 {
    let mut sigma = 0.0;
    for _ in 0..iterations.max(1) {
        let wtu = weight.t().dot(u);
        let norm_v = wtu.dot(&wtu).sqrt();
        if norm_v == 0.0 {
            return 0.0;
        }
        let v = wtu / norm_v;
        let wv = weight.dot(&v);
        let norm_u = wv.dot(&wv).sqrt();
        if norm_u == 0.0 {
            return 0.0;
        }
        *u = &wv / norm_u;
        sigma = u.dot(&wv);
    }
    sigma
}

/// Rescale `weight` so that its estimated spectral norm does not exceed
/// `bound`. Returns the estimate before rescaling.
pub fn spectral_normalize(weight: &mut Array2<f64>, u: &mut Array1<f64>, bound: f64, iterations: usize) -> f64 {
    let sigma = power_iteration(weight, u, iterations);
    if sigma > bound {
        weight.mapv_inplace(|w| w * bound / sigma);
    }
    sigma
}
