//! Central finite-difference gradient oracle.
//!
//! Used by tests to validate every backward rule against a forward-only
//! reference. The closure must be a pure function of the perturbed slice.

/// Central-difference gradient of `f` at `x`, one component at a time.
pub fn central_diff(x: &[f32], h: f32, mut f: impl FnMut(&[f32]) -> f64) -> Vec<f64> {
    let mut buf = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = buf[i];
        buf[i] = orig + h;
        let fp = f(&buf);
        buf[i] = orig - h;
        let fm = f(&buf);
        buf[i] = orig;
        out.push((fp - fm) / (2.0 * h as f64));
    }
    out
}

/// Largest relative error between analytic and numeric gradients.
///
/// The denominator is floored so finite-difference noise on near-zero
/// components does not dominate the comparison.
pub fn max_rel_err(analytic: &[f32], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| {
            let denom = (a.abs() as f64).max(n.abs()).max(1e-3);
            (a as f64 - n).abs() / denom
        })
        .fold(0.0, f64::max)
}
