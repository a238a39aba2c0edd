//! Ordinary least squares for a single regressor.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Residual sum of squares.
    pub rss: f64,
}

/// Fits `y ≈ intercept + slope·x`. Returns NaNs for fewer than two points
/// or constant `x`.
pub fn least_squares(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len(), "x and y must have equal length");
    let n = x.len() as f64;
    let nan = LinearFit { slope: f64::NAN, intercept: f64::NAN, rss: f64::NAN };
    if x.len() < 2 {
        return nan;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return nan;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    LinearFit { slope, intercept, rss }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let f = least_squares(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!(f.rss < 1e-20);
    }

    #[test]
    fn noisy_line_residual() {
        let f = least_squares(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0]);
        assert!(f.slope.abs() < 1e-12);
        assert!((f.rss - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(least_squares(&[1.0], &[1.0]).slope.is_nan());
        assert!(least_squares(&[2.0, 2.0], &[1.0, 3.0]).slope.is_nan());
    }
}
