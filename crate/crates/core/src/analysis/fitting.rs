//! Least-squares decay-exponent fits on log-log series.

use crate::error::{CoreError, Result};

use super::NormSeries;

/// Raw log-log least squares: slope and standard error of
/// `log(y) = slope log(x) + c` over positive pairs. Needs at least 2 points.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(CoreError::Norm(format!(
            "log-log fit needs >= 2 equal-length samples, got {} / {}",
            xs.len(),
            ys.len()
        )));
    }
    for (&x, &y) in xs.iter().zip(ys) {
        if x <= 0.0 || y <= 0.0 {
            return Err(CoreError::Norm(format!(
                "log-log fit needs positive samples, got ({x}, {y})"
            )));
        }
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mean_x = lx.iter().sum::<f64>() / n;
    let mean_y = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    if sxx == 0.0 {
        return Err(CoreError::Norm("degenerate fit: all abscissas equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let stderr = if lx.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, stderr))
}

/// Fits `log(value) = slope * log(t) + c` over samples with `t` in the
/// window; returns `(slope, stderr)`.
///
/// Requires at least 5 samples in the window, all with positive values.
pub fn fit_decay_exponent(series: &NormSeries, window: (f64, f64)) -> Result<(f64, f64)> {
    let (t_lo, t_hi) = window;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in series.times().iter().zip(series.values()) {
        if t >= t_lo && t <= t_hi {
            if v <= 0.0 {
                return Err(CoreError::Norm(format!(
                    "nonpositive value {v} at t = {t} inside the fit window"
                )));
            }
            if t <= 0.0 {
                return Err(CoreError::Norm("fit window must have t > 0".into()));
            }
            xs.push(t);
            ys.push(v);
        }
    }
    if xs.len() < 5 {
        return Err(CoreError::Norm(format!(
            "need at least 5 samples in [{t_lo}, {t_hi}], found {}",
            xs.len()
        )));
    }
    loglog_slope(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::NormKind;
    use approx::assert_relative_eq;

    fn series_from(f: impl Fn(f64) -> f64, times: &[f64]) -> NormSeries {
        NormSeries::new(
            times.to_vec(),
            times.iter().map(|&t| f(t)).collect(),
            NormKind::Linf,
        )
        .unwrap()
    }

    #[test]
    fn exact_power_law() {
        let times: Vec<f64> = (1..=20).map(|i| i as f64 * 0.5).collect();
        let s = series_from(|t| 3.0 * t.powf(-0.25), &times);
        let (slope, stderr) = fit_decay_exponent(&s, (0.0, 100.0)).unwrap();
        assert_relative_eq!(slope, -0.25, epsilon = 1e-12);
        assert!(stderr < 1e-12);
    }

    #[test]
    fn constant_series_has_zero_slope() {
        let times: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let s = series_from(|_| 2.0, &times);
        let (slope, _) = fit_decay_exponent(&s, (0.0, 100.0)).unwrap();
        assert!(slope.abs() < 1e-14);
    }

    #[test]
    fn window_restricts_the_samples() {
        let times: Vec<f64> = (1..=30).map(|i| i as f64 * 0.5).collect();
        // kink at t = 5: slope -1 before, 0 after
        let s = series_from(|t| if t < 5.0 { 1.0 / t } else { 0.2 }, &times);
        let (slope, _) = fit_decay_exponent(&s, (5.0, 15.0)).unwrap();
        assert!(slope.abs() < 1e-12);
    }

    #[test]
    fn rejects_sparse_or_nonpositive_windows() {
        let times: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let s = series_from(|t| 1.0 / t, &times);
        assert!(fit_decay_exponent(&s, (1.0, 3.0)).is_err()); // only 3 samples

        let z = NormSeries::new(vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![1.0, 1.0, 0.0, 1.0, 1.0], NormKind::Linf)
            .unwrap();
        assert!(fit_decay_exponent(&z, (0.5, 6.0)).is_err());
    }
}
