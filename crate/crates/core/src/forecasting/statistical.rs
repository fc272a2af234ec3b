use super::ModelSpec;
use crate::error::{Error, Result};
use crate::series::exp_smooth;

pub fn forecast_statistical(spec: &ModelSpec, history: &[f64], h: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    let min = spec.min_history();
    if history.len() < min {
        return Err(Error::InsufficientData(format!(
            "{} needs at least {min} observations, got {}",
            spec.label(),
            history.len()
        )));
    }
    match spec {
        ModelSpec::NaiveSeasonal { k } => Ok(naive_seasonal(history, *k, h)),
        ModelSpec::ExponentialSmoothing { alpha } => ses_forecast(history, *alpha, h),
        ModelSpec::Theta => Ok(theta_forecast(history, h)),
        other => Err(Error::config(format!("{} is not a statistical model", other.label()))),
    }
}

/// Repeats the last `k` observations: `ŷ_{T+i} = y_{T-k+1+((i-1) mod k)}`.
pub fn naive_seasonal(history: &[f64], k: usize, h: usize) -> Vec<f64> {
    let n = history.len();
    (0..h).map(|i| history[n - k + i % k]).collect()
}

/// Flat forecast at the final smoothed level.
pub fn ses_forecast(history: &[f64], alpha: f64, h: usize) -> Result<Vec<f64>> {
    let level = *exp_smooth(history, alpha)?
        .last()
        .ok_or_else(|| Error::InsufficientData("empty history".into()))?;
    Ok(vec![level; h])
}

/// Classic Theta: the mean of the extrapolated θ=0 line (the least-squares
/// trend) and the SES forecast of the θ=2 line `2y - trend`. The SES
/// parameter minimizes the one-step-ahead SSE over the grid 0.01..=0.99.
pub fn theta_forecast(history: &[f64], h: usize) -> Vec<f64> {
    let n = history.len();
    let (b0, b1) = linear_trend(history);
    let trend = |t: f64| b0 + b1 * t;
    let theta2: Vec<f64> = history.iter().enumerate().map(|(t, y)| 2.0 * y - trend(t as f64)).collect();

    let mut best = (f64::INFINITY, 0.5, 0.0);
    for step in 1..=99 {
        let alpha = step as f64 / 100.0;
        let mut level = theta2[0];
        let mut sse = 0.0;
        for &z in &theta2[1..] {
            sse += (z - level).powi(2);
            level = alpha * z + (1.0 - alpha) * level;
        }
        if sse < best.0 {
            best = (sse, alpha, level);
        }
    }
    let ses_level = best.2;
    (0..h).map(|i| 0.5 * (trend((n + i) as f64) + ses_level)).collect()
}

/// Least-squares intercept and slope over `t = 0..n`.
fn linear_trend(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let t_mean = (n - 1.0) / 2.0;
    let y_mean = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, v) in y.iter().enumerate() {
        let dt = t as f64 - t_mean;
        sxy += dt * (v - y_mean);
        sxx += dt * dt;
    }
    let b1 = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (y_mean - b1 * t_mean, b1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_repeats_last_value() {
        let spec = ModelSpec::NaiveSeasonal { k: 1 };
        assert_eq!(forecast_statistical(&spec, &[1.0, 4.0, 7.0], 3).unwrap(), vec![7.0; 3]);
    }

    #[test]
    fn naive_repeats_last_season() {
        let hist: Vec<f64> = (0..36).map(|t| (t % 12) as f64).collect();
        assert_eq!(naive_seasonal(&hist, 12, 14), (0..14).map(|t| (t % 12) as f64).collect::<Vec<_>>());
    }

    #[test]
    fn history_minimum_named() {
        let err = forecast_statistical(&ModelSpec::NaiveSeasonal { k: 12 }, &[1.0; 5], 3).unwrap_err();
        assert!(err.to_string().contains("12"), "{err}");
    }

    #[test]
    fn ses_level() {
        assert_eq!(ses_forecast(&[10.0, 20.0], 0.1, 2).unwrap(), vec![11.0, 11.0]);
    }

    #[test]
    fn theta_constant_is_constant() {
        let f = theta_forecast(&[3.0; 24], 6);
        assert!(f.iter().all(|v| (v - 3.0).abs() < 1e-12));
    }

    // The SES half of the combination is flat, so a line continues at half slope.
    #[test]
    fn theta_on_a_line_moves_at_half_slope() {
        let line: Vec<f64> = (0..48).map(|t| 3.0 * t as f64 + 1.0).collect();
        let f = theta_forecast(&line, 12);
        for w in f.windows(2) {
            assert!((w[1] - w[0] - 1.5).abs() < 1e-9);
        }
    }
}
