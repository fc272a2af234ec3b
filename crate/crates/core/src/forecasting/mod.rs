//! Forecasting models and expanding-window SMAPE backtests.

mod backtest;
mod regression;
mod statistical;
mod tree;

pub use backtest::{
    cluster_randomized_groups, error_histogram, expanding_window_cv, fold_windows, median, read_external_corpus,
    run_regime, write_histogram_csv, write_median_table, BacktestConfig, BacktestReport, BacktestSeries,
    FoldForecast, FoldRecord, HistogramRow, Regime, RegimeContext, ReportEntry, RunSummary, TuningChoice,
    TuningConfig,
};
pub use regression::{
    forecast_regression, lag_samples, train_regression, FittedModel, LinearModel, Samples,
};
pub use statistical::{forecast_statistical, naive_seasonal, ses_forecast, theta_forecast};
pub use tree::{BoostedTrees, Forest, RegressionTree};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric mean absolute percentage error in `[0, 200]`. Terms where both
/// actual and forecast are zero contribute nothing (but still count in `n`).
pub fn smape(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    if actual.len() != forecast.len() {
        return Err(Error::LengthMismatch { left: actual.len(), right: forecast.len() });
    }
    if actual.is_empty() {
        return Err(Error::InsufficientData("smape of empty series".into()));
    }
    let sum: f64 = actual
        .iter()
        .zip(forecast)
        .map(|(a, f)| {
            let denom = (a.abs() + f.abs()) / 2.0;
            if denom == 0.0 {
                0.0
            } else {
                (f - a).abs() / denom
            }
        })
        .sum();
    Ok(100.0 * sum / actual.len() as f64)
}

pub const DEFAULT_LAGS: usize = 12;

/// A forecasting model family with its hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ModelSpec {
    NaiveSeasonal {
        k: usize,
    },
    ExponentialSmoothing {
        alpha: f64,
    },
    Theta,
    LinearRegression {
        #[serde(default = "default_lags")]
        lags: usize,
    },
    GradientBoostedTrees {
        #[serde(default = "default_lags")]
        lags: usize,
        #[serde(default = "default_boost_trees")]
        n_trees: usize,
        #[serde(default = "default_boost_depth")]
        max_depth: usize,
        #[serde(default = "default_learning_rate")]
        learning_rate: f64,
    },
    RandomForest {
        #[serde(default = "default_lags")]
        lags: usize,
        #[serde(default = "default_forest_trees")]
        n_trees: usize,
        #[serde(default = "default_forest_depth")]
        max_depth: usize,
        /// Share of lag features considered at each split.
        #[serde(default = "default_feature_fraction")]
        feature_fraction: f64,
        #[serde(default = "default_true")]
        bootstrap: bool,
        #[serde(default)]
        seed: u64,
    },
}

fn default_lags() -> usize {
    DEFAULT_LAGS
}
fn default_boost_trees() -> usize {
    50
}
fn default_boost_depth() -> usize {
    3
}
fn default_learning_rate() -> f64 {
    0.1
}
fn default_forest_trees() -> usize {
    30
}
fn default_forest_depth() -> usize {
    6
}
fn default_feature_fraction() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}

impl ModelSpec {
    pub fn linear() -> Self {
        ModelSpec::LinearRegression { lags: DEFAULT_LAGS }
    }

    pub fn boosted() -> Self {
        ModelSpec::GradientBoostedTrees {
            lags: DEFAULT_LAGS,
            n_trees: default_boost_trees(),
            max_depth: default_boost_depth(),
            learning_rate: default_learning_rate(),
        }
    }

    pub fn forest(seed: u64) -> Self {
        ModelSpec::RandomForest {
            lags: DEFAULT_LAGS,
            n_trees: default_forest_trees(),
            max_depth: default_forest_depth(),
            feature_fraction: default_feature_fraction(),
            bootstrap: true,
            seed,
        }
    }

    /// The default model line-up: three statistical baselines and three regressors.
    pub fn default_lineup(seed: u64) -> Vec<ModelSpec> {
        vec![
            ModelSpec::NaiveSeasonal { k: 1 },
            ModelSpec::ExponentialSmoothing { alpha: crate::series::DEFAULT_ALPHA },
            ModelSpec::Theta,
            ModelSpec::linear(),
            ModelSpec::boosted(),
            ModelSpec::forest(seed),
        ]
    }

    pub fn is_statistical(&self) -> bool {
        matches!(self, ModelSpec::NaiveSeasonal { .. } | ModelSpec::ExponentialSmoothing { .. } | ModelSpec::Theta)
    }

    /// Family name without hyperparameters; grid candidates share it.
    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::NaiveSeasonal { .. } => "naive-seasonal",
            ModelSpec::ExponentialSmoothing { .. } => "exponential-smoothing",
            ModelSpec::Theta => "theta",
            ModelSpec::LinearRegression { .. } => "linear-regression",
            ModelSpec::GradientBoostedTrees { .. } => "gradient-boosted-trees",
            ModelSpec::RandomForest { .. } => "random-forest",
        }
    }

    /// Row label in reports.
    pub fn label(&self) -> String {
        match self {
            ModelSpec::NaiveSeasonal { k } => format!("naive-seasonal(K={k})"),
            other => other.family().to_string(),
        }
    }

    pub fn lags(&self) -> Option<usize> {
        match self {
            ModelSpec::LinearRegression { lags }
            | ModelSpec::GradientBoostedTrees { lags, .. }
            | ModelSpec::RandomForest { lags, .. } => Some(*lags),
            _ => None,
        }
    }

    /// Shortest history the model can forecast from.
    pub fn min_history(&self) -> usize {
        match self {
            ModelSpec::NaiveSeasonal { k } => (*k).max(3),
            ModelSpec::ExponentialSmoothing { .. } | ModelSpec::Theta => 3,
            // at least one training sample beyond the lag window
            other => other.lags().unwrap_or(1) + 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::config(msg));
        match self {
            ModelSpec::NaiveSeasonal { k } if *k == 0 => bad("naive seasonal K must be at least 1".into()),
            ModelSpec::ExponentialSmoothing { alpha } if !(*alpha > 0.0 && *alpha < 1.0) => {
                bad(format!("exponential smoothing alpha {alpha} outside (0,1)"))
            }
            ModelSpec::LinearRegression { lags } if *lags == 0 => bad("lag window must be at least 1".into()),
            ModelSpec::GradientBoostedTrees { lags, n_trees, learning_rate, .. }
                if *lags == 0 || *n_trees == 0 || !(*learning_rate > 0.0) =>
            {
                bad("boosted trees need lags, n_trees and learning_rate > 0".into())
            }
            ModelSpec::RandomForest { lags, n_trees, feature_fraction, .. }
                if *lags == 0 || *n_trees == 0 || !(*feature_fraction > 0.0 && *feature_fraction <= 1.0) =>
            {
                bad("random forest needs lags, n_trees > 0 and feature_fraction in (0,1]".into())
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Forecasts `h` steps with any model family, training regressors on the
/// history alone.
pub fn forecast_local(spec: &ModelSpec, history: &[f64], h: usize) -> Result<Vec<f64>> {
    if spec.is_statistical() {
        forecast_statistical(spec, history, h)
    } else {
        let model = train_regression(spec, &[history])?;
        forecast_regression(&model, history, h)
    }
}
