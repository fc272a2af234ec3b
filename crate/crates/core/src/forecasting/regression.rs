//! Lagged-window autoregression with recursive multi-step forecasts.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::tree::{BoostedTrees, Forest};
use super::ModelSpec;
use crate::error::{Error, Result};

/// Supervised samples `(y_{t-L}, ..., y_{t-1}) -> y_t`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Samples {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

/// Builds samples from every series, in a canonical order (sorted by
/// features then target) so that fitted models do not depend on the order in
/// which series or samples were supplied.
pub fn lag_samples(series: &[&[f64]], lags: usize) -> Samples {
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for s in series {
        for t in lags..s.len() {
            rows.push((s[t - lags..t].to_vec(), s[t]));
        }
    }
    rows.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.total_cmp(&b.1))
    });
    let (x, y) = rows.into_iter().unzip();
    Samples { x, y }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    /// Weights for `y_{t-L}, ..., y_{t-1}` in that order.
    pub weights: Vec<f64>,
    /// The design was degenerate and the model predicts the target mean.
    pub constant_fallback: bool,
}

impl LinearModel {
    pub fn fit(samples: &Samples) -> Result<Self> {
        let n = samples.y.len();
        let lags = samples.x.first().map_or(0, Vec::len);
        if n == 0 {
            return Err(Error::InsufficientData("no training samples".into()));
        }
        let mean = samples.y.iter().sum::<f64>() / n as f64;
        let fallback = LinearModel { intercept: mean, weights: vec![0.0; lags], constant_fallback: true };
        if samples.x.iter().all(|r| *r == samples.x[0]) {
            return Ok(fallback);
        }
        let design = DMatrix::from_fn(n, lags + 1, |i, j| if j == 0 { 1.0 } else { samples.x[i][j - 1] });
        let svd = design.svd(true, true);
        let eps = 1e-10 * svd.singular_values.max();
        let Ok(beta) = svd.solve(&DVector::from_column_slice(&samples.y), eps) else {
            return Ok(fallback);
        };
        Ok(LinearModel { intercept: beta[0], weights: beta.iter().skip(1).copied().collect(), constant_fallback: false })
    }

    pub fn predict(&self, features: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(features).map(|(w, x)| w * x).sum::<f64>()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FittedModel {
    Linear { lags: usize, model: LinearModel },
    Forest { lags: usize, model: Forest },
    Boosted { lags: usize, model: BoostedTrees },
}

impl FittedModel {
    pub fn lags(&self) -> usize {
        match self {
            FittedModel::Linear { lags, .. } | FittedModel::Forest { lags, .. } | FittedModel::Boosted { lags, .. } => {
                *lags
            }
        }
    }

    pub fn predict(&self, features: &[f64]) -> f64 {
        match self {
            FittedModel::Linear { model, .. } => model.predict(features),
            FittedModel::Forest { model, .. } => model.predict(features),
            FittedModel::Boosted { model, .. } => model.predict(features),
        }
    }

    pub fn is_constant_fallback(&self) -> bool {
        matches!(self, FittedModel::Linear { model, .. } if model.constant_fallback)
    }
}

/// Trains a regression model on lagged samples from all `series`. Series no
/// longer than the lag window contribute nothing.
pub fn train_regression(spec: &ModelSpec, series: &[&[f64]]) -> Result<FittedModel> {
    spec.validate()?;
    let lags = spec.lags().ok_or_else(|| Error::config(format!("{} is not a regression model", spec.label())))?;
    let samples = lag_samples(series, lags);
    if samples.y.is_empty() {
        return Err(Error::InsufficientData(format!("training series must be longer than the lag window {lags}")));
    }
    Ok(match spec {
        ModelSpec::LinearRegression { .. } => FittedModel::Linear { lags, model: LinearModel::fit(&samples)? },
        ModelSpec::RandomForest { n_trees, max_depth, feature_fraction, bootstrap, seed, .. } => FittedModel::Forest {
            lags,
            model: Forest::fit(&samples.x, &samples.y, *n_trees, *max_depth, *feature_fraction, *bootstrap, *seed),
        },
        ModelSpec::GradientBoostedTrees { n_trees, max_depth, learning_rate, .. } => FittedModel::Boosted {
            lags,
            model: BoostedTrees::fit(&samples.x, &samples.y, *n_trees, *max_depth, *learning_rate),
        },
        _ => unreachable!("lags() is Some only for regression models"),
    })
}

/// Predicts one step, appends it to the history and repeats `h` times.
pub fn forecast_regression(model: &FittedModel, history: &[f64], h: usize) -> Result<Vec<f64>> {
    let lags = model.lags();
    if history.len() < lags {
        return Err(Error::InsufficientData(format!("history of {} is shorter than the lag window {lags}", history.len())));
    }
    let mut window: Vec<f64> = history[history.len() - lags..].to_vec();
    let mut out = Vec::with_capacity(h);
    for _ in 0..h {
        let next = model.predict(&window);
        out.push(next);
        window.remove(0);
        window.push(next);
    }
    Ok(out)
}
