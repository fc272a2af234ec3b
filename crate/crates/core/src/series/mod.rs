//! From raw monthly index values to analysis-ready series: gap filling,
//! polynomial trend fit, min-max normalization, exponential smoothing and
//! the flat / over-interpolated classification.

mod interpolate;
mod polyfit;

pub use interpolate::{interpolate, newton_eval, Filled};
pub use polyfit::{fit_best_polynomial, fit_polynomial, DegreeFit, PolyFit, Polynomial, MAX_DEGREE, SMAPE_TIE_TOLERANCE};

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::MonthRange;
use crate::error::{Error, Result};
use crate::keywords::format_float;
use crate::proximity::{series_id, IndexKind, IndexSeries, TechPair};

pub const DEFAULT_ALPHA: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProcessingConfig {
    pub alpha: f64,
    /// Series whose interpolation rate is strictly above this are excluded.
    pub exclusion_rate: f64,
    /// Series whose normalized mean is at or below this are flat.
    pub flat_mean: f64,
}

impl Default for ProcessingConfig {
    fn default() -> Self {
        Self { alpha: DEFAULT_ALPHA, exclusion_rate: 0.5, flat_mean: 0.02 }
    }
}

impl ProcessingConfig {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(0.0..=1.0).contains(&self.exclusion_rate) {
            return Err(Error::config(format!("exclusion_rate {} outside [0,1]", self.exclusion_rate)));
        }
        if !(0.0..=1.0).contains(&self.flat_mean) {
            return Err(Error::config(format!("flat_mean {} outside [0,1]", self.flat_mean)));
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("smoothing alpha {alpha} must lie strictly between 0 and 1")))
    }
}

/// `(x - min) / max(x - min)`; all zeros for a constant series.
pub fn minmax_normalize(values: &[f64]) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let span = values.iter().map(|v| v - min).fold(0.0, f64::max);
    if span > 0.0 {
        values.iter().map(|v| (v - min) / span).collect()
    } else {
        vec![0.0; values.len()]
    }
}

/// `F_1 = x_1`, `F_t = alpha x_t + (1 - alpha) F_{t-1}`, evaluated as
/// `F_{t-1} + alpha (x_t - F_{t-1})` so constant series are exact fixed points.
pub fn exp_smooth(values: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let mut out = Vec::with_capacity(values.len());
    let mut level = match values.first() {
        Some(&x) => x,
        None => return Ok(out),
    };
    out.push(level);
    for &x in &values[1..] {
        level += alpha * (x - level);
        out.push(level);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesFlags {
    pub excluded: bool,
    pub flat: bool,
}

impl SeriesFlags {
    /// Eligible for clustering and forecasting.
    pub fn retained(&self) -> bool {
        !self.excluded && !self.flat
    }
}

/// Flatness is only evaluated for series that survive the exclusion rule.
pub fn classify(interpolation_rate: f64, normalized_mean: f64, cfg: &ProcessingConfig) -> SeriesFlags {
    let excluded = interpolation_rate > cfg.exclusion_rate;
    let flat = !excluded && normalized_mean <= cfg.flat_mean;
    SeriesFlags { excluded, flat }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessedSeries {
    pub pair: TechPair,
    pub kind: IndexKind,
    pub range: MonthRange,
    pub filled: Vec<f64>,
    pub interpolated: Vec<bool>,
    pub interpolation_rate: f64,
    pub too_sparse: bool,
    pub fit: Option<PolyFit>,
    pub fitted: Vec<f64>,
    pub normalized: Vec<f64>,
    /// Smoothed normalized values: the input to clustering and forecasting.
    pub smoothed: Vec<f64>,
    pub flags: SeriesFlags,
}

impl ProcessedSeries {
    pub fn id(&self) -> String {
        series_id(&self.pair, self.kind)
    }

    pub fn metadata(&self) -> SeriesMetadata {
        SeriesMetadata {
            id: self.id(),
            t1: self.pair.t1.clone(),
            t2: self.pair.t2.clone(),
            kind: self.kind,
            months: self.filled.len(),
            interpolation_rate: self.interpolation_rate,
            too_sparse: self.too_sparse,
            degree: self.fit.as_ref().map(|f| f.degree),
            fit_smape: self.fit.as_ref().map(|f| f.smape),
            coefficients: self.fit.as_ref().map(|f| f.polynomial.monomial_coefficients()),
            normalized_mean: mean(&self.normalized),
            excluded: self.flags.excluded,
            flat: self.flags.flat,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesMetadata {
    pub id: String,
    pub t1: String,
    pub t2: String,
    pub kind: IndexKind,
    pub months: usize,
    pub interpolation_rate: f64,
    pub too_sparse: bool,
    pub degree: Option<usize>,
    pub fit_smape: Option<f64>,
    /// Raw monomial coefficients `a_0..a_d` over the 0-based month ordinal.
    pub coefficients: Option<Vec<f64>>,
    pub normalized_mean: f64,
    pub excluded: bool,
    pub flat: bool,
}

pub fn process_series(series: &IndexSeries, cfg: &ProcessingConfig) -> Result<ProcessedSeries> {
    let Filled { values: filled, interpolated, interpolation_rate, too_sparse } = interpolate(&series.values);
    let fit = fit_best_polynomial(&filled);
    let fitted = fit.as_ref().map(|f| f.fitted(filled.len())).unwrap_or_default();
    let normalized = minmax_normalize(&filled);
    let smoothed = exp_smooth(&normalized, cfg.alpha)?;
    let flags = classify(interpolation_rate, mean(&normalized), cfg);
    Ok(ProcessedSeries {
        pair: series.pair.clone(),
        kind: series.kind,
        range: series.range,
        filled,
        interpolated,
        interpolation_rate,
        too_sparse,
        fit,
        fitted,
        normalized,
        smoothed,
        flags,
    })
}

pub fn process_all(series: &[IndexSeries], cfg: &ProcessingConfig) -> Result<Vec<ProcessedSeries>> {
    cfg.validate()?;
    series.par_iter().map(|s| process_series(s, cfg)).collect()
}

/// Long CSV `t1,t2,kind,stage,year,month,value` with stages
/// `filled`, `fitted`, `normalized`, `smoothed`.
pub fn write_processed_csv(writer: impl Write, series: &[ProcessedSeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t1", "t2", "kind", "stage", "year", "month", "value"])?;
    for s in series {
        let stages: [(&str, &[f64]); 4] =
            [("filled", &s.filled), ("fitted", &s.fitted), ("normalized", &s.normalized), ("smoothed", &s.smoothed)];
        for (stage, values) in stages {
            for (i, v) in values.iter().enumerate() {
                let m = s.range.month_at(i);
                w.write_record([
                    s.pair.t1.as_str(),
                    s.pair.t2.as_str(),
                    s.kind.name(),
                    stage,
                    &m.year.to_string(),
                    &m.month.to_string(),
                    &format_float(*v),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
