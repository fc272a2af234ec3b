//! Expanding-window backtests under the training regimes, and their reports.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{forecast_regression, forecast_statistical, smape, train_regression, ModelSpec};
use crate::clustering::ClusterLabel;
use crate::error::{Error, Result};
use crate::keywords::format_float;
use crate::proximity::IndexKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// One model per series, trained on that series alone.
    Local,
    /// Pooled per group of a seeded random partition with the cluster sizes.
    ClusterRandomized,
    /// Pooled per cluster of the shape clustering.
    ClusterAlgorithmic,
    /// Pooled over all series.
    Global,
    /// Trained on an external corpus only.
    TransferLearning,
}

impl Regime {
    pub const ALL: [Regime; 5] =
        [Regime::Local, Regime::ClusterRandomized, Regime::ClusterAlgorithmic, Regime::Global, Regime::TransferLearning];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Local => "local",
            Regime::ClusterRandomized => "cluster-rand",
            Regime::ClusterAlgorithmic => "cluster",
            Regime::Global => "global",
            Regime::TransferLearning => "transfer",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::config(format!("unknown regime {s:?} (expected local, cluster-rand, cluster, global or transfer)")))
    }
}

/// A processed series prepared for backtesting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BacktestSeries {
    pub id: String,
    pub kind: IndexKind,
    pub values: Vec<f64>,
}

/// Inputs some regimes require.
#[derive(Clone, Copy, Debug, Default)]
pub struct RegimeContext<'a> {
    pub clusters: Option<&'a BTreeMap<String, ClusterLabel>>,
    pub external: Option<&'a [Vec<f64>]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuningConfig {
    /// Share of a group's series used to train grid candidates.
    pub series_fraction: f64,
    /// Share of each training window before the validation cut.
    pub time_fraction: f64,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self { series_fraction: 0.8, time_fraction: 0.8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BacktestConfig {
    pub n_sections: usize,
    pub seed: u64,
    pub tuning: TuningConfig,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self { n_sections: 5, seed: 0, tuning: TuningConfig::default() }
    }
}

/// Window ends `b_i = floor(i n / S)` for folds `i = 1..S-1`, or `None` when
/// the last fold would leave fewer than `h` actuals.
pub fn fold_windows(n: usize, n_sections: usize, h: usize) -> Option<Vec<usize>> {
    if n_sections < 2 || h == 0 {
        return None;
    }
    let ends: Vec<usize> = (1..n_sections).map(|i| i * n / n_sections).collect();
    (ends[ends.len() - 1] + h <= n).then_some(ends)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldForecast {
    pub fold: usize,
    pub window_end: usize,
    pub forecast: Vec<f64>,
    pub smape: f64,
}

/// Forecast `h` steps from `history` with `spec`, training regressors on
/// `training` (windows that end no later than `history`).
fn fit_and_forecast(spec: &ModelSpec, training: &[&[f64]], history: &[f64], h: usize) -> Result<Vec<f64>> {
    if spec.is_statistical() {
        forecast_statistical(spec, history, h)
    } else {
        forecast_regression(&train_regression(spec, training)?, history, h)
    }
}

/// Local expanding-window backtest of one series: one SMAPE per fold.
pub fn expanding_window_cv(values: &[f64], spec: &ModelSpec, h: usize, n_sections: usize) -> Result<Vec<FoldForecast>> {
    let ends = fold_windows(values.len(), n_sections, h).ok_or_else(|| {
        Error::InsufficientData(format!("series of {} months too short for {n_sections} sections and horizon {h}", values.len()))
    })?;
    ends.iter()
        .enumerate()
        .map(|(i, &b)| {
            let window = &values[..b];
            let forecast = fit_and_forecast(spec, &[window], window, h)?;
            let smape = smape(&values[b..b + h], &forecast)?;
            Ok(FoldForecast { fold: i + 1, window_end: b, forecast, smape })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub series_id: String,
    pub fold: usize,
    pub smape: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningChoice {
    pub group: usize,
    /// 0 for models trained once (transfer learning).
    pub fold: usize,
    pub chosen: ModelSpec,
    pub validation_smape: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub regime: Regime,
    pub model: String,
    pub kind: IndexKind,
    pub horizon: usize,
    pub records: Vec<FoldRecord>,
    pub median: Option<f64>,
    pub mean: Option<f64>,
    pub folds: usize,
    pub skipped_series: usize,
    /// Wall-clock seconds of the regime run this entry belongs to. Kept out
    /// of the serialized report so reports stay byte-reproducible.
    #[serde(skip)]
    pub elapsed_secs: f64,
}

impl ReportEntry {
    pub fn smapes(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.smape).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub regime: Regime,
    pub model: String,
    pub horizon: usize,
    pub groups: usize,
    pub tuning: Vec<TuningChoice>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub n_sections: usize,
    pub seed: u64,
    /// How series and time were split for tuning and evaluation.
    pub split: String,
    pub runs: Vec<RunSummary>,
    pub entries: Vec<ReportEntry>,
}

const SPLIT_NOTE: &str = "evaluation: expanding window over time per series; tuning: grid candidates trained on \
                          a seeded share of the group's series and validated on the rest, both cut at a fixed \
                          share of the fold window";

impl BacktestReport {
    pub fn new(cfg: &BacktestConfig) -> Self {
        Self { n_sections: cfg.n_sections, seed: cfg.seed, split: SPLIT_NOTE.into(), runs: Vec::new(), entries: Vec::new() }
    }

    pub fn merge(&mut self, other: BacktestReport) {
        self.runs.extend(other.runs);
        self.entries.extend(other.entries);
    }

    pub fn find(&self, regime: Regime, model: &str, kind: IndexKind, horizon: usize) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.regime == regime && e.model == model && e.kind == kind && e.horizon == horizon)
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    Some(if m % 2 == 1 { v[m / 2] } else { (v[m / 2 - 1] + v[m / 2]) / 2.0 })
}

/// Seeded random partition of `ids` with the same group sizes as the
/// clustering (over the ids that carry a cluster label).
pub fn cluster_randomized_groups(
    ids: &[String],
    labels: &BTreeMap<String, ClusterLabel>,
    seed: u64,
) -> BTreeMap<String, usize> {
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    let mut pool: Vec<&String> = Vec::new();
    for id in ids {
        if let Some(ClusterLabel::Cluster(c)) = labels.get(id) {
            *sizes.entry(*c).or_default() += 1;
            pool.push(id);
        }
    }
    pool.sort();
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = BTreeMap::new();
    let mut it = pool.into_iter();
    for (c, size) in sizes {
        for id in it.by_ref().take(size) {
            out.insert(id.clone(), c);
        }
    }
    out
}

/// Picks the candidate with the lowest validation SMAPE (first on ties).
fn tune(
    candidates: &[ModelSpec],
    windows: &[&[f64]],
    h: usize,
    cfg: &TuningConfig,
    seed: u64,
) -> (ModelSpec, Option<f64>) {
    if candidates.len() == 1 || windows.is_empty() {
        return (candidates[0].clone(), None);
    }
    let m = windows.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train_idx, val_idx) = if m == 1 {
        (order.clone(), order)
    } else {
        let n_train = ((cfg.series_fraction * m as f64).round() as usize).clamp(1, m - 1);
        (order[..n_train].to_vec(), order[n_train..].to_vec())
    };
    let cut = |w: &[f64]| ((cfg.time_fraction * w.len() as f64).floor() as usize).max(1);
    let train: Vec<&[f64]> = train_idx.iter().map(|&i| &windows[i][..cut(windows[i])]).collect();

    let mut best: (usize, f64) = (0, f64::INFINITY);
    for (ci, spec) in candidates.iter().enumerate() {
        let scores: Vec<f64> = val_idx
            .iter()
            .filter_map(|&i| {
                let w = windows[i];
                let c = cut(w);
                let actual = &w[c..(c + h).min(w.len())];
                if actual.is_empty() {
                    return None;
                }
                let f = fit_and_forecast(spec, &train, &w[..c], actual.len()).ok()?;
                smape(actual, &f).ok()
            })
            .collect();
        if scores.is_empty() {
            continue;
        }
        let score = scores.iter().sum::<f64>() / scores.len() as f64;
        if score < best.1 {
            best = (ci, score);
        }
    }
    (candidates[best.0].clone(), best.1.is_finite().then_some(best.1))
}

/// Backtests one model family (a grid of candidates, tuned per training set
/// when it has more than one) at one horizon under one regime.
pub fn run_regime(
    series: &[BacktestSeries],
    regime: Regime,
    candidates: &[ModelSpec],
    horizon: usize,
    cfg: &BacktestConfig,
    ctx: RegimeContext<'_>,
) -> Result<BacktestReport> {
    let Some(first) = candidates.first() else {
        return Err(Error::config("no model candidates"));
    };
    for c in candidates {
        c.validate()?;
        if c.family() != first.family() {
            return Err(Error::config("a candidate grid must contain a single model family"));
        }
        if regime != Regime::Local && c.is_statistical() {
            return Err(Error::config(format!("{} cannot be trained on pooled series; use the local regime", c.label())));
        }
    }
    let model = if candidates.len() == 1 { first.label() } else { first.family().to_string() };
    let started = Instant::now();

    // eligibility: every fold leaves `horizon` actuals and the first window is usable
    let mut skipped: BTreeMap<IndexKind, usize> = BTreeMap::new();
    let mut eligible: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, s) in series.iter().enumerate() {
        match fold_windows(s.values.len(), cfg.n_sections, horizon) {
            Some(ends) if ends[0] >= first.min_history() => eligible.push((i, ends)),
            _ => *skipped.entry(s.kind).or_default() += 1,
        }
    }

    let groups: Vec<Vec<usize>> = match regime {
        Regime::Local | Regime::TransferLearning => vec![eligible.iter().map(|e| e.0).collect()],
        Regime::Global => vec![eligible.iter().map(|e| e.0).collect()],
        Regime::ClusterAlgorithmic | Regime::ClusterRandomized => {
            let labels = ctx
                .clusters
                .ok_or_else(|| Error::config(format!("regime {regime} needs a cluster assignment (run `cluster` first)")))?;
            let mapping: BTreeMap<String, usize> = if regime == Regime::ClusterRandomized {
                let ids: Vec<String> = series.iter().map(|s| s.id.clone()).collect();
                cluster_randomized_groups(&ids, labels, cfg.seed)
            } else {
                labels
                    .iter()
                    .filter_map(|(id, l)| match l {
                        ClusterLabel::Cluster(c) => Some((id.clone(), *c)),
                        ClusterLabel::Flat => None,
                    })
                    .collect()
            };
            let mut by_cluster: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for &(i, _) in &eligible {
                let c = mapping.get(&series[i].id).ok_or_else(|| {
                    Error::config(format!("series {} has no cluster in the assignment", series[i].id))
                })?;
                by_cluster.entry(*c).or_default().push(i);
            }
            by_cluster.into_values().collect()
        }
    };
    let ends_of: BTreeMap<usize, &Vec<usize>> = eligible.iter().map(|(i, e)| (*i, e)).collect();
    let n_folds = cfg.n_sections - 1;

    let mut tuning = Vec::new();
    let mut records: Vec<(usize, FoldRecord)> = Vec::new();
    match regime {
        Regime::Local => {
            let out: Vec<Result<Vec<(usize, FoldRecord)>>> = groups[0]
                .par_iter()
                .map(|&i| {
                    let s = &series[i];
                    ends_of[&i]
                        .iter()
                        .enumerate()
                        .map(|(f, &b)| {
                            let window = &s.values[..b];
                            let (spec, _) = tune(candidates, &[window], horizon, &cfg.tuning, fold_seed(cfg.seed, i, f));
                            let forecast = fit_and_forecast(&spec, &[window], window, horizon)?;
                            let e = smape(&s.values[b..b + horizon], &forecast)?;
                            Ok((i, FoldRecord { series_id: s.id.clone(), fold: f + 1, smape: e }))
                        })
                        .collect()
                })
                .collect();
            for r in out {
                records.extend(r?);
            }
        }
        Regime::TransferLearning => {
            let external =
                ctx.external.ok_or_else(|| Error::config("regime transfer needs an external series corpus path"))?;
            let windows: Vec<&[f64]> = external.iter().map(Vec::as_slice).collect();
            let (spec, score) = tune(candidates, &windows, horizon, &cfg.tuning, cfg.seed);
            let fitted = train_regression(&spec, &windows)?;
            tuning.push(TuningChoice { group: 0, fold: 0, chosen: spec, validation_smape: score });
            let out: Vec<Result<Vec<(usize, FoldRecord)>>> = groups[0]
                .par_iter()
                .map(|&i| {
                    let s = &series[i];
                    ends_of[&i]
                        .iter()
                        .enumerate()
                        .map(|(f, &b)| {
                            let forecast = forecast_regression(&fitted, &s.values[..b], horizon)?;
                            let e = smape(&s.values[b..b + horizon], &forecast)?;
                            Ok((i, FoldRecord { series_id: s.id.clone(), fold: f + 1, smape: e }))
                        })
                        .collect()
                })
                .collect();
            for r in out {
                records.extend(r?);
            }
        }
        Regime::Global | Regime::ClusterAlgorithmic | Regime::ClusterRandomized => {
            let jobs: Vec<(usize, usize)> =
                (0..groups.len()).flat_map(|g| (0..n_folds).map(move |f| (g, f))).collect();
            let out: Vec<Result<(Option<TuningChoice>, Vec<(usize, FoldRecord)>)>> = jobs
                .par_iter()
                .map(|&(g, f)| {
                    let members = &groups[g];
                    let windows: Vec<&[f64]> = members.iter().map(|&i| &series[i].values[..ends_of[&i][f]]).collect();
                    let (spec, score) = tune(candidates, &windows, horizon, &cfg.tuning, fold_seed(cfg.seed, g, f));
                    let choice = (candidates.len() > 1)
                        .then(|| TuningChoice { group: g, fold: f + 1, chosen: spec.clone(), validation_smape: score });
                    let fitted = train_regression(&spec, &windows)?;
                    let recs = members
                        .iter()
                        .zip(&windows)
                        .map(|(&i, w)| {
                            let b = w.len();
                            let forecast = forecast_regression(&fitted, w, horizon)?;
                            let e = smape(&series[i].values[b..b + horizon], &forecast)?;
                            Ok((i, FoldRecord { series_id: series[i].id.clone(), fold: f + 1, smape: e }))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok((choice, recs))
                })
                .collect();
            for r in out {
                let (choice, recs) = r?;
                tuning.extend(choice);
                records.extend(recs);
            }
        }
    }
    records.sort_by(|a, b| (a.0, a.1.fold).cmp(&(b.0, b.1.fold)));
    let elapsed = started.elapsed().as_secs_f64();

    let mut report = BacktestReport::new(cfg);
    report.runs.push(RunSummary { regime, model: model.clone(), horizon, groups: groups.len(), tuning });
    for kind in IndexKind::ALL {
        let recs: Vec<FoldRecord> =
            records.iter().filter(|(i, _)| series[*i].kind == kind).map(|(_, r)| r.clone()).collect();
        let smapes: Vec<f64> = recs.iter().map(|r| r.smape).collect();
        let mean = (!smapes.is_empty()).then(|| smapes.iter().sum::<f64>() / smapes.len() as f64);
        report.entries.push(ReportEntry {
            regime,
            model: model.clone(),
            kind,
            horizon,
            median: median(&smapes),
            mean,
            folds: recs.len(),
            records: recs,
            skipped_series: skipped.get(&kind).copied().unwrap_or(0),
            elapsed_secs: elapsed,
        });
    }
    Ok(report)
}

fn fold_seed(seed: u64, group: usize, fold: usize) -> u64 {
    seed ^ ((group as u64) << 32 | fold as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub model: String,
    pub bucket_lo: f64,
    pub bucket_hi: f64,
    pub count: usize,
}

/// Per-model counts of fold SMAPEs in buckets `[lo, lo + width)` covering
/// `[0, 200]`; the last bucket is closed so 200 is counted.
pub fn error_histogram(report: &BacktestReport, width: f64) -> Result<Vec<HistogramRow>> {
    if !(width > 0.0 && width <= 200.0) {
        return Err(Error::config(format!("bucket width {width} outside (0, 200]")));
    }
    let n_buckets = (200.0 / width).ceil() as usize;
    let mut counts: Vec<(String, Vec<usize>)> = Vec::new();
    for e in &report.entries {
        let slot = match counts.iter().position(|(m, _)| *m == e.model) {
            Some(p) => p,
            None => {
                counts.push((e.model.clone(), vec![0; n_buckets]));
                counts.len() - 1
            }
        };
        for r in &e.records {
            let b = ((r.smape / width).floor() as usize).min(n_buckets - 1);
            counts[slot].1[b] += 1;
        }
    }
    Ok(counts
        .into_iter()
        .flat_map(|(model, c)| {
            c.into_iter().enumerate().map(move |(b, count)| HistogramRow {
                model: model.clone(),
                bucket_lo: b as f64 * width,
                bucket_hi: ((b + 1) as f64 * width).min(200.0),
                count,
            })
        })
        .collect())
}

pub fn write_histogram_csv(writer: impl Write, rows: &[HistogramRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["model", "bucket_lo", "bucket_hi", "count"])?;
    for r in rows {
        w.write_record([r.model.clone(), format_float(r.bucket_lo), format_float(r.bucket_hi), r.count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Median SMAPE table for one regime: `algorithm,horizon,index1..index5`,
/// index columns in [`IndexKind::ALL`] order; blank where nothing was scored.
pub fn write_median_table(writer: impl Write, report: &BacktestReport, regime: Regime) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["algorithm", "horizon", "index1", "index2", "index3", "index4", "index5"])?;
    let mut rows: Vec<(String, usize)> = Vec::new();
    for e in report.entries.iter().filter(|e| e.regime == regime) {
        if !rows.contains(&(e.model.clone(), e.horizon)) {
            rows.push((e.model.clone(), e.horizon));
        }
    }
    for (model, horizon) in rows {
        let mut rec = vec![model.clone(), horizon.to_string()];
        for kind in IndexKind::ALL {
            rec.push(
                report
                    .find(regime, &model, kind, horizon)
                    .and_then(|e| e.median)
                    .map(format_float)
                    .unwrap_or_default(),
            );
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// External corpus: one series per line, `series_id,v1,v2,...`; lengths may differ.
pub fn read_external_corpus(reader: impl Read) -> Result<Vec<(String, Vec<f64>)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| Error::Row { line, reason: e.to_string() })?;
        let mut fields = rec.iter();
        let Some(id) = fields.next().filter(|s| !s.is_empty()) else { continue };
        let values = fields
            .filter(|f| !f.is_empty())
            .map(|f| f.parse::<f64>().map_err(|_| Error::Row { line, reason: format!("bad value {f:?}") }))
            .collect::<Result<Vec<f64>>>()?;
        out.push((id.to_string(), values));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_boundaries() {
        assert_eq!(fold_windows(240, 5, 12), Some(vec![48, 96, 144, 192]));
        assert_eq!(fold_windows(10, 5, 3), None);
        assert_eq!(fold_windows(10, 5, 2), Some(vec![2, 4, 6, 8]));
    }

    #[test]
    fn seasonal_fixture_is_exact() {
        let v: Vec<f64> = (0..120).map(|t| 1.0 + (t % 12) as f64).collect();
        let folds = expanding_window_cv(&v, &ModelSpec::NaiveSeasonal { k: 12 }, 6, 5).unwrap();
        assert_eq!(folds.len(), 4);
        assert!(folds.iter().all(|f| f.smape == 0.0));
    }

    #[test]
    fn histogram_conserves() {
        let mut report = BacktestReport::default();
        report.entries.push(ReportEntry {
            regime: Regime::Local,
            model: "m".into(),
            kind: IndexKind::KeywordIk,
            horizon: 3,
            records: [0.0, 5.0, 200.0, 199.9]
                .iter()
                .map(|&s| FoldRecord { series_id: "x".into(), fold: 1, smape: s })
                .collect(),
            median: None,
            mean: None,
            folds: 4,
            skipped_series: 0,
            elapsed_secs: 0.0,
        });
        let rows = error_histogram(&report, 10.0).unwrap();
        assert_eq!(rows.len(), 20);
        assert_eq!(rows.iter().map(|r| r.count).sum::<usize>(), 4);
        assert_eq!(rows[19].count, 2);
    }

    #[test]
    fn randomized_partition_keeps_sizes() {
        let ids: Vec<String> = (0..9).map(|i| format!("s{i}")).collect();
        let labels: BTreeMap<String, ClusterLabel> =
            ids.iter().enumerate().map(|(i, id)| (id.clone(), ClusterLabel::Cluster(if i < 6 { 0 } else { 1 }))).collect();
        let a = cluster_randomized_groups(&ids, &labels, 5);
        assert_eq!(a, cluster_randomized_groups(&ids, &labels, 5));
        assert_eq!(a.values().filter(|c| **c == 0).count(), 6);
    }

    #[test]
    fn external_corpus_ragged() {
        let rows = read_external_corpus("a,1,2,3\nb,4\n".as_bytes()).unwrap();
        assert_eq!(rows, vec![("a".into(), vec![1.0, 2.0, 3.0]), ("b".into(), vec![4.0])]);
        assert!(read_external_corpus("a,1,x\n".as_bytes()).is_err());
    }
}
