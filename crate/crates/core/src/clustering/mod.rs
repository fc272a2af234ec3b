//! Shape clustering of processed series under the l1 metric: K-Means with
//! median centroids, PAM K-Medoids and K-Shape, plus silhouettes and a 2D
//! centroid layout.

mod kmeans;
mod kmedoids;
mod kshape;

pub use kmeans::kmeans_l1;
pub use kmedoids::kmedoids;
pub use kshape::{kshape, sbd, zscore};

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keywords::format_float;
use crate::series::{exp_smooth, minmax_normalize, ProcessedSeries, ProcessingConfig};

pub const DEFAULT_K: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    KMeans,
    KMedoids,
    KShape,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::KMeans, Algorithm::KMedoids, Algorithm::KShape];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::KMeans => "kmeans",
            Algorithm::KMedoids => "kmedoids",
            Algorithm::KShape => "kshape",
        }
    }

    /// The dissimilarity the algorithm optimizes.
    pub fn distance(self) -> Distance {
        match self {
            Algorithm::KShape => Distance::Sbd,
            _ => Distance::L1,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::config(format!("unknown clustering algorithm {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distance {
    L1,
    /// Shape-based distance: 1 - max circular normalized cross-correlation.
    Sbd,
}

impl Distance {
    pub fn eval(self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            Distance::L1 => l1_distance(x, y),
            Distance::Sbd => sbd(x, y),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterParams {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Independent restarts; the lowest final cost wins.
    pub n_init: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self { k: DEFAULT_K, seed: 0, max_iters: 100, n_init: 8 }
    }
}

impl ClusterParams {
    pub fn with_k(k: usize, seed: u64) -> Self {
        Self { k, seed, ..Default::default() }
    }

    fn check(&self, data: &[Vec<f64>]) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("k must be at least 1"));
        }
        if data.is_empty() {
            return Err(Error::InsufficientData("no series to cluster".into()));
        }
        if self.k > data.len() {
            return Err(Error::InsufficientData(format!("k = {} exceeds the {} series available", self.k, data.len())));
        }
        let len = data[0].len();
        if let Some(bad) = data.iter().find(|s| s.len() != len) {
            return Err(Error::LengthMismatch { left: len, right: bad.len() });
        }
        Ok(())
    }

    /// Per-restart seeds derived from the run seed.
    fn restart_seeds(&self) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.n_init.max(1)).map(|_| rng.next_u64()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub algorithm: Algorithm,
    pub k: usize,
    /// Cluster id per input row.
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub iterations: usize,
    pub seed: u64,
    /// Total cost after each iteration of the winning restart.
    pub cost_trace: Vec<f64>,
    pub cost: f64,
    /// Zero-variance inputs (K-Shape only).
    pub zero_variance: usize,
}

impl ClusterAssignment {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

pub fn run_algorithm(algorithm: Algorithm, data: &[Vec<f64>], params: &ClusterParams) -> Result<ClusterAssignment> {
    match algorithm {
        Algorithm::KMeans => kmeans_l1(data, params),
        Algorithm::KMedoids => kmedoids(data, params),
        Algorithm::KShape => kshape(data, params),
    }
}

/// Runs `run` once per restart seed and keeps the lowest-cost result
/// (earliest restart on ties).
fn best_of_restarts(
    params: &ClusterParams,
    run: impl Fn(u64) -> Result<ClusterAssignment> + Sync + Send,
) -> Result<ClusterAssignment> {
    let runs: Vec<ClusterAssignment> =
        params.restart_seeds().into_par_iter().map(run).collect::<Result<_>>()?;
    let mut best: Option<ClusterAssignment> = None;
    for r in runs {
        if best.as_ref().is_none_or(|b| r.cost < b.cost) {
            best = Some(r);
        }
    }
    let mut best = best.expect("at least one restart");
    best.seed = params.seed;
    Ok(best)
}

/// D²-weighted seeding (k-means++) under an arbitrary distance.
fn plus_plus_seeds(data: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng, dist: impl Fn(&[f64], &[f64]) -> f64) -> Vec<usize> {
    let n = data.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = data.iter().map(|x| dist(x, &data[chosen[0]])).collect();
    while chosen.len() < k {
        let weights: Vec<f64> = nearest.iter().map(|d| d * d).collect();
        let total: f64 = weights.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, w) in weights.iter().enumerate() {
                if *w > 0.0 && target < *w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            // guard against rounding landing on an already chosen point
            if weights[pick] == 0.0 {
                pick = (0..n).rev().find(|i| weights[*i] > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, x) in data.iter().enumerate() {
            nearest[i] = nearest[i].min(dist(x, &data[next]));
        }
    }
    chosen
}

/// Index of the nearest centroid; ties go to the lowest id.
fn nearest(x: &[f64], centroids: &[Vec<f64>], dist: impl Fn(&[f64], &[f64]) -> f64) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = dist(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

pub fn l1_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    Ok(l1(x, y))
}

fn l1(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
}

/// Symmetric pairwise distance matrix, computed in parallel.
pub fn distance_matrix(data: &[Vec<f64>], distance: Distance) -> Result<Vec<Vec<f64>>> {
    let n = data.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| if j <= i { Ok(0.0) } else { distance.eval(&data[i], &data[j]) }).collect())
        .collect::<Result<_>>()?;
    let mut m = rows;
    for i in 0..n {
        for j in 0..i {
            m[i][j] = m[j][i];
        }
    }
    Ok(m)
}

/// Assigns each series to its nearest centroid (ties to the lowest id).
pub fn assign_to_centroids(data: &[Vec<f64>], centroids: &[Vec<f64>], distance: Distance) -> Result<Vec<usize>> {
    if centroids.is_empty() {
        return Err(Error::InsufficientData("no centroids".into()));
    }
    data.par_iter()
        .map(|x| {
            let mut best = (0, f64::INFINITY);
            for (j, c) in centroids.iter().enumerate() {
                let d = distance.eval(x, c)?;
                if d < best.1 {
                    best = (j, d);
                }
            }
            Ok(best.0)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteReport {
    pub samples: Vec<f64>,
    /// Mean silhouette per cluster id (sorted by id).
    pub per_cluster: BTreeMap<usize, f64>,
    pub mean: f64,
}

/// Silhouette from a precomputed distance matrix. Singletons score 0.
pub fn silhouette_from_matrix(dist: &[Vec<f64>], labels: &[usize]) -> Result<SilhouetteReport> {
    if dist.len() != labels.len() {
        return Err(Error::LengthMismatch { left: dist.len(), right: labels.len() });
    }
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        members.entry(l).or_default().push(i);
    }
    if members.len() < 2 {
        return Err(Error::Undefined("silhouette needs at least two non-empty clusters".into()));
    }
    let samples: Vec<f64> = (0..labels.len())
        .map(|i| {
            let own = &members[&labels[i]];
            if own.len() == 1 {
                return 0.0;
            }
            let a = own.iter().filter(|&&j| j != i).map(|&j| dist[i][j]).sum::<f64>() / (own.len() - 1) as f64;
            let b = members
                .iter()
                .filter(|(l, _)| **l != labels[i])
                .map(|(_, m)| m.iter().map(|&j| dist[i][j]).sum::<f64>() / m.len() as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect();
    let per_cluster = members
        .iter()
        .map(|(l, m)| (*l, m.iter().map(|&i| samples[i]).sum::<f64>() / m.len() as f64))
        .collect();
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    Ok(SilhouetteReport { samples, per_cluster, mean })
}

pub fn silhouette(data: &[Vec<f64>], labels: &[usize], distance: Distance) -> Result<SilhouetteReport> {
    silhouette_from_matrix(&distance_matrix(data, distance)?, labels)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutPoint {
    pub cluster: usize,
    pub x: f64,
    pub y: f64,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentroidLayout {
    pub points: Vec<LayoutPoint>,
    /// The centroid distances embed in fewer than two dimensions; `y` is zero.
    pub rank_deficient: bool,
}

/// Classical multidimensional scaling of the centroid distance matrix.
pub fn centroid_layout(assignment: &ClusterAssignment, distance: Distance) -> Result<CentroidLayout> {
    let k = assignment.centroids.len();
    if k < 2 {
        return Err(Error::InsufficientData("layout needs at least two centroids".into()));
    }
    let d = distance_matrix(&assignment.centroids, distance)?;
    let sq = DMatrix::from_fn(k, k, |i, j| d[i][j] * d[i][j]);
    let centering = DMatrix::identity(k, k) - DMatrix::from_element(k, k, 1.0 / k as f64);
    let b = -0.5 * &centering * sq * &centering;
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let coords = |rank: usize| -> Vec<f64> {
        let idx = order[rank];
        let lambda = eig.eigenvalues[idx];
        if lambda <= 1e-12 * top.max(1e-300) {
            return vec![0.0; k];
        }
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().map(|x| x * lambda.sqrt()).collect();
        // fix the reflection so output is deterministic
        if v.iter().find(|x| x.abs() > 1e-12).is_some_and(|x| *x < 0.0) {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    };
    let xs = coords(0);
    let ys = coords(1);
    let rank_deficient = ys.iter().all(|y| *y == 0.0);
    let sizes = assignment.sizes();
    let points = (0..k).map(|c| LayoutPoint { cluster: c, x: xs[c], y: ys[c], size: sizes[c] }).collect();
    Ok(CentroidLayout { points, rank_deficient })
}

pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    let n = a.len();
    let comb2 = |x: usize| (x * x.saturating_sub(1)) as f64 / 2.0;
    let mut table: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut rows: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cols: BTreeMap<usize, usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| comb2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| comb2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| comb2(c)).sum();
    let expected = sum_a * sum_b / comb2(n).max(1.0);
    let max = (sum_a + sum_b) / 2.0;
    if max == expected {
        // both labelings trivial (one cluster, or all singletons)
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Cluster membership of a processed series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterLabel {
    Cluster(usize),
    /// The reserved cluster for flat series.
    Flat,
}

impl fmt::Display for ClusterLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClusterLabel::Cluster(c) => write!(f, "{c}"),
            ClusterLabel::Flat => f.write_str("flat"),
        }
    }
}

impl FromStr for ClusterLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "flat" {
            return Ok(ClusterLabel::Flat);
        }
        s.parse().map(ClusterLabel::Cluster).map_err(|_| Error::malformed(format!("bad cluster label {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainingSource {
    Project,
    External,
}

/// Clustering of a set of processed series, keyed by series id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesClustering {
    pub assignment: ClusterAssignment,
    pub source: TrainingSource,
    /// Retained series carry a cluster id, flat series the flat label,
    /// excluded series are absent.
    pub labels: BTreeMap<String, ClusterLabel>,
}

impl SeriesClustering {
    /// Cluster groups over retained series, ordered by cluster id.
    pub fn groups(&self) -> BTreeMap<usize, Vec<String>> {
        let mut out: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (id, l) in &self.labels {
            if let ClusterLabel::Cluster(c) = l {
                out.entry(*c).or_default().push(id.clone());
            }
        }
        out
    }
}

fn retained(series: &[ProcessedSeries]) -> (Vec<String>, Vec<Vec<f64>>) {
    series.iter().filter(|s| s.flags.retained()).map(|s| (s.id(), s.smoothed.clone())).unzip()
}

fn flat_labels(series: &[ProcessedSeries], labels: &mut BTreeMap<String, ClusterLabel>) {
    for s in series.iter().filter(|s| !s.flags.excluded && s.flags.flat) {
        labels.insert(s.id(), ClusterLabel::Flat);
    }
}

/// Clusters the retained series' smoothed values. Flat series get the flat
/// label; excluded series never reach the algorithm.
pub fn cluster_series(series: &[ProcessedSeries], algorithm: Algorithm, params: &ClusterParams) -> Result<SeriesClustering> {
    let (ids, data) = retained(series);
    let assignment = run_algorithm(algorithm, &data, params)?;
    let mut labels: BTreeMap<String, ClusterLabel> =
        ids.into_iter().zip(&assignment.labels).map(|(id, &l)| (id, ClusterLabel::Cluster(l))).collect();
    flat_labels(series, &mut labels);
    Ok(SeriesClustering { assignment, source: TrainingSource::Project, labels })
}

/// Prepares external series like project series: the trailing `len` values
/// are min-max normalized then smoothed. Shorter series are dropped.
pub fn prepare_external(external: &[Vec<f64>], len: usize, cfg: &ProcessingConfig) -> Result<Vec<Vec<f64>>> {
    external
        .iter()
        .filter(|s| s.len() >= len && len > 0)
        .map(|s| exp_smooth(&minmax_normalize(&s[s.len() - len..]), cfg.alpha))
        .collect()
}

/// Trains centroids on an external corpus and assigns the project's retained
/// series to the nearest one.
pub fn cluster_series_external(
    series: &[ProcessedSeries],
    external: &[Vec<f64>],
    algorithm: Algorithm,
    params: &ClusterParams,
    cfg: &ProcessingConfig,
) -> Result<SeriesClustering> {
    let (ids, data) = retained(series);
    let len = data.first().map(Vec::len).ok_or_else(|| Error::InsufficientData("no retained series".into()))?;
    let train = prepare_external(external, len, cfg)?;
    let mut assignment = run_algorithm(algorithm, &train, params)?;
    let project = match algorithm {
        Algorithm::KShape => data.iter().map(|s| zscore(s)).collect::<Vec<_>>(),
        _ => data,
    };
    assignment.labels = assign_to_centroids(&project, &assignment.centroids, algorithm.distance())?;
    let mut labels: BTreeMap<String, ClusterLabel> =
        ids.into_iter().zip(&assignment.labels).map(|(id, &l)| (id, ClusterLabel::Cluster(l))).collect();
    flat_labels(series, &mut labels);
    Ok(SeriesClustering { assignment, source: TrainingSource::External, labels })
}

/// CSV `series_id,cluster`.
pub fn write_assignment_csv(writer: impl Write, clustering: &SeriesClustering) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["series_id", "cluster"])?;
    for (id, l) in &clustering.labels {
        w.write_record([id.as_str(), &l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_assignment_csv(reader: impl std::io::Read) -> Result<BTreeMap<String, ClusterLabel>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Row { line, reason: e.to_string() })?;
        let (Some(id), Some(label)) = (rec.get(0), rec.get(1)) else {
            return Err(Error::Row { line, reason: "expected series_id,cluster".into() });
        };
        let label = label.parse().map_err(|e: Error| Error::Row { line, reason: e.to_string() })?;
        out.insert(id.to_string(), label);
    }
    Ok(out)
}

/// CSV `cluster,x,y,size`.
pub fn write_layout_csv(writer: impl Write, layout: &CentroidLayout) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["cluster", "x", "y", "size"])?;
    for p in &layout.points {
        w.write_record([p.cluster.to_string(), format_float(p.x), format_float(p.y), p.size.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Elementwise median; the minimizer of total l1 distance.
pub fn elementwise_median(rows: &[&[f64]]) -> Vec<f64> {
    let len = rows.first().map_or(0, |r| r.len());
    let mut column = Vec::with_capacity(rows.len());
    (0..len)
        .map(|t| {
            column.clear();
            column.extend(rows.iter().map(|r| r[t]));
            column.sort_by(f64::total_cmp);
            let m = column.len();
            if m % 2 == 1 {
                column[m / 2]
            } else {
                (column[m / 2 - 1] + column[m / 2]) / 2.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l1_examples() {
        assert_eq!(l1_distance(&[0.0, 0.0], &[1.0, 3.0]).unwrap(), 4.0);
        assert_eq!(l1_distance(&[1.5, 2.0], &[1.5, 2.0]).unwrap(), 0.0);
        assert!(l1_distance(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn silhouette_hand_case() {
        let data = vec![vec![0.0], vec![1.0], vec![10.0]];
        let rep = silhouette(&data, &[0, 0, 1], Distance::L1).unwrap();
        assert_eq!(rep.samples[0], 0.9);
        assert_eq!(rep.samples[2], 0.0);
        assert!(silhouette(&data, &[0, 0, 0], Distance::L1).is_err());
    }

    #[test]
    fn ari_basics() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert!(adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap() < 0.0);
    }

    #[test]
    fn median_even_and_odd() {
        let a = [1.0, 5.0];
        let b = [3.0, 0.0];
        let c = [2.0, 9.0];
        assert_eq!(elementwise_median(&[&a, &b, &c]), vec![2.0, 5.0]);
        assert_eq!(elementwise_median(&[&a, &b]), vec![2.0, 2.5]);
    }

    #[test]
    fn layout_two_centroids() {
        let a = ClusterAssignment {
            algorithm: Algorithm::KMeans,
            k: 2,
            labels: vec![0, 1, 1],
            centroids: vec![vec![0.0, 0.0], vec![1.0, 3.0]],
            iterations: 1,
            seed: 0,
            cost_trace: vec![],
            cost: 0.0,
            zero_variance: 0,
        };
        let layout = centroid_layout(&a, Distance::L1).unwrap();
        let (p, q) = (&layout.points[0], &layout.points[1]);
        assert!(((p.x - q.x).hypot(p.y - q.y) - 4.0).abs() < 1e-6);
        assert!(layout.rank_deficient);
        assert_eq!(p.size + q.size, 3);
    }

    #[test]
    fn label_round_trip() {
        for l in [ClusterLabel::Flat, ClusterLabel::Cluster(3)] {
            assert_eq!(l.to_string().parse::<ClusterLabel>().unwrap(), l);
        }
    }
}
