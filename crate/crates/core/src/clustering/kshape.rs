use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{best_of_restarts, plus_plus_seeds, Algorithm, ClusterAssignment, ClusterParams};
use crate::error::{Error, Result};

/// Zero-mean, unit-variance copy; zero-variance input maps to all zeros.
pub fn zscore(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd > 1e-12 {
        x.iter().map(|v| (v - mean) / sd).collect()
    } else {
        vec![0.0; x.len()]
    }
}

/// Circular cross-correlation via FFT: `cc[w] = Σ_i a_i b_{(i+w) mod n}`.
struct Correlator {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    n: usize,
}

struct Spectrum {
    bins: Vec<Complex<f64>>,
    norm: f64,
}

impl Correlator {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n), n }
    }

    fn spectrum(&self, x: &[f64]) -> Spectrum {
        let mut bins: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.forward.process(&mut bins);
        Spectrum { bins, norm: x.iter().map(|v| v * v).sum::<f64>().sqrt() }
    }

    /// Best circular shift `w` of `b` against `a` and its normalized correlation.
    fn best_shift(&self, a: &Spectrum, b: &Spectrum) -> (usize, f64) {
        if a.norm == 0.0 || b.norm == 0.0 {
            return (0, 0.0);
        }
        let mut prod: Vec<Complex<f64>> = a.bins.iter().zip(&b.bins).map(|(x, y)| x.conj() * y).collect();
        self.inverse.process(&mut prod);
        let scale = self.n as f64 * a.norm * b.norm;
        let mut best = (0, f64::NEG_INFINITY);
        for (w, c) in prod.iter().enumerate() {
            let v = c.re / scale;
            if v > best.1 {
                best = (w, v);
            }
        }
        best
    }

    fn sbd(&self, a: &Spectrum, b: &Spectrum) -> f64 {
        (1.0 - self.best_shift(a, b).1).clamp(0.0, 2.0)
    }
}

/// Shape-based distance `1 - max_w NCC_w(z(x), z(y))` over circular shifts.
/// A zero-variance side has correlation 0, so distance 1.
pub fn sbd(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.is_empty() {
        return Ok(0.0);
    }
    let c = Correlator::new(x.len());
    Ok(c.sbd(&c.spectrum(&zscore(x)), &c.spectrum(&zscore(y))))
}

/// K-Shape: z-normalized series, SBD assignment and centroids extracted as
/// the leading eigenvector of the aligned members' scatter matrix.
pub fn kshape(data: &[Vec<f64>], params: &ClusterParams) -> Result<ClusterAssignment> {
    params.check(data)?;
    let z: Vec<Vec<f64>> = data.iter().map(|x| zscore(x)).collect();
    let zero_variance = z.iter().filter(|x| x.iter().all(|v| *v == 0.0)).count();
    if zero_variance > 0 {
        tracing::debug!(zero_variance, "constant series in k-shape input");
    }
    let corr = Correlator::new(z[0].len());
    let spectra: Vec<Spectrum> = z.iter().map(|x| corr.spectrum(x)).collect();
    let mut best = best_of_restarts(params, |seed| Ok(run(&z, &spectra, &corr, params.k, params.max_iters.max(1), seed)))?;
    best.zero_variance = zero_variance;
    Ok(best)
}

fn run(z: &[Vec<f64>], spectra: &[Spectrum], corr: &Correlator, k: usize, max_iters: usize, seed: u64) -> ClusterAssignment {
    let n = z.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds = plus_plus_seeds(z, k, &mut rng, |a, b| {
        corr.sbd(&corr.spectrum(a), &corr.spectrum(b))
    });
    let mut centroids: Vec<Vec<f64>> = seeds.iter().map(|&i| z[i].clone()).collect();
    let mut labels = vec![usize::MAX; n];
    let mut cost_trace = Vec::new();
    let mut iterations = 0;

    for _ in 0..max_iters {
        let cs: Vec<Spectrum> = centroids.iter().map(|c| corr.spectrum(c)).collect();
        let scored: Vec<(usize, f64)> = spectra
            .par_iter()
            .map(|s| {
                let mut best = (0, f64::INFINITY);
                for (j, c) in cs.iter().enumerate() {
                    let d = corr.sbd(s, c);
                    if d < best.1 {
                        best = (j, d);
                    }
                }
                best
            })
            .collect();
        let next: Vec<usize> = scored.iter().map(|s| s.0).collect();
        if next == labels {
            break;
        }
        labels = next;
        iterations += 1;

        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &l) in labels.iter().enumerate() {
            members[l].push(i);
        }
        // empty clusters take the worst-fitting point of a larger cluster
        for j in 0..k {
            if members[j].is_empty() {
                let far = (0..n)
                    .filter(|&i| members[labels[i]].len() > 1)
                    .max_by(|&a, &b| scored[a].1.total_cmp(&scored[b].1).then(b.cmp(&a)));
                if let Some(i) = far {
                    members[labels[i]].retain(|&x| x != i);
                    members[j].push(i);
                    labels[i] = j;
                }
            }
        }
        centroids = (0..k)
            .into_par_iter()
            .map(|j| extract_shape(z, spectra, corr, &members[j], &cs[j], &centroids[j]))
            .collect();
        cost_trace.push(cost(spectra, corr, &labels, &centroids));
    }
    let cost = cost_trace.last().copied().unwrap_or_else(|| cost(spectra, corr, &labels, &centroids));
    ClusterAssignment {
        algorithm: Algorithm::KShape,
        k,
        labels,
        centroids,
        iterations,
        seed,
        cost_trace,
        cost,
        zero_variance: 0,
    }
}

fn cost(spectra: &[Spectrum], corr: &Correlator, labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    let cs: Vec<Spectrum> = centroids.iter().map(|c| corr.spectrum(c)).collect();
    spectra.iter().zip(labels).map(|(s, &l)| corr.sbd(s, &cs[l])).sum()
}

fn extract_shape(
    z: &[Vec<f64>],
    spectra: &[Spectrum],
    corr: &Correlator,
    members: &[usize],
    centroid_spectrum: &Spectrum,
    centroid: &[f64],
) -> Vec<f64> {
    let len = centroid.len();
    if members.is_empty() {
        return centroid.to_vec();
    }
    let aligned: Vec<Vec<f64>> = members
        .iter()
        .map(|&i| {
            if centroid_spectrum.norm == 0.0 {
                return z[i].clone();
            }
            let (w, _) = corr.best_shift(centroid_spectrum, &spectra[i]);
            (0..len).map(|t| z[i][(t + w) % len]).collect()
        })
        .collect();
    let m = aligned.len();
    // Rows are zero-mean, so the centered scatter matrix is A^T A; its leading
    // eigenvector is the top right singular vector of A.
    let a = DMatrix::from_fn(m, len, |r, c| aligned[r][c]);
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let top = svd.singular_values.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).map_or(0, |(i, _)| i);
    if svd.singular_values[top] == 0.0 {
        return vec![0.0; len];
    }
    let v: Vec<f64> = v_t.row(top).iter().copied().collect();
    let dist = |sign: f64| -> f64 {
        aligned.iter().map(|x| x.iter().zip(&v).map(|(a, b)| (a - sign * b).powi(2)).sum::<f64>()).sum()
    };
    let sign = if dist(-1.0) < dist(1.0) { -1.0 } else { 1.0 };
    zscore(&v.iter().map(|x| sign * x).collect::<Vec<_>>())
}
