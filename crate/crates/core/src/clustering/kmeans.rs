use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{best_of_restarts, elementwise_median, l1, nearest, plus_plus_seeds, Algorithm, ClusterAssignment, ClusterParams};
use crate::error::Result;

/// K-Means under l1: k-means++ seeding, nearest-centroid assignment and
/// elementwise-median centroids, until the labels stop changing.
pub fn kmeans_l1(data: &[Vec<f64>], params: &ClusterParams) -> Result<ClusterAssignment> {
    params.check(data)?;
    best_of_restarts(params, |seed| Ok(run(data, params.k, params.max_iters.max(1), seed)))
}

fn run(data: &[Vec<f64>], k: usize, max_iters: usize, seed: u64) -> ClusterAssignment {
    let n = data.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<Vec<f64>> =
        plus_plus_seeds(data, k, &mut rng, l1).into_iter().map(|i| data[i].clone()).collect();
    let mut labels = vec![usize::MAX; n];
    let mut cost_trace = Vec::new();
    let mut iterations = 0;

    for _ in 0..max_iters {
        let next: Vec<usize> = data.par_iter().map(|x| nearest(x, &centroids, l1).0).collect();
        if next == labels {
            break;
        }
        labels = next;
        iterations += 1;

        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &l) in labels.iter().enumerate() {
            members[l].push(i);
        }
        for (j, m) in members.iter().enumerate() {
            if !m.is_empty() {
                let rows: Vec<&[f64]> = m.iter().map(|&i| data[i].as_slice()).collect();
                centroids[j] = elementwise_median(&rows);
            }
        }
        reseed_empty(data, &mut labels, &mut members, &mut centroids);
        cost_trace.push(total_cost(data, &labels, &centroids));
    }

    let cost = cost_trace.last().copied().unwrap_or_else(|| total_cost(data, &labels, &centroids));
    ClusterAssignment {
        algorithm: Algorithm::KMeans,
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

/// Moves the point farthest from its centroid (taken from a cluster with at
/// least two members) into each empty cluster. Never increases the cost.
fn reseed_empty(data: &[Vec<f64>], labels: &mut [usize], members: &mut [Vec<usize>], centroids: &mut [Vec<f64>]) {
    for j in 0..members.len() {
        if !members[j].is_empty() {
            continue;
        }
        let far = (0..data.len())
            .filter(|&i| members[labels[i]].len() > 1)
            .map(|i| (i, l1(&data[i], &centroids[labels[i]])))
            .fold(None::<(usize, f64)>, |best, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            });
        let Some((i, _)) = far else { continue };
        let old = labels[i];
        members[old].retain(|&x| x != i);
        members[j].push(i);
        labels[i] = j;
        centroids[j] = data[i].clone();
    }
}

pub(super) fn total_cost(data: &[Vec<f64>], labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    data.iter().zip(labels).map(|(x, &l)| l1(x, &centroids[l])).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cluster_is_the_median() {
        let data = vec![vec![0.0, 4.0], vec![1.0, 0.0], vec![5.0, 2.0]];
        let a = kmeans_l1(&data, &ClusterParams::with_k(1, 3)).unwrap();
        assert_eq!(a.centroids[0], vec![1.0, 2.0]);
        assert_eq!(a.labels, vec![0, 0, 0]);
    }

    #[test]
    fn two_groups() {
        let mut data = vec![vec![0.0, 0.0, 0.0]; 4];
        data.extend(vec![vec![9.0, 9.0, 9.0]; 3]);
        let a = kmeans_l1(&data, &ClusterParams::with_k(2, 11)).unwrap();
        assert_eq!(a.labels[..4].iter().collect::<std::collections::HashSet<_>>().len(), 1);
        assert_ne!(a.labels[0], a.labels[6]);
        assert_eq!(a.cost, 0.0);
    }

    #[test]
    fn too_many_clusters() {
        assert!(kmeans_l1(&[vec![1.0]], &ClusterParams::with_k(2, 0)).is_err());
    }
}
