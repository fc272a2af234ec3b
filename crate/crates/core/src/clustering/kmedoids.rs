use super::{distance_matrix, Algorithm, ClusterAssignment, ClusterParams, Distance};
use crate::error::Result;

/// PAM: greedy BUILD of the initial medoids, then the best improving
/// medoid/non-medoid swap per iteration until none improves the cost.
///
/// PAM is deterministic; the seed is recorded but unused.
pub fn kmedoids(data: &[Vec<f64>], params: &ClusterParams) -> Result<ClusterAssignment> {
    params.check(data)?;
    let d = distance_matrix(data, Distance::L1)?;
    let n = data.len();
    let k = params.k;

    let cost_of = |medoids: &[usize]| -> f64 {
        (0..n).map(|i| medoids.iter().map(|&m| d[i][m]).fold(f64::INFINITY, f64::min)).sum()
    };

    // BUILD
    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    while medoids.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for c in 0..n {
            if medoids.contains(&c) {
                continue;
            }
            medoids.push(c);
            let cost = cost_of(&medoids);
            medoids.pop();
            if best.is_none_or(|(_, b)| cost < b) {
                best = Some((c, cost));
            }
        }
        medoids.push(best.expect("k <= n").0);
    }

    // SWAP
    let mut cost = cost_of(&medoids);
    let mut cost_trace = vec![cost];
    let mut iterations = 0;
    while iterations < params.max_iters {
        let mut best: Option<(usize, usize, f64)> = None;
        for slot in 0..k {
            for o in 0..n {
                if medoids.contains(&o) {
                    continue;
                }
                let old = medoids[slot];
                medoids[slot] = o;
                let c = cost_of(&medoids);
                medoids[slot] = old;
                if c < best.map_or(cost, |b| b.2) {
                    best = Some((slot, o, c));
                }
            }
        }
        let Some((slot, o, c)) = best else { break };
        // stop on improvements lost in rounding noise
        if c >= cost - 1e-12 * cost.abs().max(1.0) {
            break;
        }
        medoids[slot] = o;
        cost = c;
        cost_trace.push(cost);
        iterations += 1;
    }

    let labels: Vec<usize> = (0..n)
        .map(|i| {
            let mut best = (0, f64::INFINITY);
            for (j, &m) in medoids.iter().enumerate() {
                if d[i][m] < best.1 {
                    best = (j, d[i][m]);
                }
            }
            best.0
        })
        .collect();
    Ok(ClusterAssignment {
        algorithm: Algorithm::KMedoids,
        k,
        labels,
        centroids: medoids.iter().map(|&m| data[m].clone()).collect(),
        iterations,
        seed: params.seed,
        cost_trace,
        cost,
        zero_variance: 0,
    })
}
