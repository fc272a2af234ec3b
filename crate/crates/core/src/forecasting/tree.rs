//! CART regression trees (squared loss) and the two ensembles built on them.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

struct Grow<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    max_depth: usize,
    /// Features examined per split; all when `None`.
    features_per_split: Option<usize>,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl RegressionTree {
    /// Fits a tree to the rows listed in `rows` (repeats allowed, as in a
    /// bootstrap sample).
    pub fn fit(
        x: &[Vec<f64>],
        y: &[f64],
        rows: &[usize],
        max_depth: usize,
        features_per_split: Option<usize>,
        seed: u64,
    ) -> Self {
        let n_features = x.first().map_or(0, Vec::len);
        // one presorted row list per feature; ties keep row order
        let sorted: Vec<Vec<usize>> = (0..n_features)
            .map(|f| {
                let mut r = rows.to_vec();
                r.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
                r
            })
            .collect();
        let mut g = Grow { x, y, max_depth, features_per_split, rng: ChaCha8Rng::seed_from_u64(seed), nodes: Vec::new() };
        g.grow(rows, sorted, 0);
        RegressionTree { nodes: g.nodes }
    }

    pub fn predict(&self, features: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(v) => return *v,
                Node::Split { feature, threshold, left, right } => {
                    i = if features[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

impl Grow<'_> {
    fn grow(&mut self, rows: &[usize], sorted: Vec<Vec<usize>>, depth: usize) -> usize {
        let id = self.nodes.len();
        let mean = rows.iter().map(|&r| self.y[r]).sum::<f64>() / rows.len().max(1) as f64;
        self.nodes.push(Node::Leaf(mean));
        if depth >= self.max_depth || rows.len() < 2 {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(rows, &sorted) else {
            return id;
        };
        let goes_left = |r: usize| self.x[r][feature] <= threshold;
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| goes_left(r));
        let (mut left_sorted, mut right_sorted) = (Vec::with_capacity(sorted.len()), Vec::with_capacity(sorted.len()));
        for list in sorted {
            let (l, r): (Vec<usize>, Vec<usize>) = list.into_iter().partition(|&r| goes_left(r));
            left_sorted.push(l);
            right_sorted.push(r);
        }
        let left = self.grow(&left_rows, left_sorted, depth + 1);
        let right = self.grow(&right_rows, right_sorted, depth + 1);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }

    fn best_split(&mut self, rows: &[usize], sorted: &[Vec<usize>]) -> Option<(usize, f64)> {
        let n_features = sorted.len();
        let mut candidates: Vec<usize> = (0..n_features).collect();
        if let Some(m) = self.features_per_split {
            candidates.shuffle(&mut self.rng);
            candidates.truncate(m.clamp(1, n_features));
            candidates.sort_unstable();
        }
        let n = rows.len() as f64;
        let total: f64 = rows.iter().map(|&r| self.y[r]).sum();
        let base = total * total / n;
        let floor = 1e-12 * rows.iter().map(|&r| self.y[r] * self.y[r]).sum::<f64>().max(1e-300);
        let mut best: Option<(f64, usize, f64)> = None;
        for f in candidates {
            let list = &sorted[f];
            let mut left_sum = 0.0;
            for p in 0..list.len() - 1 {
                left_sum += self.y[list[p]];
                let (a, b) = (self.x[list[p]][f], self.x[list[p + 1]][f]);
                if a == b {
                    continue;
                }
                let nl = (p + 1) as f64;
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / nl + right_sum * right_sum / (n - nl) - base;
                if gain > best.map_or(floor, |b| b.0) {
                    let mid = a + (b - a) / 2.0;
                    best = Some((gain, f, if mid < b { mid } else { a }));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Bagged trees with per-split feature subsampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<RegressionTree>,
}

impl Forest {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[f64],
        n_trees: usize,
        max_depth: usize,
        feature_fraction: f64,
        bootstrap: bool,
        seed: u64,
    ) -> Self {
        let n = y.len();
        let n_features = x.first().map_or(0, Vec::len);
        let per_split = ((feature_fraction * n_features as f64).round() as usize).clamp(1, n_features.max(1));
        let per_split = (per_split < n_features).then_some(per_split);
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let seeds: Vec<u64> = (0..n_trees).map(|_| master.next_u64()).collect();
        let trees = seeds
            .into_par_iter()
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let rows: Vec<usize> =
                    if bootstrap { (0..n).map(|_| rng.random_range(0..n)).collect() } else { (0..n).collect() };
                RegressionTree::fit(x, y, &rows, max_depth, per_split, rng.next_u64())
            })
            .collect();
        Forest { trees }
    }

    pub fn predict(&self, features: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(features)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Stagewise trees on squared-loss residuals with shrinkage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostedTrees {
    pub base: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
}

impl BoostedTrees {
    pub fn fit(x: &[Vec<f64>], y: &[f64], n_trees: usize, max_depth: usize, learning_rate: f64) -> Self {
        let n = y.len();
        let base = y.iter().sum::<f64>() / n.max(1) as f64;
        let mut current = vec![base; n];
        let rows: Vec<usize> = (0..n).collect();
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let residual: Vec<f64> = y.iter().zip(&current).map(|(a, b)| a - b).collect();
            let tree = RegressionTree::fit(x, &residual, &rows, max_depth, None, 0);
            for (c, xi) in current.iter_mut().zip(x) {
                *c += learning_rate * tree.predict(xi);
            }
            trees.push(tree);
        }
        BoostedTrees { base, learning_rate, trees }
    }

    pub fn predict(&self, features: &[f64]) -> f64 {
        self.base + self.learning_rate * self.trees.iter().map(|t| t.predict(features)).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_zero_is_mean() {
        let x = vec![vec![1.0], vec![2.0], vec![3.0]];
        let y = vec![1.0, 2.0, 6.0];
        let f = Forest::fit(&x, &y, 1, 0, 1.0, false, 9);
        assert_eq!(f.predict(&[10.0]), 3.0);
    }

    #[test]
    fn step_function_learned() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| if i < 10 { 0.0 } else { 5.0 }).collect();
        let t = RegressionTree::fit(&x, &y, &(0..20).collect::<Vec<_>>(), 3, None, 0);
        assert_eq!(t.predict(&[3.0]), 0.0);
        assert_eq!(t.predict(&[15.0]), 5.0);
        assert_eq!(t.depth(), 1);
    }

    #[test]
    fn boosting_reduces_error() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let y: Vec<f64> = (0..40).map(|i| (i as f64 * 0.2).sin() * 3.0).collect();
        let sse = |m: &BoostedTrees| x.iter().zip(&y).map(|(xi, yi)| (m.predict(xi) - yi).powi(2)).sum::<f64>();
        assert!(sse(&BoostedTrees::fit(&x, &y, 50, 2, 0.1)) < sse(&BoostedTrees::fit(&x, &y, 5, 2, 0.1)));
    }
}
