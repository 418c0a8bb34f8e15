//! Random forest regression built from CART variance-reduction trees.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng::{substream, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    /// Features tried per split; ⌈d/3⌉ when `None`.
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    pub min_samples_split: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { trees: 30, max_depth: 10, mtry: None, bootstrap: true, min_samples_split: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

struct Grower<'a> {
    x: &'a DMatrix<f64>,
    y: &'a [f64],
    mtry: usize,
    params: &'a ForestParams,
    rng: StreamRng,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let n = idx.len() as f64;
        let (sum, sumsq) = idx.iter().fold((0.0, 0.0), |(s, q), &i| (s + self.y[i], q + self.y[i] * self.y[i]));
        let mean = sum / n;
        let sse = sumsq - sum * sum / n;
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(mean));
        if depth >= self.params.max_depth || idx.len() < self.params.min_samples_split || !(sse > 1e-12 * sumsq) {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(idx, sum, sse) else {
            return id;
        };
        let mut cut = 0;
        for i in 0..idx.len() {
            if self.x[(idx[i], feature)] <= threshold {
                idx.swap(i, cut);
                cut += 1;
            }
        }
        let (lo, hi) = idx.split_at_mut(cut);
        let left = self.grow(lo, depth + 1);
        let right = self.grow(hi, depth + 1);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }

    /// Feature and midpoint threshold with the largest SSE reduction.
    fn best_split(&mut self, idx: &[usize], sum: f64, sse: f64) -> Option<(usize, f64)> {
        let d = self.x.ncols();
        let n = idx.len();
        let features = sample(&mut self.rng, d, self.mtry.min(d));
        let mut best: Option<(f64, usize, f64)> = None;
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
        for f in features.iter() {
            pairs.clear();
            pairs.extend(idx.iter().map(|&i| (self.x[(i, f)], self.y[i])));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (mut ls, mut lq) = (0.0, 0.0);
            let sumsq_total = sse + sum * sum / n as f64;
            for k in 0..n - 1 {
                ls += pairs[k].1;
                lq += pairs[k].1 * pairs[k].1;
                if pairs[k].0 == pairs[k + 1].0 {
                    continue;
                }
                let nl = (k + 1) as f64;
                let nr = (n - k - 1) as f64;
                let rs = sum - ls;
                let rq = sumsq_total - lq;
                let child = (lq - ls * ls / nl) + (rq - rs * rs / nr);
                let gain = sse - child;
                if gain > 1e-12 * sse && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, f, 0.5 * (pairs[k].0 + pairs[k + 1].0)));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

impl Tree {
    pub fn fit(x: &DMatrix<f64>, y: &[f64], params: &ForestParams, mtry: usize, mut rng: StreamRng) -> Self {
        let rows = x.nrows();
        let mut idx: Vec<usize> = if params.bootstrap {
            (0..rows).map(|_| rng.random_range(0..rows)).collect()
        } else {
            (0..rows).collect()
        };
        let mut grower = Grower { x, y, mtry, params, rng, nodes: Vec::new() };
        grower.grow(&mut idx, 0);
        Self { nodes: grower.nodes }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf(v) => return v,
                Node::Split { feature, threshold, left, right } => {
                    id = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Mean of the tree predictions.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.tree_predictions(x).iter().sum::<f64>() / self.trees.len() as f64
    }

    pub fn tree_predictions(&self, x: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict(x)).collect()
    }

    /// One forest per column of `y`. Tree `b` of target `j` uses stream
    /// `j·trees + b`, so the result does not depend on `exec`.
    pub fn fit_per_target(
        x: &DMatrix<f64>,
        y: &DMatrix<f64>,
        params: &ForestParams,
        seed: u64,
        exec: Exec,
    ) -> Result<Vec<Forest>> {
        if params.trees == 0 || params.max_depth == 0 || params.min_samples_split < 2 {
            return Err(Error::InvalidParameter("forest needs trees ≥ 1, depth ≥ 1, min split ≥ 2".into()));
        }
        if x.nrows() == 0 || x.nrows() != y.nrows() {
            return Err(Error::LengthMismatch { left: x.nrows(), right: y.nrows() });
        }
        let d = x.ncols();
        let mtry = params.mtry.unwrap_or(d.div_ceil(3)).clamp(1, d.max(1));
        let targets: Vec<Vec<f64>> = (0..y.ncols()).map(|j| y.column(j).iter().copied().collect()).collect();
        let b = params.trees;
        let mut trees = exec
            .map_indexed(targets.len() * b, |job| {
                Tree::fit(x, &targets[job / b], params, mtry, substream(seed, "forest", job as u64))
            })
            .into_iter();
        Ok((0..targets.len()).map(|_| Forest { trees: trees.by_ref().take(b).collect() }).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn single_tree(depth: usize) -> ForestParams {
        ForestParams { trees: 1, max_depth: depth, mtry: None, bootstrap: false, min_samples_split: 2 }
    }

    #[test]
    fn stump_on_two_points_is_a_step() {
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let y = DMatrix::from_row_slice(2, 1, &[2.0, 10.0]);
        let f = &Forest::fit_per_target(&x, &y, &single_tree(1), 0, Exec::Sequential).unwrap()[0];
        assert_eq!(f.predict(&[-3.0]), 2.0);
        assert_eq!(f.predict(&[0.49]), 2.0);
        assert_eq!(f.predict(&[0.51]), 10.0);
        assert_eq!(f.trees[0].depth(), 1);
    }

    /// Brute force: the stump must pick the split minimising the summed
    /// child SSE over every feature and every midpoint.
    #[test]
    fn stump_matches_exhaustive_search() {
        let mut rng = substream(3, "stump", 0);
        let x = DMatrix::from_fn(25, 3, |_, _| rng.random::<f64>());
        let yv: Vec<f64> = (0..25).map(|i| x[(i, 1)].powi(2) + 0.1 * x[(i, 2)]).collect();
        let y = DMatrix::from_column_slice(25, 1, &yv);
        let params = ForestParams { mtry: Some(3), ..single_tree(1) };
        let f = &Forest::fit_per_target(&x, &y, &params, 0, Exec::Sequential).unwrap()[0];

        let sse = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|a| (a - m).powi(2)).sum::<f64>()
        };
        let mut best = (f64::INFINITY, 0, 0.0);
        for feat in 0..3 {
            let mut vals: Vec<f64> = (0..25).map(|i| x[(i, feat)]).collect();
            vals.sort_by(f64::total_cmp);
            for w in vals.windows(2) {
                let t = 0.5 * (w[0] + w[1]);
                let (l, r): (Vec<usize>, Vec<usize>) = (0..25).partition(|&i| x[(i, feat)] <= t);
                let lv: Vec<f64> = l.iter().map(|&i| yv[i]).collect();
                let rv: Vec<f64> = r.iter().map(|&i| yv[i]).collect();
                let total = sse(&lv) + sse(&rv);
                if total < best.0 {
                    best = (total, feat, t);
                }
            }
        }
        let (_, feat, t) = best;
        let mean = |s: &[usize]| s.iter().map(|&i| yv[i]).sum::<f64>() / s.len() as f64;
        let (l, r): (Vec<usize>, Vec<usize>) = (0..25).partition(|&i| x[(i, feat)] <= t);
        for i in 0..25 {
            let expected = if x[(i, feat)] <= t { mean(&l) } else { mean(&r) };
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            assert!((f.predict(&row) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_target_predicts_constant() {
        let mut rng = substream(1, "const", 0);
        let x = DMatrix::from_fn(40, 4, |_, _| rng.random::<f64>());
        let y = DMatrix::from_element(40, 1, 3.25);
        let f = &Forest::fit_per_target(&x, &y, &ForestParams::default(), 7, Exec::Sequential).unwrap()[0];
        for i in 0..40 {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            assert_eq!(f.predict(&row), 3.25);
        }
    }

    #[test]
    fn prediction_is_mean_of_trees_and_depth_is_bounded() {
        let mut rng = substream(2, "mean", 0);
        let x = DMatrix::from_fn(200, 5, |_, _| rng.random::<f64>());
        let y = DMatrix::from_fn(200, 2, |i, j| x[(i, j)] * 3.0 + x[(i, 4)]);
        let params = ForestParams { max_depth: 4, ..Default::default() };
        let forests = Forest::fit_per_target(&x, &y, &params, 5, Exec::Parallel).unwrap();
        assert_eq!(forests.len(), 2);
        for f in &forests {
            assert_eq!(f.trees.len(), 30);
            assert!(f.trees.iter().all(|t| t.depth() <= 4));
            let row = [0.3, 0.6, 0.1, 0.9, 0.5];
            let each = f.tree_predictions(&row);
            assert_eq!(f.predict(&row), each.iter().sum::<f64>() / 30.0);
        }
    }

    #[test]
    fn more_trees_reduce_rmse_spread() {
        let mut rng = substream(4, "spread", 0);
        let x = DMatrix::from_fn(150, 3, |_, _| rng.random::<f64>());
        let noise: Vec<f64> = (0..150).map(|_| rng.random::<f64>() - 0.5).collect();
        let y = DMatrix::from_fn(150, 1, |i, _| (6.0 * x[(i, 0)]).sin() + x[(i, 1)] + noise[i]);
        let (train_x, test_x) = (x.rows(0, 100).into_owned(), x.rows(100, 50).into_owned());
        let (train_y, test_y) = (y.rows(0, 100).into_owned(), y.rows(100, 50).into_owned());
        let spread = |trees: usize| {
            let rmses: Vec<f64> = (0..12)
                .map(|seed| {
                    let params = ForestParams { trees, ..Default::default() };
                    let f = &Forest::fit_per_target(&train_x, &train_y, &params, seed, Exec::Sequential).unwrap()[0];
                    let se: f64 = (0..50)
                        .map(|i| {
                            let row: Vec<f64> = test_x.row(i).iter().copied().collect();
                            (f.predict(&row) - test_y[(i, 0)]).powi(2)
                        })
                        .sum();
                    (se / 50.0).sqrt()
                })
                .collect();
            let m = rmses.iter().sum::<f64>() / 12.0;
            rmses.iter().map(|r| (r - m).powi(2)).sum::<f64>() / 12.0
        };
        let (v1, v5, v30) = (spread(1), spread(5), spread(30));
        assert!(v1 >= v5 && v5 >= v30, "{v1} {v5} {v30}");
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let x = DMatrix::zeros(3, 1);
        let y = DMatrix::zeros(3, 1);
        let params = ForestParams { trees: 0, ..Default::default() };
        assert!(Forest::fit_per_target(&x, &y, &params, 0, Exec::Sequential).is_err());
    }
}
