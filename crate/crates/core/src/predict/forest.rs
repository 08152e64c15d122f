use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::Regressor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Defaults to ⌈p/3⌉ when unset.
    pub features_per_split: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 300,
            max_depth: None,
            min_samples_leaf: 5,
            features_per_split: None,
            seed: 42,
        }
    }
}

impl ForestParams {
    pub fn mtry(&self, p: usize) -> usize {
        self.features_per_split.unwrap_or(p.div_ceil(3)).clamp(1, p.max(1))
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::InvalidParameter("n_trees must be at least 1".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::InvalidParameter("min_samples_leaf must be at least 1".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::InvalidParameter("max_depth must be at least 1".into()));
        }
        if let Some(m) = self.features_per_split {
            if m < 1 || m > p {
                return Err(Error::InvalidParameter(format!(
                    "features_per_split {m} outside 1..={p}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub params: ForestParams,
    pub n_features: usize,
    /// Reference value subtracted before averaging tree outputs.
    pub offset: f64,
    pub trees: Vec<Tree>,
    /// Normalized impurity importance per feature.
    pub importances: Vec<f64>,
}

impl Regressor for ForestModel {
    fn predict_row(&self, x: &[f64]) -> f64 {
        let s: f64 = self.trees.iter().map(|t| t.predict_row(x) - self.offset).sum();
        self.offset + s / self.trees.len() as f64
    }
}

/// Mean computed around the first value, so a constant sample returns it exactly.
fn shifted_mean(vals: impl Iterator<Item = f64> + Clone) -> f64 {
    let mut it = vals.clone();
    let Some(c) = it.next() else { return 0.0 };
    let (mut s, mut n) = (0.0, 0usize);
    for v in vals {
        s += v - c;
        n += 1;
    }
    c + s / n as f64
}

struct Builder<'a> {
    x: &'a DMatrix<f64>,
    y: &'a [f64],
    params: &'a ForestParams,
    mtry: usize,
    nodes: Vec<Node>,
    importance: Vec<f64>,
    rng: ChaCha8Rng,
}

struct Split {
    feature: usize,
    threshold: f64,
    n_left: usize,
    gain: f64,
}

impl Builder<'_> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let value = shifted_mean(idx.iter().map(|&i| self.y[i]));
        self.nodes.push(Node::Leaf { value });
        self.nodes.len() - 1
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<Split> {
        let m = idx.len();
        let min_leaf = self.params.min_samples_leaf;
        let center = shifted_mean(idx.iter().map(|&i| self.y[i]));
        let total: f64 = idx.iter().map(|&i| self.y[i] - center).sum();
        let p = self.x.ncols();
        let features = sample(&mut self.rng, p, self.mtry);
        let mut best: Option<Split> = None;
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(m);
        for f in features.iter() {
            let col = self.x.column(f);
            pairs.clear();
            pairs.extend(idx.iter().map(|&i| (col[i], self.y[i] - center)));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = 0.0;
            for k in 1..m {
                left += pairs[k - 1].1;
                if k < min_leaf || m - k < min_leaf || pairs[k - 1].0 == pairs[k].0 {
                    continue;
                }
                let right = total - left;
                let gain = left * left / k as f64 + right * right / (m - k) as f64 - total * total / m as f64;
                if gain > best.as_ref().map_or(0.0, |b| b.gain) {
                    let (a, b) = (pairs[k - 1].0, pairs[k].0);
                    let mut threshold = a + (b - a) / 2.0;
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(Split {
                        feature: f,
                        threshold,
                        n_left: k,
                        gain,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let m = idx.len();
        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        let first = self.y[idx[0]];
        let pure = idx.iter().all(|&i| self.y[i] == first);
        if !depth_ok || pure || m < 2 * self.params.min_samples_leaf {
            return self.leaf(idx);
        }
        let Some(split) = self.best_split(idx) else {
            return self.leaf(idx);
        };
        self.importance[split.feature] += split.gain;
        let col = self.x.column(split.feature);
        idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
        debug_assert!(col[idx[split.n_left - 1]] <= split.threshold && col[idx[split.n_left]] > split.threshold);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0 });
        let (l, r) = idx.split_at_mut(split.n_left);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

fn grow_tree(x: &DMatrix<f64>, y: &[f64], params: &ForestParams, t: usize) -> (Tree, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(t as u64);
    let n = y.len();
    let mut idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut b = Builder {
        x,
        y,
        params,
        mtry: params.mtry(x.ncols()),
        nodes: Vec::new(),
        importance: vec![0.0; x.ncols()],
        rng,
    };
    b.grow(&mut idx, 0);
    (Tree { nodes: b.nodes }, b.importance)
}

/// Bagged regression trees with random feature subsets at each split.
pub fn fit_forest(x: &DMatrix<f64>, y: &[f64], params: &ForestParams) -> Result<ForestModel> {
    let (n, p) = (x.nrows(), x.ncols());
    params.validate(p)?;
    if y.len() != n || p == 0 {
        return Err(Error::InvalidParameter("forest input dimensions".into()));
    }
    if n < 2 * params.min_samples_leaf {
        return Err(Error::InsufficientData(format!(
            "{n} rows; need at least {}",
            2 * params.min_samples_leaf
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("forest input".into()));
    }
    let grown: Vec<(Tree, Vec<f64>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| grow_tree(x, y, params, t))
        .collect();
    let mut importances = vec![0.0; p];
    for (_, imp) in &grown {
        importances
            .iter_mut()
            .zip(imp)
            .for_each(|(a, v)| *a += v / params.n_trees as f64);
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        importances.iter_mut().for_each(|v| *v /= total);
    } else {
        importances.iter_mut().for_each(|v| *v = 1.0 / p as f64);
    }
    Ok(ForestModel {
        params: *params,
        n_features: p,
        offset: y[0],
        trees: grown.into_iter().map(|g| g.0).collect(),
        importances,
    })
}
