//! Random-forest regressor used as the acquisition surrogate.
//!
//! Each tree is a CART regressor grown on a bootstrap resample with
//! squared-error splits and no depth limit. The forest reports the mean and
//! the population standard deviation of the per-tree predictions.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub min_samples_leaf: usize,
    /// Fraction of the input dimensions tried at each split.
    pub max_features: f64,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            min_samples_leaf: 3,
            max_features: 1.0,
            bootstrap: true,
            seed: 0,
        }
    }
}

/// Mean and spread of the forest at one input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TreeEnsembleRegressor {
    params: ForestParams,
    trees: Vec<Tree>,
    dim: usize,
}

impl TreeEnsembleRegressor {
    pub fn new(params: ForestParams) -> Self {
        assert!(params.n_trees >= 1, "forest needs at least one tree");
        assert!(params.min_samples_leaf >= 1, "min_samples_leaf must be positive");
        Self {
            params,
            trees: Vec::new(),
            dim: 0,
        }
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn is_fitted(&self) -> bool {
        !self.trees.is_empty()
    }

    /// Refits every tree from scratch.
    pub fn fit<X: AsRef<[f64]>>(&mut self, x: &[X], y: &[f64]) -> Result<()> {
        if x.is_empty() {
            return Err(Error::EmptyInput("surrogate training set"));
        }
        if x.len() != y.len() {
            return Err(Error::InvalidInput(format!("{} inputs but {} targets", x.len(), y.len())));
        }
        if let Some(bad) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("target {bad} is not finite")));
        }
        let dim = x[0].as_ref().len();
        if x.iter().any(|row| row.as_ref().len() != dim) {
            return Err(Error::InvalidData("ragged surrogate inputs".into()));
        }
        let rows: Vec<&[f64]> = x.iter().map(|r| r.as_ref()).collect();
        let n_features = ((self.params.max_features * dim as f64).ceil() as usize).clamp(1, dim.max(1));

        let mut master = ChaCha8Rng::seed_from_u64(self.params.seed);
        let mut trees = Vec::with_capacity(self.params.n_trees);
        for _ in 0..self.params.n_trees {
            let mut rng = ChaCha8Rng::seed_from_u64(master.gen());
            let sample: Vec<usize> = if self.params.bootstrap {
                (0..rows.len()).map(|_| rng.gen_range(0..rows.len())).collect()
            } else {
                (0..rows.len()).collect()
            };
            let grower = Grower {
                rows: &rows,
                y,
                dim,
                n_features,
                min_leaf: self.params.min_samples_leaf,
            };
            trees.push(grower.grow(sample, &mut rng));
        }
        self.trees = trees;
        self.dim = dim;
        Ok(())
    }

    pub fn predict_one(&self, x: &[f64]) -> Result<Prediction> {
        if !self.is_fitted() {
            return Err(Error::NotFitted);
        }
        if x.len() != self.dim {
            return Err(Error::Shape {
                expected: format!("{} features", self.dim),
                actual: format!("{} features", x.len()),
            });
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let preds: Vec<f64> = self
            .trees
            .iter()
            .map(|t| {
                let p = t.predict(x);
                lo = lo.min(p);
                hi = hi.max(p);
                sum += p;
                p
            })
            .collect();
        if lo == hi {
            return Ok(Prediction { mean: lo, std: 0.0 });
        }
        let n = preds.len() as f64;
        let mean = (sum / n).clamp(lo, hi);
        let var = preds.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n;
        Ok(Prediction {
            mean,
            std: var.max(0.0).sqrt(),
        })
    }

    pub fn predict<X: AsRef<[f64]>>(&self, x: &[X]) -> Result<Vec<Prediction>> {
        x.iter().map(|row| self.predict_one(row.as_ref())).collect()
    }
}

struct Grower<'a> {
    rows: &'a [&'a [f64]],
    y: &'a [f64],
    dim: usize,
    n_features: usize,
    min_leaf: usize,
}

struct SplitCandidate {
    feature: usize,
    threshold: f64,
    score: f64,
}

/// Row indices of one node, sorted once per feature.
type Orders = Vec<Vec<usize>>;

impl Grower<'_> {
    fn grow(&self, sample: Vec<usize>, rng: &mut ChaCha8Rng) -> Tree {
        let orders: Orders = (0..self.dim)
            .map(|f| {
                let mut o = sample.clone();
                o.sort_by(|&a, &b| self.rows[a][f].total_cmp(&self.rows[b][f]));
                o
            })
            .collect();
        let mut nodes = vec![Node::Leaf(0.0)];
        let mut stack = vec![(0usize, orders)];
        while let Some((slot, orders)) = stack.pop() {
            match self.best_split(&orders, rng) {
                Some(split) => {
                    let goes_left = |i: usize| self.rows[i][split.feature] <= split.threshold;
                    let (l, r): (Orders, Orders) = orders
                        .into_iter()
                        .map(|o| o.into_iter().partition(|&i| goes_left(i)))
                        .unzip();
                    let left = nodes.len();
                    nodes.push(Node::Leaf(0.0));
                    nodes.push(Node::Leaf(0.0));
                    nodes[slot] = Node::Split {
                        feature: split.feature,
                        threshold: split.threshold,
                        left,
                        right: left + 1,
                    };
                    stack.push((left + 1, r));
                    stack.push((left, l));
                }
                None => nodes[slot] = Node::Leaf(self.mean(&orders[0])),
            }
        }
        Tree { nodes }
    }

    fn mean(&self, idx: &[usize]) -> f64 {
        let sum: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let lo = idx.iter().map(|&i| self.y[i]).fold(f64::INFINITY, f64::min);
        let hi = idx.iter().map(|&i| self.y[i]).fold(f64::NEG_INFINITY, f64::max);
        (sum / idx.len() as f64).clamp(lo, hi)
    }

    fn best_split(&self, orders: &Orders, rng: &mut ChaCha8Rng) -> Option<SplitCandidate> {
        let idx = &orders[0];
        let n = idx.len();
        if n < 2 * self.min_leaf {
            return None;
        }
        let first = self.y[idx[0]];
        if idx.iter().all(|&i| self.y[i] == first) {
            return None;
        }
        let total: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let parent_score = total * total / n as f64;

        let features: Vec<usize> = if self.n_features >= self.dim {
            (0..self.dim).collect()
        } else {
            let mut f = index::sample(rng, self.dim, self.n_features).into_vec();
            f.sort_unstable();
            f
        };

        let mut best: Option<SplitCandidate> = None;
        for feature in features {
            let order = &orders[feature];
            let mut left_sum = 0.0;
            for k in 1..n {
                left_sum += self.y[order[k - 1]];
                if k < self.min_leaf || n - k < self.min_leaf {
                    continue;
                }
                let lo = self.rows[order[k - 1]][feature];
                let hi = self.rows[order[k]][feature];
                if lo >= hi {
                    continue;
                }
                let right_sum = total - left_sum;
                // maximizing this is equivalent to minimizing the summed
                // squared error of the two children
                let score = left_sum * left_sum / k as f64 + right_sum * right_sum / (n - k) as f64;
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(SplitCandidate {
                        feature,
                        threshold,
                        score,
                    });
                }
            }
        }
        best.filter(|b| b.score > parent_score * (1.0 + 1e-12) + 1e-300)
    }
}
