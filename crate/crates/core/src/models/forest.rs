//! Random forest of unpruned variance-reduction regression trees.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::dataset::{FeatureMatrix, Target};
use crate::exec::Execution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features examined per node; `None` means ⌈d/3⌉.
    pub max_features: Option<usize>,
    /// Fit each tree on a bootstrap resample. Disabling it makes every tree
    /// see the full training set in order.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig { n_trees: 100, max_features: None, bootstrap: true, seed: 1 }
    }
}

impl ForestConfig {
    pub fn features_per_node(&self, dim: usize) -> usize {
        self.max_features.unwrap_or(dim.div_ceil(3)).clamp(1, dim.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { value: f64 },
    /// Rows with `x[feature] <= threshold` go to `left`.
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub seed: u64,
    /// Root is node 0.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature as usize] <= threshold { left as usize } else { right as usize };
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub target: Target,
    pub input_dim: usize,
    pub max_features: usize,
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }

    /// Every split references a real feature and in-range children, and
    /// every leaf is finite.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.trees.is_empty() {
            return Err(ModelError::Contract("forest has no trees".into()));
        }
        for tree in &self.trees {
            if tree.nodes.is_empty() {
                return Err(ModelError::Contract("empty tree".into()));
            }
            for node in &tree.nodes {
                let ok = match *node {
                    Node::Leaf { value } => value.is_finite(),
                    Node::Split { feature, threshold, left, right } => {
                        (feature as usize) < self.input_dim
                            && threshold.is_finite()
                            && (left as usize) < tree.nodes.len()
                            && (right as usize) < tree.nodes.len()
                    }
                };
                if !ok {
                    return Err(ModelError::Contract("malformed tree node".into()));
                }
            }
        }
        Ok(())
    }
}

struct Grower<'a> {
    x: &'a FeatureMatrix,
    y: &'a [f64],
    max_features: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    features: Vec<usize>,
    scratch: Vec<(f64, f64)>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    sse: f64,
}

impl Grower<'_> {
    fn leaf(&mut self, rows: &[usize]) -> u32 {
        let value = rows.iter().map(|&i| self.y[i]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(Node::Leaf { value });
        (self.nodes.len() - 1) as u32
    }

    /// Lowest summed within-child squared error over the sampled features.
    /// Features that are constant on `rows` are skipped and do not count
    /// toward the per-node budget.
    fn best_split(&mut self, rows: &[usize], centre: f64) -> Option<BestSplit> {
        self.features.shuffle(&mut self.rng);
        let mut best: Option<BestSplit> = None;
        let mut examined = 0;
        for fi in 0..self.features.len() {
            if examined == self.max_features {
                break;
            }
            let f = self.features[fi];
            self.scratch.clear();
            self.scratch.extend(rows.iter().map(|&i| (self.x.row(i)[f], self.y[i] - centre)));
            self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
            if self.scratch[0].0 == self.scratch[self.scratch.len() - 1].0 {
                continue;
            }
            examined += 1;
            let n = self.scratch.len() as f64;
            let (total, total_sq) = self.scratch.iter().fold((0.0, 0.0), |(s, q), &(_, y)| (s + y, q + y * y));
            let (mut left, mut left_sq) = (0.0, 0.0);
            for k in 0..self.scratch.len() - 1 {
                let (v, y) = self.scratch[k];
                left += y;
                left_sq += y * y;
                let next = self.scratch[k + 1].0;
                if next == v {
                    continue;
                }
                let nl = (k + 1) as f64;
                let nr = n - nl;
                let right = total - left;
                let sse = (left_sq - left * left / nl) + (total_sq - left_sq - right * right / nr);
                if best.as_ref().is_none_or(|b| sse < b.sse) {
                    let mut threshold = v + (next - v) / 2.0;
                    // guard against midpoint rounding up onto the larger value
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some(BestSplit { feature: f, threshold, sse });
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: &mut [usize]) -> u32 {
        if rows.len() < 2 {
            return self.leaf(rows);
        }
        let first = self.y[rows[0]];
        if rows.iter().all(|&i| self.y[i] == first) {
            return self.leaf(rows);
        }
        let centre = rows.iter().map(|&i| self.y[i]).sum::<f64>() / rows.len() as f64;
        let Some(split) = self.best_split(rows, centre) else {
            return self.leaf(rows);
        };
        let (x, f, t) = (self.x, split.feature, split.threshold);
        let mut boundary = 0;
        for k in 0..rows.len() {
            if x.row(rows[k])[f] <= t {
                rows.swap(k, boundary);
                boundary += 1;
            }
        }
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { value: f64::NAN });
        let (l, r) = rows.split_at_mut(boundary);
        let left = self.grow(l);
        let right = self.grow(r);
        self.nodes[at] = Node::Split { feature: f as u32, threshold: t, left, right };
        at as u32
    }
}

fn fit_tree(x: &FeatureMatrix, y: &[f64], max_features: usize, bootstrap: bool, seed: u64) -> Tree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<usize> = if bootstrap {
        (0..x.rows).map(|_| rng.random_range(0..x.rows)).collect()
    } else {
        (0..x.rows).collect()
    };
    let mut grower = Grower {
        x,
        y,
        max_features,
        rng,
        nodes: Vec::new(),
        features: (0..x.dim).collect(),
        scratch: Vec::with_capacity(rows.len()),
    };
    grower.grow(&mut rows);
    Tree { seed, nodes: grower.nodes }
}

/// Fits `n_trees` trees, each from its own seed drawn from the master seed,
/// so results do not depend on the execution mode.
pub fn fit_forest_matrix(
    x: &FeatureMatrix,
    y: &[f64],
    target: Target,
    config: &ForestConfig,
    exec: Execution,
) -> Result<ForestModel, ModelError> {
    if x.rows < 2 {
        return Err(ModelError::InsufficientData { needed: 2, got: x.rows });
    }
    if y.len() != x.rows {
        return Err(ModelError::Contract(format!("{} targets for {} rows", y.len(), x.rows)));
    }
    if config.n_trees == 0 {
        return Err(ModelError::Contract("a forest needs at least one tree".into()));
    }
    if x.values.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(ModelError::Contract("non-finite training values".into()));
    }
    let max_features = config.features_per_node(x.dim);
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let seeds: Vec<u64> = (0..config.n_trees).map(|_| master.random()).collect();
    let trees = exec.map(&seeds, |&s| fit_tree(x, y, max_features, config.bootstrap, s));
    Ok(ForestModel { target, input_dim: x.dim, max_features, trees })
}
