//! Random-forest classifier whose averaged leaf proportion serves as a score.
//!
//! Trees use axis-aligned threshold splits chosen by Gini impurity over a
//! random subset of `mtry` features per node, grown on bootstrap resamples.
//! The score of a feature vector is the mean over trees of the `Hp`
//! proportion in the leaf it reaches. It is a similarity score, not a
//! calibrated posterior probability.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{EvidencePair, Hypothesis};
use crate::rng::{derive_stream, Stream};

/// Row-major feature matrix with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<Hypothesis>,
}

impl TrainingSet {
    pub fn new(features: Vec<f64>, n_features: usize, labels: Vec<Hypothesis>) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::InvalidParameter("n_features"));
        }
        if features.len() != n_features * labels.len() {
            return Err(Error::DimensionMismatch {
                field: "features",
                expected: n_features * labels.len(),
                found: features.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        let set = TrainingSet {
            features,
            n_features,
            labels,
        };
        for h in Hypothesis::BOTH {
            if set.count(h) == 0 {
                return Err(Error::EmptyClass(h));
            }
        }
        Ok(set)
    }

    /// Rows are `x` followed by `y`.
    pub fn from_pairs(pairs: &[(EvidencePair, Hypothesis)]) -> Result<Self> {
        let n_features = pairs
            .first()
            .map(|(p, _)| p.x.len() + p.y.len())
            .ok_or(Error::EmptyInput("training pairs"))?;
        let mut features = Vec::with_capacity(n_features * pairs.len());
        let mut labels = Vec::with_capacity(pairs.len());
        for (p, h) in pairs {
            if p.x.len() + p.y.len() != n_features {
                return Err(Error::DimensionMismatch {
                    field: "pair",
                    expected: n_features,
                    found: p.x.len() + p.y.len(),
                });
            }
            p.write_features(&mut features);
            labels.push(*h);
        }
        Self::new(features, n_features, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn count(&self, h: Hypothesis) -> usize {
        self.labels.iter().filter(|&&l| l == h).count()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn label(&self, i: usize) -> Hypothesis {
        self.labels[i]
    }

    #[inline]
    fn value(&self, row: usize, feature: usize) -> f64 {
        self.features[row * self.n_features + feature]
    }

    #[inline]
    fn is_hp(&self, row: usize) -> bool {
        self.labels[row] == Hypothesis::Hp
    }

    /// The same rows repeated `k` times.
    pub fn repeated(&self, k: usize) -> TrainingSet {
        let mut features = Vec::with_capacity(self.features.len() * k);
        let mut labels = Vec::with_capacity(self.labels.len() * k);
        for _ in 0..k {
            features.extend_from_slice(&self.features);
            labels.extend_from_slice(&self.labels);
        }
        TrainingSet {
            features,
            n_features: self.n_features,
            labels,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub mtry: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub seed: u64,
}

impl ForestParams {
    /// 300 trees, `mtry = ceil(sqrt(n_features))`, depth 20, leaves of at least 5.
    pub fn defaults(n_features: usize, seed: u64) -> Self {
        ForestParams {
            n_trees: 300,
            mtry: (libm::ceil(libm::sqrt(n_features as f64)) as usize).max(1),
            max_depth: 20,
            min_leaf: 5,
            seed,
        }
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidParameter("n_trees"));
        }
        if self.mtry == 0 || self.mtry > n_features {
            return Err(Error::InvalidParameter("mtry"));
        }
        if self.max_depth == 0 {
            return Err(Error::InvalidParameter("max_depth"));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidParameter("min_leaf"));
        }
        Ok(())
    }
}

/// Marks a leaf in [`DecisionTree::feature`] and the child arrays.
pub const LEAF: i32 = -1;

/// Binary tree in flat arrays; node 0 is the root.
///
/// Internal nodes send `v[feature] <= threshold` to `left`. Every node keeps
/// the `Hp` proportion of its training rows in `value`; for a leaf that is
/// the prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub feature: Vec<i32>,
    pub threshold: Vec<f64>,
    pub left: Vec<i32>,
    pub right: Vec<i32>,
    pub value: Vec<f64>,
}

struct Grower<'a> {
    data: &'a TrainingSet,
    params: &'a ForestParams,
    rng: &'a mut Stream,
    tree: DecisionTree,
    feature_pool: Vec<usize>,
    scratch: Vec<(f64, bool)>,
}

struct Split {
    feature: usize,
    threshold: f64,
}

impl Grower<'_> {
    fn push_node(&mut self, value: f64) -> usize {
        self.tree.feature.push(LEAF);
        self.tree.threshold.push(0.0);
        self.tree.left.push(LEAF);
        self.tree.right.push(LEAF);
        self.tree.value.push(value);
        self.tree.value.len() - 1
    }

    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let n = rows.len();
        let hp = rows.iter().filter(|&&r| self.data.is_hp(r)).count();
        let node = self.push_node(hp as f64 / n as f64);
        let pure = hp == 0 || hp == n;
        if pure || depth >= self.params.max_depth || n < 2 * self.params.min_leaf {
            return node;
        }
        let Some(split) = self.best_split(rows, hp) else {
            return node;
        };
        let mid = partition(rows, |&r| self.data.value(r, split.feature) <= split.threshold);
        let (lo, hi) = rows.split_at_mut(mid);
        let left = self.grow(lo, depth + 1);
        let right = self.grow(hi, depth + 1);
        self.tree.feature[node] = split.feature as i32;
        self.tree.threshold[node] = split.threshold;
        self.tree.left[node] = left as i32;
        self.tree.right[node] = right as i32;
        node
    }

    /// Maximizes `sum_children sum_classes count^2 / child_size`, which is
    /// equivalent to minimizing size-weighted Gini impurity.
    fn best_split(&mut self, rows: &[usize], hp_total: usize) -> Option<Split> {
        let p = self.data.n_features;
        // partial Fisher-Yates draw of mtry features
        for i in 0..self.params.mtry {
            let j = self.rng.random_range(i..p);
            self.feature_pool.swap(i, j);
        }
        let n = rows.len();
        let min_leaf = self.params.min_leaf;
        let mut best: Option<(f64, Split)> = None;
        for k in 0..self.params.mtry {
            let f = self.feature_pool[k];
            self.scratch.clear();
            self.scratch
                .extend(rows.iter().map(|&r| (self.data.value(r, f), self.data.is_hp(r))));
            self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_hp = 0usize;
            for i in 0..n - 1 {
                if self.scratch[i].1 {
                    left_hp += 1;
                }
                let nl = i + 1;
                let nr = n - nl;
                if nl < min_leaf {
                    continue;
                }
                if nr < min_leaf {
                    break;
                }
                let (a, b) = (self.scratch[i].0, self.scratch[i + 1].0);
                if a == b {
                    continue;
                }
                let (lh, ld) = (left_hp as f64, (nl - left_hp) as f64);
                let rh = (hp_total - left_hp) as f64;
                let rd = (nr - (hp_total - left_hp)) as f64;
                let crit = (lh * lh + ld * ld) / nl as f64 + (rh * rh + rd * rd) / nr as f64;
                if best.as_ref().is_none_or(|(c, _)| crit > *c) {
                    let mut threshold = 0.5 * (a + b);
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some((crit, Split { feature: f, threshold }));
                }
            }
        }
        best.map(|(_, s)| s)
    }
}

/// Stable two-way partition; returns the number of rows satisfying `pred`.
fn partition<F: Fn(&usize) -> bool>(rows: &mut [usize], pred: F) -> usize {
    let mut yes: Vec<usize> = Vec::with_capacity(rows.len());
    let mut no: Vec<usize> = Vec::new();
    for &r in rows.iter() {
        if pred(&r) {
            yes.push(r);
        } else {
            no.push(r);
        }
    }
    let mid = yes.len();
    rows[..mid].copy_from_slice(&yes);
    rows[mid..].copy_from_slice(&no);
    mid
}

impl DecisionTree {
    /// Grows a tree on the given row multiset (duplicates allowed).
    pub fn grow(
        data: &TrainingSet,
        rows: &mut [usize],
        params: &ForestParams,
        rng: &mut Stream,
    ) -> DecisionTree {
        assert!(!rows.is_empty(), "cannot grow a tree on zero rows");
        let mut g = Grower {
            data,
            params,
            rng,
            tree: DecisionTree {
                feature: Vec::new(),
                threshold: Vec::new(),
                left: Vec::new(),
                right: Vec::new(),
                value: Vec::new(),
            },
            feature_pool: (0..data.n_features).collect(),
            scratch: Vec::with_capacity(rows.len()),
        };
        g.grow(rows, 0);
        g.tree
    }

    /// A single leaf with the given proportion.
    pub fn leaf(value: f64) -> DecisionTree {
        DecisionTree {
            feature: vec![LEAF],
            threshold: vec![0.0],
            left: vec![LEAF],
            right: vec![LEAF],
            value: vec![value],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.value.len()
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.feature[node] == LEAF
    }

    /// Index of the leaf reached by `features`.
    pub fn leaf_index(&self, features: &[f64]) -> usize {
        let mut node = 0usize;
        while self.feature[node] != LEAF {
            let f = self.feature[node] as usize;
            node = if features[f] <= self.threshold[node] {
                self.left[node] as usize
            } else {
                self.right[node] as usize
            };
        }
        node
    }

    pub fn predict(&self, features: &[f64]) -> f64 {
        self.value[self.leaf_index(features)]
    }

    /// Structural checks for trees read from outside: array lengths agree,
    /// children point forward, values lie in `[0, 1]`.
    pub fn check(&self, n_features: usize) -> Result<()> {
        let n = self.value.len();
        if n == 0
            || self.feature.len() != n
            || self.threshold.len() != n
            || self.left.len() != n
            || self.right.len() != n
        {
            return Err(Error::InvalidParameter("tree arrays"));
        }
        for i in 0..n {
            if !(0.0..=1.0).contains(&self.value[i]) {
                return Err(Error::InvalidParameter("tree value"));
            }
            if self.feature[i] == LEAF {
                if self.left[i] != LEAF || self.right[i] != LEAF {
                    return Err(Error::InvalidParameter("tree leaf children"));
                }
                continue;
            }
            let f = self.feature[i];
            if f < 0 || f as usize >= n_features {
                return Err(Error::InvalidParameter("tree feature"));
            }
            for c in [self.left[i], self.right[i]] {
                if c <= i as i32 || c as usize >= n {
                    return Err(Error::InvalidParameter("tree children"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub params: ForestParams,
    pub n_features: usize,
    pub trees: Vec<DecisionTree>,
}

/// Grows tree `index` of a forest: its bootstrap resample and feature draws
/// come from a stream derived from `(params.seed, index)`, so trees can be
/// grown in any order or concurrently.
pub fn grow_member(data: &TrainingSet, params: &ForestParams, index: usize) -> DecisionTree {
    let mut rng = derive_stream(params.seed, "forest/tree", index as u64);
    let n = data.len();
    let mut rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    DecisionTree::grow(data, &mut rows, params, &mut rng)
}

impl Forest {
    /// Sequential training. Identical to assembling [`grow_member`] outputs
    /// for `0..n_trees` in index order.
    pub fn train(data: &TrainingSet, params: ForestParams) -> Result<Forest> {
        Self::check_inputs(data, &params)?;
        let trees = (0..params.n_trees)
            .map(|i| grow_member(data, &params, i))
            .collect();
        Ok(Forest {
            params,
            n_features: data.n_features,
            trees,
        })
    }

    pub fn check_inputs(data: &TrainingSet, params: &ForestParams) -> Result<()> {
        params.validate(data.n_features)?;
        for h in Hypothesis::BOTH {
            if data.count(h) == 0 {
                return Err(Error::EmptyClass(h));
            }
        }
        Ok(())
    }

    pub fn from_trees(params: ForestParams, n_features: usize, trees: Vec<DecisionTree>) -> Result<Forest> {
        if trees.is_empty() {
            return Err(Error::EmptyInput("trees"));
        }
        for t in &trees {
            t.check(n_features)?;
        }
        Ok(Forest {
            params,
            n_features,
            trees,
        })
    }

    /// Mean leaf `Hp` proportion over trees, in `[0, 1]`.
    pub fn score(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                field: "features",
                expected: self.n_features,
                found: features.len(),
            });
        }
        let sum: f64 = self.trees.iter().map(|t| t.predict(features)).sum();
        Ok((sum / self.trees.len() as f64).clamp(0.0, 1.0))
    }

    pub fn score_pair(&self, pair: &EvidencePair) -> Result<f64> {
        self.score(&pair.features())
    }
}

/// Free-function form of [`Forest::score`].
pub fn rf_score(f: &Forest, features: &[f64]) -> Result<f64> {
    f.score(features)
}

/// Clamps a classifier score to `[1 / (2 n), 1 - 1 / (2 n)]` so density
/// estimates never see exact 0 or 1.
pub fn clamp_score(s: f64, n_train: usize) -> f64 {
    let eps = 0.5 / n_train.max(1) as f64;
    s.clamp(eps, 1.0 - eps)
}
