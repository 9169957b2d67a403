//! Random Forest of CART trees with Gini impurity splits.
//!
//! Used both as a stand-alone discriminative classifier and as the final
//! predictor of the ensemble and hybrid pipelines. Per-tree randomness is
//! derived from `(seed, tree index)`, so parallel and serial builds produce
//! identical forests and a forest with T trees is a prefix of the forest
//! with T + 1 trees under the same seed.

use rand::seq::index::sample as index_sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::ClassLabel;
use crate::error::{Error, Result};
use crate::rng;

/// Probabilities are clamped to this floor before taking logs so a class
/// with zero votes maps to `ln(1e-9)` instead of negative infinity.
pub const PROB_FLOOR: f64 = 1e-9;

/// Feature matrix in column-major storage for fast split search.
#[derive(Debug, Clone)]
pub struct FeatureTable {
    cols: Vec<Vec<f64>>,
    n_rows: usize,
}

impl FeatureTable {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::Dimension("feature table needs rows".to_string()));
        };
        let width = first.len();
        if width == 0 {
            return Err(Error::Dimension("feature table needs columns".to_string()));
        }
        let mut cols = vec![Vec::with_capacity(rows.len()); width];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Dimension(format!(
                    "row {i} has {} features, expected {width}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                cols[j].push(v);
            }
        }
        Ok(FeatureTable {
            cols,
            n_rows: rows.len(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.cols.len()
    }

    fn value(&self, row: usize, feature: usize) -> f64 {
        self.cols[feature][row]
    }
}

/// Best split found by [`cart_split`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

fn gini(pos: f64, neg: f64) -> f64 {
    let total = pos + neg;
    if total == 0.0 {
        return 0.0;
    }
    let p = pos / total;
    let q = neg / total;
    1.0 - p * p - q * q
}

/// Exhaustive Gini split search over `candidates`, restricted to the node
/// rows `rows`. Thresholds are midpoints between consecutive distinct sorted
/// values. Returns `None` when no split reduces impurity (including pure
/// nodes). Equal-gain ties resolve to the lowest feature index, then the
/// lowest threshold.
pub fn cart_split(
    table: &FeatureTable,
    y: &[ClassLabel],
    rows: &[usize],
    candidates: &[usize],
) -> Option<SplitCandidate> {
    let m = rows.len();
    if m < 2 {
        return None;
    }
    let pos_total = rows.iter().filter(|&&r| y[r] == ClassLabel::Pos).count() as f64;
    let neg_total = m as f64 - pos_total;
    let parent = gini(pos_total, neg_total);
    if parent == 0.0 {
        return None;
    }

    let mut best: Option<SplitCandidate> = None;
    let mut order: Vec<(f64, bool)> = Vec::with_capacity(m);
    for &feature in candidates {
        order.clear();
        order.extend(
            rows.iter()
                .map(|&r| (table.value(r, feature), y[r] == ClassLabel::Pos)),
        );
        order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        let mut pos_left = 0.0;
        let mut neg_left = 0.0;
        for i in 0..m - 1 {
            if order[i].1 {
                pos_left += 1.0;
            } else {
                neg_left += 1.0;
            }
            if order[i].0 == order[i + 1].0 {
                continue;
            }
            let left = (i + 1) as f64;
            let right = (m - i - 1) as f64;
            let child_impurity = left / m as f64 * gini(pos_left, neg_left)
                + right / m as f64 * gini(pos_total - pos_left, neg_total - neg_left);
            let gain = parent - child_impurity;
            if gain <= 0.0 {
                continue;
            }
            let threshold = 0.5 * (order[i].0 + order[i + 1].0);
            let better = match best {
                None => true,
                Some(b) => gain > b.gain,
            };
            if better {
                best = Some(SplitCandidate {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

#[derive(Debug, Clone)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        // [pos, neg] training counts reaching this leaf.
        counts: [usize; 2],
    },
}

/// A single CART tree; leaves store class counts.
#[derive(Debug, Clone)]
pub struct CartTree {
    nodes: Vec<Node>,
}

impl CartTree {
    fn build(
        table: &FeatureTable,
        y: &[ClassLabel],
        rows: Vec<usize>,
        feature_subsample: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut nodes = Vec::new();
        Self::grow(table, y, rows, feature_subsample, rng, &mut nodes);
        CartTree { nodes }
    }

    fn grow(
        table: &FeatureTable,
        y: &[ClassLabel],
        rows: Vec<usize>,
        feature_subsample: usize,
        rng: &mut ChaCha8Rng,
        nodes: &mut Vec<Node>,
    ) -> usize {
        // Candidate features are resampled at every node.
        let mut candidates: Vec<usize> =
            index_sample(rng, table.n_features(), feature_subsample).into_vec();
        candidates.sort_unstable();

        let split = cart_split(table, y, &rows, &candidates);
        match split {
            None => {
                let pos = rows.iter().filter(|&&r| y[r] == ClassLabel::Pos).count();
                let idx = nodes.len();
                nodes.push(Node::Leaf {
                    counts: [pos, rows.len() - pos],
                });
                idx
            }
            Some(s) => {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                    .into_iter()
                    .partition(|&r| table.value(r, s.feature) < s.threshold);
                let idx = nodes.len();
                nodes.push(Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left: 0,
                    right: 0,
                });
                let left = Self::grow(table, y, left_rows, feature_subsample, rng, nodes);
                let right = Self::grow(table, y, right_rows, feature_subsample, rng, nodes);
                if let Node::Split {
                    left: l, right: r, ..
                } = &mut nodes[idx]
                {
                    *l = left;
                    *r = right;
                }
                idx
            }
        }
    }

    fn leaf_counts(&self, x: &[f64]) -> [usize; 2] {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return *counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] < *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

/// Bagged CART forest with class-vote probability output.
#[derive(Debug, Clone)]
pub struct Forest {
    trees: Vec<CartTree>,
    n_features: usize,
    pub feature_subsample: usize,
    pub seed: u64,
}

/// Fit `n_trees` CART trees, each on a bootstrap sample of the rows, with a
/// per-split feature subsample of `round(sqrt(F))` (at least 1).
pub fn rf_fit(x: &[Vec<f64>], y: &[ClassLabel], n_trees: usize, seed: u64) -> Result<Forest> {
    if n_trees == 0 {
        return Err(Error::Config("forest needs at least one tree".to_string()));
    }
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "{} feature rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Dimension(
            "forest fit needs at least two samples".to_string(),
        ));
    }
    let pos = y.iter().filter(|&&l| l == ClassLabel::Pos).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::Training(
            "forest fit needs both classes present".to_string(),
        ));
    }
    let table = FeatureTable::from_rows(x)?;
    let feature_subsample =
        ((table.n_features() as f64).sqrt().round() as usize).clamp(1, table.n_features());
    let m = table.n_rows();
    let trees: Vec<CartTree> = (0..n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream_rng(seed, "rf-tree", t as u64);
            let bootstrap: Vec<usize> = (0..m).map(|_| rng.random_range(0..m)).collect();
            CartTree::build(&table, y, bootstrap, feature_subsample, &mut rng)
        })
        .collect();
    Ok(Forest {
        trees,
        n_features: table.n_features(),
        feature_subsample,
        seed,
    })
}

/// `(p_pos, p_neg)` as the average over trees of leaf class proportions.
pub fn rf_predict_proba(forest: &Forest, x: &[f64]) -> Result<(f64, f64)> {
    if x.len() != forest.n_features {
        return Err(Error::Dimension(format!(
            "probe has {} features, forest was fit on {}",
            x.len(),
            forest.n_features
        )));
    }
    let mut p_pos = 0.0;
    for tree in &forest.trees {
        let [pos, neg] = tree.leaf_counts(x);
        let total = (pos + neg) as f64;
        if total > 0.0 {
            p_pos += pos as f64 / total;
        }
    }
    p_pos /= forest.trees.len() as f64;
    Ok((p_pos, 1.0 - p_pos))
}

/// Majority-probability label; ties go to `Pos`.
pub fn rf_predict(forest: &Forest, x: &[f64]) -> Result<ClassLabel> {
    let (p_pos, p_neg) = rf_predict_proba(forest, x)?;
    Ok(if p_pos >= p_neg {
        ClassLabel::Pos
    } else {
        ClassLabel::Neg
    })
}

/// `(ln p_pos, ln p_neg)` with probabilities clamped at [`PROB_FLOOR`].
pub fn rf_predict_log_proba(forest: &Forest, x: &[f64]) -> Result<(f64, f64)> {
    let (p_pos, p_neg) = rf_predict_proba(forest, x)?;
    Ok((p_pos.max(PROB_FLOOR).ln(), p_neg.max(PROB_FLOOR).ln()))
}

impl Forest {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn predict(&self, x: &[f64]) -> Result<ClassLabel> {
        rf_predict(self, x)
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<(f64, f64)> {
        rf_predict_proba(self, x)
    }

    pub fn predict_log_proba(&self, x: &[f64]) -> Result<(f64, f64)> {
        rf_predict_log_proba(self, x)
    }

    /// Fraction of `(x, y)` rows the forest labels correctly.
    pub fn accuracy(&self, x: &[Vec<f64>], y: &[ClassLabel]) -> Result<f64> {
        let mut correct = 0usize;
        for (row, &label) in x.iter().zip(y) {
            if self.predict(row)? == label {
                correct += 1;
            }
        }
        Ok(correct as f64 / x.len() as f64)
    }
}
