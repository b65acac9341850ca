//! Gradient-boosted regression trees over concatenated pair features.
//!
//! A pair `(u, v)` is represented by `z = [x_u ; x_v]` and the model predicts
//! the probability that `u` is preferred. Trees are grown level by level with
//! exact greedy split search on the first and second derivatives of the
//! logistic loss. Training can be continued on new batches; continuation only
//! appends trees.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    pub learning_rate: f64,
    pub max_depth: usize,
    pub l2_lambda: f64,
    /// Minimum number of samples on each side of a split.
    pub min_child: usize,
    pub rounds_warmup: usize,
    pub rounds_increment: usize,
}

impl LearnerConfig {
    pub const DEFAULT_ROUNDS_WARMUP: usize = 500;
    pub const DEFAULT_ROUNDS_INCREMENT: usize = 25;
    pub const DEFAULT_LEARNING_RATE: f64 = 0.1;
    pub const DEFAULT_L2_LAMBDA: f64 = 1.0;

    /// Defaults with the tree depth derived from the dataset's column count.
    pub fn for_columns(p: usize) -> Self {
        Self {
            max_depth: tree_depth_for(p),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate", "must be positive"));
        }
        if self.max_depth == 0 {
            return Err(Error::invalid("max_depth", "must be positive"));
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return Err(Error::invalid("l2_lambda", "must be nonnegative"));
        }
        if self.min_child == 0 {
            return Err(Error::invalid("min_child", "must be positive"));
        }
        Ok(())
    }
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            learning_rate: Self::DEFAULT_LEARNING_RATE,
            max_depth: 3,
            l2_lambda: Self::DEFAULT_L2_LAMBDA,
            min_child: 1,
            rounds_warmup: Self::DEFAULT_ROUNDS_WARMUP,
            rounds_increment: Self::DEFAULT_ROUNDS_INCREMENT,
        }
    }
}

/// `round(sqrt(p))`, half away from zero, at least 1.
pub fn tree_depth_for(p_features: usize) -> usize {
    ((p_features as f64).sqrt().round() as usize).max(1)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Binary cross-entropy of one sample as a function of the raw score.
pub fn logistic_loss(raw: f64, label: u8) -> f64 {
    if label == 1 {
        softplus(-raw)
    } else {
        softplus(raw)
    }
}

/// First and second derivative of [`logistic_loss`] with respect to the raw
/// score.
pub fn gradient_hessian(raw: f64, label: u8) -> (f64, f64) {
    let p = sigmoid(raw);
    (p - f64::from(label), p * (1.0 - p))
}

/// Training pairs as a dense row-major matrix of pair features.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBatch {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<u8>,
}

impl PairBatch {
    pub fn new(dim: usize, features: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if dim == 0 || features.len() != dim * labels.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * labels.len(),
                got: features.len(),
            });
        }
        if labels.iter().any(|l| *l > 1) {
            return Err(Error::invalid("labels", "must be 0 or 1"));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("features", "must be finite"));
        }
        Ok(Self {
            dim,
            features,
            labels,
        })
    }

    /// Concatenates rows `u` and `v` of a dataset for every labeled pair.
    pub fn from_pairs<I>(dataset: &crate::tabular_prep::PreparedDataset, pairs: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, u8)>,
    {
        let dim = 2 * dataset.p();
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (u, v, label) in pairs {
            dataset.pair_features_into(u, v, &mut features);
            labels.push(label);
        }
        Self {
            dim,
            features,
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    #[inline]
    fn value(&self, i: usize, f: usize) -> f64 {
        self.features[i * self.dim + f]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// Samples with `z[feature] < threshold` go left.
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf { weight: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaf_index(&self, z: &[f64]) -> usize {
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                Node::Leaf { .. } => return idx,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if z[feature as usize] < threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(z)] {
            Node::Leaf { weight } => weight,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], idx: usize) -> usize {
            match nodes[idx] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, left as usize).max(walk(nodes, right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn write_bytes(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.nodes.len() as u32).to_le_bytes());
        for node in &self.nodes {
            match *node {
                Node::Leaf { weight } => {
                    out.push(0);
                    out.extend_from_slice(&weight.to_le_bytes());
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    out.push(1);
                    out.extend_from_slice(&feature.to_le_bytes());
                    out.extend_from_slice(&threshold.to_le_bytes());
                    out.extend_from_slice(&left.to_le_bytes());
                    out.extend_from_slice(&right.to_le_bytes());
                }
            }
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_bytes(&mut out);
        out
    }
}

#[derive(Clone, Copy, Default)]
struct SplitCandidate {
    gain: f64,
    feature: usize,
    threshold: f64,
    g_left: f64,
    h_left: f64,
    n_left: usize,
}

#[derive(Clone, Copy, Default)]
struct Scan {
    g: f64,
    h: f64,
    n: usize,
    last: f64,
}

struct OpenNode {
    id: usize,
    g: f64,
    h: f64,
    n: usize,
}

fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    let w = -g / (h + lambda);
    if w.is_finite() {
        w
    } else {
        0.0
    }
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    let denom = h + lambda;
    if denom > 0.0 {
        g * g / denom
    } else {
        0.0
    }
}

/// Per-feature sample order for one training batch, ascending by value with
/// ties by sample index.
struct SortedColumns {
    order: Vec<Vec<u32>>,
}

impl SortedColumns {
    fn new(batch: &PairBatch) -> Self {
        let order = (0..batch.dim)
            .map(|f| {
                let mut idx: Vec<u32> = (0..batch.len() as u32).collect();
                idx.sort_by(|&a, &b| {
                    batch
                        .value(a as usize, f)
                        .total_cmp(&batch.value(b as usize, f))
                });
                idx
            })
            .collect();
        Self { order }
    }
}

/// Grows one tree. On return `position[i]` holds the leaf id of sample `i`.
fn grow_tree(
    batch: &PairBatch,
    sorted: &SortedColumns,
    grad: &[f64],
    hess: &[f64],
    config: &LearnerConfig,
    position: &mut [u32],
) -> RegressionTree {
    let lambda = config.l2_lambda;
    let n = batch.len();
    position.iter_mut().for_each(|p| *p = 0);
    let mut nodes = vec![Node::Leaf { weight: 0.0 }];
    let mut frontier = vec![OpenNode {
        id: 0,
        g: grad.iter().sum(),
        h: hess.iter().sum(),
        n,
    }];
    // Maps node id to its slot in `frontier`, or usize::MAX when closed.
    let mut slot_of: Vec<usize> = vec![0];

    for depth in 0..=config.max_depth {
        if frontier.is_empty() {
            break;
        }
        let mut best = vec![SplitCandidate::default(); frontier.len()];
        if depth < config.max_depth {
            let mut scans = vec![Scan::default(); frontier.len()];
            for (f, order) in sorted.order.iter().enumerate() {
                scans.iter_mut().for_each(|s| *s = Scan::default());
                for &i in order {
                    let i = i as usize;
                    let slot = slot_of[position[i] as usize];
                    if slot == usize::MAX {
                        continue;
                    }
                    let value = batch.value(i, f);
                    let open = &frontier[slot];
                    let scan = &mut scans[slot];
                    if scan.n >= config.min_child
                        && value > scan.last
                        && open.n - scan.n >= config.min_child
                    {
                        let g_r = open.g - scan.g;
                        let h_r = open.h - scan.h;
                        let gain = 0.5
                            * (score(scan.g, scan.h, lambda) + score(g_r, h_r, lambda)
                                - score(open.g, open.h, lambda));
                        if gain > best[slot].gain {
                            let mut threshold = scan.last + (value - scan.last) / 2.0;
                            if threshold <= scan.last {
                                threshold = value;
                            }
                            best[slot] = SplitCandidate {
                                gain,
                                feature: f,
                                threshold,
                                g_left: scan.g,
                                h_left: scan.h,
                                n_left: scan.n,
                            };
                        }
                    }
                    scan.g += grad[i];
                    scan.h += hess[i];
                    scan.n += 1;
                    scan.last = value;
                }
            }
        }

        let mut next = Vec::new();
        for (slot, open) in frontier.iter().enumerate() {
            let cand = best[slot];
            if cand.gain > 0.0 {
                let left = nodes.len();
                nodes.push(Node::Leaf { weight: 0.0 });
                nodes.push(Node::Leaf { weight: 0.0 });
                nodes[open.id] = Node::Split {
                    feature: cand.feature as u32,
                    threshold: cand.threshold,
                    left: left as u32,
                    right: left as u32 + 1,
                };
                next.push(OpenNode {
                    id: left,
                    g: cand.g_left,
                    h: cand.h_left,
                    n: cand.n_left,
                });
                next.push(OpenNode {
                    id: left + 1,
                    g: open.g - cand.g_left,
                    h: open.h - cand.h_left,
                    n: open.n - cand.n_left,
                });
            } else {
                nodes[open.id] = Node::Leaf {
                    weight: leaf_weight(open.g, open.h, lambda),
                };
            }
        }
        if next.is_empty() {
            break;
        }
        for i in 0..n {
            if let Node::Split {
                feature,
                threshold,
                left,
                right,
            } = nodes[position[i] as usize]
            {
                position[i] = if batch.value(i, feature as usize) < threshold {
                    left
                } else {
                    right
                };
            }
        }
        slot_of = vec![usize::MAX; nodes.len()];
        for (s, open) in next.iter().enumerate() {
            slot_of[open.id] = s;
        }
        frontier = next;
    }
    RegressionTree { nodes }
}

/// Loss trace of one fitting call: entry 0 is the loss before the first
/// round, entry `k` the loss after round `k`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitReport {
    pub losses: Vec<f64>,
}

/// Additive tree ensemble with a logistic link.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEnsemble {
    config: LearnerConfig,
    dim: usize,
    base_logit: f64,
    trees: Vec<RegressionTree>,
}

const MAGIC: &[u8; 8] = b"PAIRENS\x01";

impl PairEnsemble {
    /// Empty model with base logit 0: predicts 0.5 everywhere.
    pub fn blank(config: LearnerConfig, dim: usize) -> Self {
        Self {
            config,
            dim,
            base_logit: 0.0,
            trees: Vec::new(),
        }
    }

    /// Sets the base logit from the batch's label mean, then runs
    /// `rounds_warmup` boosting rounds.
    pub fn fit_initial(batch: &PairBatch, config: LearnerConfig) -> Result<(Self, FitReport)> {
        config.validate()?;
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let q = batch.labels.iter().map(|&l| f64::from(l)).sum::<f64>() / batch.len() as f64;
        let q = q.clamp(1e-6, 1.0 - 1e-6);
        let mut model = Self {
            config,
            dim: batch.dim,
            base_logit: (q / (1.0 - q)).ln(),
            trees: Vec::new(),
        };
        let report = model.boost(batch, config.rounds_warmup)?;
        Ok((model, report))
    }

    /// Appends `rounds_increment` trees fitted on `batch` alone, starting from
    /// the current ensemble's predictions.
    pub fn update(&mut self, batch: &PairBatch) -> Result<FitReport> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        self.boost(batch, self.config.rounds_increment)
    }

    fn boost(&mut self, batch: &PairBatch, rounds: usize) -> Result<FitReport> {
        self.config.validate()?;
        if batch.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: batch.dim,
            });
        }
        let n = batch.len();
        let mut raw: Vec<f64> = (0..n).map(|i| self.raw_score_unchecked(batch.row(i))).collect();
        let loss = |raw: &[f64]| -> f64 {
            raw.iter()
                .zip(&batch.labels)
                .map(|(r, l)| logistic_loss(*r, *l))
                .sum()
        };
        let mut report = FitReport {
            losses: Vec::with_capacity(rounds + 1),
        };
        report.losses.push(loss(&raw));
        if rounds == 0 {
            return Ok(report);
        }
        let sorted = SortedColumns::new(batch);
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        let mut position = vec![0u32; n];
        let eta = self.config.learning_rate;
        for _ in 0..rounds {
            for i in 0..n {
                let (g, h) = gradient_hessian(raw[i], batch.labels[i]);
                grad[i] = g;
                hess[i] = h;
            }
            let tree = grow_tree(batch, &sorted, &grad, &hess, &self.config, &mut position);
            for i in 0..n {
                if let Node::Leaf { weight } = tree.nodes[position[i] as usize] {
                    raw[i] += eta * weight;
                }
            }
            self.trees.push(tree);
            report.losses.push(loss(&raw));
        }
        Ok(report)
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base_logit(&self) -> f64 {
        self.base_logit
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    /// Contribution `eta * tree(z)` of tree `k`.
    pub fn tree_contribution(&self, k: usize, z: &[f64]) -> f64 {
        self.config.learning_rate * self.trees[k].eval(z)
    }

    fn raw_score_unchecked(&self, z: &[f64]) -> f64 {
        let mut s = self.base_logit;
        for k in 0..self.trees.len() {
            s += self.tree_contribution(k, z);
        }
        s
    }

    fn check_dim(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        Ok(())
    }

    /// Base logit plus the learning-rate-scaled tree outputs, summed in tree
    /// order.
    pub fn raw_score(&self, z: &[f64]) -> Result<f64> {
        self.check_dim(z)?;
        Ok(self.raw_score_unchecked(z))
    }

    pub fn predict_prob(&self, z: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.raw_score(z)?))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let c = &self.config;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&self.base_logit.to_le_bytes());
        out.extend_from_slice(&c.learning_rate.to_le_bytes());
        out.extend_from_slice(&c.l2_lambda.to_le_bytes());
        for v in [c.max_depth, c.min_child, c.rounds_warmup, c.rounds_increment] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&(self.trees.len() as u32).to_le_bytes());
        for t in &self.trees {
            t.write_bytes(&mut out);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::CorruptModel("bad magic".into()));
        }
        let dim = r.u32()? as usize;
        let base_logit = r.f64()?;
        let learning_rate = r.f64()?;
        let l2_lambda = r.f64()?;
        let max_depth = r.u32()? as usize;
        let min_child = r.u32()? as usize;
        let rounds_warmup = r.u32()? as usize;
        let rounds_increment = r.u32()? as usize;
        let config = LearnerConfig {
            learning_rate,
            max_depth,
            l2_lambda,
            min_child,
            rounds_warmup,
            rounds_increment,
        };
        let n_trees = r.u32()? as usize;
        let mut trees = Vec::with_capacity(n_trees.min(1 << 20));
        for _ in 0..n_trees {
            let n_nodes = r.u32()? as usize;
            let mut nodes = Vec::with_capacity(n_nodes.min(1 << 20));
            for _ in 0..n_nodes {
                let node = match r.take(1)?[0] {
                    0 => Node::Leaf { weight: r.f64()? },
                    1 => Node::Split {
                        feature: r.u32()?,
                        threshold: r.f64()?,
                        left: r.u32()?,
                        right: r.u32()?,
                    },
                    t => return Err(Error::CorruptModel(format!("unknown node tag {t}"))),
                };
                nodes.push(node);
            }
            validate_tree(&nodes, dim)?;
            trees.push(RegressionTree { nodes });
        }
        if r.pos != bytes.len() {
            return Err(Error::CorruptModel("trailing bytes".into()));
        }
        Ok(Self {
            config,
            dim,
            base_logit,
            trees,
        })
    }
}

fn validate_tree(nodes: &[Node], dim: usize) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::CorruptModel("empty tree".into()));
    }
    for (i, node) in nodes.iter().enumerate() {
        match *node {
            Node::Split {
                feature,
                left,
                right,
                ..
            } => {
                let ok = (feature as usize) < dim
                    && (left as usize) > i
                    && (right as usize) > i
                    && (left as usize) < nodes.len()
                    && (right as usize) < nodes.len();
                if !ok {
                    return Err(Error::CorruptModel(format!("invalid split node {i}")));
                }
            }
            Node::Leaf { weight } if !weight.is_finite() => {
                return Err(Error::CorruptModel(format!("non-finite leaf {i}")));
            }
            Node::Leaf { .. } => {}
        }
    }
    Ok(())
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos + len;
        if end > self.bytes.len() {
            return Err(Error::CorruptModel("truncated".into()));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Raw scores of a fixed set of pair features, kept in sync with a growing
/// ensemble by applying only the trees added since the last refresh.
#[derive(Debug, Clone)]
pub struct ScoreCache {
    dim: usize,
    raw: Vec<f64>,
    trees_applied: usize,
}

impl ScoreCache {
    pub fn new(model: &PairEnsemble, features: &[f64]) -> Result<Self> {
        let dim = model.dim();
        if !features.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: features.len() % dim,
            });
        }
        let mut cache = Self {
            dim,
            raw: vec![model.base_logit(); features.len() / dim],
            trees_applied: 0,
        };
        cache.refresh(model, features);
        Ok(cache)
    }

    /// `model` must be the same ensemble (possibly grown) the cache was
    /// created from.
    pub fn refresh(&mut self, model: &PairEnsemble, features: &[f64]) {
        for k in self.trees_applied..model.tree_count() {
            for (s, z) in self.raw.iter_mut().zip(features.chunks_exact(self.dim)) {
                *s += model.tree_contribution(k, z);
            }
        }
        self.trees_applied = model.tree_count();
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    /// Hard predictions: 1 iff the probability exceeds 0.5.
    pub fn predictions(&self) -> Vec<u8> {
        self.raw.iter().map(|&r| u8::from(sigmoid(r) > 0.5)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(depth: usize, rounds: usize) -> LearnerConfig {
        LearnerConfig {
            max_depth: depth,
            rounds_warmup: rounds,
            ..LearnerConfig::default()
        }
    }

    #[test]
    fn depth_formula() {
        assert_eq!(tree_depth_for(9), 3);
        assert_eq!(tree_depth_for(10), 3);
        assert_eq!(tree_depth_for(1), 1);
        assert_eq!(tree_depth_for(0), 1);
        assert_eq!(tree_depth_for(2), 1);
        assert_eq!(tree_depth_for(3), 2);
        // sqrt(6.25) = 2.5 cannot occur for integers; 42 -> 6.48 -> 6
        assert_eq!(tree_depth_for(42), 6);
    }

    #[test]
    fn blank_predicts_half() {
        let m = PairEnsemble::blank(LearnerConfig::default(), 4);
        assert_eq!(m.predict_prob(&[1.0, -2.0, 3.0, 0.0]).unwrap(), 0.5);
    }

    #[test]
    fn wrong_length_rejected() {
        let m = PairEnsemble::blank(LearnerConfig::default(), 4);
        assert!(matches!(
            m.predict_prob(&[1.0]),
            Err(Error::DimensionMismatch { expected: 4, got: 1 })
        ));
    }

    #[test]
    fn all_positive_labels() {
        let batch = PairBatch::new(2, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0], vec![1, 1, 1]).unwrap();
        let (m, _) = PairEnsemble::fit_initial(&batch, config(2, 20)).unwrap();
        for z in [[0.0, 0.0], [100.0, -100.0], [-3.0, 7.0]] {
            assert!(m.predict_prob(&z).unwrap() > 0.99);
        }
    }

    #[test]
    fn empty_batch_rejected() {
        let batch = PairBatch::new(2, vec![], vec![]).unwrap();
        assert!(matches!(
            PairEnsemble::fit_initial(&batch, config(2, 5)),
            Err(Error::EmptyBatch)
        ));
        let mut m = PairEnsemble::blank(LearnerConfig::default(), 2);
        assert!(m.update(&batch).is_err());
    }

    #[test]
    fn four_point_stump_threshold() {
        let batch = PairBatch::new(1, vec![0.0, 1.0, 2.0, 3.0], vec![0, 0, 1, 1]).unwrap();
        let (m, _) = PairEnsemble::fit_initial(&batch, config(1, 1)).unwrap();
        match m.trees()[0].nodes()[0] {
            Node::Split {
                feature, threshold, ..
            } => {
                assert_eq!(feature, 0);
                assert!(threshold > 1.0 && threshold < 2.0);
            }
            other => panic!("expected split, got {other:?}"),
        }
    }

    #[test]
    fn zero_increment_is_identity() {
        let batch = PairBatch::new(1, vec![0.0, 1.0, 2.0, 3.0], vec![0, 1, 0, 1]).unwrap();
        let cfg = LearnerConfig {
            rounds_increment: 0,
            ..config(2, 10)
        };
        let (mut m, _) = PairEnsemble::fit_initial(&batch, cfg).unwrap();
        let before = m.clone();
        m.update(&batch).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn symmetric_duplicates_stay_at_half() {
        let z = vec![0.3, -1.2, 0.3, -1.2];
        let batch = PairBatch::new(2, z, vec![1, 0]).unwrap();
        let (m, _) = PairEnsemble::fit_initial(&batch, config(3, 40)).unwrap();
        assert!((m.predict_prob(&[0.3, -1.2]).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn serialization_round_trip() {
        let batch = PairBatch::new(
            2,
            vec![0.0, 1.0, 1.0, 0.5, -1.0, 2.0, 3.0, -0.5, 0.2, 0.2],
            vec![0, 1, 0, 1, 1],
        )
        .unwrap();
        let (m, _) = PairEnsemble::fit_initial(&batch, config(2, 15)).unwrap();
        let back = PairEnsemble::from_bytes(&m.to_bytes()).unwrap();
        assert_eq!(back, m);
        for i in 0..batch.len() {
            assert_eq!(
                back.predict_prob(batch.row(i)).unwrap().to_bits(),
                m.predict_prob(batch.row(i)).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn corrupt_bytes_rejected() {
        let m = PairEnsemble::blank(LearnerConfig::default(), 2);
        let bytes = m.to_bytes();
        assert!(PairEnsemble::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(PairEnsemble::from_bytes(b"nonsense").is_err());
    }

    #[test]
    fn cache_matches_direct_scores() {
        let batch = PairBatch::new(
            2,
            vec![0.0, 1.0, 1.0, 0.5, -1.0, 2.0, 3.0, -0.5],
            vec![0, 1, 0, 1],
        )
        .unwrap();
        let (mut m, _) = PairEnsemble::fit_initial(&batch, config(2, 5)).unwrap();
        let mut cache = ScoreCache::new(&m, batch.features()).unwrap();
        m.update(&batch).unwrap();
        cache.refresh(&m, batch.features());
        for i in 0..batch.len() {
            assert_eq!(cache.raw()[i].to_bits(), m.raw_score(batch.row(i)).unwrap().to_bits());
        }
    }
}
