//! Squared-error gradient boosting with exact greedy splits.
//!
//! Trees grow level by level. Every feature is sorted once up front; each
//! level then needs a single pass over the presorted rows per feature, with
//! running left-hand sums kept per node.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

fn default_n_trees() -> usize {
    100
}
fn default_max_depth() -> usize {
    3
}
fn default_learning_rate() -> f64 {
    0.1
}
fn default_min_samples_leaf() -> usize {
    5
}
fn default_colsample() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbdtParams {
    #[serde(default = "default_n_trees")]
    pub n_trees: usize,
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_min_samples_leaf")]
    pub min_samples_leaf: usize,
    /// Rounds without validation improvement before stopping. Needs a
    /// validation set; ignored without one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub early_stopping_rounds: Option<usize>,
    /// Fraction of features considered per tree.
    #[serde(default = "default_colsample")]
    pub colsample: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            n_trees: default_n_trees(),
            max_depth: default_max_depth(),
            learning_rate: default_learning_rate(),
            min_samples_leaf: default_min_samples_leaf(),
            early_stopping_rounds: None,
            colsample: default_colsample(),
            seed: 0,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidModelSpec(m));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!("learning_rate must be in (0, 1], got {}", self.learning_rate));
        }
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1".into());
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be at least 1".into());
        }
        if !(self.colsample > 0.0 && self.colsample <= 1.0) {
            return bad(format!("colsample must be in (0, 1], got {}", self.colsample));
        }
        if self.early_stopping_rounds == Some(0) {
            return bad("early_stopping_rounds must be positive".into());
        }
        Ok(())
    }
}

const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Split feature, or `u32::MAX` for leaves.
    pub feature: u32,
    /// Rows with `x <= threshold` go left.
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            let n = &self.nodes[i];
            if n.feature == LEAF {
                return n.value;
            }
            i = if row[n.feature as usize] <= n.threshold {
                n.left
            } else {
                n.right
            } as usize;
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.feature == LEAF).count()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    /// Training MSE before any tree (index 0) and after each kept tree.
    pub train_loss: Vec<f64>,
    /// Validation MSE on the same schedule, when a validation set was given.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub valid_loss: Vec<f64>,
    /// Number of trees kept.
    pub best_round: usize,
    /// Number of trees grown before stopping.
    pub stopped_at: usize,
}

/// One boosted ensemble for a single output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub base: f64,
    pub trees: Vec<Tree>,
    pub report: TrainingReport,
}

impl Ensemble {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().fold(self.base, |acc, t| acc + t.predict_row(row))
    }
}

/// Independent ensembles, one per output column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub params: GbdtParams,
    pub n_features: usize,
    pub ensembles: Vec<Ensemble>,
}

impl GbdtModel {
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.cols(),
            });
        }
        let mut out = Matrix::zeros(x.rows(), self.ensembles.len());
        for (r, row) in x.iter_rows().enumerate() {
            for (j, e) in self.ensembles.iter().enumerate() {
                out.set(r, j, e.predict_row(row));
            }
        }
        Ok(out)
    }
}

/// Column-major copy of the features plus, per column, the row order
/// sorted by value then row and the values in that order. Shared by all
/// outputs.
pub(crate) struct Presorted {
    n_rows: usize,
    columns: Vec<Vec<f64>>,
    order: Vec<Vec<u32>>,
    values: Vec<Vec<f64>>,
}

impl Presorted {
    pub(crate) fn new(x: &Matrix) -> Presorted {
        let columns: Vec<Vec<f64>> = (0..x.cols()).map(|c| x.column(c)).collect();
        let order: Vec<Vec<u32>> = columns
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..col.len() as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();
        let values = columns
            .iter()
            .zip(&order)
            .map(|(col, idx)| idx.iter().map(|&i| col[i as usize]).collect())
            .collect();
        Presorted {
            n_rows: x.rows(),
            columns,
            order,
            values,
        }
    }
}

fn mse(y: &[f64], pred: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64
}

struct Split {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// A node still eligible for splitting: its rows occupy `start..end` of
/// every per-feature working array.
struct OpenNode {
    id: u32,
    start: usize,
    end: usize,
    sum: f64,
}

fn leaf() -> Node {
    Node {
        feature: LEAF,
        threshold: 0.0,
        left: 0,
        right: 0,
        value: 0.0,
    }
}

/// Best split of one node over one feature's sorted segment (`vals` in
/// ascending order, `rows` the matching row ids). `recip[c]` is `1 / c`.
#[allow(clippy::too_many_arguments)]
fn scan_segment(
    vals: &[f64],
    rows: &[u32],
    residual: &[f64],
    total: f64,
    min_leaf: usize,
    recip: &[f64],
    f: usize,
    min_gain: f64,
    best: &mut Option<Split>,
) {
    let n = vals.len();
    let base = total * total * recip[n];
    let mut sl: f64 = rows[..min_leaf - 1].iter().map(|&r| residual[r as usize]).sum();
    // candidate c puts rows[..c] on the left, for c in min_leaf..=n-min_leaf
    let sizes = &recip[min_leaf..=n - min_leaf];
    let candidates = vals[min_leaf - 1..]
        .windows(2)
        .zip(&rows[min_leaf - 1..])
        .zip(sizes.iter().zip(sizes.iter().rev()));
    for ((w, &row), (&inv_l, &inv_r)) in candidates {
        sl += residual[row as usize];
        if w[1] <= w[0] {
            continue;
        }
        let sr = total - sl;
        let gain = sl * sl * inv_l + sr * sr * inv_r - base;
        if gain > min_gain && best.as_ref().is_none_or(|b| gain > b.gain) {
            *best = Some(Split {
                gain,
                feature: f,
                threshold: w[0] + (w[1] - w[0]) / 2.0,
            });
        }
    }
}

/// Stable partition of a node's segment: rows going left first.
fn partition(vals: &mut [f64], rows: &mut [u32], go_left: &[bool], scratch_v: &mut Vec<f64>, scratch_r: &mut Vec<u32>) {
    scratch_v.clear();
    scratch_r.clear();
    let mut at = 0;
    for i in 0..rows.len() {
        let (v, r) = (vals[i], rows[i]);
        if go_left[r as usize] {
            vals[at] = v;
            rows[at] = r;
            at += 1;
        } else {
            scratch_v.push(v);
            scratch_r.push(r);
        }
    }
    vals[at..].copy_from_slice(scratch_v);
    rows[at..].copy_from_slice(scratch_r);
}

/// Grows one tree on `residual`. Returns it with per-row increments.
fn grow_tree(
    data: &Presorted,
    residual: &[f64],
    features: &[usize],
    params: &GbdtParams,
    out_increment: &mut [f64],
) -> Tree {
    let n = data.n_rows;
    let total_sum: f64 = residual.iter().sum();
    let total_sse: f64 = {
        let mean = total_sum / n as f64;
        residual.iter().map(|r| (r - mean) * (r - mean)).sum()
    };
    let min_gain = 1e-9 * total_sse;
    let min_leaf = params.min_samples_leaf;

    let recip: Vec<f64> = (0..=n).map(|c| if c == 0 { 0.0 } else { 1.0 / c as f64 }).collect();
    let mut nodes = vec![leaf()];
    let mut node_of = vec![0u32; n];
    let mut work_v: Vec<Vec<f64>> = features.iter().map(|&f| data.values[f].clone()).collect();
    let mut work_r: Vec<Vec<u32>> = features.iter().map(|&f| data.order[f].clone()).collect();
    let (mut scratch_v, mut scratch_r) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut go_left = vec![false; n];
    let mut open = vec![OpenNode {
        id: 0,
        start: 0,
        end: n,
        sum: total_sum,
    }];

    for depth in 0..params.max_depth {
        if open.is_empty() {
            break;
        }
        let mut next_open = Vec::new();
        let mut split_any = false;
        let mut splits: Vec<Option<Split>> = Vec::with_capacity(open.len());
        for node in &open {
            let mut best = None;
            if node.end - node.start >= 2 * min_leaf {
                let span = node.start..node.end;
                for (k, &f) in features.iter().enumerate() {
                    let (vals, rows) = (&work_v[k][span.clone()], &work_r[k][span.clone()]);
                    scan_segment(vals, rows, residual, node.sum, min_leaf, &recip, f, min_gain, &mut best);
                }
            }
            split_any |= best.is_some();
            splits.push(best);
        }
        if !split_any {
            break;
        }
        let last_level = depth + 1 == params.max_depth;
        for (node, split) in open.iter().zip(&splits) {
            let Some(split) = split else { continue };
            let left = nodes.len() as u32;
            nodes.push(leaf());
            nodes.push(leaf());
            let id = node.id as usize;
            nodes[id].feature = split.feature as u32;
            nodes[id].threshold = split.threshold;
            nodes[id].left = left;
            nodes[id].right = left + 1;

            let col = &data.columns[split.feature];
            let (mut nl, mut sum_l, mut sum_r) = (0usize, 0.0, 0.0);
            // any feature's segment lists the node's rows; sum in row order
            let mut rows: Vec<u32> = work_r[0][node.start..node.end].to_vec();
            rows.sort_unstable();
            for &row in &rows {
                let r = row as usize;
                let l = col[r] <= split.threshold;
                go_left[r] = l;
                node_of[r] = if l { left } else { left + 1 };
                if l {
                    nl += 1;
                    sum_l += residual[r];
                } else {
                    sum_r += residual[r];
                }
            }
            if !last_level {
                for (v, r) in work_v.iter_mut().zip(work_r.iter_mut()) {
                    let span = node.start..node.end;
                    partition(&mut v[span.clone()], &mut r[span], &go_left, &mut scratch_v, &mut scratch_r);
                }
            }
            next_open.push(OpenNode {
                id: left,
                start: node.start,
                end: node.start + nl,
                sum: sum_l,
            });
            next_open.push(OpenNode {
                id: left + 1,
                start: node.start + nl,
                end: node.end,
                sum: sum_r,
            });
        }
        open = next_open;
    }

    // leaf values: learning_rate times the mean residual of each leaf
    let mut leaf_sum = vec![0.0f64; nodes.len()];
    let mut leaf_cnt = vec![0usize; nodes.len()];
    for row in 0..n {
        let node = node_of[row] as usize;
        leaf_sum[node] += residual[row];
        leaf_cnt[node] += 1;
    }
    for (i, node) in nodes.iter_mut().enumerate() {
        if node.feature == LEAF && leaf_cnt[i] > 0 {
            node.value = params.learning_rate * leaf_sum[i] / leaf_cnt[i] as f64;
        }
    }
    for row in 0..n {
        out_increment[row] = nodes[node_of[row] as usize].value;
    }
    Tree { nodes }
}

/// Boosts one output column. `valid` enables early stopping when the
/// params ask for it; the ensemble is then cut back to its best round.
pub fn fit_gbdt(
    x: &Matrix,
    y: &[f64],
    params: &GbdtParams,
    valid: Option<(&Matrix, &[f64])>,
) -> Result<Ensemble> {
    params.validate()?;
    check_training(x, y.len(), params)?;
    fit_presorted(&Presorted::new(x), y, params, valid, params.seed)
}

fn check_training(x: &Matrix, n_targets: usize, params: &GbdtParams) -> Result<()> {
    if x.rows() != n_targets {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            actual: n_targets,
        });
    }
    let required = 2 * params.min_samples_leaf;
    if x.rows() < required {
        return Err(Error::TooFewSamples {
            samples: x.rows(),
            required,
        });
    }
    Ok(())
}

fn fit_presorted(
    data: &Presorted,
    y: &[f64],
    params: &GbdtParams,
    valid: Option<(&Matrix, &[f64])>,
    seed: u64,
) -> Result<Ensemble> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite GBDT target".into()));
    }
    let n = y.len();
    let n_features = data.columns.len();
    let base = y.iter().sum::<f64>() / n as f64;
    let mut pred = vec![base; n];
    let mut residual: Vec<f64> = y.iter().map(|v| v - base).collect();
    let mut increment = vec![0.0; n];
    let mut report = TrainingReport {
        train_loss: vec![mse(y, &pred)],
        ..TrainingReport::default()
    };
    let stopping = params.early_stopping_rounds.zip(valid);
    let mut valid_pred = stopping.map(|(_, (xv, _))| vec![base; xv.rows()]);
    if let Some((_, (_, yv))) = stopping {
        report.valid_loss.push(mse(yv, valid_pred.as_ref().unwrap()));
    }
    let all_features: Vec<usize> = (0..n_features).collect();
    let n_sampled = ((params.colsample * n_features as f64).ceil() as usize).clamp(1.min(n_features), n_features);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trees: Vec<Tree> = Vec::new();
    let mut best = (0usize, report.valid_loss.first().copied().unwrap_or(f64::INFINITY));

    for round in 0..params.n_trees {
        report.stopped_at = round;
        let features = if n_sampled < n_features {
            let mut f = sample(&mut rng, n_features, n_sampled).into_vec();
            f.sort_unstable();
            f
        } else {
            all_features.clone()
        };
        let tree = grow_tree(data, &residual, &features, params, &mut increment);
        if tree.nodes.len() == 1 {
            break;
        }
        let new_pred: Vec<f64> = pred.iter().zip(&increment).map(|(p, d)| p + d).collect();
        let loss = mse(y, &new_pred);
        if loss > *report.train_loss.last().unwrap() {
            break;
        }
        pred = new_pred;
        for ((r, t), p) in residual.iter_mut().zip(y).zip(&pred) {
            *r = t - p;
        }
        report.train_loss.push(loss);
        if let (Some((rounds, (xv, yv))), Some(vp)) = (stopping, valid_pred.as_mut()) {
            for (r, row) in xv.iter_rows().enumerate() {
                vp[r] += tree.predict_row(row);
            }
            let vl = mse(yv, vp);
            report.valid_loss.push(vl);
            trees.push(tree);
            if vl < best.1 {
                best = (trees.len(), vl);
            } else if trees.len() - best.0 >= rounds {
                report.stopped_at = round + 1;
                break;
            }
        } else {
            trees.push(tree);
        }
        report.stopped_at = round + 1;
    }
    if stopping.is_some() {
        trees.truncate(best.0);
    }
    report.best_round = trees.len();
    Ok(Ensemble { base, trees, report })
}

/// Fits one ensemble per column of `y`, sharing the presorted features.
/// Output `j` draws its column samples from `seed + j`.
pub fn fit_gbdt_multi(
    x: &Matrix,
    y: &Matrix,
    params: &GbdtParams,
    valid: Option<(&Matrix, &Matrix)>,
) -> Result<GbdtModel> {
    use rayon::prelude::*;
    params.validate()?;
    check_training(x, y.rows(), params)?;
    if let Some((xv, yv)) = valid {
        if xv.cols() != x.cols() || yv.cols() != y.cols() || xv.rows() != yv.rows() {
            return Err(Error::DimensionMismatch {
                expected: x.cols(),
                actual: xv.cols(),
            });
        }
    }
    let data = Presorted::new(x);
    let valid_cols: Option<Vec<Vec<f64>>> = valid.map(|(_, yv)| (0..yv.cols()).map(|j| yv.column(j)).collect());
    let ensembles = (0..y.cols())
        .into_par_iter()
        .map(|j| {
            let yj = y.column(j);
            let v = valid.zip(valid_cols.as_ref()).map(|((xv, _), cols)| (xv, cols[j].as_slice()));
            fit_presorted(&data, &yj, params, v, params.seed.wrapping_add(j as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GbdtModel {
        params: params.clone(),
        n_features: x.cols(),
        ensembles,
    })
}
