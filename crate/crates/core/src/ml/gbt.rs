//! Second-order gradient-boosted regression trees for squared error, with
//! exact greedy splits on presorted features.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tune::{candidate_indices, SliceSpec, TrialRecord, TuneResult};
use crate::error::{Error, Result};
use crate::features::Design;
use crate::metrics::{mape, mse};
use crate::seed;

/// Fewest training rows a boosted model accepts.
pub const MIN_ROWS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtConfig {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub lambda_l2: f64,
    pub gamma_split: f64,
    pub subsample: f64,
    pub colsample: f64,
    pub seed: u64,
}

impl Default for GbtConfig {
    fn default() -> Self {
        GbtConfig {
            rounds: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_child_weight: 1.0,
            lambda_l2: 1.0,
            gamma_split: 0.0,
            subsample: 1.0,
            colsample: 1.0,
            seed: 0,
        }
    }
}

impl GbtConfig {
    /// Counts and the learning rate must be positive; the regularisers may be zero.
    pub fn validate(&self) -> Result<()> {
        let frac = |v: f64| v > 0.0 && v <= 1.0;
        if self.rounds == 0 || self.max_depth == 0 {
            return Err(Error::invalid("gbt rounds and max_depth must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("gbt learning_rate must be positive"));
        }
        if !(self.min_child_weight >= 0.0 && self.lambda_l2 >= 0.0 && self.gamma_split >= 0.0) {
            return Err(Error::invalid("gbt min_child_weight, lambda_l2 and gamma_split must be non-negative"));
        }
        if !frac(self.subsample) || !frac(self.colsample) {
            return Err(Error::invalid("gbt subsample and colsample must lie in (0, 1]"));
        }
        Ok(())
    }

    pub const CSV_HEADER: &'static str =
        "rounds,learning_rate,max_depth,min_child_weight,lambda_l2,gamma_split,subsample,colsample,seed";

    pub fn csv_fields(&self) -> String {
        use crate::io::fmt_f64;
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.rounds,
            fmt_f64(self.learning_rate),
            self.max_depth,
            fmt_f64(self.min_child_weight),
            fmt_f64(self.lambda_l2),
            fmt_f64(self.gamma_split),
            fmt_f64(self.subsample),
            fmt_f64(self.colsample),
            self.seed
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub config: GbtConfig,
    pub columns: Vec<String>,
    pub base: f64,
    pub trees: Vec<TreeNode>,
    /// Training MSE before the first round and after each round.
    pub train_loss: Vec<f64>,
}

impl GbtModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.base + self.config.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn predict(&self, design: &Design) -> Result<Vec<f64>> {
        design.check_columns(&self.columns)?;
        Ok(design.rows.iter().map(|r| self.predict_row(r)).collect())
    }
}

struct Node {
    g: f64,
    h: f64,
    split: Option<(usize, f64, usize, usize)>,
}

struct Best {
    gain: f64,
    split: Option<(usize, f64)>,
}

fn grow_tree(
    x: &[Vec<f64>],
    sorted: &[Vec<usize>],
    grad: &[f64],
    in_sample: &[bool],
    cols: &[usize],
    cfg: &GbtConfig,
) -> TreeNode {
    const NONE: usize = usize::MAX;
    let lambda = cfg.lambda_l2;
    let mut node_of = vec![NONE; x.len()];
    let mut root = Node { g: 0.0, h: 0.0, split: None };
    for i in 0..x.len() {
        if in_sample[i] {
            node_of[i] = 0;
            root.g += grad[i];
            root.h += 1.0;
        }
    }
    let mut nodes = vec![root];
    let mut frontier = vec![0usize];

    for _ in 0..cfg.max_depth {
        if frontier.is_empty() {
            break;
        }
        let mut active = vec![false; nodes.len()];
        for &nd in &frontier {
            active[nd] = true;
        }
        let mut best: Vec<Best> = (0..nodes.len()).map(|_| Best { gain: 0.0, split: None }).collect();
        for &f in cols {
            // Per node: left gradient sum, left count, previous value.
            let mut state: Vec<(f64, f64, f64)> = vec![(0.0, 0.0, f64::NAN); nodes.len()];
            for &i in &sorted[f] {
                let nd = node_of[i];
                if nd == NONE || !active[nd] {
                    continue;
                }
                let v = x[i][f];
                let st = &mut state[nd];
                if st.1 > 0.0 && v > st.2 {
                    let (gl, hl) = (st.0, st.1);
                    let (g, h) = (nodes[nd].g, nodes[nd].h);
                    let (gr, hr) = (g - gl, h - hl);
                    if hl >= cfg.min_child_weight && hr >= cfg.min_child_weight {
                        let gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda))
                            - cfg.gamma_split;
                        if gain > best[nd].gain {
                            let mid = 0.5 * (st.2 + v);
                            let thr = if mid < v { mid } else { st.2 };
                            best[nd] = Best {
                                gain,
                                split: Some((f, thr)),
                            };
                        }
                    }
                }
                st.0 += grad[i];
                st.1 += 1.0;
                st.2 = v;
            }
        }
        let mut next = Vec::new();
        for &nd in &frontier {
            if let Some((f, thr)) = best[nd].split {
                let l = nodes.len();
                nodes.push(Node { g: 0.0, h: 0.0, split: None });
                nodes.push(Node { g: 0.0, h: 0.0, split: None });
                nodes[nd].split = Some((f, thr, l, l + 1));
                next.push(l);
                next.push(l + 1);
            }
        }
        for i in 0..x.len() {
            let nd = node_of[i];
            if nd == NONE || !active[nd] {
                continue;
            }
            if let Some((f, thr, l, r)) = nodes[nd].split {
                let child = if x[i][f] <= thr { l } else { r };
                node_of[i] = child;
                nodes[child].g += grad[i];
                nodes[child].h += 1.0;
            }
        }
        frontier = next;
    }

    fn assemble(nodes: &[Node], id: usize, lambda: f64) -> TreeNode {
        match nodes[id].split {
            Some((feature, threshold, l, r)) => TreeNode::Split {
                feature,
                threshold,
                left: Box::new(assemble(nodes, l, lambda)),
                right: Box::new(assemble(nodes, r, lambda)),
            },
            None => TreeNode::Leaf {
                value: -nodes[id].g / (nodes[id].h + lambda),
            },
        }
    }
    assemble(&nodes, 0, lambda)
}

/// Boosts `config.rounds` trees on squared error. Row and column sampling
/// draw from a generator keyed to (seed, round), never to row order.
pub fn fit_gbt(design: &Design, y: &[f64], config: &GbtConfig) -> Result<GbtModel> {
    config.validate()?;
    let n = design.n_rows();
    let p = design.n_cols();
    if y.len() != n {
        return Err(Error::invalid(format!("design has {n} rows but target has {}", y.len())));
    }
    if n < MIN_ROWS {
        return Err(Error::invalid(format!("gbt needs at least {MIN_ROWS} rows, got {n}")));
    }
    if p == 0 {
        return Err(Error::invalid("gbt needs at least one feature column"));
    }
    if y.iter().chain(design.rows.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("gbt inputs contain non-finite values"));
    }
    let x = &design.rows;
    let sorted: Vec<Vec<usize>> = (0..p)
        .map(|f| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
            idx
        })
        .collect();

    let base = y.iter().sum::<f64>() / n as f64;
    let mut pred = vec![base; n];
    let mut train_loss = vec![mse(y, &pred)];
    let mut trees = Vec::with_capacity(config.rounds);
    let n_rows = ((config.subsample * n as f64).round() as usize).clamp(1, n);
    let n_cols = ((config.colsample * p as f64).ceil() as usize).clamp(1, p);

    for round in 0..config.rounds {
        let mut rng = seed::rng(seed::derive_index(config.seed, round as u64));
        let mut in_sample = vec![n_rows == n; n];
        if n_rows < n {
            for i in sample(&mut rng, n, n_rows) {
                in_sample[i] = true;
            }
        }
        let mut cols: Vec<usize> = if n_cols < p {
            sample(&mut rng, p, n_cols).into_vec()
        } else {
            (0..p).collect()
        };
        cols.sort_unstable();
        let grad: Vec<f64> = pred.iter().zip(y).map(|(f, t)| f - t).collect();
        let tree = grow_tree(x, &sorted, &grad, &in_sample, &cols, config);
        for (i, row) in x.iter().enumerate() {
            pred[i] += config.learning_rate * tree.predict(row);
        }
        train_loss.push(mse(y, &pred));
        trees.push(tree);
    }

    Ok(GbtModel {
        config: config.clone(),
        columns: design.columns.clone(),
        base,
        trees,
        train_loss,
    })
}

/// Training prefix and validation window pairs. The first pair trains on
/// `initial` rows; each later pair grows training by `step` rows.
pub fn time_slice_splits(
    n: usize,
    initial: usize,
    val_len: usize,
    step: usize,
) -> Result<Vec<(std::ops::Range<usize>, std::ops::Range<usize>)>> {
    if initial == 0 || val_len == 0 || step == 0 {
        return Err(Error::invalid("time slices need positive initial, validation and step lengths"));
    }
    if n < initial + val_len {
        return Err(Error::invalid(format!(
            "series of length {n} is too short for {initial} training and {val_len} validation rows"
        )));
    }
    let mut out = Vec::new();
    let mut end = initial;
    while end + val_len <= n {
        out.push((0..end, end..end + val_len));
        end += step;
    }
    Ok(out)
}

/// Discrete search space; its size is the product of the option counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtSpace {
    pub rounds: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub max_depth: Vec<usize>,
    pub min_child_weight: Vec<f64>,
    pub lambda_l2: Vec<f64>,
    pub gamma_split: Vec<f64>,
    pub subsample: Vec<f64>,
    pub colsample: Vec<f64>,
}

impl Default for GbtSpace {
    fn default() -> Self {
        GbtSpace {
            rounds: vec![50, 100, 200],
            learning_rate: vec![0.05, 0.1, 0.3],
            max_depth: vec![2, 3, 4, 6],
            min_child_weight: vec![1.0, 3.0],
            lambda_l2: vec![0.0, 1.0, 5.0],
            gamma_split: vec![0.0, 0.1],
            subsample: vec![0.8, 1.0],
            colsample: vec![0.8, 1.0],
        }
    }
}

impl GbtSpace {
    pub fn single(config: &GbtConfig) -> GbtSpace {
        GbtSpace {
            rounds: vec![config.rounds],
            learning_rate: vec![config.learning_rate],
            max_depth: vec![config.max_depth],
            min_child_weight: vec![config.min_child_weight],
            lambda_l2: vec![config.lambda_l2],
            gamma_split: vec![config.gamma_split],
            subsample: vec![config.subsample],
            colsample: vec![config.colsample],
        }
    }

    fn radices(&self) -> [usize; 8] {
        [
            self.rounds.len(),
            self.learning_rate.len(),
            self.max_depth.len(),
            self.min_child_weight.len(),
            self.lambda_l2.len(),
            self.gamma_split.len(),
            self.subsample.len(),
            self.colsample.len(),
        ]
    }

    pub fn size(&self) -> usize {
        self.radices().iter().product()
    }

    /// Mixed-radix decoding of a point index, first dimension slowest.
    pub fn config_at(&self, index: usize, seed: u64) -> GbtConfig {
        let r = self.radices();
        let mut digits = [0usize; 8];
        let mut rem = index;
        for k in (0..8).rev() {
            digits[k] = rem % r[k];
            rem /= r[k];
        }
        GbtConfig {
            rounds: self.rounds[digits[0]],
            learning_rate: self.learning_rate[digits[1]],
            max_depth: self.max_depth[digits[2]],
            min_child_weight: self.min_child_weight[digits[3]],
            lambda_l2: self.lambda_l2[digits[4]],
            gamma_split: self.gamma_split[digits[5]],
            subsample: self.subsample[digits[6]],
            colsample: self.colsample[digits[7]],
            seed,
        }
    }
}

pub const DEFAULT_GBT_BUDGET: usize = 108;

/// Random search: samples `budget` distinct points of `space`, scores each by
/// mean validation MAPE over time slices and keeps the lowest, earliest
/// sample winning ties. A single candidate is returned unscored.
pub fn tune_gbt(
    design: &Design,
    y: &[f64],
    space: &GbtSpace,
    budget: usize,
    slices: &SliceSpec,
    seed: u64,
) -> Result<TuneResult<GbtConfig>> {
    if space.size() == 0 {
        return Err(Error::invalid("gbt search space is empty"));
    }
    let picks = candidate_indices(space.size(), budget, seed::derive(seed, "sample"));
    let configs: Vec<GbtConfig> = picks
        .iter()
        .enumerate()
        .map(|(k, &idx)| space.config_at(idx, seed::derive_index(seed, k as u64)))
        .collect();
    if configs.len() == 1 {
        return Ok(TuneResult::unscored(configs));
    }
    let splits = slices.splits(design.n_rows())?;
    let scores: Vec<Result<f64>> = configs
        .par_iter()
        .map(|cfg| {
            let mut total = 0.0;
            for (tr, va) in &splits {
                let m = fit_gbt(&design.slice(tr.clone()), &y[tr.clone()], cfg)?;
                let f = m.predict(&design.slice(va.clone()))?;
                total += mape(&y[va.clone()], &f)?;
            }
            Ok(total / splits.len() as f64)
        })
        .collect();
    let trace = configs
        .into_iter()
        .zip(scores)
        .enumerate()
        .map(|(index, (config, score))| {
            Ok(TrialRecord {
                index,
                config,
                score: Some(score?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TuneResult::from_trace(trace))
}
