//! Regression trees grown level by level with exact greedy split search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        missing_goes_left: bool,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
    },
}

impl TreeNode {
    /// Leaf value reached by `row`. Values `< threshold` go left; NaN follows
    /// the stored default direction.
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    missing_goes_left,
                    left,
                    right,
                } => {
                    let v = row[*feature];
                    let go_left = if v.is_nan() {
                        *missing_goes_left
                    } else {
                        v < *threshold
                    };
                    node = if go_left { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    pub fn max_feature_index(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split {
                feature,
                left,
                right,
                ..
            } => Some(
                [
                    Some(*feature),
                    left.max_feature_index(),
                    right.max_feature_index(),
                ]
                .into_iter()
                .flatten()
                .max()
                .expect("nonempty"),
            ),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub lambda: f64,
    pub min_split_gain: f64,
}

/// Row indices of each column sorted by value, with missing rows kept apart.
/// Built once per training set and reused by every round.
pub struct SortedColumns {
    order: Vec<Vec<u32>>,
    missing: Vec<Vec<u32>>,
}

impl SortedColumns {
    pub fn new(values: &[f64], n_rows: usize, n_cols: usize) -> Self {
        let mut order = Vec::with_capacity(n_cols);
        let mut missing = Vec::with_capacity(n_cols);
        for f in 0..n_cols {
            let mut present = Vec::with_capacity(n_rows);
            let mut absent = Vec::new();
            for r in 0..n_rows {
                if values[r * n_cols + f].is_nan() {
                    absent.push(r as u32);
                } else {
                    present.push(r as u32);
                }
            }
            present.sort_by(|&a, &b| {
                values[a as usize * n_cols + f]
                    .total_cmp(&values[b as usize * n_cols + f])
                    .then(a.cmp(&b))
            });
            order.push(present);
            missing.push(absent);
        }
        SortedColumns { order, missing }
    }
}

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
    missing_goes_left: bool,
    left_g: f64,
    left_h: f64,
}

struct BuildNode {
    g: f64,
    h: f64,
    depth: usize,
    split: Option<(Candidate, usize, usize)>,
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

/// Split gain `1/2 [G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)]`.
fn split_gain(gl: f64, hl: f64, g: f64, h: f64, lambda: f64) -> f64 {
    0.5 * (score(gl, hl, lambda) + score(g - gl, h - hl, lambda) - score(g, h, lambda))
}

pub fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    -g / (h + lambda)
}

struct ScanState {
    gl: f64,
    hl: f64,
    last: f64,
    seen: bool,
    best: Option<Candidate>,
}

/// Best split of feature `f` for every frontier node.
#[allow(clippy::too_many_arguments)]
fn scan_feature(
    f: usize,
    values: &[f64],
    n_cols: usize,
    cols: &SortedColumns,
    grad: &[f64],
    hess: &[f64],
    row_node: &[u32],
    slot_of: &[u32],
    totals: &[(f64, f64)],
    params: &TreeParams,
) -> Vec<Option<Candidate>> {
    let k = totals.len();
    let slot = |r: usize| {
        let n = row_node[r];
        if n == NONE {
            NONE
        } else {
            slot_of[n as usize]
        }
    };
    let mut gm = vec![0.0; k];
    let mut hm = vec![0.0; k];
    for &r in &cols.missing[f] {
        let s = slot(r as usize);
        if s != NONE {
            gm[s as usize] += grad[r as usize];
            hm[s as usize] += hess[r as usize];
        }
    }
    let mut st: Vec<ScanState> = (0..k)
        .map(|_| ScanState {
            gl: 0.0,
            hl: 0.0,
            last: 0.0,
            seen: false,
            best: None,
        })
        .collect();
    let mcw = params.min_child_weight;
    for &r in &cols.order[f] {
        let r = r as usize;
        let s = slot(r);
        if s == NONE {
            continue;
        }
        let s = s as usize;
        let v = values[r * n_cols + f];
        let state = &mut st[s];
        if state.seen && v > state.last {
            let (g, h) = totals[s];
            let mut threshold = 0.5 * (state.last + v);
            if !(state.last < threshold && threshold <= v) {
                threshold = v;
            }
            let has_missing = hm[s] > 0.0 || gm[s] != 0.0;
            let mut options = [
                (state.gl, state.hl, false),
                (state.gl + gm[s], state.hl + hm[s], true),
            ];
            let n_options = if has_missing { 2 } else { 1 };
            if !has_missing {
                // No missing rows here: default toward the heavier child.
                options[0].2 = state.hl >= h - state.hl;
            }
            for &(lg, lh, miss_left) in &options[..n_options] {
                if lh < mcw || h - lh < mcw {
                    continue;
                }
                let gain = split_gain(lg, lh, g, h, params.lambda);
                if gain > params.min_split_gain && state.best.is_none_or(|b| gain > b.gain) {
                    state.best = Some(Candidate {
                        gain,
                        feature: f,
                        threshold,
                        missing_goes_left: miss_left,
                        left_g: lg,
                        left_h: lh,
                    });
                }
            }
        }
        state.gl += grad[r];
        state.hl += hess[r];
        state.last = v;
        state.seen = true;
    }
    st.into_iter().map(|s| s.best).collect()
}

/// Grow one tree on the rows flagged in `active`.
#[allow(clippy::too_many_arguments)]
pub fn grow_tree(
    values: &[f64],
    n_rows: usize,
    n_cols: usize,
    cols: &SortedColumns,
    grad: &[f64],
    hess: &[f64],
    active: &[bool],
    params: &TreeParams,
    parallel: bool,
) -> TreeNode {
    let mut row_node: Vec<u32> = (0..n_rows)
        .map(|r| if active[r] { 0 } else { NONE })
        .collect();
    let (mut g0, mut h0) = (0.0, 0.0);
    for r in 0..n_rows {
        if active[r] {
            g0 += grad[r];
            h0 += hess[r];
        }
    }
    let mut nodes = vec![BuildNode {
        g: g0,
        h: h0,
        depth: 0,
        split: None,
    }];
    let mut frontier: Vec<usize> = if params.max_depth > 0 {
        vec![0]
    } else {
        vec![]
    };

    while !frontier.is_empty() {
        let mut slot_of = vec![NONE; nodes.len()];
        for (i, &n) in frontier.iter().enumerate() {
            slot_of[n] = i as u32;
        }
        let totals: Vec<(f64, f64)> = frontier.iter().map(|&n| (nodes[n].g, nodes[n].h)).collect();
        let scan = |f: usize| {
            scan_feature(
                f, values, n_cols, cols, grad, hess, &row_node, &slot_of, &totals, params,
            )
        };
        let per_feature: Vec<Vec<Option<Candidate>>> = if parallel {
            (0..n_cols).into_par_iter().map(scan).collect()
        } else {
            (0..n_cols).map(scan).collect()
        };

        let mut next = Vec::new();
        let mut split_of: Vec<Option<(Candidate, usize, usize)>> = vec![None; frontier.len()];
        for (slot, &node) in frontier.iter().enumerate() {
            let mut best: Option<Candidate> = None;
            for cands in &per_feature {
                if let Some(c) = cands[slot] {
                    if best.is_none_or(|b| c.gain > b.gain) {
                        best = Some(c);
                    }
                }
            }
            if let Some(c) = best {
                let depth = nodes[node].depth + 1;
                let (g, h) = (nodes[node].g, nodes[node].h);
                let left = nodes.len();
                nodes.push(BuildNode {
                    g: c.left_g,
                    h: c.left_h,
                    depth,
                    split: None,
                });
                let right = nodes.len();
                nodes.push(BuildNode {
                    g: g - c.left_g,
                    h: h - c.left_h,
                    depth,
                    split: None,
                });
                nodes[node].split = Some((c, left, right));
                split_of[slot] = Some((c, left, right));
                if depth < params.max_depth {
                    next.push(left);
                    next.push(right);
                }
            }
        }

        for r in 0..n_rows {
            let n = row_node[r];
            if n == NONE {
                continue;
            }
            let s = slot_of[n as usize];
            if s == NONE {
                continue;
            }
            if let Some((c, left, right)) = split_of[s as usize] {
                let v = values[r * n_cols + c.feature];
                let go_left = if v.is_nan() {
                    c.missing_goes_left
                } else {
                    v < c.threshold
                };
                row_node[r] = if go_left { left as u32 } else { right as u32 };
            }
        }
        frontier = next;
    }

    fn build(nodes: &[BuildNode], i: usize, lambda: f64) -> TreeNode {
        match nodes[i].split {
            None => TreeNode::Leaf {
                value: leaf_weight(nodes[i].g, nodes[i].h, lambda),
            },
            Some((c, l, r)) => TreeNode::Split {
                feature: c.feature,
                threshold: c.threshold,
                missing_goes_left: c.missing_goes_left,
                left: Box::new(build(nodes, l, lambda)),
                right: Box::new(build(nodes, r, lambda)),
            },
        }
    }
    build(&nodes, 0, params.lambda)
}
