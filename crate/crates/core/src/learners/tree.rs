//! Weighted CART regression trees, grown level by level over presorted
//! feature orders.
//!
//! A node with gradient sum `G` and weight `W` scores `G² / (W + λ)`; a split
//! gains `G_L²/(W_L+λ) + G_R²/(W_R+λ) - G²/(W+λ)` and a leaf predicts
//! `G / (W + λ)`. With `λ = 0` and `G` the response sum this is the usual
//! variance-reduction tree with mean leaves. Rows go left when
//! `x <= threshold`.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One node in the flat array; `left`/`right` index into the same array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub split_var: Option<usize>,
    pub threshold: Option<f64>,
    pub left: Option<u32>,
    pub right: Option<u32>,
    pub leaf_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// A tree that predicts `value` everywhere.
    pub fn leaf(value: f64) -> Self {
        Tree {
            nodes: vec![Node {
                split_var: None,
                threshold: None,
                left: None,
                right: None,
                leaf_value: value,
            }],
        }
    }

    /// Prediction for row `i` of feature-major `cols`.
    pub fn predict_at(&self, cols: &[&[f64]], i: usize) -> f64 {
        let mut n = &self.nodes[0];
        while let (Some(f), Some(t), Some(l), Some(r)) = (n.split_var, n.threshold, n.left, n.right) {
            n = if cols[f][i] <= t {
                &self.nodes[l as usize]
            } else {
                &self.nodes[r as usize]
            };
        }
        n.leaf_value
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match (t.nodes[i].left, t.nodes[i].right) {
                (Some(l), Some(r)) => 1 + go(t, l as usize).max(go(t, r as usize)),
                _ => 0,
            }
        }
        go(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.split_var.is_none()).count()
    }

    /// Structural check used after deserialization.
    pub fn is_well_formed(&self, n_features: usize) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let len = self.nodes.len() as u32;
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0u32];
        while let Some(i) = stack.pop() {
            if i >= len || std::mem::replace(&mut seen[i as usize], true) {
                return false;
            }
            let n = &self.nodes[i as usize];
            if !n.leaf_value.is_finite() {
                return false;
            }
            match (n.split_var, n.threshold, n.left, n.right) {
                (None, None, None, None) => {}
                (Some(f), Some(t), Some(l), Some(r)) => {
                    if f >= n_features || !t.is_finite() || l <= i || r <= i {
                        return false;
                    }
                    stack.push(l);
                    stack.push(r);
                }
                _ => return false,
            }
        }
        seen.iter().all(|s| *s)
    }
}

/// Row indices of each feature sorted by value (ties by row index).
#[derive(Debug, Clone)]
pub struct Presorted {
    order: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(cols: &[&[f64]]) -> Self {
        let order = cols
            .iter()
            .map(|c| {
                let mut idx: Vec<u32> = (0..c.len() as u32).collect();
                idx.sort_by(|&a, &b| c[a as usize].total_cmp(&c[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Self { order }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Minimum total weight in each child.
    pub min_leaf: f64,
    pub lambda: f64,
    /// Features tried per node; `>= n_features` means all.
    pub mtry: usize,
}

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Stats {
    w: f64,
    g: f64,
    h: f64,
}

#[derive(Clone, Copy)]
struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Grow one tree on targets `g` with row weights `weight` (0 excludes a
/// row). `rng` drives per-node feature sampling when `mtry` is below the
/// feature count.
pub fn build<R: Rng>(
    cols: &[&[f64]],
    sorted: &Presorted,
    g: &[f64],
    weight: &[f64],
    params: &TreeParams,
    rng: &mut R,
) -> Tree {
    let n = g.len();
    let k = cols.len();
    let mut node_of: Vec<u32> = weight.iter().map(|w| if *w > 0.0 { 0 } else { NONE }).collect();
    let mut stats = vec![Stats { w: 0.0, g: 0.0, h: 0.0 }];
    for i in 0..n {
        if node_of[i] != NONE {
            let s = &mut stats[0];
            s.w += weight[i];
            s.g += weight[i] * g[i];
            s.h += weight[i] * g[i] * g[i];
        }
    }
    let mut nodes = vec![Node {
        split_var: None,
        threshold: None,
        left: None,
        right: None,
        leaf_value: 0.0,
    }];
    let mut frontier: Vec<u32> = if stats[0].w >= 2.0 * params.min_leaf { vec![0] } else { vec![] };
    let mtry = params.mtry.min(k);
    let mut depth = 0;
    let mut slot_of: Vec<usize> = vec![usize::MAX];
    while !frontier.is_empty() && depth < params.max_depth && k > 0 {
        slot_of.resize(nodes.len(), usize::MAX);
        slot_of.iter_mut().for_each(|s| *s = usize::MAX);
        for (s, &node) in frontier.iter().enumerate() {
            slot_of[node as usize] = s;
        }
        let m = frontier.len();
        let masks: Option<Vec<Vec<bool>>> = (mtry < k).then(|| {
            (0..m)
                .map(|_| {
                    let mut mask = vec![false; k];
                    for f in sample(rng, k, mtry) {
                        mask[f] = true;
                    }
                    mask
                })
                .collect()
        });
        let mut best: Vec<Option<Best>> = vec![None; m];
        let mut wl = vec![0.0; m];
        let mut gl = vec![0.0; m];
        let mut last = vec![f64::NAN; m];
        for f in 0..k {
            if let Some(masks) = &masks {
                if !masks.iter().any(|mk| mk[f]) {
                    continue;
                }
            }
            wl.iter_mut().for_each(|v| *v = 0.0);
            gl.iter_mut().for_each(|v| *v = 0.0);
            let col = cols[f];
            for &r in &sorted.order[f] {
                let r = r as usize;
                let node = node_of[r];
                if node == NONE {
                    continue;
                }
                let s = slot_of[node as usize];
                if s == usize::MAX {
                    continue;
                }
                if let Some(masks) = &masks {
                    if !masks[s][f] {
                        continue;
                    }
                }
                let v = col[r];
                if wl[s] > 0.0 && v > last[s] {
                    let st = stats[node as usize];
                    let wr = st.w - wl[s];
                    if wl[s] >= params.min_leaf && wr >= params.min_leaf {
                        let gr = st.g - gl[s];
                        let gain = gl[s] * gl[s] / (wl[s] + params.lambda) + gr * gr / (wr + params.lambda)
                            - st.g * st.g / (st.w + params.lambda);
                        if best[s].is_none_or(|b| gain > b.gain) {
                            let mut t = 0.5 * (last[s] + v);
                            if t >= v {
                                t = last[s];
                            }
                            best[s] = Some(Best {
                                gain,
                                feature: f,
                                threshold: t,
                            });
                        }
                    }
                }
                wl[s] += weight[r];
                gl[s] += weight[r] * g[r];
                last[s] = v;
            }
        }
        // apply splits
        let mut split_of: Vec<Option<(u32, u32, usize, f64)>> = vec![None; m];
        for (s, &node) in frontier.iter().enumerate() {
            let Some(b) = best[s] else { continue };
            let st = stats[node as usize];
            if !(b.gain > 1e-12 * st.h.max(f64::MIN_POSITIVE)) {
                continue;
            }
            let l = nodes.len() as u32;
            for _ in 0..2 {
                nodes.push(Node {
                    split_var: None,
                    threshold: None,
                    left: None,
                    right: None,
                    leaf_value: 0.0,
                });
                stats.push(Stats { w: 0.0, g: 0.0, h: 0.0 });
            }
            let nd = &mut nodes[node as usize];
            nd.split_var = Some(b.feature);
            nd.threshold = Some(b.threshold);
            nd.left = Some(l);
            nd.right = Some(l + 1);
            split_of[s] = Some((l, l + 1, b.feature, b.threshold));
        }
        for i in 0..n {
            let node = node_of[i];
            if node == NONE {
                continue;
            }
            let s = slot_of.get(node as usize).copied().unwrap_or(usize::MAX);
            if s == usize::MAX {
                continue;
            }
            if let Some((l, r, f, t)) = split_of[s] {
                let child = if cols[f][i] <= t { l } else { r };
                node_of[i] = child;
                let st = &mut stats[child as usize];
                st.w += weight[i];
                st.g += weight[i] * g[i];
                st.h += weight[i] * g[i] * g[i];
            }
        }
        depth += 1;
        frontier = split_of
            .iter()
            .flatten()
            .flat_map(|(l, r, _, _)| [*l, *r])
            .filter(|&c| stats[c as usize].w >= 2.0 * params.min_leaf)
            .collect();
    }
    for (node, st) in nodes.iter_mut().zip(&stats) {
        node.leaf_value = if st.w + params.lambda > 0.0 { st.g / (st.w + params.lambda) } else { 0.0 };
    }
    Tree { nodes }
}
