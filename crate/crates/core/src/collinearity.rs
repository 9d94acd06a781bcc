//! Multicollinearity treatment: correlation distance, classical MDS,
//! k-means on the embedding, and one representative per cluster.
//!
//! Only numeric columns are clustered. Categorical columns pass through.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::linalg::lstsq;
use crate::metrics::pearson;
use crate::rng::stream;

const MODULE: &str = "collinearity";

/// K-means restarts per k.
pub const RESTARTS: usize = 10;
/// Lloyd iteration cap.
pub const MAX_ITER: usize = 300;
/// Default target for between/total variance.
pub const TARGET_RATIO: f64 = 0.8;

/// Pairwise absolute Pearson correlation of the named numeric columns.
pub fn abs_corr_matrix(table: &FeatureTable, columns: &[String]) -> Result<Vec<Vec<f64>>> {
    if columns.len() < 2 {
        return Err(Error::contract(MODULE, "abs_corr_matrix needs at least two columns"));
    }
    let data = columns
        .iter()
        .map(|c| table.values(c))
        .collect::<Result<Vec<_>>>()?;
    for (name, v) in columns.iter().zip(&data) {
        let first = v[0];
        if v.iter().all(|x| *x == first) {
            return Err(Error::domain(MODULE, format!("column `{name}` has zero variance")));
        }
    }
    Ok(abs_corr(&data))
}

fn abs_corr(data: &[&[f64]]) -> Vec<Vec<f64>> {
    let n = data.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        out[i][i] = 1.0;
        for j in i + 1..n {
            let r = pearson(data[i], data[j]).map_or(0.0, f64::abs);
            out[i][j] = r;
            out[j][i] = r;
        }
    }
    out
}

/// Embedding produced by classical MDS.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// One coordinate vector per input point.
    pub points: Vec<Vec<f64>>,
    /// All eigenvalues of the double-centred matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// Sum of |negative eigenvalues| dropped, relative to the sum of
    /// positive ones.
    pub truncated_mass: f64,
}

/// Classical (Torgerson) MDS. `dim = None` keeps every axis whose eigenvalue
/// exceeds `1e-10 · max(1, largest eigenvalue)`.
pub fn classical_mds(distance: &[Vec<f64>], dim: Option<usize>) -> Result<Embedding> {
    let n = distance.len();
    if n == 0 {
        return Err(Error::contract(MODULE, "classical_mds: empty distance matrix"));
    }
    if distance.iter().any(|r| r.len() != n) {
        return Err(Error::contract(MODULE, "classical_mds: distance matrix is not square"));
    }
    let scale = distance
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    for i in 0..n {
        if distance[i][i].abs() > 1e-12 * scale {
            return Err(Error::contract(MODULE, format!("classical_mds: nonzero diagonal at {i}")));
        }
        for j in 0..i {
            let (a, b) = (distance[i][j], distance[j][i]);
            if !a.is_finite() || a < 0.0 || (a - b).abs() > 1e-12 * scale {
                return Err(Error::contract(
                    MODULE,
                    format!("classical_mds: entries ({i},{j}) and ({j},{i}) are not a symmetric distance"),
                ));
            }
        }
    }
    let sq = DMatrix::from_fn(n, n, |i, j| distance[i][j] * distance[i][j]);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let top = eigenvalues.first().copied().unwrap_or(0.0);
    let tol = 1e-10 * top.max(1.0);
    let positive = eigenvalues.iter().filter(|v| **v > tol).count();
    let keep = dim.map_or(positive, |d| d.min(positive));
    let pos_mass: f64 = eigenvalues.iter().filter(|v| **v > 0.0).sum();
    let neg_mass: f64 = eigenvalues.iter().filter(|v| **v < 0.0).map(|v| -v).sum();
    let points = (0..n)
        .map(|p| {
            order[..keep]
                .iter()
                .map(|&i| eig.eigenvectors[(p, i)] * eig.eigenvalues[i].sqrt())
                .collect()
        })
        .collect();
    Ok(Embedding {
        points,
        eigenvalues,
        truncated_mass: if pos_mass > 0.0 { neg_mass / pos_mass } else { 0.0 },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    /// Cluster id per point, numbered by first appearance.
    pub assignments: Vec<usize>,
    pub within: f64,
    pub total: f64,
    /// between / total, computed as `1 - within / total`.
    pub variance_ratio: f64,
}

fn sqdist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn centroids(points: &[Vec<f64>], assign: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dim = points.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assign) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        if n > 0 {
            for v in s.iter_mut() {
                *v /= n as f64;
            }
        }
    }
    sums
}

fn within_ss(points: &[Vec<f64>], assign: &[usize], k: usize) -> f64 {
    let cents = centroids(points, assign, k);
    points.iter().zip(assign).map(|(p, &c)| sqdist(p, &cents[c])).sum()
}

fn relabel(assign: &[usize]) -> Vec<usize> {
    let mut map: Vec<Option<usize>> = vec![None; assign.iter().max().map_or(0, |m| m + 1)];
    let mut next = 0;
    assign
        .iter()
        .map(|&c| {
            *map[c].get_or_insert_with(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

fn lloyd_once(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = points.len();
    // k-means++ seeding
    let mut centers: Vec<Vec<f64>> = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sqdist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[idx].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sqdist(p, centers.last().expect("just pushed")));
        }
    }
    let nearest = |p: &[f64], centers: &[Vec<f64>]| {
        let mut best = (0, f64::INFINITY);
        for (c, ctr) in centers.iter().enumerate() {
            let d = sqdist(p, ctr);
            if d < best.1 {
                best = (c, d);
            }
        }
        best.0
    };
    let mut assign: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
    for _ in 0..MAX_ITER {
        centers = centroids(points, &assign, k);
        // refill empty clusters with the point farthest from its centre
        let mut counts = vec![0usize; k];
        for &c in &assign {
            counts[c] += 1;
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .filter(|&i| counts[assign[i]] > 1)
                    .max_by(|&a, &b| {
                        sqdist(&points[a], &centers[assign[a]])
                            .total_cmp(&sqdist(&points[b], &centers[assign[b]]))
                            .then(b.cmp(&a))
                    });
                if let Some(i) = far {
                    counts[assign[i]] -= 1;
                    assign[i] = c;
                    counts[c] = 1;
                    centers[c] = points[i].clone();
                }
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
        if next == assign {
            break;
        }
        assign = next;
    }
    assign
}

/// Best of [`RESTARTS`] seeded k-means runs (lowest within-cluster sum of
/// squares, ties to the earliest restart).
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeans> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::config(MODULE, "k", format!("k = {k} outside 1..={n}")));
    }
    let mean = centroids(points, &vec![0; n], 1).remove(0);
    let total: f64 = points.iter().map(|p| sqdist(p, &mean)).sum();
    let mut best: Option<(f64, Vec<usize>)> = None;
    if k == n {
        best = Some((0.0, (0..n).collect()));
    } else if k == 1 {
        best = Some((total, vec![0; n]));
    } else {
        for r in 0..RESTARTS {
            let mut rng = stream(seed, &["collinearity", "kmeans", &k.to_string(), &r.to_string()]);
            let assign = lloyd_once(points, k, &mut rng);
            let w = within_ss(points, &assign, k);
            if best.as_ref().is_none_or(|(bw, _)| w < *bw) {
                best = Some((w, assign));
            }
        }
    }
    let (within, assign) = best.expect("at least one restart");
    let variance_ratio = if total > 0.0 {
        (1.0 - within / total).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(KMeans {
        assignments: relabel(&assign),
        within,
        total,
        variance_ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub variables: Vec<String>,
    pub embedding: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub k: usize,
    pub variance_ratio: f64,
    /// Ratio for k = 1, 2, ... up to the chosen k.
    pub ratio_by_k: Vec<f64>,
    pub representatives: Vec<String>,
}

impl ClusteringResult {
    pub fn clusters(&self) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new(); self.k];
        for (v, &c) in self.variables.iter().zip(&self.assignments) {
            out[c].push(v.clone());
        }
        out
    }
}

/// Smallest k whose variance ratio reaches `target_ratio`.
pub fn choose_k(
    variables: &[String],
    embedding: &[Vec<f64>],
    target_ratio: f64,
    seed: u64,
) -> Result<ClusteringResult> {
    let n = embedding.len();
    if n == 0 || variables.len() != n {
        return Err(Error::contract(MODULE, "choose_k: one embedding point per variable required"));
    }
    let mut ratio_by_k = Vec::new();
    for k in 1..=n {
        let km = kmeans(embedding, k, seed)?;
        ratio_by_k.push(km.variance_ratio);
        if km.variance_ratio >= target_ratio || k == n {
            return Ok(ClusteringResult {
                variables: variables.to_vec(),
                embedding: embedding.to_vec(),
                assignments: km.assignments,
                k,
                variance_ratio: km.variance_ratio,
                ratio_by_k,
                representatives: Vec::new(),
            });
        }
    }
    unreachable!("k = n always terminates")
}

/// Per cluster, the member with the largest |r| against `response`; ties go
/// to the lexicographically smallest name. Returned in cluster order.
pub fn select_representatives(result: &ClusteringResult, table: &FeatureTable, response: &[f64]) -> Result<Vec<String>> {
    let mut out = Vec::with_capacity(result.k);
    for members in result.clusters() {
        let mut best: Option<(f64, &String)> = None;
        for m in &members {
            let r = pearson(table.values(m)?, response).map_or(0.0, f64::abs);
            let better = match best {
                None => true,
                Some((br, bn)) => r > br || (r == br && m < bn),
            };
            if better {
                best = Some((r, m));
            }
        }
        if let Some((_, name)) = best {
            out.push(name.clone());
        }
    }
    Ok(out)
}

/// Variance inflation factor per column: `1 / (1 - R²)` regressing the
/// column on the others plus an intercept. Perfect collinearity gives
/// `f64::INFINITY`.
pub fn vif(table: &FeatureTable, columns: &[String]) -> Result<Vec<(String, f64)>> {
    if columns.len() < 2 {
        return Err(Error::contract(MODULE, "vif needs at least two columns"));
    }
    let data = columns
        .iter()
        .map(|c| table.values(c).map(<[f64]>::to_vec))
        .collect::<Result<Vec<_>>>()?;
    let m = table.n_rows();
    let mut out = Vec::with_capacity(columns.len());
    for (i, name) in columns.iter().enumerate() {
        let y = &data[i];
        let mean = y.iter().sum::<f64>() / m as f64;
        let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
        if tss <= 0.0 {
            out.push((name.clone(), f64::INFINITY));
            continue;
        }
        let mut design = vec![vec![1.0; m]];
        design.extend(data.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| c.clone()));
        let ls = lstsq(&design, y);
        let unexplained = ls.rss / tss;
        let v = if unexplained <= 1e-13 { f64::INFINITY } else { 1.0 / unexplained.min(1.0) };
        out.push((name.clone(), v));
    }
    Ok(out)
}

pub fn max_vif(values: &[(String, f64)]) -> f64 {
    values.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max)
}

/// Outcome of [`decollinearize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollinearityReport {
    pub clusters: Vec<Vec<String>>,
    pub representatives: Vec<String>,
    pub k: usize,
    pub variance_ratio: f64,
    pub ratio_by_k: Vec<f64>,
    /// Relative mass of negative MDS eigenvalues that was truncated.
    pub truncated_mass: f64,
    /// Numeric columns dropped for having zero variance.
    pub dropped_constant: Vec<String>,
    /// Categorical columns kept without clustering.
    pub categorical: Vec<String>,
    pub vif_before: Option<Vec<(String, f64)>>,
    pub vif_after: Option<Vec<(String, f64)>>,
    /// Selected columns in table order.
    pub selected: Vec<String>,
}

/// Cluster the numeric columns of `fit_rows`, keep one per cluster plus all
/// categorical columns. The returned names follow the table's column order.
pub fn decollinearize(fit_rows: &FeatureTable, target_ratio: f64, seed: u64, with_vif: bool) -> Result<CollinearityReport> {
    let mut numeric = Vec::new();
    let mut dropped_constant = Vec::new();
    for name in fit_rows.numeric_names() {
        let v = fit_rows.values(&name)?;
        if v.iter().all(|x| *x == v[0]) {
            dropped_constant.push(name);
        } else {
            numeric.push(name);
        }
    }
    let categorical = fit_rows.categorical_names();
    let (clustering, truncated_mass) = if numeric.len() >= 2 {
        let corr = abs_corr_matrix(fit_rows, &numeric)?;
        let dist: Vec<Vec<f64>> = corr
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().enumerate().map(|(j, r)| if i == j { 0.0 } else { 1.0 - r }).collect())
            .collect();
        let emb = classical_mds(&dist, None)?;
        let mut result = choose_k(&numeric, &emb.points, target_ratio, seed)?;
        result.representatives = select_representatives(&result, fit_rows, fit_rows.response())?;
        (result, emb.truncated_mass)
    } else {
        let n = numeric.len();
        (
            ClusteringResult {
                variables: numeric.clone(),
                embedding: vec![Vec::new(); n],
                assignments: (0..n).collect(),
                k: n,
                variance_ratio: 1.0,
                ratio_by_k: vec![1.0; n],
                representatives: numeric.clone(),
            },
            0.0,
        )
    };
    let keep: std::collections::BTreeSet<&str> = clustering
        .representatives
        .iter()
        .chain(&categorical)
        .map(String::as_str)
        .collect();
    let selected: Vec<String> = fit_rows
        .column_names()
        .into_iter()
        .filter(|c| keep.contains(c.as_str()))
        .collect();
    let (vif_before, vif_after) = if with_vif {
        let before = (numeric.len() >= 2).then(|| vif(fit_rows, &numeric)).transpose()?;
        let after = (clustering.representatives.len() >= 2)
            .then(|| vif(fit_rows, &clustering.representatives))
            .transpose()?;
        (before, after)
    } else {
        (None, None)
    };
    Ok(CollinearityReport {
        clusters: clustering.clusters(),
        representatives: clustering.representatives.clone(),
        k: clustering.k,
        variance_ratio: clustering.variance_ratio,
        ratio_by_k: clustering.ratio_by_k.clone(),
        truncated_mass,
        dropped_constant,
        categorical,
        vif_before,
        vif_after,
        selected,
    })
}
