//! Least squares by Householder QR with column pivoting.
//!
//! Matrices are column-major `&[Vec<f64>]` (one vector per column), which is
//! how design matrices are assembled from feature columns.

/// Solution of `min ||y - X b||`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    /// One coefficient per input column; dependent columns get 0.
    pub beta: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub rank: usize,
    /// Input column indices found linearly dependent on earlier pivots.
    pub dependent: Vec<usize>,
}

/// Relative threshold on the pivoted diagonal of R below which a column is
/// treated as dependent. Columns are scaled to unit norm first.
pub const RANK_TOL: f64 = 1e-10;

/// Pivoted QR least squares. Never fails: rank deficiency is reported in
/// `rank`/`dependent` and the basic solution (zeros for dependent columns) is
/// returned.
pub fn lstsq(columns: &[Vec<f64>], y: &[f64]) -> LeastSquares {
    let m = y.len();
    let n = columns.len();
    debug_assert!(columns.iter().all(|c| c.len() == m));

    let scale: Vec<f64> = columns
        .iter()
        .map(|c| {
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                norm
            } else {
                1.0
            }
        })
        .collect();
    let mut a: Vec<Vec<f64>> = columns
        .iter()
        .zip(&scale)
        .map(|(c, s)| c.iter().map(|v| v / s).collect())
        .collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut qty = y.to_vec();
    let mut reflectors: Vec<Vec<f64>> = Vec::new();
    let mut rank = 0;
    let mut r00 = 0.0f64;

    for k in 0..n.min(m) {
        let (p, pnorm) = (k..n)
            .map(|j| (j, a[j][k..].iter().map(|v| v * v).sum::<f64>()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let pnorm = pnorm.sqrt();
        if k == 0 {
            r00 = pnorm;
        }
        if !(pnorm > RANK_TOL * r00.max(f64::MIN_POSITIVE)) {
            break;
        }
        a.swap(k, p);
        perm.swap(k, p);

        let x0 = a[k][k];
        let alpha = if x0 >= 0.0 { -pnorm } else { pnorm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|t| t * t).sum();
        if vv > 0.0 {
            for col in a.iter_mut().skip(k + 1) {
                let dot: f64 = v.iter().zip(&col[k..]).map(|(p, q)| p * q).sum();
                let f = 2.0 * dot / vv;
                for (c, vi) in col[k..].iter_mut().zip(&v) {
                    *c -= f * vi;
                }
            }
            let dot: f64 = v.iter().zip(&qty[k..]).map(|(p, q)| p * q).sum();
            let f = 2.0 * dot / vv;
            for (c, vi) in qty[k..].iter_mut().zip(&v) {
                *c -= f * vi;
            }
        }
        a[k][k] = alpha;
        for val in a[k][k + 1..].iter_mut() {
            *val = 0.0;
        }
        reflectors.push(v);
        rank = k + 1;
    }

    // back substitution on the leading rank x rank block
    let mut z = vec![0.0; rank];
    for i in (0..rank).rev() {
        let mut s = qty[i];
        for j in i + 1..rank {
            s -= a[j][i] * z[j];
        }
        z[i] = s / a[i][i];
    }
    let mut beta = vec![0.0; n];
    for (i, zi) in z.iter().enumerate() {
        let col = perm[i];
        beta[col] = zi / scale[col];
    }
    let mut fitted = vec![0.0; m];
    for (c, b) in columns.iter().zip(&beta) {
        if *b != 0.0 {
            for (f, v) in fitted.iter_mut().zip(c) {
                *f += b * v;
            }
        }
    }
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let rss = residuals.iter().map(|r| r * r).sum();
    let mut dependent: Vec<usize> = perm[rank..].to_vec();
    dependent.sort_unstable();
    LeastSquares {
        beta,
        fitted,
        residuals,
        rss,
        rank,
        dependent,
    }
}

/// Solve a small square system by least squares; `None` if singular.
pub fn solve(columns: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let ls = lstsq(columns, rhs);
    (ls.rank == columns.len()).then_some(ls.beta)
}
