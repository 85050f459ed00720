use serde::{Deserialize, Serialize};

use super::{sup_gap, BoundaryDistanceData};
use crate::error::{Error, Result};

/// Above this many sources the assignment is greedy with a verification pass.
pub const EXACT_LIMIT: usize = 512;

/// One-to-one correspondence between two data sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    /// `assignment[i]` is the row of the second data set matched to row `i`.
    pub assignment: Vec<usize>,
    pub mismatch: Vec<f64>,
    pub max_mismatch: f64,
    /// Rows whose second-best candidate lies within `2 eps` of the match.
    pub ambiguous: usize,
    pub exact: bool,
}

/// Minimum-cost perfect assignment for a square cost matrix (row-major).
/// Returns `assign[row] = column`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // potentials u (rows), v (columns); p[j] = row matched to column j, 1-based
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

fn greedy(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut order: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, row) in cost.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            order.push((c, i, j));
        }
    }
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut assign = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (_, i, j) in order {
        if assign[i] == usize::MAX && !taken[j] {
            assign[i] = j;
            taken[j] = true;
        }
    }
    // verification pass: pairwise swaps that lower the larger of two costs
    let mut improved = true;
    while improved {
        improved = false;
        for a in 0..n {
            for b in a + 1..n {
                let (ja, jb) = (assign[a], assign[b]);
                let now = cost[a][ja].max(cost[b][jb]);
                let swapped = cost[a][jb].max(cost[b][ja]);
                if swapped < now {
                    assign.swap(a, b);
                    improved = true;
                }
            }
        }
    }
    assign
}

/// Matches the r-vectors of `data1` to those of `data2`, whose mesh is
/// related to the first by `phi` (`phi[k]` is the node of `data2`
/// corresponding to node `k` of `data1`; identity if `None`). The cost of a
/// pair is the sup-norm mismatch.
pub fn match_datasets(
    data1: &BoundaryDistanceData,
    data2: &BoundaryDistanceData,
    phi: Option<&[usize]>,
    eps: f64,
) -> Result<Matching> {
    data1.validate()?;
    data2.validate()?;
    let m = data1.mesh_len();
    if data2.mesh_len() != m {
        return Err(Error::Input(format!("mesh sizes differ: {m} vs {}", data2.mesh_len())));
    }
    if data1.len() != data2.len() {
        return Err(Error::Input(format!(
            "source counts differ: {} vs {}",
            data1.len(),
            data2.len()
        )));
    }
    let identity: Vec<usize> = (0..m).collect();
    let phi = phi.unwrap_or(&identity);
    if phi.len() != m || phi.iter().any(|&k| k >= m) {
        return Err(Error::Input("boundary correspondence is not a map onto the mesh".into()));
    }
    let pulled: Vec<Vec<f64>> = data2
        .r_vectors
        .iter()
        .map(|r| phi.iter().map(|&k| r[k]).collect())
        .collect();
    let cost: Vec<Vec<f64>> = data1
        .r_vectors
        .iter()
        .map(|a| pulled.iter().map(|b| sup_gap(a, b)).collect())
        .collect();
    let n = cost.len();
    let exact = n <= EXACT_LIMIT;
    let assignment = if exact { hungarian(&cost) } else { greedy(&cost) };
    let mismatch: Vec<f64> = (0..n).map(|i| cost[i][assignment[i]]).collect();
    let max_mismatch = mismatch.iter().cloned().fold(0.0, f64::max);
    let ambiguous = (0..n)
        .filter(|&i| {
            let scale = data1.r_vectors[i].iter().cloned().fold(0.0, f64::max);
            let tol = 2.0 * (eps * scale + 1e-9);
            (0..n).any(|j| j != assignment[i] && cost[i][j] <= mismatch[i] + tol)
        })
        .count();
    Ok(Matching {
        assignment,
        mismatch,
        max_mismatch,
        ambiguous,
        exact,
    })
}
