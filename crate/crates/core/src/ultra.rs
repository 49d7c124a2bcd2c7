//! Ultrametric verification, cophenetic matrices and the ordered
//! ultrametric-matrix form.

use crate::agglomerate::{cluster_distances, Criterion};
use crate::dendrogram::Dendrogram;
use crate::error::{Error, Result};
use crate::matrix::{check_permutation, DistanceMatrix, UltrametricMatrix};

/// Relative tolerance used when callers do not supply one.
pub const DEFAULT_RELATIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UltrametricCheck {
    /// `(i, j, k)` with `d(i,k) > max(d(i,j), d(j,k)) + tol`.
    pub witness: Option<(usize, usize, usize)>,
}

impl UltrametricCheck {
    pub fn is_ultrametric(&self) -> bool {
        self.witness.is_none()
    }
}

/// Checks the strong triangle inequality on every triple, stopping at the
/// first violation. `tol` is absolute.
pub fn verify_ultrametric(m: &DistanceMatrix, tol: f64) -> UltrametricCheck {
    let n = m.n();
    for i in 0..n {
        for k in i + 1..n {
            let dik = m.get(i, k);
            for j in 0..n {
                if j == i || j == k {
                    continue;
                }
                if dik > m.get(i, j).max(m.get(j, k)) + tol {
                    return UltrametricCheck {
                        witness: Some((i, j, k)),
                    };
                }
            }
        }
    }
    UltrametricCheck { witness: None }
}

/// [`verify_ultrametric`] with the tolerance scaled to the largest entry.
pub fn verify_ultrametric_default(m: &DistanceMatrix) -> UltrametricCheck {
    verify_ultrametric(m, DEFAULT_RELATIVE_TOL * m.max_entry())
}

/// Entry `(i, j)` is the height of the lowest node covering both terminals.
pub fn cophenetic(h: &Dendrogram) -> UltrametricMatrix {
    let n = h.n_terminals();
    let mut data = vec![0.0; n * n];
    for node in h.nodes() {
        let left = h.members_of(node.left);
        let right = h.members_of(node.right);
        for &a in &left {
            for &b in &right {
                data[a * n + b] = node.height;
                data[b * n + a] = node.height;
            }
        }
    }
    let m = DistanceMatrix::new(n, data).expect("cophenetic heights form a distance matrix");
    UltrametricMatrix::new_unchecked(m)
}

/// Rank of the lowest common node of every pair, as an `n * n` buffer with
/// zeros on the diagonal.
pub fn lowest_common_ranks(h: &Dendrogram) -> Vec<usize> {
    let n = h.n_terminals();
    let mut out = vec![0; n * n];
    for node in h.nodes() {
        for &a in &h.members_of(node.left) {
            for &b in &h.members_of(node.right) {
                out[a * n + b] = node.rank;
                out[b * n + a] = node.rank;
            }
        }
    }
    out
}

/// A permutation under which the matrix takes the ordered ultrametric form:
/// entries right of the diagonal never decrease along a row.
///
/// The order is the terminal order of the single-link dendrogram of `m`.
/// Fails with a precondition error when `m` is not ultrametric at `tol`.
pub fn ultrametric_order(m: &DistanceMatrix, tol: f64) -> Result<Vec<usize>> {
    if let Some((i, j, k)) = verify_ultrametric(m, tol).witness {
        return Err(Error::Precondition(format!(
            "matrix is not ultrametric (violating triple {i}, {j}, {k})"
        )));
    }
    if m.n() < 2 {
        return Ok((0..m.n()).collect());
    }
    let h = cluster_distances(m, Criterion::Single)?;
    Ok(h.terminal_order())
}

/// Whether `m` reordered by `perm` has the ordered ultrametric form:
///
/// 1. each row is non-decreasing to the right of the diagonal;
/// 2. if row `k` opens with a run `d(k,k+1) = ... = d(k,k+l+1)`, then
///    `d(k+1,j) <= d(k,j)` inside the run and `d(k+1,j) = d(k,j)` beyond it.
///
/// Comparisons use the absolute tolerance `tol`.
pub fn is_ultrametric_form(m: &DistanceMatrix, perm: &[usize], tol: f64) -> Result<bool> {
    check_permutation(perm, m.n())?;
    let p = m.permuted(perm)?;
    let n = p.n();
    let eq = |a: f64, b: f64| (a - b).abs() <= tol;
    for k in 0..n {
        for j in k + 2..n {
            if p.get(k, j) < p.get(k, j - 1) - tol {
                return Ok(false);
            }
        }
        if k + 1 >= n {
            continue;
        }
        let first = p.get(k, k + 1);
        let mut run_end = k + 1;
        while run_end + 1 < n && eq(p.get(k, run_end + 1), first) {
            run_end += 1;
        }
        for j in k + 2..n {
            let (below, here) = (p.get(k + 1, j), p.get(k, j));
            let ok = if j <= run_end {
                below <= here + tol
            } else {
                eq(below, here)
            };
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Heights of the lowest common node, looked up directly on the tree; used
/// to cross-check [`cophenetic`].
pub fn lowest_common_height(h: &Dendrogram, a: usize, b: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let pa = h.path_to_root(a);
    let pb = h.path_to_root(b);
    let rank = pa
        .iter()
        .find(|r| pb.contains(r))
        .copied()
        .expect("root is common to all paths");
    h.node(rank).height
}
