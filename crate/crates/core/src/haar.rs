//! Haar wavelet transform of data over a dendrogram.
//!
//! Walking up the tree, a node with child vectors `f'` (its left child) and
//! `f''` (its right child) gets the smooth `s = (f' + f'') / 2` and the
//! detail `d = s - f'' = (f' - f'') / 2`, so that `f' = s + d` and
//! `f'' = s - d`. The left child is the one carrying `+d`. Swapping a
//! node's children negates its detail and leaves everything else unchanged.

use serde::{Deserialize, Serialize};

use crate::dendrogram::{Dendrogram, NodeRef};
use crate::error::{Error, Result};
use crate::matrix::ObservationMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletDecomposition {
    tree: Dendrogram,
    smooth: Vec<f64>,
    /// `details[r - 1]` belongs to the rank-`r` node.
    details: Vec<Vec<f64>>,
}

impl WaveletDecomposition {
    /// Assembles a decomposition from parts, checking dimensions.
    pub fn new(tree: Dendrogram, smooth: Vec<f64>, details: Vec<Vec<f64>>) -> Result<Self> {
        let expected = tree.n_terminals().saturating_sub(1);
        if details.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{} detail vectors for a tree with {expected} nodes",
                details.len()
            )));
        }
        if let Some(r) = details.iter().position(|d| d.len() != smooth.len()) {
            return Err(Error::DimensionMismatch(format!(
                "detail {} has {} components, smooth has {}",
                r + 1,
                details[r].len(),
                smooth.len()
            )));
        }
        Ok(Self {
            tree,
            smooth,
            details,
        })
    }

    pub fn tree(&self) -> &Dendrogram {
        &self.tree
    }

    pub fn smooth(&self) -> &[f64] {
        &self.smooth
    }

    pub fn details(&self) -> &[Vec<f64>] {
        &self.details
    }

    pub fn detail(&self, rank: usize) -> &[f64] {
        &self.details[rank - 1]
    }

    pub fn dim(&self) -> usize {
        self.smooth.len()
    }

    /// Child carrying `+d` at each node, by rank.
    pub fn sign_map(&self) -> Vec<NodeRef> {
        self.tree.nodes().iter().map(|n| n.left).collect()
    }

    /// Coefficients with one row per attribute and columns
    /// `s, d_{n-1}, ..., d_1`.
    pub fn table(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|k| {
                std::iter::once(self.smooth[k])
                    .chain(self.details.iter().rev().map(|d| d[k]))
                    .collect()
            })
            .collect()
    }

    /// Column names matching [`table`](Self::table).
    pub fn table_header(&self) -> Vec<String> {
        let top = self.details.len();
        std::iter::once(format!("s{top}"))
            .chain((1..=top).rev().map(|r| format!("d{r}")))
            .collect()
    }

    /// Copy with every detail component of magnitude below `threshold` set
    /// to zero.
    pub fn thresholded(&self, threshold: f64) -> Self {
        let mut out = self.clone();
        for v in out.details.iter_mut().flatten() {
            if v.abs() < threshold {
                *v = 0.0;
            }
        }
        out
    }
}

pub fn forward(h: &Dendrogram, data: &ObservationMatrix) -> Result<WaveletDecomposition> {
    let n = h.n_terminals();
    if data.n_rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} data rows for {n} terminals",
            data.n_rows()
        )));
    }
    let m = data.n_cols();
    let mut smooths: Vec<Vec<f64>> = Vec::with_capacity(n.saturating_sub(1));
    let mut details = Vec::with_capacity(n.saturating_sub(1));
    let value = |r: NodeRef, smooths: &[Vec<f64>]| -> Vec<f64> {
        match r {
            NodeRef::Terminal(i) => data.row(i).to_vec(),
            NodeRef::Node(rank) => smooths[rank - 1].clone(),
        }
    };
    for node in h.nodes() {
        let plus = value(node.left, &smooths);
        let minus = value(node.right, &smooths);
        let s: Vec<f64> = plus.iter().zip(&minus).map(|(a, b)| (a + b) / 2.0).collect();
        // Computed as a half-difference so that swapping the children
        // negates it exactly.
        let d: Vec<f64> = plus.iter().zip(&minus).map(|(a, b)| (a - b) / 2.0).collect();
        smooths.push(s);
        details.push(d);
    }
    let smooth = match smooths.last() {
        Some(s) => s.clone(),
        None => data.row(0).to_vec(),
    };
    debug_assert_eq!(smooth.len(), m);
    WaveletDecomposition::new(h.clone(), smooth, details)
}

/// Rebuilds the terminal data by descending from the root smooth.
pub fn inverse(w: &WaveletDecomposition) -> ObservationMatrix {
    let h = &w.tree;
    let n = h.n_terminals();
    let m = w.dim();
    let mut node_vals: Vec<Vec<f64>> = vec![Vec::new(); n.saturating_sub(1)];
    let mut out = vec![0.0; n * m];
    if n == 1 {
        out.copy_from_slice(&w.smooth);
    }
    if let Some(root) = h.root() {
        node_vals[root.rank - 1] = w.smooth.clone();
    }
    for node in h.nodes().iter().rev() {
        let s = std::mem::take(&mut node_vals[node.rank - 1]);
        let d = &w.details[node.rank - 1];
        for (child, sign) in [(node.left, 1.0), (node.right, -1.0)] {
            let v: Vec<f64> = s.iter().zip(d).map(|(s, d)| s + sign * d).collect();
            match child {
                NodeRef::Terminal(i) => out[i * m..(i + 1) * m].copy_from_slice(&v),
                NodeRef::Node(r) => node_vals[r - 1] = v,
            }
        }
    }
    ObservationMatrix::new(n, m, out).expect("dimensions are consistent")
}

/// Wavelet regression: zero small detail components, then invert.
pub fn regress(w: &WaveletDecomposition, threshold: f64) -> Result<ObservationMatrix> {
    if !(threshold >= 0.0) {
        return Err(Error::OutOfRange {
            what: "threshold",
            detail: format!("{threshold} must be nonnegative"),
        });
    }
    Ok(inverse(&w.thresholded(threshold)))
}
