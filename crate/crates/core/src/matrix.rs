//! Dense observation and distance matrices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are objects, columns are attributes. Stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl ObservationMatrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidMatrix(format!(
                "observation matrix must be non-empty, got {n_rows}x{n_cols}"
            )));
        }
        if data.len() != n_rows * n_cols {
            return Err(Error::InvalidMatrix(format!(
                "expected {} values for {n_rows}x{n_cols}, got {}",
                n_rows * n_cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite value at row {}, column {}",
                pos / n_cols,
                pos % n_cols
            )));
        }
        Ok(Self {
            n_rows,
            n_cols,
            data,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_cols {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} columns, expected {n_cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), n_cols, data)
    }

    /// A single-column matrix holding `values`.
    pub fn column(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Pairwise Euclidean distances in condensed (upper-triangle, row-major)
    /// order. Each entry is computed independently, so the result does not
    /// depend on the number of worker threads.
    pub fn condensed_distances(&self) -> Vec<f64> {
        let n = self.n_rows;
        (0..n)
            .into_par_iter()
            .flat_map_iter(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| euclidean(self.row(i), self.row(j)))
            .collect()
    }

    pub fn euclidean_distances(&self) -> DistanceMatrix {
        DistanceMatrix::from_condensed(self.n_rows, &self.condensed_distances())
            .expect("euclidean distances form a valid distance matrix")
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Index of pair `(i, j)`, `i < j`, in a condensed matrix over `n` objects.
#[inline]
pub fn condensed_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    n * i - i * (i + 1) / 2 + (j - i - 1)
}

/// Symmetric, nonnegative, zero-diagonal square matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from a full `n * n` row-major buffer, checking symmetry,
    /// nonnegativity and the zero diagonal exactly.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries for {n}x{n}, got {}",
                n * n,
                data.len()
            )));
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::InvalidMatrix(format!(
                    "diagonal entry ({i},{i}) is {} (must be 0)",
                    data[i * n + i]
                )));
            }
            for j in i + 1..n {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::InvalidMatrix(format!(
                        "entry ({i},{j}) = {a} is negative or non-finite"
                    )));
                }
                if a != b {
                    return Err(Error::InvalidMatrix(format!(
                        "asymmetric entries ({i},{j}) = {a} and ({j},{i}) = {b}"
                    )));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(n, data)
    }

    pub fn from_condensed(n: usize, condensed: &[f64]) -> Result<Self> {
        if condensed.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::InvalidMatrix(format!(
                "condensed length {} does not match n = {n}",
                condensed.len()
            )));
        }
        let mut data = vec![0.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                data[i * n + j] = condensed[k];
                data[j * n + i] = condensed[k];
                k += 1;
            }
        }
        Self::new(n, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn condensed(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            out.extend_from_slice(&self.data[i * n + i + 1..(i + 1) * n]);
        }
        out
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Rows and columns reordered so that new index `k` is old index `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n)?;
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for (a, &pa) in perm.iter().enumerate() {
            for (b, &pb) in perm.iter().enumerate() {
                data[a * n + b] = self.get(pa, pb);
            }
        }
        Ok(Self { n, data })
    }

    /// Largest absolute entrywise difference to `other`.
    pub fn max_abs_diff(&self, other: &DistanceMatrix) -> f64 {
        assert_eq!(self.n, other.n, "matrices differ in size");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "permutation has length {}, matrix has {n} rows",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidMatrix(format!(
                "{perm:?} is not a permutation of 0..{n}"
            )));
        }
    }
    Ok(())
}

/// A distance matrix known to satisfy the strong triangle inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UltrametricMatrix(DistanceMatrix);

impl UltrametricMatrix {
    /// Accepts `m` if every triple satisfies the strong triangle inequality
    /// up to `tol`.
    pub fn try_new(m: DistanceMatrix, tol: f64) -> Result<Self> {
        match crate::ultra::verify_ultrametric(&m, tol).witness {
            None => Ok(Self(m)),
            Some((i, j, k)) => Err(Error::Precondition(format!(
                "matrix is not ultrametric: d({i},{k}) = {} > max(d({i},{j}) = {}, d({j},{k}) = {})",
                m.get(i, k),
                m.get(i, j),
                m.get(j, k)
            ))),
        }
    }

    pub(crate) fn new_unchecked(m: DistanceMatrix) -> Self {
        Self(m)
    }

    pub fn as_distance(&self) -> &DistanceMatrix {
        &self.0
    }

    pub fn into_inner(self) -> DistanceMatrix {
        self.0
    }
}

impl std::ops::Deref for UltrametricMatrix {
    type Target = DistanceMatrix;

    fn deref(&self) -> &DistanceMatrix {
        &self.0
    }
}
