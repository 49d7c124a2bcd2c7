//! Agglomerative hierarchical clustering.
//!
//! [`cluster_distances`] and [`cluster_observations`] run the nearest
//! neighbor chain algorithm for the reducible criteria (single, complete,
//! average, Ward) and the stepwise minimum search for the median criterion,
//! which is not reducible and may produce inversions. All criteria are
//! expressed as Lance-Williams updates.
//!
//! Ward and median operate on squared Euclidean dissimilarities; the input
//! is squared on entry and reported heights are square roots of the merge
//! costs, so a merge of two singletons is reported at their Euclidean
//! distance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dendrogram::{default_labels, Dendrogram};
use crate::error::{Error, Result};
use crate::matrix::{condensed_index, euclidean, DistanceMatrix, ObservationMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Single,
    Complete,
    Average,
    Ward,
    Median,
}

impl Criterion {
    pub const ALL: [Criterion; 5] = [
        Criterion::Single,
        Criterion::Complete,
        Criterion::Average,
        Criterion::Ward,
        Criterion::Median,
    ];

    /// Whether merge heights are guaranteed to be monotone, which is also
    /// what the nearest neighbor chain relies on.
    pub fn is_reducible(self) -> bool {
        !matches!(self, Criterion::Median)
    }

    fn squares_input(self) -> bool {
        matches!(self, Criterion::Ward | Criterion::Median)
    }

    /// Dissimilarity from the merge of `a` and `b` to `k`.
    #[inline]
    fn update(self, d_ak: f64, d_bk: f64, d_ab: f64, na: usize, nb: usize, nk: usize) -> f64 {
        match self {
            Criterion::Single => d_ak.min(d_bk),
            Criterion::Complete => d_ak.max(d_bk),
            Criterion::Average => (na as f64 * d_ak + nb as f64 * d_bk) / (na + nb) as f64,
            Criterion::Ward => {
                ((na + nk) as f64 * d_ak + (nb + nk) as f64 * d_bk - nk as f64 * d_ab)
                    / (na + nb + nk) as f64
            }
            Criterion::Median => 0.5 * d_ak + 0.5 * d_bk - 0.25 * d_ab,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Single => "single",
            Criterion::Complete => "complete",
            Criterion::Average => "average",
            Criterion::Ward => "ward",
            Criterion::Median => "median",
        })
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "single" => Ok(Criterion::Single),
            "complete" => Ok(Criterion::Complete),
            "average" => Ok(Criterion::Average),
            "ward" => Ok(Criterion::Ward),
            "median" => Ok(Criterion::Median),
            other => Err(Error::Parse(format!(
                "unknown criterion {other:?} (expected single, complete, average, ward or median)"
            ))),
        }
    }
}

/// Clusters a precomputed dissimilarity matrix. Terminals are labelled
/// `x1..xn`.
pub fn cluster_distances(m: &DistanceMatrix, criterion: Criterion) -> Result<Dendrogram> {
    cluster_condensed(m.n(), m.condensed(), criterion, default_labels(m.n()))
}

/// Clusters the rows of `m` under pairwise Euclidean distances.
pub fn cluster_observations(m: &ObservationMatrix, criterion: Criterion) -> Result<Dendrogram> {
    cluster_condensed(
        m.n_rows(),
        m.condensed_distances(),
        criterion,
        default_labels(m.n_rows()),
    )
}

/// Clusters a condensed dissimilarity vector (see
/// [`condensed_index`](crate::matrix::condensed_index)) over `labels`.
pub fn cluster_condensed(
    n: usize,
    mut dis: Vec<f64>,
    criterion: Criterion,
    labels: Vec<String>,
) -> Result<Dendrogram> {
    if n < 2 {
        return Err(Error::TooFewObjects { needed: 2, got: n });
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {n} objects",
            labels.len()
        )));
    }
    if criterion.squares_input() {
        dis.iter_mut().for_each(|d| *d *= *d);
    }
    let mut merges = if criterion.is_reducible() {
        let mut merges = nn_chain(n, &mut dis, criterion);
        merges.sort_by(|a, b| a.2.total_cmp(&b.2));
        merges
    } else {
        stepwise(n, &mut dis, criterion)
    };
    if criterion.squares_input() {
        merges.iter_mut().for_each(|m| m.2 = m.2.max(0.0).sqrt());
    }
    if criterion.is_reducible() {
        Dendrogram::from_merges(labels, &merges)
    } else {
        Dendrogram::from_merges_allowing_inversions(labels, &merges)
    }
}

struct Dis<'a> {
    n: usize,
    d: &'a mut [f64],
}

impl Dis<'_> {
    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        if i < j {
            self.d[condensed_index(self.n, i, j)]
        } else {
            self.d[condensed_index(self.n, j, i)]
        }
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = if i < j {
            condensed_index(self.n, i, j)
        } else {
            condensed_index(self.n, j, i)
        };
        self.d[k] = v;
    }
}

/// Merges `b` into slot `a`, updating dissimilarities to every other active
/// slot. Slot `a` is the smaller index so slots keep naming the smallest
/// terminal in their cluster.
fn merge_slots(
    dis: &mut Dis<'_>,
    active: &mut [bool],
    size: &mut [usize],
    a: usize,
    b: usize,
    criterion: Criterion,
) {
    debug_assert!(a < b);
    let d_ab = dis.get(a, b);
    for k in 0..dis.n {
        if !active[k] || k == a || k == b {
            continue;
        }
        let v = criterion.update(dis.get(a, k), dis.get(b, k), d_ab, size[a], size[b], size[k]);
        dis.set(a, k, v);
    }
    size[a] += size[b];
    active[b] = false;
}

/// Nearest neighbor chain. Returns merges in discovery order, which is not
/// necessarily sorted by height.
fn nn_chain(n: usize, d: &mut [f64], criterion: Criterion) -> Vec<(usize, usize, f64)> {
    let mut dis = Dis { n, d };
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut chain: Vec<usize> = Vec::with_capacity(n);
    let mut merges = Vec::with_capacity(n - 1);

    for _ in 0..n - 1 {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).expect("an active slot remains"));
        }
        let (x, y, dist) = loop {
            let x = *chain.last().unwrap();
            let prev = chain.len().checked_sub(2).map(|k| chain[k]);
            // Ties keep the previous chain element, which guarantees the chain
            // terminates at a reciprocal pair.
            let (mut best, mut best_d) = match prev {
                Some(p) => (p, dis.get(x, p)),
                None => (usize::MAX, f64::INFINITY),
            };
            for k in 0..n {
                if !active[k] || k == x {
                    continue;
                }
                let dk = dis.get(x, k);
                if dk < best_d || best == usize::MAX {
                    best = k;
                    best_d = dk;
                }
            }
            if Some(best) == prev {
                break (x, best, best_d);
            }
            chain.push(best);
        };
        chain.pop();
        chain.pop();
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        merge_slots(&mut dis, &mut active, &mut size, a, b, criterion);
        merges.push((a, b, dist));
    }
    merges
}

/// Stepwise global minimum search: at each step merge the closest pair of
/// active clusters, lexicographically smallest on ties.
fn stepwise(n: usize, d: &mut [f64], criterion: Criterion) -> Vec<(usize, usize, f64)> {
    let mut dis = Dis { n, d };
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut merges = Vec::with_capacity(n - 1);
    for _ in 0..n - 1 {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in i + 1..n {
                if active[j] {
                    let v = dis.get(i, j);
                    if v < best.2 || best.0 == usize::MAX {
                        best = (i, j, v);
                    }
                }
            }
        }
        merge_slots(&mut dis, &mut active, &mut size, best.0, best.1, criterion);
        merges.push(best);
    }
    merges
}

/// Contiguity-constrained complete-link clustering of a sequence.
///
/// Rows of `seq` are taken in order; only neighbouring segments may merge
/// and the merge cost is the largest Euclidean distance between members.
/// Each step scans the adjacent-pair costs and merges the cheapest,
/// leftmost on ties. Merge costs never decrease, so the tree has no
/// inversions and every cut consists of contiguous segments.
pub fn constrained_cluster(seq: &ObservationMatrix) -> Result<Dendrogram> {
    let n = seq.n_rows();
    if n < 2 {
        return Err(Error::TooFewObjects { needed: 2, got: n });
    }
    let mut d = seq.condensed_distances();
    let mut dis = Dis { n, d: &mut d };
    // Segment slots are named by their first position; `next[s]` is the
    // first position of the following segment, or `n`.
    let mut next: Vec<usize> = (1..=n).collect();
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut merges = Vec::with_capacity(n - 1);
    for _ in 0..n - 1 {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        let mut s = 0;
        while next[s] < n {
            let t = next[s];
            let cost = dis.get(s, t);
            if cost < best.2 || best.0 == usize::MAX {
                best = (s, t, cost);
            }
            s = t;
        }
        let (a, b, cost) = best;
        merge_slots(&mut dis, &mut active, &mut size, a, b, Criterion::Complete);
        next[a] = next[b];
        merges.push((a, b, cost));
    }
    Dendrogram::from_merges(default_labels(n), &merges)
}

/// Partition obtained by removing the `k - 1` highest-rank nodes. Blocks
/// are sorted internally and ordered by their smallest terminal.
pub fn cut(h: &Dendrogram, k: usize) -> Result<Vec<Vec<usize>>> {
    let n = h.n_terminals();
    if k == 0 || k > n {
        return Err(Error::OutOfRange {
            what: "cluster count",
            detail: format!("k = {k}, must lie in 1..={n}"),
        });
    }
    let mut label: Vec<usize> = (0..n).collect();
    // Keep nodes of rank <= n - k; each one unions its children.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for node in &h.nodes()[..n - k] {
        let members = h.members(node.rank);
        let r0 = find(&mut parent, members[0]);
        for &m in &members[1..] {
            let r = find(&mut parent, m);
            if r != r0 {
                parent[r] = r0;
            }
        }
    }
    for (i, l) in label.iter_mut().enumerate() {
        *l = find(&mut parent, i);
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = label[i];
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    Ok(blocks)
}

/// Complete-link dissimilarity between two sets of rows, computed directly.
pub fn complete_link(seq: &ObservationMatrix, a: &[usize], b: &[usize]) -> f64 {
    a.iter()
        .flat_map(|&i| b.iter().map(move |&j| (i, j)))
        .map(|(i, j)| euclidean(seq.row(i), seq.row(j)))
        .fold(0.0, f64::max)
}
