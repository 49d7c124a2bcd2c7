//! Fixtures and independent reference implementations shared by the
//! integration tests. Nothing here calls into the crate's algorithms; the
//! oracles recompute results from first principles.
#![allow(dead_code)]

use ultrametric::dendrogram::{default_labels, Dendrogram, Node, NodeRef};

/// Seven iris flowers, four measurements each.
pub const IRIS7: [[f64; 4]; 7] = [
    [5.1, 3.5, 1.4, 0.2],
    [4.9, 3.0, 1.4, 0.2],
    [4.7, 3.2, 1.3, 0.2],
    [4.6, 3.1, 1.5, 0.2],
    [5.0, 3.6, 1.4, 0.2],
    [5.4, 3.9, 1.7, 0.4],
    [4.6, 3.4, 1.4, 0.3],
];

/// Published ultrametric matrix of the seven flowers, 7 decimals.
pub const IRIS7_ULTRAMETRIC: [[f64; 7]; 7] = [
    [0.0, 0.6480741, 0.6480741, 0.6480741, 1.1661904, 1.1661904, 1.1661904],
    [0.6480741, 0.0, 0.3316625, 0.3316625, 1.1661904, 1.1661904, 1.1661904],
    [0.6480741, 0.3316625, 0.0, 0.2449490, 1.1661904, 1.1661904, 1.1661904],
    [0.6480741, 0.3316625, 0.2449490, 0.0, 1.1661904, 1.1661904, 1.1661904],
    [1.1661904, 1.1661904, 1.1661904, 1.1661904, 0.0, 0.6164414, 0.9949874],
    [1.1661904, 1.1661904, 1.1661904, 1.1661904, 0.6164414, 0.0, 0.9949874],
    [1.1661904, 1.1661904, 1.1661904, 1.1661904, 0.9949874, 0.9949874, 0.0],
];

/// First eight iris observations.
pub const IRIS8: [[f64; 4]; 8] = [
    [5.1, 3.5, 1.4, 0.2],
    [4.9, 3.0, 1.4, 0.2],
    [4.7, 3.2, 1.3, 0.2],
    [4.6, 3.1, 1.5, 0.2],
    [5.0, 3.6, 1.4, 0.2],
    [5.4, 3.9, 1.7, 0.4],
    [4.6, 3.4, 1.4, 0.3],
    [5.0, 3.4, 1.5, 0.2],
];

/// Published wavelet coefficients of the eight observations: one row per
/// attribute, columns `s7, d7, d6, ..., d1`.
pub const IRIS8_HAAR: [[f64; 8]; 4] = [
    [5.146875, 0.253125, 0.13125, 0.1375, -0.025, 0.05, -0.025, 0.05],
    [3.603125, 0.296875, 0.16875, -0.1375, 0.125, 0.05, -0.075, -0.05],
    [1.562500, 0.137500, 0.02500, 0.0000, 0.000, -0.10, 0.050, 0.00],
    [0.306250, 0.093750, -0.01250, -0.0250, 0.050, 0.00, 0.000, 0.00],
];

fn t(i: usize) -> NodeRef {
    NodeRef::Terminal(i)
}

fn q(r: usize) -> NodeRef {
    NodeRef::Node(r)
}

fn tree(labels: Vec<String>, links: &[(NodeRef, NodeRef)]) -> Dendrogram {
    let nodes = links
        .iter()
        .enumerate()
        .map(|(k, &(left, right))| Node {
            rank: k + 1,
            height: (k + 1) as f64,
            left,
            right,
        })
        .collect();
    Dendrogram::new(labels, nodes).unwrap()
}

/// The eight-observation median tree, left child = `+d` branch. Terminal
/// `i` is observation `i + 1`.
pub fn iris8_tree() -> Dendrogram {
    let labels = (1..=8).map(|i| format!("iris{i}")).collect();
    tree(
        labels,
        &[
            (t(0), t(4)),
            (t(7), q(1)),
            (t(2), t(3)),
            (t(6), q(3)),
            (t(1), q(4)),
            (q(2), q(5)),
            (t(5), q(6)),
        ],
    )
}

/// Eight-terminal ranked tree with clusters {x1,x2}, {x1,x2,x3}, {x4,x5},
/// {x4,x5,x6}, {x1..x6}, {x7,x8}, all.
pub fn ranked_tree() -> Dendrogram {
    tree(
        default_labels(8),
        &[
            (t(0), t(1)),
            (q(1), t(2)),
            (t(3), t(4)),
            (q(3), t(5)),
            (q(2), q(4)),
            (t(6), t(7)),
            (q(5), q(6)),
        ],
    )
}

/// Branch-code matrix of [`ranked_tree`] as published.
pub const RANKED_TREE_CODES: [[i8; 7]; 8] = [
    [1, 1, 0, 0, 1, 0, 1],
    [-1, 1, 0, 0, 1, 0, 1],
    [0, -1, 0, 0, 1, 0, 1],
    [0, 0, 1, 1, -1, 0, 1],
    [0, 0, -1, 1, -1, 0, 1],
    [0, 0, 0, -1, -1, 0, 1],
    [0, 0, 0, 0, 0, 1, -1],
    [0, 0, 0, 0, 0, -1, -1],
];

/// Five objects a, b, c, e, f over three boolean attributes.
pub const ATTRIBUTE_LABELS: [&str; 5] = ["a", "b", "c", "e", "f"];
pub const ATTRIBUTE_TABLE: [[u8; 3]; 5] = [[1, 0, 1], [0, 1, 1], [1, 0, 1], [1, 0, 0], [0, 0, 1]];

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn pairwise(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| points.iter().map(|b| euclid(a, b)).collect())
        .collect()
}

/// Height of the lowest common ancestor of every pair, by walking parent
/// links from scratch.
pub fn cophenetic_oracle(h: &Dendrogram) -> Vec<Vec<f64>> {
    let n = h.n_terminals();
    let mut leaf_parent = vec![usize::MAX; n];
    let mut node_parent = vec![usize::MAX; n];
    for node in h.nodes() {
        for c in [node.left, node.right] {
            match c {
                NodeRef::Terminal(i) => leaf_parent[i] = node.rank,
                NodeRef::Node(r) => node_parent[r] = node.rank,
            }
        }
    }
    let ancestors = |i: usize| {
        let mut v = Vec::new();
        let mut r = leaf_parent[i];
        while r != usize::MAX {
            v.push(r);
            r = node_parent[r];
        }
        v
    };
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        let ai = ancestors(i);
        for j in 0..n {
            if i != j {
                let aj = ancestors(j);
                let lca = ai.iter().find(|r| aj.contains(r)).unwrap();
                out[i][j] = h.node(*lca).height;
            }
        }
    }
    out
}

/// First triple violating the strong triangle inequality, all triples
/// checked.
pub fn ultrametric_violation(d: &[Vec<f64>], tol: f64) -> Option<(usize, usize, usize)> {
    let n = d.len();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if d[i][k] > d[i][j].max(d[j][k]) + tol {
                    return Some((i, j, k));
                }
            }
        }
    }
    None
}

/// Subdominant ultrametric: the minimax path distance, equal to single-link
/// cophenetic distances (the largest edge on the minimum spanning tree
/// path).
pub fn minimax_oracle(d: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = d.len();
    let mut m = d.to_vec();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = m[i][k].max(m[k][j]);
                if via < m[i][j] {
                    m[i][j] = via;
                }
            }
        }
    }
    m
}

#[derive(Debug, Clone, Copy)]
pub enum Linkage {
    Single,
    Complete,
    Average,
    Ward,
}

/// Stepwise agglomeration that recomputes every inter-cluster dissimilarity
/// from the original points at each step. Returns the cophenetic matrix.
pub fn naive_agglomeration(points: &[Vec<f64>], linkage: Linkage) -> Vec<Vec<f64>> {
    let n = points.len();
    let d = pairwise(points);
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut coph = vec![vec![0.0; n]; n];
    let centroid = |c: &[usize]| -> Vec<f64> {
        let m = points[0].len();
        let mut v = vec![0.0; m];
        for &i in c {
            for k in 0..m {
                v[k] += points[i][k];
            }
        }
        v.iter().map(|x| x / c.len() as f64).collect()
    };
    let link = |a: &[usize], b: &[usize]| -> f64 {
        let pairs = a.iter().flat_map(|&i| b.iter().map(move |&j| (i, j)));
        match linkage {
            Linkage::Single => pairs.map(|(i, j)| d[i][j]).fold(f64::INFINITY, f64::min),
            Linkage::Complete => pairs.map(|(i, j)| d[i][j]).fold(0.0, f64::max),
            Linkage::Average => pairs.map(|(i, j)| d[i][j]).sum::<f64>() / (a.len() * b.len()) as f64,
            Linkage::Ward => {
                let (na, nb) = (a.len() as f64, b.len() as f64);
                let gap = euclid(&centroid(a), &centroid(b));
                (2.0 * na * nb / (na + nb) * gap * gap).sqrt()
            }
        }
    };
    while clusters.len() > 1 {
        let mut best = (f64::INFINITY, 0, 0);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let v = link(&clusters[a], &clusters[b]);
                if v < best.0 {
                    best = (v, a, b);
                }
            }
        }
        let (h, a, b) = best;
        for &i in &clusters[a] {
            for &j in &clusters[b] {
                coph[i][j] = h;
                coph[j][i] = h;
            }
        }
        let merged = clusters.remove(b);
        clusters[a].extend(merged);
    }
    coph
}

/// Contiguity-constrained complete link by brute force: at each step every
/// adjacent pair's diameter is recomputed from the raw sequence. Returns
/// the merge heights in order and the partitions after each merge.
pub fn naive_constrained(seq: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<Vec<usize>>>) {
    let mut segs: Vec<Vec<usize>> = (0..seq.len()).map(|i| vec![i]).collect();
    let mut heights = Vec::new();
    let mut partitions = vec![segs.clone()];
    while segs.len() > 1 {
        let mut best = (f64::INFINITY, 0);
        for s in 0..segs.len() - 1 {
            let mut diam: f64 = 0.0;
            for &i in &segs[s] {
                for &j in &segs[s + 1] {
                    diam = diam.max(euclid(&seq[i], &seq[j]));
                }
            }
            if diam < best.0 {
                best = (diam, s);
            }
        }
        let right = segs.remove(best.1 + 1);
        segs[best.1].extend(right);
        heights.push(best.0);
        partitions.push(segs.clone());
    }
    (heights, partitions)
}

/// Reconstructs terminal values from a smooth and per-rank details by
/// summing signed details along each terminal's path to the root.
pub fn haar_reconstruct(h: &Dendrogram, smooth: &[f64], details: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = h.n_terminals();
    (0..n)
        .map(|i| {
            let mut v = smooth.to_vec();
            for node in h.nodes() {
                let sign = if h.members_of(node.left).contains(&i) {
                    1.0
                } else if h.members_of(node.right).contains(&i) {
                    -1.0
                } else {
                    continue;
                };
                for (x, d) in v.iter_mut().zip(&details[node.rank - 1]) {
                    *x += sign * d;
                }
            }
            v
        })
        .collect()
}

/// Reference SplitMix64 in its usual sequential form.
pub struct RefSplitMix(pub u64);

impl RefSplitMix {
    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        ((self.next() >> 12) as f64 + 0.5) / 4503599627370496.0
    }
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (tol {tol})");
}
