//! Binary rooted node-ranked trees.
//!
//! A [`Dendrogram`] on `n` terminals has exactly `n - 1` internal nodes with
//! ranks `1..=n-1`. A node's children always carry lower ranks than the node
//! itself, so ranks give a total order compatible with set inclusion, and the
//! rank `n - 1` node is the root.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Reference to a child: a terminal (by 0-based index) or an internal node
/// (by rank). Serialized as `"t:<index>"` or `"n:<rank>"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeRef {
    Terminal(usize),
    Node(usize),
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRef::Terminal(i) => write!(f, "t:{i}"),
            NodeRef::Node(r) => write!(f, "n:{r}"),
        }
    }
}

impl FromStr for NodeRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad node reference {s:?} (expected t:<index> or n:<rank>)"));
        let (kind, num) = s.split_once(':').ok_or_else(bad)?;
        let num: usize = num.trim().parse().map_err(|_| bad())?;
        match kind.trim() {
            "t" => Ok(NodeRef::Terminal(num)),
            "n" => Ok(NodeRef::Node(num)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for NodeRef {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodeRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub rank: usize,
    pub height: f64,
    pub left: NodeRef,
    pub right: NodeRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DendrogramRepr", into = "DendrogramRepr")]
pub struct Dendrogram {
    terminals: Vec<String>,
    /// `nodes[r - 1]` has rank `r`.
    nodes: Vec<Node>,
    /// `members[r - 1]` lists the terminals under rank `r`, ascending.
    members: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct DendrogramRepr {
    terminals: Vec<String>,
    nodes: Vec<Node>,
}

impl TryFrom<DendrogramRepr> for Dendrogram {
    type Error = Error;

    fn try_from(r: DendrogramRepr) -> Result<Self> {
        Dendrogram::new_allowing_inversions(r.terminals, r.nodes)
    }
}

impl From<Dendrogram> for DendrogramRepr {
    fn from(d: Dendrogram) -> Self {
        DendrogramRepr {
            terminals: d.terminals,
            nodes: d.nodes,
        }
    }
}

impl Dendrogram {
    /// Validates structure and requires heights to be non-decreasing from
    /// every child to its parent.
    pub fn new(terminals: Vec<String>, nodes: Vec<Node>) -> Result<Self> {
        let d = Self::new_allowing_inversions(terminals, nodes)?;
        if let Some(rank) = d.first_inversion() {
            return Err(Error::InvalidDendrogram(format!(
                "node n:{rank} is lower than one of its children (inversion)"
            )));
        }
        Ok(d)
    }

    /// Like [`Dendrogram::new`] but tolerates inversions, as produced by the
    /// median criterion.
    pub fn new_allowing_inversions(terminals: Vec<String>, mut nodes: Vec<Node>) -> Result<Self> {
        let n = terminals.len();
        if n == 0 {
            return Err(Error::InvalidDendrogram("no terminals".into()));
        }
        if nodes.len() != n - 1 {
            return Err(Error::InvalidDendrogram(format!(
                "{n} terminals need {} internal nodes, got {}",
                n - 1,
                nodes.len()
            )));
        }
        nodes.sort_by_key(|node| node.rank);
        for (k, node) in nodes.iter().enumerate() {
            if node.rank != k + 1 {
                return Err(Error::InvalidDendrogram(format!(
                    "ranks must be a permutation of 1..={}, found rank {} at position {}",
                    n - 1,
                    node.rank,
                    k + 1
                )));
            }
            if !node.height.is_finite() || node.height < 0.0 {
                return Err(Error::InvalidDendrogram(format!(
                    "node n:{} has invalid height {}",
                    node.rank, node.height
                )));
            }
        }

        let mut used_terminal = vec![false; n];
        let mut used_node = vec![false; n.saturating_sub(1)];
        let mut members: Vec<Vec<usize>> = Vec::with_capacity(n - 1);
        for node in &nodes {
            if node.left == node.right {
                return Err(Error::InvalidDendrogram(format!(
                    "node n:{} has identical children",
                    node.rank
                )));
            }
            let mut set = Vec::new();
            for child in [node.left, node.right] {
                match child {
                    NodeRef::Terminal(i) => {
                        if i >= n {
                            return Err(Error::InvalidDendrogram(format!(
                                "node n:{} references missing terminal t:{i}",
                                node.rank
                            )));
                        }
                        if std::mem::replace(&mut used_terminal[i], true) {
                            return Err(Error::InvalidDendrogram(format!(
                                "terminal t:{i} appears more than once"
                            )));
                        }
                        set.push(i);
                    }
                    NodeRef::Node(r) => {
                        if r == 0 || r >= node.rank {
                            return Err(Error::InvalidDendrogram(format!(
                                "node n:{} has child n:{r}; children must have lower rank",
                                node.rank
                            )));
                        }
                        if std::mem::replace(&mut used_node[r - 1], true) {
                            return Err(Error::InvalidDendrogram(format!(
                                "node n:{r} has more than one parent"
                            )));
                        }
                        set.extend_from_slice(&members[r - 1]);
                    }
                }
            }
            set.sort_unstable();
            members.push(set);
        }
        // Each terminal used once and each non-root node used once, with n - 1
        // nodes in total, means the root covers everything.
        if let Some(i) = used_terminal.iter().position(|u| !u).filter(|_| n > 1) {
            return Err(Error::InvalidDendrogram(format!(
                "terminal t:{i} is not attached to the tree"
            )));
        }
        if let Some(r) = used_node.iter().take(n.saturating_sub(2)).position(|u| !u) {
            return Err(Error::InvalidDendrogram(format!(
                "node n:{} has no parent but is not the root",
                r + 1
            )));
        }
        Ok(Self {
            terminals,
            nodes,
            members,
        })
    }

    /// Builds a tree from a merge sequence. Each merge names one terminal
    /// from each of the two clusters being joined; merge `k` becomes rank
    /// `k + 1`. The left child is the one holding the smaller terminal index.
    pub fn from_merges(terminals: Vec<String>, merges: &[(usize, usize, f64)]) -> Result<Self> {
        let nodes = nodes_from_merges(terminals.len(), merges)?;
        Self::new(terminals, nodes)
    }

    pub fn from_merges_allowing_inversions(
        terminals: Vec<String>,
        merges: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let nodes = nodes_from_merges(terminals.len(), merges)?;
        Self::new_allowing_inversions(terminals, nodes)
    }

    /// A uniformly shuffled random merge history with non-decreasing
    /// heights. Roughly a fifth of the merges tie with the previous height.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        assert!(n >= 1, "a dendrogram needs at least one terminal");
        let terminals = default_labels(n);
        let mut active: Vec<usize> = (0..n).collect();
        let mut merges = Vec::with_capacity(n - 1);
        let mut height = 0.0;
        while active.len() > 1 {
            let a = active.swap_remove(rng.random_range(0..active.len()));
            let b = active[rng.random_range(0..active.len())];
            if rng.random_bool(0.8) {
                height += rng.random_range(0.01..1.0);
            }
            merges.push((a, b, height));
        }
        Self::from_merges(terminals, &merges).expect("random merge history is valid")
    }

    pub fn n_terminals(&self) -> usize {
        self.terminals.len()
    }

    pub fn terminals(&self) -> &[String] {
        &self.terminals
    }

    /// Internal nodes ordered by rank.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, rank: usize) -> &Node {
        &self.nodes[rank - 1]
    }

    pub fn root(&self) -> Option<&Node> {
        self.nodes.last()
    }

    /// Terminals below the node of the given rank, ascending.
    pub fn members(&self, rank: usize) -> &[usize] {
        &self.members[rank - 1]
    }

    pub fn members_of(&self, r: NodeRef) -> Vec<usize> {
        match r {
            NodeRef::Terminal(i) => vec![i],
            NodeRef::Node(rank) => self.members(rank).to_vec(),
        }
    }

    fn min_terminal(&self, r: NodeRef) -> usize {
        match r {
            NodeRef::Terminal(i) => i,
            NodeRef::Node(rank) => self.members[rank - 1][0],
        }
    }

    /// Size of the cluster under `r`.
    pub fn size_of(&self, r: NodeRef) -> usize {
        match r {
            NodeRef::Terminal(_) => 1,
            NodeRef::Node(rank) => self.members[rank - 1].len(),
        }
    }

    /// Parent rank of every terminal, and of every node (by rank); the root's
    /// entry is `None`.
    pub fn parents(&self) -> (Vec<usize>, Vec<Option<usize>>) {
        let n = self.n_terminals();
        let mut terminal_parent = vec![0; n];
        let mut node_parent = vec![None; self.nodes.len()];
        for node in &self.nodes {
            for child in [node.left, node.right] {
                match child {
                    NodeRef::Terminal(i) => terminal_parent[i] = node.rank,
                    NodeRef::Node(r) => node_parent[r - 1] = Some(node.rank),
                }
            }
        }
        (terminal_parent, node_parent)
    }

    /// Ranks of the nodes on the path from terminal `i` up to the root.
    pub fn path_to_root(&self, i: usize) -> Vec<usize> {
        let (tp, np) = self.parents();
        let mut path = Vec::new();
        if self.nodes.is_empty() {
            return path;
        }
        let mut r = tp[i];
        path.push(r);
        while let Some(p) = np[r - 1] {
            path.push(p);
            r = p;
        }
        path
    }

    /// Terminal indices in left-to-right (depth-first, left child first)
    /// order.
    pub fn terminal_order(&self) -> Vec<usize> {
        let Some(root) = self.root() else {
            return vec![0];
        };
        let mut order = Vec::with_capacity(self.n_terminals());
        let mut stack = vec![NodeRef::Node(root.rank)];
        while let Some(r) = stack.pop() {
            match r {
                NodeRef::Terminal(i) => order.push(i),
                NodeRef::Node(rank) => {
                    let node = self.node(rank);
                    stack.push(node.right);
                    stack.push(node.left);
                }
            }
        }
        order
    }

    /// The rank of the first node whose height is below one of its children.
    pub fn first_inversion(&self) -> Option<usize> {
        self.nodes.iter().find_map(|node| {
            let low = [node.left, node.right].iter().any(|c| match *c {
                NodeRef::Node(r) => self.nodes[r - 1].height > node.height,
                NodeRef::Terminal(_) => false,
            });
            low.then_some(node.rank)
        })
    }

    pub fn has_inversions(&self) -> bool {
        self.first_inversion().is_some()
    }

    /// Same tree with the two children of node `rank` exchanged.
    pub fn swap_children(&self, rank: usize) -> Self {
        let mut d = self.clone();
        let node = &mut d.nodes[rank - 1];
        std::mem::swap(&mut node.left, &mut node.right);
        d
    }

    /// Same tree with every node's children reordered so that the left child
    /// holds the smaller terminal index.
    pub fn canonicalized(&self) -> Self {
        let mut d = self.clone();
        for k in 0..d.nodes.len() {
            let (l, r) = (d.nodes[k].left, d.nodes[k].right);
            if self.min_terminal(l) > self.min_terminal(r) {
                d.nodes[k].left = r;
                d.nodes[k].right = l;
            }
        }
        d
    }

    /// Same tree with heights replaced by ranks.
    pub fn with_rank_heights(&self) -> Self {
        let mut d = self.clone();
        for node in &mut d.nodes {
            node.height = node.rank as f64;
        }
        d
    }

    /// The set of clusters (as sorted member lists) keyed by rank order.
    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.members
    }

    /// Newick serialization; branch lengths are height differences, with
    /// terminals at height 0.
    pub fn to_newick(&self) -> String {
        let mut out = String::new();
        match self.root() {
            None => out.push_str(&newick_label(&self.terminals[0])),
            Some(root) => self.write_newick(NodeRef::Node(root.rank), &mut out),
        }
        out.push(';');
        out
    }

    fn write_newick(&self, r: NodeRef, out: &mut String) {
        match r {
            NodeRef::Terminal(i) => out.push_str(&newick_label(&self.terminals[i])),
            NodeRef::Node(rank) => {
                let node = self.node(rank);
                out.push('(');
                for (k, child) in [node.left, node.right].into_iter().enumerate() {
                    if k == 1 {
                        out.push(',');
                    }
                    self.write_newick(child, out);
                    let child_height = match child {
                        NodeRef::Terminal(_) => 0.0,
                        NodeRef::Node(c) => self.node(c).height,
                    };
                    out.push_str(&format!(":{}", node.height - child_height));
                }
                out.push(')');
            }
        }
    }
}

fn newick_label(s: &str) -> String {
    if s.chars().any(|c| "()[]':;, \t".contains(c)) {
        format!("'{}'", s.replace('\'', "''"))
    } else {
        s.to_string()
    }
}

/// `x1`, `x2`, ... labels for anonymous terminals.
pub fn default_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

fn nodes_from_merges(n: usize, merges: &[(usize, usize, f64)]) -> Result<Vec<Node>> {
    if merges.len() + 1 != n {
        return Err(Error::InvalidDendrogram(format!(
            "{n} terminals need {} merges, got {}",
            n.saturating_sub(1),
            merges.len()
        )));
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    // Union-find roots are the smallest member, so they double as the
    // minimum terminal of each cluster.
    let mut current: Vec<NodeRef> = (0..n).map(NodeRef::Terminal).collect();
    let mut nodes = Vec::with_capacity(n.saturating_sub(1));
    for (k, &(a, b, height)) in merges.iter().enumerate() {
        if a >= n || b >= n {
            return Err(Error::InvalidDendrogram(format!(
                "merge {k} references terminal outside 0..{n}"
            )));
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return Err(Error::InvalidDendrogram(format!(
                "merge {k} joins terminals {a} and {b}, already in one cluster"
            )));
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        nodes.push(Node {
            rank: k + 1,
            height,
            left: current[lo],
            right: current[hi],
        });
        parent[hi] = lo;
        current[lo] = NodeRef::Node(k + 1);
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_leaf(h: f64) -> Dendrogram {
        Dendrogram::from_merges(default_labels(2), &[(0, 1, h)]).unwrap()
    }

    #[test]
    fn node_ref_parse() {
        assert_eq!("t:3".parse::<NodeRef>().unwrap(), NodeRef::Terminal(3));
        assert_eq!("n:12".parse::<NodeRef>().unwrap(), NodeRef::Node(12));
        assert!("x:1".parse::<NodeRef>().is_err());
        assert!("n".parse::<NodeRef>().is_err());
    }

    #[test]
    fn rejects_bad_structures() {
        let labels = default_labels(3);
        let dup = vec![
            Node { rank: 1, height: 1.0, left: NodeRef::Terminal(0), right: NodeRef::Terminal(1) },
            Node { rank: 2, height: 2.0, left: NodeRef::Node(1), right: NodeRef::Terminal(1) },
        ];
        assert!(Dendrogram::new(labels.clone(), dup).is_err());

        let forward_ref = vec![
            Node { rank: 1, height: 1.0, left: NodeRef::Node(2), right: NodeRef::Terminal(1) },
            Node { rank: 2, height: 2.0, left: NodeRef::Terminal(0), right: NodeRef::Terminal(2) },
        ];
        assert!(Dendrogram::new(labels.clone(), forward_ref).is_err());

        let inverted = vec![
            Node { rank: 1, height: 3.0, left: NodeRef::Terminal(0), right: NodeRef::Terminal(1) },
            Node { rank: 2, height: 2.0, left: NodeRef::Node(1), right: NodeRef::Terminal(2) },
        ];
        assert!(Dendrogram::new(labels.clone(), inverted.clone()).is_err());
        let relaxed = Dendrogram::new_allowing_inversions(labels, inverted).unwrap();
        assert_eq!(relaxed.first_inversion(), Some(2));
    }

    #[test]
    fn json_round_trip_uses_ref_strings() {
        let d = Dendrogram::from_merges(default_labels(3), &[(1, 2, 0.5), (0, 2, 1.5)]).unwrap();
        let json = serde_json::to_string(&d).unwrap();
        assert!(json.contains("\"left\":\"t:0\""));
        assert!(json.contains("\"right\":\"n:1\""));
        let back: Dendrogram = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
        assert!(serde_json::from_str::<Dendrogram>(r#"{"terminals":["a"],"nodes":[{"rank":1,"height":0,"left":"t:0","right":"t:0"}]}"#).is_err());
    }

    #[test]
    fn newick_export() {
        let d = Dendrogram::from_merges(
            vec!["a".into(), "b".into(), "c d".into()],
            &[(0, 1, 1.0), (1, 2, 3.0)],
        )
        .unwrap();
        assert_eq!(d.to_newick(), "((a:1,b:1):2,'c d':3);");
        assert_eq!(two_leaf(2.5).to_newick(), "(x1:2.5,x2:2.5);");
    }

    #[test]
    fn order_paths_and_swaps() {
        let d = Dendrogram::from_merges(default_labels(4), &[(2, 3, 1.0), (0, 1, 2.0), (1, 3, 4.0)]).unwrap();
        assert_eq!(d.terminal_order(), vec![0, 1, 2, 3]);
        assert_eq!(d.path_to_root(3), vec![1, 3]);
        let s = d.swap_children(3);
        assert_eq!(s.terminal_order(), vec![2, 3, 0, 1]);
        assert_eq!(s.canonicalized(), d);
        assert_eq!(d.members(3), &[0, 1, 2, 3]);
    }

    #[test]
    fn random_trees_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..40 {
            let d = Dendrogram::random(n, &mut rng);
            assert_eq!(d.n_terminals(), n);
            assert!(!d.has_inversions());
            let mut order = d.terminal_order();
            order.sort_unstable();
            assert_eq!(order, (0..n).collect::<Vec<_>>());
        }
    }
}
