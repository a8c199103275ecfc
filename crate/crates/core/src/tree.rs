//! Rooted and free trees with stable 0-based node ids.

use std::collections::{BTreeMap, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::distribution::{OffspringDistribution, Ratio};
use crate::error::{Error, Result};
use crate::sampler::DegreeSequence;

/// Ordered rooted tree. Children keep their insertion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedTree {
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RootedTreeJson {
    pub n: usize,
    pub parent: Vec<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FreeTreeJson {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

impl RootedTree {
    /// Builds a tree from ordered child lists; validates connectivity and acyclicity.
    pub fn from_children(root: usize, children: Vec<Vec<usize>>) -> Result<Self> {
        let n = children.len();
        if root >= n {
            return Err(Error::NodeOutOfRange { node: root, n });
        }
        let mut parent = vec![None; n];
        for (v, kids) in children.iter().enumerate() {
            for &c in kids {
                if c >= n {
                    return Err(Error::NodeOutOfRange { node: c, n });
                }
                if c == root || parent[c].is_some() {
                    return Err(Error::InvalidTree(format!("node {c} has more than one parent")));
                }
                parent[c] = Some(v);
            }
        }
        let tree = Self { root, parent, children };
        if tree.preorder().len() != n {
            return Err(Error::InvalidTree("not connected".into()));
        }
        Ok(tree)
    }

    pub fn single_node() -> Self {
        Self { root: 0, parent: vec![None], children: vec![vec![]] }
    }

    pub fn n(&self) -> usize {
        self.children.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// Tree-degree: number of children.
    pub fn degree(&self, v: usize) -> usize {
        self.children[v].len()
    }

    pub fn preorder(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.n());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend(self.children[v].iter().rev());
        }
        order
    }

    /// Preorder child counts.
    pub fn degree_sequence(&self) -> DegreeSequence {
        DegreeSequence::new(self.preorder().into_iter().map(|v| self.degree(v)).collect())
    }

    /// `i -> N_i^u`, the number of nodes with `i` children.
    pub fn degree_census(&self) -> BTreeMap<usize, usize> {
        let mut census = BTreeMap::new();
        for kids in &self.children {
            *census.entry(kids.len()).or_insert(0) += 1;
        }
        census
    }

    /// Largest tree-degree.
    pub fn max_degree(&self) -> usize {
        self.children.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn forget_root(&self) -> FreeTree {
        FreeTree::from_rooted(self)
    }

    /// Interchange form with preorder indexing (relabels if ids are not preorder).
    pub fn to_json(&self) -> RootedTreeJson {
        let order = self.preorder();
        let mut label = vec![0usize; self.n()];
        for (i, &v) in order.iter().enumerate() {
            label[v] = i;
        }
        let parent = order
            .iter()
            .map(|&v| self.parent[v].map_or(-1, |p| label[p] as i64))
            .collect();
        RootedTreeJson { n: self.n(), parent }
    }

    pub fn from_json(json: &RootedTreeJson) -> Result<Self> {
        let n = json.n;
        if n == 0 || json.parent.len() != n {
            return Err(Error::InvalidTree(format!("expected {n} parent entries, got {}", json.parent.len())));
        }
        if json.parent[0] != -1 {
            return Err(Error::InvalidTree("node 0 must be the root (parent -1)".into()));
        }
        let mut children = vec![Vec::new(); n];
        for (v, &p) in json.parent.iter().enumerate().skip(1) {
            if p < 0 || p as usize >= v {
                return Err(Error::InvalidTree(format!("node {v} has parent {p}; preorder requires 0 <= parent < {v}")));
            }
            children[p as usize].push(v);
        }
        let tree = Self::from_children(0, children)?;
        if tree.preorder().iter().enumerate().any(|(i, &v)| i != v) {
            return Err(Error::InvalidTree("node ids are not in preorder".into()));
        }
        Ok(tree)
    }
}

/// Undirected tree; neighbour lists are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeTree {
    adj: Vec<Vec<usize>>,
}

impl FreeTree {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTree("a tree needs at least one node".into()));
        }
        if edges.len() != n - 1 {
            return Err(Error::InvalidTree(format!("{n} nodes need {} edges, got {}", n - 1, edges.len())));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::NodeOutOfRange { node: w, n });
                }
            }
            if u == v {
                return Err(Error::InvalidTree(format!("self-loop at {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidTree("duplicate edge".into()));
            }
        }
        let tree = Self { adj };
        if tree.bfs_order(0).len() != n {
            return Err(Error::InvalidTree("not connected".into()));
        }
        Ok(tree)
    }

    pub fn from_rooted(t: &RootedTree) -> Self {
        let mut adj = vec![Vec::new(); t.n()];
        for v in 0..t.n() {
            if let Some(p) = t.parent(v) {
                adj[v].push(p);
                adj[p].push(v);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Self { adj }
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges).expect("path is a tree")
    }

    /// Star with centre 0 and `n - 1` leaves.
    pub fn star(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (0, i)).collect();
        Self::from_edges(n, &edges).expect("star is a tree")
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    /// Graph-degree `deg*(v)`.
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<_> = self
            .adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
            .collect();
        edges.sort_unstable();
        edges
    }

    fn check_node(&self, u: usize) -> Result<()> {
        if u < self.n() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange { node: u, n: self.n() })
        }
    }

    pub(crate) fn bfs_order(&self, u: usize) -> Vec<usize> {
        let mut seen = vec![false; self.n()];
        let mut order = Vec::with_capacity(self.n());
        let mut queue = VecDeque::from([u]);
        seen[u] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        order
    }

    /// Parent array and BFS order of the `u`-rooted tree.
    pub(crate) fn hang(&self, u: usize) -> (Vec<Option<usize>>, Vec<usize>) {
        let mut parent = vec![None; self.n()];
        let mut order = Vec::with_capacity(self.n());
        let mut seen = vec![false; self.n()];
        let mut queue = VecDeque::from([u]);
        seen[u] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(v);
                    queue.push_back(w);
                }
            }
        }
        (parent, order)
    }

    /// The `u`-rooted tree; children are ordered by node id.
    pub fn reroot(&self, u: usize) -> Result<RootedTree> {
        self.check_node(u)?;
        let (parent, _) = self.hang(u);
        let children = (0..self.n())
            .map(|v| self.adj[v].iter().copied().filter(|&w| parent[v] != Some(w)).collect())
            .collect();
        Ok(RootedTree { root: u, parent, children })
    }

    /// `i -> N_i^*`.
    pub fn degree_census(&self) -> BTreeMap<usize, usize> {
        let mut census = BTreeMap::new();
        for list in &self.adj {
            *census.entry(list.len()).or_insert(0) += 1;
        }
        census
    }

    /// `W = sum_v R_{deg*(v)}`; infinite iff some node has special graph-degree.
    pub fn weighted_sum_w(&self, dist: &OffspringDistribution) -> Ratio {
        let mut total = 0.0;
        for list in &self.adj {
            match dist.ratio(list.len()) {
                Ratio::Infinite => return Ratio::Infinite,
                Ratio::Finite(r) => total += r,
            }
        }
        Ratio::Finite(total)
    }

    /// Exact `W` for rational-backed distributions.
    pub fn weighted_sum_w_exact(&self, dist: &OffspringDistribution) -> Option<Ratio<BigRational>> {
        dist.exact_pmf()?;
        let mut total = BigRational::zero();
        for (degree, count) in self.degree_census() {
            match dist.ratio_exact(degree)? {
                Ratio::Infinite => return Some(Ratio::Infinite),
                Ratio::Finite(r) => total += r * BigInt::from(count),
            }
        }
        Some(Ratio::Finite(total))
    }

    pub fn to_json(&self) -> FreeTreeJson {
        FreeTreeJson { n: self.n(), edges: self.edges().into_iter().map(|(u, v)| [u, v]).collect() }
    }

    pub fn from_json(json: &FreeTreeJson) -> Result<Self> {
        let edges: Vec<_> = json.edges.iter().map(|e| (e[0], e[1])).collect();
        Self::from_edges(json.n, &edges)
    }
}
