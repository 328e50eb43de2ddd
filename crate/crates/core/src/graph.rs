//! Language distance matrices and the thresholded similarity graph.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Absolute tolerance on `|D[i][j] - D[j][i]|` accepted before symmetrizing.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Symmetric, zero-diagonal, non-negative dissimilarities between labelled
/// languages.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DistanceMatrix {
    labels: Vec<String>,
    values: Matrix,
}

impl DistanceMatrix {
    /// Validates `values` and replaces it by `(M + Mᵀ) / 2`.
    pub fn new(labels: Vec<String>, values: Matrix) -> Result<Self> {
        let n = labels.len();
        if values.shape() != (n, n) {
            return Err(Error::InvalidDistance(format!(
                "{} labels but a {}x{} matrix",
                n,
                values.rows(),
                values.cols()
            )));
        }
        let mut seen = BTreeSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidDistance(format!("duplicate label `{l}`")));
            }
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[(i, j)];
                if !v.is_finite() {
                    return Err(Error::InvalidDistance(format!("non-finite entry at ({i}, {j})")));
                }
                if v < 0.0 {
                    return Err(Error::InvalidDistance(format!("negative entry {v} at ({i}, {j})")));
                }
            }
            if values[(i, i)] != 0.0 {
                return Err(Error::InvalidDistance(format!(
                    "diagonal entry ({i}, {i}) is {} instead of 0",
                    values[(i, i)]
                )));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let gap = (values[(i, j)] - values[(j, i)]).abs();
                if gap > SYMMETRY_TOL {
                    return Err(Error::InvalidDistance(format!(
                        "asymmetric entries ({i}, {j}) and ({j}, {i}) differ by {gap}"
                    )));
                }
            }
        }
        let values = Matrix::from_fn(n, n, |i, j| 0.5 * (values[(i, j)] + values[(j, i)]));
        Ok(DistanceMatrix { labels, values })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }
}

/// Undirected simple graph over labelled nodes.
///
/// Edges are stored once as `(i, j)` with `i < j`, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LanguageGraph {
    labels: Vec<String>,
    edges: Vec<(usize, usize)>,
    degrees: Vec<usize>,
}

impl LanguageGraph {
    /// Builds a graph from an arbitrary edge list. Duplicates and either
    /// orientation are accepted; self-loops and out-of-range nodes are not.
    pub fn new(labels: Vec<String>, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let n = labels.len();
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::param("edges", format!("edge ({a}, {b}) out of range for {n} nodes")));
            }
            if a == b {
                return Err(Error::param("edges", format!("self-loop on node {a}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut degrees = vec![0; n];
        for &(a, b) in &edges {
            degrees[a] += 1;
            degrees[b] += 1;
        }
        Ok(LanguageGraph { labels, edges, degrees })
    }

    /// `n` nodes labelled `0..n` with no edges.
    pub fn empty(n: usize) -> Self {
        Self::new(numbered(n), []).expect("edgeless graph")
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        Self::new(numbered(n), edges).expect("complete graph")
    }

    pub fn path(n: usize) -> Self {
        Self::new(numbered(n), (1..n).map(|i| (i - 1, i))).expect("path graph")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    /// Neighbour lists in ascending order.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.len()];
        for &(a, b) in &self.edges {
            out[a].push(b);
            out[b].push(a);
        }
        out.iter_mut().for_each(|v| v.sort_unstable());
        out
    }

    /// 0/1 adjacency matrix with zero diagonal.
    pub fn adjacency(&self) -> Matrix {
        let mut a = Matrix::zeros(self.len(), self.len());
        for &(i, j) in &self.edges {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        a
    }

    /// Hop distance from `source`; `None` for unreachable nodes.
    pub fn hop_distances(&self, source: usize) -> Vec<Option<usize>> {
        let nbrs = self.neighbors();
        let mut dist = vec![None; self.len()];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &v in &nbrs[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

fn numbered(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{i}")).collect()
}

/// Connects `i != j` exactly when `D[i][j] < r`.
///
/// Equality does not produce an edge, and the diagonal never yields a
/// self-loop, whatever `r` is.
pub fn build_graph(d: &DistanceMatrix, r: f64) -> Result<LanguageGraph> {
    if !r.is_finite() {
        return Err(Error::param("r", format!("threshold must be finite, got {r}")));
    }
    let n = d.len();
    let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
    let edges: Vec<_> = edges.filter(|&(i, j)| d.get(i, j) < r).collect();
    LanguageGraph::new(d.labels().to_vec(), edges)
}

/// Connected components as sorted node lists, ordered by smallest member.
pub fn connected_components(g: &LanguageGraph) -> Vec<Vec<usize>> {
    let n = g.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b) in g.edges() {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = comps.len();
            comps.push(Vec::new());
        }
        comps[slot[root]].push(i);
    }
    comps
}
