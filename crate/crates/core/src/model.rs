//! Network topology, the pair/slot layout of link controls, and the
//! consensus system matrix `A(t)` a link control induces.
//!
//! Nodes are zero-based throughout this crate; the file formats in the
//! companion crate translate to and from the one-based numbering used in
//! scenario files and reports.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::{Error, Result};

/// Canonical layout of the `n(n−1)/2` unordered node pairs:
/// `(0,1), (0,2), …, (0,n−1), (1,2), …, (n−2,n−1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeIndex {
    n: usize,
}

impl EdgeIndex {
    pub fn new(n: usize) -> Self {
        EdgeIndex { n }
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n.saturating_sub(1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Slot of the pair `{i, j}`; order of the arguments does not matter.
    pub fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        debug_assert!(i != j && j < self.n);
        // pairs before row i: sum_{r<i} (n-1-r)
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    pub fn pair(&self, slot: usize) -> (usize, usize) {
        debug_assert!(slot < self.len());
        let mut rest = slot;
        let mut i = 0;
        loop {
            let row = self.n - 1 - i;
            if rest < row {
                return (i, i + 1 + rest);
            }
            rest -= row;
            i += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Weighted undirected graph. Edges are kept sorted by their [`EdgeIndex`] slot.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    n: usize,
    edges: Vec<Edge>,
    slot_to_edge: Vec<Option<usize>>,
}

impl NetworkTopology {
    /// Validates and builds a topology from zero-based `(i, j, weight)` triples.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("topology must have at least one node"));
        }
        let index = EdgeIndex::new(n);
        let mut slot_to_edge = vec![None; index.len()];
        let mut list = Vec::new();
        for (a, b, weight) in edges {
            for node in [a, b] {
                if node >= n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if a == b {
                return Err(Error::SelfLoop { node: a });
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if !(weight > 0.0) || !weight.is_finite() {
                return Err(Error::NonPositiveWeight { i, j, weight });
            }
            let slot = index.slot(i, j);
            if slot_to_edge[slot].is_some() {
                return Err(Error::DuplicateEdge { i, j });
            }
            slot_to_edge[slot] = Some(usize::MAX);
            list.push((slot, Edge { i, j, weight }));
        }
        list.sort_by_key(|(slot, _)| *slot);
        let mut edges = Vec::with_capacity(list.len());
        for (pos, (slot, e)) in list.into_iter().enumerate() {
            slot_to_edge[slot] = Some(pos);
            edges.push(e);
        }
        Ok(NetworkTopology {
            n,
            edges,
            slot_to_edge,
        })
    }

    /// Complete graph with weights given in [`EdgeIndex`] order.
    pub fn complete(n: usize, weights: &[f64]) -> Result<Self> {
        let index = EdgeIndex::new(n);
        if weights.len() != index.len() {
            return Err(Error::DimensionMismatch {
                what: "complete-graph weights",
                expected: index.len(),
                found: weights.len(),
            });
        }
        Self::new(
            n,
            weights.iter().enumerate().map(|(s, &w)| {
                let (i, j) = index.pair(s);
                (i, j, w)
            }),
        )
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn index(&self) -> EdgeIndex {
        EdgeIndex::new(self.n)
    }

    /// Position in [`edges`](Self::edges) of the edge between `i` and `j`.
    pub fn edge_position(&self, i: usize, j: usize) -> Option<usize> {
        if i == j || i >= self.n || j >= self.n {
            return None;
        }
        self.slot_to_edge[self.index().slot(i, j)]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.edge_position(i, j)
            .map_or(0.0, |p| self.edges[p].weight)
    }

    pub fn is_connected(&self) -> bool {
        connected_components(self, &LinkControl::none(self)).len() == 1
    }

    /// The same graph with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.n,
            self.edges.iter().map(|e| (e.i, e.j, e.weight * factor)),
        )
    }
}

/// Binary link-breaking decision over all node pairs, in [`EdgeIndex`] order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkControl {
    bits: Vec<bool>,
    budget: usize,
}

impl LinkControl {
    /// Breaks nothing; budget zero.
    pub fn none(topology: &NetworkTopology) -> Self {
        LinkControl {
            bits: vec![false; topology.index().len()],
            budget: 0,
        }
    }

    pub fn new(topology: &NetworkTopology, bits: Vec<bool>, budget: usize) -> Result<Self> {
        let index = topology.index();
        if bits.len() != index.len() {
            return Err(Error::DimensionMismatch {
                what: "link control",
                expected: index.len(),
                found: bits.len(),
            });
        }
        if budget > topology.edge_count() {
            return Err(Error::BudgetExceeded {
                budget,
                limit: topology.edge_count(),
            });
        }
        let mut count = 0;
        for (slot, &b) in bits.iter().enumerate() {
            if b {
                let (i, j) = index.pair(slot);
                if topology.edge_position(i, j).is_none() {
                    return Err(Error::NonEdgeControl { i, j });
                }
                count += 1;
            }
        }
        if count > budget {
            return Err(Error::BudgetExceeded {
                budget: count,
                limit: budget,
            });
        }
        Ok(LinkControl { bits, budget })
    }

    /// Breaks the listed node pairs (zero-based).
    pub fn from_pairs(
        topology: &NetworkTopology,
        pairs: &[(usize, usize)],
        budget: usize,
    ) -> Result<Self> {
        let index = topology.index();
        let mut bits = vec![false; index.len()];
        for &(i, j) in pairs {
            if i == j || i >= topology.nodes() || j >= topology.nodes() {
                return Err(Error::NonEdgeControl { i, j });
            }
            bits[index.slot(i, j)] = true;
        }
        Self::new(topology, bits, budget)
    }

    /// Breaks the edges at the given positions of [`NetworkTopology::edges`].
    pub fn from_edge_positions(
        topology: &NetworkTopology,
        positions: &[usize],
        budget: usize,
    ) -> Result<Self> {
        let pairs: Vec<_> = positions
            .iter()
            .map(|&p| (topology.edges()[p].i, topology.edges()[p].j))
            .collect();
        Self::from_pairs(topology, &pairs, budget)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    /// `N_u = |u|²`, the number of broken links.
    pub fn broken_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_broken(&self, index: EdgeIndex, i: usize, j: usize) -> bool {
        self.bits[index.slot(i, j)]
    }

    /// Broken pairs in slot order (zero-based).
    pub fn broken_pairs(&self, index: EdgeIndex) -> Vec<(usize, usize)> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(s, _)| index.pair(s))
            .collect()
    }

    /// Same broken set, different budget.
    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }
}

/// Symmetric, zero-row-sum matrix with nonnegative off-diagonal entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrix(Matrix);

impl SystemMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// Checks the invariants to `tol` and wraps an arbitrary matrix.
    pub fn try_from_matrix(m: Matrix, tol: f64) -> Result<Self> {
        if m.asymmetry() > tol {
            return Err(Error::InvalidParameter("system matrix is not symmetric"));
        }
        if m.row_sums().iter().any(|s| s.abs() > tol) {
            return Err(Error::InvalidParameter("system matrix rows do not sum to zero"));
        }
        let n = m.dim();
        for i in 0..n {
            for j in 0..n {
                if i != j && m[(i, j)] < 0.0 {
                    return Err(Error::InvalidParameter(
                        "system matrix has a negative off-diagonal entry",
                    ));
                }
            }
        }
        Ok(SystemMatrix(m))
    }
}

/// `A_ij = A_ji = a_ij(1 − u_ij)`, `A_ii = −Σ_{j≠i} A_ij`.
pub fn build_system_matrix(
    topology: &NetworkTopology,
    control: &LinkControl,
) -> Result<SystemMatrix> {
    let index = topology.index();
    if control.bits().len() != index.len() {
        return Err(Error::DimensionMismatch {
            what: "link control",
            expected: index.len(),
            found: control.bits().len(),
        });
    }
    for (slot, &b) in control.bits().iter().enumerate() {
        if b {
            let (i, j) = index.pair(slot);
            if topology.edge_position(i, j).is_none() {
                return Err(Error::NonEdgeControl { i, j });
            }
        }
    }
    let n = topology.nodes();
    let mut a = Matrix::zeros(n);
    for e in topology.edges() {
        if control.is_broken(index, e.i, e.j) {
            continue;
        }
        a[(e.i, e.j)] = e.weight;
        a[(e.j, e.i)] = e.weight;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)]).sum();
        a[(i, i)] = -off;
    }
    Ok(SystemMatrix(a))
}

/// Connected components of the graph that survives `control`.
///
/// Components are listed by their smallest node; nodes within a component
/// are sorted.
pub fn connected_components(topology: &NetworkTopology, control: &LinkControl) -> Vec<Vec<usize>> {
    let n = topology.nodes();
    let index = topology.index();
    let mut adjacency = vec![Vec::new(); n];
    for e in topology.edges() {
        let broken = control.bits().get(index.slot(e.i, e.j)).copied().unwrap_or(false);
        if !broken {
            adjacency[e.i].push(e.j);
            adjacency[e.j].push(e.i);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut components = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![start];
        let mut stack = vec![start];
        label[start] = id;
        while let Some(v) = stack.pop() {
            for &w in &adjacency[v] {
                if label[w] == usize::MAX {
                    label[w] = id;
                    members.push(w);
                    stack.push(w);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    components
}

/// Whether removing some set of at most `budget` edges disconnects the graph.
pub fn has_cut_within(topology: &NetworkTopology, budget: usize) -> bool {
    let m = topology.edge_count();
    (0..=budget.min(m)).any(|size| cut_of_size_exists(topology, size))
}

/// Fewest edges whose removal disconnects the graph (edge count, weights
/// ignored). Zero for an already disconnected graph; for a single node there
/// is nothing to disconnect and `usize::MAX` is returned.
pub fn min_cut_size(topology: &NetworkTopology) -> usize {
    if topology.nodes() < 2 {
        return usize::MAX;
    }
    let m = topology.edge_count();
    (0..=m)
        .find(|&size| cut_of_size_exists(topology, size))
        .unwrap_or(m)
}

fn cut_of_size_exists(topology: &NetworkTopology, size: usize) -> bool {
    let mut found = false;
    for_each_combination(topology.edge_count(), size, |positions| {
        if found {
            return;
        }
        let control = LinkControl::from_edge_positions(topology, positions, size)
            .expect("positions come from the topology");
        if connected_components(topology, &control).len() > 1 {
            found = true;
        }
    });
    found
}

/// Calls `f` with every `k`-subset of `0..m` in lexicographic order.
pub(crate) fn for_each_combination(m: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > m {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + m - k {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
