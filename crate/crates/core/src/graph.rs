//! Directed cash-flow networks and their symmetrized undirected view.
//!
//! A [`CashFlowNetwork`] keeps exact fixed-point weights `w[i][j]` (cash paid
//! by buyer `i` to seller `j`). Metrics run on an [`UndirectedGraph`] built by
//! [`CashFlowNetwork::symmetrized`], where `w̃[i][j] = w[i][j] + w[j][i]` and
//! `a[i][j] = 1` iff `w̃[i][j] > 0`.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::exchange::PlayerId;
use crate::ledger::DailySnapshot;
use crate::money::Money;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("edge weight must be positive")]
    NonPositiveWeight,
    #[error("node index {0} out of range")]
    NodeOutOfRange(usize),
    #[error("unknown player {0}")]
    UnknownPlayer(PlayerId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CashFlowNetwork {
    nodes: Vec<PlayerId>,
    out_edges: Vec<Vec<(usize, Money)>>,
    in_edges: Vec<Vec<(usize, Money)>>,
}

/// Outcome of [`CashFlowNetwork::prune_isolated`].
#[derive(Debug, Clone, PartialEq)]
pub struct PruneReport {
    pub removed: Vec<PlayerId>,
    pub total_nodes: usize,
}

impl PruneReport {
    /// Fraction of nodes removed; 0 for an empty input.
    pub fn isolated_fraction(&self) -> f64 {
        if self.total_nodes == 0 {
            0.0
        } else {
            self.removed.len() as f64 / self.total_nodes as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Degrees {
    pub k_in: Vec<usize>,
    pub k_out: Vec<usize>,
    /// Distinct partners; a reciprocal pair counts once.
    pub k: Vec<usize>,
}

impl CashFlowNetwork {
    /// Network of all `registrants` plus every player appearing in the
    /// snapshot, with an edge `i → j` wherever cumulative flow is positive.
    pub fn build(snapshot: &DailySnapshot, registrants: impl IntoIterator<Item = PlayerId>) -> Self {
        let mut players: BTreeSet<PlayerId> = registrants.into_iter().collect();
        for (i, j) in snapshot.flow.keys() {
            players.insert(*i);
            players.insert(*j);
        }
        let edges: Vec<(PlayerId, PlayerId, Money)> = snapshot
            .flow
            .iter()
            .filter(|(_, w)| w.is_positive())
            .map(|((i, j), w)| (*i, *j, *w))
            .collect();
        Self::from_edges(players, &edges).expect("snapshot flows are positive and loop-free")
    }

    /// Network on `nodes` with the given directed edges; repeated pairs are summed.
    pub fn from_edges(
        nodes: impl IntoIterator<Item = PlayerId>,
        edges: &[(PlayerId, PlayerId, Money)],
    ) -> Result<Self, GraphError> {
        let mut nodes: Vec<PlayerId> = nodes.into_iter().collect();
        for (i, j, _) in edges {
            nodes.push(*i);
            nodes.push(*j);
        }
        nodes.sort_unstable();
        nodes.dedup();
        let index: BTreeMap<PlayerId, usize> = nodes.iter().enumerate().map(|(k, p)| (*p, k)).collect();
        let mut weights: BTreeMap<(usize, usize), Money> = BTreeMap::new();
        for (i, j, w) in edges {
            let (a, b) = (index[i], index[j]);
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if !w.is_positive() {
                return Err(GraphError::NonPositiveWeight);
            }
            *weights.entry((a, b)).or_insert(Money::ZERO) += *w;
        }
        let n = nodes.len();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for ((a, b), w) in weights {
            out_edges[a].push((b, w));
            in_edges[b].push((a, w));
        }
        for list in &mut in_edges {
            list.sort_unstable_by_key(|e| e.0);
        }
        Ok(CashFlowNetwork {
            nodes,
            out_edges,
            in_edges,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Player ids in ascending order; node index `k` is `nodes()[k]`.
    pub fn nodes(&self) -> &[PlayerId] {
        &self.nodes
    }

    pub fn index_of(&self, player: PlayerId) -> Option<usize> {
        self.nodes.binary_search(&player).ok()
    }

    /// Number of directed edges.
    pub fn edge_count(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }

    pub fn out_edges(&self, i: usize) -> &[(usize, Money)] {
        &self.out_edges[i]
    }

    pub fn in_edges(&self, i: usize) -> &[(usize, Money)] {
        &self.in_edges[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> Money {
        match self.out_edges[i].binary_search_by_key(&j, |e| e.0) {
            Ok(pos) => self.out_edges[i][pos].1,
            Err(_) => Money::ZERO,
        }
    }

    /// All directed edges as `(buyer, seller, w)`, ordered by buyer then seller.
    pub fn edges(&self) -> impl Iterator<Item = (PlayerId, PlayerId, Money)> + '_ {
        self.out_edges
            .iter()
            .enumerate()
            .flat_map(move |(i, list)| list.iter().map(move |(j, w)| (self.nodes[i], self.nodes[*j], *w)))
    }

    /// Σ_i w[i][p]: cash received as a seller.
    pub fn income(&self, i: usize) -> Money {
        self.in_edges[i].iter().map(|e| e.1).sum()
    }

    /// Σ_j w[p][j]: cash paid as a buyer.
    pub fn spending(&self, i: usize) -> Money {
        self.out_edges[i].iter().map(|e| e.1).sum()
    }

    fn partners(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        MergeUnique::new(
            self.out_edges[i].iter().map(|e| e.0),
            self.in_edges[i].iter().map(|e| e.0),
        )
    }

    pub fn degrees(&self) -> Degrees {
        let n = self.node_count();
        Degrees {
            k_in: (0..n).map(|i| self.in_edges[i].len()).collect(),
            k_out: (0..n).map(|i| self.out_edges[i].len()).collect(),
            k: (0..n).map(|i| self.partners(i).count()).collect(),
        }
    }

    /// Drops nodes with no trading partner.
    pub fn prune_isolated(&self) -> (CashFlowNetwork, PruneReport) {
        let (kept, removed): (Vec<usize>, Vec<usize>) = (0..self.node_count())
            .partition(|&i| !self.out_edges[i].is_empty() || !self.in_edges[i].is_empty());
        let edges: Vec<(PlayerId, PlayerId, Money)> = self.edges().collect();
        let network = CashFlowNetwork::from_edges(kept.iter().map(|&i| self.nodes[i]), &edges)
            .expect("edges of a valid network");
        let report = PruneReport {
            removed: removed.iter().map(|&i| self.nodes[i]).collect(),
            total_nodes: self.node_count(),
        };
        (network, report)
    }

    /// Mean undirected degree over non-isolated nodes; 0 if there are none.
    pub fn mean_degree(&self) -> f64 {
        let k: Vec<usize> = self.degrees().k.into_iter().filter(|&k| k > 0).collect();
        if k.is_empty() {
            0.0
        } else {
            k.iter().sum::<usize>() as f64 / k.len() as f64
        }
    }

    /// Undirected view with `w̃[i][j] = w[i][j] + w[j][i]`, same node indices.
    pub fn symmetrized(&self) -> UndirectedGraph {
        let n = self.node_count();
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, list) in adj.iter_mut().enumerate() {
            let mut merged: BTreeMap<usize, Money> = BTreeMap::new();
            for (j, w) in self.out_edges[i].iter().chain(self.in_edges[i].iter()) {
                *merged.entry(*j).or_insert(Money::ZERO) += *w;
            }
            list.extend(merged.into_iter().map(|(j, w)| (j, w.to_f64())));
        }
        UndirectedGraph::from_sorted_adjacency(adj)
    }
}

/// Merges two ascending iterators, yielding each value once.
struct MergeUnique<A: Iterator<Item = usize>, B: Iterator<Item = usize>> {
    a: core::iter::Peekable<A>,
    b: core::iter::Peekable<B>,
}

impl<A: Iterator<Item = usize>, B: Iterator<Item = usize>> MergeUnique<A, B> {
    fn new(a: A, b: B) -> Self {
        MergeUnique {
            a: a.peekable(),
            b: b.peekable(),
        }
    }
}

impl<A: Iterator<Item = usize>, B: Iterator<Item = usize>> Iterator for MergeUnique<A, B> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        match (self.a.peek().copied(), self.b.peek().copied()) {
            (Some(x), Some(y)) if x == y => {
                self.a.next();
                self.b.next()
            }
            (Some(x), Some(y)) if x < y => self.a.next(),
            (Some(_), Some(_)) => self.b.next(),
            (Some(_), None) => self.a.next(),
            (None, _) => self.b.next(),
        }
    }
}

/// Simple undirected graph with positive real edge weights, stored as sorted
/// adjacency lists.
#[derive(Debug, Clone, PartialEq)]
pub struct UndirectedGraph {
    adj: Vec<Vec<(usize, f64)>>,
    edges: usize,
}

impl UndirectedGraph {
    fn from_sorted_adjacency(adj: Vec<Vec<(usize, f64)>>) -> Self {
        let edges = adj.iter().map(Vec::len).sum::<usize>() / 2;
        UndirectedGraph { adj, edges }
    }

    /// Graph on `n` nodes; weights of repeated pairs are summed.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(i, j, w) in edges {
            if i >= n {
                return Err(GraphError::NodeOutOfRange(i));
            }
            if j >= n {
                return Err(GraphError::NodeOutOfRange(j));
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            if !(w > 0.0) {
                return Err(GraphError::NonPositiveWeight);
            }
            *merged.entry((i.min(j), i.max(j))).or_insert(0.0) += w;
        }
        let mut adj = vec![Vec::new(); n];
        for ((i, j), w) in merged {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        for list in &mut adj {
            list.sort_unstable_by_key(|e| e.0);
        }
        Ok(Self::from_sorted_adjacency(adj))
    }

    /// Unit-weight graph.
    pub fn unweighted(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let weighted: Vec<(usize, usize, f64)> = edges.iter().map(|&(i, j)| (i, j, 1.0)).collect();
        let mut g = Self::from_edges(n, &weighted)?;
        // collapse duplicates back to unit weight
        for list in &mut g.adj {
            for e in list.iter_mut() {
                e.1 = 1.0;
            }
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    /// `(neighbor, w̃)` pairs sorted by neighbor.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.adj[i]
            .binary_search_by_key(&j, |e| e.0)
            .ok()
            .map(|pos| self.adj[i][pos].1)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.weight(i, j).is_some()
    }

    /// s_i = Σ_j w̃[i][j] a[i][j].
    pub fn strength(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|e| e.1).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |e| e.0 > i).map(move |e| (i, e.0, e.1)))
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Same graph with node `i` renamed to `perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> UndirectedGraph {
        let edges: Vec<(usize, usize, f64)> = self.edges().map(|(i, j, w)| (perm[i], perm[j], w)).collect();
        UndirectedGraph::from_edges(self.node_count(), &edges).expect("relabeling keeps edges valid")
    }
}
