//! Small-world, hierarchy, mixing and centrality measures on the symmetrized
//! cash-flow network.
//!
//! Shortest paths are hop counts on the undirected 0/1 adjacency. Weighted
//! quantities use the symmetrized weights `w̃` and strengths `s_i = Σ_j w̃_ij`.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::graph::UndirectedGraph;
use crate::statfit::{fit_scaling, FitError, FitResult};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("network has no pair of connected nodes")]
    EmptyNetwork,
    #[error("node {0} has no neighbors")]
    IsolatedNode(usize),
}

/// Characteristic path length of the largest connected component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLength {
    pub mean: f64,
    pub component_count: usize,
    pub largest_component: usize,
    /// Fraction of nodes inside the largest component.
    pub coverage: f64,
}

/// Hop distances from `source`; `usize::MAX` marks unreachable nodes.
pub fn bfs_distances(g: &UndirectedGraph, source: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.node_count()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &(v, _) in g.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Mean shortest-path length over unordered pairs of the largest component
/// (the earliest one on ties), by one BFS per member.
pub fn characteristic_path_length(g: &UndirectedGraph) -> Result<PathLength, MetricsError> {
    let components = g.components();
    let largest = components
        .iter()
        .fold(None::<&Vec<usize>>, |best, c| match best {
            Some(b) if b.len() >= c.len() => Some(b),
            _ => Some(c),
        })
        .ok_or(MetricsError::EmptyNetwork)?;
    if largest.len() < 2 {
        return Err(MetricsError::EmptyNetwork);
    }
    let mut total: u64 = 0;
    for &s in largest {
        let dist = bfs_distances(g, s);
        total += largest.iter().filter(|&&t| t > s).map(|&t| dist[t] as u64).sum::<u64>();
    }
    let pairs = (largest.len() * (largest.len() - 1) / 2) as f64;
    Ok(PathLength {
        mean: total as f64 / pairs,
        component_count: components.len(),
        largest_component: largest.len(),
        coverage: largest.len() as f64 / g.node_count() as f64,
    })
}

/// Per-node triangle sums, using `mark` as scratch space of length `n`.
fn triangle_terms(g: &UndirectedGraph, i: usize, mark: &mut [f64]) -> (usize, f64) {
    for &(j, w) in g.neighbors(i) {
        mark[j] = w;
    }
    let mut triangles = 0;
    let mut weighted = 0.0;
    for &(j, w_ij) in g.neighbors(i) {
        for &(h, _) in g.neighbors(j) {
            if h > j && mark[h] > 0.0 {
                triangles += 1;
                // ordered pairs (j, h) and (h, j) each contribute (w_ij + w_ih) / 2
                weighted += w_ij + mark[h];
            }
        }
    }
    for &(j, _) in g.neighbors(i) {
        mark[j] = 0.0;
    }
    (triangles, weighted)
}

/// Fraction of neighbor pairs of `i` that are linked; 0 when `k_i ≤ 1`.
pub fn clustering_unweighted(g: &UndirectedGraph, i: usize) -> f64 {
    let mut mark = vec![0.0; g.node_count()];
    unweighted_from(g, i, triangle_terms(g, i, &mut mark).0)
}

fn unweighted_from(g: &UndirectedGraph, i: usize, triangles: usize) -> f64 {
    let k = g.degree(i);
    if k <= 1 {
        0.0
    } else {
        2.0 * triangles as f64 / (k * (k - 1)) as f64
    }
}

/// `c_i = 1/(s_i (k_i − 1)) Σ_{j,h} (w̃_ij + w̃_ih)/2 a_ij a_ih a_jh` over
/// ordered neighbor pairs; 0 when `k_i ≤ 1`.
pub fn clustering_weighted(g: &UndirectedGraph, i: usize) -> f64 {
    let mut mark = vec![0.0; g.node_count()];
    weighted_from(g, i, triangle_terms(g, i, &mut mark).1)
}

fn weighted_from(g: &UndirectedGraph, i: usize, sum: f64) -> f64 {
    let k = g.degree(i);
    if k <= 1 {
        0.0
    } else {
        sum / (g.strength(i) * (k - 1) as f64)
    }
}

/// Both clustering variants for every node.
pub fn clustering_all(g: &UndirectedGraph) -> (Vec<f64>, Vec<f64>) {
    let mut mark = vec![0.0; g.node_count()];
    (0..g.node_count())
        .map(|i| {
            let (t, s) = triangle_terms(g, i, &mut mark);
            (unweighted_from(g, i, t), weighted_from(g, i, s))
        })
        .unzip()
}

/// Arithmetic mean of `values` per degree; degrees with no nodes are absent.
pub fn avg_by_degree(values: &[f64], degrees: &[usize]) -> BTreeMap<usize, f64> {
    crate::statfit::mean_by_class(values, degrees)
}

/// Normalization of the neighbor-degree average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnnVariant {
    /// `(1/k_i) Σ_j a_ij w̃_ij k_j`
    DegreeNormalized,
    /// `(1/s_i) Σ_j a_ij w̃_ij k_j`
    StrengthNormalized,
    /// `(1/k_i) Σ_j a_ij k_j`
    Unweighted,
}

pub fn assortative_mixing(g: &UndirectedGraph, i: usize, variant: KnnVariant) -> Result<f64, MetricsError> {
    let k = g.degree(i);
    if k == 0 {
        return Err(MetricsError::IsolatedNode(i));
    }
    let nbrs = g.neighbors(i);
    Ok(match variant {
        KnnVariant::DegreeNormalized => {
            nbrs.iter().map(|&(j, w)| w * g.degree(j) as f64).sum::<f64>() / k as f64
        }
        KnnVariant::StrengthNormalized => {
            nbrs.iter().map(|&(j, w)| w * g.degree(j) as f64).sum::<f64>() / g.strength(i)
        }
        KnnVariant::Unweighted => nbrs.iter().map(|&(j, _)| g.degree(j) as f64).sum::<f64>() / k as f64,
    })
}

/// Shortest-path betweenness over unordered pairs, endpoints excluded.
///
/// One BFS per source counts shortest paths, then dependencies are
/// accumulated in reverse BFS order; O(n·m) overall.
pub fn betweenness(g: &UndirectedGraph) -> Vec<f64> {
    let n = g.node_count();
    let mut centrality = vec![0.0; n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut delta = vec![0.0f64; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::with_capacity(n);
    for s in 0..n {
        sigma.iter_mut().for_each(|v| *v = 0.0);
        dist.iter_mut().for_each(|v| *v = usize::MAX);
        delta.iter_mut().for_each(|v| *v = 0.0);
        order.clear();
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &(v, _) in g.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
                if dist[v] == dist[u] + 1 {
                    sigma[v] += sigma[u];
                }
            }
        }
        for &w in order.iter().rev() {
            for &(v, _) in g.neighbors(w) {
                if dist[v] != usize::MAX && dist[v] + 1 == dist[w] {
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
                }
            }
            if w != s {
                centrality[w] += delta[w];
            }
        }
    }
    // each unordered pair was visited from both ends
    centrality.iter_mut().for_each(|c| *c /= 2.0);
    centrality
}

/// Per-node and per-degree measures for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub degree: Vec<usize>,
    pub strength: Vec<f64>,
    pub clustering_unweighted: Vec<f64>,
    pub clustering_weighted: Vec<f64>,
    /// Degree-normalized weighted k_nn; `None` for isolated nodes.
    pub knn: Vec<Option<f64>>,
    pub knn_strength: Vec<Option<f64>>,
    pub knn_unweighted: Vec<Option<f64>>,
    pub betweenness: Vec<f64>,
    /// c(k) for k ≥ 2.
    pub c_unweighted_by_k: BTreeMap<usize, f64>,
    pub c_weighted_by_k: BTreeMap<usize, f64>,
    /// k_nn(k) for k ≥ 1.
    pub knn_by_k: BTreeMap<usize, f64>,
    pub knn_strength_by_k: BTreeMap<usize, f64>,
    pub knn_unweighted_by_k: BTreeMap<usize, f64>,
    pub betweenness_by_k: BTreeMap<usize, f64>,
    pub path_length: Option<PathLength>,
    /// ⟨C⟩ = (1/N) Σ_i c_i over all nodes.
    pub mean_clustering_unweighted: f64,
    pub mean_clustering_weighted: f64,
}

impl MetricsReport {
    pub fn compute(g: &UndirectedGraph) -> Self {
        let n = g.node_count();
        let degree = g.degrees();
        let strength = (0..n).map(|i| g.strength(i)).collect();
        let (c_u, c_w) = clustering_all(g);
        let knn_of = |variant| -> Vec<Option<f64>> {
            (0..n).map(|i| assortative_mixing(g, i, variant).ok()).collect()
        };
        let knn = knn_of(KnnVariant::DegreeNormalized);
        let knn_strength = knn_of(KnnVariant::StrengthNormalized);
        let knn_unweighted = knn_of(KnnVariant::Unweighted);
        let betweenness = betweenness(g);

        let restricted = |values: &[f64], min_k: usize| {
            let (v, k): (Vec<f64>, Vec<usize>) = values
                .iter()
                .zip(&degree)
                .filter(|(_, k)| **k >= min_k)
                .map(|(v, k)| (*v, *k))
                .unzip();
            avg_by_degree(&v, &k)
        };
        let flatten = |values: &[Option<f64>]| -> Vec<f64> { values.iter().map(|v| v.unwrap_or(0.0)).collect() };
        let mean = |values: &[f64]| if n == 0 { 0.0 } else { values.iter().sum::<f64>() / n as f64 };

        MetricsReport {
            c_unweighted_by_k: restricted(&c_u, 2),
            c_weighted_by_k: restricted(&c_w, 2),
            knn_by_k: restricted(&flatten(&knn), 1),
            knn_strength_by_k: restricted(&flatten(&knn_strength), 1),
            knn_unweighted_by_k: restricted(&flatten(&knn_unweighted), 1),
            betweenness_by_k: restricted(&betweenness, 1),
            path_length: characteristic_path_length(g).ok(),
            mean_clustering_unweighted: mean(&c_u),
            mean_clustering_weighted: mean(&c_w),
            degree,
            strength,
            clustering_unweighted: c_u,
            clustering_weighted: c_w,
            knn,
            knn_strength,
            knn_unweighted,
            betweenness,
        }
    }
}

/// Log-log least squares of b(k) against k. Degree classes whose mean
/// betweenness is zero carry no information on a log scale and are skipped.
pub fn betweenness_degree_fit(report: &MetricsReport) -> Result<FitResult, FitError> {
    betweenness_scaling(&report.betweenness_by_k)
}

pub fn betweenness_scaling(b_by_k: &BTreeMap<usize, f64>) -> Result<FitResult, FitError> {
    let points: Vec<(f64, f64)> = b_by_k.iter().map(|(k, b)| (*k as f64, *b)).collect();
    fit_scaling(&points)
}
