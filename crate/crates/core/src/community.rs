//! Anti-community detection by recursive spectral bisection that minimizes
//! modularity, plus community-size statistics.
//!
//! Modularity uses the symmetrized 0/1 adjacency:
//! `Q = (1/2m) Σ_ij (A_ij − k_i k_j / 2m) δ(c_i, c_j)`. Anti-communities are
//! groups with fewer internal links than the degree-preserving expectation,
//! so the partition search drives `Q` down rather than up.
//!
//! Each bisection takes the eigenvector of the most negative eigenvalue of
//! the group's generalized modularity matrix
//! `B⁽ᵍ⁾_ij = B_ij − δ_ij Σ_{l∈g} B_il`, found by power iteration on
//! `c·I − B⁽ᵍ⁾` with `c` a Gershgorin bound on the spectrum. Nodes split by
//! the sign of their entry; near-zero entries go to whichever side lowers `Q`
//! more (ties to the side holding the smaller node index). A single-node flip
//! sweep then refines the split. A group is final once no bisection lowers
//! `Q` by more than [`SPLIT_TOLERANCE`].

use alloc::vec;
use alloc::vec::Vec;

use libm::{log, sqrt};
use thiserror::Error;

use crate::graph::UndirectedGraph;
use crate::statfit::{fit_power_law, linear_fit, log_bin, BinnedDensity, FitError, FitRange, FitResult, LineFit};

/// Minimum decrease of `Q` for a bisection to be kept.
pub const SPLIT_TOLERANCE: f64 = 1e-12;
/// Convergence threshold on successive Rayleigh quotients.
pub const EIGEN_TOLERANCE: f64 = 1e-10;
pub const MAX_POWER_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommunityError {
    #[error("node {0} has no community")]
    UnassignedNode(usize),
    #[error("assignment covers {found} nodes, network has {expected}")]
    AssignmentLength { expected: usize, found: usize },
    #[error("community count regression needs at least two distinct network sizes")]
    FewerThanTwoDays,
    #[error(transparent)]
    Fit(#[from] FitError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// Community id per node; ids are `0..n_communities`, numbered by each
    /// community's smallest node.
    pub assignment: Vec<usize>,
    pub n_communities: usize,
    pub modularity: f64,
    pub sizes: Vec<usize>,
}

impl Partition {
    /// Builds a partition from arbitrary labels, renumbering them canonically.
    pub fn from_labels(g: &UndirectedGraph, labels: &[usize]) -> Result<Self, CommunityError> {
        let n = g.node_count();
        if labels.len() != n {
            return Err(if labels.len() < n {
                CommunityError::UnassignedNode(labels.len())
            } else {
                CommunityError::AssignmentLength {
                    expected: n,
                    found: labels.len(),
                }
            });
        }
        let mut remap: Vec<(usize, usize)> = Vec::new();
        let mut assignment = Vec::with_capacity(n);
        for &label in labels {
            let id = match remap.iter().find(|(l, _)| *l == label) {
                Some((_, id)) => *id,
                None => {
                    remap.push((label, remap.len()));
                    remap.len() - 1
                }
            };
            assignment.push(id);
        }
        let n_communities = remap.len();
        let mut sizes = vec![0; n_communities];
        for &c in &assignment {
            sizes[c] += 1;
        }
        let q = modularity(g, &assignment)?;
        Ok(Partition {
            assignment,
            n_communities,
            modularity: q,
            sizes,
        })
    }

    pub fn members(&self, community: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == community)
            .collect()
    }
}

/// Modularity of `assignment` (one label per node). Zero for edgeless graphs.
pub fn modularity(g: &UndirectedGraph, assignment: &[usize]) -> Result<f64, CommunityError> {
    let n = g.node_count();
    if assignment.len() < n {
        return Err(CommunityError::UnassignedNode(assignment.len()));
    }
    if assignment.len() > n {
        return Err(CommunityError::AssignmentLength {
            expected: n,
            found: assignment.len(),
        });
    }
    let two_m = 2.0 * g.edge_count() as f64;
    if two_m == 0.0 {
        return Ok(0.0);
    }
    let labels = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let mut internal = vec![0.0; labels];
    let mut degree_sum = vec![0.0; labels];
    for i in 0..n {
        degree_sum[assignment[i]] += g.degree(i) as f64;
        for &(j, _) in g.neighbors(i) {
            if assignment[j] == assignment[i] {
                internal[assignment[i]] += 1.0;
            }
        }
    }
    Ok(internal
        .iter()
        .zip(&degree_sum)
        .map(|(a, k)| a / two_m - (k / two_m) * (k / two_m))
        .sum())
}

/// Generalized modularity matrix of one group, applied implicitly.
struct GroupOperator<'a> {
    g: &'a UndirectedGraph,
    members: &'a [usize],
    /// global node → local index, `usize::MAX` outside the group
    local: &'a [usize],
    two_m: f64,
    degree: Vec<f64>,
    /// Σ_{l∈g} B_il for each member
    row_sum: Vec<f64>,
}

impl<'a> GroupOperator<'a> {
    fn new(g: &'a UndirectedGraph, members: &'a [usize], local: &'a [usize]) -> Self {
        let two_m = 2.0 * g.edge_count() as f64;
        let degree: Vec<f64> = members.iter().map(|&i| g.degree(i) as f64).collect();
        let group_degree: f64 = degree.iter().sum();
        let row_sum = members
            .iter()
            .zip(&degree)
            .map(|(&i, k)| {
                let inside = g.neighbors(i).iter().filter(|(j, _)| local[*j] != usize::MAX).count() as f64;
                inside - k * group_degree / two_m
            })
            .collect();
        GroupOperator {
            g,
            members,
            local,
            two_m,
            degree,
            row_sum,
        }
    }

    fn len(&self) -> usize {
        self.members.len()
    }

    /// `B⁽ᵍ⁾ x`.
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let kx: f64 = self.degree.iter().zip(x).map(|(k, v)| k * v).sum::<f64>() / self.two_m;
        for (a, &i) in self.members.iter().enumerate() {
            let ax: f64 = self
                .g
                .neighbors(i)
                .iter()
                .filter_map(|(j, _)| {
                    let l = self.local[*j];
                    (l != usize::MAX).then(|| x[l])
                })
                .sum();
            out[a] = ax - self.degree[a] * kx - self.row_sum[a] * x[a];
        }
    }

    fn diagonal(&self, a: usize) -> f64 {
        -self.degree[a] * self.degree[a] / self.two_m - self.row_sum[a]
    }

    /// Upper bound on the spectral radius from Gershgorin discs.
    fn spectral_bound(&self) -> f64 {
        let group_degree: f64 = self.degree.iter().sum();
        (0..self.len())
            .map(|a| {
                let inside = self.row_sum[a] + self.degree[a] * group_degree / self.two_m;
                inside + self.degree[a] * group_degree / self.two_m + self.row_sum[a].abs()
            })
            .fold(0.0, f64::max)
    }

    fn quadratic(&self, s: &[f64], scratch: &mut [f64]) -> f64 {
        self.apply(s, scratch);
        s.iter().zip(scratch.iter()).map(|(a, b)| a * b).sum()
    }
}

/// Eigenvector of the most negative eigenvalue by shifted power iteration.
fn lowest_eigenvector(op: &GroupOperator<'_>) -> Vec<f64> {
    let n = op.len();
    let shift = op.spectral_bound() + 1.0;
    let mut x: Vec<f64> = (0..n).map(|a| 1.0 + (a + 1) as f64 / n as f64).collect();
    normalize(&mut x);
    let mut bx = vec![0.0; n];
    let mut previous = f64::INFINITY;
    for _ in 0..MAX_POWER_ITERATIONS {
        op.apply(&x, &mut bx);
        let rayleigh: f64 = x.iter().zip(&bx).map(|(a, b)| a * b).sum();
        if (rayleigh - previous).abs() < EIGEN_TOLERANCE {
            break;
        }
        previous = rayleigh;
        for (xi, bi) in x.iter_mut().zip(&bx) {
            *xi = shift * *xi - bi;
        }
        if !normalize(&mut x) {
            break;
        }
    }
    x
}

fn normalize(x: &mut [f64]) -> bool {
    let norm = sqrt(x.iter().map(|v| v * v).sum());
    if norm > 0.0 && norm.is_finite() {
        x.iter_mut().for_each(|v| *v /= norm);
        true
    } else {
        false
    }
}

/// Splits a group into two, or `None` if no split lowers `Q` enough.
fn bisect(g: &UndirectedGraph, members: &[usize], local: &[usize]) -> Option<(Vec<usize>, Vec<usize>)> {
    let op = GroupOperator::new(g, members, local);
    let n = op.len();
    let x = lowest_eigenvector(&op);
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let zero = 1e-10 * scale;
    let mut s: Vec<f64> = x
        .iter()
        .map(|&v| if v > zero { 1.0 } else if v < -zero { -1.0 } else { 0.0 })
        .collect();
    let mut scratch = vec![0.0; n];

    // undecided entries: pick the side with the smaller contribution to sᵀBs
    for a in 0..n {
        if s[a] != 0.0 {
            continue;
        }
        op.apply(&s, &mut scratch);
        let field = scratch[a];
        s[a] = if field > 0.0 {
            -1.0
        } else if field < 0.0 {
            1.0
        } else {
            // members are ascending, so the first decided entry is the smallest node
            s.iter().find(|v| **v != 0.0).copied().unwrap_or(1.0)
        };
    }

    // single-node flips while the best one still lowers sᵀBs
    loop {
        op.apply(&s, &mut scratch);
        let mut best = (0.0, usize::MAX);
        for a in 0..n {
            let change = -4.0 * s[a] * (scratch[a] - op.diagonal(a) * s[a]);
            if change < best.0 {
                best = (change, a);
            }
        }
        if best.1 == usize::MAX || best.0 / (2.0 * op.two_m) >= -SPLIT_TOLERANCE {
            break;
        }
        s[best.1] = -s[best.1];
    }

    let delta_q = op.quadratic(&s, &mut scratch) / (2.0 * op.two_m);
    if delta_q >= -SPLIT_TOLERANCE {
        return None;
    }
    let left: Vec<usize> = members.iter().zip(&s).filter(|(_, v)| **v > 0.0).map(|(i, _)| *i).collect();
    let right: Vec<usize> = members.iter().zip(&s).filter(|(_, v)| **v < 0.0).map(|(i, _)| *i).collect();
    if left.is_empty() || right.is_empty() {
        return None;
    }
    Some((left, right))
}

/// Recursive spectral bisection minimizing modularity.
pub fn partition_anticommunities(g: &UndirectedGraph) -> Partition {
    let n = g.node_count();
    let mut labels = vec![0usize; n];
    if g.edge_count() > 0 {
        let mut local = vec![usize::MAX; n];
        let mut pending = vec![(0..n).collect::<Vec<usize>>()];
        let mut done: Vec<Vec<usize>> = Vec::new();
        while let Some(group) = pending.pop() {
            if group.len() < 2 {
                done.push(group);
                continue;
            }
            for (a, &i) in group.iter().enumerate() {
                local[i] = a;
            }
            let split = bisect(g, &group, &local);
            for &i in &group {
                local[i] = usize::MAX;
            }
            match split {
                Some((a, b)) => {
                    pending.push(b);
                    pending.push(a);
                }
                None => done.push(group),
            }
        }
        done.sort_by_key(|c| c[0]);
        for (id, members) in done.iter().enumerate() {
            for &i in members {
                labels[i] = id;
            }
        }
    }
    Partition::from_labels(g, &labels).expect("labels cover every node")
}

/// Size distributions of one partition per network and the scaling of the
/// community count with network size.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityStats {
    /// Log-binned community sizes, one per input partition.
    pub size_densities: Vec<BinnedDensity>,
    /// Power-law fit of the last partition's size distribution.
    pub size_fit: Result<FitResult, FitError>,
    /// `count = intercept + slope · ln N` over all inputs.
    pub count_fit: Result<LineFit, CommunityError>,
}

pub fn size_density(partition: &Partition) -> BinnedDensity {
    let sizes: Vec<f64> = partition.sizes.iter().map(|&s| s as f64).collect();
    log_bin(&sizes, 1.0, 2.0).expect("community sizes are positive")
}

/// `count = intercept + slope · ln N` by least squares over `(N, count)` pairs.
pub fn count_regression(points: &[(usize, f64)]) -> Result<LineFit, CommunityError> {
    let mut sizes: Vec<usize> = points.iter().map(|p| p.0).filter(|&n| n > 0).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(CommunityError::FewerThanTwoDays);
    }
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.0 > 0)
        .map(|&(n, c)| (log(n as f64), c))
        .unzip();
    Ok(linear_fit(&x, &y)?)
}

/// `partitions` pairs each partition with its network's active node count.
pub fn community_size_stats(partitions: &[(usize, &Partition)], range: FitRange) -> CommunityStats {
    let size_densities: Vec<BinnedDensity> = partitions.iter().map(|(_, p)| size_density(p)).collect();
    let size_fit = match size_densities.last() {
        Some(last) => fit_power_law(last, range),
        None => Err(FitError::TooFewBins { needed: 3, found: 0 }),
    };
    let counts: Vec<(usize, f64)> = partitions.iter().map(|(n, p)| (*n, p.n_communities as f64)).collect();
    CommunityStats {
        size_densities,
        size_fit,
        count_fit: count_regression(&counts),
    }
}
