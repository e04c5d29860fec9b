//! Brute-force reference computations and sample generators for tests.
//!
//! Everything here works on dense matrices and exhaustive enumeration and
//! shares no code with the production algorithms it is used to check.

use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, log, pow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense symmetric weight matrix; `0.0` means no edge.
pub type Dense = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws from `p(x) ∝ x^-γ` on `[lo, hi]` by inverting the CDF.
pub fn sample_power_law(n: usize, gamma: f64, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let u: f64 = r.gen();
            inverse_power_law_cdf(u, gamma, lo, hi)
        })
        .collect()
}

fn inverse_power_law_cdf(u: f64, gamma: f64, lo: f64, hi: f64) -> f64 {
    if (gamma - 1.0).abs() < 1e-12 {
        lo * exp(u * log(hi / lo))
    } else {
        let a = 1.0 - gamma;
        let (la, ha) = (pow(lo, a), pow(hi, a));
        pow(la + u * (ha - la), 1.0 / a)
    }
}

/// Draws from `p(x) ∝ x^-γ e^(-x/x_c)` on `[lo, ∞)` by rejection from the
/// pure power law truncated at `lo + 40 x_c`.
pub fn sample_power_law_cutoff(n: usize, gamma: f64, cutoff: f64, lo: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let hi = lo + 40.0 * cutoff;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = inverse_power_law_cdf(r.gen(), gamma, lo, hi);
        let accept: f64 = r.gen();
        if accept < exp(-(x - lo) / cutoff) {
            out.push(x);
        }
    }
    out
}

/// Erdős–Rényi graph with uniform weights in `[0.5, 10)` (or all ones).
pub fn random_graph(n: usize, p: f64, weighted: bool, seed: u64) -> Dense {
    let mut r = rng(seed);
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if r.gen::<f64>() < p {
                let v = if weighted { r.gen_range(0.5..10.0) } else { 1.0 };
                w[i][j] = v;
                w[j][i] = v;
            }
        }
    }
    w
}

pub fn dense_edges(w: &Dense) -> Vec<(usize, usize, f64)> {
    let n = w.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if w[i][j] != 0.0 {
                out.push((i, j, w[i][j]));
            }
        }
    }
    out
}

fn degree(w: &Dense, i: usize) -> usize {
    w[i].iter().filter(|&&v| v != 0.0).count()
}

/// Floyd–Warshall hop distances; `usize::MAX` when unreachable.
pub fn hop_distances(w: &Dense) -> Vec<Vec<usize>> {
    let n = w.len();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        for j in 0..n {
            if w[i][j] != 0.0 {
                d[i][j] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    for row in &mut d {
        for v in row.iter_mut() {
            if *v >= inf {
                *v = usize::MAX;
            }
        }
    }
    d
}

/// Mean hop distance over pairs in the largest component (ties: the one with
/// the smallest node), or `None` if it has fewer than two nodes.
pub fn characteristic_path_length(w: &Dense) -> Option<f64> {
    let n = w.len();
    let d = hop_distances(w);
    let mut best: Vec<usize> = Vec::new();
    let mut seen = vec![false; n];
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let comp: Vec<usize> = (0..n).filter(|&j| d[i][j] != usize::MAX).collect();
        for &j in &comp {
            seen[j] = true;
        }
        if comp.len() > best.len() {
            best = comp;
        }
    }
    if best.len() < 2 {
        return None;
    }
    let mut sum = 0usize;
    let mut pairs = 0usize;
    for (a, &i) in best.iter().enumerate() {
        for &j in &best[a + 1..] {
            sum += d[i][j];
            pairs += 1;
        }
    }
    Some(sum as f64 / pairs as f64)
}

pub fn clustering_unweighted(w: &Dense, i: usize) -> f64 {
    let n = w.len();
    let k = degree(w, i);
    if k < 2 {
        return 0.0;
    }
    let mut links = 0;
    for j in 0..n {
        for h in j + 1..n {
            if w[i][j] != 0.0 && w[i][h] != 0.0 && w[j][h] != 0.0 {
                links += 1;
            }
        }
    }
    links as f64 / (k * (k - 1) / 2) as f64
}

/// Weighted clustering written term by term over ordered neighbor pairs.
pub fn clustering_weighted(w: &Dense, i: usize) -> f64 {
    let n = w.len();
    let a = |x: usize, y: usize| if w[x][y] != 0.0 { 1.0 } else { 0.0 };
    let k = degree(w, i) as f64;
    let s: f64 = (0..n).map(|j| w[i][j] * a(i, j)).sum();
    if k < 2.0 {
        return 0.0;
    }
    let mut total = 0.0;
    for j in 0..n {
        for h in 0..n {
            if j == h {
                continue;
            }
            total += (w[i][j] + w[i][h]) / 2.0 * a(i, j) * a(i, h) * a(j, h);
        }
    }
    total / (s * (k - 1.0))
}

/// `(1/k_i) Σ_j a_ij w_ij k_j`.
pub fn knn_printed(w: &Dense, i: usize) -> f64 {
    let n = w.len();
    let k = degree(w, i) as f64;
    (0..n)
        .filter(|&j| w[i][j] != 0.0)
        .map(|j| w[i][j] * degree(w, j) as f64)
        .sum::<f64>()
        / k
}

/// `(1/s_i) Σ_j a_ij w_ij k_j`.
pub fn knn_strength(w: &Dense, i: usize) -> f64 {
    let n = w.len();
    let s: f64 = w[i].iter().sum();
    (0..n)
        .filter(|&j| w[i][j] != 0.0)
        .map(|j| w[i][j] * degree(w, j) as f64)
        .sum::<f64>()
        / s
}

/// Every shortest path from `s` to `t` as a node sequence.
pub fn all_shortest_paths(w: &Dense, s: usize, t: usize) -> Vec<Vec<usize>> {
    let d = hop_distances(w);
    if d[s][t] == usize::MAX {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut path = vec![s];
    extend_paths(w, &d, t, &mut path, &mut out);
    out
}

fn extend_paths(w: &Dense, d: &[Vec<usize>], t: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let u = *path.last().expect("nonempty path");
    if u == t {
        out.push(path.clone());
        return;
    }
    for v in 0..w.len() {
        if w[u][v] != 0.0 && d[v][t] != usize::MAX && d[v][t] + 1 == d[u][t] {
            path.push(v);
            extend_paths(w, d, t, path, out);
            path.pop();
        }
    }
}

/// Betweenness over unordered pairs by explicit path enumeration.
pub fn betweenness(w: &Dense) -> Vec<f64> {
    let n = w.len();
    let mut b = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            let paths = all_shortest_paths(w, s, t);
            if paths.is_empty() {
                continue;
            }
            let total = paths.len() as f64;
            for v in 0..n {
                if v == s || v == t {
                    continue;
                }
                let through = paths.iter().filter(|p| p.contains(&v)).count();
                b[v] += through as f64 / total;
            }
        }
    }
    b
}

/// `(1/2m) Σ_ij (A_ij − k_i k_j / 2m) δ(c_i, c_j)` on the 0/1 adjacency.
pub fn modularity(w: &Dense, assignment: &[usize]) -> f64 {
    let n = w.len();
    let k: Vec<f64> = (0..n).map(|i| degree(w, i) as f64).collect();
    let two_m: f64 = k.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if assignment[i] == assignment[j] {
                let a = if w[i][j] != 0.0 { 1.0 } else { 0.0 };
                q += a - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// All set partitions of `0..n` as restricted-growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut a = vec![0usize; n];
    fn rec(a: &mut Vec<usize>, pos: usize, max: usize, out: &mut Vec<Vec<usize>>) {
        if pos == a.len() {
            out.push(a.clone());
            return;
        }
        for c in 0..=max + 1 {
            a[pos] = c;
            rec(a, pos + 1, max.max(c), out);
        }
    }
    rec(&mut a, 1, 0, &mut out);
    out
}

/// Smallest modularity over every partition of the nodes.
pub fn minimum_modularity(w: &Dense) -> (f64, Vec<usize>) {
    let mut best = (f64::INFINITY, Vec::new());
    for p in set_partitions(w.len()) {
        let q = modularity(w, &p);
        if q < best.0 - 1e-15 {
            best = (q, p);
        }
    }
    best
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

fn mask_to_dense(n: usize, mask: u32) -> Dense {
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if mask >> pair_index(n, i, j) & 1 == 1 {
                w[i][j] = 1.0;
                w[j][i] = 1.0;
            }
        }
    }
    w
}

fn canonical_mask(n: usize, mask: u32, perms: &[Vec<usize>]) -> u32 {
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if mask >> pair_index(n, i, j) & 1 == 1 {
                pairs.push((i, j));
            }
        }
    }
    perms
        .iter()
        .map(|p| {
            pairs
                .iter()
                .fold(0u32, |acc, &(i, j)| acc | 1 << pair_index(n, p[i], p[j]))
        })
        .min()
        .unwrap_or(0)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn is_connected(w: &Dense) -> bool {
    let n = w.len();
    if n == 0 {
        return true;
    }
    hop_distances(w)[0].iter().all(|&d| d != usize::MAX)
}

/// One representative of every isomorphism class of connected simple graphs
/// on exactly `n` nodes (1, 1, 2, 6, 21, 112, 853 for n = 1..=7).
pub fn connected_graphs(n: usize) -> Vec<Dense> {
    assert!(n <= 7, "pair masks hold at most 21 node pairs");
    // all graphs up to isomorphism, grown one node at a time
    let mut classes: Vec<u32> = vec![0];
    for size in 2..=n {
        let perms = permutations(size);
        let mut next: Vec<u32> = Vec::new();
        for &prev in &classes {
            // re-index the (size-1)-node mask into a size-node mask
            let mut base = 0u32;
            for i in 0..size - 1 {
                for j in i + 1..size - 1 {
                    if prev >> pair_index(size - 1, i, j) & 1 == 1 {
                        base |= 1 << pair_index(size, i, j);
                    }
                }
            }
            for attach in 0u32..(1 << (size - 1)) {
                let mut mask = base;
                for i in 0..size - 1 {
                    if attach >> i & 1 == 1 {
                        mask |= 1 << pair_index(size, i, size - 1);
                    }
                }
                next.push(canonical_mask(size, mask, &perms));
            }
        }
        next.sort_unstable();
        next.dedup();
        classes = next;
    }
    classes
        .into_iter()
        .map(|m| mask_to_dense(n, m))
        .filter(is_connected)
        .collect()
}
