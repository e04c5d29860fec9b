//! Log-binned densities, least-squares power-law fits, wealth tables and rank
//! correlation.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, log, sqrt};
use thiserror::Error;

use crate::exchange::PlayerId;
use crate::graph::CashFlowNetwork;
use crate::money::Money;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("samples must be positive and finite")]
    NonPositiveSample,
    #[error("first bin edge must be positive and the ratio greater than one")]
    InvalidBinning,
    #[error("need at least {needed} nonempty bins, found {found}")]
    TooFewBins { needed: usize, found: usize },
    #[error("need at least {needed} points, found {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("design matrix is singular")]
    SingularDesign,
    #[error("inputs have different lengths")]
    LengthMismatch,
    #[error("rank correlation undefined for constant input")]
    DegenerateConstantInput,
}

/// Histogram with geometrically growing bins, normalized to a density.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedDensity {
    /// `edges[m]..edges[m + 1]` is bin `m`; `edges.len() == counts.len() + 1`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// `counts[m] / (total * width_m)`.
    pub densities: Vec<f64>,
    /// Geometric mean of each bin's edges.
    pub centers: Vec<f64>,
    /// Number of samples the density is normalized by.
    pub total: usize,
    /// Samples smaller than the first edge (counted in `total`, in no bin).
    pub below_range: usize,
}

impl BinnedDensity {
    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self, m: usize) -> f64 {
        self.edges[m + 1] - self.edges[m]
    }

    /// Σ_m d_m × width_m.
    pub fn covered_mass(&self) -> f64 {
        (0..self.bin_count()).map(|m| self.densities[m] * self.width(m)).sum()
    }

    /// `(center, density)` of nonempty bins whose center lies in `range`.
    pub fn points(&self, range: FitRange) -> Vec<(f64, f64)> {
        (0..self.bin_count())
            .filter(|&m| self.counts[m] > 0 && range.contains(self.centers[m]))
            .map(|m| (self.centers[m], self.densities[m]))
            .collect()
    }
}

/// Bins `samples` into `[e_m, e_m * ratio)` starting at `first_edge`, with as
/// many bins as needed to hold the largest sample.
pub fn log_bin(samples: &[f64], first_edge: f64, ratio: f64) -> Result<BinnedDensity, FitError> {
    if !(first_edge > 0.0 && first_edge.is_finite() && ratio > 1.0 && ratio.is_finite()) {
        return Err(FitError::InvalidBinning);
    }
    if samples.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(FitError::NonPositiveSample);
    }
    let max = samples.iter().copied().fold(0.0_f64, f64::max);
    let mut edges = vec![first_edge];
    while *edges.last().expect("nonempty") <= max {
        let next = edges.last().expect("nonempty") * ratio;
        edges.push(next);
    }
    let bins = edges.len() - 1;
    let mut counts = vec![0usize; bins];
    let mut below_range = 0;
    for &x in samples {
        if x < first_edge {
            below_range += 1;
            continue;
        }
        let m = edges.partition_point(|&e| e <= x) - 1;
        counts[m] += 1;
    }
    let total = samples.len();
    let densities = (0..bins)
        .map(|m| {
            if total == 0 {
                0.0
            } else {
                counts[m] as f64 / (total as f64 * (edges[m + 1] - edges[m]))
            }
        })
        .collect();
    let centers = (0..bins).map(|m| sqrt(edges[m] * edges[m + 1])).collect();
    Ok(BinnedDensity {
        edges,
        counts,
        densities,
        centers,
        total,
        below_range,
    })
}

/// Inclusive bounds on bin centers (or x values) admitted into a fit.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FitRange {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl FitRange {
    pub const ALL: FitRange = FitRange { lo: None, hi: None };

    pub fn new(lo: f64, hi: f64) -> Self {
        FitRange {
            lo: Some(lo),
            hi: Some(hi),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo.is_none_or(|lo| x >= lo) && self.hi.is_none_or(|hi| x <= hi)
    }
}

/// Power-law fit on log-log axes.
///
/// For a density `p(x) ~ x^-γ e^(-x/x_c)` the `exponent` is γ. For a scaling
/// relation `y ~ x^β` it is β.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub exponent: f64,
    pub exponent_stderr: f64,
    /// Fitted coefficient of `-x`, i.e. `1/x_c`; `None` for a pure power law.
    pub inverse_cutoff: Option<f64>,
    pub inverse_cutoff_stderr: Option<f64>,
    /// Natural-log intercept.
    pub intercept: f64,
    pub intercept_stderr: f64,
    pub rss: f64,
    pub n_points: usize,
}

impl FitResult {
    /// `x_c`, infinite when the fitted `1/x_c` is not positive.
    pub fn cutoff(&self) -> Option<f64> {
        self.inverse_cutoff
            .map(|b| if b > 0.0 { 1.0 / b } else { f64::INFINITY })
    }

    /// Delta-method standard error of `x_c`.
    pub fn cutoff_stderr(&self) -> Option<f64> {
        match (self.inverse_cutoff, self.inverse_cutoff_stderr) {
            (Some(b), Some(se)) if b > 0.0 => Some(se / (b * b)),
            (Some(_), Some(_)) => Some(f64::INFINITY),
            _ => None,
        }
    }
}

/// Ordinary least squares solution of `y ≈ X β`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    pub stderr: Vec<f64>,
    pub rss: f64,
}

/// Solves OLS by Householder QR on column-normalized `design` (row-major,
/// `p` columns). Standard errors use `rss / (n − p)`, or zero when `n == p`.
pub fn least_squares(design: &[Vec<f64>], y: &[f64]) -> Result<LeastSquares, FitError> {
    let n = design.len();
    if n != y.len() {
        return Err(FitError::LengthMismatch);
    }
    let p = design.first().map_or(0, Vec::len);
    if n < p || p == 0 {
        return Err(FitError::TooFewPoints { needed: p.max(1), found: n });
    }
    // column-major copy, scaled to unit norm
    let mut cols: Vec<Vec<f64>> = (0..p).map(|j| design.iter().map(|row| row[j]).collect()).collect();
    let mut scale = vec![1.0; p];
    for (j, col) in cols.iter_mut().enumerate() {
        let norm = sqrt(col.iter().map(|v| v * v).sum());
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(FitError::SingularDesign);
        }
        scale[j] = norm;
        col.iter_mut().for_each(|v| *v /= norm);
    }
    let mut rhs = y.to_vec();
    let mut r = vec![vec![0.0; p]; p];
    for k in 0..p {
        let norm = sqrt(cols[k][k..].iter().map(|v| v * v).sum());
        if norm < 1e-12 {
            return Err(FitError::SingularDesign);
        }
        let alpha = if cols[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for col in cols.iter_mut().skip(k) {
                let dot: f64 = v.iter().zip(&col[k..]).map(|(a, b)| a * b).sum();
                let f = 2.0 * dot / vnorm2;
                col[k..].iter_mut().zip(&v).for_each(|(c, vi)| *c -= f * vi);
            }
            let dot: f64 = v.iter().zip(&rhs[k..]).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vnorm2;
            rhs[k..].iter_mut().zip(&v).for_each(|(c, vi)| *c -= f * vi);
        }
        for j in k..p {
            r[k][j] = cols[j][k];
        }
    }
    // back substitution for the scaled coefficients
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|j| r[i][j] * beta[j]).sum();
        beta[i] = (rhs[i] - s) / r[i][i];
    }
    let rss: f64 = rhs[p..].iter().map(|v| v * v).sum();
    // (RᵀR)⁻¹ = R⁻¹R⁻ᵀ
    let mut rinv = vec![vec![0.0; p]; p];
    for i in (0..p).rev() {
        rinv[i][i] = 1.0 / r[i][i];
        for j in i + 1..p {
            let s: f64 = (i + 1..=j).map(|k| r[i][k] * rinv[k][j]).sum();
            rinv[i][j] = -s / r[i][i];
        }
    }
    let sigma2 = if n > p { rss / (n - p) as f64 } else { 0.0 };
    let stderr = (0..p)
        .map(|i| {
            let var: f64 = (i..p).map(|k| rinv[i][k] * rinv[i][k]).sum();
            sqrt(sigma2 * var) / scale[i]
        })
        .collect();
    let coefficients = beta.iter().zip(&scale).map(|(b, s)| b / s).collect();
    Ok(LeastSquares {
        coefficients,
        stderr,
        rss,
    })
}

/// Straight-line fit `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub intercept_stderr: f64,
    pub rss: f64,
    pub n_points: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit, FitError> {
    if x.len() != y.len() {
        return Err(FitError::LengthMismatch);
    }
    if x.len() < 2 {
        return Err(FitError::TooFewPoints { needed: 2, found: x.len() });
    }
    let design: Vec<Vec<f64>> = x.iter().map(|&v| vec![1.0, v]).collect();
    let ls = least_squares(&design, y)?;
    Ok(LineFit {
        slope: ls.coefficients[1],
        slope_stderr: ls.stderr[1],
        intercept: ls.coefficients[0],
        intercept_stderr: ls.stderr[0],
        rss: ls.rss,
        n_points: x.len(),
    })
}

/// `y ~ x^β` fitted on log-log axes; points with non-positive coordinates are skipped.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<FitResult, FitError> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (log(*x), log(*y)))
        .unzip();
    let line = linear_fit(&lx, &ly)?;
    Ok(FitResult {
        exponent: line.slope,
        exponent_stderr: line.slope_stderr,
        inverse_cutoff: None,
        inverse_cutoff_stderr: None,
        intercept: line.intercept,
        intercept_stderr: line.intercept_stderr,
        rss: line.rss,
        n_points: line.n_points,
    })
}

/// OLS of `ln d` against `ln center`; `γ = −slope`.
pub fn fit_power_law(binned: &BinnedDensity, range: FitRange) -> Result<FitResult, FitError> {
    let points = binned.points(range);
    if points.len() < 3 {
        return Err(FitError::TooFewBins { needed: 3, found: points.len() });
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, d)| (log(*x), log(*d))).unzip();
    let line = linear_fit(&lx, &ly)?;
    Ok(FitResult {
        exponent: -line.slope,
        exponent_stderr: line.slope_stderr,
        inverse_cutoff: None,
        inverse_cutoff_stderr: None,
        intercept: line.intercept,
        intercept_stderr: line.intercept_stderr,
        rss: line.rss,
        n_points: points.len(),
    })
}

/// OLS of `ln d = c − γ ln x − x / x_c`, linear in `(c, γ, 1/x_c)`.
pub fn fit_power_law_cutoff(binned: &BinnedDensity, range: FitRange) -> Result<FitResult, FitError> {
    let points = binned.points(range);
    fit_cutoff_points(&points)
}

/// Cutoff fit on raw `(x, density)` points.
pub fn fit_cutoff_points(points: &[(f64, f64)]) -> Result<FitResult, FitError> {
    if points.len() < 4 {
        return Err(FitError::TooFewBins { needed: 4, found: points.len() });
    }
    let design: Vec<Vec<f64>> = points.iter().map(|(x, _)| vec![1.0, log(*x), *x]).collect();
    let y: Vec<f64> = points.iter().map(|(_, d)| log(*d)).collect();
    let ls = least_squares(&design, &y)?;
    Ok(FitResult {
        exponent: -ls.coefficients[1],
        exponent_stderr: ls.stderr[1],
        inverse_cutoff: Some(-ls.coefficients[2]),
        inverse_cutoff_stderr: Some(ls.stderr[2]),
        intercept: ls.coefficients[0],
        intercept_stderr: ls.stderr[0],
        rss: ls.rss,
        n_points: points.len(),
    })
}

/// Evaluates `exp(c) x^-γ e^(-x/x_c)` for a density fit.
pub fn fitted_density(fit: &FitResult, x: f64) -> f64 {
    exp(fit.intercept - fit.exponent * log(x) - fit.inverse_cutoff.unwrap_or(0.0) * x)
}

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, FitError> {
    if x.len() != y.len() {
        return Err(FitError::LengthMismatch);
    }
    if x.len() < 2 {
        return Err(FitError::TooFewPoints { needed: 2, found: x.len() });
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(FitError::DegenerateConstantInput);
    }
    Ok((sxy / sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WealthRow {
    pub player: PlayerId,
    pub income: Money,
    pub spending: Money,
    pub net: Money,
    pub traded: Money,
}

/// Per-player income (Σ in-weights) and spending (Σ out-weights), in node order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WealthTable {
    pub rows: Vec<WealthRow>,
}

impl WealthTable {
    pub fn total_net(&self) -> Money {
        self.rows.iter().map(|r| r.net).sum()
    }

    /// Positive net incomes.
    pub fn earnings(&self) -> Vec<f64> {
        self.rows.iter().filter(|r| r.net.is_positive()).map(|r| r.net.to_f64()).collect()
    }

    /// Absolute values of negative net incomes.
    pub fn losses(&self) -> Vec<f64> {
        self.rows.iter().filter(|r| r.net.is_negative()).map(|r| r.net.abs().to_f64()).collect()
    }

    pub fn incomes(&self) -> Vec<f64> {
        self.rows.iter().filter(|r| r.income.is_positive()).map(|r| r.income.to_f64()).collect()
    }

    pub fn spendings(&self) -> Vec<f64> {
        self.rows.iter().filter(|r| r.spending.is_positive()).map(|r| r.spending.to_f64()).collect()
    }
}

pub fn wealth_table(network: &CashFlowNetwork) -> WealthTable {
    let rows = (0..network.node_count())
        .map(|i| {
            let income = network.income(i);
            let spending = network.spending(i);
            WealthRow {
                player: network.nodes()[i],
                income,
                spending,
                net: income - spending,
                traded: income + spending,
            }
        })
        .collect();
    WealthTable { rows }
}

/// Mean of a per-node quantity within each degree class.
pub fn mean_by_class(values: &[f64], classes: &[usize]) -> BTreeMap<usize, f64> {
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for (v, k) in values.iter().zip(classes) {
        let e = acc.entry(*k).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, c))| (k, s / c as f64)).collect()
}

/// Degree-class averages of income, spending and traded amount and their
/// log-log fits against k_in, k_out and undirected k.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthScaling {
    pub income_by_k_in: BTreeMap<usize, f64>,
    pub spending_by_k_out: BTreeMap<usize, f64>,
    pub traded_by_k: BTreeMap<usize, f64>,
    pub income_fit: Result<FitResult, FitError>,
    pub spending_fit: Result<FitResult, FitError>,
    pub traded_fit: Result<FitResult, FitError>,
}

fn scaling_of(by_class: &BTreeMap<usize, f64>) -> Result<FitResult, FitError> {
    let points: Vec<(f64, f64)> = by_class.iter().map(|(k, v)| (*k as f64, *v)).collect();
    fit_scaling(&points)
}

/// Classes with degree 0 are left out of the averages.
pub fn degree_wealth_scaling(network: &CashFlowNetwork, wealth: &WealthTable) -> WealthScaling {
    let d = network.degrees();
    let pick = |degrees: &[usize], value: fn(&WealthRow) -> Money| {
        let (vals, ks): (Vec<f64>, Vec<usize>) = wealth
            .rows
            .iter()
            .zip(degrees)
            .filter(|(_, k)| **k > 0)
            .map(|(r, k)| (value(r).to_f64(), *k))
            .unzip();
        mean_by_class(&vals, &ks)
    };
    let income_by_k_in = pick(&d.k_in, |r| r.income);
    let spending_by_k_out = pick(&d.k_out, |r| r.spending);
    let traded_by_k = pick(&d.k, |r| r.traded);
    WealthScaling {
        income_fit: scaling_of(&income_by_k_in),
        spending_fit: scaling_of(&spending_by_k_out),
        traded_fit: scaling_of(&traded_by_k),
        income_by_k_in,
        spending_by_k_out,
        traded_by_k,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankRow {
    pub rank: usize,
    pub player: PlayerId,
    pub net: Money,
    pub k: usize,
    pub top_ten: bool,
    pub bottom_ten: bool,
}

/// Players by net income, highest first (ties to the lower id), with their
/// undirected degree.
pub fn degree_vs_rank(network: &CashFlowNetwork, wealth: &WealthTable) -> Vec<RankRow> {
    let k = network.degrees().k;
    let mut rows: Vec<(PlayerId, Money, usize)> = wealth
        .rows
        .iter()
        .zip(&k)
        .map(|(r, k)| (r.player, r.net, *k))
        .collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let n = rows.len();
    rows.into_iter()
        .enumerate()
        .map(|(i, (player, net, k))| RankRow {
            rank: i + 1,
            player,
            net,
            k,
            top_ten: i < 10,
            bottom_ten: i + 10 >= n,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles;
    use proptest::prelude::*;

    #[test]
    fn log_bin_direct_arithmetic() {
        let b = log_bin(&[1.0, 1.0, 2.0, 3.0], 1.0, 2.0).unwrap();
        assert_eq!(b.edges, vec![1.0, 2.0, 4.0]);
        assert_eq!(b.densities, vec![0.5, 0.25]);
        assert_eq!(b.centers[0], core::f64::consts::SQRT_2);
        assert!((b.covered_mass() - 1.0).abs() < 1e-15);

        let single = log_bin(&[5.0], 1.0, 2.0).unwrap();
        assert_eq!(single.densities, vec![0.0, 0.0, 0.25]);
        assert_eq!(single.edges[2..], [4.0, 8.0]);
    }

    #[test]
    fn log_bin_rejects_bad_input() {
        assert_eq!(log_bin(&[1.0, 0.0], 1.0, 2.0), Err(FitError::NonPositiveSample));
        assert_eq!(log_bin(&[1.0, -3.0], 1.0, 2.0), Err(FitError::NonPositiveSample));
        assert_eq!(log_bin(&[1.0], 0.0, 2.0), Err(FitError::InvalidBinning));
        assert_eq!(log_bin(&[1.0], 1.0, 1.0), Err(FitError::InvalidBinning));
    }

    #[test]
    fn samples_below_first_edge_reduce_covered_mass() {
        let b = log_bin(&[0.5, 1.0, 3.0, 3.5], 1.0, 2.0).unwrap();
        assert_eq!(b.below_range, 1);
        assert!((b.covered_mass() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn inverse_k_samples_give_flat_times_inverse_density() {
        // p(k) = 1 / (k ln 1024) on [1, 1024]
        let samples = oracles::sample_power_law(100_000, 1.0, 1.0, 1024.0, 7);
        let b = log_bin(&samples, 1.0, 2.0).unwrap();
        assert_eq!(b.bin_count(), 10);
        let norm = log(1024.0);
        for m in 0..b.bin_count() {
            // exact bin average of 1/(k ln 1024) over [e, 2e] is ln 2 / (e ln 1024)
            let expected = core::f64::consts::LN_2 / (b.edges[m] * norm);
            let p = 0.1;
            let sd = sqrt(p * (1.0 - p) / 100_000.0) / b.width(m);
            assert!((b.densities[m] - expected).abs() < 5.0 * sd, "bin {m}");
        }
        let fit = fit_power_law(&b, FitRange::ALL).unwrap();
        assert!((fit.exponent - 1.0).abs() < 0.02);
    }

    #[test]
    fn power_law_fit_on_exact_densities() {
        let b = synthetic_bins(|x| x.powf(-2.0), 12);
        let fit = fit_power_law(&b, FitRange::ALL).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-12);
        assert!(fit.exponent_stderr < 1e-10);

        let flat = synthetic_bins(|_| 0.3, 8);
        assert!(fit_power_law(&flat, FitRange::ALL).unwrap().exponent.abs() < 1e-12);
    }

    #[test]
    fn power_law_needs_three_bins() {
        let b = synthetic_bins(|x| 1.0 / x, 2);
        assert_eq!(
            fit_power_law(&b, FitRange::ALL),
            Err(FitError::TooFewBins { needed: 3, found: 2 })
        );
        let b = synthetic_bins(|x| 1.0 / x, 3);
        assert_eq!(
            fit_power_law_cutoff(&b, FitRange::ALL),
            Err(FitError::TooFewBins { needed: 4, found: 3 })
        );
    }

    #[test]
    fn fit_range_selects_bins() {
        let b = synthetic_bins(|x| if x < 20.0 { x.powf(-1.0) } else { x.powf(-3.0) }, 12);
        let fit = fit_power_law(&b, FitRange::new(0.0, 20.0)).unwrap();
        assert!((fit.exponent - 1.0).abs() < 1e-12);
        assert_eq!(fit.n_points, 4);
    }

    #[test]
    fn cutoff_fit_recovers_noiseless_parameters() {
        let b = synthetic_bins(|x| 3.0 * x.powf(-1.02) * (-x / 30.0).exp(), 10);
        let fit = fit_power_law_cutoff(&b, FitRange::ALL).unwrap();
        assert!((fit.exponent - 1.02).abs() < 1e-9);
        assert!((fit.cutoff().unwrap() - 30.0).abs() < 1e-6);
        assert!((fit.intercept - log(3.0)).abs() < 1e-9);

        let pure = synthetic_bins(|x| x.powf(-1.5), 10);
        let fit = fit_power_law_cutoff(&pure, FitRange::ALL).unwrap();
        assert!(fit.inverse_cutoff.unwrap().abs() < 1e-12);
        let plain = fit_power_law(&pure, FitRange::ALL).unwrap();
        assert!((fit.exponent - plain.exponent).abs() < 1e-9);
    }

    #[test]
    fn non_positive_inverse_cutoff_means_infinite_cutoff() {
        let b = synthetic_bins(|x| x.powf(-1.0) * (x / 500.0).exp(), 10);
        let fit = fit_power_law_cutoff(&b, FitRange::ALL).unwrap();
        assert!(fit.inverse_cutoff.unwrap() < 0.0);
        assert_eq!(fit.cutoff(), Some(f64::INFINITY));
    }

    #[test]
    fn collinear_design_is_singular() {
        let design = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        assert_eq!(least_squares(&design, &[1.0, 2.0, 3.0]), Err(FitError::SingularDesign));
    }

    #[test]
    fn line_fit_stderr_matches_textbook_formula() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [1.1, 1.9, 3.2, 3.9, 5.3];
        let fit = linear_fit(&x, &y).unwrap();
        let n = 5.0;
        let mx = 3.0;
        let my = y.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let rss: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        let se = (rss / (n - 2.0) / sxx).sqrt();
        assert!((fit.slope - slope).abs() < 1e-12);
        assert!((fit.intercept - intercept).abs() < 1e-12);
        assert!((fit.slope_stderr - se).abs() < 1e-12);
        assert!((fit.rss - rss).abs() < 1e-12);
    }

    #[test]
    fn pareto_sample_recovers_exponent() {
        let samples = oracles::sample_power_law(100_000, 1.19, 1.0, 1e6, 11);
        let b = log_bin(&samples, 1.0, 2.0).unwrap();
        let fit = fit_power_law(&b, FitRange::ALL).unwrap();
        assert!((fit.exponent - 1.19).abs() < 0.1, "{fit:?}");
    }

    #[test]
    fn spearman_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman(&x, &x).unwrap(), 1.0);
        assert_eq!(spearman(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        // ranks: x → 1, 2.5, 2.5, 4 ; y → 4, 1.5, 1.5, 3
        // deviations: (-1.5, 0, 0, 1.5) and (1.5, -1, -1, 0.5)
        // Σxy = -2.25 + 0.75 = -1.5, Σxx = 4.5, Σyy = 2.25 + 1 + 1 + 0.25 = 4.5
        let r = spearman(&[1.0, 2.0, 2.0, 4.0], &[3.0, 1.0, 1.0, 2.0]).unwrap();
        assert!((r - (-1.5 / 4.5)).abs() < 1e-15);
        assert_eq!(spearman(&x, &[1.0; 4]), Err(FitError::DegenerateConstantInput));
        assert_eq!(spearman(&x, &[1.0; 3]), Err(FitError::LengthMismatch));
        assert_eq!(spearman(&[1.0], &[1.0]), Err(FitError::TooFewPoints { needed: 2, found: 1 }));
    }

    fn net(edges: &[(u32, u32, i64)], n: u32) -> CashFlowNetwork {
        let e: Vec<_> = edges
            .iter()
            .map(|&(i, j, w)| (PlayerId(i), PlayerId(j), Money::from_units(w)))
            .collect();
        CashFlowNetwork::from_edges((0..n).map(PlayerId), &e).unwrap()
    }

    #[test]
    fn wealth_table_single_edge() {
        let t = wealth_table(&net(&[(0, 1, 480)], 3));
        assert_eq!(t.rows[0].spending, Money::from_units(480));
        assert_eq!(t.rows[0].net, Money::from_units(-480));
        assert_eq!(t.rows[1].income, Money::from_units(480));
        assert_eq!(t.rows[1].net, Money::from_units(480));
        assert_eq!(t.rows[2].traded, Money::ZERO);
        assert_eq!(t.total_net(), Money::ZERO);
        assert_eq!(t.earnings(), vec![480.0]);
        assert_eq!(t.losses(), vec![480.0]);
    }

    #[test]
    fn star_wealth_scaling_by_hand() {
        // hub 0 sells to leaves 1..=4 with amounts 10, 20, 30, 40; leaf 5 sells 50 to hub
        let network = net(&[(1, 0, 10), (2, 0, 20), (3, 0, 30), (4, 0, 40), (0, 5, 50)], 6);
        let s = degree_wealth_scaling(&network, &wealth_table(&network));
        // k_in: hub 4 (income 100), leaf 5 has k_in 1 (income 50)
        assert_eq!(s.income_by_k_in, BTreeMap::from([(1, 50.0), (4, 100.0)]));
        // k_out: leaves 1..4 each 1 with spendings 10..40 → mean 25; hub k_out 1 spends 50
        assert_eq!(s.spending_by_k_out, BTreeMap::from([(1, (10.0 + 20.0 + 30.0 + 40.0 + 50.0) / 5.0)]));
        // k: hub 5 traded 150; leaves k 1 traded 10..50 → mean 30
        assert_eq!(s.traded_by_k, BTreeMap::from([(1, 30.0), (5, 150.0)]));
        let fit = s.income_fit.unwrap();
        assert!((fit.exponent - log(2.0) / log(4.0)).abs() < 1e-12);
        assert!(s.spending_fit.is_err());
    }

    #[test]
    fn scaling_fit_exact_power() {
        let points: Vec<(f64, f64)> = (1..20).map(|k| (k as f64, (k as f64).powf(1.26))).collect();
        let fit = fit_scaling(&points).unwrap();
        assert!((fit.exponent - 1.26).abs() < 1e-12);
    }

    #[test]
    fn degree_vs_rank_orders_by_net() {
        let network = net(&[(0, 1, 5), (2, 1, 5), (0, 2, 1)], 3);
        let rows = degree_vs_rank(&network, &wealth_table(&network));
        let order: Vec<u32> = rows.iter().map(|r| r.player.0).collect();
        // nets: 0 → -6, 1 → +10, 2 → -4
        assert_eq!(order, vec![1, 2, 0]);
        assert_eq!(rows[0].k, 2);
        assert!(rows.iter().all(|r| r.top_ten && r.bottom_ten));

        let tied = net(&[(0, 1, 5), (2, 3, 5)], 4);
        let order: Vec<u32> = degree_vs_rank(&tied, &wealth_table(&tied)).iter().map(|r| r.player.0).collect();
        assert_eq!(order, vec![1, 3, 0, 2]);
    }

    fn synthetic_bins(f: impl Fn(f64) -> f64, bins: usize) -> BinnedDensity {
        let edges: Vec<f64> = (0..=bins).map(|m| 2f64.powi(m as i32)).collect();
        let centers: Vec<f64> = (0..bins).map(|m| sqrt(edges[m] * edges[m + 1])).collect();
        BinnedDensity {
            densities: centers.iter().map(|&c| f(c)).collect(),
            counts: vec![1; bins],
            centers,
            edges,
            total: bins,
            below_range: 0,
        }
    }

    proptest! {
        #[test]
        fn spearman_self_and_reversed(values in proptest::collection::btree_set(-1_000_000i64..1_000_000, 2..40)) {
            let x: Vec<f64> = values.iter().map(|v| *v as f64).collect();
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            prop_assert_eq!(spearman(&x, &x).unwrap(), 1.0);
            prop_assert_eq!(spearman(&x, &neg).unwrap(), -1.0);
        }

        #[test]
        fn fit_exponent_invariant_under_rescaling(seed in 0u64..1000, scale in 0.01f64..1000.0) {
            let samples = oracles::sample_power_law(2_000, 1.5, 1.0, 1e4, seed);
            let scaled: Vec<f64> = samples.iter().map(|x| x * scale).collect();
            let a = fit_power_law(&log_bin(&samples, 1.0, 2.0).unwrap(), FitRange::ALL).unwrap();
            let b = fit_power_law(&log_bin(&scaled, scale, 2.0).unwrap(), FitRange::ALL).unwrap();
            prop_assert!((a.exponent - b.exponent).abs() < 1e-9);
        }

        #[test]
        fn binned_mass_is_one_when_bins_cover_samples(samples in proptest::collection::vec(1.0f64..1e6, 1..200)) {
            let b = log_bin(&samples, 1.0, 2.0).unwrap();
            prop_assert!((b.covered_mass() - 1.0).abs() < 1e-12);
            prop_assert_eq!(b.counts.iter().sum::<usize>(), samples.len());
        }
    }
}
