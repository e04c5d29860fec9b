//! Per-day network tables and whole-run market tables.

use std::path::{Path, PathBuf};

use cashflow_core::community::{partition_anticommunities, size_density, Partition};
use cashflow_core::graph::PruneReport;
use cashflow_core::metrics::{betweenness_degree_fit, MetricsReport};
use cashflow_core::statfit::{
    degree_vs_rank, degree_wealth_scaling, fit_power_law, fit_power_law_cutoff, log_bin, spearman, wealth_table,
    BinnedDensity, FitError, FitRange, FitResult, LineFit, RankRow, WealthScaling, WealthTable,
};
use cashflow_core::timeseries::{
    activity_fraction, bucket_minutes, inter_transaction_intervals, price_sum_series, IntervalAnalysis, MinuteSeries,
};
use cashflow_core::{CashFlowNetwork, ContractId, Ledger, LedgerRecord, PlayerId, UndirectedGraph};
use serde_json::{json, Map, Value};

use crate::formats::{write_csv, write_density, write_json, write_snapshot};
use crate::LabError;

pub fn day_dir(out: &Path, day: u32) -> PathBuf {
    out.join("days").join(format!("day_{day:02}"))
}

pub fn fit_json(fit: &Result<FitResult, FitError>) -> Value {
    match fit {
        Ok(f) => {
            let mut m = Map::new();
            m.insert("exponent".into(), json!(f.exponent));
            m.insert("exponent_stderr".into(), json!(f.exponent_stderr));
            if f.inverse_cutoff.is_some() {
                m.insert("inverse_cutoff".into(), json!(f.inverse_cutoff));
                m.insert("inverse_cutoff_stderr".into(), json!(f.inverse_cutoff_stderr));
                // infinite cutoffs serialize as null
                m.insert("cutoff".into(), json!(f.cutoff()));
                m.insert("cutoff_stderr".into(), json!(f.cutoff_stderr()));
            }
            m.insert("intercept".into(), json!(f.intercept));
            m.insert("intercept_stderr".into(), json!(f.intercept_stderr));
            m.insert("rss".into(), json!(f.rss));
            m.insert("n_points".into(), json!(f.n_points));
            Value::Object(m)
        }
        Err(e) => json!({ "exponent": null, "error": e.to_string() }),
    }
}

pub fn line_json(fit: &LineFit) -> Value {
    json!({
        "slope": fit.slope,
        "slope_stderr": fit.slope_stderr,
        "intercept": fit.intercept,
        "intercept_stderr": fit.intercept_stderr,
        "rss": fit.rss,
        "n_points": fit.n_points,
    })
}

fn range_json(range: FitRange) -> Value {
    json!({ "lo": range.lo, "hi": range.hi })
}

/// Largest power of two not above `x`, for the first edge of a log binning.
fn first_edge(samples: &[f64]) -> f64 {
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    if min.is_finite() && min > 0.0 {
        2f64.powi(min.log2().floor() as i32)
    } else {
        1.0
    }
}

fn binned(samples: &[f64], edge: f64) -> BinnedDensity {
    log_bin(samples, edge, 2.0).expect("samples are positive")
}

/// Everything computed for one day's cumulative network.
#[derive(Debug, Clone)]
pub struct DayAnalysis {
    pub day: u32,
    pub network: CashFlowNetwork,
    pub prune: PruneReport,
    pub active: CashFlowNetwork,
    pub graph: UndirectedGraph,
    pub metrics: MetricsReport,
    pub wealth: WealthTable,
    pub scaling: WealthScaling,
    pub ranking: Vec<RankRow>,
    pub degree_density: BinnedDensity,
    pub weight_density: BinnedDensity,
    pub earnings_density: BinnedDensity,
    pub losses_density: BinnedDensity,
    pub degree_fit: Result<FitResult, FitError>,
    pub weight_fit: Result<FitResult, FitError>,
    pub earnings_fit: Result<FitResult, FitError>,
    pub losses_fit: Result<FitResult, FitError>,
    pub betweenness_fit: Result<FitResult, FitError>,
    pub k_in_k_out_spearman: Result<f64, FitError>,
    pub partition: Partition,
}

pub fn analyze_day(ledger: &Ledger, registrants: &[PlayerId], day: u32, range: FitRange) -> Result<DayAnalysis, LabError> {
    let snapshot = ledger.snapshot(day)?;
    let network = CashFlowNetwork::build(&snapshot, registrants.iter().copied());
    let (active, prune) = network.prune_isolated();
    let graph = active.symmetrized();
    let metrics = MetricsReport::compute(&graph);
    let wealth = wealth_table(&network);
    let active_wealth = wealth_table(&active);
    let scaling = degree_wealth_scaling(&active, &active_wealth);
    let ranking = degree_vs_rank(&network, &wealth);

    let degrees = active.degrees();
    let k: Vec<f64> = degrees.k.iter().map(|&k| k as f64).collect();
    let degree_density = binned(&k, 1.0);
    let weights: Vec<f64> = active.edges().map(|(_, _, w)| w.to_f64()).collect();
    let weight_density = binned(&weights, first_edge(&weights));
    let earnings = wealth.earnings();
    let earnings_density = binned(&earnings, first_edge(&earnings));
    let losses = wealth.losses();
    let losses_density = binned(&losses, first_edge(&losses));

    let k_in: Vec<f64> = degrees.k_in.iter().map(|&k| k as f64).collect();
    let k_out: Vec<f64> = degrees.k_out.iter().map(|&k| k as f64).collect();

    Ok(DayAnalysis {
        day,
        degree_fit: fit_power_law_cutoff(&degree_density, range),
        weight_fit: fit_power_law(&weight_density, range),
        earnings_fit: fit_power_law(&earnings_density, range),
        losses_fit: fit_power_law(&losses_density, range),
        betweenness_fit: betweenness_degree_fit(&metrics),
        k_in_k_out_spearman: spearman(&k_in, &k_out),
        partition: partition_anticommunities(&graph),
        network,
        prune,
        active,
        graph,
        metrics,
        wealth,
        scaling,
        ranking,
        degree_density,
        weight_density,
        earnings_density,
        losses_density,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

impl DayAnalysis {
    pub fn summary(&self, range: FitRange) -> Value {
        let path = self.metrics.path_length.as_ref().map(|p| {
            json!({
                "mean": p.mean,
                "component_count": p.component_count,
                "largest_component": p.largest_component,
                "coverage": p.coverage,
            })
        });
        let n_active = self.active.node_count();
        let mean_degree = self.active.mean_degree();
        let random_path = (n_active > 1 && mean_degree > 1.0)
            .then(|| (n_active as f64).ln() / mean_degree.ln());
        let random_clustering = (n_active > 0).then(|| mean_degree / n_active as f64);
        json!({
            "day": self.day,
            "nodes": self.network.node_count(),
            "active_nodes": n_active,
            "isolated_nodes": self.prune.removed.len(),
            "isolated_fraction": self.prune.isolated_fraction(),
            "directed_edges": self.active.edge_count(),
            "undirected_edges": self.graph.edge_count(),
            "mean_degree": mean_degree,
            "path_length": path,
            "mean_clustering_unweighted": self.metrics.mean_clustering_unweighted,
            "mean_clustering_weighted": self.metrics.mean_clustering_weighted,
            "random_graph_path_length": random_path,
            "random_graph_clustering": random_clustering,
            "k_in_k_out_spearman": self.k_in_k_out_spearman.as_ref().ok(),
            "total_net": self.wealth.total_net().to_string(),
            "fit_range": range_json(range),
            "fits": {
                "degree_distribution": fit_json(&self.degree_fit),
                "weight_distribution": fit_json(&self.weight_fit),
                "earnings_distribution": fit_json(&self.earnings_fit),
                "losses_distribution": fit_json(&self.losses_fit),
                "betweenness_vs_degree": fit_json(&self.betweenness_fit),
                "income_vs_in_degree": fit_json(&self.scaling.income_fit),
                "spending_vs_out_degree": fit_json(&self.scaling.spending_fit),
                "traded_vs_degree": fit_json(&self.scaling.traded_fit),
            },
        })
    }

    pub fn partition_summary(&self) -> Value {
        partition_json(&self.partition, self.graph.node_count(), self.graph.edge_count())
    }

    /// Writes every table of the day into `dir`.
    pub fn write(&self, dir: &Path, ledger: &Ledger, range: FitRange) -> Result<(), LabError> {
        write_snapshot(&dir.join("snapshot.csv"), &ledger.snapshot(self.day)?)?;
        self.write_nodes(&dir.join("nodes.csv"))?;
        self.write_by_degree(&dir.join("by_degree.csv"))?;
        write_density(&dir.join("degree_density.csv"), &self.degree_density)?;
        write_density(&dir.join("weight_density.csv"), &self.weight_density)?;
        write_density(&dir.join("earnings_density.csv"), &self.earnings_density)?;
        write_density(&dir.join("losses_density.csv"), &self.losses_density)?;
        write_csv(
            &dir.join("rank.csv"),
            &["rank", "player", "net", "k", "top_ten", "bottom_ten"],
            self.ranking.iter().map(|r| {
                [
                    r.rank.to_string(),
                    r.player.0.to_string(),
                    r.net.to_string(),
                    r.k.to_string(),
                    r.top_ten.to_string(),
                    r.bottom_ten.to_string(),
                ]
            }),
        )?;
        write_partition(dir, &self.partition, self.active.nodes(), &self.partition_summary())?;
        write_json(&dir.join("summary.json"), &self.summary(range))
    }

    fn write_nodes(&self, path: &Path) -> Result<(), LabError> {
        let d = self.network.degrees();
        let mut rows: Vec<[String; 3]> = Vec::new();
        for (i, row) in self.wealth.rows.iter().enumerate() {
            let p = row.player.0.to_string();
            rows.push([p.clone(), "k_in".into(), d.k_in[i].to_string()]);
            rows.push([p.clone(), "k_out".into(), d.k_out[i].to_string()]);
            rows.push([p.clone(), "k".into(), d.k[i].to_string()]);
            rows.push([p.clone(), "income".into(), row.income.to_string()]);
            rows.push([p.clone(), "spending".into(), row.spending.to_string()]);
            rows.push([p.clone(), "net".into(), row.net.to_string()]);
            if let Some(a) = self.active.index_of(row.player) {
                let m = &self.metrics;
                rows.push([p.clone(), "strength".into(), m.strength[a].to_string()]);
                rows.push([p.clone(), "clustering_unweighted".into(), m.clustering_unweighted[a].to_string()]);
                rows.push([p.clone(), "clustering_weighted".into(), m.clustering_weighted[a].to_string()]);
                rows.push([p.clone(), "knn".into(), opt(m.knn[a])]);
                rows.push([p.clone(), "knn_strength".into(), opt(m.knn_strength[a])]);
                rows.push([p.clone(), "knn_unweighted".into(), opt(m.knn_unweighted[a])]);
                rows.push([p.clone(), "betweenness".into(), m.betweenness[a].to_string()]);
                rows.push([p, "community".into(), self.partition.assignment[a].to_string()]);
            }
        }
        write_csv(path, &["node", "metric", "value"], rows)
    }

    fn write_by_degree(&self, path: &Path) -> Result<(), LabError> {
        let m = &self.metrics;
        let s = &self.scaling;
        let tables = [
            ("c_unweighted", &m.c_unweighted_by_k),
            ("c_weighted", &m.c_weighted_by_k),
            ("knn", &m.knn_by_k),
            ("knn_strength", &m.knn_strength_by_k),
            ("knn_unweighted", &m.knn_unweighted_by_k),
            ("betweenness", &m.betweenness_by_k),
            ("income_by_k_in", &s.income_by_k_in),
            ("spending_by_k_out", &s.spending_by_k_out),
            ("traded_by_k", &s.traded_by_k),
        ];
        let rows = tables
            .iter()
            .flat_map(|(name, t)| t.iter().map(move |(k, v)| [k.to_string(), name.to_string(), v.to_string()]));
        write_csv(path, &["k", "metric", "mean"], rows)
    }
}

pub fn partition_json(p: &Partition, nodes: usize, edges: usize) -> Value {
    json!({
        "nodes": nodes,
        "edges": edges,
        "modularity": p.modularity,
        "n_communities": p.n_communities,
        "sizes": p.sizes,
    })
}

/// `partition.csv`, `partition.json` and `community_sizes.csv` in `dir`.
pub fn write_partition(dir: &Path, p: &Partition, nodes: &[PlayerId], summary: &Value) -> Result<(), LabError> {
    write_csv(
        &dir.join("partition.csv"),
        &["node", "community"],
        nodes
            .iter()
            .zip(&p.assignment)
            .map(|(n, c)| [n.0.to_string(), c.to_string()]),
    )?;
    write_density(&dir.join("community_sizes.csv"), &size_density(p))?;
    write_json(&dir.join("partition.json"), summary)
}

/// Whole-run minute series and inter-transaction intervals.
#[derive(Debug, Clone)]
pub struct MarketAnalysis {
    pub series: MinuteSeries,
    pub intervals: IntervalAnalysis,
    pub activity: f64,
}

pub fn analyze_market(records: &[LedgerRecord], contracts: &[ContractId], duration_days: u32, range: FitRange) -> MarketAnalysis {
    let span = u64::from(duration_days) * 1440;
    let series = bucket_minutes(records, contracts, Some(span));
    MarketAnalysis {
        activity: activity_fraction(&series),
        intervals: inter_transaction_intervals(records, range),
        series,
    }
}

impl MarketAnalysis {
    pub fn write(&self, out: &Path, range: FitRange) -> Result<(), LabError> {
        write_csv(
            &out.join("series.csv"),
            &["minute", "contract", "price", "volume"],
            self.series
                .buckets
                .iter()
                .map(|((m, c), b)| [m.to_string(), c.0.to_string(), b.mean_price.to_string(), b.volume.to_string()]),
        )?;
        write_csv(
            &out.join("price_sum.csv"),
            &["minute", "sum"],
            price_sum_series(&self.series)
                .into_iter()
                .enumerate()
                .filter_map(|(m, s)| s.map(|s| [m.to_string(), s.to_string()])),
        )?;
        write_density(&out.join("intervals_density.csv"), &self.intervals.binned)?;
        let transactions: usize = self.series.buckets.values().map(|b| b.trades as usize).sum();
        write_json(
            &out.join("market.json"),
            &json!({
                "transactions": transactions,
                "minutes": self.series.span,
                "active_minutes": self.series.active_minutes(),
                "activity_fraction": self.activity,
                "intervals": self.intervals.intervals.len(),
                "dropped_zero_intervals": self.intervals.dropped_zero,
                "fit_range": range_json(range),
                "interval_fit": fit_json(&self.intervals.fit),
            }),
        )
    }
}
