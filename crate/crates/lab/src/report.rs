//! Consolidated `report.json`, rebuilt only from files an analysis wrote.

use std::fs;
use std::path::Path;

use cashflow_core::community::count_regression;
use cashflow_core::statfit::{fit_power_law, log_bin, FitRange};
use serde_json::{json, Map, Value};

use crate::analysis::{fit_json, line_json};
use crate::formats::{read_json, write_json};
use crate::LabError;

/// Fitted quantities every report carries, whether or not the fit succeeded.
pub const EXPONENT_KEYS: [&str; 10] = [
    "degree_distribution",
    "weight_distribution",
    "earnings_distribution",
    "losses_distribution",
    "income_vs_in_degree",
    "spending_vs_out_degree",
    "traded_vs_degree",
    "betweenness_vs_degree",
    "community_sizes",
    "inter_transaction_intervals",
];

fn day_dirs(out: &Path) -> Result<Vec<(u32, std::path::PathBuf)>, LabError> {
    let days = out.join("days");
    let mut dirs = Vec::new();
    let entries = fs::read_dir(&days).map_err(|e| LabError::io(&days, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| LabError::io(&days, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(day) = name.strip_prefix("day_").and_then(|d| d.parse::<u32>().ok()) {
            dirs.push((day, entry.path()));
        }
    }
    dirs.sort();
    Ok(dirs)
}

fn fit_range_of(v: &Value) -> FitRange {
    let r = &v["fit_range"];
    FitRange {
        lo: r["lo"].as_f64(),
        hi: r["hi"].as_f64(),
    }
}

pub fn build_report(out: &Path) -> Result<Value, LabError> {
    let dirs = day_dirs(out)?;
    let Some((last_day, last_dir)) = dirs.last().cloned() else {
        return Err(LabError::Format(format!("{}: no analyzed days", out.display())));
    };
    let last = read_json(&last_dir.join("summary.json"))?;
    let range = fit_range_of(&last);

    let mut per_day = Vec::new();
    let mut counts = Vec::new();
    let mut final_partition = Value::Null;
    for (day, dir) in &dirs {
        let summary = read_json(&dir.join("summary.json"))?;
        let partition = read_json(&dir.join("partition.json"))?;
        let n = partition["nodes"].as_u64().unwrap_or(0) as usize;
        let c = partition["n_communities"].as_u64().unwrap_or(0) as f64;
        if n > 0 {
            counts.push((n, c));
        }
        per_day.push(json!({
            "day": day,
            "active_nodes": summary["active_nodes"],
            "isolated_fraction": summary["isolated_fraction"],
            "mean_degree": summary["mean_degree"],
            "path_length": summary["path_length"]["mean"],
            "mean_clustering_unweighted": summary["mean_clustering_unweighted"],
            "mean_clustering_weighted": summary["mean_clustering_weighted"],
            "communities": partition["n_communities"],
            "modularity": partition["modularity"],
        }));
        if *day == last_day {
            final_partition = partition;
        }
    }

    let sizes: Vec<f64> = final_partition["sizes"]
        .as_array()
        .map(|a| a.iter().filter_map(Value::as_f64).collect())
        .unwrap_or_default();
    let size_density = log_bin(&sizes, 1.0, 2.0).map_err(|e| LabError::Format(e.to_string()))?;
    let size_fit = fit_power_law(&size_density, range);
    let count_fit = match count_regression(&counts) {
        Ok(f) => line_json(&f),
        Err(e) => json!({ "slope": null, "error": e.to_string() }),
    };

    let market_path = out.join("market.json");
    let market = if market_path.exists() {
        read_json(&market_path)?
    } else {
        Value::Null
    };

    let mut exponents = Map::new();
    for key in EXPONENT_KEYS {
        let value = match key {
            "community_sizes" => fit_json(&size_fit),
            "inter_transaction_intervals" => market
                .get("interval_fit")
                .cloned()
                .unwrap_or_else(|| json!({ "exponent": null, "error": "market tables missing" })),
            _ => last["fits"][key].clone(),
        };
        exponents.insert(key.into(), value);
    }

    Ok(json!({
        "schema_version": 1,
        "agents": "synthetic",
        "final_day": last_day,
        "days": dirs.iter().map(|d| d.0).collect::<Vec<_>>(),
        "fit_range": { "lo": range.lo, "hi": range.hi },
        "network": {
            "nodes": last["nodes"],
            "active_nodes": last["active_nodes"],
            "isolated_fraction": last["isolated_fraction"],
            "directed_edges": last["directed_edges"],
            "undirected_edges": last["undirected_edges"],
            "mean_degree": last["mean_degree"],
            "k_in_k_out_spearman": last["k_in_k_out_spearman"],
        },
        "small_world": {
            "path_length": last["path_length"]["mean"],
            "random_graph_path_length": last["random_graph_path_length"],
            "mean_clustering_unweighted": last["mean_clustering_unweighted"],
            "mean_clustering_weighted": last["mean_clustering_weighted"],
            "random_graph_clustering": last["random_graph_clustering"],
        },
        "exponents": exponents,
        "community": {
            "final_modularity": final_partition["modularity"],
            "final_communities": final_partition["n_communities"],
            "count_vs_log_nodes": count_fit,
        },
        "market": {
            "transactions": market["transactions"],
            "activity_fraction": market["activity_fraction"],
            "dropped_zero_intervals": market["dropped_zero_intervals"],
        },
        "per_day": per_day,
    }))
}

pub fn write_report(out: &Path) -> Result<Value, LabError> {
    let report = build_report(out)?;
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}
