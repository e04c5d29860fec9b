//! Subcommands: `simulate`, `analyze`, `partition` and `report`.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use cashflow_core::agents::{simulate, Scenario};
use cashflow_core::community::partition_anticommunities;
use cashflow_core::statfit::FitRange;
use cashflow_core::{CashFlowNetwork, ContractId, Ledger, LedgerRecord, Money, PlayerId};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::analysis::{analyze_day, analyze_market, day_dir, partition_json, write_partition};
use crate::formats::{
    ledger_from_records, read_edges, read_ledger, read_registrations, write_json, write_ledger, write_ranking,
    write_registrations,
};
use crate::{manifest, report, scenario, LabError};

#[derive(Debug, Parser)]
#[command(name = "cashflow-lab", version, about = "Simulate an event-futures market and analyze its cash-flow networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write its ledger, registrations and settlement.
    Simulate(SimulateArgs),
    /// Per-day network tables and whole-run market tables for a ledger.
    Analyze(AnalyzeArgs),
    /// Anti-community partition of one day's network or of an edge list.
    Partition(PartitionArgs),
    /// Aggregate analyzed tables into report.json.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON; the built-in default scenario when omitted.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Overrides the scenario's rng_seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Ledger CSV; defaults to OUT/ledger.csv.
    #[arg(long)]
    pub ledger: Option<PathBuf>,
    /// Registrations CSV; defaults to OUT/registrations.csv when present.
    #[arg(long)]
    pub registrations: Option<PathBuf>,
    /// Scenario JSON giving the run length and contracts.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Inclusive day range `A..B` (or a single day).
    #[arg(long, value_parser = parse_days)]
    pub days: Option<RangeInclusive<u32>>,
    /// Inclusive range of bin centers used by the fits, `lo..hi`; either side may be empty.
    #[arg(long, value_parser = parse_fit_range)]
    pub fit_range: Option<FitRange>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    #[arg(long, conflicts_with = "edges", requires = "day")]
    pub ledger: Option<PathBuf>,
    #[arg(long)]
    pub day: Option<u32>,
    /// Edge list CSV `i,j,w`.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub out: PathBuf,
}

pub fn parse_days(s: &str) -> Result<RangeInclusive<u32>, String> {
    let parse = |x: &str| x.trim().parse::<u32>().map_err(|e| format!("{x:?}: {e}"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let d = parse(s)?;
            (d, d)
        }
    };
    if a == 0 || b < a {
        return Err(format!("empty or zero-based day range {s:?}"));
    }
    Ok(a..=b)
}

pub fn parse_fit_range(s: &str) -> Result<FitRange, String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected lo..hi, got {s:?}"))?;
    let bound = |x: &str| -> Result<Option<f64>, String> {
        let x = x.trim();
        if x.is_empty() {
            return Ok(None);
        }
        let v: f64 = x.parse().map_err(|e| format!("{x:?}: {e}"))?;
        if v.is_finite() && v > 0.0 {
            Ok(Some(v))
        } else {
            Err(format!("fit range bounds must be positive, got {x:?}"))
        }
    };
    let range = FitRange {
        lo: bound(a)?,
        hi: bound(b.trim_start_matches('='))?,
    };
    if let (Some(lo), Some(hi)) = (range.lo, range.hi) {
        if hi < lo {
            return Err(format!("empty fit range {s:?}"));
        }
    }
    Ok(range)
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

pub fn run(command: Command) -> Result<(), LabError> {
    match command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Partition(a) => cmd_partition(&a),
        Command::Report(a) => cmd_report(&a).map(|_| ()),
    }
}

fn path_json(p: &Option<PathBuf>) -> serde_json::Value {
    json!(p.as_ref().map(|p| p.display().to_string()))
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), LabError> {
    let started = Instant::now();
    let mut scenario = match &args.scenario {
        Some(path) => scenario::load(path)?,
        None => Scenario::default(),
    };
    if let Some(seed) = args.seed {
        scenario.rng_seed = seed;
    }
    let out = &args.out;
    let inputs = json!({
        "scenario": path_json(&args.scenario),
        "seed": scenario.rng_seed,
        "out": out.display().to_string(),
    });
    manifest::begin(out, "simulate", inputs.clone())?;

    let result = simulate(&scenario)?;
    let paths = [
        out.join("scenario.json"),
        out.join("ledger.csv"),
        out.join("registrations.csv"),
        out.join("settlement.csv"),
        out.join("simulation.json"),
    ];
    crate::formats::write_atomic(&paths[0], scenario::to_json(&scenario).as_bytes())?;
    write_ledger(&paths[1], result.ledger.records())?;
    write_registrations(&paths[2], &result.registrations)?;
    write_ranking(&paths[3], &result.ranking)?;
    let final_total: Money = result.final_wealth.values().copied().sum();
    let s = result.stats;
    write_json(
        &paths[4],
        &json!({
            "agents": "synthetic",
            "players": result.registrations.len(),
            "transactions": result.ledger.len(),
            "initial_cash": result.initial_cash.to_string(),
            "initial_inventory_value": result.initial_inventory_value.to_string(),
            "final_wealth_total": final_total.to_string(),
            "stats": {
                "actions": s.actions,
                "orders_submitted": s.orders_submitted,
                "orders_downsized": s.orders_downsized,
                "orders_skipped": s.orders_skipped,
                "self_cross_dropped": s.self_cross_dropped,
                "market_maker_quotes": s.market_maker_quotes,
            },
        }),
    )?;
    let refs: Vec<&Path> = paths.iter().map(PathBuf::as_path).collect();
    manifest::finish(out, "simulate", inputs, started.elapsed().as_millis(), &refs)
}

/// Ledger, registrants and run length for an analysis.
struct Inputs {
    ledger: Ledger,
    registrations: Vec<(PlayerId, u32)>,
    contracts: Vec<ContractId>,
}

fn load_inputs(
    ledger_path: &Path,
    registrations: Option<&Path>,
    scenario_path: Option<&Path>,
) -> Result<Inputs, LabError> {
    if !ledger_path.exists() {
        return Err(LabError::MissingLedger(ledger_path.to_path_buf()));
    }
    let records: Vec<LedgerRecord> = read_ledger(ledger_path)?;
    let registrations = match registrations {
        Some(p) => read_registrations(p)?,
        None => Vec::new(),
    };
    let scenario = scenario_path.map(scenario::load).transpose()?;
    let (duration, contracts) = match &scenario {
        Some(s) => (s.duration_days, (1..=s.contracts.len() as u16).map(ContractId).collect()),
        None => {
            let last = records.last().map_or(1, |r| r.day);
            let reg = registrations.iter().map(|r| r.1).max().unwrap_or(1);
            let ids: BTreeSet<ContractId> = records.iter().map(|r| r.contract).collect();
            (last.max(reg).max(1), ids.into_iter().collect())
        }
    };
    if let Some(r) = records.last() {
        if r.day > duration {
            return Err(LabError::DayOutOfRange { day: r.day, max: duration });
        }
    }
    Ok(Inputs {
        ledger: ledger_from_records(records, duration),
        registrations,
        contracts,
    })
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), LabError> {
    let started = Instant::now();
    let out = &args.out;
    let ledger_path = args.ledger.clone().unwrap_or_else(|| out.join("ledger.csv"));
    let registrations = args.registrations.clone().or_else(|| {
        let p = out.join("registrations.csv");
        p.exists().then_some(p)
    });
    let scenario_path = args.scenario.clone().or_else(|| {
        let p = out.join("scenario.json");
        p.exists().then_some(p)
    });
    let range = args.fit_range.unwrap_or(FitRange::ALL);
    let inputs = json!({
        "ledger": ledger_path.display().to_string(),
        "registrations": path_json(&registrations),
        "scenario": path_json(&scenario_path),
        "days": args.days.as_ref().map(|d| format!("{}..{}", d.start(), d.end())),
        "fit_range": { "lo": range.lo, "hi": range.hi },
        "out": out.display().to_string(),
    });
    let data = load_inputs(&ledger_path, registrations.as_deref(), scenario_path.as_deref())?;
    let duration = data.ledger.duration_days();
    let days = args.days.clone().unwrap_or(1..=duration);
    if *days.end() > duration {
        return Err(LabError::DayOutOfRange {
            day: *days.end(),
            max: duration,
        });
    }
    manifest::begin(out, "analyze", inputs.clone())?;

    let mut outputs = Vec::new();
    for day in days {
        let registrants: Vec<PlayerId> = data
            .registrations
            .iter()
            .filter(|r| r.1 <= day)
            .map(|r| r.0)
            .collect();
        let analysis = analyze_day(&data.ledger, &registrants, day, range)?;
        let dir = day_dir(out, day);
        analysis.write(&dir, &data.ledger, range)?;
        outputs.push(dir.join("summary.json"));
        outputs.push(dir.join("partition.csv"));
    }
    let market = analyze_market(data.ledger.records(), &data.contracts, duration, range);
    market.write(out, range)?;
    outputs.push(out.join("market.json"));
    let refs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    manifest::finish(out, "analyze", inputs, started.elapsed().as_millis(), &refs)
}

pub fn cmd_partition(args: &PartitionArgs) -> Result<(), LabError> {
    let started = Instant::now();
    let out = &args.out;
    let inputs = json!({
        "ledger": path_json(&args.ledger),
        "day": args.day,
        "edges": path_json(&args.edges),
        "out": out.display().to_string(),
    });
    let network = match (&args.edges, &args.ledger, args.day) {
        (Some(edges), _, _) => {
            let edges = read_edges(edges)?;
            CashFlowNetwork::from_edges(std::iter::empty(), &edges).map_err(|e| LabError::Format(e.to_string()))?
        }
        (None, Some(ledger), Some(day)) => {
            let data = load_inputs(ledger, None, None)?;
            let max = data.ledger.duration_days();
            if day == 0 || day > max {
                return Err(LabError::DayOutOfRange { day, max });
            }
            CashFlowNetwork::build(&data.ledger.snapshot(day)?, std::iter::empty())
        }
        _ => return Err(LabError::Usage("partition needs --edges, or --ledger with --day".into())),
    };
    manifest::begin(out, "partition", inputs.clone())?;
    let (active, _) = network.prune_isolated();
    let graph = active.symmetrized();
    let partition = partition_anticommunities(&graph);
    let summary = partition_json(&partition, graph.node_count(), graph.edge_count());
    write_partition(out, &partition, active.nodes(), &summary)?;
    let csv = out.join("partition.csv");
    let json_path = out.join("partition.json");
    manifest::finish(out, "partition", inputs, started.elapsed().as_millis(), &[&csv, &json_path])
}

pub fn cmd_report(args: &ReportArgs) -> Result<serde_json::Value, LabError> {
    let started = Instant::now();
    let out = &args.out;
    let inputs = json!({ "out": out.display().to_string() });
    manifest::begin(out, "report", inputs.clone())?;
    let value = report::write_report(out)?;
    manifest::finish(out, "report", inputs, started.elapsed().as_millis(), &[&out.join("report.json")])?;
    Ok(value)
}
