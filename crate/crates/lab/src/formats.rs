//! CSV readers and writers. See `FORMATS.md` at the repository root.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use cashflow_core::exchange::RankedPlayer;
use cashflow_core::ledger::day_of;
use cashflow_core::statfit::BinnedDensity;
use cashflow_core::{ContractId, DailySnapshot, Ledger, LedgerRecord, Money, PlayerId};

use crate::LabError;

pub const LEDGER_HEADER: [&str; 7] = ["time", "day", "contract", "price", "volume", "buyer", "seller"];

fn csv_error(path: &Path, e: csv::Error) -> LabError {
    LabError::Format(format!("{}: {e}", path.display()))
}

fn field<T: std::str::FromStr>(path: &Path, line: u64, name: &str, s: &str) -> Result<T, LabError>
where
    T::Err: std::fmt::Display,
{
    s.parse()
        .map_err(|e| LabError::Format(format!("{}:{line}: {name} {s:?}: {e}", path.display())))
}

/// Writes `bytes` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), LabError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| LabError::io(parent, e))?;
    }
    let tmp = path.with_extension("partial");
    let mut f = fs::File::create(&tmp).map_err(|e| LabError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| LabError::io(&tmp, e))?;
    f.sync_all().map_err(|e| LabError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| LabError::io(path, e))
}

/// Builds a CSV document in memory from a header and string rows.
pub fn csv_bytes<I, R>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), LabError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    write_atomic(path, &csv_bytes(header, rows))
}

pub fn ledger_bytes(records: &[LedgerRecord]) -> Vec<u8> {
    csv_bytes(
        &LEDGER_HEADER,
        records.iter().map(|r| {
            [
                r.time.to_string(),
                r.day.to_string(),
                r.contract.0.to_string(),
                r.price.to_string(),
                r.volume.to_string(),
                r.buyer.0.to_string(),
                r.seller.0.to_string(),
            ]
        }),
    )
}

pub fn write_ledger(path: &Path, records: &[LedgerRecord]) -> Result<(), LabError> {
    write_atomic(path, &ledger_bytes(records))
}

/// Reads ledger records, checking the header, ordering and day arithmetic.
pub fn parse_ledger(path: &Path, reader: impl Read) -> Result<Vec<LedgerRecord>, LabError> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(LEDGER_HEADER.iter().copied()) {
        return Err(LabError::Format(format!(
            "{}: expected header {}",
            path.display(),
            LEDGER_HEADER.join(",")
        )));
    }
    let mut ledger = Ledger::new(u32::MAX);
    for row in r.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map_or(0, |p| p.line());
        let record = LedgerRecord {
            time: field(path, line, "time", &row[0])?,
            day: field(path, line, "day", &row[1])?,
            contract: ContractId(field(path, line, "contract", &row[2])?),
            price: field(path, line, "price", &row[3])?,
            volume: field(path, line, "volume", &row[4])?,
            buyer: PlayerId(field(path, line, "buyer", &row[5])?),
            seller: PlayerId(field(path, line, "seller", &row[6])?),
        };
        if !record.price.is_positive() || record.volume == 0 || record.buyer == record.seller {
            return Err(LabError::Format(format!("{}:{line}: invalid trade", path.display())));
        }
        ledger
            .push(record)
            .map_err(|e| LabError::Format(format!("{}:{line}: {e}", path.display())))?;
    }
    Ok(ledger.records().to_vec())
}

pub fn read_ledger(path: &Path) -> Result<Vec<LedgerRecord>, LabError> {
    let f = fs::File::open(path).map_err(|e| LabError::io(path, e))?;
    parse_ledger(path, f)
}

/// Rebuilds a ledger of `duration_days` from records.
pub fn ledger_from_records(records: Vec<LedgerRecord>, duration_days: u32) -> Ledger {
    let mut ledger = Ledger::new(duration_days);
    for r in records {
        debug_assert_eq!(r.day, day_of(r.time));
        ledger.push(r).expect("records were validated on read");
    }
    ledger
}

pub fn write_registrations(path: &Path, registrations: &[(PlayerId, u32)]) -> Result<(), LabError> {
    write_csv(
        path,
        &["player", "day"],
        registrations.iter().map(|(p, d)| [p.0.to_string(), d.to_string()]),
    )
}

pub fn read_registrations(path: &Path) -> Result<Vec<(PlayerId, u32)>, LabError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map_or(0, |p| p.line());
        out.push((
            PlayerId(field(path, line, "player", &row[0])?),
            field(path, line, "day", &row[1])?,
        ));
    }
    Ok(out)
}

/// Sparse triplets `i,j,w` of a snapshot or network, `i` paying `j`.
pub fn edges_bytes(edges: impl IntoIterator<Item = (PlayerId, PlayerId, Money)>) -> Vec<u8> {
    csv_bytes(
        &["i", "j", "w"],
        edges
            .into_iter()
            .map(|(i, j, w)| [i.0.to_string(), j.0.to_string(), w.to_string()]),
    )
}

pub fn write_snapshot(path: &Path, snapshot: &DailySnapshot) -> Result<(), LabError> {
    write_atomic(path, &edges_bytes(snapshot.flow.iter().map(|((i, j), w)| (*i, *j, *w))))
}

pub fn read_edges(path: &Path) -> Result<Vec<(PlayerId, PlayerId, Money)>, LabError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map_or(0, |p| p.line());
        out.push((
            PlayerId(field(path, line, "i", &row[0])?),
            PlayerId(field(path, line, "j", &row[1])?),
            field(path, line, "w", &row[2])?,
        ));
    }
    Ok(out)
}

pub fn write_ranking(path: &Path, ranking: &[RankedPlayer]) -> Result<(), LabError> {
    write_csv(
        path,
        &["rank", "player", "wealth"],
        ranking
            .iter()
            .map(|r| [r.rank.to_string(), r.player.0.to_string(), r.wealth.to_string()]),
    )
}

pub fn write_density(path: &Path, binned: &BinnedDensity) -> Result<(), LabError> {
    write_csv(
        path,
        &["bin_lo", "bin_hi", "center", "count", "density"],
        (0..binned.bin_count()).map(|m| {
            [
                binned.edges[m].to_string(),
                binned.edges[m + 1].to_string(),
                binned.centers[m].to_string(),
                binned.counts[m].to_string(),
                binned.densities[m].to_string(),
            ]
        }),
    )
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), LabError> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json(path: &Path) -> Result<serde_json::Value, LabError> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| LabError::Format(format!("{}: {e}", path.display())))
}
