//! Time-ordered transaction log and cumulative daily cash-flow snapshots.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use thiserror::Error;

use crate::exchange::{ContractId, PlayerId, Transaction};
use crate::money::Money;

pub const SECONDS_PER_DAY: u64 = 86_400;

/// 1-based day containing simulation time `time`.
pub fn day_of(time: u64) -> u32 {
    (time / SECONDS_PER_DAY) as u32 + 1
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("record at t={time} precedes last record at t={last}")]
    OutOfOrderTimestamp { time: u64, last: u64 },
    #[error("day {day} outside 1..={max}")]
    DayOutOfRange { day: u32, max: u32 },
    #[error("record day {found} does not match time (expected {expected})")]
    DayMismatch { expected: u32, found: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LedgerRecord {
    pub time: u64,
    pub day: u32,
    pub contract: ContractId,
    pub price: Money,
    pub volume: u64,
    pub buyer: PlayerId,
    pub seller: PlayerId,
}

impl LedgerRecord {
    pub fn amount(&self) -> Money {
        self.price.checked_mul(self.volume).expect("record amount overflow")
    }
}

impl From<Transaction> for LedgerRecord {
    fn from(tx: Transaction) -> Self {
        LedgerRecord {
            time: tx.time,
            day: day_of(tx.time),
            contract: tx.contract,
            price: tx.price,
            volume: tx.volume,
            buyer: tx.buyer,
            seller: tx.seller,
        }
    }
}

/// Append-only transaction log for a run of `duration_days` days.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ledger {
    duration_days: u32,
    records: Vec<LedgerRecord>,
}

impl Ledger {
    pub fn new(duration_days: u32) -> Self {
        Ledger {
            duration_days,
            records: Vec::new(),
        }
    }

    pub fn duration_days(&self) -> u32 {
        self.duration_days
    }

    pub fn records(&self) -> &[LedgerRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn append(&mut self, tx: Transaction) -> Result<&LedgerRecord, LedgerError> {
        self.push(tx.into())
    }

    /// Appends an already-formed record; its `day` must agree with its time.
    pub fn push(&mut self, record: LedgerRecord) -> Result<&LedgerRecord, LedgerError> {
        if let Some(last) = self.records.last() {
            if record.time < last.time {
                return Err(LedgerError::OutOfOrderTimestamp {
                    time: record.time,
                    last: last.time,
                });
            }
        }
        let expected = day_of(record.time);
        if record.day != expected {
            return Err(LedgerError::DayMismatch {
                expected,
                found: record.day,
            });
        }
        self.records.push(record);
        Ok(self.records.last().expect("just pushed"))
    }

    /// Records of days `1..=day`.
    pub fn up_to_day(&self, day: u32) -> &[LedgerRecord] {
        let end = self.records.partition_point(|r| r.day <= day);
        &self.records[..end]
    }

    /// Cumulative buyer→seller cash flow over days `1..=day`.
    pub fn snapshot(&self, day: u32) -> Result<DailySnapshot, LedgerError> {
        if day == 0 || day > self.duration_days {
            return Err(LedgerError::DayOutOfRange {
                day,
                max: self.duration_days,
            });
        }
        let mut flow = BTreeMap::new();
        for r in self.up_to_day(day) {
            *flow.entry((r.buyer, r.seller)).or_insert(Money::ZERO) += r.amount();
        }
        Ok(DailySnapshot { day, flow })
    }
}

/// Sparse cumulative flow matrix; `flow[(i, j)]` is the cash paid by buyer
/// `i` to seller `j`. Only positive entries are stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DailySnapshot {
    pub day: u32,
    pub flow: BTreeMap<(PlayerId, PlayerId), Money>,
}

impl DailySnapshot {
    pub fn total(&self) -> Money {
        self.flow.values().sum()
    }

    pub fn get(&self, buyer: PlayerId, seller: PlayerId) -> Money {
        self.flow.get(&(buyer, seller)).copied().unwrap_or(Money::ZERO)
    }

    /// Σ_j flow[p][j].
    pub fn spending(&self, player: PlayerId) -> Money {
        self.flow
            .iter()
            .filter(|((i, _), _)| *i == player)
            .map(|(_, w)| *w)
            .sum()
    }

    /// Σ_i flow[i][p].
    pub fn income(&self, player: PlayerId) -> Money {
        self.flow
            .iter()
            .filter(|((_, j), _)| *j == player)
            .map(|(_, w)| *w)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tx(time: u64, price: i64, volume: u64, buyer: u32, seller: u32) -> Transaction {
        Transaction {
            time,
            contract: ContractId(1),
            price: Money::from_units(price),
            volume,
            buyer: PlayerId(buyer),
            seller: PlayerId(seller),
        }
    }

    #[test]
    fn day_index_from_time() {
        let mut ledger = Ledger::new(30);
        assert_eq!(ledger.append(tx(0, 48, 10, 1, 2)).unwrap().day, 1);
        assert_eq!(ledger.append(tx(86_399, 48, 10, 1, 2)).unwrap().day, 1);
        assert_eq!(ledger.append(tx(86_400, 48, 10, 1, 2)).unwrap().day, 2);
    }

    #[test]
    fn out_of_order_rejected() {
        let mut ledger = Ledger::new(30);
        ledger.append(tx(100, 48, 10, 1, 2)).unwrap();
        assert_eq!(
            ledger.append(tx(99, 48, 10, 1, 2)),
            Err(LedgerError::OutOfOrderTimestamp { time: 99, last: 100 })
        );
        // equal timestamps are allowed; insertion order is the tie-break
        ledger.append(tx(100, 40, 1, 2, 1)).unwrap();
    }

    #[test]
    fn snapshot_accumulates_pairs() {
        let mut ledger = Ledger::new(30);
        ledger.append(tx(0, 48, 10, 1, 2)).unwrap();
        assert_eq!(ledger.snapshot(1).unwrap().get(PlayerId(1), PlayerId(2)), Money::from_units(480));
        ledger.append(tx(86_400, 20, 10, 1, 2)).unwrap();
        assert_eq!(ledger.snapshot(1).unwrap().get(PlayerId(1), PlayerId(2)), Money::from_units(480));
        assert_eq!(ledger.snapshot(2).unwrap().get(PlayerId(1), PlayerId(2)), Money::from_units(680));
        assert_eq!(ledger.snapshot(2).unwrap().get(PlayerId(2), PlayerId(1)), Money::ZERO);
    }

    #[test]
    fn snapshot_day_bounds() {
        let ledger = Ledger::new(30);
        assert_eq!(ledger.snapshot(0), Err(LedgerError::DayOutOfRange { day: 0, max: 30 }));
        assert_eq!(ledger.snapshot(31), Err(LedgerError::DayOutOfRange { day: 31, max: 30 }));
        assert!(ledger.snapshot(30).unwrap().flow.is_empty());
    }

    proptest! {
        #[test]
        fn snapshots_are_cumulative_and_balanced(
            trades in proptest::collection::vec((0u64..5 * SECONDS_PER_DAY, 1i64..10_000, 1u64..50, 0u32..6, 0u32..6), 0..60)
        ) {
            let mut trades = trades;
            trades.sort_by_key(|t| t.0);
            let mut ledger = Ledger::new(5);
            for (time, cents, volume, b, s) in trades.iter().copied() {
                if b == s { continue; }
                ledger.append(Transaction {
                    time, contract: ContractId(1), price: Money::from_cents(cents), volume,
                    buyer: PlayerId(b), seller: PlayerId(s),
                }).unwrap();
            }
            let total: Money = ledger.records().iter().map(|r| r.amount()).sum();
            let mut previous: Option<DailySnapshot> = None;
            for day in 1..=5 {
                let snap = ledger.snapshot(day).unwrap();
                if let Some(prev) = &previous {
                    for (key, w) in &prev.flow {
                        prop_assert!(snap.flow[key] >= *w);
                    }
                }
                for ((i, j), w) in &snap.flow {
                    prop_assert_ne!(i, j);
                    prop_assert!(w.is_positive());
                }
                let net: Money = (0..6).map(|p| snap.income(PlayerId(p)) - snap.spending(PlayerId(p))).sum();
                prop_assert_eq!(net, Money::ZERO);
                previous = Some(snap);
            }
            prop_assert_eq!(previous.unwrap().total(), total);
        }
    }
}
