//! Minute-resolution price and volume series, market activity, the sum of
//! carried-forward prices and inter-transaction intervals.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::exchange::ContractId;
use crate::ledger::LedgerRecord;
use crate::money::Money;
use crate::statfit::{fit_power_law_cutoff, log_bin, BinnedDensity, FitError, FitRange, FitResult};

pub const SECONDS_PER_MINUTE: u64 = 60;

/// Trades of one contract within one minute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinuteBucket {
    /// Arithmetic mean of the trade prices.
    pub mean_price: f64,
    pub volume: u64,
    /// Price of the last trade in the minute.
    pub last_price: Money,
    pub trades: u32,
}

/// Minutes `0..span`; minute `m` covers `[60m, 60(m + 1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinuteSeries {
    pub contracts: Vec<ContractId>,
    pub span: u64,
    /// Only minutes with at least one trade of the contract are present.
    pub buckets: BTreeMap<(u64, ContractId), MinuteBucket>,
    /// Total volume per minute across contracts, indexed by minute.
    pub total_volume: Vec<u64>,
}

impl MinuteSeries {
    pub fn price(&self, minute: u64, contract: ContractId) -> Option<f64> {
        self.buckets.get(&(minute, contract)).map(|b| b.mean_price)
    }

    pub fn volume(&self, minute: u64, contract: ContractId) -> u64 {
        self.buckets.get(&(minute, contract)).map_or(0, |b| b.volume)
    }

    pub fn active_minutes(&self) -> usize {
        self.total_volume.iter().filter(|&&v| v > 0).count()
    }
}

/// Buckets a time-ordered ledger by minute. The series spans from minute 0 to
/// the minute of the last trade, or to `span` minutes when given.
pub fn bucket_minutes(records: &[LedgerRecord], contracts: &[ContractId], span: Option<u64>) -> MinuteSeries {
    let span = span.unwrap_or_else(|| records.last().map_or(0, |r| r.time / SECONDS_PER_MINUTE + 1));
    let mut sums: BTreeMap<(u64, ContractId), (i64, u64, Money, u32)> = BTreeMap::new();
    let mut total_volume = vec![0u64; span as usize];
    for r in records {
        let minute = r.time / SECONDS_PER_MINUTE;
        if minute >= span {
            continue;
        }
        let entry = sums.entry((minute, r.contract)).or_insert((0, 0, r.price, 0));
        entry.0 += r.price.cents();
        entry.1 += r.volume;
        entry.2 = r.price;
        entry.3 += 1;
        total_volume[minute as usize] += r.volume;
    }
    let buckets = sums
        .into_iter()
        .map(|(key, (cents, volume, last_price, trades))| {
            let mean_price = cents as f64 / 100.0 / f64::from(trades);
            (
                key,
                MinuteBucket {
                    mean_price,
                    volume,
                    last_price,
                    trades,
                },
            )
        })
        .collect();
    MinuteSeries {
        contracts: contracts.to_vec(),
        span,
        buckets,
        total_volume,
    }
}

/// Fraction of minutes with nonzero volume; 0 for an empty series.
pub fn activity_fraction(series: &MinuteSeries) -> f64 {
    if series.span == 0 {
        return 0.0;
    }
    series.active_minutes() as f64 / series.span as f64
}

/// Sum over contracts of the last traded price, carried forward through
/// silent minutes. `None` until every contract has traded once.
pub fn price_sum_series(series: &MinuteSeries) -> Vec<Option<Money>> {
    let mut last: BTreeMap<ContractId, Money> = BTreeMap::new();
    let mut out = Vec::with_capacity(series.span as usize);
    let mut iter = series.buckets.iter().peekable();
    for minute in 0..series.span {
        while let Some(((m, c), b)) = iter.peek() {
            if *m != minute {
                break;
            }
            last.insert(*c, b.last_price);
            iter.next();
        }
        let covered = series.contracts.iter().all(|c| last.contains_key(c));
        out.push(covered.then(|| series.contracts.iter().map(|c| last[c]).sum()));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalAnalysis {
    /// Positive gaps between successive transactions, in seconds.
    pub intervals: Vec<u64>,
    /// Gaps of zero seconds, excluded from `intervals`.
    pub dropped_zero: usize,
    pub binned: BinnedDensity,
    pub fit: Result<FitResult, FitError>,
}

/// Successive-transaction gaps, binned from one second with ratio 2 and fitted
/// with a cutoff power law.
pub fn inter_transaction_intervals(records: &[LedgerRecord], range: FitRange) -> IntervalAnalysis {
    let mut intervals = Vec::new();
    let mut dropped_zero = 0;
    for pair in records.windows(2) {
        let gap = pair[1].time - pair[0].time;
        if gap == 0 {
            dropped_zero += 1;
        } else {
            intervals.push(gap);
        }
    }
    let samples: Vec<f64> = intervals.iter().map(|&g| g as f64).collect();
    let binned = log_bin(&samples, 1.0, 2.0).expect("gaps are positive integers");
    let fit = fit_power_law_cutoff(&binned, range);
    IntervalAnalysis {
        intervals,
        dropped_zero,
        binned,
        fit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exchange::PlayerId;
    use crate::oracles;
    use alloc::vec::Vec;

    fn rec(time: u64, contract: u16, price: &str, volume: u64) -> LedgerRecord {
        LedgerRecord {
            time,
            day: crate::ledger::day_of(time),
            contract: ContractId(contract),
            price: price.parse().unwrap(),
            volume,
            buyer: PlayerId(1),
            seller: PlayerId(2),
        }
    }

    fn ids(n: u16) -> Vec<ContractId> {
        (1..=n).map(ContractId).collect()
    }

    #[test]
    fn trades_in_one_minute_are_averaged_and_summed() {
        let records = [rec(10, 1, "48.00", 5), rec(50, 1, "50.00", 5)];
        let s = bucket_minutes(&records, &ids(1), None);
        assert_eq!(s.span, 1);
        assert_eq!(s.price(0, ContractId(1)), Some(49.0));
        assert_eq!(s.volume(0, ContractId(1)), 10);
        assert_eq!(s.total_volume, [10]);
    }

    #[test]
    fn silent_minute_has_no_price() {
        let records = [rec(10, 1, "48.00", 5), rec(130, 1, "50.00", 5)];
        let s = bucket_minutes(&records, &ids(1), None);
        assert_eq!(s.span, 3);
        assert_eq!(s.price(1, ContractId(1)), None);
        assert_eq!(s.volume(1, ContractId(1)), 0);
        assert!((activity_fraction(&s) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn activity_fraction_counts_active_minutes() {
        let records: Vec<_> = (0..127).map(|i| rec(i * 7 * 60 + 3, 1, "10.00", 1)).collect();
        let s = bucket_minutes(&records, &ids(1), Some(1000));
        assert!((activity_fraction(&s) - 0.127).abs() < 1e-15);
        let empty = bucket_minutes(&[], &ids(1), Some(1000));
        assert_eq!(activity_fraction(&empty), 0.0);
        let all: Vec<_> = (0..10).map(|i| rec(i * 60, 1, "10.00", 1)).collect();
        assert_eq!(activity_fraction(&bucket_minutes(&all, &ids(1), None)), 1.0);
    }

    #[test]
    fn price_sum_needs_every_contract() {
        let records = [
            rec(0, 1, "40.00", 1),
            rec(61, 2, "30.00", 1),
            rec(62, 2, "35.00", 1),
            rec(200, 3, "25.00", 1),
            rec(300, 1, "45.00", 1),
        ];
        let s = bucket_minutes(&records, &ids(3), Some(7));
        let sums = price_sum_series(&s);
        let expect = |x: &str| Some(x.parse::<Money>().unwrap());
        assert_eq!(sums, [None, None, None, expect("100.00"), expect("100.00"), expect("105.00"), expect("105.00")]);

        let never = bucket_minutes(&records[..3], &ids(3), None);
        assert!(price_sum_series(&never).iter().all(Option::is_none));
    }

    #[test]
    fn interval_examples() {
        let records = [rec(0, 1, "1.00", 1), rec(60, 1, "1.00", 1), rec(180, 1, "1.00", 1)];
        let a = inter_transaction_intervals(&records, FitRange::ALL);
        assert_eq!(a.intervals, [60, 120]);

        let single = inter_transaction_intervals(&records[..1], FitRange::ALL);
        assert!(single.intervals.is_empty());
        assert_eq!(single.fit, Err(FitError::TooFewBins { needed: 4, found: 0 }));
    }

    #[test]
    fn zero_gaps_are_dropped_and_counted() {
        let records = [rec(5, 1, "1.00", 1), rec(5, 2, "1.00", 1), rec(9, 1, "1.00", 1), rec(9, 1, "1.00", 1)];
        let a = inter_transaction_intervals(&records, FitRange::ALL);
        assert_eq!(a.intervals, [4]);
        assert_eq!(a.dropped_zero, 2);
        assert_eq!(a.intervals.len(), records.len() - 1 - a.dropped_zero);
    }

    #[test]
    fn power_law_arrivals_recover_exponent() {
        let gaps = oracles::sample_power_law(100_000, 1.3, 1.0, 1e5, 7);
        let mut t = 0;
        let records: Vec<_> = gaps
            .iter()
            .map(|g| {
                t += *g as u64;
                rec(t, 1, "1.00", 1)
            })
            .collect();
        let a = inter_transaction_intervals(&records, FitRange::ALL);
        let fit = a.fit.unwrap();
        assert!((fit.exponent - 1.3).abs() < 0.2, "{}", fit.exponent);
    }

    proptest::proptest! {
        #[test]
        fn minute_volumes_sum_to_ledger_volume(
            gaps in proptest::collection::vec(0u64..400, 0..60),
            vols in proptest::collection::vec(1u64..50, 60),
            cents in proptest::collection::vec(1i64..10_000, 60),
        ) {
            let mut t = 0;
            let records: Vec<_> = gaps.iter().enumerate().map(|(i, g)| {
                t += g;
                LedgerRecord { price: Money::from_cents(cents[i]), ..rec(t, (i % 3) as u16 + 1, "1.00", vols[i]) }
            }).collect();
            let s = bucket_minutes(&records, &ids(3), None);
            let ledger_volume: u64 = records.iter().map(|r| r.volume).sum();
            proptest::prop_assert_eq!(s.total_volume.iter().sum::<u64>(), ledger_volume);
            let bucket_volume: u64 = s.buckets.values().map(|b| b.volume).sum();
            proptest::prop_assert_eq!(bucket_volume, ledger_volume);

            // independent replay of the carry-forward rule, trade by trade
            let sums = price_sum_series(&s);
            let mut last: [Option<Money>; 3] = [None; 3];
            let mut k = 0;
            for minute in 0..s.span {
                while k < records.len() && records[k].time / 60 == minute {
                    last[records[k].contract.0 as usize - 1] = Some(records[k].price);
                    k += 1;
                }
                let expected = if last.iter().all(Option::is_some) {
                    Some(last.iter().map(|p| p.unwrap()).sum())
                } else {
                    None
                };
                proptest::prop_assert_eq!(sums[minute as usize], expected);
            }
        }
    }
}
