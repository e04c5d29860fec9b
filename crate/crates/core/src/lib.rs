//! Experimental event-futures exchange and cash-flow network analysis.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the CLI and
//! other IO live in the `cashflow-lab` companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod agents;
pub mod community;
pub mod exchange;
pub mod graph;
pub mod ledger;
pub mod metrics;
pub mod money;
pub mod statfit;
pub mod timeseries;

#[cfg(any(test, feature = "oracles"))]
pub mod oracles;

pub use exchange::{ContractId, Exchange, OrderId, PlayerId, Side, Transaction};
pub use graph::{CashFlowNetwork, UndirectedGraph};
pub use ledger::{DailySnapshot, Ledger, LedgerRecord};
pub use money::Money;
