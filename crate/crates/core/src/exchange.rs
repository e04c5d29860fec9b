//! Event-futures exchange: player accounts, continuous-double-auction order
//! books and liquidation.
//!
//! The [`Exchange`] is a single-writer state machine. Every mutating call is
//! applied in the order it is made; clones are cheap read-only snapshots.
//!
//! Matching follows price-time priority. Fills execute at the resting order's
//! price. An incoming order never trades against a resting order of the same
//! player; if its residual would still cross the book after matching (only
//! possible against the player's own orders) the residual is dropped instead
//! of resting, so the book is never crossed at rest.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::money::Money;

/// Cash allocated to every player on registration.
pub const ENDOWMENT: Money = Money::from_units(30_000);

/// Liquidation prices of a scenario must add up to this amount.
pub const LIQUIDATION_TOTAL: Money = Money::from_units(100);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlayerId(pub u32);

/// Contract identifiers are 1-based and dense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContractId(pub u16);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrderId(pub u64);

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for ContractId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Bid,
    Ask,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExchangeError {
    #[error("insufficient unreserved cash for bid")]
    InsufficientFunds,
    #[error("insufficient unreserved holdings for ask")]
    InsufficientHoldings,
    #[error("unknown contract {0}")]
    UnknownContract(ContractId),
    #[error("price and volume must be positive")]
    NonPositivePriceOrVolume,
    #[error("unknown player {0}")]
    UnknownPlayer(PlayerId),
    #[error("player {0} is already registered")]
    DuplicatePlayer(PlayerId),
    #[error("unknown order")]
    UnknownOrder,
    #[error("order belongs to another player")]
    NotOwner,
    #[error("liquidation prices must be in [0, 100] and sum to 100.00")]
    PricesDoNotSumTo100,
    #[error("resting orders remain in the book")]
    OpenOrdersRemain,
    #[error("contracts are already liquidated")]
    AlreadySettled,
    #[error("arithmetic overflow")]
    Overflow,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contract {
    pub id: ContractId,
    pub label: String,
    liquidation_price: Option<Money>,
}

impl Contract {
    pub fn liquidation_price(&self) -> Option<Money> {
        self.liquidation_price
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Account {
    pub player: PlayerId,
    cash: Money,
    reserved_cash: Money,
    holdings: BTreeMap<ContractId, u64>,
    reserved_holdings: BTreeMap<ContractId, u64>,
}

impl Account {
    fn new(player: PlayerId, cash: Money) -> Self {
        Account {
            player,
            cash,
            reserved_cash: Money::ZERO,
            holdings: BTreeMap::new(),
            reserved_holdings: BTreeMap::new(),
        }
    }

    pub fn cash(&self) -> Money {
        self.cash
    }

    pub fn reserved_cash(&self) -> Money {
        self.reserved_cash
    }

    pub fn available_cash(&self) -> Money {
        self.cash - self.reserved_cash
    }

    pub fn holdings(&self, contract: ContractId) -> u64 {
        self.holdings.get(&contract).copied().unwrap_or(0)
    }

    pub fn reserved_holdings(&self, contract: ContractId) -> u64 {
        self.reserved_holdings.get(&contract).copied().unwrap_or(0)
    }

    pub fn available_holdings(&self, contract: ContractId) -> u64 {
        self.holdings(contract) - self.reserved_holdings(contract)
    }

    pub fn all_holdings(&self) -> impl Iterator<Item = (ContractId, u64)> + '_ {
        self.holdings.iter().map(|(c, v)| (*c, *v))
    }

    fn add_holdings(&mut self, contract: ContractId, volume: u64) {
        *self.holdings.entry(contract).or_insert(0) += volume;
    }

    fn remove_holdings(&mut self, contract: ContractId, volume: u64) {
        let entry = self.holdings.entry(contract).or_insert(0);
        *entry -= volume;
        if *entry == 0 {
            self.holdings.remove(&contract);
        }
    }

    fn reserve_holdings(&mut self, contract: ContractId, volume: u64) {
        *self.reserved_holdings.entry(contract).or_insert(0) += volume;
    }

    fn release_holdings(&mut self, contract: ContractId, volume: u64) {
        let entry = self.reserved_holdings.entry(contract).or_insert(0);
        *entry -= volume;
        if *entry == 0 {
            self.reserved_holdings.remove(&contract);
        }
    }
}

/// A limit order as submitted by a player.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderRequest {
    pub player: PlayerId,
    pub contract: ContractId,
    pub side: Side,
    pub price: Money,
    pub volume: u64,
    /// Simulation time in seconds.
    pub time: u64,
}

/// An order resting in the book; `volume` is what remains unfilled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Order {
    pub id: OrderId,
    pub player: PlayerId,
    pub contract: ContractId,
    pub side: Side,
    pub price: Money,
    pub volume: u64,
    pub time: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transaction {
    pub time: u64,
    pub contract: ContractId,
    pub price: Money,
    pub volume: u64,
    pub buyer: PlayerId,
    pub seller: PlayerId,
}

impl Transaction {
    /// Cash moved from buyer to seller.
    pub fn amount(&self) -> Money {
        self.price
            .checked_mul(self.volume)
            .expect("transaction amount checked at match time")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubmitOutcome {
    pub order_id: OrderId,
    pub transactions: Vec<Transaction>,
    /// Volume left resting in the book.
    pub rested: u64,
    /// Residual volume discarded because it would only cross the player's own orders.
    pub self_cross_dropped: u64,
}

type Level = VecDeque<Order>;

/// Bid and ask queues of one contract.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OrderBook {
    bids: BTreeMap<Money, Level>,
    asks: BTreeMap<Money, Level>,
}

impl OrderBook {
    pub fn best_bid(&self) -> Option<Money> {
        self.bids.keys().next_back().copied()
    }

    pub fn best_ask(&self) -> Option<Money> {
        self.asks.keys().next().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty() && self.asks.is_empty()
    }

    /// Bids in priority order (descending price, FIFO within price).
    pub fn bids(&self) -> impl Iterator<Item = &Order> {
        self.bids.values().rev().flat_map(|l| l.iter())
    }

    /// Asks in priority order (ascending price, FIFO within price).
    pub fn asks(&self) -> impl Iterator<Item = &Order> {
        self.asks.values().flat_map(|l| l.iter())
    }

    fn side_mut(&mut self, side: Side) -> &mut BTreeMap<Money, Level> {
        match side {
            Side::Bid => &mut self.bids,
            Side::Ask => &mut self.asks,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct OpenOrder {
    contract: ContractId,
    side: Side,
    price: Money,
    player: PlayerId,
}

#[derive(Debug, Clone)]
pub struct Exchange {
    contracts: Vec<Contract>,
    books: Vec<OrderBook>,
    accounts: BTreeMap<PlayerId, Account>,
    open: BTreeMap<OrderId, OpenOrder>,
    next_order: u64,
    settled: bool,
}

impl Exchange {
    /// Creates an exchange listing one contract per label, with ids `1..=n`.
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Self {
        let contracts: Vec<Contract> = labels
            .into_iter()
            .enumerate()
            .map(|(i, label)| Contract {
                id: ContractId(i as u16 + 1),
                label: label.into(),
                liquidation_price: None,
            })
            .collect();
        let books = contracts.iter().map(|_| OrderBook::default()).collect();
        Exchange {
            contracts,
            books,
            accounts: BTreeMap::new(),
            open: BTreeMap::new(),
            next_order: 1,
            settled: false,
        }
    }

    pub fn contracts(&self) -> &[Contract] {
        &self.contracts
    }

    pub fn contract_ids(&self) -> impl Iterator<Item = ContractId> + '_ {
        self.contracts.iter().map(|c| c.id)
    }

    pub fn book(&self, contract: ContractId) -> Option<&OrderBook> {
        self.book_index(contract).ok().map(|i| &self.books[i])
    }

    pub fn account(&self, player: PlayerId) -> Option<&Account> {
        self.accounts.get(&player)
    }

    pub fn accounts(&self) -> impl Iterator<Item = &Account> {
        self.accounts.values()
    }

    pub fn open_order_count(&self) -> usize {
        self.open.len()
    }

    pub fn is_settled(&self) -> bool {
        self.settled
    }

    /// Opens a fresh account with the standard endowment.
    pub fn register(&mut self, player: PlayerId) -> Result<(), ExchangeError> {
        self.register_with(player, ENDOWMENT, &[])
    }

    /// Opens an account with explicit cash and seeded contract inventory.
    pub fn register_with(
        &mut self,
        player: PlayerId,
        cash: Money,
        inventory: &[(ContractId, u64)],
    ) -> Result<(), ExchangeError> {
        if self.accounts.contains_key(&player) {
            return Err(ExchangeError::DuplicatePlayer(player));
        }
        if cash.is_negative() {
            return Err(ExchangeError::InsufficientFunds);
        }
        let mut account = Account::new(player, cash);
        for &(contract, volume) in inventory {
            self.book_index(contract)?;
            if volume > 0 {
                account.add_holdings(contract, volume);
            }
        }
        self.accounts.insert(player, account);
        Ok(())
    }

    fn book_index(&self, contract: ContractId) -> Result<usize, ExchangeError> {
        let idx = usize::from(contract.0).wrapping_sub(1);
        if idx < self.books.len() {
            Ok(idx)
        } else {
            Err(ExchangeError::UnknownContract(contract))
        }
    }

    /// Checks an order against the submitter's unreserved cash or holdings.
    pub fn validate(&self, req: &OrderRequest) -> Result<(), ExchangeError> {
        if self.settled {
            return Err(ExchangeError::AlreadySettled);
        }
        self.book_index(req.contract)?;
        if !req.price.is_positive() || req.volume == 0 {
            return Err(ExchangeError::NonPositivePriceOrVolume);
        }
        let account = self
            .accounts
            .get(&req.player)
            .ok_or(ExchangeError::UnknownPlayer(req.player))?;
        match req.side {
            Side::Bid => {
                let cost = req.price.checked_mul(req.volume).ok_or(ExchangeError::Overflow)?;
                if account.available_cash() < cost {
                    return Err(ExchangeError::InsufficientFunds);
                }
            }
            Side::Ask => {
                if account.available_holdings(req.contract) < req.volume {
                    return Err(ExchangeError::InsufficientHoldings);
                }
            }
        }
        Ok(())
    }

    /// Matches an incoming limit order and rests any residual.
    pub fn submit(&mut self, req: OrderRequest) -> Result<SubmitOutcome, ExchangeError> {
        self.validate(&req)?;
        let book_idx = self.book_index(req.contract)?;
        let order_id = OrderId(self.next_order);
        self.next_order += 1;

        let Exchange {
            books,
            accounts,
            open,
            ..
        } = self;
        let book = &mut books[book_idx];
        let opposite = book.side_mut(match req.side {
            Side::Bid => Side::Ask,
            Side::Ask => Side::Bid,
        });

        let crosses = |level: Money| match req.side {
            Side::Bid => level <= req.price,
            Side::Ask => level >= req.price,
        };
        let mut levels: Vec<Money> = match req.side {
            Side::Bid => opposite.keys().copied().take_while(|p| crosses(*p)).collect(),
            Side::Ask => opposite.keys().rev().copied().take_while(|p| crosses(*p)).collect(),
        };

        let mut remaining = req.volume;
        let mut transactions = Vec::new();
        for level_price in levels.drain(..) {
            if remaining == 0 {
                break;
            }
            let queue = opposite.get_mut(&level_price).expect("level listed above");
            let mut i = 0;
            while i < queue.len() && remaining > 0 {
                let resting = &mut queue[i];
                if resting.player == req.player {
                    i += 1;
                    continue;
                }
                let fill = remaining.min(resting.volume);
                let tx = match req.side {
                    Side::Bid => Transaction {
                        time: req.time,
                        contract: req.contract,
                        price: resting.price,
                        volume: fill,
                        buyer: req.player,
                        seller: resting.player,
                    },
                    Side::Ask => Transaction {
                        time: req.time,
                        contract: req.contract,
                        price: resting.price,
                        volume: fill,
                        buyer: resting.player,
                        seller: req.player,
                    },
                };
                let amount = tx.amount();
                {
                    let buyer = accounts.get_mut(&tx.buyer).expect("registered buyer");
                    buyer.cash -= amount;
                    if req.side == Side::Ask {
                        buyer.reserved_cash -= amount;
                    }
                    buyer.add_holdings(tx.contract, fill);
                }
                {
                    let seller = accounts.get_mut(&tx.seller).expect("registered seller");
                    seller.cash += amount;
                    seller.remove_holdings(tx.contract, fill);
                    if req.side == Side::Bid {
                        seller.release_holdings(tx.contract, fill);
                    }
                }
                resting.volume -= fill;
                remaining -= fill;
                transactions.push(tx);
                if resting.volume == 0 {
                    open.remove(&resting.id);
                    queue.remove(i);
                } else {
                    i += 1;
                }
            }
            if queue.is_empty() {
                opposite.remove(&level_price);
            }
        }

        let mut rested = 0;
        let mut self_cross_dropped = 0;
        if remaining > 0 {
            let still_crossed = match req.side {
                Side::Bid => book.best_ask().is_some_and(|a| a <= req.price),
                Side::Ask => book.best_bid().is_some_and(|b| b >= req.price),
            };
            if still_crossed {
                self_cross_dropped = remaining;
            } else {
                let account = accounts.get_mut(&req.player).expect("validated player");
                match req.side {
                    Side::Bid => {
                        account.reserved_cash += req.price.checked_mul(remaining).expect("checked");
                    }
                    Side::Ask => account.reserve_holdings(req.contract, remaining),
                }
                book.side_mut(req.side)
                    .entry(req.price)
                    .or_default()
                    .push_back(Order {
                        id: order_id,
                        player: req.player,
                        contract: req.contract,
                        side: req.side,
                        price: req.price,
                        volume: remaining,
                        time: req.time,
                    });
                open.insert(
                    order_id,
                    OpenOrder {
                        contract: req.contract,
                        side: req.side,
                        price: req.price,
                        player: req.player,
                    },
                );
                rested = remaining;
            }
        }

        Ok(SubmitOutcome {
            order_id,
            transactions,
            rested,
            self_cross_dropped,
        })
    }

    /// Removes a resting order and releases its reservation.
    pub fn cancel(&mut self, player: PlayerId, order_id: OrderId) -> Result<Order, ExchangeError> {
        let info = *self.open.get(&order_id).ok_or(ExchangeError::UnknownOrder)?;
        if info.player != player {
            return Err(ExchangeError::NotOwner);
        }
        self.remove_resting(order_id, info)
    }

    fn remove_resting(&mut self, order_id: OrderId, info: OpenOrder) -> Result<Order, ExchangeError> {
        let idx = self.book_index(info.contract)?;
        let side = self.books[idx].side_mut(info.side);
        let level = side.get_mut(&info.price).ok_or(ExchangeError::UnknownOrder)?;
        let pos = level
            .iter()
            .position(|o| o.id == order_id)
            .ok_or(ExchangeError::UnknownOrder)?;
        let order = level.remove(pos).expect("position found");
        if level.is_empty() {
            side.remove(&info.price);
        }
        self.open.remove(&order_id);
        let account = self.accounts.get_mut(&order.player).expect("order owner registered");
        match order.side {
            Side::Bid => account.reserved_cash -= order.price.checked_mul(order.volume).expect("reserved earlier"),
            Side::Ask => account.release_holdings(order.contract, order.volume),
        }
        Ok(order)
    }

    /// Cancels every resting order, oldest first. Returns how many were removed.
    pub fn cancel_all(&mut self) -> usize {
        let ids: Vec<(OrderId, OpenOrder)> = self.open.iter().map(|(k, v)| (*k, *v)).collect();
        for (id, info) in &ids {
            self.remove_resting(*id, *info).expect("open index consistent with books");
        }
        ids.len()
    }

    /// Σ cash over all accounts.
    pub fn total_cash(&self) -> Money {
        self.accounts.values().map(|a| a.cash).sum()
    }

    /// Σ holdings of one contract over all accounts.
    pub fn total_holdings(&self, contract: ContractId) -> u64 {
        self.accounts.values().map(|a| a.holdings(contract)).sum()
    }

    /// Liquidates every account at the given prices (one per contract, in id
    /// order) and returns each player's final wealth.
    pub fn settle(&mut self, prices: &[Money]) -> Result<BTreeMap<PlayerId, Money>, ExchangeError> {
        if self.settled {
            return Err(ExchangeError::AlreadySettled);
        }
        if !self.open.is_empty() {
            return Err(ExchangeError::OpenOrdersRemain);
        }
        if prices.len() != self.contracts.len()
            || prices.iter().any(|p| p.is_negative() || *p > LIQUIDATION_TOTAL)
            || prices.iter().sum::<Money>() != LIQUIDATION_TOTAL
        {
            return Err(ExchangeError::PricesDoNotSumTo100);
        }
        for (contract, price) in self.contracts.iter_mut().zip(prices) {
            contract.liquidation_price = Some(*price);
        }
        self.settled = true;
        let mut wealth = BTreeMap::new();
        for account in self.accounts.values() {
            let mut total = account.cash;
            for (contract, volume) in account.all_holdings() {
                let price = prices[usize::from(contract.0) - 1];
                total = total
                    .checked_add(price.checked_mul(volume).ok_or(ExchangeError::Overflow)?)
                    .ok_or(ExchangeError::Overflow)?;
            }
            wealth.insert(account.player, total);
        }
        Ok(wealth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankedPlayer {
    /// 1-based.
    pub rank: usize,
    pub player: PlayerId,
    pub wealth: Money,
}

/// Orders players by final wealth, richest first; ties go to the lower id.
pub fn rank_players(final_wealth: &BTreeMap<PlayerId, Money>) -> Vec<RankedPlayer> {
    let mut rows: Vec<(PlayerId, Money)> = final_wealth.iter().map(|(p, w)| (*p, *w)).collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    rows.into_iter()
        .enumerate()
        .map(|(i, (player, wealth))| RankedPlayer {
            rank: i + 1,
            player,
            wealth,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    const A: PlayerId = PlayerId(1);
    const B: PlayerId = PlayerId(2);
    const C1: ContractId = ContractId(1);

    fn m(units: i64) -> Money {
        Money::from_units(units)
    }

    fn order(player: PlayerId, side: Side, price: i64, volume: u64) -> OrderRequest {
        OrderRequest {
            player,
            contract: C1,
            side,
            price: m(price),
            volume,
            time: 0,
        }
    }

    fn two_players(seller_inventory: u64) -> Exchange {
        let mut ex = Exchange::new(["c1", "c2"]);
        ex.register(A).unwrap();
        ex.register_with(B, ENDOWMENT, &[(C1, seller_inventory)]).unwrap();
        ex
    }

    #[test]
    fn bid_on_empty_book_rests_and_reserves() {
        let mut ex = two_players(0);
        let out = ex.submit(order(A, Side::Bid, 50, 10)).unwrap();
        assert!(out.transactions.is_empty());
        assert_eq!(out.rested, 10);
        assert_eq!(ex.account(A).unwrap().reserved_cash(), m(500));
        assert_eq!(ex.book(C1).unwrap().best_bid(), Some(m(50)));
    }

    #[test]
    fn fill_executes_at_resting_price() {
        let mut ex = two_players(10);
        ex.submit(order(B, Side::Ask, 48, 10)).unwrap();
        let out = ex.submit(order(A, Side::Bid, 50, 10)).unwrap();
        assert_eq!(
            out.transactions,
            vec![Transaction {
                time: 0,
                contract: C1,
                price: m(48),
                volume: 10,
                buyer: A,
                seller: B
            }]
        );
        assert_eq!(ex.account(A).unwrap().cash(), m(30_000 - 480));
        assert_eq!(ex.account(A).unwrap().holdings(C1), 10);
        assert_eq!(ex.account(B).unwrap().cash(), m(30_480));
        assert_eq!(ex.account(B).unwrap().reserved_holdings(C1), 0);
        assert!(ex.book(C1).unwrap().is_empty());
    }

    #[test]
    fn walks_price_levels_in_order() {
        let mut ex = two_players(10);
        ex.submit(order(B, Side::Ask, 48, 5)).unwrap();
        ex.submit(order(B, Side::Ask, 49, 5)).unwrap();
        let out = ex.submit(order(A, Side::Bid, 49, 8)).unwrap();
        let fills: Vec<(Money, u64)> = out.transactions.iter().map(|t| (t.price, t.volume)).collect();
        assert_eq!(fills, vec![(m(48), 5), (m(49), 3)]);
        assert_eq!(out.rested, 0);
        assert_eq!(ex.book(C1).unwrap().best_bid(), None);
        assert_eq!(ex.book(C1).unwrap().best_ask(), Some(m(49)));
        assert_eq!(ex.account(B).unwrap().reserved_holdings(C1), 2);
    }

    #[test]
    fn fifo_within_price_level() {
        let mut ex = two_players(10);
        let c = PlayerId(3);
        ex.register_with(c, ENDOWMENT, &[(C1, 10)]).unwrap();
        ex.submit(order(B, Side::Ask, 48, 5)).unwrap();
        ex.submit(order(c, Side::Ask, 48, 5)).unwrap();
        let out = ex.submit(order(A, Side::Bid, 48, 6)).unwrap();
        let sellers: Vec<(PlayerId, u64)> = out.transactions.iter().map(|t| (t.seller, t.volume)).collect();
        assert_eq!(sellers, vec![(B, 5), (c, 1)]);
    }

    #[test]
    fn resting_bid_hit_by_ask_releases_reservation() {
        let mut ex = two_players(10);
        ex.submit(order(A, Side::Bid, 50, 10)).unwrap();
        let out = ex.submit(order(B, Side::Ask, 45, 4)).unwrap();
        assert_eq!(out.transactions[0].price, m(50));
        let a = ex.account(A).unwrap();
        assert_eq!(a.cash(), m(30_000 - 200));
        assert_eq!(a.reserved_cash(), m(300));
    }

    #[test]
    fn funds_and_holdings_checks() {
        let mut ex = two_players(3);
        assert_eq!(
            ex.submit(order(A, Side::Bid, 3001, 10)),
            Err(ExchangeError::InsufficientFunds)
        );
        assert_eq!(
            ex.submit(order(B, Side::Ask, 40, 4)),
            Err(ExchangeError::InsufficientHoldings)
        );
        ex.submit(order(B, Side::Ask, 40, 3)).unwrap();
        // holdings are reserved while the ask rests
        assert_eq!(
            ex.submit(order(B, Side::Ask, 41, 1)),
            Err(ExchangeError::InsufficientHoldings)
        );
        assert_eq!(
            ex.submit(order(A, Side::Bid, 0, 1)),
            Err(ExchangeError::NonPositivePriceOrVolume)
        );
        assert_eq!(
            ex.submit(order(A, Side::Bid, 10, 0)),
            Err(ExchangeError::NonPositivePriceOrVolume)
        );
        let mut bad = order(A, Side::Bid, 10, 1);
        bad.contract = ContractId(9);
        assert_eq!(ex.submit(bad), Err(ExchangeError::UnknownContract(ContractId(9))));
    }

    #[test]
    fn cancel_releases_reservations() {
        let mut ex = two_players(10);
        let id = ex.submit(order(A, Side::Bid, 50, 10)).unwrap().order_id;
        ex.cancel(A, id).unwrap();
        assert_eq!(ex.account(A).unwrap().reserved_cash(), Money::ZERO);
        assert_eq!(ex.cancel(A, id), Err(ExchangeError::UnknownOrder));
    }

    #[test]
    fn cancel_after_partial_fill_releases_remaining() {
        let mut ex = two_players(10);
        let id = ex.submit(order(A, Side::Bid, 50, 10)).unwrap().order_id;
        ex.submit(order(B, Side::Ask, 50, 4)).unwrap();
        let before = ex.account(A).unwrap().reserved_cash();
        assert_eq!(before, m(300));
        ex.cancel(A, id).unwrap();
        assert_eq!(before - ex.account(A).unwrap().reserved_cash(), m(50 * 6));
    }

    #[test]
    fn cancel_by_other_player_rejected() {
        let mut ex = two_players(10);
        let id = ex.submit(order(A, Side::Bid, 50, 10)).unwrap().order_id;
        assert_eq!(ex.cancel(B, id), Err(ExchangeError::NotOwner));
        assert_eq!(ex.cancel(A, OrderId(999)), Err(ExchangeError::UnknownOrder));
    }

    #[test]
    fn self_trades_are_skipped() {
        let mut ex = two_players(10);
        ex.register_with(PlayerId(3), ENDOWMENT, &[(C1, 10)]).unwrap();
        ex.submit(order(B, Side::Ask, 48, 5)).unwrap();
        ex.submit(order(PlayerId(3), Side::Ask, 49, 5)).unwrap();
        // B's own bid skips B's ask and fills against player 3
        let out = ex.submit(order(B, Side::Bid, 49, 5)).unwrap();
        assert_eq!(out.transactions.len(), 1);
        assert_eq!(out.transactions[0].seller, PlayerId(3));
        assert_eq!(out.rested, 0);
        // a residual that would sit across B's own ask is dropped
        let out = ex.submit(order(B, Side::Bid, 48, 2)).unwrap();
        assert!(out.transactions.is_empty());
        assert_eq!(out.self_cross_dropped, 2);
        let book = ex.book(C1).unwrap();
        assert!(book.best_bid().is_none_or(|b| b < book.best_ask().unwrap()));
    }

    #[test]
    fn settlement_examples() {
        let mut ex = two_players(10);
        ex.register(PlayerId(3)).unwrap();
        ex.submit(order(B, Side::Ask, 48, 10)).unwrap();
        ex.submit(order(A, Side::Bid, 48, 10)).unwrap();
        assert_eq!(
            ex.settle(&[m(50), m(40)]),
            Err(ExchangeError::PricesDoNotSumTo100)
        );
        let wealth = ex.settle(&[m(48), m(52)]).unwrap();
        assert_eq!(wealth[&A], m(30_000));
        assert_eq!(wealth[&PlayerId(3)], m(30_000));
        // B started with 10 units worth 480.00 and sold them for 480.00
        assert_eq!(wealth[&B], m(30_480));
        assert_eq!(ex.contracts()[0].liquidation_price(), Some(m(48)));
        assert_eq!(ex.settle(&[m(48), m(52)]), Err(ExchangeError::AlreadySettled));
    }

    #[test]
    fn settlement_values_holdings() {
        let mut ex = two_players(10);
        ex.submit(order(B, Side::Ask, 48, 10)).unwrap();
        ex.submit(order(A, Side::Bid, 48, 10)).unwrap();
        assert_eq!(ex.account(A).unwrap().cash(), m(29_520));
        let wealth = ex.settle(&[m(45), m(55)]).unwrap();
        assert_eq!(wealth[&A], m(29_970));
    }

    #[test]
    fn settlement_requires_empty_books() {
        let mut ex = two_players(10);
        ex.submit(order(A, Side::Bid, 10, 1)).unwrap();
        assert_eq!(ex.settle(&[m(50), m(50)]), Err(ExchangeError::OpenOrdersRemain));
        assert_eq!(ex.cancel_all(), 1);
        assert!(ex.settle(&[m(50), m(50)]).is_ok());
    }

    #[test]
    fn ranking_sorts_by_wealth_then_id() {
        let wealth: BTreeMap<PlayerId, Money> =
            [(PlayerId(1), m(31_000)), (PlayerId(2), m(29_000)), (PlayerId(3), m(30_000))].into();
        let order: Vec<u32> = rank_players(&wealth).iter().map(|r| r.player.0).collect();
        assert_eq!(order, vec![1, 3, 2]);

        let equal: BTreeMap<PlayerId, Money> = (1..=5).rev().map(|i| (PlayerId(i), m(30_000))).collect();
        let ranked = rank_players(&equal);
        assert_eq!(ranked.iter().map(|r| r.player.0).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
        assert_eq!(ranked[0].rank, 1);

        let many: BTreeMap<PlayerId, Money> = (0..628).map(|i| (PlayerId(i), m(30_000))).collect();
        assert_eq!(rank_players(&many).len(), 628);
    }

    #[derive(Debug, Clone)]
    enum Action {
        Submit { player: u32, contract: u16, bid: bool, price: i64, volume: u64 },
        Cancel { player: u32, nth: usize },
    }

    fn action() -> impl Strategy<Value = Action> {
        prop_oneof![
            4 => (0u32..4, 1u16..=2, any::<bool>(), 4000i64..6000, 1u64..20).prop_map(
                |(player, contract, bid, price, volume)| Action::Submit { player, contract, bid, price, volume }
            ),
            1 => (0u32..4, 0usize..8).prop_map(|(player, nth)| Action::Cancel { player, nth }),
        ]
    }

    fn replay(actions: &[Action]) -> (Exchange, Vec<Transaction>) {
        let mut ex = Exchange::new(["x", "y"]);
        for p in 0..4 {
            ex.register_with(PlayerId(p), ENDOWMENT, &[(ContractId(1), 30), (ContractId(2), 30)])
                .unwrap();
        }
        let mut txs = Vec::new();
        let mut ids = Vec::new();
        for (t, a) in actions.iter().enumerate() {
            match *a {
                Action::Submit { player, contract, bid, price, volume } => {
                    let req = OrderRequest {
                        player: PlayerId(player),
                        contract: ContractId(contract),
                        side: if bid { Side::Bid } else { Side::Ask },
                        price: Money::from_cents(price),
                        volume,
                        time: t as u64,
                    };
                    if let Ok(out) = ex.submit(req) {
                        ids.push(out.order_id);
                        txs.extend(out.transactions);
                    }
                }
                Action::Cancel { player, nth } => {
                    if let Some(id) = ids.get(nth) {
                        let _ = ex.cancel(PlayerId(player), *id);
                    }
                }
            }
            for c in ex.contract_ids() {
                let book = ex.book(c).unwrap();
                if let (Some(b), Some(a)) = (book.best_bid(), book.best_ask()) {
                    assert!(b < a, "crossed book at rest");
                }
            }
        }
        (ex, txs)
    }

    proptest! {
        #[test]
        fn conservation_and_account_invariants(actions in proptest::collection::vec(action(), 0..80)) {
            let (ex, txs) = replay(&actions);
            prop_assert_eq!(ex.total_cash(), m(4 * 30_000));
            prop_assert_eq!(ex.total_holdings(ContractId(1)), 120);
            prop_assert_eq!(ex.total_holdings(ContractId(2)), 120);
            for acc in ex.accounts() {
                prop_assert!(!acc.cash().is_negative());
                prop_assert!(acc.reserved_cash() <= acc.cash());
                for c in ex.contract_ids() {
                    prop_assert!(acc.reserved_holdings(c) <= acc.holdings(c));
                }
            }
            for tx in &txs {
                prop_assert_ne!(tx.buyer, tx.seller);
            }
            let (_, again) = replay(&actions);
            prop_assert_eq!(txs, again);
        }

        #[test]
        fn settlement_is_zero_sum(actions in proptest::collection::vec(action(), 0..60), split in 0i64..=10_000) {
            let (mut ex, _) = replay(&actions);
            ex.cancel_all();
            let prices = [Money::from_cents(split), Money::from_cents(10_000 - split)];
            let wealth = ex.settle(&prices).unwrap();
            let start_value = ENDOWMENT + prices[0].checked_mul(30).unwrap() + prices[1].checked_mul(30).unwrap();
            let total: Money = wealth.values().map(|w| *w - start_value).sum();
            prop_assert_eq!(total, Money::ZERO);
        }
    }
}
