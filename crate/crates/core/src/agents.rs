//! Synthetic trader populations that drive an [`Exchange`] and record a
//! [`Ledger`].
//!
//! Agents act one order at a time. Waiting times between actions follow a
//! truncated power law, so the activity of a single agent is bursty. An
//! optional market maker owns the initial contract supply and keeps a ladder
//! of quotes around a price that rises as its inventory of a contract shrinks.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Reverse;

use libm::{exp, log, pow};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::exchange::{
    rank_players, ContractId, Exchange, ExchangeError, OrderId, OrderRequest, PlayerId, RankedPlayer, Side,
    ENDOWMENT, LIQUIDATION_TOTAL,
};
use crate::ledger::{Ledger, LedgerError, SECONDS_PER_DAY};
use crate::money::Money;

/// Player id reserved for the market maker; agents are numbered from 1.
pub const MARKET_MAKER: PlayerId = PlayerId(0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("duration must be at least one day")]
    NoDays,
    #[error("need at least one contract")]
    NoContracts,
    #[error("{found} outcome percentages for {expected} contracts")]
    OutcomeCount { expected: usize, found: usize },
    #[error("outcome percentages sum to {0}, not 100.00")]
    OutcomeSum(Money),
    #[error("agent fractions sum to {0}, not 1")]
    FractionSum(f64),
    #[error("invalid agent parameter: {0}")]
    InvalidParameter(&'static str),
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Exchange(#[from] ExchangeError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AgentKind {
    /// Random side, price uniform in a band around the last trade.
    ZeroIntelligence,
    /// Keeps a drifting private valuation and trades toward it.
    NoisyFundamentalist,
    /// Registers and never trades.
    Inactive,
}

/// Time between two actions of one agent, in whole seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WaitingTime {
    Fixed(u64),
    /// Density `∝ t^-exponent` on `[floor, cap]`, rounded down to seconds.
    PowerLaw { exponent: f64, floor: f64, cap: f64 },
}

impl WaitingTime {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            WaitingTime::Fixed(t) => t,
            WaitingTime::PowerLaw { exponent, floor, cap } => {
                truncated_power_law(rng.gen(), exponent, floor, cap) as u64
            }
        }
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        match *self {
            WaitingTime::Fixed(0) => Err(ScenarioError::InvalidParameter("fixed waiting time must be positive")),
            WaitingTime::Fixed(_) => Ok(()),
            WaitingTime::PowerLaw { exponent, floor, cap } => {
                if exponent.is_finite() && floor >= 1.0 && cap.is_finite() && cap > floor {
                    Ok(())
                } else {
                    Err(ScenarioError::InvalidParameter("power-law waiting time needs 1 <= floor < cap"))
                }
            }
        }
    }
}

/// Inverse CDF of the density `∝ x^-γ` on `[lo, hi]`.
pub fn truncated_power_law(u: f64, gamma: f64, lo: f64, hi: f64) -> f64 {
    if (gamma - 1.0).abs() < 1e-12 {
        return lo * exp(u * log(hi / lo));
    }
    let a = 1.0 - gamma;
    let (l, h) = (pow(lo, a), pow(hi, a));
    pow(l + u * (h - l), 1.0 / a).clamp(lo, hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentParams {
    pub waiting: WaitingTime,
    /// Largest volume of a single order.
    pub max_volume: u64,
    /// Zero-intelligence prices are drawn from `last × (1 ± price_band)`.
    pub price_band: f64,
    /// Valuation update `v ← a v + η` with `a ∈ 1 ± valuation_drift` and
    /// `η ∈ ± valuation_noise`, both uniform.
    pub valuation_drift: f64,
    pub valuation_noise: f64,
    /// Probability that an order is priced at the opposite best quote.
    pub take_probability: f64,
}

impl Default for AgentParams {
    fn default() -> Self {
        AgentParams {
            waiting: WaitingTime::PowerLaw {
                exponent: 1.3,
                floor: 120.0,
                cap: 172_800.0,
            },
            max_volume: 20,
            price_band: 0.1,
            valuation_drift: 0.02,
            valuation_noise: 0.5,
            take_probability: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentGroup {
    pub kind: AgentKind,
    pub fraction: f64,
    pub params: AgentParams,
}

/// Cumulative registrations `round(final_count × (day / days)^exponent)`;
/// exponent 1 is linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegistrationSchedule {
    pub final_count: u32,
    pub exponent: f64,
}

impl RegistrationSchedule {
    pub fn cumulative(&self, day: u32, duration_days: u32) -> u32 {
        if day == 0 {
            return 0;
        }
        if day >= duration_days {
            return self.final_count;
        }
        let frac = pow(f64::from(day) / f64::from(duration_days), self.exponent);
        let n = (f64::from(self.final_count) * frac + 0.5) as u32;
        n.min(self.final_count)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketMakerParams {
    pub cash: Money,
    /// Units of every contract held at the start.
    pub inventory: u64,
    /// Distance from the reference price to the innermost quote.
    pub half_spread: Money,
    /// Price step between ladder levels.
    pub step: Money,
    pub levels: u32,
    pub volume_per_level: u64,
    /// Quote center is `100 / contracts × (inventory / held)^inventory_exponent`.
    pub inventory_exponent: f64,
}

impl Default for MarketMakerParams {
    fn default() -> Self {
        MarketMakerParams {
            cash: Money::from_units(1_000_000),
            inventory: 200_000,
            half_spread: Money::from_cents(100),
            step: Money::from_cents(50),
            levels: 4,
            volume_per_level: 25,
            inventory_exponent: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub duration_days: u32,
    pub contracts: Vec<String>,
    /// Liquidation prices; must sum to exactly 100.00.
    pub outcome_percentages: Vec<Money>,
    pub registration: RegistrationSchedule,
    pub agent_mix: Vec<AgentGroup>,
    pub market_maker: Option<MarketMakerParams>,
    /// Units of every contract credited to each registrant on sign-up.
    pub agent_inventory: u64,
    pub rng_seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        let pct = |c: i64| Money::from_cents(c);
        Scenario {
            duration_days: 30,
            contracts: ["A", "B", "C", "D", "E", "INVALID"].iter().map(|s| String::from(*s)).collect(),
            outcome_percentages: [pct(3412), pct(2871), pct(1794), pct(1093), pct(577), pct(253)].to_vec(),
            registration: RegistrationSchedule {
                final_count: 628,
                exponent: 0.8,
            },
            agent_mix: [
                AgentGroup {
                    kind: AgentKind::ZeroIntelligence,
                    fraction: 0.43,
                    params: AgentParams::default(),
                },
                AgentGroup {
                    kind: AgentKind::NoisyFundamentalist,
                    fraction: 0.35,
                    params: AgentParams::default(),
                },
                AgentGroup {
                    kind: AgentKind::Inactive,
                    fraction: 0.22,
                    params: AgentParams::default(),
                },
            ]
            .to_vec(),
            market_maker: Some(MarketMakerParams::default()),
            agent_inventory: 0,
            rng_seed: 20_061_001,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.duration_days == 0 {
            return Err(ScenarioError::NoDays);
        }
        if self.contracts.is_empty() {
            return Err(ScenarioError::NoContracts);
        }
        if self.outcome_percentages.len() != self.contracts.len() {
            return Err(ScenarioError::OutcomeCount {
                expected: self.contracts.len(),
                found: self.outcome_percentages.len(),
            });
        }
        let sum: Money = self.outcome_percentages.iter().copied().sum();
        if sum != LIQUIDATION_TOTAL || self.outcome_percentages.iter().any(|p| p.is_negative()) {
            return Err(ScenarioError::OutcomeSum(sum));
        }
        if !self.agent_mix.is_empty() {
            let total: f64 = self.agent_mix.iter().map(|g| g.fraction).sum();
            if (total - 1.0).abs() > 1e-9 || self.agent_mix.iter().any(|g| !(g.fraction >= 0.0)) {
                return Err(ScenarioError::FractionSum(total));
            }
        } else if self.registration.final_count > 0 {
            return Err(ScenarioError::FractionSum(0.0));
        }
        if !(self.registration.exponent > 0.0 && self.registration.exponent.is_finite()) {
            return Err(ScenarioError::InvalidParameter("registration exponent must be positive"));
        }
        for g in &self.agent_mix {
            let p = &g.params;
            p.waiting.validate()?;
            if p.max_volume == 0 {
                return Err(ScenarioError::InvalidParameter("max_volume must be positive"));
            }
            if !(0.0..1.0).contains(&p.price_band) || !(0.0..1.0).contains(&p.valuation_drift) {
                return Err(ScenarioError::InvalidParameter("price_band and valuation_drift must lie in [0, 1)"));
            }
            if !(p.valuation_noise >= 0.0) || !(0.0..=1.0).contains(&p.take_probability) {
                return Err(ScenarioError::InvalidParameter("valuation_noise or take_probability out of range"));
            }
        }
        if let Some(mm) = &self.market_maker {
            if mm.cash.is_negative()
                || mm.levels == 0
                || !mm.step.is_positive()
                || mm.half_spread.is_negative()
                || !(mm.inventory_exponent >= 0.0 && mm.inventory_exponent.is_finite())
            {
                return Err(ScenarioError::InvalidParameter("market maker needs levels, a positive step and cash"));
            }
        }
        Ok(())
    }

    /// Group of the `index`-th registrant (0-based). Positions follow a
    /// golden-ratio sequence over the cumulative fractions, so groups are
    /// interleaved in registration order.
    pub fn kind_of(&self, index: u32) -> usize {
        const PHI: f64 = 0.618_033_988_749_894_8;
        let x = (f64::from(index) + 0.5) * PHI;
        let position = x - libm::floor(x);
        let mut acc = 0.0;
        for (g, group) in self.agent_mix.iter().enumerate() {
            acc += group.fraction;
            if position < acc {
                return g;
            }
        }
        self.agent_mix.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub player: PlayerId,
    pub kind: AgentKind,
    pub group: usize,
    pub valuations: BTreeMap<ContractId, Money>,
    pub next_action_time: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimStats {
    pub actions: u64,
    pub orders_submitted: u64,
    pub orders_downsized: u64,
    pub orders_skipped: u64,
    pub self_cross_dropped: u64,
    pub market_maker_quotes: u64,
    pub transactions: u64,
}

/// Running simulation: exchange, agents, event queue and ledger.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    exchange: Exchange,
    ledger: Ledger,
    agents: BTreeMap<PlayerId, AgentState>,
    queue: BinaryHeap<Reverse<(u64, PlayerId)>>,
    rng: ChaCha8Rng,
    now: u64,
    registered_days: u32,
    registrations: Vec<(PlayerId, u32)>,
    mm_orders: BTreeMap<ContractId, Vec<OrderId>>,
    last_price: BTreeMap<ContractId, Money>,
    /// Units of each contract created outside trading.
    seeded_units: u64,
    stats: SimStats,
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub ledger: Ledger,
    /// `(player, registration day)` in registration order.
    pub registrations: Vec<(PlayerId, u32)>,
    /// Cash handed out at registration; trading never changes the total.
    pub initial_cash: Money,
    /// Seeded contract units valued at their liquidation prices.
    pub initial_inventory_value: Money,
    pub final_wealth: BTreeMap<PlayerId, Money>,
    pub ranking: Vec<RankedPlayer>,
    pub stats: SimStats,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self, ScenarioError> {
        scenario.validate()?;
        let mut exchange = Exchange::new(scenario.contracts.iter().cloned());
        let mut mm_orders = BTreeMap::new();
        let mut seeded_units = 0;
        if let Some(mm) = &scenario.market_maker {
            seeded_units = mm.inventory;
            let inventory: Vec<(ContractId, u64)> = exchange.contract_ids().map(|c| (c, mm.inventory)).collect();
            exchange
                .register_with(MARKET_MAKER, mm.cash, &inventory)
                .expect("fresh exchange accepts the market maker");
            for (c, _) in inventory {
                mm_orders.insert(c, Vec::new());
            }
        }
        let ledger = Ledger::new(scenario.duration_days);
        let rng = ChaCha8Rng::seed_from_u64(scenario.rng_seed);
        Ok(Simulation {
            scenario,
            exchange,
            ledger,
            agents: BTreeMap::new(),
            queue: BinaryHeap::new(),
            rng,
            now: 0,
            registered_days: 0,
            registrations: Vec::new(),
            mm_orders,
            last_price: BTreeMap::new(),
            seeded_units,
            stats: SimStats::default(),
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn exchange(&self) -> &Exchange {
        &self.exchange
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn agents(&self) -> impl Iterator<Item = &AgentState> {
        self.agents.values()
    }

    pub fn stats(&self) -> SimStats {
        self.stats
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn end_time(&self) -> u64 {
        u64::from(self.scenario.duration_days) * SECONDS_PER_DAY
    }

    /// Registers the players joining on `day`, at the start of that day.
    /// Days must be registered in order; repeated calls are no-ops.
    pub fn registration_process(&mut self, day: u32) -> Vec<PlayerId> {
        let mut fresh = Vec::new();
        while self.registered_days < day.min(self.scenario.duration_days) {
            let d = self.registered_days + 1;
            let before = self.scenario.registration.cumulative(d - 1, self.scenario.duration_days);
            let after = self.scenario.registration.cumulative(d, self.scenario.duration_days);
            let start = u64::from(d - 1) * SECONDS_PER_DAY;
            for index in before..after {
                let player = PlayerId(index + 1);
                self.open_account(player).expect("player ids are fresh");
                let group = self.scenario.kind_of(index);
                self.add_agent(player, group, start);
                self.registrations.push((player, d));
                fresh.push(player);
            }
            self.registered_days = d;
        }
        fresh
    }

    fn open_account(&mut self, player: PlayerId) -> Result<(), ExchangeError> {
        let units = self.scenario.agent_inventory;
        let inventory: Vec<(ContractId, u64)> = self.exchange.contract_ids().map(|c| (c, units)).collect();
        self.exchange.register_with(player, ENDOWMENT, &inventory)?;
        self.seeded_units += units;
        Ok(())
    }

    fn add_agent(&mut self, player: PlayerId, group: usize, start: u64) {
        let group_cfg = &self.scenario.agent_mix[group];
        let kind = group_cfg.kind;
        let mut valuations = BTreeMap::new();
        if kind == AgentKind::NoisyFundamentalist {
            let ids: Vec<ContractId> = self.exchange.contract_ids().collect();
            for (c, outcome) in ids.into_iter().zip(self.scenario.outcome_percentages.clone()) {
                let prior = outcome.to_f64() * (0.5 + self.rng.gen::<f64>());
                valuations.insert(c, Money::from_f64_rounded(prior).clamp(Money::from_cents(1), LIQUIDATION_TOTAL));
            }
        }
        let next_action_time = if kind == AgentKind::Inactive {
            u64::MAX
        } else {
            start + group_cfg.params.waiting.sample(&mut self.rng)
        };
        if kind != AgentKind::Inactive {
            self.queue.push(Reverse((next_action_time, player)));
        }
        self.agents.insert(
            player,
            AgentState {
                player,
                kind,
                group,
                valuations,
                next_action_time,
            },
        );
    }

    /// Adds an agent outside the registration schedule, with its first action
    /// one waiting time after `start`.
    pub fn add_player(&mut self, player: PlayerId, group: usize, start: u64) -> Result<(), ExchangeError> {
        self.open_account(player)?;
        self.add_agent(player, group, start);
        Ok(())
    }

    /// Runs every action scheduled at or before `until` and returns the orders
    /// that reached the exchange.
    pub fn advance(&mut self, until: u64) -> Result<Vec<OrderRequest>, SimulationError> {
        let mut emitted = Vec::new();
        while let Some(&Reverse((time, player))) = self.queue.peek() {
            if time > until {
                break;
            }
            self.queue.pop();
            self.now = time;
            self.stats.actions += 1;
            if let Some(req) = self.act(player, time)? {
                emitted.push(req);
            }
            let group = self.agents[&player].group;
            let wait = self.scenario.agent_mix[group].params.waiting.sample(&mut self.rng).max(1);
            let next = time + wait;
            self.agents.get_mut(&player).expect("queued agents exist").next_action_time = next;
            self.queue.push(Reverse((next, player)));
        }
        self.now = self.now.max(until);
        Ok(emitted)
    }

    fn reference_price(&self, contract: ContractId) -> Money {
        self.last_price.get(&contract).copied().unwrap_or_else(|| {
            let n = self.scenario.contracts.len() as i64;
            Money::from_cents(LIQUIDATION_TOTAL.cents() / n)
        })
    }

    fn act(&mut self, player: PlayerId, time: u64) -> Result<Option<OrderRequest>, SimulationError> {
        let kind = self.agents[&player].kind;
        if kind == AgentKind::Inactive {
            return Ok(None);
        }
        let zi_side = if self.rng.gen::<bool>() { Side::Bid } else { Side::Ask };
        let contract = self.pick_contract(player, kind == AgentKind::ZeroIntelligence && zi_side == Side::Ask);
        self.refresh_market_maker(contract, time)?;
        let agent = &self.agents[&player];
        let params = self.scenario.agent_mix[agent.group].params.clone();
        let reference = self.reference_price(contract);
        let (side, price) = match agent.kind {
            AgentKind::Inactive => unreachable!("inactive agents return early"),
            AgentKind::ZeroIntelligence => {
                let factor = 1.0 + params.price_band * (2.0 * self.rng.gen::<f64>() - 1.0);
                (zi_side, Money::from_f64_rounded(reference.to_f64() * factor))
            }
            AgentKind::NoisyFundamentalist => {
                let v = agent.valuations[&contract].to_f64();
                let a = 1.0 + params.valuation_drift * (2.0 * self.rng.gen::<f64>() - 1.0);
                let eta = params.valuation_noise * (2.0 * self.rng.gen::<f64>() - 1.0);
                let updated = Money::from_f64_rounded(a * v + eta).clamp(Money::from_cents(1), LIQUIDATION_TOTAL);
                self.agents
                    .get_mut(&player)
                    .expect("acting agent exists")
                    .valuations
                    .insert(contract, updated);
                let u = self.rng.gen::<f64>();
                let (r, v) = (reference.to_f64(), updated.to_f64());
                if updated > reference {
                    (Side::Bid, Money::from_f64_rounded(r + u * (v - r)))
                } else {
                    (Side::Ask, Money::from_f64_rounded(r - u * (r - v)))
                }
            }
        };
        let book = self.exchange.book(contract).expect("contract exists");
        let take = self.rng.gen::<f64>() < params.take_probability;
        let price = match (take, side) {
            (true, Side::Bid) => book.best_ask().unwrap_or(price),
            (true, Side::Ask) => book.best_bid().unwrap_or(price),
            _ => price,
        }
        .clamp(Money::from_cents(1), LIQUIDATION_TOTAL);
        let wanted = self.rng.gen_range(1..=params.max_volume);
        let account = self.exchange.account(player).expect("agents are registered");
        let affordable = match side {
            Side::Bid => (account.available_cash().cents() / price.cents()).max(0) as u64,
            Side::Ask => account.available_holdings(contract),
        };
        let volume = wanted.min(affordable);
        if volume == 0 {
            self.stats.orders_skipped += 1;
            return Ok(None);
        }
        if volume < wanted {
            self.stats.orders_downsized += 1;
        }
        let req = OrderRequest {
            player,
            contract,
            side,
            price,
            volume,
            time,
        };
        self.submit(req)?;
        self.stats.orders_submitted += 1;
        Ok(Some(req))
    }

    /// Uniform contract; sellers pick among the contracts they can deliver
    /// when they hold any.
    fn pick_contract(&mut self, player: PlayerId, selling: bool) -> ContractId {
        if selling {
            let account = self.exchange.account(player).expect("agents are registered");
            let held: Vec<ContractId> = self
                .exchange
                .contract_ids()
                .filter(|&c| account.available_holdings(c) > 0)
                .collect();
            if !held.is_empty() {
                return held[self.rng.gen_range(0..held.len())];
            }
        }
        let n = self.scenario.contracts.len();
        ContractId(self.rng.gen_range(1..=n as u16))
    }

    fn submit(&mut self, req: OrderRequest) -> Result<Option<OrderId>, SimulationError> {
        let outcome = self.exchange.submit(req)?;
        self.stats.self_cross_dropped += outcome.self_cross_dropped;
        for tx in outcome.transactions {
            self.last_price.insert(tx.contract, tx.price);
            self.ledger.append(tx)?;
            self.stats.transactions += 1;
        }
        Ok((outcome.rested > 0).then_some(outcome.order_id))
    }

    /// Replaces the market maker's ladder in `contract`. Quotes the market maker cannot fund are left out.
    fn refresh_market_maker(&mut self, contract: ContractId, time: u64) -> Result<(), SimulationError> {
        let Some(mm) = self.scenario.market_maker.clone() else {
            return Ok(());
        };
        for id in self.mm_orders.get_mut(&contract).map(core::mem::take).unwrap_or_default() {
            // quotes that were filled in the meantime are gone already
            let _ = self.exchange.cancel(MARKET_MAKER, id);
        }
        let held = self.exchange.account(MARKET_MAKER).map_or(0, |a| a.holdings(contract)).max(1);
        let base = LIQUIDATION_TOTAL.to_f64() / self.scenario.contracts.len() as f64;
        let center = base * pow(mm.inventory.max(1) as f64 / held as f64, mm.inventory_exponent);
        let reference = Money::from_f64_rounded(center).clamp(Money::from_cents(1), LIQUIDATION_TOTAL);
        let mut placed = Vec::new();
        for level in 0..mm.levels {
            let offset = mm.half_spread + Money::from_cents(mm.step.cents() * i64::from(level));
            let quotes = [(Side::Ask, reference + offset), (Side::Bid, reference - offset)];
            for (side, price) in quotes {
                if !price.is_positive() || price > LIQUIDATION_TOTAL {
                    continue;
                }
                let account = self.exchange.account(MARKET_MAKER).expect("market maker is registered");
                let room = match side {
                    Side::Bid => (account.available_cash().cents() / price.cents()) as u64,
                    Side::Ask => account.available_holdings(contract),
                };
                let volume = mm.volume_per_level.min(room);
                if volume == 0 {
                    continue;
                }
                let req = OrderRequest {
                    player: MARKET_MAKER,
                    contract,
                    side,
                    price,
                    volume,
                    time,
                };
                if let Some(id) = self.submit(req)? {
                    placed.push(id);
                }
                self.stats.market_maker_quotes += 1;
            }
        }
        self.mm_orders.insert(contract, placed);
        Ok(())
    }

    /// Runs the whole scenario and settles.
    pub fn run(mut self) -> Result<SimulationOutput, SimulationError> {
        for day in 1..=self.scenario.duration_days {
            self.registration_process(day);
            self.advance(u64::from(day) * SECONDS_PER_DAY - 1)?;
        }
        self.finish()
    }

    /// Cancels resting orders and settles at the outcome percentages.
    pub fn finish(mut self) -> Result<SimulationOutput, SimulationError> {
        let initial_cash = self.exchange.total_cash();
        let per_unit: Money = self.scenario.outcome_percentages.iter().copied().sum();
        let initial_inventory_value = per_unit.checked_mul(self.seeded_units).ok_or(ExchangeError::Overflow)?;
        self.exchange.cancel_all();
        let final_wealth = self.exchange.settle(&self.scenario.outcome_percentages)?;
        let ranking = rank_players(&final_wealth);
        Ok(SimulationOutput {
            ledger: self.ledger,
            registrations: self.registrations,
            initial_cash,
            initial_inventory_value,
            final_wealth,
            ranking,
            stats: self.stats,
        })
    }
}

/// Runs `scenario` from start to settlement.
pub fn simulate(scenario: &Scenario) -> Result<SimulationOutput, SimulationError> {
    Simulation::new(scenario.clone())?.run()
}
