//! JSON scenario files.
//!
//! Every field except `schema_version` is optional and falls back to the
//! default scenario. Money amounts are decimal strings with at most two
//! fractional digits.

use std::path::Path;

use cashflow_core::agents::{
    AgentGroup, AgentKind, AgentParams, MarketMakerParams, RegistrationSchedule, Scenario, WaitingTime,
};
use cashflow_core::Money;
use serde::{Deserialize, Serialize};

use crate::LabError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_days: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contracts: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome_percentages: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registration: Option<RegistrationFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent_mix: Option<Vec<AgentGroupFile>>,
    /// `null` disables the market maker; a missing key keeps the default one.
    #[serde(default, with = "explicit_null", skip_serializing_if = "Option::is_none")]
    pub market_maker: Option<Option<MarketMakerFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent_inventory: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
}

mod explicit_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<T: Serialize, S: Serializer>(value: &Option<Option<T>>, s: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(inner) => inner.serialize(s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, T: Deserialize<'de>, D: Deserializer<'de>>(d: D) -> Result<Option<Option<T>>, D::Error> {
        Option::<T>::deserialize(d).map(Some)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistrationFile {
    pub final_count: u32,
    #[serde(default = "one")]
    pub exponent: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKindFile {
    ZeroIntelligence,
    NoisyFundamentalist,
    Inactive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentGroupFile {
    pub kind: AgentKindFile,
    pub fraction: f64,
    #[serde(default)]
    pub params: AgentParamsFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WaitingFile {
    Fixed { seconds: u64 },
    PowerLaw { exponent: f64, floor: f64, cap: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentParamsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waiting: Option<WaitingFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_volume: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_band: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valuation_drift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valuation_noise: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub take_probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketMakerFile {
    pub cash: String,
    pub inventory: u64,
    pub half_spread: String,
    pub step: String,
    pub levels: u32,
    pub volume_per_level: u64,
    #[serde(default = "one")]
    pub inventory_exponent: f64,
}

fn money(field: &'static str, s: &str) -> Result<Money, LabError> {
    s.parse()
        .map_err(|e| LabError::InvalidScenario(format!("{field}: {s:?}: {e}")))
}

impl From<WaitingFile> for WaitingTime {
    fn from(w: WaitingFile) -> Self {
        match w {
            WaitingFile::Fixed { seconds } => WaitingTime::Fixed(seconds),
            WaitingFile::PowerLaw { exponent, floor, cap } => WaitingTime::PowerLaw { exponent, floor, cap },
        }
    }
}

impl From<WaitingTime> for WaitingFile {
    fn from(w: WaitingTime) -> Self {
        match w {
            WaitingTime::Fixed(seconds) => WaitingFile::Fixed { seconds },
            WaitingTime::PowerLaw { exponent, floor, cap } => WaitingFile::PowerLaw { exponent, floor, cap },
        }
    }
}

impl ScenarioFile {
    /// Overlays the file on the default scenario and validates the result.
    pub fn resolve(&self) -> Result<Scenario, LabError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(LabError::InvalidScenario(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let mut s = Scenario::default();
        if let Some(d) = self.duration_days {
            s.duration_days = d;
        }
        if let Some(c) = &self.contracts {
            s.contracts = c.clone();
        }
        if let Some(p) = &self.outcome_percentages {
            s.outcome_percentages = p
                .iter()
                .map(|x| money("outcome_percentages", x))
                .collect::<Result<_, _>>()?;
        }
        if let Some(r) = &self.registration {
            s.registration = RegistrationSchedule {
                final_count: r.final_count,
                exponent: r.exponent,
            };
        }
        if let Some(mix) = &self.agent_mix {
            s.agent_mix = mix.iter().map(AgentGroupFile::resolve).collect();
        }
        if let Some(mm) = &self.market_maker {
            s.market_maker = match mm {
                None => None,
                Some(m) => Some(MarketMakerParams {
                    cash: money("market_maker.cash", &m.cash)?,
                    inventory: m.inventory,
                    half_spread: money("market_maker.half_spread", &m.half_spread)?,
                    step: money("market_maker.step", &m.step)?,
                    levels: m.levels,
                    volume_per_level: m.volume_per_level,
                    inventory_exponent: m.inventory_exponent,
                }),
            };
        }
        if let Some(units) = self.agent_inventory {
            s.agent_inventory = units;
        }
        if let Some(seed) = self.rng_seed {
            s.rng_seed = seed;
        }
        s.validate().map_err(|e| LabError::InvalidScenario(e.to_string()))?;
        Ok(s)
    }

    /// Fully spelled-out file for `scenario`.
    pub fn from_scenario(s: &Scenario) -> Self {
        ScenarioFile {
            schema_version: SCHEMA_VERSION,
            duration_days: Some(s.duration_days),
            contracts: Some(s.contracts.clone()),
            outcome_percentages: Some(s.outcome_percentages.iter().map(Money::to_string).collect()),
            registration: Some(RegistrationFile {
                final_count: s.registration.final_count,
                exponent: s.registration.exponent,
            }),
            agent_mix: Some(
                s.agent_mix
                    .iter()
                    .map(|g| AgentGroupFile {
                        kind: match g.kind {
                            AgentKind::ZeroIntelligence => AgentKindFile::ZeroIntelligence,
                            AgentKind::NoisyFundamentalist => AgentKindFile::NoisyFundamentalist,
                            AgentKind::Inactive => AgentKindFile::Inactive,
                        },
                        fraction: g.fraction,
                        params: AgentParamsFile {
                            waiting: Some(g.params.waiting.into()),
                            max_volume: Some(g.params.max_volume),
                            price_band: Some(g.params.price_band),
                            valuation_drift: Some(g.params.valuation_drift),
                            valuation_noise: Some(g.params.valuation_noise),
                            take_probability: Some(g.params.take_probability),
                        },
                    })
                    .collect(),
            ),
            market_maker: Some(s.market_maker.as_ref().map(|m| MarketMakerFile {
                cash: m.cash.to_string(),
                inventory: m.inventory,
                half_spread: m.half_spread.to_string(),
                step: m.step.to_string(),
                levels: m.levels,
                volume_per_level: m.volume_per_level,
                inventory_exponent: m.inventory_exponent,
            })),
            agent_inventory: Some(s.agent_inventory),
            rng_seed: Some(s.rng_seed),
        }
    }
}

impl AgentGroupFile {
    fn resolve(&self) -> AgentGroup {
        let d = AgentParams::default();
        let p = &self.params;
        AgentGroup {
            kind: match self.kind {
                AgentKindFile::ZeroIntelligence => AgentKind::ZeroIntelligence,
                AgentKindFile::NoisyFundamentalist => AgentKind::NoisyFundamentalist,
                AgentKindFile::Inactive => AgentKind::Inactive,
            },
            fraction: self.fraction,
            params: AgentParams {
                waiting: p.waiting.map_or(d.waiting, WaitingTime::from),
                max_volume: p.max_volume.unwrap_or(d.max_volume),
                price_band: p.price_band.unwrap_or(d.price_band),
                valuation_drift: p.valuation_drift.unwrap_or(d.valuation_drift),
                valuation_noise: p.valuation_noise.unwrap_or(d.valuation_noise),
                take_probability: p.take_probability.unwrap_or(d.take_probability),
            },
        }
    }
}

pub fn parse(text: &str) -> Result<Scenario, LabError> {
    let file: ScenarioFile =
        serde_json::from_str(text).map_err(|e| LabError::InvalidScenario(e.to_string()))?;
    file.resolve()
}

pub fn load(path: &Path) -> Result<Scenario, LabError> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    parse(&text)
}

pub fn to_json(s: &Scenario) -> String {
    let mut text = serde_json::to_string_pretty(&ScenarioFile::from_scenario(s)).expect("scenario serializes");
    text.push('\n');
    text
}
