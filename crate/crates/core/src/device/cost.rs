//! Operation counters, latency-step accounting, and the energy/latency cost model.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Primitive {
    Detect,
    Shift,
    Remove,
    Inject,
}

impl Primitive {
    pub const ALL: [Primitive; 4] = [
        Primitive::Detect,
        Primitive::Shift,
        Primitive::Remove,
        Primitive::Inject,
    ];

    fn bit(self) -> u8 {
        1 << self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            Primitive::Detect => "detect",
            Primitive::Shift => "shift",
            Primitive::Remove => "remove",
            Primitive::Inject => "inject",
        }
    }
}

/// Set of primitive kinds issued together in one latency step.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimitiveSet(u8);

impl PrimitiveSet {
    pub fn single(p: Primitive) -> Self {
        PrimitiveSet(p.bit())
    }

    pub fn insert(&mut self, p: Primitive) {
        self.0 |= p.bit();
    }

    pub fn contains(self, p: Primitive) -> bool {
        self.0 & p.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Primitive> {
        Primitive::ALL.into_iter().filter(move |p| self.contains(*p))
    }
}

impl fmt::Debug for PrimitiveSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_string())
    }
}

impl fmt::Display for PrimitiveSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.iter().map(Primitive::name).collect();
        f.write_str(&names.join("+"))
    }
}

impl std::str::FromStr for PrimitiveSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut set = PrimitiveSet::default();
        for part in s.split('+') {
            let p = match part {
                "detect" => Primitive::Detect,
                "shift" => Primitive::Shift,
                "remove" => Primitive::Remove,
                "inject" => Primitive::Inject,
                other => return Err(Error::Config(format!("unknown primitive `{other}`"))),
            };
            set.insert(p);
        }
        Ok(set)
    }
}

/// Per-primitive quantities (unit energy, unit latency, ...).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerPrimitive {
    pub detect: f64,
    pub shift: f64,
    pub remove: f64,
    pub inject: f64,
}

impl PerPrimitive {
    pub fn get(&self, p: Primitive) -> f64 {
        match p {
            Primitive::Detect => self.detect,
            Primitive::Shift => self.shift,
            Primitive::Remove => self.remove,
            Primitive::Inject => self.inject,
        }
    }

    pub fn set(&mut self, p: Primitive, v: f64) {
        match p {
            Primitive::Detect => self.detect = v,
            Primitive::Shift => self.shift = v,
            Primitive::Remove => self.remove = v,
            Primitive::Inject => self.inject = v,
        }
    }
}

/// Unit costs per primitive: energy in femtojoules, latency in nanoseconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub energy_fj: PerPrimitive,
    pub latency_ns: PerPrimitive,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            energy_fj: PerPrimitive {
                detect: 2.0,
                shift: 20.0,
                remove: 20.0,
                inject: 200.0,
            },
            latency_ns: PerPrimitive {
                detect: 0.1,
                shift: 0.5,
                remove: 0.8,
                inject: 1.0,
            },
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        for p in Primitive::ALL {
            for (what, v) in [("energy", self.energy_fj.get(p)), ("latency", self.latency_ns.get(p))] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::Config(format!(
                        "{} {what} must be strictly positive, got {v}",
                        p.name()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Latency of one step issuing every primitive in `kinds` in parallel.
    pub fn step_latency(&self, kinds: PrimitiveSet) -> f64 {
        kinds
            .iter()
            .map(|p| self.latency_ns.get(p))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepTally {
    pub steps: u64,
    /// Sum of parallel widths over those steps.
    pub width: u64,
}

/// Latency steps, tallied by the set of primitives issued in each step.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LatencyLedger {
    tallies: BTreeMap<PrimitiveSet, StepTally>,
}

impl LatencyLedger {
    pub fn record(&mut self, kinds: PrimitiveSet, width: u64, steps: u64) {
        if kinds.is_empty() || steps == 0 {
            return;
        }
        let t = self.tallies.entry(kinds).or_default();
        t.steps += steps;
        t.width += width * steps;
    }

    pub fn iter(&self) -> impl Iterator<Item = (PrimitiveSet, StepTally)> + '_ {
        self.tallies.iter().map(|(k, v)| (*k, *v))
    }

    pub fn total_steps(&self) -> u64 {
        self.tallies.values().map(|t| t.steps).sum()
    }

    pub fn steps_of(&self, kinds: PrimitiveSet) -> StepTally {
        self.tallies.get(&kinds).copied().unwrap_or_default()
    }

    pub fn records(&self) -> Vec<LatencyRecord> {
        self.iter()
            .map(|(k, t)| LatencyRecord {
                kinds: k.to_string(),
                steps: t.steps,
                width: t.width,
            })
            .collect()
    }

    pub fn from_records(records: &[LatencyRecord]) -> Result<Self> {
        let mut ledger = LatencyLedger::default();
        for r in records {
            let kinds: PrimitiveSet = r.kinds.parse()?;
            let t = ledger.tallies.entry(kinds).or_default();
            t.steps += r.steps;
            t.width += r.width;
        }
        Ok(ledger)
    }
}

/// Serialized form of one ledger entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyRecord {
    pub kinds: String,
    pub steps: u64,
    pub width: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub shift: u64,
    pub detect: u64,
    pub remove: u64,
    pub inject: u64,
    pub latency_steps: LatencyLedger,
}

impl OpCounters {
    pub fn count(&self, p: Primitive) -> u64 {
        match p {
            Primitive::Detect => self.detect,
            Primitive::Shift => self.shift,
            Primitive::Remove => self.remove,
            Primitive::Inject => self.inject,
        }
    }

    pub(crate) fn bump(&mut self, p: Primitive, n: u64) {
        match p {
            Primitive::Detect => self.detect += n,
            Primitive::Shift => self.shift += n,
            Primitive::Remove => self.remove += n,
            Primitive::Inject => self.inject += n,
        }
    }

    /// Record `n` serial single-primitive steps (width 1 each).
    pub fn record_serial(&mut self, p: Primitive, n: u64) {
        self.bump(p, n);
        self.latency_steps.record(PrimitiveSet::single(p), 1, n);
    }

    pub fn snapshot(&self) -> OpDelta {
        OpDelta {
            shift: self.shift,
            detect: self.detect,
            remove: self.remove,
            inject: self.inject,
        }
    }

    pub fn delta_since(&self, before: OpDelta) -> OpDelta {
        let now = self.snapshot();
        OpDelta {
            shift: now.shift - before.shift,
            detect: now.detect - before.detect,
            remove: now.remove - before.remove,
            inject: now.inject - before.inject,
        }
    }
}

/// Plain primitive counts, used for before/after deltas.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpDelta {
    pub shift: u64,
    pub detect: u64,
    pub remove: u64,
    pub inject: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostTotals {
    pub energy_fj: f64,
    pub latency_ns: f64,
}

/// Energy is the count-weighted sum of unit energies; latency is the sum over
/// latency steps of the slowest primitive issued in each step.
pub fn accumulate_cost(counters: &OpCounters, model: &CostModel) -> CostTotals {
    let energy_fj = Primitive::ALL
        .iter()
        .map(|&p| counters.count(p) as f64 * model.energy_fj.get(p))
        .sum();
    let latency_ns = counters
        .latency_steps
        .iter()
        .map(|(kinds, t)| t.steps as f64 * model.step_latency(kinds))
        .sum();
    CostTotals {
        energy_fj,
        latency_ns,
    }
}

/// Flat export of a counter set with derived totals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterExport {
    pub shift: u64,
    pub detect: u64,
    pub remove: u64,
    pub inject: u64,
    #[serde(rename = "energy_fJ")]
    pub energy_fj: f64,
    pub latency_ns: f64,
}

impl CounterExport {
    pub fn new(counters: &OpCounters, model: &CostModel) -> Self {
        let totals = accumulate_cost(counters, model);
        CounterExport {
            shift: counters.shift,
            detect: counters.detect,
            remove: counters.remove,
            inject: counters.inject,
            energy_fj: totals.energy_fj,
            latency_ns: totals.latency_ns,
        }
    }
}
