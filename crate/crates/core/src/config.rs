//! Plain-text run configuration: one `key = value` per line, `#` starts a
//! comment. Device geometry, unit costs, tree parameters and the experiment
//! selection all share one flat namespace.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::betree::TreeParams;
use crate::device::{CostModel, Primitive, ShiftPolicy};
use crate::error::{Error, Result};
use crate::layout::{Geometry, Mapping};
use crate::strategy::{Strategy, WriteOptions};
use crate::workload::WorkloadId;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub word_bits: u32,
    /// Ports per word-based track; `None` gives one port per word slot.
    pub ports_per_track: Option<u32>,
    /// Cells between ports; `None` gives one word per port.
    pub interport_bits: Option<u32>,
    pub shift_policy: ShiftPolicy,
    pub cost: CostModel,
    pub mapping: Mapping,
    pub strategy: Strategy,
    pub encoding: bool,
    pub parallel_ports: bool,
    pub workload: WorkloadId,
    /// Keys inserted by the load phase.
    pub entries: u64,
    /// Run-phase operations; `None` gives `entries`.
    pub ops: Option<u64>,
    pub seed: u64,
    pub node_capacity: u32,
    pub pivot_slots: u32,
    pub leaf_slots: u32,
    /// `None` sizes the arena to the next power of two above the upsert count.
    pub arena_capacity: Option<u32>,
    pub count_new_detect: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let tree = TreeParams::default();
        RunConfig {
            word_bits: 64,
            ports_per_track: None,
            interport_bits: None,
            shift_policy: ShiftPolicy::Lazy,
            cost: CostModel::default(),
            mapping: Mapping::Word,
            strategy: Strategy::Naive,
            encoding: false,
            parallel_ports: false,
            workload: WorkloadId::A,
            entries: 10_000,
            ops: None,
            seed: 42,
            node_capacity: tree.node_capacity,
            pivot_slots: tree.pivot_slots,
            leaf_slots: tree.leaf_slots,
            arena_capacity: None,
            count_new_detect: false,
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}` expects on/off, got `{v}`"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.replace('_', "")
        .parse()
        .map_err(|_| Error::Config(format!("`{key}` expects a number, got `{v}`")))
}

fn optional<T: std::str::FromStr>(key: &str, v: &str) -> Result<Option<T>> {
    if v.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        parse_num(key, v).map(Some)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Applies one setting by key.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "word_bits" => self.word_bits = parse_num(key, v)?,
            "word_bytes" => self.word_bits = 8 * parse_num::<u32>(key, v)?,
            "ports_per_track" => self.ports_per_track = optional(key, v)?,
            "interport_bits" => self.interport_bits = optional(key, v)?,
            "shift_policy" => self.shift_policy = v.parse()?,
            "mapping" => self.mapping = v.parse()?,
            "strategy" => self.strategy = v.parse()?,
            "encoding" => self.encoding = parse_bool(key, v)?,
            "parallel_ports" | "parallel_updates" => self.parallel_ports = parse_bool(key, v)?,
            "workload" => self.workload = v.parse()?,
            "entries" => self.entries = parse_num(key, v)?,
            "ops" => self.ops = optional(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "node_capacity" => self.node_capacity = parse_num(key, v)?,
            "pivot_slots" => self.pivot_slots = parse_num(key, v)?,
            "epsilon" => {
                let eps: f64 = parse_num(key, v)?;
                if !(eps > 0.0 && eps < 1.0) {
                    return Err(Error::Config(format!("epsilon must lie in (0, 1), got {eps}")));
                }
                self.pivot_slots = TreeParams::with_epsilon(self.node_capacity, eps).pivot_slots;
            }
            "leaf_slots" => self.leaf_slots = parse_num(key, v)?,
            "arena_capacity" => self.arena_capacity = optional(key, v)?,
            "count_new_detect" => self.count_new_detect = parse_bool(key, v)?,
            _ => return self.set_cost(key, v),
        }
        Ok(())
    }

    fn set_cost(&mut self, key: &str, v: &str) -> Result<()> {
        let (table, rest) = if let Some(r) = key.strip_prefix("energy_") {
            (&mut self.cost.energy_fj, r.strip_suffix("_fj"))
        } else if let Some(r) = key.strip_prefix("latency_") {
            (&mut self.cost.latency_ns, r.strip_suffix("_ns"))
        } else {
            return Err(Error::Config(format!("unknown key `{key}`")));
        };
        let prim = Primitive::ALL
            .into_iter()
            .find(|p| Some(p.name()) == rest)
            .ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?;
        table.set(prim, parse_num(key, v)?);
        Ok(())
    }

    pub fn geometry(&self) -> Geometry {
        let mut g = Geometry::new(self.word_bits, self.node_capacity);
        if let Some(p) = self.ports_per_track {
            g.ports_per_track = p;
        }
        if let Some(ip) = self.interport_bits {
            g.interport_bits = ip;
        }
        g
    }

    pub fn run_ops(&self) -> u64 {
        self.ops.unwrap_or(self.entries)
    }

    pub fn tree_params(&self, arena_capacity: u32) -> TreeParams {
        TreeParams {
            node_capacity: self.node_capacity,
            pivot_slots: self.pivot_slots,
            leaf_slots: self.leaf_slots,
            encoding: self.encoding,
            arena_capacity,
        }
    }

    pub fn write_options(&self) -> WriteOptions {
        WriteOptions {
            count_new_detect: self.count_new_detect,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cost.validate()?;
        self.geometry().validate(self.mapping)?;
        self.tree_params(self.arena_capacity.unwrap_or(1).max(1)).validate()?;
        if self.word_bits % 8 != 0 {
            return Err(Error::Config(format!("word_bits {} is not a whole number of bytes", self.word_bits)));
        }
        if self.strategy == Strategy::Pw && self.mapping == Mapping::BitInterleaved {
            return Err(Error::Config("strategy `pw` cannot run on the bit-interleaved mapping".into()));
        }
        if self.strategy == Strategy::Pw && self.parallel_ports {
            return Err(Error::UnsupportedParallelPw(2));
        }
        if self.arena_capacity == Some(0) {
            return Err(Error::Config("arena_capacity must be positive".into()));
        }
        Ok(())
    }
}
