//! Experiment orchestration: build a device, layout and tree from a
//! [`RunConfig`], replay a workload against it, and report costs.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::WriteCountPoint;
use crate::betree::{BeTree, DeviceStore, TreeStats};
use crate::config::RunConfig;
use crate::device::{accumulate_cost, CostModel, CostTotals, Device, LatencyLedger, LatencyRecord, OpCounters};
use crate::error::{Error, Result};
use crate::layout::{Layout, Mapping};
use crate::strategy::Strategy;
use crate::workload::{generate, Op, WorkloadId, WorkloadSpec};

/// One row of the comparison table. Field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub workload: WorkloadId,
    pub mapping: Mapping,
    pub strategy: Strategy,
    pub encoding: bool,
    pub parallel_updates: bool,
    pub word_bytes: u32,
    pub entries: u64,
    pub shift: u64,
    pub detect: u64,
    pub remove: u64,
    pub inject: u64,
    #[serde(rename = "energy_fJ")]
    pub energy_fj: f64,
    pub latency_ns: f64,
    pub latency_reduction_pct: f64,
    pub energy_reduction_pct: f64,
}

/// A report plus the run details needed to audit it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub label: String,
    #[serde(flatten)]
    pub report: MetricsReport,
    pub load_ops: u64,
    pub run_ops: u64,
    pub seed: u64,
    pub latency_steps: Vec<LatencyRecord>,
    pub cost_model: CostModel,
    pub arena_capacity: Option<u32>,
    pub arena_high_water: Option<u32>,
    pub index_bits: u32,
    pub tree_height: usize,
    pub tree_nodes: usize,
    pub tree: TreeStats,
}

/// A named point in the optimization space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Variant {
    pub label: &'static str,
    pub strategy: Strategy,
    pub encoding: bool,
    pub parallel: bool,
}

impl Variant {
    pub const fn new(label: &'static str, strategy: Strategy, encoding: bool, parallel: bool) -> Self {
        Variant {
            label,
            strategy,
            encoding,
            parallel,
        }
    }

    pub fn apply(&self, cfg: &RunConfig) -> RunConfig {
        RunConfig {
            strategy: self.strategy,
            encoding: self.encoding,
            parallel_ports: self.parallel,
            ..cfg.clone()
        }
    }
}

pub const NAIVE: Variant = Variant::new("naive", Strategy::Naive, false, false);
pub const OPTIMIZED: Variant = Variant::new("optimized", Strategy::Bcw, true, true);
pub const PARALLEL_ONLY: Variant = Variant::new("parallel-only", Strategy::Bcw, false, true);
pub const ENCODING_ONLY: Variant = Variant::new("encoding-only", Strategy::Bcw, true, false);

/// Variants compared on one mapping, baseline first.
pub fn comparison_set(mapping: Mapping) -> Vec<Variant> {
    let mut set = vec![NAIVE, Variant::new("dcw", Strategy::Dcw, false, false)];
    if mapping == Mapping::Word {
        set.push(Variant::new("pw", Strategy::Pw, false, false));
    }
    set.extend([PARALLEL_ONLY, ENCODING_ONLY, OPTIMIZED]);
    set
}

pub fn label_of(cfg: &RunConfig) -> String {
    let all = [NAIVE, OPTIMIZED, PARALLEL_ONLY, ENCODING_ONLY];
    all.iter()
        .find(|v| v.strategy == cfg.strategy && v.encoding == cfg.encoding && v.parallel == cfg.parallel_ports)
        .map(|v| v.label.to_string())
        .unwrap_or_else(|| {
            let mut s = cfg.strategy.name().to_string();
            if cfg.encoding {
                s.push_str("+encoding");
            }
            if cfg.parallel_ports {
                s.push_str("+parallel");
            }
            s
        })
}

/// A finished run: its record and the tree it left behind.
pub struct RunOutcome {
    pub record: RunRecord,
    pub tree: BeTree<DeviceStore>,
}

fn default_arena(upserts: u64) -> u32 {
    let n = upserts.max(2).next_power_of_two();
    u32::try_from(n).unwrap_or(1 << 31)
}

/// Replays the load and run phases of one configuration, checking every read
/// against an in-memory map.
pub fn run_single(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let spec = WorkloadSpec::new(cfg.workload, cfg.entries, cfg.run_ops(), cfg.seed);
    let stream = generate(&spec, cfg.word_bits.min(64))?;
    let arena_capacity = cfg.arena_capacity.unwrap_or_else(|| default_arena(stream.upserts()));
    let grouped = cfg.parallel_ports && cfg.mapping == Mapping::BitInterleaved;
    let layout = Layout::new(cfg.mapping, cfg.geometry(), grouped)?;
    let store = DeviceStore::new(
        Device::new(cfg.shift_policy),
        layout,
        cfg.strategy,
        cfg.parallel_ports,
        cfg.write_options(),
    )?;
    let mut tree = BeTree::new(store, cfg.tree_params(arena_capacity))?;
    let mut oracle: HashMap<u64, u64> = HashMap::new();
    for op in stream.iter() {
        match *op {
            Op::Insert { key, value } | Op::Update { key, value } => {
                tree.upsert(key, value)?;
                oracle.insert(key, value);
            }
            Op::Read { key } => {
                let got = tree.query(key)?;
                let expected = oracle.get(&key).copied();
                if got != expected {
                    return Err(Error::OracleMismatch { key, got, expected });
                }
            }
        }
    }
    let counters = tree.store().device().counters().clone();
    let totals = accumulate_cost(&counters, &cfg.cost);
    let report = MetricsReport {
        workload: cfg.workload,
        mapping: cfg.mapping,
        strategy: cfg.strategy,
        encoding: cfg.encoding,
        parallel_updates: cfg.parallel_ports,
        word_bytes: cfg.word_bits / 8,
        entries: cfg.entries,
        shift: counters.shift,
        detect: counters.detect,
        remove: counters.remove,
        inject: counters.inject,
        energy_fj: totals.energy_fj,
        latency_ns: totals.latency_ns,
        latency_reduction_pct: 0.0,
        energy_reduction_pct: 0.0,
    };
    let record = RunRecord {
        label: label_of(cfg),
        report,
        load_ops: stream.load.len() as u64,
        run_ops: stream.run.len() as u64,
        seed: cfg.seed,
        latency_steps: counters.latency_steps.records(),
        cost_model: cfg.cost,
        arena_capacity: tree.arena().map(|a| a.capacity()),
        arena_high_water: tree.arena().map(|a| a.high_water()),
        index_bits: tree.arena().map_or(0, |a| a.index_bits()),
        tree_height: tree.height(),
        tree_nodes: tree.node_count(),
        tree: tree.stats().clone(),
    };
    Ok(RunOutcome { record, tree })
}

fn reduction(baseline: f64, value: f64) -> f64 {
    if baseline == 0.0 {
        0.0
    } else {
        100.0 * (baseline - value) / baseline
    }
}

/// Fills the reduction columns relative to the first record.
pub fn normalize(records: &mut [RunRecord]) {
    let Some(first) = records.first() else { return };
    let (lat, en) = (first.report.latency_ns, first.report.energy_fj);
    for r in records.iter_mut() {
        r.report.latency_reduction_pct = reduction(lat, r.report.latency_ns);
        r.report.energy_reduction_pct = reduction(en, r.report.energy_fj);
    }
}

/// Runs `configs` in parallel and normalizes against the first.
pub fn run_set(configs: &[RunConfig]) -> Result<Vec<RunRecord>> {
    let mut records = configs
        .par_iter()
        .map(|c| run_single(c).map(|o| o.record))
        .collect::<Result<Vec<_>>>()?;
    normalize(&mut records);
    Ok(records)
}

/// The naive baseline of the configured mapping, then the configuration
/// itself unless it is the baseline.
pub fn run_experiment(cfg: &RunConfig) -> Result<Vec<RunRecord>> {
    let baseline = NAIVE.apply(cfg);
    let mut configs = vec![baseline.clone()];
    if *cfg != baseline {
        configs.push(cfg.clone());
    }
    run_set(&configs)
}

/// Every variant of [`comparison_set`] on the configured mapping.
pub fn run_comparison(cfg: &RunConfig) -> Result<Vec<RunRecord>> {
    let configs: Vec<RunConfig> = comparison_set(cfg.mapping).iter().map(|v| v.apply(cfg)).collect();
    run_set(&configs)
}

/// Naive versus optimized over a grid of dataset sizes and word sizes; each
/// grid point is normalized against its own naive run.
pub fn sweep(base: &RunConfig, entries: &[u64], word_bytes: &[u32]) -> Result<Vec<RunRecord>> {
    let mut points = Vec::new();
    for &e in entries {
        for &wb in word_bytes {
            let cfg = RunConfig {
                entries: e,
                word_bits: 8 * wb,
                ops: base.ops,
                ..base.clone()
            };
            points.push([NAIVE.apply(&cfg), OPTIMIZED.apply(&cfg)]);
        }
    }
    let flat: Vec<RunConfig> = points.iter().flatten().cloned().collect();
    let done = flat
        .par_iter()
        .map(|c| run_single(c).map(|o| o.record))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(done.len());
    for mut pair in done.chunks(2).map(|c| c.to_vec()) {
        normalize(&mut pair);
        out.extend(pair);
    }
    Ok(out)
}

/// Energy and latency recomputed from a record's own counters and steps.
pub fn recompute_cost(record: &RunRecord) -> Result<CostTotals> {
    let counters = OpCounters {
        shift: record.report.shift,
        detect: record.report.detect,
        remove: record.report.remove,
        inject: record.report.inject,
        latency_steps: LatencyLedger::from_records(&record.latency_steps)?,
    };
    Ok(accumulate_cost(&counters, &record.cost_model))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format `{other}` (expected csv or json)"))),
        }
    }
}

pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(&r.report)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(records: &[RunRecord], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, records)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<MetricsReport>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn read_json<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    Ok(serde_json::from_reader(input)?)
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

/// Writes the records to `path`, or to stdout when `path` is `None`.
pub fn emit(records: &[RunRecord], format: Format, path: Option<&Path>) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Config("nothing to emit: no reports".into()));
    }
    let out = sink(path)?;
    match format {
        Format::Csv => write_csv(records, out),
        Format::Json => write_json(records, out),
    }
}

/// Writes write-count experiment points as CSV or JSON.
pub fn emit_write_counts(points: &[WriteCountPoint], format: Format, path: Option<&Path>) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Config("nothing to emit: no sample points".into()));
    }
    let mut out = sink(path)?;
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for p in points {
                w.serialize(p)?;
            }
            w.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, points)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}
