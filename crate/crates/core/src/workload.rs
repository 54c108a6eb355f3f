//! YCSB-style workload generation.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::word::{low_mask, splitmix64};

pub const ZIPF_EXPONENT: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkloadId {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl WorkloadId {
    pub const ALL: [WorkloadId; 6] = [
        WorkloadId::A,
        WorkloadId::B,
        WorkloadId::C,
        WorkloadId::D,
        WorkloadId::E,
        WorkloadId::F,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WorkloadId::A => "a",
            WorkloadId::B => "b",
            WorkloadId::C => "c",
            WorkloadId::D => "d",
            WorkloadId::E => "e",
            WorkloadId::F => "f",
        }
    }

    /// (read, update, insert) percentages and key distribution.
    pub fn mix(self) -> (u8, u8, u8, KeyDistribution) {
        use KeyDistribution::*;
        match self {
            WorkloadId::A => (50, 50, 0, Zipfian),
            WorkloadId::B => (95, 0, 5, Zipfian),
            WorkloadId::C => (100, 0, 0, Zipfian),
            WorkloadId::D => (5, 95, 0, Latest),
            WorkloadId::E => (95, 0, 5, Zipfian),
            WorkloadId::F => (50, 50, 0, Zipfian),
        }
    }

    /// Workloads whose run phase is at least half writes.
    pub fn is_write_heavy(self) -> bool {
        let (r, _, _, _) = self.mix();
        r <= 50
    }
}

impl fmt::Display for WorkloadId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WorkloadId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        WorkloadId::ALL
            .into_iter()
            .find(|w| w.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown workload `{s}` (expected a..f)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyDistribution {
    Zipfian,
    /// Zipfian over recency: rank 1 is the newest key.
    Latest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub workload_id: WorkloadId,
    pub read_pct: u8,
    pub update_pct: u8,
    pub insert_pct: u8,
    pub distribution: KeyDistribution,
    pub op_count: u64,
    pub load_count: u64,
    pub seed: u64,
}

impl WorkloadSpec {
    pub fn new(workload_id: WorkloadId, load_count: u64, op_count: u64, seed: u64) -> Self {
        let (read_pct, update_pct, insert_pct, distribution) = workload_id.mix();
        WorkloadSpec {
            workload_id,
            read_pct,
            update_pct,
            insert_pct,
            distribution,
            op_count,
            load_count,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let total = self.read_pct as u32 + self.update_pct as u32 + self.insert_pct as u32;
        if total != 100 {
            return Err(Error::Config(format!("workload mix sums to {total}%, not 100%")));
        }
        if self.load_count == 0 && self.read_pct + self.update_pct > 0 && self.op_count > 0 {
            return Err(Error::Config("reads and updates need a non-empty load phase".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Op {
    Insert { key: u64, value: u64 },
    Update { key: u64, value: u64 },
    Read { key: u64 },
}

impl Op {
    pub fn key(&self) -> u64 {
        match *self {
            Op::Insert { key, .. } | Op::Update { key, .. } | Op::Read { key } => key,
        }
    }

    pub fn is_write(&self) -> bool {
        !matches!(self, Op::Read { .. })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpStream {
    pub load: Vec<Op>,
    pub run: Vec<Op>,
}

impl OpStream {
    pub fn upserts(&self) -> u64 {
        self.load.iter().chain(&self.run).filter(|o| o.is_write()).count() as u64
    }

    pub fn iter(&self) -> impl Iterator<Item = &Op> {
        self.load.iter().chain(&self.run)
    }
}

/// Key of the `i`-th inserted record: a hashed sequence number, so keys are
/// fully populated bit patterns rather than small integers.
pub fn key_for(i: u64, word_bits: u32) -> u64 {
    splitmix64(i) & low_mask(word_bits)
}

/// Probability of the most popular item under zipf(`s`) over `n` items.
pub fn zipf_head_probability(n: u64, s: f64) -> f64 {
    1.0 / (1..=n).map(|k| (k as f64).powf(-s)).sum::<f64>()
}

struct RankSampler {
    n: u64,
    zipf: Option<Zipf<f64>>,
}

impl RankSampler {
    /// Zero-based popularity rank among `n` items.
    fn sample(&mut self, rng: &mut ChaCha8Rng, n: u64) -> u64 {
        if self.n != n || self.zipf.is_none() {
            self.zipf = Some(Zipf::new(n as f64, ZIPF_EXPONENT).expect("zipf over a non-empty range"));
            self.n = n;
        }
        let r = self.zipf.as_ref().unwrap().sample(rng) as u64;
        r.clamp(1, n) - 1
    }
}

/// Generates the load phase (uniform-random keys) and the run phase drawn per
/// the workload mix. Deterministic in `spec.seed`.
pub fn generate(spec: &WorkloadSpec, word_bits: u32) -> Result<OpStream> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let vmask = low_mask(word_bits);
    let mut stream = OpStream {
        load: Vec::with_capacity(spec.load_count as usize),
        run: Vec::with_capacity(spec.op_count as usize),
    };
    for i in 0..spec.load_count {
        stream.load.push(Op::Insert {
            key: key_for(i, word_bits),
            value: rng.random::<u64>() & vmask,
        });
    }
    let mut inserted = spec.load_count;
    let mut ranks = RankSampler { n: 0, zipf: None };
    for _ in 0..spec.op_count {
        let roll = rng.random_range(0..100u8);
        let op = if roll < spec.read_pct + spec.update_pct {
            let rank = ranks.sample(&mut rng, inserted);
            let idx = match spec.distribution {
                KeyDistribution::Zipfian => rank,
                KeyDistribution::Latest => inserted - 1 - rank,
            };
            let key = key_for(idx, word_bits);
            if roll < spec.read_pct {
                Op::Read { key }
            } else {
                Op::Update {
                    key,
                    value: rng.random::<u64>() & vmask,
                }
            }
        } else {
            inserted += 1;
            Op::Insert {
                key: key_for(inserted - 1, word_bits),
                value: rng.random::<u64>() & vmask,
            }
        };
        stream.run.push(op);
    }
    Ok(stream)
}
