use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::device::Device;
use crate::error::{Error, Result};
use crate::layout::{AccessUnit, Layout, Location, NodeId, NodeKind, ReadUnit};
use crate::strategy::{
    column_read, column_write, dcw_write, read_sweep, write_sweep, BatchUpdate, SlotRef, Strategy,
    WriteOptions,
};
use crate::word::WordPattern;

/// What a word slot of a node image holds; decides width and encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    PivotKey,
    Child,
    /// Key of a buffered message or a leaf element.
    Key,
    /// Full value carried inline by a buffered message.
    Payload,
    /// Arena index carried by a buffered message.
    Index,
    /// Value of a leaf element.
    Element,
}

impl Field {
    /// Whether the word belongs to a key-value pair (as opposed to routing data).
    pub fn is_pair_content(self) -> bool {
        !matches!(self, Field::PivotKey | Field::Child)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WordWrite {
    pub word: u32,
    pub field: Field,
    pub value: u64,
}

/// Backing storage for node images and the value arena.
pub trait NodeStore {
    fn place(&mut self, node: NodeId, kind: NodeKind) -> Result<()>;
    /// Charged read of one word slot.
    fn read_word(&mut self, node: NodeId, word: u32, field: Field) -> Result<u64>;
    /// Writes the changed word slots of one node modification.
    fn write_words(&mut self, node: NodeId, writes: &[WordWrite]) -> Result<()>;
    fn arena_write(&mut self, slot: u32, value: u64) -> Result<()>;
    fn arena_read(&mut self, slot: u32) -> Result<u64>;
    /// Uncharged inspection, for audits.
    fn peek_word(&self, node: NodeId, word: u32, field: Field) -> Result<u64>;
    /// Uncharged inspection of an arena slot.
    fn peek_arena(&self, slot: u32) -> Result<u64>;
    fn set_index_bits(&mut self, bits: u32);
    /// Arena slot nearest the current alignment of the arena tracks, and
    /// the number of consecutive slots that share one alignment.
    fn arena_cursor(&self) -> Option<(u32, u32)> {
        None
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct StoreStats {
    pub words_by_field: BTreeMap<Field, u64>,
    pub node_writes: u64,
    pub word_reads: u64,
    pub arena_writes: u64,
    pub arena_reads: u64,
}

/// Node store that runs every access on the simulated device.
pub struct DeviceStore {
    device: Device,
    layout: Layout,
    strategy: Strategy,
    parallel: bool,
    opts: WriteOptions,
    index_bits: u32,
    stats: StoreStats,
}

impl DeviceStore {
    pub fn new(
        device: Device,
        layout: Layout,
        strategy: Strategy,
        parallel: bool,
        opts: WriteOptions,
    ) -> Result<Self> {
        if strategy == Strategy::Pw && layout.mapping() == crate::layout::Mapping::BitInterleaved {
            return Err(Error::Config(
                "permutation write cannot run on the bit-interleaved mapping".into(),
            ));
        }
        if strategy == Strategy::Pw && parallel {
            return Err(Error::UnsupportedParallelPw(2));
        }
        Ok(DeviceStore {
            device,
            layout,
            strategy,
            parallel,
            opts,
            index_bits: 0,
            stats: StoreStats::default(),
        })
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn device_mut(&mut self) -> &mut Device {
        &mut self.device
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn stats(&self) -> &StoreStats {
        &self.stats
    }

    fn word_bits(&self) -> u32 {
        self.layout.geometry().word_bits
    }

    fn width(&self, field: Field) -> u32 {
        match field {
            Field::Index => self.index_bits,
            _ => self.word_bits(),
        }
    }

    fn pattern(&self, field: Field, value: u64) -> WordPattern {
        match field {
            Field::Child | Field::Index => WordPattern::from_u64(value, self.width(field)),
            _ => WordPattern::expand(value, self.word_bits()),
        }
    }

    fn run_reads(&mut self, units: Vec<ReadUnit>) -> Result<Vec<WordPattern>> {
        let mut out = Vec::new();
        for unit in units {
            match unit {
                ReadUnit::Word { track, slots } => {
                    out.extend(read_sweep(&mut self.device, track, &slots)?)
                }
                ReadUnit::Column {
                    group,
                    offset,
                    words,
                } => out.extend(column_read(&mut self.device, group, offset, &words)?),
            }
        }
        Ok(out)
    }

    fn peek_location(&self, loc: &Location, width: u32) -> Result<WordPattern> {
        let mut w = WordPattern::zero(width);
        match loc {
            Location::Word { track, port } => {
                let t = self.device.track(*track)?;
                for i in 0..width {
                    w.set_bit(i, t.peek(*port, i));
                }
            }
            Location::Column {
                bits, port, offset, ..
            } => {
                for i in 0..width {
                    let t = self.device.track(bits.start + i as usize)?;
                    w.set_bit(i, t.peek(*port, (*offset - 1) as u32));
                }
            }
        }
        Ok(w)
    }
}

impl NodeStore for DeviceStore {
    fn place(&mut self, node: NodeId, kind: NodeKind) -> Result<()> {
        self.layout.place(&mut self.device, node, kind)?;
        Ok(())
    }

    fn read_word(&mut self, node: NodeId, word: u32, field: Field) -> Result<u64> {
        let width = self.width(field);
        let units = self.layout.plan_read(node, &[(word, width)])?;
        let got = self.run_reads(units)?;
        self.stats.word_reads += 1;
        Ok(got[0].low_u64())
    }

    fn write_words(&mut self, node: NodeId, writes: &[WordWrite]) -> Result<()> {
        if writes.is_empty() {
            return Ok(());
        }
        let patterns: Vec<(u32, WordPattern)> = writes
            .iter()
            .map(|w| (w.word, self.pattern(w.field, w.value)))
            .collect();
        for w in writes {
            *self.stats.words_by_field.entry(w.field).or_default() += 1;
        }
        self.stats.node_writes += 1;
        let units = self.layout.plan_write(node, &patterns, self.parallel)?;
        for unit in units {
            match unit {
                AccessUnit::Word { track, words } => {
                    let mut batch = BatchUpdate::default();
                    for (port, p) in words {
                        batch.push(SlotRef { track, port }, p);
                    }
                    write_sweep(&mut self.device, self.strategy, &batch, self.opts)?;
                }
                AccessUnit::Column {
                    group,
                    offset,
                    words,
                } => {
                    column_write(&mut self.device, group, offset, &words, self.strategy, self.opts)?;
                }
            }
        }
        Ok(())
    }

    fn arena_write(&mut self, slot: u32, value: u64) -> Result<()> {
        let pattern = WordPattern::expand(value, self.word_bits());
        self.stats.arena_writes += 1;
        match self.layout.arena_locate(&mut self.device, slot) {
            Location::Word { track, port } => {
                dcw_write(&mut self.device, SlotRef { track, port }, pattern, self.opts)?;
            }
            Location::Column {
                group,
                bits,
                port,
                offset,
            } => {
                let word = crate::strategy::ColumnWord {
                    tracks: bits,
                    port,
                    new: pattern,
                };
                column_write(&mut self.device, group, offset, &[word], Strategy::Dcw, self.opts)?;
            }
        }
        Ok(())
    }

    fn arena_read(&mut self, slot: u32) -> Result<u64> {
        let width = self.word_bits();
        let unit = match self.layout.arena_locate(&mut self.device, slot) {
            Location::Word { track, port } => ReadUnit::Word {
                track,
                slots: vec![(port, width)],
            },
            Location::Column {
                group,
                bits,
                port,
                offset,
            } => ReadUnit::Column {
                group,
                offset,
                words: vec![(bits, port, width)],
            },
        };
        self.stats.arena_reads += 1;
        Ok(self.run_reads(vec![unit])?[0].low_u64())
    }

    fn peek_word(&self, node: NodeId, word: u32, field: Field) -> Result<u64> {
        let loc = self.layout.locate(node, word)?;
        Ok(self.peek_location(&loc, self.width(field))?.low_u64())
    }

    fn peek_arena(&self, slot: u32) -> Result<u64> {
        let loc = self
            .layout
            .arena_location(slot)
            .ok_or_else(|| Error::Corruption(format!("arena slot {slot} never written")))?;
        Ok(self.peek_location(&loc, self.word_bits())?.low_u64())
    }

    fn set_index_bits(&mut self, bits: u32) {
        self.index_bits = bits;
    }

    fn arena_cursor(&self) -> Option<(u32, u32)> {
        self.layout.arena_cursor(&self.device)
    }
}

/// In-memory store that only counts key-value pair slot writes.
#[derive(Clone, Debug, Default)]
pub struct CountingStore {
    words: HashMap<(NodeId, u32), u64>,
    arena: HashMap<u32, u64>,
    kv_writes: u64,
}

impl CountingStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pair slots (buffer messages and leaf elements) written so far.
    pub fn kv_writes(&self) -> u64 {
        self.kv_writes
    }
}

impl NodeStore for CountingStore {
    fn place(&mut self, _node: NodeId, _kind: NodeKind) -> Result<()> {
        Ok(())
    }

    fn read_word(&mut self, node: NodeId, word: u32, field: Field) -> Result<u64> {
        self.peek_word(node, word, field)
    }

    fn write_words(&mut self, node: NodeId, writes: &[WordWrite]) -> Result<()> {
        let mut pairs: Vec<u32> = writes
            .iter()
            .filter(|w| w.field.is_pair_content())
            .map(|w| w.word / 2)
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        self.kv_writes += pairs.len() as u64;
        for w in writes {
            self.words.insert((node, w.word), w.value);
        }
        Ok(())
    }

    fn arena_write(&mut self, slot: u32, value: u64) -> Result<()> {
        self.arena.insert(slot, value);
        Ok(())
    }

    fn arena_read(&mut self, slot: u32) -> Result<u64> {
        self.peek_arena(slot)
    }

    fn peek_arena(&self, slot: u32) -> Result<u64> {
        self.arena
            .get(&slot)
            .copied()
            .ok_or_else(|| Error::Corruption(format!("arena slot {slot} never written")))
    }

    fn peek_word(&self, node: NodeId, word: u32, _field: Field) -> Result<u64> {
        self.words
            .get(&(node, word))
            .copied()
            .ok_or_else(|| Error::Corruption(format!("node {node} word {word} never written")))
    }

    fn set_index_bits(&mut self, _bits: u32) {}
}
