//! Placement of tree nodes on racetracks and the access schedules that
//! follow from it.
//!
//! Word-based mapping gives each node its own track with one port per word
//! slot. Bit-interleaved mapping spreads bit `i` of every key over track
//! `base + i` and bit `i` of every value over track `base + w + i`, so one
//! group of `2w` tracks holds many nodes and a single alignment exposes a
//! whole word (or a whole node) to the ports.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::device::{Device, TrackId};
use crate::error::{Error, Result};
use crate::strategy::ColumnWord;
use crate::word::WordPattern;

pub type NodeId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mapping {
    Word,
    BitInterleaved,
}

impl Mapping {
    pub fn name(self) -> &'static str {
        match self {
            Mapping::Word => "word",
            Mapping::BitInterleaved => "bit_interleaved",
        }
    }
}

impl fmt::Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mapping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word" | "word_based" | "word-based" => Ok(Mapping::Word),
            "bit" | "bit_interleaved" | "bit-interleaved" => Ok(Mapping::BitInterleaved),
            other => Err(Error::Config(format!("unknown mapping `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Internal,
    Leaf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Geometry {
    pub word_bits: u32,
    /// Key/value pair slots per node. A node has twice as many word slots.
    pub pairs_per_node: u32,
    /// Ports per word-based track.
    pub ports_per_track: u32,
    pub interport_bits: u32,
}

impl Geometry {
    pub fn new(word_bits: u32, pairs_per_node: u32) -> Self {
        Geometry {
            word_bits,
            pairs_per_node,
            ports_per_track: 2 * pairs_per_node,
            interport_bits: word_bits,
        }
    }

    pub fn words_per_node(&self) -> u32 {
        2 * self.pairs_per_node
    }

    pub fn validate(&self, mapping: Mapping) -> Result<()> {
        if self.word_bits == 0 || self.word_bits > crate::word::MAX_WORD_BITS {
            return Err(Error::Config(format!("word_bits {} out of range", self.word_bits)));
        }
        if self.pairs_per_node == 0 {
            return Err(Error::Config("a node needs at least one pair slot".into()));
        }
        if self.interport_bits < self.word_bits {
            return Err(Error::Config(format!(
                "interport_bits {} cannot hold a {}-bit word",
                self.interport_bits, self.word_bits
            )));
        }
        if mapping == Mapping::Word && self.ports_per_track < self.words_per_node() {
            return Err(Error::Config(format!(
                "ports_per_track {} is below the {} word slots of a node",
                self.ports_per_track,
                self.words_per_node()
            )));
        }
        Ok(())
    }

    /// Tracks in one bit-interleaved group: key bits then value bits.
    pub fn tracks_per_group(&self) -> u32 {
        2 * self.word_bits
    }

    pub fn group_capacity(&self) -> u32 {
        self.interport_bits
    }

    /// Stored bits served by one port, for either mapping.
    pub fn bits_per_port(&self, mapping: Mapping) -> u32 {
        match mapping {
            Mapping::Word => self.interport_bits,
            // a bit-interleaved track has one port per pair slot and
            // `interport_bits` cells behind each port
            Mapping::BitInterleaved => self.interport_bits,
        }
    }
}

/// Word-based placement: the node's track; word slot `s` is served by port `s`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WordBasedAssignment {
    pub node: NodeId,
    pub track: TrackId,
    pub slots: u32,
}

/// Bit-interleaved placement of one group of nodes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BitInterleavedAssignment {
    pub group: u32,
    pub tracks: Range<TrackId>,
    pub kind: NodeKind,
    /// Node ids by position within the group.
    pub members: Vec<NodeId>,
    pub capacity: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "mapping", rename_all = "snake_case")]
pub enum Placement {
    Word { track: TrackId },
    Bit { group: u32, position: u32 },
}

/// Where one word slot lives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Location {
    Word {
        track: TrackId,
        port: u32,
    },
    Column {
        /// Every track that shifts together with this word.
        group: Range<TrackId>,
        /// Tracks holding bits 0.. of the word.
        bits: Range<TrackId>,
        port: u32,
        /// Offset that puts the word's cells under the port.
        offset: i64,
    },
}

/// One shared-alignment unit of a write schedule.
#[derive(Clone, Debug)]
pub enum AccessUnit {
    /// Words on one word-based track written under one shift set.
    Word {
        track: TrackId,
        words: Vec<(u32, WordPattern)>,
    },
    /// Column words exposed by a single alignment of a track group.
    Column {
        group: Range<TrackId>,
        offset: i64,
        words: Vec<ColumnWord>,
    },
}

/// One unit of a read schedule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReadUnit {
    Word {
        track: TrackId,
        /// (port, width)
        slots: Vec<(u32, u32)>,
    },
    Column {
        group: Range<TrackId>,
        offset: i64,
        /// (bit tracks, port, width)
        words: Vec<(Range<TrackId>, u32, u32)>,
    },
}

#[derive(Clone, Debug, Serialize)]
struct Group {
    tracks: Range<TrackId>,
    kind: NodeKind,
    members: Vec<NodeId>,
}

/// Allocation table plus the geometry needed to turn it into schedules.
#[derive(Clone, Debug)]
pub struct Layout {
    mapping: Mapping,
    geometry: Geometry,
    grouped: bool,
    nodes: BTreeMap<NodeId, Placement>,
    groups: Vec<Group>,
    open: [Option<u32>; 2],
    arena_units: Vec<Range<TrackId>>,
    last_arena: Option<usize>,
}

impl Layout {
    /// `grouped` selects, for bit-interleaved mapping, whether a node's pairs
    /// share one cell position across ports (one alignment per node) or sit
    /// at consecutive cells behind a port (one alignment per pair).
    pub fn new(mapping: Mapping, geometry: Geometry, grouped: bool) -> Result<Self> {
        geometry.validate(mapping)?;
        Ok(Layout {
            mapping,
            geometry,
            grouped,
            nodes: BTreeMap::new(),
            groups: Vec::new(),
            open: [None, None],
            arena_units: Vec::new(),
            last_arena: None,
        })
    }

    pub fn mapping(&self) -> Mapping {
        self.mapping
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn grouped(&self) -> bool {
        self.grouped
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn placement(&self, node: NodeId) -> Result<Placement> {
        self.nodes.get(&node).copied().ok_or(Error::UnknownNode(node))
    }

    fn kind_slot(kind: NodeKind) -> usize {
        match kind {
            NodeKind::Internal => 0,
            NodeKind::Leaf => 1,
        }
    }

    /// Places a node under the configured mapping, allocating tracks on demand.
    pub fn place(&mut self, dev: &mut Device, node: NodeId, kind: NodeKind) -> Result<Placement> {
        match self.mapping {
            Mapping::Word => {
                let a = self.place_node_word_based(dev, node)?;
                Ok(Placement::Word { track: a.track })
            }
            Mapping::BitInterleaved => {
                if self.nodes.contains_key(&node) {
                    return Err(Error::Capacity(format!("node {node} is already placed")));
                }
                let k = Self::kind_slot(kind);
                let group = match self.open[k] {
                    Some(g) if (self.groups[g as usize].members.len() as u32) < self.geometry.group_capacity() => g,
                    _ => {
                        let g = self.new_group(dev, kind);
                        self.open[k] = Some(g);
                        g
                    }
                };
                let members = &mut self.groups[group as usize].members;
                let position = members.len() as u32;
                members.push(node);
                let p = Placement::Bit { group, position };
                self.nodes.insert(node, p);
                Ok(p)
            }
        }
    }

    pub fn place_node_word_based(&mut self, dev: &mut Device, node: NodeId) -> Result<WordBasedAssignment> {
        if self.mapping != Mapping::Word {
            return Err(Error::Config("word-based placement on a bit-interleaved layout".into()));
        }
        if self.nodes.contains_key(&node) {
            return Err(Error::Capacity(format!("node {node} is already placed")));
        }
        let track = dev.add_track(self.geometry.ports_per_track, self.geometry.interport_bits);
        self.nodes.insert(node, Placement::Word { track });
        Ok(WordBasedAssignment {
            node,
            track,
            slots: self.geometry.words_per_node(),
        })
    }

    fn new_group(&mut self, dev: &mut Device, kind: NodeKind) -> u32 {
        let tracks = dev.add_tracks(
            self.geometry.tracks_per_group() as usize,
            self.geometry.pairs_per_node,
            self.geometry.interport_bits,
        );
        self.groups.push(Group {
            tracks,
            kind,
            members: Vec::new(),
        });
        (self.groups.len() - 1) as u32
    }

    /// Places a set of same-kind nodes together in a fresh group.
    pub fn place_group_bit_interleaved(
        &mut self,
        dev: &mut Device,
        nodes: &[NodeId],
        kind: NodeKind,
    ) -> Result<BitInterleavedAssignment> {
        if self.mapping != Mapping::BitInterleaved {
            return Err(Error::Config("group placement on a word-based layout".into()));
        }
        let capacity = self.geometry.group_capacity();
        if nodes.len() as u32 > capacity {
            return Err(Error::Capacity(format!(
                "{} nodes exceed the group capacity of {capacity}",
                nodes.len()
            )));
        }
        if let Some(n) = nodes.iter().find(|n| self.nodes.contains_key(n)) {
            return Err(Error::Capacity(format!("node {n} is already placed")));
        }
        let group = self.new_group(dev, kind);
        for (i, &n) in nodes.iter().enumerate() {
            self.nodes.insert(
                n,
                Placement::Bit {
                    group,
                    position: i as u32,
                },
            );
        }
        let g = &mut self.groups[group as usize];
        g.members = nodes.to_vec();
        Ok(BitInterleavedAssignment {
            group,
            tracks: g.tracks.clone(),
            kind,
            members: g.members.clone(),
            capacity,
        })
    }

    /// (port, cell) of pair `pair` of the node at `position` in a group.
    fn column_cell(&self, position: u32, pair: u32) -> (u32, u32) {
        let ip = self.geometry.interport_bits;
        if self.grouped {
            (pair, position)
        } else {
            let lin = position * self.geometry.pairs_per_node + pair;
            (lin / ip, lin % ip)
        }
    }

    pub fn locate(&self, node: NodeId, word: u32) -> Result<Location> {
        if word >= self.geometry.words_per_node() {
            return Err(Error::Corruption(format!(
                "word slot {word} beyond the {} slots of a node",
                self.geometry.words_per_node()
            )));
        }
        match self.placement(node)? {
            Placement::Word { track } => Ok(Location::Word { track, port: word }),
            Placement::Bit { group, position } => {
                let g = &self.groups[group as usize];
                let w = self.geometry.word_bits as usize;
                let (port, cell) = self.column_cell(position, word / 2);
                let start = g.tracks.start + if word % 2 == 0 { 0 } else { w };
                Ok(Location::Column {
                    group: g.tracks.clone(),
                    bits: start..start + w,
                    port,
                    offset: cell as i64 + 1,
                })
            }
        }
    }

    fn arena_unit(&self, slot: u32) -> usize {
        let geo = self.geometry;
        match self.mapping {
            Mapping::Word => (slot / geo.ports_per_track) as usize,
            Mapping::BitInterleaved => (slot / (geo.pairs_per_node * geo.interport_bits)) as usize,
        }
    }

    /// Location of a value-arena slot, adding arena tracks as needed.
    pub fn arena_locate(&mut self, dev: &mut Device, slot: u32) -> Location {
        let geo = self.geometry;
        let unit = self.arena_unit(slot);
        self.last_arena = Some(unit);
        while self.arena_units.len() <= unit {
            let r = match self.mapping {
                Mapping::Word => dev.add_tracks(1, geo.ports_per_track, geo.interport_bits),
                Mapping::BitInterleaved => {
                    dev.add_tracks(geo.word_bits as usize, geo.pairs_per_node, geo.interport_bits)
                }
            };
            self.arena_units.push(r);
        }
        self.arena_location(slot).expect("arena unit allocated above")
    }

    /// Location of a value-arena slot whose tracks already exist.
    pub fn arena_location(&self, slot: u32) -> Option<Location> {
        let geo = self.geometry;
        let tracks = self.arena_units.get(self.arena_unit(slot))?.clone();
        Some(match self.mapping {
            Mapping::Word => Location::Word {
                track: tracks.start,
                port: slot % geo.ports_per_track,
            },
            Mapping::BitInterleaved => {
                let ports = geo.pairs_per_node;
                let cell = (slot / ports) % geo.interport_bits;
                Location::Column {
                    bits: tracks.clone(),
                    group: tracks,
                    port: slot % ports,
                    offset: cell as i64 + 1,
                }
            }
        })
    }

    /// Slot under the current alignment of the most recently used arena
    /// unit, and the number of consecutive slots that share an alignment.
    pub fn arena_cursor(&self, dev: &Device) -> Option<(u32, u32)> {
        let unit = self.last_arena?;
        let tracks = self.arena_units.get(unit)?;
        let geo = self.geometry;
        match self.mapping {
            Mapping::Word => {
                let ports = geo.ports_per_track;
                Some((unit as u32 * ports, ports))
            }
            Mapping::BitInterleaved => {
                let ports = geo.pairs_per_node;
                let ip = geo.interport_bits as i64;
                let offset = dev.track(tracks.start).ok()?.offset();
                let cell = (offset - 1).clamp(0, ip - 1) as u32;
                let block = unit as u32 * geo.interport_bits + cell;
                Some((block * ports, ports))
            }
        }
    }

    pub fn arena_tracks(&self) -> usize {
        self.arena_units.iter().map(|r| r.len()).sum()
    }

    /// Write schedule for a set of word slots of one node. With `batched`,
    /// words that can share an alignment are issued together; otherwise each
    /// word (or, for bit-interleaved, each key/value pair sharing a cell) is
    /// its own unit.
    pub fn plan_write(
        &self,
        node: NodeId,
        writes: &[(u32, WordPattern)],
        batched: bool,
    ) -> Result<Vec<AccessUnit>> {
        let mut units: Vec<AccessUnit> = Vec::new();
        for &(word, pattern) in writes {
            match self.locate(node, word)? {
                Location::Word { track, port } => {
                    if batched {
                        if let Some(AccessUnit::Word { words, .. }) = units.last_mut() {
                            words.push((port, pattern));
                            continue;
                        }
                    }
                    units.push(AccessUnit::Word {
                        track,
                        words: vec![(port, pattern)],
                    });
                }
                Location::Column {
                    group,
                    bits,
                    port,
                    offset,
                } => {
                    let cw = ColumnWord {
                        tracks: bits,
                        port,
                        new: pattern,
                    };
                    let target = if batched {
                        units.iter_mut().find_map(|u| match u {
                            AccessUnit::Column { offset: o, words, .. } if *o == offset => Some(words),
                            _ => None,
                        })
                    } else {
                        match units.last_mut() {
                            Some(AccessUnit::Column { offset: o, words, .. })
                                if *o == offset && words.iter().all(|w| w.port == port) =>
                            {
                                Some(words)
                            }
                            _ => None,
                        }
                    };
                    match target {
                        Some(words) => words.push(cw),
                        None => units.push(AccessUnit::Column {
                            group,
                            offset,
                            words: vec![cw],
                        }),
                    }
                }
            }
        }
        Ok(units)
    }

    /// Read schedule for word slots of one node, one unit per word.
    pub fn plan_read(&self, node: NodeId, words: &[(u32, u32)]) -> Result<Vec<ReadUnit>> {
        words
            .iter()
            .map(|&(word, width)| {
                Ok(match self.locate(node, word)? {
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
                })
            })
            .collect()
    }

    /// Allocation table as JSON, for debugging.
    pub fn allocation_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Dump<'a> {
            mapping: Mapping,
            geometry: &'a Geometry,
            grouped: bool,
            nodes: &'a BTreeMap<NodeId, Placement>,
            groups: &'a [Group],
            arena_units: &'a [Range<TrackId>],
        }
        Ok(serde_json::to_string_pretty(&Dump {
            mapping: self.mapping,
            geometry: &self.geometry,
            grouped: self.grouped,
            nodes: &self.nodes,
            groups: &self.groups,
            arena_units: &self.arena_units,
        })?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{accumulate_cost, CostModel, ShiftPolicy};
    use crate::strategy::{column_read, read_sweep};

    fn geo(w: u32) -> Geometry {
        Geometry::new(w, 16)
    }

    #[test]
    fn word_based_nodes_get_distinct_tracks() {
        let mut dev = Device::new(ShiftPolicy::Lazy);
        let mut l = Layout::new(Mapping::Word, geo(64), false).unwrap();
        let a = l.place_node_word_based(&mut dev, 0).unwrap();
        let b = l.place_node_word_based(&mut dev, 1).unwrap();
        assert_ne!(a.track, b.track);
        assert_eq!(a.slots, 32);
        // internal node: pivots at pairs 0..4, so pivot key of pair 3 is word 6
        assert_eq!(l.locate(0, 6).unwrap(), Location::Word { track: a.track, port: 6 });
        assert!(l.place_node_word_based(&mut dev, 0).is_err());
        assert_eq!(dev.total_population(), 0);
    }

    #[test]
    fn group_has_two_tracks_per_bit() {
        let mut dev = Device::new(ShiftPolicy::Lazy);
        let mut l = Layout::new(Mapping::BitInterleaved, geo(64), true).unwrap();
        let a = l.place_group_bit_interleaved(&mut dev, &[7], NodeKind::Leaf).unwrap();
        assert_eq!(a.tracks.len(), 128);
        match l.locate(7, 0).unwrap() {
            Location::Column { offset, port, .. } => assert_eq!((offset, port), (1, 0)),
            other => panic!("{other:?}"),
        }
        let too_many: Vec<NodeId> = (100..100 + 65).collect();
        assert!(matches!(
            l.place_group_bit_interleaved(&mut dev, &too_many, NodeKind::Leaf),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn neighbouring_nodes_are_one_shift_apart() {
        let mut dev = Device::new(ShiftPolicy::Lazy);
        let mut l = Layout::new(Mapping::BitInterleaved, geo(64), true).unwrap();
        let a = l.place_group_bit_interleaved(&mut dev, &[0, 1], NodeKind::Leaf).unwrap();
        let off = |n| match l.locate(n, 0).unwrap() {
            Location::Column { offset, .. } => offset,
            _ => unreachable!(),
        };
        dev.align(a.tracks.clone(), off(0)).unwrap();
        let before = dev.counters().shift;
        let steps = dev.align(a.tracks.clone(), off(1)).unwrap();
        assert_eq!(steps, 1);
        assert_eq!(dev.counters().shift - before, 128);
    }

    #[test]
    fn port_density_matches_between_mappings() {
        let g = geo(64);
        assert_eq!(g.bits_per_port(Mapping::Word), g.bits_per_port(Mapping::BitInterleaved));
        // word-based: 32 ports over 32 words of 64 bits
        let word_bits_stored = g.ports_per_track * g.interport_bits;
        assert_eq!(word_bits_stored / g.ports_per_track, 64);
        // bit-interleaved: 16 ports per track, 64 cells behind each
        let bi_bits = g.pairs_per_node * g.interport_bits;
        assert_eq!(bi_bits / g.pairs_per_node, 64);
    }

    #[test]
    fn bit_interleaved_read_is_one_detect_step() {
        let mut dev = Device::new(ShiftPolicy::Lazy);
        let mut l = Layout::new(Mapping::BitInterleaved, geo(64), true).unwrap();
        l.place(&mut dev, 0, NodeKind::Leaf).unwrap();
        let units = l.plan_read(0, &[(0, 64)]).unwrap();
        let ReadUnit::Column { group, offset, words } = &units[0] else {
            panic!()
        };
        column_read(&mut dev, group.clone(), *offset, words).unwrap();
        let c = dev.counters();
        assert_eq!(c.detect, 64);
        let det = c
            .latency_steps
            .steps_of(crate::device::PrimitiveSet::single(crate::device::Primitive::Detect));
        assert_eq!(det.steps, 1);

        // the same key read through a word-based port is 64 serial detects
        let mut dev = Device::new(ShiftPolicy::Lazy);
        let mut l = Layout::new(Mapping::Word, geo(64), false).unwrap();
        l.place(&mut dev, 0, NodeKind::Leaf).unwrap();
        let units = l.plan_read(0, &[(0, 64)]).unwrap();
        let ReadUnit::Word { track, slots } = &units[0] else {
            panic!()
        };
        read_sweep(&mut dev, *track, slots).unwrap();
        assert_eq!(dev.counters().detect, 64);
        assert_eq!(dev.counters().shift, 64);
        let lat = accumulate_cost(dev.counters(), &CostModel::default()).latency_ns;
        assert!((lat - (64.0 * 0.1 + 64.0 * 0.5)).abs() < 1e-9);
    }

    #[test]
    fn empty_write_plans_nothing() {
        let mut dev = Device::new(ShiftPolicy::Lazy);
        let mut l = Layout::new(Mapping::Word, geo(8), false).unwrap();
        l.place(&mut dev, 3, NodeKind::Internal).unwrap();
        assert!(l.plan_write(3, &[], true).unwrap().is_empty());
        assert!(matches!(l.plan_write(9, &[(0, WordPattern::zero(8))], true), Err(Error::UnknownNode(9))));
    }

    #[test]
    fn batched_plans_share_alignment() {
        let mut dev = Device::new(ShiftPolicy::Lazy);
        let mut l = Layout::new(Mapping::BitInterleaved, geo(8), true).unwrap();
        l.place(&mut dev, 0, NodeKind::Leaf).unwrap();
        let writes: Vec<_> = (0..32).map(|w| (w, WordPattern::from_u64(w as u64, 8))).collect();
        assert_eq!(l.plan_write(0, &writes, true).unwrap().len(), 1);

        let mut l = Layout::new(Mapping::BitInterleaved, geo(8), false).unwrap();
        l.place(&mut dev, 0, NodeKind::Leaf).unwrap();
        // sequential layout: one alignment per pair
        assert_eq!(l.plan_write(0, &writes, false).unwrap().len(), 16);

        let mut l = Layout::new(Mapping::Word, geo(8), false).unwrap();
        l.place(&mut dev, 0, NodeKind::Leaf).unwrap();
        assert_eq!(l.plan_write(0, &writes, true).unwrap().len(), 1);
        assert_eq!(l.plan_write(0, &writes, false).unwrap().len(), 32);
    }

    #[test]
    fn arena_slots_are_disjoint() {
        let mut dev = Device::new(ShiftPolicy::Lazy);
        let mut l = Layout::new(Mapping::Word, geo(8), false).unwrap();
        let a = l.arena_locate(&mut dev, 0);
        let b = l.arena_locate(&mut dev, 32);
        assert_ne!(a, b);
        assert_eq!(l.arena_tracks(), 2);
        let json = l.allocation_json().unwrap();
        assert!(json.contains("arena_units"));
    }
}
