//! Write-optimized B^ε-tree whose nodes live in a [`NodeStore`].
//!
//! Internal nodes hold up to `pivot_slots` pivots and `node_capacity -
//! pivot_slots` buffered messages. Upserts enter the root buffer; a full
//! buffer flushes one batch (all messages bound for the busiest child) a
//! level down. With encoding enabled, a message carries an arena index in
//! place of its value, and the value is written once to the arena and read
//! back when the message reaches a leaf.

mod arena;
mod node;
mod store;

use serde::{Deserialize, Serialize};

pub use arena::{encoding_overhead_bytes, index_bits, ValueArena};
pub use node::{balanced_bounds, route, Image, Message, Node, Payload, Pivot};
pub use store::{CountingStore, DeviceStore, Field, NodeStore, StoreStats, WordWrite};

use crate::error::{Error, Result};
use crate::layout::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Pair slots per node (B).
    pub node_capacity: u32,
    pub pivot_slots: u32,
    pub leaf_slots: u32,
    pub encoding: bool,
    pub arena_capacity: u32,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            node_capacity: 16,
            pivot_slots: 4,
            leaf_slots: 16,
            encoding: false,
            arena_capacity: 1024,
        }
    }
}

impl TreeParams {
    /// Pivot slots of `round(B^ε)`, the rest of the node for the buffer.
    pub fn with_epsilon(node_capacity: u32, epsilon: f64) -> Self {
        let pivots = (node_capacity as f64).powf(epsilon).round() as u32;
        TreeParams {
            node_capacity,
            pivot_slots: pivots.clamp(2, node_capacity.saturating_sub(1).max(2)),
            leaf_slots: node_capacity,
            ..Self::default()
        }
    }

    pub fn buffer_slots(&self) -> u32 {
        self.node_capacity - self.pivot_slots
    }

    pub fn validate(&self) -> Result<()> {
        if self.pivot_slots < 2 || self.pivot_slots >= self.node_capacity {
            return Err(Error::Config(format!(
                "pivot_slots {} must be in [2, {})",
                self.pivot_slots, self.node_capacity
            )));
        }
        if self.leaf_slots < 2 || self.leaf_slots > self.node_capacity {
            return Err(Error::Config(format!(
                "leaf_slots {} must be in [2, {}]",
                self.leaf_slots, self.node_capacity
            )));
        }
        if self.encoding && self.arena_capacity == 0 {
            return Err(Error::Config("arena_capacity must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    pub upserts: u64,
    pub queries: u64,
    pub buffer_hits: u64,
    pub flushes: u64,
    pub flushed_messages: u64,
    pub splits: u64,
    /// Key-value pairs placed into a node: new messages and elements, pairs
    /// carried down by flushes, and pairs moved to new nodes by splits.
    pub pair_writes: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub nodes: usize,
    pub height: usize,
    pub leaves: usize,
    pub elements: usize,
    pub buffered: usize,
}

pub struct BeTree<S: NodeStore> {
    store: S,
    params: TreeParams,
    nodes: Vec<Node>,
    images: Vec<Image>,
    root: NodeId,
    arena: Option<ValueArena>,
    seq: u64,
    stats: TreeStats,
}

impl<S: NodeStore> BeTree<S> {
    pub fn new(mut store: S, params: TreeParams) -> Result<Self> {
        params.validate()?;
        let arena = if params.encoding {
            let a = ValueArena::new(params.arena_capacity)?;
            store.set_index_bits(a.index_bits());
            Some(a)
        } else {
            None
        };
        let mut tree = BeTree {
            store,
            params,
            nodes: Vec::new(),
            images: Vec::new(),
            root: 0,
            arena,
            seq: 0,
            stats: TreeStats::default(),
        };
        tree.root = tree.alloc_node(Node::Leaf { elems: Vec::new() })?;
        Ok(tree)
    }

    pub fn store(&self) -> &S {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut S {
        &mut self.store
    }

    pub fn into_store(self) -> S {
        self.store
    }

    pub fn params(&self) -> &TreeParams {
        &self.params
    }

    pub fn arena(&self) -> Option<&ValueArena> {
        self.arena.as_ref()
    }

    pub fn stats(&self) -> &TreeStats {
        &self.stats
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> Result<&Node> {
        self.nodes.get(id as usize).ok_or(Error::UnknownNode(id))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn height(&self) -> usize {
        let mut h = 1;
        let mut id = self.root;
        while let Node::Internal { pivots, .. } = &self.nodes[id as usize] {
            id = pivots[0].child;
            h += 1;
        }
        h
    }

    fn p(&self) -> usize {
        self.params.pivot_slots as usize
    }

    fn m(&self) -> usize {
        self.params.buffer_slots() as usize
    }

    fn l(&self) -> usize {
        self.params.leaf_slots as usize
    }

    fn alloc_node(&mut self, node: Node) -> Result<NodeId> {
        let id = self.nodes.len() as NodeId;
        self.store.place(id, node.kind())?;
        self.nodes.push(node);
        self.images
            .push(vec![None; 2 * self.params.node_capacity as usize]);
        Ok(id)
    }

    fn logical_image(&self, id: NodeId) -> Result<Image> {
        self.nodes[id as usize]
            .image(self.p(), self.params.node_capacity as usize)
            .ok_or_else(|| Error::Corruption(format!("node {id} overflows its slots")))
    }

    /// Writes every word whose content differs from what the device holds.
    fn commit(&mut self, id: NodeId) -> Result<()> {
        let img = self.logical_image(id)?;
        let held = &mut self.images[id as usize];
        let mut writes = Vec::new();
        for (w, slot) in img.iter().enumerate() {
            if let Some((field, value)) = *slot {
                if held[w] != Some((field, value)) {
                    writes.push(WordWrite {
                        word: w as u32,
                        field,
                        value,
                    });
                    held[w] = Some((field, value));
                }
            }
        }
        self.store.write_words(id, &writes)
    }

    fn probe(&mut self, id: NodeId, pair: usize, field: Field, cache: &mut Vec<(usize, u64)>) -> Result<u64> {
        if let Some(&(_, k)) = cache.iter().find(|(p, _)| *p == pair) {
            return Ok(k);
        }
        let k = self.store.read_word(id, 2 * pair as u32, field)?;
        cache.push((pair, k));
        Ok(k)
    }

    /// Binary search over key words of pairs in `range`, reading each probed
    /// word from the store. Returns the first pair for which `pred` fails.
    fn search(
        &mut self,
        id: NodeId,
        range: std::ops::Range<usize>,
        field: Field,
        pred: impl Fn(u64) -> bool,
        cache: &mut Vec<(usize, u64)>,
    ) -> Result<usize> {
        let (mut lo, mut hi) = (range.start, range.end);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if pred(self.probe(id, mid, field, cache)?) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    pub fn query(&mut self, key: u64) -> Result<Option<u64>> {
        self.stats.queries += 1;
        let p = self.p();
        let mut id = self.root;
        loop {
            let mut cache = Vec::new();
            match &self.nodes[id as usize] {
                Node::Internal { pivots, buffer } => {
                    let (np, nb) = (pivots.len(), buffer.len());
                    let pos = self.search(id, p..p + nb, Field::Key, |k| k <= key, &mut cache)?;
                    if pos > p && self.probe(id, pos - 1, Field::Key, &mut cache)? == key {
                        let Node::Internal { buffer, .. } = &self.nodes[id as usize] else {
                            unreachable!()
                        };
                        let word = 2 * (pos - 1) as u32 + 1;
                        let value = match buffer[pos - 1 - p].payload {
                            Payload::Value(_) => self.store.read_word(id, word, Field::Payload)?,
                            Payload::Index(_) => {
                                let slot = self.store.read_word(id, word, Field::Index)?;
                                self.store.arena_read(slot as u32)?
                            }
                        };
                        self.stats.buffer_hits += 1;
                        return Ok(Some(value));
                    }
                    let c = self.search(id, 1..np, Field::PivotKey, |k| k <= key, &mut cache)? - 1;
                    let child = self.store.read_word(id, 2 * c as u32 + 1, Field::Child)? as NodeId;
                    let Node::Internal { pivots, .. } = &self.nodes[id as usize] else {
                        unreachable!()
                    };
                    if pivots[c].child != child {
                        return Err(Error::Corruption(format!(
                            "node {id} pivot {c} reads child {child}, expected {}",
                            pivots[c].child
                        )));
                    }
                    id = child;
                }
                Node::Leaf { elems } => {
                    let n = elems.len();
                    let pos = self.search(id, 0..n, Field::Key, |k| k < key, &mut cache)?;
                    if pos < n && self.probe(id, pos, Field::Key, &mut cache)? == key {
                        let v = self.store.read_word(id, 2 * pos as u32 + 1, Field::Element)?;
                        return Ok(Some(v));
                    }
                    return Ok(None);
                }
            }
        }
    }

    pub fn upsert(&mut self, key: u64, value: u64) -> Result<()> {
        self.stats.upserts += 1;
        self.seq += 1;
        let seq = self.seq;
        let root = self.root;

        if let Node::Leaf { elems } = &self.nodes[root as usize] {
            let n = elems.len();
            let mut cache = Vec::new();
            let pos = self.search(root, 0..n, Field::Key, |k| k < key, &mut cache)?;
            let exists = pos < n && self.probe(root, pos, Field::Key, &mut cache)? == key;
            let Node::Leaf { elems } = &mut self.nodes[root as usize] else {
                unreachable!()
            };
            self.stats.pair_writes += 1;
            if exists {
                elems[pos].1 = value;
            } else {
                elems.insert(pos, (key, value));
            }
            if elems.len() > self.params.leaf_slots as usize {
                let sibs = self.split_leaf(root)?;
                self.grow_root(sibs)?;
            } else {
                self.commit(root)?;
            }
            return Ok(());
        }

        let payload = match &mut self.arena {
            Some(arena) => {
                let slot = arena.alloc_near(self.store.arena_cursor())?;
                self.store.arena_write(slot, value)?;
                Payload::Index(slot)
            }
            None => Payload::Value(value),
        };
        if self.buffer_len(root) >= self.m() {
            self.flush_one(root)?;
            if self.pivot_len(root) > self.p() {
                let sibs = self.split_internal(root)?;
                self.grow_root(sibs)?;
            } else {
                self.commit(root)?;
            }
        }
        let root = self.root;
        let p = self.p();
        let nb = self.buffer_len(root);
        let pos = self.search(root, p..p + nb, Field::Key, |k| k <= key, &mut Vec::new())?;
        let Node::Internal { buffer, .. } = &mut self.nodes[root as usize] else {
            unreachable!()
        };
        buffer.insert(pos - p, Message { key, payload, seq });
        self.stats.pair_writes += 1;
        self.commit(root)
    }

    fn buffer_len(&self, id: NodeId) -> usize {
        match &self.nodes[id as usize] {
            Node::Internal { buffer, .. } => buffer.len(),
            Node::Leaf { .. } => 0,
        }
    }

    fn pivot_len(&self, id: NodeId) -> usize {
        match &self.nodes[id as usize] {
            Node::Internal { pivots, .. } => pivots.len(),
            Node::Leaf { .. } => 0,
        }
    }

    /// Puts a new root above the current one when a split produced siblings.
    fn grow_root(&mut self, sibs: Vec<Pivot>) -> Result<()> {
        if sibs.is_empty() {
            return Ok(());
        }
        let mut pivots = vec![Pivot {
            key: 0,
            child: self.root,
        }];
        pivots.extend(sibs);
        let id = self.alloc_node(Node::Internal {
            pivots,
            buffer: Vec::new(),
        })?;
        self.root = id;
        if self.pivot_len(id) > self.p() {
            let sibs = self.split_internal(id)?;
            self.grow_root(sibs)
        } else {
            self.commit(id)
        }
    }

    fn split_leaf(&mut self, id: NodeId) -> Result<Vec<Pivot>> {
        let Node::Leaf { elems } = &mut self.nodes[id as usize] else {
            return Err(Error::Corruption(format!("node {id} is not a leaf")));
        };
        let all = std::mem::take(elems);
        let parts = all.len().div_ceil(self.params.leaf_slots as usize);
        let bounds = balanced_bounds(all.len(), parts);
        *elems = all[bounds[0].clone()].to_vec();
        self.commit(id)?;
        let mut sibs = Vec::with_capacity(parts - 1);
        for b in &bounds[1..] {
            let key = all[b.start].0;
            self.stats.pair_writes += b.len() as u64;
            let child = self.alloc_node(Node::Leaf {
                elems: all[b.clone()].to_vec(),
            })?;
            self.commit(child)?;
            sibs.push(Pivot { key, child });
        }
        self.stats.splits += (parts - 1) as u64;
        Ok(sibs)
    }

    fn split_internal(&mut self, id: NodeId) -> Result<Vec<Pivot>> {
        let p = self.p();
        let Node::Internal { pivots, buffer } = &mut self.nodes[id as usize] else {
            return Err(Error::Corruption(format!("node {id} is not internal")));
        };
        let all_p = std::mem::take(pivots);
        let all_b = std::mem::take(buffer);
        let parts = all_p.len().div_ceil(p);
        let bounds = balanced_bounds(all_p.len(), parts);
        let msg_cut = |b: &std::ops::Range<usize>| {
            if b.start == 0 {
                0
            } else {
                let k = all_p[b.start].key;
                all_b.partition_point(|m| m.key < k)
            }
        };
        let cuts: Vec<usize> = bounds
            .iter()
            .map(msg_cut)
            .chain(std::iter::once(all_b.len()))
            .collect();

        *pivots = all_p[bounds[0].clone()].to_vec();
        *buffer = all_b[cuts[0]..cuts[1]].to_vec();
        self.commit(id)?;
        self.stats.pair_writes += (all_b.len() - cuts[1]) as u64;
        let mut sibs = Vec::with_capacity(parts - 1);
        for (i, b) in bounds.iter().enumerate().skip(1) {
            let key = all_p[b.start].key;
            let child = self.alloc_node(Node::Internal {
                pivots: all_p[b.clone()].to_vec(),
                buffer: all_b[cuts[i]..cuts[i + 1]].to_vec(),
            })?;
            self.commit(child)?;
            sibs.push(Pivot { key, child });
        }
        self.stats.splits += (parts - 1) as u64;
        Ok(sibs)
    }

    /// Moves every message bound for the busiest child of `id` into that
    /// child as one batch. The node's own image is left for the caller to
    /// commit.
    fn flush_one(&mut self, id: NodeId) -> Result<()> {
        let Node::Internal { pivots, buffer } = &mut self.nodes[id as usize] else {
            return Err(Error::Corruption(format!("flush of leaf {id}")));
        };
        if buffer.is_empty() {
            return Ok(());
        }
        let mut best = (0usize, 0..0);
        let mut start = 0;
        while start < buffer.len() {
            let c = route(pivots, buffer[start].key);
            let end = match pivots.get(c + 1) {
                Some(next) => start + buffer[start..].partition_point(|m| m.key < next.key),
                None => buffer.len(),
            };
            if end - start > best.1.len() {
                best = (c, start..end);
            }
            start = end;
        }
        let (c, range) = best;
        let child = pivots[c].child;
        let batch: Vec<Message> = buffer.drain(range).collect();
        self.stats.flushes += 1;
        self.stats.flushed_messages += batch.len() as u64;
        let sibs = self.apply_to_child(child, batch)?;
        let Node::Internal { pivots, .. } = &mut self.nodes[id as usize] else {
            unreachable!()
        };
        pivots.splice(c + 1..c + 1, sibs);
        Ok(())
    }

    fn free_slot(&mut self, slot: u32) -> Result<()> {
        self.arena
            .as_mut()
            .ok_or_else(|| Error::Corruption("index message without an arena".into()))?
            .free(slot)
    }

    fn apply_to_child(&mut self, child: NodeId, batch: Vec<Message>) -> Result<Vec<Pivot>> {
        let node = self
            .nodes
            .get(child as usize)
            .ok_or_else(|| Error::Corruption(format!("child {child} missing")))?;
        match node {
            Node::Leaf { .. } => {
                let mut resolved: Vec<(u64, u64)> = Vec::new();
                let mut pending: Vec<(u32, usize)> = Vec::new();
                let mut i = 0;
                while i < batch.len() {
                    let j = i + batch[i..].partition_point(|m| m.key == batch[i].key);
                    for older in &batch[i..j - 1] {
                        if let Payload::Index(s) = older.payload {
                            self.free_slot(s)?;
                        }
                    }
                    let value = match batch[j - 1].payload {
                        Payload::Value(v) => v,
                        Payload::Index(s) => {
                            pending.push((s, resolved.len()));
                            0
                        }
                    };
                    resolved.push((batch[i].key, value));
                    i = j;
                }
                // rejoin values in slot order so neighbouring slots share shifts
                pending.sort_unstable();
                for (s, at) in pending {
                    resolved[at].1 = self.store.arena_read(s)?;
                    self.free_slot(s)?;
                }
                let Node::Leaf { elems } = &mut self.nodes[child as usize] else {
                    unreachable!()
                };
                self.stats.pair_writes += resolved.len() as u64;
                let old = std::mem::take(elems);
                *elems = merge_elements(old, resolved);
                if elems.len() > self.l() {
                    self.split_leaf(child)
                } else {
                    self.commit(child)?;
                    Ok(Vec::new())
                }
            }
            Node::Internal { .. } => {
                let Node::Internal { buffer, .. } = &mut self.nodes[child as usize] else {
                    unreachable!()
                };
                self.stats.pair_writes += batch.len() as u64;
                let old = std::mem::take(buffer);
                *buffer = merge_messages(old, batch);
                while self.buffer_len(child) > self.m() {
                    self.flush_one(child)?;
                }
                if self.pivot_len(child) > self.p() {
                    self.split_internal(child)
                } else {
                    self.commit(child)?;
                    Ok(Vec::new())
                }
            }
        }
    }

    /// Flushes every buffered message down to the leaves.
    pub fn drain(&mut self) -> Result<()> {
        let sibs = self.drain_node(self.root)?;
        self.grow_root(sibs)
    }

    fn drain_node(&mut self, id: NodeId) -> Result<Vec<Pivot>> {
        if matches!(self.nodes[id as usize], Node::Leaf { .. }) {
            return Ok(Vec::new());
        }
        while self.buffer_len(id) > 0 {
            self.flush_one(id)?;
        }
        let mut i = 0;
        loop {
            let Node::Internal { pivots, .. } = &self.nodes[id as usize] else {
                unreachable!()
            };
            let Some(child) = pivots.get(i).map(|p| p.child) else {
                break;
            };
            let sibs = self.drain_node(child)?;
            let n = sibs.len();
            let Node::Internal { pivots, .. } = &mut self.nodes[id as usize] else {
                unreachable!()
            };
            pivots.splice(i + 1..i + 1, sibs);
            i += 1 + n;
        }
        if self.pivot_len(id) > self.p() {
            self.split_internal(id)
        } else {
            self.commit(id)?;
            Ok(Vec::new())
        }
    }

    /// Structural and device-image audit of the whole tree.
    pub fn audit(&self) -> Result<AuditReport> {
        let mut report = AuditReport::default();
        let mut leaf_depth = None;
        self.audit_node(self.root, 0, None, 1, &mut leaf_depth, &mut report)?;
        report.height = leaf_depth.unwrap_or(1);
        report.nodes = self.nodes.len();
        if let Some(arena) = &self.arena {
            let indexed = self
                .nodes
                .iter()
                .map(|n| match n {
                    Node::Internal { buffer, .. } => buffer
                        .iter()
                        .filter(|m| matches!(m.payload, Payload::Index(_)))
                        .count(),
                    Node::Leaf { .. } => 0,
                })
                .sum::<usize>();
            if indexed != arena.live() as usize {
                return Err(Error::Audit(format!(
                    "{indexed} indexed messages but {} live arena slots",
                    arena.live()
                )));
            }
        }
        Ok(report)
    }

    fn audit_node(
        &self,
        id: NodeId,
        lo: u64,
        hi: Option<u64>,
        depth: usize,
        leaf_depth: &mut Option<usize>,
        report: &mut AuditReport,
    ) -> Result<()> {
        let fail = |msg: String| Err(Error::Audit(format!("node {id}: {msg}")));
        let in_range = |k: u64| k >= lo && hi.is_none_or(|h| k < h);
        let img = self.logical_image(id)?;
        for (w, slot) in img.iter().enumerate() {
            if let Some((field, value)) = *slot {
                if self.images[id as usize][w] != Some((field, value)) {
                    return fail(format!("word {w} was never committed"));
                }
                let held = self.store.peek_word(id, w as u32, field)?;
                if held != value {
                    return fail(format!("word {w} holds {held:#x}, expected {value:#x}"));
                }
            }
        }
        match &self.nodes[id as usize] {
            Node::Internal { pivots, buffer } => {
                if pivots.is_empty() || pivots.len() > self.p() {
                    return fail(format!("{} pivots", pivots.len()));
                }
                if buffer.len() > self.m() {
                    return fail(format!("{} buffered messages", buffer.len()));
                }
                if pivots[0].key != lo {
                    return fail(format!("first pivot {} differs from bound {lo}", pivots[0].key));
                }
                if pivots.windows(2).any(|w| w[0].key >= w[1].key) {
                    return fail("pivot keys not strictly increasing".into());
                }
                if buffer
                    .windows(2)
                    .any(|w| (w[0].key, w[0].seq) >= (w[1].key, w[1].seq))
                {
                    return fail("buffer not sorted".into());
                }
                if let Some(m) = buffer.iter().find(|m| !in_range(m.key)) {
                    return fail(format!("message key {:#x} outside the node range", m.key));
                }
                report.buffered += buffer.len();
                for (i, p) in pivots.iter().enumerate() {
                    let next = pivots.get(i + 1).map(|n| n.key).or(hi);
                    self.audit_node(p.child, p.key, next, depth + 1, leaf_depth, report)?;
                }
            }
            Node::Leaf { elems } => {
                if elems.len() > self.l() {
                    return fail(format!("{} elements", elems.len()));
                }
                if elems.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return fail("elements not strictly increasing".into());
                }
                if let Some(e) = elems.iter().find(|e| !in_range(e.0)) {
                    return fail(format!("element key {:#x} outside the node range", e.0));
                }
                match *leaf_depth {
                    None => *leaf_depth = Some(depth),
                    Some(d) if d != depth => return fail(format!("leaf at depth {depth}, others at {d}")),
                    _ => {}
                }
                report.leaves += 1;
                report.elements += elems.len();
            }
        }
        Ok(())
    }

    /// Newest value of every key, read without device charges.
    pub fn logical_contents(&self) -> Result<std::collections::BTreeMap<u64, u64>> {
        let mut out = std::collections::BTreeMap::new();
        let mut pending: Vec<Message> = Vec::new();
        for n in &self.nodes {
            match n {
                Node::Leaf { elems } => out.extend(elems.iter().copied()),
                Node::Internal { buffer, .. } => pending.extend(buffer.iter().copied()),
            }
        }
        pending.sort_by_key(|m| m.seq);
        for m in pending {
            let v = match m.payload {
                Payload::Value(v) => v,
                Payload::Index(s) => self.store.peek_arena(s)?,
            };
            out.insert(m.key, v);
        }
        Ok(out)
    }
}

fn merge_elements(old: Vec<(u64, u64)>, new: Vec<(u64, u64)>) -> Vec<(u64, u64)> {
    let mut out = Vec::with_capacity(old.len() + new.len());
    let (mut a, mut b) = (old.into_iter().peekable(), new.into_iter().peekable());
    loop {
        match (a.peek(), b.peek()) {
            (Some(x), Some(y)) => {
                if x.0 < y.0 {
                    out.push(a.next().unwrap());
                } else {
                    if x.0 == y.0 {
                        a.next();
                    }
                    out.push(b.next().unwrap());
                }
            }
            (Some(_), None) => out.push(a.next().unwrap()),
            (None, Some(_)) => out.push(b.next().unwrap()),
            (None, None) => return out,
        }
    }
}

fn merge_messages(old: Vec<Message>, new: Vec<Message>) -> Vec<Message> {
    let mut out = Vec::with_capacity(old.len() + new.len());
    let (mut a, mut b) = (old.into_iter().peekable(), new.into_iter().peekable());
    loop {
        match (a.peek(), b.peek()) {
            (Some(x), Some(y)) => {
                if (x.key, x.seq) <= (y.key, y.seq) {
                    out.push(a.next().unwrap());
                } else {
                    out.push(b.next().unwrap());
                }
            }
            (Some(_), None) => out.push(a.next().unwrap()),
            (None, Some(_)) => out.push(b.next().unwrap()),
            (None, None) => return out,
        }
    }
}

impl BeTree<CountingStore> {
    /// Tree over an in-memory counting store (no device).
    pub fn counting(params: TreeParams) -> Result<Self> {
        BeTree::new(CountingStore::new(), params)
    }
}
