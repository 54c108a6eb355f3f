//! Word update strategies expressed over the device primitives.
//!
//! Word-based procedures move a word through its port: `w` shifts out and
//! `w` shifts back, touching one bit per step. Column procedures (bit-interleaved
//! mapping) hold one bit of each word per track, so after alignment a whole
//! word is reached in a single parallel step.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::device::{Device, Direction, OpDelta, TrackId};
use crate::error::{Error, Result};
use crate::word::WordPattern;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Remove every skyrmion, inject every 1 of the new word. No reads.
    Naive,
    /// Data-comparison write: detect each old bit, flip only differences.
    Dcw,
    /// Permutation write: reuse old skyrmions by moving them. Single word only.
    Pw,
    /// Bit-comparison write across every port of a batch under one shift set.
    Bcw,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Naive => "naive",
            Strategy::Dcw => "dcw",
            Strategy::Pw => "pw",
            Strategy::Bcw => "bcw",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Strategy::Naive),
            "dcw" => Ok(Strategy::Dcw),
            "pw" => Ok(Strategy::Pw),
            "bcw" => Ok(Strategy::Bcw),
            other => Err(Error::Config(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteOptions {
    /// Charge a second detect per compared bit (for the to-be-written bit).
    pub count_new_detect: bool,
}

/// A word slot on a word-based track.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlotRef {
    pub track: TrackId,
    pub port: u32,
}

/// Words written together; the new pattern width is the field width.
#[derive(Clone, Debug, Default)]
pub struct BatchUpdate {
    pub slots: Vec<SlotRef>,
    pub new_patterns: Vec<WordPattern>,
}

impl BatchUpdate {
    pub fn push(&mut self, slot: SlotRef, new: WordPattern) {
        self.slots.push(slot);
        self.new_patterns.push(new);
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn word_size(&self) -> u32 {
        self.new_patterns.iter().map(|w| w.bits()).max().unwrap_or(0)
    }

    fn single_track(&self) -> Result<Option<TrackId>> {
        if self.slots.len() != self.new_patterns.len() {
            return Err(Error::Alignment(format!(
                "{} slots but {} patterns",
                self.slots.len(),
                self.new_patterns.len()
            )));
        }
        let Some(first) = self.slots.first() else {
            return Ok(None);
        };
        if let Some(other) = self.slots.iter().find(|s| s.track != first.track) {
            return Err(Error::Alignment(format!(
                "batch spans tracks {} and {}",
                first.track, other.track
            )));
        }
        let mut ports: Vec<_> = self.slots.iter().map(|s| s.port).collect();
        ports.sort_unstable();
        if ports.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Alignment("two batch words share a port".into()));
        }
        Ok(Some(first.track))
    }
}

fn one(track: TrackId) -> Range<TrackId> {
    track..track + 1
}

/// Remove-all then inject-all for a single word.
pub fn naive_write(dev: &mut Device, slot: SlotRef, new: WordPattern) -> Result<OpDelta> {
    let mut batch = BatchUpdate::default();
    batch.push(slot, new);
    naive_batch_write(dev, &batch)
}

/// Remove-all/inject-all over several ports of one track under one shift set.
pub fn naive_batch_write(dev: &mut Device, batch: &BatchUpdate) -> Result<OpDelta> {
    let before = dev.counters().snapshot();
    let Some(track) = batch.single_track()? else {
        return Ok(OpDelta::default());
    };
    let w = batch.word_size();
    dev.align(one(track), 0)?;
    for k in 1..=w {
        dev.shift(one(track), Direction::Right, 1)?;
        let mut step = dev.parallel();
        for (slot, new) in batch.slots.iter().zip(&batch.new_patterns) {
            if k <= new.bits() {
                step.remove(track, slot.port)?;
            }
        }
    }
    for k in (1..=w).rev() {
        {
            let mut step = dev.parallel();
            for (slot, new) in batch.slots.iter().zip(&batch.new_patterns) {
                if k <= new.bits() && new.bit(k - 1) {
                    step.inject(track, slot.port)?;
                }
            }
        }
        dev.shift(one(track), Direction::Left, 1)?;
    }
    dev.settle(one(track))?;
    Ok(dev.counters().delta_since(before))
}

/// Data-comparison write of one word: a batch of one.
pub fn dcw_write(
    dev: &mut Device,
    slot: SlotRef,
    new: WordPattern,
    opts: WriteOptions,
) -> Result<OpDelta> {
    let mut batch = BatchUpdate::default();
    batch.push(slot, new);
    bcw_parallel_write(dev, &batch, opts)
}

/// Bit-comparison write of a batch: shift out once, then on every step back
/// detect the old bit at each port and inject or remove where it differs.
pub fn bcw_parallel_write(
    dev: &mut Device,
    batch: &BatchUpdate,
    opts: WriteOptions,
) -> Result<OpDelta> {
    let before = dev.counters().snapshot();
    let Some(track) = batch.single_track()? else {
        return Ok(OpDelta::default());
    };
    let w = batch.word_size();
    dev.align(one(track), 0)?;
    dev.shift(one(track), Direction::Right, w)?;
    let mut old = vec![false; batch.len()];
    for k in (1..=w).rev() {
        {
            let mut step = dev.parallel();
            for (j, (slot, new)) in batch.slots.iter().zip(&batch.new_patterns).enumerate() {
                if k <= new.bits() {
                    old[j] = step.detect(track, slot.port)?;
                    if opts.count_new_detect {
                        step.charge_detect();
                    }
                }
            }
        }
        {
            let mut step = dev.parallel();
            for (j, (slot, new)) in batch.slots.iter().zip(&batch.new_patterns).enumerate() {
                if k > new.bits() {
                    continue;
                }
                match (old[j], new.bit(k - 1)) {
                    (false, true) => step.inject(track, slot.port)?,
                    (true, false) => {
                        step.remove(track, slot.port)?;
                    }
                    _ => {}
                }
            }
        }
        dev.shift(one(track), Direction::Left, 1)?;
    }
    dev.settle(one(track))?;
    Ok(dev.counters().delta_since(before))
}

/// Permutation write of a single word. The word is read while it is shifted
/// out; skyrmions are then matched to the new 1-positions with minimum total
/// displacement, moved (one shift per cell travelled), and the surplus
/// removed or the deficit injected while shifting back.
pub fn pw_write(dev: &mut Device, batch: &BatchUpdate) -> Result<OpDelta> {
    if batch.len() > 1 {
        return Err(Error::UnsupportedParallelPw(batch.len()));
    }
    let before = dev.counters().snapshot();
    let Some(track) = batch.single_track()? else {
        return Ok(OpDelta::default());
    };
    let slot = batch.slots[0];
    let new = batch.new_patterns[0];
    let w = new.bits();

    dev.align(one(track), 0)?;
    let mut old = WordPattern::zero(w);
    for k in 1..=w {
        dev.shift(one(track), Direction::Right, 1)?;
        if dev.detect(track, slot.port)? {
            old.set_bit(k - 1, true);
        }
    }

    let plan = PermutationPlan::new(&old, &new);
    for &(from, to) in &plan.moves {
        if from != to {
            dev.reposition(track, slot.port, from, to)?;
        }
    }

    for k in (1..=w).rev() {
        let b = k - 1;
        if plan.surplus.contains(&b) {
            dev.remove(track, slot.port)?;
        } else if plan.deficit.contains(&b) {
            dev.inject(track, slot.port)?;
        }
        dev.shift(one(track), Direction::Left, 1)?;
    }
    dev.settle(one(track))?;
    Ok(dev.counters().delta_since(before))
}

/// Minimum-displacement reuse of old skyrmions for a permutation write.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PermutationPlan {
    /// (from, to) cell moves in a collision-free execution order.
    pub moves: Vec<(u32, u32)>,
    /// Old 1-positions that are removed.
    pub surplus: Vec<u32>,
    /// New 1-positions that need an inject.
    pub deficit: Vec<u32>,
}

impl PermutationPlan {
    pub fn new(old: &WordPattern, new: &WordPattern) -> Self {
        let a: Vec<u32> = old.ones().collect();
        let b: Vec<u32> = new.ones().collect();
        let pairs = if a.len() >= b.len() {
            order_preserving_match(&a, &b)
        } else {
            order_preserving_match(&b, &a)
                .into_iter()
                .map(|(x, y)| (y, x))
                .collect()
        };
        let surplus = a
            .iter()
            .copied()
            .filter(|p| !pairs.iter().any(|(f, _)| f == p))
            .collect();
        let deficit = b
            .iter()
            .copied()
            .filter(|p| !pairs.iter().any(|(_, t)| t == p))
            .collect();

        // left-movers in ascending order, then right-movers in descending order
        let mut moves: Vec<(u32, u32)> = pairs.iter().copied().filter(|(f, t)| t < f).collect();
        moves.sort_unstable();
        let mut right: Vec<(u32, u32)> = pairs.iter().copied().filter(|(f, t)| t > f).collect();
        right.sort_unstable_by(|x, y| y.cmp(x));
        moves.extend(right);
        PermutationPlan {
            moves,
            surplus,
            deficit,
        }
    }

    pub fn displacement(&self) -> u32 {
        self.moves.iter().map(|(f, t)| f.abs_diff(*t)).sum()
    }
}

/// Picks `short.len()` elements of `long` (keeping order) matched to `short`
/// with minimum total |difference|. Returns (long_elem, short_elem) pairs.
fn order_preserving_match(long: &[u32], short: &[u32]) -> Vec<(u32, u32)> {
    let (m, n) = (long.len(), short.len());
    if n == 0 {
        return Vec::new();
    }
    const INF: u64 = u64::MAX / 2;
    // cost[i][j]: best cost matching short[..j] within long[..i]
    let mut cost = vec![vec![INF; n + 1]; m + 1];
    for row in cost.iter_mut() {
        row[0] = 0;
    }
    for i in 1..=m {
        for j in 1..=n.min(i) {
            let skip = cost[i - 1][j];
            let take = cost[i - 1][j - 1] + long[i - 1].abs_diff(short[j - 1]) as u64;
            cost[i][j] = skip.min(take);
        }
    }
    let mut pairs = Vec::with_capacity(n);
    let (mut i, mut j) = (m, n);
    while j > 0 {
        let take = cost[i - 1][j - 1] + long[i - 1].abs_diff(short[j - 1]) as u64;
        if cost[i][j] == take {
            pairs.push((long[i - 1], short[j - 1]));
            j -= 1;
        }
        i -= 1;
    }
    pairs.reverse();
    pairs
}

/// Dispatch of a word-based batch to the configured strategy.
pub fn write_sweep(
    dev: &mut Device,
    strategy: Strategy,
    batch: &BatchUpdate,
    opts: WriteOptions,
) -> Result<OpDelta> {
    match strategy {
        Strategy::Naive => naive_batch_write(dev, batch),
        Strategy::Dcw | Strategy::Bcw => bcw_parallel_write(dev, batch, opts),
        Strategy::Pw => pw_write(dev, batch),
    }
}

/// Reads words of the given widths through their ports on one track in a
/// single pass, moving whichever way is closer from the current offset.
pub fn read_sweep(dev: &mut Device, track: TrackId, slots: &[(u32, u32)]) -> Result<Vec<WordPattern>> {
    let mut out: Vec<WordPattern> = slots.iter().map(|&(_, w)| WordPattern::zero(w)).collect();
    let w = slots.iter().map(|&(_, w)| w).max().unwrap_or(0);
    if w == 0 {
        return Ok(out);
    }
    let current = dev.track(track)?.offset();
    let ascending = (current - 1).abs() <= (current - w as i64).abs();
    let bits: Box<dyn Iterator<Item = u32>> = if ascending {
        Box::new(0..w)
    } else {
        Box::new((0..w).rev())
    };
    for b in bits {
        dev.align(one(track), b as i64 + 1)?;
        let mut step = dev.parallel();
        for (j, &(port, width)) in slots.iter().enumerate() {
            if b < width && step.detect(track, port)? {
                out[j].set_bit(b, true);
            }
        }
    }
    dev.settle(one(track))?;
    Ok(out)
}

/// A word laid across tracks: bit `i` lives on `tracks.start + i`, in the
/// segment served by `port`.
#[derive(Clone, Debug)]
pub struct ColumnWord {
    pub tracks: Range<TrackId>,
    pub port: u32,
    pub new: WordPattern,
}

/// Writes column words that share one alignment of `group` at `offset`.
/// All words are handled in the same parallel steps.
pub fn column_write(
    dev: &mut Device,
    group: Range<TrackId>,
    offset: i64,
    words: &[ColumnWord],
    strategy: Strategy,
    opts: WriteOptions,
) -> Result<OpDelta> {
    let before = dev.counters().snapshot();
    if words.is_empty() {
        return Ok(OpDelta::default());
    }
    dev.align(group.clone(), offset)?;
    match strategy {
        Strategy::Naive => {
            {
                let mut step = dev.parallel();
                for word in words {
                    for i in 0..word.new.bits() {
                        step.remove(word.tracks.start + i as usize, word.port)?;
                    }
                }
            }
            let mut step = dev.parallel();
            for word in words {
                for i in word.new.ones() {
                    step.inject(word.tracks.start + i as usize, word.port)?;
                }
            }
        }
        Strategy::Dcw | Strategy::Bcw => {
            let mut old: Vec<WordPattern> = Vec::with_capacity(words.len());
            {
                let mut step = dev.parallel();
                for word in words {
                    let mut o = WordPattern::zero(word.new.bits());
                    for i in 0..word.new.bits() {
                        if step.detect(word.tracks.start + i as usize, word.port)? {
                            o.set_bit(i, true);
                        }
                        if opts.count_new_detect {
                            step.charge_detect();
                        }
                    }
                    old.push(o);
                }
            }
            let mut step = dev.parallel();
            for (word, o) in words.iter().zip(&old) {
                for i in 0..word.new.bits() {
                    let t = word.tracks.start + i as usize;
                    match (o.bit(i), word.new.bit(i)) {
                        (false, true) => step.inject(t, word.port)?,
                        (true, false) => {
                            step.remove(t, word.port)?;
                        }
                        _ => {}
                    }
                }
            }
        }
        Strategy::Pw => {
            return Err(Error::Config(
                "permutation write is defined for the word-based mapping only".into(),
            ))
        }
    }
    dev.settle(group)?;
    Ok(dev.counters().delta_since(before))
}

/// Reads column words sharing one alignment in a single detect step.
pub fn column_read(
    dev: &mut Device,
    group: Range<TrackId>,
    offset: i64,
    words: &[(Range<TrackId>, u32, u32)],
) -> Result<Vec<WordPattern>> {
    if words.is_empty() {
        return Ok(Vec::new());
    }
    dev.align(group.clone(), offset)?;
    let mut out = Vec::with_capacity(words.len());
    {
        let mut step = dev.parallel();
        for (tracks, port, width) in words {
            let mut w = WordPattern::zero(*width);
            for i in 0..*width {
                if step.detect(tracks.start + i as usize, *port)? {
                    w.set_bit(i, true);
                }
            }
            out.push(w);
        }
    }
    dev.settle(group)?;
    Ok(out)
}
