use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};

/// Bits needed to address `capacity` slots.
pub fn index_bits(capacity: u32) -> u32 {
    if capacity <= 1 {
        0
    } else {
        32 - (capacity - 1).leading_zeros()
    }
}

/// Bytes of index storage needed to address every slot of an arena.
pub fn encoding_overhead_bytes(capacity: u32) -> u64 {
    index_bits(capacity) as u64 * capacity as u64 / 8
}

/// Slot bookkeeping for separated values. The values themselves live on the
/// device; this tracks which slots are live.
///
/// Slots at or above `next` have never been used. Freed slots below it are
/// kept ordered so an allocation can pick the one nearest a preferred slot.
#[derive(Clone, Debug, Serialize)]
pub struct ValueArena {
    capacity: u32,
    #[serde(skip)]
    free: BTreeSet<u32>,
    #[serde(skip)]
    in_use: Vec<bool>,
    next: u32,
    live: u32,
    high_water: u32,
}

impl ValueArena {
    pub fn new(capacity: u32) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("arena capacity must be positive".into()));
        }
        Ok(ValueArena {
            capacity,
            free: BTreeSet::new(),
            in_use: Vec::new(),
            next: 0,
            live: 0,
            high_water: 0,
        })
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn index_bits(&self) -> u32 {
        index_bits(self.capacity)
    }

    pub fn live(&self) -> u32 {
        self.live
    }

    pub fn high_water(&self) -> u32 {
        self.high_water
    }

    pub fn alloc(&mut self) -> Result<u32> {
        self.alloc_near(None)
    }

    /// Allocates the free slot whose block (run of `block` consecutive
    /// slots) is closest to the block of `target`; ties go to the lower slot.
    /// Without a target, the lowest free slot.
    pub fn alloc_near(&mut self, target: Option<(u32, u32)>) -> Result<u32> {
        let fresh = (self.next < self.capacity).then_some(self.next);
        let slot = match target {
            None => self.free.first().copied().or(fresh),
            Some((t, block)) => {
                let block = block.max(1);
                let dist = |s: u32| (s / block).abs_diff(t / block);
                [
                    self.free.range(..t).next_back().copied(),
                    self.free.range(t..).next().copied(),
                    fresh,
                ]
                .into_iter()
                .flatten()
                .min_by_key(|&s| (dist(s), s))
            }
        };
        let Some(slot) = slot else {
            return Err(Error::ArenaFull {
                capacity: self.capacity,
            });
        };
        if slot == self.next {
            self.in_use.push(false);
            self.next += 1;
        } else {
            self.free.remove(&slot);
        }
        self.in_use[slot as usize] = true;
        self.live += 1;
        self.high_water = self.high_water.max(self.live);
        Ok(slot)
    }

    pub fn free(&mut self, slot: u32) -> Result<()> {
        match self.in_use.get_mut(slot as usize) {
            Some(used) if *used => *used = false,
            _ => return Err(Error::Corruption(format!("arena slot {slot} freed while not live"))),
        }
        self.free.insert(slot);
        self.live -= 1;
        Ok(())
    }
}
