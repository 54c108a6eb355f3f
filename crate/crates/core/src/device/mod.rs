//! Racetrack device model: tracks, access ports, the four primitives, and
//! exact operation accounting.

mod cost;
mod track;

use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use cost::{
    accumulate_cost, CostModel, CostTotals, CounterExport, LatencyLedger, LatencyRecord,
    OpCounters, OpDelta, PerPrimitive, Primitive, PrimitiveSet, StepTally,
};
pub use track::Track;

use crate::error::{Error, Result};

pub type TrackId = usize;

/// `Right` moves the data so each port faces the next cell of its segment
/// (offset + 1); `Left` moves it back.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftPolicy {
    /// Tracks stay wherever the last access left them.
    #[default]
    Lazy,
    /// Tracks are returned to offset 0 after every access.
    Eager,
}

impl std::str::FromStr for ShiftPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lazy" => Ok(ShiftPolicy::Lazy),
            "eager" => Ok(ShiftPolicy::Eager),
            other => Err(Error::Config(format!("unknown shift policy `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Device {
    tracks: Vec<Track>,
    counters: OpCounters,
    policy: ShiftPolicy,
}

impl Device {
    pub fn new(policy: ShiftPolicy) -> Self {
        Device {
            tracks: Vec::new(),
            counters: OpCounters::default(),
            policy,
        }
    }

    pub fn policy(&self) -> ShiftPolicy {
        self.policy
    }

    pub fn add_track(&mut self, ports: u32, interport: u32) -> TrackId {
        self.tracks.push(Track::new(ports, interport));
        self.tracks.len() - 1
    }

    /// Allocates `n` tracks with consecutive ids.
    pub fn add_tracks(&mut self, n: usize, ports: u32, interport: u32) -> Range<TrackId> {
        let start = self.tracks.len();
        for _ in 0..n {
            self.tracks.push(Track::new(ports, interport));
        }
        start..self.tracks.len()
    }

    pub fn track_count(&self) -> usize {
        self.tracks.len()
    }

    pub fn track(&self, id: TrackId) -> Result<&Track> {
        self.tracks.get(id).ok_or(Error::UnknownTrack(id))
    }

    pub fn track_mut(&mut self, id: TrackId) -> Result<&mut Track> {
        self.tracks.get_mut(id).ok_or(Error::UnknownTrack(id))
    }

    pub fn counters(&self) -> &OpCounters {
        &self.counters
    }

    pub fn take_counters(&mut self) -> OpCounters {
        std::mem::take(&mut self.counters)
    }

    pub fn total_population(&self) -> u64 {
        self.tracks.iter().map(Track::population).sum()
    }

    /// Shifts every track in `tracks` together by `steps`. Energy is charged
    /// per track per step; each step is one latency step of width `|tracks|`.
    pub fn shift(&mut self, tracks: Range<TrackId>, dir: Direction, steps: u32) -> Result<()> {
        if steps == 0 || tracks.is_empty() {
            return Ok(());
        }
        let delta = match dir {
            Direction::Right => steps as i64,
            Direction::Left => -(steps as i64),
        };
        for id in tracks.clone() {
            let t = self.track(id)?;
            let target = t.offset() + delta;
            let limit = t.interport() as i64;
            if target.abs() > limit {
                return Err(Error::BoundaryViolation {
                    track: id,
                    offset: target,
                    limit,
                });
            }
        }
        let width = tracks.len() as u64;
        for id in tracks {
            let t = &mut self.tracks[id];
            let target = t.offset() + delta;
            t.set_offset(target);
        }
        self.counters.bump(Primitive::Shift, steps as u64 * width);
        self.counters
            .latency_steps
            .record(PrimitiveSet::single(Primitive::Shift), width, steps as u64);
        Ok(())
    }

    /// Lazily moves a track set (which must share one offset) to `target`.
    /// Returns the number of shift steps issued.
    pub fn align(&mut self, tracks: Range<TrackId>, target: i64) -> Result<u32> {
        let Some(first) = tracks.clone().next() else {
            return Ok(0);
        };
        let current = self.track(first)?.offset();
        for id in tracks.clone() {
            let o = self.track(id)?.offset();
            if o != current {
                return Err(Error::Alignment(format!(
                    "track {id} at offset {o}, track {first} at {current}"
                )));
            }
        }
        let steps = (target - current).unsigned_abs() as u32;
        let dir = if target > current {
            Direction::Right
        } else {
            Direction::Left
        };
        self.shift(tracks, dir, steps)?;
        Ok(steps)
    }

    /// Under the eager policy, returns the tracks to offset 0.
    pub fn settle(&mut self, tracks: Range<TrackId>) -> Result<()> {
        if self.policy == ShiftPolicy::Eager {
            self.align(tracks, 0)?;
        }
        Ok(())
    }

    fn check_port(&self, track: TrackId, port: u32) -> Result<()> {
        let t = self.track(track)?;
        if port >= t.ports() {
            return Err(Error::PortOutOfRange {
                track,
                port,
                ports: t.ports(),
            });
        }
        Ok(())
    }

    pub fn detect(&mut self, track: TrackId, port: u32) -> Result<bool> {
        let mut step = self.parallel();
        let bit = step.detect(track, port)?;
        step.finish();
        Ok(bit)
    }

    pub fn inject(&mut self, track: TrackId, port: u32) -> Result<()> {
        let mut step = self.parallel();
        step.inject(track, port)?;
        step.finish();
        Ok(())
    }

    /// Returns whether a skyrmion was removed. Removing an empty cell is a
    /// free non-event.
    pub fn remove(&mut self, track: TrackId, port: u32) -> Result<bool> {
        let mut step = self.parallel();
        let removed = step.remove(track, port)?;
        step.finish();
        Ok(removed)
    }

    /// Opens one latency step; primitives issued through it execute in
    /// parallel and the step is charged when it is finished or dropped.
    pub fn parallel(&mut self) -> ParallelStep<'_> {
        ParallelStep {
            device: self,
            kinds: PrimitiveSet::default(),
            width: 0,
        }
    }

    /// Moves one skyrmion `from` → `to` within segment `segment` of a track,
    /// charged as one single-track shift per cell travelled. Only the
    /// permutation-write model uses this.
    pub(crate) fn reposition(
        &mut self,
        track: TrackId,
        segment: u32,
        from: u32,
        to: u32,
    ) -> Result<()> {
        let t = self.track_mut(track)?;
        if !t.relocate(segment, from, to) {
            return Err(Error::Alignment(format!(
                "track {track}: cannot move skyrmion from cell {from} to {to}"
            )));
        }
        let steps = from.abs_diff(to) as u64;
        self.counters.record_serial(Primitive::Shift, steps);
        Ok(())
    }
}

pub struct ParallelStep<'a> {
    device: &'a mut Device,
    kinds: PrimitiveSet,
    width: u64,
}

impl ParallelStep<'_> {
    pub fn detect(&mut self, track: TrackId, port: u32) -> Result<bool> {
        self.device.check_port(track, port)?;
        let bit = self.device.tracks[track].read_port(port);
        self.device.counters.bump(Primitive::Detect, 1);
        self.kinds.insert(Primitive::Detect);
        self.width += 1;
        Ok(bit)
    }

    /// Charges one extra detect in this step without reading a cell.
    pub(crate) fn charge_detect(&mut self) {
        self.device.counters.bump(Primitive::Detect, 1);
        self.kinds.insert(Primitive::Detect);
        self.width += 1;
    }

    pub fn inject(&mut self, track: TrackId, port: u32) -> Result<()> {
        self.device.check_port(track, port)?;
        let t = &mut self.device.tracks[track];
        if t.read_port(port) {
            return Err(Error::DoubleInjection { track, port });
        }
        t.write_port(port, true);
        self.device.counters.bump(Primitive::Inject, 1);
        self.kinds.insert(Primitive::Inject);
        self.width += 1;
        Ok(())
    }

    pub fn remove(&mut self, track: TrackId, port: u32) -> Result<bool> {
        self.device.check_port(track, port)?;
        let t = &mut self.device.tracks[track];
        if !t.read_port(port) {
            return Ok(false);
        }
        t.write_port(port, false);
        self.device.counters.bump(Primitive::Remove, 1);
        self.kinds.insert(Primitive::Remove);
        self.width += 1;
        Ok(true)
    }

    pub fn finish(self) {}
}

impl Drop for ParallelStep<'_> {
    fn drop(&mut self) {
        self.device
            .counters
            .latency_steps
            .record(self.kinds, self.width, 1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn latency(d: &Device) -> f64 {
        accumulate_cost(d.counters(), &CostModel::default()).latency_ns
    }

    #[test]
    fn shift_one_track() {
        let mut d = Device::new(ShiftPolicy::Lazy);
        let t = d.add_track(4, 8);
        d.shift(t..t + 1, Direction::Right, 3).unwrap();
        assert_eq!(d.track(t).unwrap().offset(), 3);
        assert_eq!(d.counters().shift, 3);
        assert!((latency(&d) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn group_shift_pays_energy_per_track_latency_once() {
        let mut d = Device::new(ShiftPolicy::Lazy);
        let g = d.add_tracks(128, 16, 64);
        d.shift(g, Direction::Right, 1).unwrap();
        assert_eq!(d.counters().shift, 128);
        assert!((latency(&d) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_shift_is_noop() {
        let mut d = Device::new(ShiftPolicy::Lazy);
        let t = d.add_track(4, 8);
        d.shift(t..t + 1, Direction::Left, 0).unwrap();
        assert_eq!(d.counters(), &OpCounters::default());
    }

    #[test]
    fn shifting_past_overflow_region_fails() {
        let mut d = Device::new(ShiftPolicy::Lazy);
        let t = d.add_track(4, 8);
        d.shift(t..t + 1, Direction::Right, 8).unwrap();
        let err = d.shift(t..t + 1, Direction::Right, 1).unwrap_err();
        assert!(matches!(err, Error::BoundaryViolation { .. }));
        // a failed shift leaves the track untouched
        assert_eq!(d.track(t).unwrap().offset(), 8);
        assert_eq!(d.counters().shift, 8);
    }

    #[test]
    fn detect_inject_remove() {
        let mut d = Device::new(ShiftPolicy::Lazy);
        let t = d.add_track(2, 8);
        d.track_mut(t).unwrap().poke(0, 0, true);
        d.align(t..t + 1, 1).unwrap();
        assert!(d.detect(t, 0).unwrap());
        assert!(d.detect(t, 0).unwrap());
        assert!(!d.detect(t, 1).unwrap());
        assert_eq!(d.counters().detect, 3);

        d.inject(t, 1).unwrap();
        assert!(d.detect(t, 1).unwrap());
        assert!(matches!(d.inject(t, 1), Err(Error::DoubleInjection { .. })));
        assert_eq!(d.counters().inject, 1);

        assert!(d.remove(t, 1).unwrap());
        assert!(!d.detect(t, 1).unwrap());
        assert!(!d.remove(t, 1).unwrap());
        assert_eq!(d.counters().remove, 1);
        assert!(matches!(d.detect(t, 2), Err(Error::PortOutOfRange { .. })));
    }

    #[test]
    fn lazy_align_reuses_position() {
        let mut d = Device::new(ShiftPolicy::Lazy);
        let t = d.add_track(2, 8);
        assert_eq!(d.align(t..t + 1, 0).unwrap(), 0);
        assert_eq!(d.align(t..t + 1, 1).unwrap(), 1);
        assert_eq!(d.align(t..t + 1, 1).unwrap(), 0);
        assert_eq!(d.counters().shift, 1);
    }

    #[test]
    fn parallel_step_is_one_latency_unit() {
        let mut d = Device::new(ShiftPolicy::Lazy);
        let t = d.add_track(4, 8);
        d.align(t..t + 1, 1).unwrap();
        let before = latency(&d);
        let mut step = d.parallel();
        for p in 0..4 {
            step.inject(t, p).unwrap();
        }
        step.finish();
        assert_eq!(d.counters().inject, 4);
        assert!((latency(&d) - before - 1.0).abs() < 1e-12);
    }
}
