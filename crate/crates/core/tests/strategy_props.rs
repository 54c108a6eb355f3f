use proptest::prelude::*;
use racetrack_betree::device::{Device, ShiftPolicy};
use racetrack_betree::strategy::{
    bcw_parallel_write, dcw_write, naive_write, pw_write, BatchUpdate, SlotRef, WriteOptions,
};
use racetrack_betree::word::WordPattern;

fn with_word(old: &WordPattern, ports: u32) -> (Device, SlotRef) {
    let mut dev = Device::new(ShiftPolicy::Lazy);
    let t = dev.add_track(ports, old.bits());
    for i in old.ones() {
        dev.track_mut(t).unwrap().poke(0, i, true);
    }
    (dev, SlotRef { track: t, port: 0 })
}

fn stored(dev: &Device, slot: SlotRef, bits: u32) -> WordPattern {
    let t = dev.track(slot.track).unwrap();
    let mut w = WordPattern::zero(bits);
    for i in 0..bits {
        w.set_bit(i, t.peek(slot.port, i));
    }
    w
}

fn word(bits: u32) -> impl Strategy<Value = WordPattern> {
    any::<[u64; 4]>().prop_map(move |limbs| {
        let mut w = WordPattern::zero(bits);
        for i in 0..bits {
            w.set_bit(i, limbs[(i / 64) as usize] >> (i % 64) & 1 == 1);
        }
        w
    })
}

fn pair() -> impl Strategy<Value = (WordPattern, WordPattern)> {
    prop_oneof![Just(4u32), Just(8), Just(16), Just(64), Just(128)]
        .prop_flat_map(|b| (word(b), word(b)))
}

/// Bits that must turn on and bits that must turn off.
fn xor_oracle(old: &WordPattern, new: &WordPattern) -> (u64, u64) {
    let mut up = 0;
    let mut down = 0;
    for i in 0..old.bits() {
        match (old.bit(i), new.bit(i)) {
            (false, true) => up += 1,
            (true, false) => down += 1,
            _ => {}
        }
    }
    (up, down)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn every_strategy_stores_the_new_word((old, new) in pair()) {
        let bits = old.bits();
        let (mut d1, s1) = with_word(&old, 3);
        let naive = naive_write(&mut d1, s1, new).unwrap();
        prop_assert_eq!(stored(&d1, s1, bits), new);

        let (mut d2, s2) = with_word(&old, 3);
        let dcw = dcw_write(&mut d2, s2, new, WriteOptions::default()).unwrap();
        prop_assert_eq!(stored(&d2, s2, bits), new);

        let (mut d3, s3) = with_word(&old, 3);
        let mut b = BatchUpdate::default();
        b.push(s3, new);
        let pw = pw_write(&mut d3, &b).unwrap();
        prop_assert_eq!(stored(&d3, s3, bits), new);

        let (up, down) = xor_oracle(&old, &new);
        prop_assert_eq!((dcw.inject, dcw.remove), (up, down));
        prop_assert_eq!(naive.inject, new.popcount() as u64);
        prop_assert_eq!(naive.remove, old.popcount() as u64);
        prop_assert!(pw.inject <= dcw.inject && dcw.inject <= naive.inject);
        prop_assert_eq!(pw.inject, (new.popcount() as u64).saturating_sub(old.popcount() as u64));
    }

    #[test]
    fn writes_conserve_population_up_to_inject_minus_remove((old, new) in pair()) {
        let (mut dev, slot) = with_word(&old, 2);
        let before = dev.total_population();
        let d = dcw_write(&mut dev, slot, new, WriteOptions::default()).unwrap();
        prop_assert_eq!(dev.total_population() + d.remove, before + d.inject);
    }

    #[test]
    fn batch_write_matches_per_word_oracle(
        words in prop::collection::vec((word(16), word(16)), 1..8),
    ) {
        let mut dev = Device::new(ShiftPolicy::Lazy);
        let t = dev.add_track(8, 16);
        let mut batch = BatchUpdate::default();
        let (mut up, mut down) = (0, 0);
        for (port, (old, new)) in words.iter().enumerate() {
            for i in old.ones() {
                dev.track_mut(t).unwrap().poke(port as u32, i, true);
            }
            let (u, d) = xor_oracle(old, new);
            up += u;
            down += d;
            batch.push(SlotRef { track: t, port: port as u32 }, *new);
        }
        let d = bcw_parallel_write(&mut dev, &batch, WriteOptions::default()).unwrap();
        prop_assert_eq!((d.inject, d.remove), (up, down));
        // shifted out and back once, whatever the batch size
        prop_assert_eq!(d.shift, 32);
        for (port, (_, new)) in words.iter().enumerate() {
            prop_assert_eq!(stored(&dev, SlotRef { track: t, port: port as u32 }, 16), *new);
        }
    }

    #[test]
    fn replay_is_deterministic((old, new) in pair()) {
        let run = || {
            let (mut dev, slot) = with_word(&old, 2);
            let mut b = BatchUpdate::default();
            b.push(slot, new);
            pw_write(&mut dev, &b).unwrap();
            (stored(&dev, slot, old.bits()), dev.counters().clone())
        };
        prop_assert_eq!(run(), run());
    }
}
