use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use racetrack_betree::betree::{DeviceStore, Field, NodeStore, WordWrite};
use racetrack_betree::device::{Device, ShiftPolicy};
use racetrack_betree::layout::{Geometry, Layout, Mapping, NodeKind};
use racetrack_betree::strategy::{Strategy, WriteOptions};

fn store(mapping: Mapping, strategy: Strategy, parallel: bool, word_bits: u32) -> DeviceStore {
    let grouped = parallel && mapping == Mapping::BitInterleaved;
    let layout = Layout::new(mapping, Geometry::new(word_bits, 16), grouped).unwrap();
    DeviceStore::new(Device::new(ShiftPolicy::Lazy), layout, strategy, parallel, WriteOptions::default()).unwrap()
}

fn random_image(rng: &mut ChaCha8Rng, words: u32, mask: u64) -> Vec<WordWrite> {
    let mut out = Vec::new();
    for word in 0..words {
        if rng.random_bool(0.7) {
            let field = if word % 2 == 0 { Field::Key } else { Field::Element };
            out.push(WordWrite { word, field, value: rng.random::<u64>() & mask });
        }
    }
    out
}

/// Writes 520 random images (several per node, so later images overwrite
/// earlier ones) and checks that every slot reads back what was last written.
fn round_trip(mapping: Mapping, strategy: Strategy, parallel: bool, word_bits: u32, seed: u64) {
    let mut s = store(mapping, strategy, parallel, word_bits);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = if word_bits >= 64 { u64::MAX } else { (1 << word_bits) - 1 };
    let nodes = 40u32;
    for n in 0..nodes {
        let kind = if n % 3 == 0 { NodeKind::Internal } else { NodeKind::Leaf };
        s.place(n, kind).unwrap();
    }
    let mut expected = vec![vec![None; 32]; nodes as usize];
    for _ in 0..520 {
        let n = rng.random_range(0..nodes);
        let img = random_image(&mut rng, 32, mask);
        s.write_words(n, &img).unwrap();
        for w in &img {
            expected[n as usize][w.word as usize] = Some(w.value);
        }
    }
    for n in 0..nodes {
        for (word, v) in expected[n as usize].iter().enumerate() {
            if let Some(v) = v {
                assert_eq!(s.peek_word(n, word as u32, Field::Key).unwrap(), *v, "node {n} word {word}");
            }
        }
    }
    // charged reads agree with the raw cells
    for _ in 0..200 {
        let n = rng.random_range(0..nodes);
        let word = rng.random_range(0..32u32);
        if let Some(v) = expected[n as usize][word as usize] {
            assert_eq!(s.read_word(n, word, Field::Key).unwrap(), v);
        }
    }
}

#[test]
fn word_based_naive() {
    round_trip(Mapping::Word, Strategy::Naive, false, 64, 1);
}

#[test]
fn word_based_permutation() {
    round_trip(Mapping::Word, Strategy::Pw, false, 32, 2);
}

#[test]
fn word_based_parallel_bcw() {
    round_trip(Mapping::Word, Strategy::Bcw, true, 64, 3);
}

#[test]
fn bit_interleaved_sequential_dcw() {
    round_trip(Mapping::BitInterleaved, Strategy::Dcw, false, 16, 4);
}

#[test]
fn bit_interleaved_grouped_naive() {
    round_trip(Mapping::BitInterleaved, Strategy::Naive, true, 64, 5);
}

#[test]
fn wide_words_round_trip() {
    round_trip(Mapping::Word, Strategy::Bcw, true, 128, 6);
}

#[test]
fn arena_slots_round_trip() {
    for mapping in [Mapping::Word, Mapping::BitInterleaved] {
        let mut s = store(mapping, Strategy::Bcw, true, 64);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let values: Vec<u64> = (0..600).map(|_| rng.random()).collect();
        for (slot, v) in values.iter().enumerate() {
            s.arena_write(slot as u32, *v).unwrap();
        }
        for (slot, v) in values.iter().enumerate().rev() {
            assert_eq!(s.arena_read(slot as u32).unwrap(), *v);
        }
    }
}
