//! Fixed-width bit patterns stored in racetrack word slots.

use std::fmt;

use rand::Rng;

pub const MAX_WORD_BITS: u32 = 256;
const LIMBS: usize = (MAX_WORD_BITS / 64) as usize;

/// SplitMix64 finalizer. Bijective on `u64`, used for key scrambling and for
/// filling the upper limbs of words wider than 64 bits.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mask selecting the low `bits` bits of a `u64` (saturating at 64).
pub fn low_mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// A word of `bits` cells; bit `i` is the cell at position `i` of the slot.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct WordPattern {
    limbs: [u64; LIMBS],
    bits: u16,
}

impl WordPattern {
    pub fn zero(bits: u32) -> Self {
        assert!(bits <= MAX_WORD_BITS, "word of {bits} bits exceeds {MAX_WORD_BITS}");
        WordPattern {
            limbs: [0; LIMBS],
            bits: bits as u16,
        }
    }

    /// Raw encoding: the low bits of `x`, zero above bit 63.
    pub fn from_u64(x: u64, bits: u32) -> Self {
        let mut w = Self::zero(bits);
        w.limbs[0] = x & low_mask(bits);
        w
    }

    /// Full-width encoding: `x` in the low limb, the remaining limbs filled
    /// with a deterministic scramble of `x` so wide words are fully populated.
    /// `low_u64` recovers `x` (masked to the word width).
    pub fn expand(x: u64, bits: u32) -> Self {
        let mut w = Self::from_u64(x, bits);
        let mut remaining = bits.saturating_sub(64);
        let mut limb = 1;
        while remaining > 0 {
            let fill = splitmix64(x ^ (limb as u64).wrapping_mul(0xd6e8_feb8_6659_fd93));
            w.limbs[limb] = fill & low_mask(remaining);
            remaining = remaining.saturating_sub(64);
            limb += 1;
        }
        w
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, bits: u32) -> Self {
        let mut w = Self::zero(bits);
        let mut remaining = bits;
        for limb in w.limbs.iter_mut() {
            if remaining == 0 {
                break;
            }
            *limb = rng.random::<u64>() & low_mask(remaining);
            remaining = remaining.saturating_sub(64);
        }
        w
    }

    /// Parse a string of `0`/`1`, leftmost character is bit 0.
    pub fn parse(s: &str) -> Option<Self> {
        let mut w = Self::zero(s.len() as u32);
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => w.set_bit(i as u32, true),
                _ => return None,
            }
        }
        Some(w)
    }

    pub fn bits(&self) -> u32 {
        self.bits as u32
    }

    #[inline]
    pub fn bit(&self, i: u32) -> bool {
        debug_assert!(i < self.bits as u32);
        (self.limbs[(i / 64) as usize] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set_bit(&mut self, i: u32, v: bool) {
        debug_assert!(i < self.bits as u32);
        let limb = &mut self.limbs[(i / 64) as usize];
        if v {
            *limb |= 1 << (i % 64);
        } else {
            *limb &= !(1 << (i % 64));
        }
    }

    pub fn popcount(&self) -> u32 {
        self.limbs.iter().map(|l| l.count_ones()).sum()
    }

    pub fn low_u64(&self) -> u64 {
        self.limbs[0]
    }

    /// Number of positions where `self` is 0 and `other` is 1.
    pub fn rising_to(&self, other: &WordPattern) -> u32 {
        self.limbs
            .iter()
            .zip(other.limbs.iter())
            .map(|(a, b)| (!a & b).count_ones())
            .sum()
    }

    /// Same contents reinterpreted at a different width (truncating or zero-extending).
    pub fn resized(&self, bits: u32) -> Self {
        let mut w = Self::zero(bits);
        for i in 0..bits.min(self.bits()) {
            if self.bit(i) {
                w.set_bit(i, true);
            }
        }
        w
    }

    pub fn ones(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.bits()).filter(move |&i| self.bit(i))
    }
}

impl fmt::Debug for WordPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WordPattern(")?;
        for i in 0..self.bits() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        write!(f, ")")
    }
}
