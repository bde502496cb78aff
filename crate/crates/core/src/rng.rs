//! Seeded random numbers shared by every randomized component.
//!
//! The generator is PCG-XSH-RR 64/32 (64-bit LCG state, 32-bit output) with
//! the reference `pcg32_srandom(initstate, initseq)` initialization, so a
//! `(seed, stream)` pair yields the same sequence in any language that ships
//! the reference PCG32. Derived integer and boolean draws below use only
//! `next_u32`/`next_u64` and are specified exactly, for the same reason.
//!
//! Independent sub-sequences (one per resampling draw, one per synthetic
//! respondent) are obtained by keeping the seed and varying the stream, which
//! makes parallel evaluation order-independent.

use rand::RngCore;
use rand_pcg::Pcg32;

/// Stream used when a caller does not ask for a specific one.
pub const DEFAULT_STREAM: u64 = 0xda3e_39cb_94b9_5bdb;

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: Pcg32,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, DEFAULT_STREAM)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        SeededRng {
            inner: Pcg32::new(seed, stream),
        }
    }

    /// Uniform integer in `0..n` by rejection on 32-bit outputs:
    /// draws `x` until `x < 2^32 - (2^32 mod n)`, then returns `x mod n`.
    pub fn below(&mut self, n: u32) -> u32 {
        assert!(n > 0, "below(0) is empty");
        let limit = u32::MAX - (u32::MAX % n + 1) % n;
        loop {
            let x = self.inner.next_u32();
            if x <= limit {
                return x % n;
            }
        }
    }

    /// Fair coin: the top bit of one 32-bit output.
    pub fn coin(&mut self) -> bool {
        self.inner.next_u32() >> 31 == 1
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// In-place Fisher-Yates shuffle, walking from the last index down.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u32 + 1) as usize;
            items.swap(i, j);
        }
    }

    /// `k` distinct elements drawn without replacement (partial Fisher-Yates
    /// from the front), returned in draw order.
    pub fn sample<T: Clone>(&mut self, items: &[T], k: usize) -> Vec<T> {
        assert!(k <= items.len());
        let mut idx: Vec<usize> = (0..items.len()).collect();
        for i in 0..k {
            let j = i + self.below((idx.len() - i) as u32) as usize;
            idx.swap(i, j);
        }
        idx[..k].iter().map(|&i| items[i].clone()).collect()
    }

    /// A fresh 64-bit seed for handing to a child generator.
    pub fn derive_seed(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
