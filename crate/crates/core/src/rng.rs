//! Seedable deterministic random streams.
//!
//! Every source of randomness in the crate is an [`RngStream`]:
//! xoshiro256++ state expanded from `(seed, stream_id)` with splitmix64.
//! Identical `(seed, stream_id, call sequence)` reproduces identical
//! draws bit-for-bit on every platform; distinct stream ids give
//! statistically independent sequences. A stream is owned by exactly one
//! logical thread; streams may be created and moved across threads but
//! never shared.
//!
//! Stream layout used by the samplers and the study harness:
//!
//! * 0 — data generation (benchmark datasets at the true parameter)
//! * 1 — calibration (metric estimation and the tolerance pilot)
//! * 2 — chain proposals and accept/reject coins
//! * 3 — model noise (pseudo-data simulation inside a chain)
//! * 4 — history initialisation (prior-simulated entries)
//!
//! Replicate-study cells derive their seed with [`derive_seed`] from
//! `(master seed, model name, sampler name, replicate index)`.

use alloc::vec::Vec;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct RngStream {
    s: [u64; 4],
    root: u64,
    spare_gauss: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut mix = seed;
        let a = splitmix64(&mut mix);
        let mut mix = a ^ stream_id.wrapping_mul(GOLDEN).rotate_left(17);
        let root = splitmix64(&mut mix);
        let mut st = root;
        let mut s = [0u64; 4];
        for w in &mut s {
            *w = splitmix64(&mut st);
        }
        // xoshiro must not start from the all-zero state
        if s == [0, 0, 0, 0] {
            s[0] = GOLDEN;
        }
        RngStream {
            s,
            root,
            spare_gauss: None,
        }
    }

    /// Derive an independent child stream; deterministic in
    /// `(parent seed, parent stream id, id)`.
    pub fn substream(&self, id: u64) -> Self {
        RngStream::new(self.root, id)
    }

    /// xoshiro256++ step.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform on [0, 1) with 53-bit resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval (0, 1); safe under log/atan transforms.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n).
    #[inline]
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        // 128-bit multiply; bias is < 2^-64 for any n of interest
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    pub(crate) fn take_spare_gauss(&mut self) -> Option<f64> {
        self.spare_gauss.take()
    }

    pub(crate) fn put_spare_gauss(&mut self, v: f64) {
        self.spare_gauss = Some(v);
    }

    /// n draws of `next_f64`, mostly for tests.
    pub fn uniform_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next_f64()).collect()
    }
}

/// Stable 64-bit seed for a study cell: FNV-1a over the textual parts
/// mixed with the master seed and the replicate index.
pub fn derive_seed(master: u64, parts: &[&str], index: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for b in part.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut st = h ^ master.rotate_left(31) ^ index.wrapping_mul(GOLDEN);
    splitmix64(&mut st)
}
