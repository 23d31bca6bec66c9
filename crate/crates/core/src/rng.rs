//! Reproducible random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha12 stream
//! (`rand_chacha::ChaCha12Rng`). A stream is addressed by three numbers:
//!
//! * the **root seed** (`u64`), expanded to the 256-bit ChaCha key by
//!   `SeedableRng::seed_from_u64`,
//! * the **replicate index**, and
//! * a **lane**, which separates independent purposes inside one replicate
//!   (event times, jump locations, paintbox uniforms, ...).
//!
//! `split(root, replicate, lane)` selects ChaCha stream id
//! `replicate * LANES + lane`. ChaCha is counter based, so the output of a
//! stream depends only on `(root, stream id, word position)` and is identical
//! across platforms and thread schedules.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Number of lanes reserved per replicate.
pub const LANES: u64 = 16;

/// Independent purposes within a replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Lane {
    /// Chain event times, merger sizes and subsets.
    Chain = 0,
    /// Poisson point counts, times and marks.
    Points = 1,
    /// Jump locations of simple bridges (counter addressed by point id).
    Locations = 2,
    /// Paintbox uniforms.
    Paintbox = 3,
    /// Anything else a caller needs.
    Aux = 4,
}

/// The random stream type used throughout the crate.
pub type SimRng = ChaCha12Rng;

/// Stream for `(root, replicate, lane)`.
pub fn split(root: u64, replicate: u64, lane: Lane) -> SimRng {
    let mut rng = ChaCha12Rng::seed_from_u64(root);
    rng.set_stream(replicate.wrapping_mul(LANES).wrapping_add(lane as u64));
    rng
}

/// Uniform on the open interval (0, 1).
pub fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        // 53 random bits, centred in their cell so 0 is never produced
        let bits = rng.next_u64() >> 11;
        let u = (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        if u > 0.0 && u < 1.0 {
            return u;
        }
    }
}

/// Counter-addressed uniforms: the value for `(id, attempt)` does not depend
/// on the order in which values are requested.
#[derive(Debug, Clone)]
pub struct KeyedUniforms {
    rng: SimRng,
}

impl KeyedUniforms {
    pub fn new(root: u64, replicate: u64, lane: Lane) -> Self {
        Self {
            rng: split(root, replicate, lane),
        }
    }

    /// Uniform in [0, 1) attached to `id`; `attempt` indexes redraws.
    pub fn get(&mut self, id: u64, attempt: u32) -> f64 {
        // 4 words per (id, attempt) cell, 8 attempts per id
        let cell = (id as u128) * 8 + (attempt.min(7) as u128);
        self.rng.set_word_pos(cell * 4);
        let bits = self.rng.next_u64() >> 11;
        bits as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
