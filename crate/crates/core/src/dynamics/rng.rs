//! Per-trajectory random streams.
//!
//! Each trajectory gets its own ChaCha8 stream whose key is derived from
//! `(master_seed, traj_index)`; the cipher's block counter advances with every
//! draw. A trajectory's draws depend only on its own key, never on which
//! worker runs it or in which order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit seed of trajectory `traj_index` under `master_seed`.
pub fn trajectory_seed(master_seed: u64, traj_index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(traj_index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

pub(crate) struct JumpRng(ChaCha8Rng);

impl JumpRng {
    pub(crate) fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform threshold in `(0, 1]`.
    pub(crate) fn threshold(&mut self) -> f64 {
        1.0 - self.0.random::<f64>()
    }
}
