//! Seeded random streams.
//!
//! Replica `r` of a run with master seed `s` always draws from ChaCha8 keyed
//! by `s` on stream `r + 1` (stream 0 is left for run-level draws). ChaCha is
//! counter based, so streams are independent and the replica count has no
//! influence on any individual replica.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream used by replica `replica` of a run seeded with `master`.
pub fn replica_rng(master: u64, replica: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(replica.wrapping_add(1));
    rng
}

/// Run-level stream, disjoint from every replica stream.
pub fn master_rng(master: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(master)
}

/// Exponential waiting time with the given rate, by inverse transform.
///
/// Never returns zero, so event times stay strictly increasing.
#[inline]
pub fn exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    debug_assert!(rate > 0.0);
    loop {
        // gen::<f64>() is in [0, 1), so 1 - u is in (0, 1].
        let u = 1.0 - rng.gen::<f64>();
        let tau = -u.ln() / rate;
        if tau > 0.0 {
            return tau;
        }
    }
}
