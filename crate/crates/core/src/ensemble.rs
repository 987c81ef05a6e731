//! Replica farm.
//!
//! With the `parallel` feature the replicas are spread over rayon's pool;
//! without it they run in order on the calling thread. Both paths return the
//! results in replica order, so downstream reductions are bit-identical.

use crate::rng::{replica_rng, SimRng};

/// Run `f(replica, rng)` for every replica in `0..replicas`.
pub fn run_replicas<T, F>(master_seed: u64, replicas: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut SimRng) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        par_replicas(master_seed, replicas, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        seq_replicas(master_seed, replicas, f)
    }
}

/// Sequential replica loop; always available.
pub fn seq_replicas<T, F>(master_seed: u64, replicas: usize, f: F) -> Vec<T>
where
    F: Fn(usize, &mut SimRng) -> T,
{
    (0..replicas)
        .map(|r| {
            let mut rng = replica_rng(master_seed, r as u64);
            f(r, &mut rng)
        })
        .collect()
}

#[cfg(feature = "parallel")]
pub fn par_replicas<T, F>(master_seed: u64, replicas: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut SimRng) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(master_seed, r as u64);
            f(r, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn replica_results_do_not_depend_on_count() {
        let short = run_replicas(11, 3, |_, rng| rng.gen::<u64>());
        let long = run_replicas(11, 8, |_, rng| rng.gen::<u64>());
        assert_eq!(short[..], long[..3]);
        assert_eq!(long, seq_replicas(11, 8, |_, rng| rng.gen::<u64>()));
    }
}
