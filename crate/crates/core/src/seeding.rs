//! Deterministic per-replication random streams.
//!
//! Replication `r` of a run with master seed `s` is seeded with
//! `splitmix64(s ^ splitmix64(r))`. Each replication gets three ChaCha8
//! streams from that seed: values (stream 0), opponent bids (stream 1) and
//! the strategy's own randomness (stream 2). Keeping them apart means two
//! environments that share an opponent process see the same opponent bids.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn replication_seed(master_seed: u64, rep: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(rep))
}

#[derive(Debug, Clone)]
pub struct ReplicationRngs {
    pub values: ChaCha8Rng,
    pub opponents: ChaCha8Rng,
    pub strategy: ChaCha8Rng,
}

impl ReplicationRngs {
    pub fn new(master_seed: u64, rep: u64) -> Self {
        let seed = replication_seed(master_seed, rep);
        let stream = |k| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(k);
            r
        };
        ReplicationRngs {
            values: stream(0),
            opponents: stream(1),
            strategy: stream(2),
        }
    }
}
