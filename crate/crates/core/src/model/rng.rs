use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random streams for one Monte Carlo replicate.
///
/// Every stream is a ChaCha8 keystream keyed by `(master seed, replicate)`
/// and selected by a stream id, so draws for a given layer never depend on
/// which other layers or replicates were generated first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicateStream {
    master: u64,
    replicate: u64,
    key: u64,
}

/// Stream ids at or above this are reserved for non-layer consumers.
const AUX_BASE: u64 = 1 << 63;

impl ReplicateStream {
    pub fn new(master_seed: u64, replicate: u64) -> Self {
        let key = splitmix64(master_seed ^ splitmix64(replicate.wrapping_add(0x5851_f42d_4c95_7f2d)));
        Self {
            master: master_seed,
            replicate,
            key,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master
    }

    pub fn replicate(&self) -> u64 {
        self.replicate
    }

    /// The derived per-replicate seed.
    pub fn seed(&self) -> u64 {
        self.key
    }

    /// Stream for edge draws of layer `t`.
    pub fn layer_rng(&self, t: usize) -> ChaCha8Rng {
        self.stream(t as u64 & (AUX_BASE - 1))
    }

    /// Stream for anything that is not an edge draw (clustering seeds, …).
    pub fn aux_rng(&self, tag: u64) -> ChaCha8Rng {
        self.stream(AUX_BASE | tag)
    }

    fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        rng.set_stream(id);
        rng
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
