use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// A 64-bit seed from which every random stream in a run is derived.
///
/// Sample `i` of a batch draws from its own ChaCha20 stream `i`, so batches
/// are reproducible regardless of evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSource {
    seed: u64,
}

impl SeedSource {
    pub fn new(seed: u64) -> Self {
        SeedSource { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stream 0; for callers that want a single sequential generator.
    pub fn rng(&self) -> ChaCha20Rng {
        self.substream(0)
    }

    pub fn substream(&self, index: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}
