//! Named, independent random streams derived from one 64-bit seed.
//!
//! Every consumer of randomness gets its own ChaCha stream keyed by
//! `(seed, name)`, so drawing more arrivals never shifts the layout or the
//! breakdown trace.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// The named streams used across the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Arrivals,
    ProcessingTimes,
    Layout,
    Breakdowns,
    DueDates,
    Exploration,
    WeightInit,
}

impl Stream {
    pub fn name(self) -> &'static str {
        match self {
            Stream::Arrivals => "arrivals",
            Stream::ProcessingTimes => "processing-times",
            Stream::Layout => "layout",
            Stream::Breakdowns => "breakdowns",
            Stream::DueDates => "due-dates",
            Stream::Exploration => "exploration",
            Stream::WeightInit => "weight-init",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededStreams {
    seed: u64,
}

impl SeededStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, stream: Stream) -> StreamRng {
        self.named(stream.name())
    }

    /// Stream for an arbitrary label.
    pub fn named(&self, name: &str) -> StreamRng {
        ChaCha8Rng::seed_from_u64(derive_seed(self.seed, name))
    }
}

/// Mixes a label into a seed (FNV-1a over the label, then SplitMix64).
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(seed ^ h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
