//! Counter-derived random number streams.
//!
//! Every randomized step of a pipeline (a bootstrap replicate, a direction
//! pool, a cross-validation shuffle, a data-generation pass) pulls its own
//! ChaCha stream addressed by `(master seed, domain, index)`. Parallel
//! scheduling therefore cannot change results: the stream a task uses is a
//! pure function of its address, never of execution order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Stream address space, one tag per randomized pipeline step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamDomain {
    /// Sub-seed derivation for Monte Carlo replicates.
    Replicate = 0,
    /// Two-sample residual bootstrap, indexed by bootstrap replicate.
    TwoSampleBootstrap = 1,
    /// FoFR residual bootstrap, indexed by bootstrap replicate.
    FofrBootstrap = 2,
    /// Random projection direction pool for the halfspace depth.
    DirectionPool = 3,
    /// Index shuffle for cross-validation folds.
    CvShuffle = 4,
    /// Scenario generation: first sample / regressors.
    DataGroup1 = 5,
    /// Scenario generation: second sample / errors.
    DataGroup2 = 6,
    /// Scenario generation: new regressor.
    DataNewRegressor = 7,
    /// Scenario generation: slope sign variables.
    SlopeSigns = 8,
    /// Anything else (tests, ad-hoc draws).
    Generic = 9,
}

const INDEX_BITS: u32 = 56;
const INDEX_MASK: u64 = (1 << INDEX_BITS) - 1;

/// Factory for counter-derived RNG streams under one master seed.
#[derive(Debug, Clone, Copy)]
pub struct Streams {
    seed: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Streams { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The stream addressed by `(domain, index)`. Identical addresses yield
    /// identical generators regardless of when or where they are created.
    pub fn stream(&self, domain: StreamDomain, index: u64) -> ChaCha12Rng {
        debug_assert!(index <= INDEX_MASK, "stream index exceeds 2^56");
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(((domain as u64) << INDEX_BITS) | (index & INDEX_MASK));
        rng
    }

    /// An independent child seed for Monte Carlo replicate `index`, so each
    /// replicate owns a full stream space of its own.
    pub fn child(&self, index: u64) -> Streams {
        let mut rng = self.stream(StreamDomain::Replicate, index);
        Streams::new(rng.next_u64())
    }
}
