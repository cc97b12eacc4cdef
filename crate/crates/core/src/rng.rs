//! Reproducible random number streams.
//!
//! Every random quantity in the crate is drawn from an [`RngStream`]
//! addressed by a `(seed, stream)` pair. Identical pairs yield identical
//! sample sequences regardless of thread scheduling, so concurrency is
//! obtained by handing disjoint streams to workers, never by sharing one.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::ComplexMatrix;

/// Counter-addressed random stream backed by ChaCha8.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Derives an independent stream for a sub-task. The derivation is a
    /// pure function of `(seed, stream, domain)` and is part of the
    /// reproducibility contract.
    pub fn substream(&self, domain: u64) -> Self {
        Self::new(self.seed, splitmix64(self.stream ^ splitmix64(domain)))
    }

    /// One standard real Gaussian draw.
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Matrix of i.i.d. standard complex Gaussian entries: `U + iV` with
/// `U, V ~ N(0, 1/2)`, so each entry has unit total variance. Entries are
/// drawn in row-major order, which fixes the sequence for a given stream.
pub fn sample_standard_complex_gaussian(
    rows: usize,
    cols: usize,
    rng: &mut RngStream,
) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.standard_normal();
        let im: f64 = rng.standard_normal();
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}
