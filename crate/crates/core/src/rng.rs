//! Seeded random streams.
//!
//! Every stochastic step draws from ChaCha8 (`rand_chacha` 0.9) seeded with
//! `seed_from_u64(master_seed)`; independent streams are selected with
//! `set_stream`. Gaussian samples use `rand_distr::StandardNormal` (ziggurat).
//! Tables are reproducible on any platform that pins these two crates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SolverRng = ChaCha8Rng;

/// Stream used by the initial grid sweep for grid point `index`.
pub fn sweep_stream(seed: u64, index: usize) -> SolverRng {
    stream(seed, index as u64)
}

/// Stream used by coevolution pass `pass` (1-based, counted over the table's
/// whole history) for grid point `index`.
pub fn pass_stream(seed: u64, pass: usize, index: usize) -> SolverRng {
    stream(seed, ((pass as u64) << 32) | index as u64)
}

pub fn stream(seed: u64, id: u64) -> SolverRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
