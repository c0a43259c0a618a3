//! Seeded random number generation.
//!
//! All stochastic components of the engine draw from ChaCha8 seeded with a
//! 64-bit value, so trajectories are reproducible across runs, platforms, and
//! builds (the generator algorithm is fixed, not implementation-defined).

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as Rng64;

/// Generator for a 64-bit seed.
pub fn seeded(seed: u64) -> Rng64 {
    Rng64::seed_from_u64(seed)
}

/// Independent generator for a (seed, stream) pair; used for Monte-Carlo
/// ensembles where each path gets its own stream.
pub fn seeded_stream(seed: u64, stream: u64) -> Rng64 {
    let mut base = [0u8; 32];
    base[..8].copy_from_slice(&seed.to_le_bytes());
    base[8..16].copy_from_slice(&stream.to_le_bytes());
    base[16..24].copy_from_slice(&0x9e3779b97f4a7c15u64.to_le_bytes());
    Rng64::from_seed(base)
}

/// A standard normal draw.
pub fn normal(rng: &mut Rng64) -> f64 {
    use rand::Rng;
    rng.sample::<f64, _>(rand_distr::StandardNormal)
}

/// A random unit vector of the given dimension.
pub fn unit_vector(rng: &mut Rng64, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| normal(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}
