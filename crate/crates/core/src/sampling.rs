//! Random-number plumbing shared by the samplers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// The generator every sampler uses; portable and reproducible per seed.
pub type SamplerRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SamplerRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-case seed derived from a base seed and a case id.
///
/// Stable across platforms and releases so that results do not depend on
/// which worker handles a case.
pub fn derive_case_seed(base_seed: u64, case_id: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base_seed.to_le_bytes());
    hasher.update(case_id.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Uniform draw on `(0, 1]`, safe to take the logarithm of.
pub fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Draw from `Gamma(shape, rate)`.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, 1.0 / rate)
        .expect("gamma parameters are validated by callers")
        .sample(rng)
}

/// Logarithm of a `Gamma(shape, 1)` draw, accurate for tiny shapes whose
/// draws underflow in linear space.
fn sample_log_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        sample_gamma(shape, 1.0, rng).ln()
    } else {
        // G(a) = G(a + 1) * U^(1/a)
        sample_gamma(shape + 1.0, 1.0, rng).ln() + open_uniform(rng).ln() / shape
    }
}

/// Draw from a Dirichlet distribution. Zero concentrations yield exactly zero
/// plausibility; at least one concentration must be positive.
pub fn sample_dirichlet<R: Rng + ?Sized>(concentration: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if concentration.iter().any(|a| !a.is_finite() || *a < 0.0) {
        return Err(Error::InvalidParameter(
            "Dirichlet concentrations must be finite and non-negative".into(),
        ));
    }
    let logs: Vec<Option<f64>> = concentration
        .iter()
        .map(|&a| (a > 0.0).then(|| sample_log_gamma(a, rng)))
        .collect();
    let max = logs
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::InvalidParameter(
            "Dirichlet needs at least one positive concentration".into(),
        ));
    }
    let mut out: Vec<f64> = logs
        .iter()
        .map(|l| l.map_or(0.0, |l| (l - max).exp()))
        .collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    Ok(out)
}
