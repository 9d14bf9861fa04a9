use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const P_MIN: f64 = 1e-9;

fn standard_gumbel(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen();
    -(-u.max(f64::MIN_POSITIVE).ln()).ln()
}

/// Two-class binary-concrete relaxations `sigmoid((logit p + g1 - g2) / tau)`,
/// one independent Gumbel pair per entry.
pub fn gumbel_relaxed(values: &[f64], tau: f64, seed: u64) -> Result<Vec<f64>> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParams(format!("temperature {tau} must be > 0")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(values
        .iter()
        .map(|&p| {
            let p = p.clamp(P_MIN, 1.0 - P_MIN);
            let logit = (p / (1.0 - p)).ln();
            let g1 = standard_gumbel(&mut rng);
            let g2 = standard_gumbel(&mut rng);
            let z = (logit + g1 - g2) / tau;
            1.0 / (1.0 + (-z).exp())
        })
        .collect())
}

/// Hard flip mask: relaxed values thresholded at 0.5. Each entry is an exact
/// Bernoulli(p) draw whatever the temperature.
pub fn gumbel_sample(values: &[f64], tau: f64, seed: u64) -> Result<Vec<bool>> {
    Ok(gumbel_relaxed(values, tau, seed)?
        .into_iter()
        .map(|r| r > 0.5)
        .collect())
}
