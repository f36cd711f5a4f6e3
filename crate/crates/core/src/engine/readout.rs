//! Population estimators and simulated photon-counting readout.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// `⟨σz⟩ = 1 − 2·P↓`
pub fn spin_projection(p_down: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_down) {
        return Err(invalid("p_down", format!("must lie in [0, 1], got {p_down}")));
    }
    Ok(1.0 - 2.0 * p_down)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutSample {
    /// Total photons over all shots during the initialization pulse.
    pub init_counts: u64,
    /// Total photons over all shots during the readout pulse.
    pub read_counts: u64,
    /// Ratio of totals clipped to `[0, 1]`.
    pub p_down_estimate: f64,
    /// Unclipped ratio `read_counts / init_counts`.
    pub ratio: f64,
    pub sigma: f64,
}

fn draw(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // mean is validated finite and positive, so construction cannot fail
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// Simulates `shots` repetitions of init + readout fluorescence.
///
/// Before the initialization pulse the electron is in |↓⟩, so each shot's init
/// counts are Poisson with the bright mean; readout counts are Poisson with
/// mean `mean_bright_counts · p_down`. The estimate is the ratio of totals and
/// `sigma` is its propagated Poisson uncertainty,
/// `Var(R) = r/i² + r²/i³` for totals `r` and `i`.
pub fn photon_readout_mc(p_down: f64, mean_bright_counts: f64, shots: usize, seed: u64) -> Result<ReadoutSample> {
    if !(0.0..=1.0).contains(&p_down) {
        return Err(invalid("p_down", format!("must lie in [0, 1], got {p_down}")));
    }
    if !(mean_bright_counts.is_finite() && mean_bright_counts > 0.0) {
        return Err(invalid("mean_bright_counts", "must be positive"));
    }
    if shots == 0 {
        return Err(invalid("shots", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut init, mut read) = (0u64, 0u64);
    for _ in 0..shots {
        init += draw(&mut rng, mean_bright_counts);
        read += draw(&mut rng, mean_bright_counts * p_down);
    }
    let (ratio, sigma) = if init == 0 {
        (0.0, f64::INFINITY)
    } else {
        let (i, r) = (init as f64, read as f64);
        (r / i, (r / (i * i) + r * r / (i * i * i)).sqrt())
    };
    Ok(ReadoutSample {
        init_counts: init,
        read_counts: read,
        p_down_estimate: ratio.clamp(0.0, 1.0),
        ratio,
        sigma,
    })
}
