//! Initial configurations: the tagged particle, the background bath and the
//! no-overlap conditioning.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{min_image, TorusPoint, Vec3};
use crate::laws::{uniform_point, BackgroundLaw, InitialLaw};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub x: TorusPoint,
    pub v: Vec3,
}

impl ParticleState {
    pub fn new(x: TorusPoint, v: Vec3) -> Self {
        ParticleState { x, v }
    }
}

/// Deterministic RNG for realization `stream` of an experiment seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Number of background particles under the scaling `N ε^2 = 1`.
pub fn boltzmann_grad_n(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok((epsilon * epsilon).recip().round() as usize)
}

/// Volume of a ball of radius `epsilon`.
pub fn ball_volume(epsilon: f64) -> f64 {
    4.0 / 3.0 * PI * epsilon.powi(3)
}

pub fn sample_background<R: Rng + ?Sized>(g0: &BackgroundLaw, n: usize, rng: &mut R) -> Vec<ParticleState> {
    (0..n)
        .map(|_| {
            let x = uniform_point(rng);
            ParticleState::new(x, g0.sample(rng))
        })
        .collect()
}

/// True when every background centre lies strictly farther than `epsilon`
/// from `x0`, measured along the minimal image.
pub fn reject_overlap(x0: TorusPoint, backgrounds: &[ParticleState], epsilon: f64) -> bool {
    let eps2 = epsilon * epsilon;
    backgrounds.iter().all(|b| min_image(x0, b.x).norm_squared() > eps2)
}

/// Probability that `n` uniform centres all avoid a fixed ball of radius `epsilon`.
pub fn zeta(epsilon: f64, n: usize) -> Result<f64> {
    let vol = ball_volume(epsilon);
    if !(epsilon >= 0.0) || vol >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "zeta needs (4/3)π ε^3 < 1, got epsilon = {epsilon}"
        )));
    }
    Ok((1.0 - vol).powi(n as i32))
}

/// An accepted initial configuration together with the number of draws it took.
#[derive(Clone, Debug)]
pub struct InitialConfiguration {
    pub tagged: ParticleState,
    pub backgrounds: Vec<ParticleState>,
    pub attempts: u64,
}

/// Draws the tagged particle from `f0` and redraws the whole background bath
/// until it is free of overlap with the tagged particle.
pub fn sample_configuration<R: Rng + ?Sized>(
    f0: &InitialLaw,
    g0: &BackgroundLaw,
    n: usize,
    epsilon: f64,
    max_attempts: u64,
    rng: &mut R,
) -> Result<InitialConfiguration> {
    let (x0, v0) = f0.sample(rng);
    for attempts in 1..=max_attempts {
        let backgrounds = sample_background(g0, n, rng);
        if reject_overlap(x0, &backgrounds, epsilon) {
            return Ok(InitialConfiguration { tagged: ParticleState::new(x0, v0), backgrounds, attempts });
        }
    }
    Err(Error::InvalidParameter(format!(
        "no overlap-free configuration in {max_attempts} attempts at epsilon = {epsilon}, N = {n}"
    )))
}
