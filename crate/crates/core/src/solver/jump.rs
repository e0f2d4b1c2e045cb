//! Velocity-jump process whose one-particle law solves the linear Boltzmann
//! equation. Jump times come from thinning a Poisson clock of rate
//! `1.05 π(|v| + β)`; at a jump, `v̄ ~ g0(v̄)|v - v̄|` and `ν` is
//! cosine-distributed around `v - v̄`.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{scatter, TorusPoint, Vec3};
use crate::laws::{check_admissibility, BackgroundLaw, InitialLaw};
use crate::sampling::ParticleState;
use crate::solver::rates::RateCache;
use crate::trees::{CollisionMarker, CollisionTree};

/// Safety factor on the dominating clock rate.
pub const THINNING_MARGIN: f64 = 1.05;
/// Smallest tolerated thinning acceptance rate.
pub const MIN_ACCEPTANCE: f64 = 1e-4;
/// Proposals after which the acceptance rate is checked.
const ACCEPTANCE_CHECK_AFTER: u64 = 10_000;

/// One accepted jump: time, impact direction, the partner velocity and the velocity afterwards.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub t: f64,
    pub nu: Vec3,
    pub v_bar: Vec3,
    pub v_after: Vec3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpTrajectory {
    pub x0: TorusPoint,
    pub v0: Vec3,
    pub jumps: Vec<JumpEvent>,
    pub t_end: f64,
    /// Time of the first clock ring when jumps are disabled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absorbed_at: Option<f64>,
    pub proposals: u64,
}

impl JumpTrajectory {
    /// State at `t ∈ [0, t_end]`, right-continuous at jumps.
    pub fn state_at(&self, t: f64) -> Result<ParticleState> {
        if !(0.0..=self.t_end).contains(&t) {
            return Err(Error::OutsideHorizon { t, horizon: self.t_end });
        }
        let (mut x, mut v, mut s) = (self.x0, self.v0, 0.0);
        for j in self.jumps.iter().take_while(|j| j.t <= t) {
            x = x.advance(v, j.t - s);
            v = j.v_after;
            s = j.t;
        }
        Ok(ParticleState::new(x.advance(v, t - s), v))
    }

    pub fn final_state(&self) -> ParticleState {
        self.state_at(self.t_end).expect("t_end lies in the horizon")
    }

    pub fn survived(&self, t: f64) -> bool {
        self.absorbed_at.is_none_or(|a| a > t)
    }

    /// The same path as a collision tree, with the partner velocity as marker velocity.
    pub fn to_tree(&self) -> CollisionTree {
        CollisionTree {
            x0: self.x0,
            v0: self.v0,
            collisions: self.jumps.iter().map(|j| CollisionMarker { t: j.t, nu: j.nu, v: j.v_bar }).collect(),
        }
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Direction with density `∝ [ν·e]₊` on the sphere, for unit `e`.
fn cosine_direction<R: Rng + ?Sized>(e: Vec3, rng: &mut R) -> Vec3 {
    let (e1, e2) = e.orthonormal_frame();
    let u: f64 = rng.random();
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    let c = u.sqrt();
    let s = (1.0 - u).max(0.0).sqrt();
    (e * c + e1 * (s * phi.cos()) + e2 * (s * phi.sin())).normalized().unwrap_or(e)
}

/// Sampler of the jump process on `[0, t_end]`.
#[derive(Clone, Debug)]
pub struct JumpSampler {
    pub f0: InitialLaw,
    rates: RateCache,
    mean_speed: f64,
    pub t_end: f64,
    pub jumps_enabled: bool,
}

impl JumpSampler {
    pub fn new(f0: &InitialLaw, g0: &BackgroundLaw, t_end: f64) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::InvalidParameter(format!("jump horizon must be positive, got {t_end}")));
        }
        check_admissibility(f0, g0)?;
        let rates = RateCache::for_law(g0, 6.0 * f0.velocity_scale() + 1.0)?;
        Ok(JumpSampler { f0: f0.clone(), rates, mean_speed: g0.mean_speed()?, t_end, jumps_enabled: true })
    }

    pub fn with_jumps(mut self, enabled: bool) -> Self {
        self.jumps_enabled = enabled;
        self
    }

    pub fn rates(&self) -> &RateCache {
        &self.rates
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<JumpTrajectory> {
        let (x0, v0) = self.f0.sample(rng);
        self.sample_from(x0, v0, rng)
    }

    pub fn sample_from<R: Rng + ?Sized>(&self, x0: TorusPoint, v0: Vec3, rng: &mut R) -> Result<JumpTrajectory> {
        let g0 = self.rates.law();
        let mut traj =
            JumpTrajectory { x0, v0, jumps: Vec::new(), t_end: self.t_end, absorbed_at: None, proposals: 0 };
        let (mut t, mut v) = (0.0, v0);
        let mut accepted = 0u64;
        loop {
            let bound = THINNING_MARGIN * self.rates.upper_bound(v);
            let dt = Exp::new(bound).map_err(|e| Error::ThinningClock(e.to_string()))?.sample(rng);
            if t + dt > self.t_end {
                break;
            }
            t += dt;
            traj.proposals += 1;
            let rate = self.rates.lambda(v);
            if rate > bound {
                return Err(Error::ThinningClock(format!("λ = {rate} exceeds the clock rate {bound}")));
            }
            if rng.random::<f64>() * bound >= rate {
                if traj.proposals >= ACCEPTANCE_CHECK_AFTER
                    && (accepted as f64) < MIN_ACCEPTANCE * traj.proposals as f64
                {
                    return Err(Error::ThinningRate(accepted as f64 / traj.proposals as f64));
                }
                continue;
            }
            accepted += 1;
            if !self.jumps_enabled {
                traj.absorbed_at = Some(t);
                break;
            }
            // v̄ with density ∝ g0(v̄)|v - v̄|, by rejection from the
            // envelope g0(v̄)(|v| + |v̄|), itself a mixture of g0 and its biased form
            let speed = v.norm();
            let v_bar = loop {
                let cand = if rng.random::<f64>() * (speed + self.mean_speed) < speed {
                    g0.sample(rng)
                } else {
                    g0.sample_size_biased(rng)
                };
                if rng.random::<f64>() * (speed + cand.norm()) < (v - cand).norm() {
                    break cand;
                }
            };
            let rel = v - v_bar;
            let nu = cosine_direction(rel.normalized().unwrap_or(Vec3::new(1.0, 0.0, 0.0)), rng);
            v = scatter(v, v_bar, nu)?;
            traj.jumps.push(JumpEvent { t, nu, v_bar, v_after: v });
        }
        Ok(traj)
    }
}

/// One trajectory of the jump process on `[0, t_end]`.
pub fn jump_sample<R: Rng + ?Sized>(
    f0: &InitialLaw,
    g0: &BackgroundLaw,
    t_end: f64,
    rng: &mut R,
) -> Result<JumpTrajectory> {
    JumpSampler::new(f0, g0, t_end)?.sample(rng)
}
