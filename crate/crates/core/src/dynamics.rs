//! Event-driven dynamics of the tagged particle in the background bath.
//!
//! Background particles move in straight lines forever. Only tagged-background
//! contacts exist, and each scatter changes the tagged velocity, so every
//! event invalidates all pending predictions: the next event is found by a
//! linear scan over the bath rather than a priority queue.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{min_image, predict_contact_event, scatter, Vec3};
use crate::laws::{BackgroundLaw, InitialLaw};
use crate::sampling::{ball_volume, boltzmann_grad_n, sample_configuration, ParticleState};
use crate::trees::{CollisionMarker, CollisionTree, TreeRecord};

pub use crate::trees::SimStatus;

/// Two contacts closer in time than this abort the run.
pub const TOL_SIMULTANEOUS: f64 = 1e-10;

/// Runs with more collisions than this are aborted.
pub const EVENT_CAP: usize = 10_000;

/// Redraws of the background bath allowed before the sampler gives up.
pub const MAX_OVERLAP_ATTEMPTS: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub epsilon: f64,
    pub n: usize,
    pub t_end: f64,
    pub seed: u64,
    /// When false the tagged particle is absorbed at its first collision.
    pub gain_enabled: bool,
}

impl SimConfig {
    /// Configuration with `N = round(ε^-2)`.
    pub fn boltzmann_grad(epsilon: f64, t_end: f64, seed: u64) -> Result<Self> {
        let config = SimConfig { epsilon, n: boltzmann_grad_n(epsilon)?, t_end, seed, gain_enabled: true };
        config.validate()?;
        Ok(config)
    }

    pub fn with_gain(mut self, gain_enabled: bool) -> Self {
        self.gain_enabled = gain_enabled;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.25) {
            return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 0.25), got {}", self.epsilon)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("end time must be positive and finite, got {}", self.t_end)));
        }
        let packing = ball_volume(self.epsilon) * self.n as f64;
        if packing >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "bath too dense: (4/3)π ε^3 N = {packing:.3} must stay below 1"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOutcome {
    pub tree: CollisionTree,
    /// Tagged state at the end time, or at absorption when gain is disabled.
    pub final_state: ParticleState,
    pub status: SimStatus,
    /// Bath index of the partner of each collision.
    pub partners: Vec<usize>,
    pub absorbed_at: Option<f64>,
    /// Bath draws needed to obtain an overlap-free configuration.
    pub attempts: u64,
}

impl SimOutcome {
    pub fn completed(&self) -> bool {
        self.status == SimStatus::Completed
    }

    /// Whether some bath particle was hit more than once.
    pub fn repeated_partner(&self) -> bool {
        let mut seen = self.partners.clone();
        seen.sort_unstable();
        seen.windows(2).any(|w| w[0] == w[1])
    }

    pub fn record(&self, epsilon: f64, horizon: f64) -> TreeRecord {
        TreeRecord {
            x0: self.tree.x0,
            v0: self.tree.v0,
            collisions: self.tree.collisions.clone(),
            status: self.status,
            epsilon: Some(epsilon),
            horizon: Some(horizon),
            partners: Some(self.partners.clone()),
        }
    }
}

struct NextContact {
    dt: f64,
    normal: Vec3,
    partner: usize,
    runner_up: f64,
}

fn next_contact(
    x: ParticleState,
    t: f64,
    backgrounds: &[ParticleState],
    epsilon: f64,
    horizon: f64,
    last_partner: Option<usize>,
) -> Result<Option<NextContact>> {
    let mut best: Option<NextContact> = None;
    let mut runner_up = f64::INFINITY;
    for (j, b) in backgrounds.iter().enumerate() {
        let rel = min_image(b.x.advance(b.v, t), x.x);
        let Some((dt, normal)) = predict_contact_event(rel, x.v - b.v, epsilon, horizon)? else {
            continue;
        };
        // the partner just left is tangent to the tagged particle
        if last_partner == Some(j) && dt <= TOL_SIMULTANEOUS {
            continue;
        }
        match &mut best {
            Some(cur) if dt < cur.dt => {
                runner_up = cur.dt;
                *cur = NextContact { dt, normal, partner: j, runner_up: 0.0 };
            }
            Some(_) => runner_up = runner_up.min(dt),
            None => best = Some(NextContact { dt, normal, partner: j, runner_up: 0.0 }),
        }
    }
    Ok(best.map(|mut b| {
        b.runner_up = runner_up;
        b
    }))
}

/// Runs the dynamics from a given overlap-free configuration, recording the
/// tagged state at each of the sorted `observe` times on the way.
pub fn simulate_observed(
    tagged: ParticleState,
    backgrounds: &[ParticleState],
    config: &SimConfig,
    observe: &[f64],
) -> Result<(SimOutcome, Vec<ParticleState>)> {
    config.validate()?;
    let t_end = config.t_end;
    let mut tree = CollisionTree::root(tagged.x, tagged.v);
    let mut partners = Vec::new();
    let mut state = tagged;
    let mut t = 0.0;
    let mut observed = Vec::with_capacity(observe.len());
    let mut pending = observe.iter().copied().peekable();
    let mut status = SimStatus::Completed;
    let mut absorbed_at = None;
    let mut last_partner = None;

    let mut flush = |until: f64, inclusive: bool, state: ParticleState, t: f64, out: &mut Vec<ParticleState>| {
        while let Some(&s) = pending.peek() {
            if s < until || (inclusive && s == until) {
                out.push(ParticleState::new(state.x.advance(state.v, s - t), state.v));
                pending.next();
            } else {
                break;
            }
        }
    };

    loop {
        let horizon = t_end - t;
        let next = if horizon > 0.0 {
            match next_contact(state, t, backgrounds, config.epsilon, horizon, last_partner) {
                Ok(next) => next,
                // rounding inside a pinch can push the pair slightly too close
                Err(Error::Overlap { .. }) if tree.n() > 0 => {
                    status = SimStatus::AbortedSimultaneous;
                    break;
                }
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        let Some(event) = next else {
            flush(t_end, true, state, t, &mut observed);
            state.x = state.x.advance(state.v, t_end - t);
            break;
        };
        let t_c = t + event.dt;
        // a contact right after the previous one is the start of a pinch
        // between two converging background particles
        let too_soon = tree.n() > 0 && event.dt < TOL_SIMULTANEOUS;
        if event.runner_up - event.dt < TOL_SIMULTANEOUS || too_soon || !(t_c > t) {
            status = SimStatus::AbortedSimultaneous;
            break;
        }
        if tree.n() >= EVENT_CAP {
            status = SimStatus::AbortedEventCap;
            break;
        }
        flush(t_c, false, state, t, &mut observed);
        state.x = state.x.advance(state.v, t_c - t);
        t = t_c;
        let partner = &backgrounds[event.partner];
        let nu = -event.normal.normalized().ok_or(Error::NonFinite("contact normal"))?;
        tree.append(CollisionMarker { t, nu, v: partner.v })?;
        partners.push(event.partner);
        if !config.gain_enabled {
            absorbed_at = Some(t);
            break;
        }
        state.v = scatter(state.v, partner.v, nu)?;
        last_partner = Some(event.partner);
    }
    let outcome = SimOutcome { tree, final_state: state, status, partners, absorbed_at, attempts: 1 };
    Ok((outcome, observed))
}

pub fn simulate(tagged: ParticleState, backgrounds: &[ParticleState], config: &SimConfig) -> Result<SimOutcome> {
    Ok(simulate_observed(tagged, backgrounds, config, &[])?.0)
}

/// Samples an overlap-free initial configuration and runs the dynamics.
pub fn run<R: Rng + ?Sized>(
    config: &SimConfig,
    f0: &InitialLaw,
    g0: &BackgroundLaw,
    rng: &mut R,
) -> Result<SimOutcome> {
    config.validate()?;
    let init = sample_configuration(f0, g0, config.n, config.epsilon, MAX_OVERLAP_ATTEMPTS, rng)?;
    let mut outcome = simulate(init.tagged, &init.backgrounds, config)?;
    outcome.attempts = init.attempts;
    Ok(outcome)
}

/// Tagged state at `t` reconstructed from the tree alone; right-continuous
/// at collision times.
pub fn tagged_trajectory(tree: &CollisionTree, t: f64, horizon: f64) -> Result<ParticleState> {
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::OutsideHorizon { t, horizon });
    }
    tree.state_at(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{min_image_displacement, wrap, TorusPoint};
    use crate::sampling::{sample_background, stream_rng};

    fn tp(x: f64, y: f64, z: f64) -> TorusPoint {
        wrap(Vec3::new(x, y, z)).unwrap()
    }

    fn config(epsilon: f64, n: usize, t_end: f64) -> SimConfig {
        SimConfig { epsilon, n, t_end, seed: 0, gain_enabled: true }
    }

    #[test]
    fn empty_bath_is_free_flight() {
        let tagged = ParticleState::new(tp(0.9, 0.1, 0.5), Vec3::new(0.7, -0.3, 2.0));
        let out = simulate(tagged, &[], &config(0.1, 0, 1.5)).unwrap();
        assert_eq!(out.tree.n(), 0);
        assert_eq!(out.final_state.v, tagged.v);
        let want = wrap(tagged.x.coords() + tagged.v * 1.5).unwrap();
        assert!(min_image(want, out.final_state.x).max_abs() < 1e-15);
        assert_eq!(tagged_trajectory(&out.tree, 0.3, 1.5).unwrap().v, tagged.v);
    }

    #[test]
    fn single_head_on_collision() {
        let tagged = ParticleState::new(tp(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0));
        let bath = [ParticleState::new(tp(0.5, 0.0, 0.0), Vec3::ZERO)];
        let out = simulate(tagged, &bath, &config(0.1, 1, 1.0)).unwrap();
        assert!(out.completed());
        assert_eq!(out.tree.n(), 1);
        let c = out.tree.collisions[0];
        assert!((c.t - 0.4).abs() < 1e-12);
        // impact direction points from the tagged particle to its partner
        assert!((c.nu - Vec3::new(1.0, 0.0, 0.0)).max_abs() < 1e-12);
        assert!(out.final_state.v.max_abs() < 1e-12);
        let mid = tagged_trajectory(&out.tree, 0.5, 1.0).unwrap();
        assert!((mid.x.coords() - Vec3::new(0.4, 0.0, 0.0)).max_abs() < 1e-12);
        assert!(mid.v.max_abs() < 1e-12);
        let at = tagged_trajectory(&out.tree, c.t, 1.0).unwrap();
        assert!(at.v.max_abs() < 1e-12);
        assert!(matches!(tagged_trajectory(&out.tree, 1.5, 1.0), Err(Error::OutsideHorizon { .. })));
    }

    #[test]
    fn absorption_stops_at_first_collision() {
        let tagged = ParticleState::new(tp(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0));
        let bath = [ParticleState::new(tp(0.5, 0.0, 0.0), Vec3::ZERO)];
        let out = simulate(tagged, &bath, &config(0.1, 1, 1.0).with_gain(false)).unwrap();
        assert_eq!(out.tree.n(), 1);
        assert!((out.absorbed_at.unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn simultaneous_contacts_abort() {
        let tagged = ParticleState::new(tp(0.5, 0.5, 0.5), Vec3::ZERO);
        let bath = [
            ParticleState::new(tp(0.25, 0.5, 0.5), Vec3::new(1.0, 0.0, 0.0)),
            ParticleState::new(tp(0.75, 0.5, 0.5), Vec3::new(-1.0, 0.0, 0.0)),
        ];
        let out = simulate(tagged, &bath, &config(0.125, 2, 1.0)).unwrap();
        assert_eq!(out.status, SimStatus::AbortedSimultaneous);
    }

    #[test]
    fn dilute_condition_is_enforced() {
        assert!(config(0.2, 25, 1.0).validate().is_ok());
        assert!(config(0.2, 40, 1.0).validate().is_err());
        assert!(config(0.3, 1, 1.0).validate().is_err());
        assert!(config(0.1, 1, 0.0).validate().is_err());
    }

    /// Independent replay of the tree with many small steps, splitting each
    /// step exactly at the marker times.
    fn dense_replay(tree: &CollisionTree, t: f64, dt: f64) -> Vec3 {
        let mut x = tree.x0.coords();
        let mut v = tree.v0;
        let mut now = 0.0;
        let mut markers = tree.collisions.iter().peekable();
        while now < t {
            let mut step_end = (now + dt).min(t);
            if let Some(m) = markers.peek() {
                if m.t <= step_end {
                    step_end = m.t;
                }
            }
            x += v * (step_end - now);
            now = step_end;
            if let Some(m) = markers.peek() {
                if m.t == now {
                    v = scatter(v, m.v, m.nu).unwrap();
                    markers.next();
                }
            }
        }
        x
    }

    #[test]
    fn reconstruction_matches_simulator_and_dense_replay() {
        let g0 = BackgroundLaw::maxwellian(1.0);
        let f0 = InitialLaw::uniform_with_velocity(Vec3::new(0.5, 0.0, 0.0));
        let cfg = SimConfig::boltzmann_grad(0.1, 1.0, 5).unwrap();
        let times: Vec<f64> = (1..=100).map(|k| k as f64 / 100.0).collect();
        let mut total_collisions = 0;
        for run_index in 0..5 {
            let mut rng = stream_rng(5, run_index);
            let init = sample_configuration(&f0, &g0, cfg.n, cfg.epsilon, 1000, &mut rng).unwrap();
            let (out, observed) = simulate_observed(init.tagged, &init.backgrounds, &cfg, &times).unwrap();
            if !out.completed() {
                continue;
            }
            total_collisions += out.tree.n();
            for (&t, obs) in times.iter().zip(&observed) {
                let rebuilt = tagged_trajectory(&out.tree, t, cfg.t_end).unwrap();
                assert!(min_image(rebuilt.x, obs.x).norm() < 1e-12);
                assert_eq!(rebuilt.v, obs.v);
                let replay = dense_replay(&out.tree, t, 1e-4);
                assert!(min_image_displacement(replay - rebuilt.x.coords()).norm() < 1e-6);
            }
            // no contact was missed: the tagged particle never sits inside a background
            for k in 0..=20_000 {
                let t = k as f64 * cfg.t_end / 20_000.0;
                let x = tagged_trajectory(&out.tree, t, cfg.t_end).unwrap().x;
                for b in &init.backgrounds {
                    assert!(min_image(b.x.advance(b.v, t), x).norm() > cfg.epsilon - 1e-9);
                }
            }
        }
        assert!(total_collisions > 0);
    }

    #[test]
    fn runs_are_reproducible_and_approach_markers() {
        let g0 = BackgroundLaw::maxwellian(1.0);
        let f0 = InitialLaw::uniform_with_velocity(Vec3::new(1.0, 0.0, 0.0));
        let cfg = SimConfig::boltzmann_grad(0.1, 1.0, 21).unwrap();
        let mut energy_changed = false;
        for k in 0..100 {
            let a = run(&cfg, &f0, &g0, &mut stream_rng(21, k)).unwrap();
            let b = run(&cfg, &f0, &g0, &mut stream_rng(21, k)).unwrap();
            assert_eq!(a, b);
            if !a.completed() {
                continue;
            }
            let velocities = a.tree.velocities().unwrap();
            let mut prev_t = 0.0;
            for (c, v_before) in a.tree.collisions.iter().zip(&velocities) {
                assert!(c.t > prev_t);
                prev_t = c.t;
                assert!(c.nu.dot(*v_before - c.v) >= 0.0);
            }
            energy_changed |= velocities.windows(2).any(|w| (w[1].norm_squared() - w[0].norm_squared()).abs() > 1e-6);
        }
        assert!(energy_changed);
    }

    #[test]
    fn bath_is_not_touched() {
        let g0 = BackgroundLaw::maxwellian(1.0);
        let mut rng = stream_rng(3, 0);
        let bath = sample_background(&g0, 100, &mut rng);
        let before = bath.clone();
        let tagged = ParticleState::new(tp(0.5, 0.5, 0.5), Vec3::new(0.3, 0.2, 0.1));
        if crate::sampling::reject_overlap(tagged.x, &bath, 0.1) {
            simulate(tagged, &bath, &config(0.1, 100, 1.0)).unwrap();
        }
        assert_eq!(bath, before);
    }
}
