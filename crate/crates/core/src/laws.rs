//! Velocity laws for the background bath and the tagged particle, their
//! pointwise densities, samplers and the moment conditions that make a pair
//! of laws admissible.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap, TorusPoint, Vec3};
use crate::quadrature;

/// Moments and sup-norms above this value are reported as not finite.
pub const ADMISSIBILITY_CAP: f64 = 1e12;

/// Cutoff, in units of sigma, beyond which a Maxwellian is treated as zero
/// by the quadratures. `exp(-40^2/2)` is far below double precision.
pub const MAXWELLIAN_CUTOFF_SIGMAS: f64 = 40.0;

/// Decay of a tabulated radial density beyond its last knot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailDecay {
    /// Density is zero beyond the last knot.
    Compact,
    /// Density continues as `g_last (s / s_last)^(-exponent)`.
    Power { exponent: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TabulatedRaw {
    speeds: Vec<f64>,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tail: Option<TailDecay>,
}

/// Radial density `g(|v|)` given by linear interpolation between knots.
///
/// Values are rescaled on construction so the density has unit mass in R^3.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TabulatedRaw", into = "TabulatedRaw")]
pub struct TabulatedRadial {
    speeds: Vec<f64>,
    values: Vec<f64>,
    tail: Option<TailDecay>,
    /// Radial mass `4π ∫ g s^2 ds` of each segment, then of the tail.
    segment_mass: Vec<f64>,
    tail_mass: f64,
    /// Same for the speed-weighted density `g s^3`, unnormalized.
    biased_segment_mass: Vec<f64>,
    biased_tail_mass: f64,
    /// Factor applied to the user's values.
    scale: f64,
}

impl TryFrom<TabulatedRaw> for TabulatedRadial {
    type Error = Error;
    fn try_from(s: TabulatedRaw) -> Result<Self> {
        TabulatedRadial::new(s.speeds, s.values, s.tail)
    }
}

impl From<TabulatedRadial> for TabulatedRaw {
    fn from(t: TabulatedRadial) -> Self {
        TabulatedRaw {
            values: t.values.iter().map(|v| v / t.scale).collect(),
            speeds: t.speeds,
            tail: t.tail,
        }
    }
}

fn segment_radial_mass(s0: f64, s1: f64, g0: f64, g1: f64) -> f64 {
    // g linear on [s0, s1]: the integrand g s^2 is cubic, Simpson is exact
    let sm = 0.5 * (s0 + s1);
    let gm = 0.5 * (g0 + g1);
    4.0 * PI * (s1 - s0) / 6.0 * (g0 * s0 * s0 + 4.0 * gm * sm * sm + g1 * s1 * s1)
}

impl TabulatedRadial {
    pub fn new(speeds: Vec<f64>, values: Vec<f64>, tail: Option<TailDecay>) -> Result<Self> {
        if speeds.len() < 2 || speeds.len() != values.len() {
            return Err(Error::InvalidLaw(
                "tabulated law needs at least two knots and matching lengths".into(),
            ));
        }
        if speeds[0] != 0.0 {
            return Err(Error::InvalidLaw("tabulated speeds must start at 0".into()));
        }
        if speeds.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidLaw("tabulated speeds must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidLaw("tabulated values must be finite and non-negative".into()));
        }
        let raw_segments: Vec<f64> = speeds
            .windows(2)
            .zip(values.windows(2))
            .map(|(s, g)| segment_radial_mass(s[0], s[1], g[0], g[1]))
            .collect();
        let s_last = *speeds.last().unwrap();
        let g_last = *values.last().unwrap();
        let raw_tail = match tail {
            Some(TailDecay::Power { exponent }) => {
                if !(exponent > 3.0) {
                    return Err(Error::InvalidLaw(format!(
                        "power tail exponent {exponent} is not normalizable in 3-D (needs > 3)"
                    )));
                }
                4.0 * PI * g_last * s_last.powi(3) / (exponent - 3.0)
            }
            _ => 0.0,
        };
        let total: f64 = raw_segments.iter().sum::<f64>() + raw_tail;
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidLaw("tabulated law has zero mass".into()));
        }
        let scale = 1.0 / total;
        let gauss = crate::quadrature::GaussRule::legendre(3);
        let biased_segment_mass: Vec<f64> = speeds
            .windows(2)
            .zip(values.windows(2))
            .map(|(s, g)| {
                gauss.integrate(s[0], s[1], |x| (g[0] + (g[1] - g[0]) * (x - s[0]) / (s[1] - s[0])) * x.powi(3))
                    * scale
            })
            .collect();
        let biased_tail_mass = match tail {
            Some(TailDecay::Power { exponent }) if exponent > 4.0 => {
                g_last * scale * s_last.powi(4) / (exponent - 4.0)
            }
            Some(TailDecay::Power { .. }) => f64::INFINITY,
            _ => 0.0,
        };
        Ok(TabulatedRadial {
            biased_segment_mass,
            biased_tail_mass,
            values: values.iter().map(|v| v * scale).collect(),
            segment_mass: raw_segments.iter().map(|m| m * scale).collect(),
            tail_mass: raw_tail * scale,
            speeds,
            tail,
            scale,
        })
    }

    pub fn tail(&self) -> Option<TailDecay> {
        self.tail
    }

    pub fn last_speed(&self) -> f64 {
        *self.speeds.last().unwrap()
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.speeds.iter().copied().zip(self.values.iter().copied())
    }

    pub fn radial(&self, s: f64) -> f64 {
        let s_last = self.last_speed();
        if s > s_last {
            return match self.tail {
                Some(TailDecay::Power { exponent }) => {
                    self.values.last().unwrap() * (s / s_last).powf(-exponent)
                }
                _ => 0.0,
            };
        }
        let k = self.speeds.partition_point(|&x| x <= s).clamp(1, self.speeds.len() - 1);
        let (s0, s1) = (self.speeds[k - 1], self.speeds[k]);
        let (g0, g1) = (self.values[k - 1], self.values[k]);
        g0 + (g1 - g0) * (s - s0) / (s1 - s0)
    }

    fn sample_speed<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_speed_power(rng, 2)
    }

    /// Speed with density `∝ g(s) s^power` for `power` 2 or 3.
    fn sample_speed_power<R: Rng + ?Sized>(&self, rng: &mut R, power: i32) -> f64 {
        let (masses, tail_mass) = if power == 2 {
            (&self.segment_mass, self.tail_mass)
        } else {
            (&self.biased_segment_mass, self.biased_tail_mass)
        };
        let total: f64 = masses.iter().sum::<f64>() + tail_mass;
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        for (k, m) in masses.iter().enumerate() {
            acc += m;
            if u < acc {
                let (s0, s1) = (self.speeds[k], self.speeds[k + 1]);
                let bound = self.values[k].max(self.values[k + 1]) * s1.powi(power);
                loop {
                    let s = s0 + (s1 - s0) * rng.random::<f64>();
                    if rng.random::<f64>() * bound <= self.radial(s) * s.powi(power) {
                        return s;
                    }
                }
            }
        }
        match self.tail {
            Some(TailDecay::Power { exponent }) if tail_mass > 0.0 => {
                // density ∝ s^(power-p) on [s_last, ∞)
                let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                self.last_speed() * u.powf(-1.0 / (exponent - power as f64 - 1.0))
            }
            _ => self.last_speed(),
        }
    }
}

/// Radially symmetric velocity law of the background particles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackgroundLaw {
    Maxwellian { sigma: f64 },
    UniformBall { radius: f64 },
    TabulatedRadial(TabulatedRadial),
}

impl Default for BackgroundLaw {
    fn default() -> Self {
        BackgroundLaw::Maxwellian { sigma: 1.0 }
    }
}

impl BackgroundLaw {
    pub fn maxwellian(sigma: f64) -> Self {
        BackgroundLaw::Maxwellian { sigma }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BackgroundLaw::Maxwellian { sigma } if !(*sigma > 0.0 && sigma.is_finite()) => {
                Err(Error::InvalidLaw(format!("maxwellian sigma must be positive, got {sigma}")))
            }
            BackgroundLaw::UniformBall { radius } if !(*radius > 0.0 && radius.is_finite()) => {
                Err(Error::InvalidLaw(format!("ball radius must be positive, got {radius}")))
            }
            _ => {
                let mass = self.normalization()?;
                if (mass - 1.0).abs() > 1e-6 {
                    return Err(Error::InvalidLaw(format!("law integrates to {mass}, not 1")));
                }
                Ok(())
            }
        }
    }

    /// Density as a function of speed.
    pub fn radial(&self, s: f64) -> f64 {
        match self {
            BackgroundLaw::Maxwellian { sigma } => {
                let s2 = sigma * sigma;
                (2.0 * PI * s2).powf(-1.5) * (-s * s / (2.0 * s2)).exp()
            }
            BackgroundLaw::UniformBall { radius } => {
                if s <= *radius {
                    3.0 / (4.0 * PI * radius.powi(3))
                } else {
                    0.0
                }
            }
            BackgroundLaw::TabulatedRadial(t) => t.radial(s),
        }
    }

    pub fn density(&self, v: Vec3) -> f64 {
        self.radial(v.norm())
    }

    /// Characteristic spread of the law, used to size grids and quadratures.
    pub fn scale(&self) -> f64 {
        match self {
            BackgroundLaw::Maxwellian { sigma } => *sigma,
            BackgroundLaw::UniformBall { radius } => radius / 3f64.sqrt(),
            BackgroundLaw::TabulatedRadial(t) => {
                let m2 = t
                    .segment_mass
                    .iter()
                    .zip(t.speeds.windows(2))
                    .map(|(m, s)| m * (0.5 * (s[0] + s[1])).powi(2))
                    .sum::<f64>();
                (m2 / 3.0).sqrt().max(1e-12)
            }
        }
    }

    /// Speed beyond which the law carries no mass the quadratures can see.
    pub fn support_radius(&self) -> f64 {
        match self {
            BackgroundLaw::Maxwellian { sigma } => MAXWELLIAN_CUTOFF_SIGMAS * sigma,
            BackgroundLaw::UniformBall { radius } => *radius,
            BackgroundLaw::TabulatedRadial(t) => match t.tail {
                Some(TailDecay::Power { exponent }) => {
                    // radial tail mass beyond R is tail_mass (s_last/R)^(p-3)
                    let ratio = (1e-16 / t.tail_mass.max(1e-300)).powf(1.0 / (exponent - 3.0));
                    t.last_speed() / ratio.min(1.0)
                }
                _ => t.last_speed(),
            },
        }
    }

    /// Speeds at which the radial density is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            BackgroundLaw::Maxwellian { sigma } => {
                vec![0.0, 4.0 * sigma, 10.0 * sigma, MAXWELLIAN_CUTOFF_SIGMAS * sigma]
            }
            BackgroundLaw::UniformBall { radius } => vec![0.0, *radius],
            BackgroundLaw::TabulatedRadial(t) => t.speeds.clone(),
        }
    }

    /// `4π ∫_0^∞ g(s) w(s) s^2 ds` for a weight `w`, inserting `extra`
    /// breakpoints where the weight is not smooth.
    pub fn radial_integral<W: Fn(f64) -> f64>(&self, weight: W, extra: &[f64], tol: f64) -> Result<f64> {
        let mut breaks = self.breakpoints();
        let last = *breaks.last().unwrap();
        breaks.extend(extra.iter().copied().filter(|&s| s > 0.0 && s < last));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let f = |s: f64| 4.0 * PI * self.radial(s) * weight(s) * s * s;
        let mut total = quadrature::integrate_pieces(&f, &breaks, tol)?;
        if let BackgroundLaw::TabulatedRadial(t) = self {
            if matches!(t.tail, Some(TailDecay::Power { .. })) {
                total += quadrature::integrate_tail(&f, last, tol)?;
            }
        }
        Ok(total)
    }

    pub fn normalization(&self) -> Result<f64> {
        match self {
            BackgroundLaw::TabulatedRadial(t) => Ok(t.segment_mass.iter().sum::<f64>() + t.tail_mass),
            _ => self.radial_integral(|_| 1.0, &[], 1e-13),
        }
    }

    /// Mean speed `E|v̄|`.
    pub fn mean_speed(&self) -> Result<f64> {
        match self {
            BackgroundLaw::Maxwellian { sigma } => Ok(sigma * (8.0 / PI).sqrt()),
            BackgroundLaw::UniformBall { radius } => Ok(0.75 * radius),
            BackgroundLaw::TabulatedRadial(_) => self.radial_integral(|s| s, &[], 1e-12),
        }
    }

    /// `β = ∫ g(v̄)(1 + |v̄|) dv̄`, the constant in the collision-rate bound
    /// `λ(v) ≤ π(|v| + β)`.
    pub fn beta(&self) -> Result<f64> {
        Ok(1.0 + self.mean_speed()?)
    }

    /// Integral of the density over a plane at distance `d` from the origin,
    /// `2π ∫_d^∞ g(s) s ds`.
    pub fn plane_integral(&self, d: f64) -> f64 {
        let d = d.abs();
        match self {
            BackgroundLaw::Maxwellian { sigma } => {
                (2.0 * PI * sigma * sigma).powf(-0.5) * (-d * d / (2.0 * sigma * sigma)).exp()
            }
            BackgroundLaw::UniformBall { radius } => {
                if d >= *radius {
                    0.0
                } else {
                    3.0 * (radius * radius - d * d) / (4.0 * radius.powi(3))
                }
            }
            BackgroundLaw::TabulatedRadial(t) => {
                let f = |s: f64| 2.0 * PI * t.radial(s) * s;
                let mut breaks = vec![d];
                breaks.extend(t.speeds.iter().copied().filter(|&s| s > d));
                let last = *breaks.last().unwrap();
                let mut total = quadrature::integrate_pieces(&f, &breaks, 1e-13).unwrap_or(f64::NAN);
                if matches!(t.tail, Some(TailDecay::Power { .. })) {
                    total += quadrature::integrate_tail(&f, last.max(d), 1e-13).unwrap_or(f64::NAN);
                }
                total
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        match self {
            BackgroundLaw::Maxwellian { sigma } => Vec3::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            ) * *sigma,
            BackgroundLaw::UniformBall { radius } => {
                let s = radius * rng.random::<f64>().cbrt();
                random_direction(rng) * s
            }
            BackgroundLaw::TabulatedRadial(t) => random_direction(rng) * t.sample_speed(rng),
        }
    }

    /// Draw from the speed-biased density `∝ |v| g(v)`.
    pub fn sample_size_biased<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        let speed = match self {
            BackgroundLaw::Maxwellian { sigma } => {
                // |v|^2 / (2σ^2) is Gamma(2, 1) under the biased law
                let (a, b): (f64, f64) = (rng.random(), rng.random());
                sigma * (-2.0 * (a.max(f64::MIN_POSITIVE) * b.max(f64::MIN_POSITIVE)).ln()).sqrt()
            }
            BackgroundLaw::UniformBall { radius } => radius * rng.random::<f64>().powf(0.25),
            BackgroundLaw::TabulatedRadial(t) => t.sample_speed_power(rng, 3),
        };
        random_direction(rng) * speed
    }

    /// Essential supremum of `g(v)(1 + |v|^4)`.
    fn sup_weighted(&self) -> f64 {
        let weight = |s: f64| self.radial(s) * (1.0 + s.powi(4));
        match self {
            BackgroundLaw::TabulatedRadial(t) => {
                if let Some(TailDecay::Power { exponent }) = t.tail {
                    if exponent < 4.0 {
                        return f64::INFINITY;
                    }
                }
                let mut sup = dense_max(&weight, 0.0, t.last_speed(), 20_000);
                if let Some(TailDecay::Power { exponent }) = t.tail {
                    let g_last = t.values.last().unwrap();
                    let s_last = t.last_speed();
                    // on the tail the weighted density is bounded by its value
                    // at s_last plus the s^4 part in the limit
                    let limit = g_last * s_last.powf(exponent) * if exponent == 4.0 { 1.0 } else { 0.0 };
                    sup = sup.max(dense_max(&weight, s_last, 100.0 * s_last, 20_000)).max(limit);
                }
                sup
            }
            _ => dense_max(&weight, 0.0, self.support_radius(), 40_000),
        }
    }

    /// `∫ g(v)(1 + |v|^2) dv`, `INFINITY` when the tail makes it diverge.
    fn second_moment(&self) -> Result<f64> {
        if let BackgroundLaw::TabulatedRadial(t) = self {
            match t.tail {
                None => {
                    return Err(Error::CannotCertify(
                        "tabulated law carries no tail decay metadata".into(),
                    ))
                }
                Some(TailDecay::Power { exponent }) if exponent <= 5.0 => return Ok(f64::INFINITY),
                _ => {}
            }
        }
        self.radial_integral(|s| 1.0 + s * s, &[], 1e-10)
    }
}

fn dense_max<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    (0..=n)
        .map(|k| f(a + (b - a) * k as f64 / n as f64))
        .fold(0.0, f64::max)
}

/// Uniformly distributed unit vector.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    let mu = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.random::<f64>();
    let s = (1.0 - mu * mu).max(0.0).sqrt();
    Vec3::new(s * phi.cos(), s * phi.sin(), mu)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpatialLaw {
    /// Uniform on the unit torus.
    Uniform,
    PointMass { x: Vec3 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VelocityLaw {
    PointMass { v: Vec3 },
    Maxwellian { sigma: f64 },
    UniformBall { radius: f64 },
    TabulatedRadial(TabulatedRadial),
}

impl VelocityLaw {
    /// The law as a radial density, if it has one.
    pub fn as_radial(&self) -> Option<BackgroundLaw> {
        match self {
            VelocityLaw::PointMass { .. } => None,
            VelocityLaw::Maxwellian { sigma } => Some(BackgroundLaw::Maxwellian { sigma: *sigma }),
            VelocityLaw::UniformBall { radius } => Some(BackgroundLaw::UniformBall { radius: *radius }),
            VelocityLaw::TabulatedRadial(t) => Some(BackgroundLaw::TabulatedRadial(t.clone())),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        match self {
            VelocityLaw::PointMass { v } => *v,
            other => other.as_radial().unwrap().sample(rng),
        }
    }
}

/// Law `f0` of the tagged particle's initial position and velocity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialLaw {
    pub spatial: SpatialLaw,
    pub velocity: VelocityLaw,
}

impl Default for InitialLaw {
    fn default() -> Self {
        InitialLaw {
            spatial: SpatialLaw::Uniform,
            velocity: VelocityLaw::PointMass { v: Vec3::ZERO },
        }
    }
}

impl InitialLaw {
    pub fn uniform_with_velocity(v0: Vec3) -> Self {
        InitialLaw { spatial: SpatialLaw::Uniform, velocity: VelocityLaw::PointMass { v: v0 } }
    }

    pub fn validate(&self) -> Result<()> {
        if let SpatialLaw::PointMass { x } = &self.spatial {
            wrap(*x)?;
        }
        match &self.velocity {
            VelocityLaw::PointMass { v } if !v.is_finite() => Err(Error::NonFinite("initial velocity")),
            VelocityLaw::PointMass { .. } => Ok(()),
            other => other.as_radial().unwrap().validate(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (TorusPoint, Vec3) {
        // order of draws is fixed so that streams stay reproducible
        let x = match &self.spatial {
            SpatialLaw::Uniform => uniform_point(rng),
            SpatialLaw::PointMass { x } => wrap(*x).expect("validated initial position"),
        };
        (x, self.velocity.sample(rng))
    }

    /// Density of `f0` at `(x, v)`. Point-mass factors are taken relative to
    /// their Dirac reference measure: they contribute 1 on their support and
    /// 0 elsewhere.
    pub fn density(&self, x: TorusPoint, v: Vec3) -> f64 {
        let spatial = match &self.spatial {
            SpatialLaw::Uniform => 1.0,
            SpatialLaw::PointMass { x: x0 } => {
                let same = wrap(*x0).map(|p| crate::geometry::min_image(p, x).max_abs() == 0.0);
                if same.unwrap_or(false) { 1.0 } else { 0.0 }
            }
        };
        let velocity = match &self.velocity {
            VelocityLaw::PointMass { v: v0 } => {
                if *v0 == v { 1.0 } else { 0.0 }
            }
            other => other.as_radial().unwrap().density(v),
        };
        spatial * velocity
    }

    /// Largest speed scale among the velocity parts of the law.
    pub fn velocity_scale(&self) -> f64 {
        match &self.velocity {
            VelocityLaw::PointMass { v } => v.norm(),
            other => other.as_radial().unwrap().scale(),
        }
    }

    fn second_moment(&self) -> Result<f64> {
        match &self.velocity {
            VelocityLaw::PointMass { v } => Ok(1.0 + v.norm_squared()),
            other => other.as_radial().unwrap().second_moment(),
        }
    }
}

pub fn uniform_point<R: Rng + ?Sized>(rng: &mut R) -> TorusPoint {
    let p = Vec3::new(rng.random(), rng.random(), rng.random());
    wrap(p).expect("uniform draws are finite")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub second_moment_f0: f64,
    pub second_moment_g0: f64,
    pub sup_weighted_g0: f64,
    pub admissible: bool,
}

/// Evaluates the moment conditions on `f0` and `g0`:
/// `∫ f0 (1+|v|^2) < ∞`, `∫ g0 (1+|v|^2) < ∞`, `sup g0 (1+|v|^4) < ∞`.
pub fn check_admissibility(f0: &InitialLaw, g0: &BackgroundLaw) -> Result<AdmissibilityReport> {
    f0.validate()?;
    g0.validate()?;
    let second_moment_f0 = f0.second_moment()?;
    let second_moment_g0 = g0.second_moment()?;
    if let BackgroundLaw::TabulatedRadial(t) = g0 {
        if t.tail.is_none() {
            return Err(Error::CannotCertify("tabulated law carries no tail decay metadata".into()));
        }
    }
    let sup_weighted_g0 = g0.sup_weighted();
    let finite = |x: f64| x.is_finite() && x < ADMISSIBILITY_CAP;
    Ok(AdmissibilityReport {
        second_moment_f0,
        second_moment_g0,
        sup_weighted_g0,
        admissible: finite(second_moment_f0) && finite(second_moment_g0) && finite(sup_weighted_g0),
    })
}
