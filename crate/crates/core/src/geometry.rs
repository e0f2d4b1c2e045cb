//! Geometry on the unit 3-torus: periodic wrapping, minimal-image
//! displacements, sphere-contact prediction and the tagged-particle
//! scattering rule.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance (torus side units) when checking that a pair is exactly in contact.
pub const TOL_CONTACT: f64 = 1e-9;

/// Allowed deviation of `|nu|` from one.
pub const TOL_UNIT: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn component(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("axis {axis} out of range"),
        }
    }

    /// Returns `self / |self|`, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0).then(|| self / n)
    }

    /// Two unit vectors completing `self` (assumed unit) to an orthonormal frame.
    pub fn orthonormal_frame(self) -> (Vec3, Vec3) {
        let helper = if self.x.abs() < 0.9 {
            Vec3::new(1.0, 0.0, 0.0)
        } else {
            Vec3::new(0.0, 1.0, 0.0)
        };
        let e1 = self.cross(helper).normalized().expect("helper is not parallel");
        let e2 = self.cross(e1);
        (e1, e2)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A point of `[0,1)^3` with periodic identification.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct TorusPoint(Vec3);

impl TorusPoint {
    pub fn coords(self) -> Vec3 {
        self.0
    }

    /// Moves the point along `velocity` for time `dt`, wrapping back into the cell.
    pub fn advance(self, velocity: Vec3, dt: f64) -> TorusPoint {
        wrap_unchecked(self.0 + velocity * dt)
    }
}

impl TryFrom<[f64; 3]> for TorusPoint {
    type Error = Error;
    fn try_from(a: [f64; 3]) -> Result<Self> {
        wrap(Vec3::from(a))
    }
}

impl From<TorusPoint> for [f64; 3] {
    fn from(p: TorusPoint) -> Self {
        p.0.to_array()
    }
}

impl From<TorusPoint> for Vec3 {
    fn from(p: TorusPoint) -> Self {
        p.0
    }
}

/// Predicted first contact between the tagged particle and a background particle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactEvent {
    pub time: f64,
    /// Unit vector from the background centre to the tagged centre at contact.
    pub normal: Vec3,
    pub partner_index: usize,
}

fn wrap_coord(c: f64) -> f64 {
    let w = c - c.floor();
    // c slightly below an integer can round up to exactly 1.0
    if w >= 1.0 { 0.0 } else { w }
}

fn wrap_unchecked(p: Vec3) -> TorusPoint {
    TorusPoint(Vec3::new(wrap_coord(p.x), wrap_coord(p.y), wrap_coord(p.z)))
}

/// Reduces `p` componentwise modulo one into `[0,1)`.
pub fn wrap(p: Vec3) -> Result<TorusPoint> {
    if !p.is_finite() {
        return Err(Error::NonFinite("wrap"));
    }
    Ok(wrap_unchecked(p))
}

fn min_image_coord(d: f64) -> f64 {
    let r = d - d.floor();
    if r > 0.5 { r - 1.0 } else { r }
}

/// Shortest periodic image of an arbitrary displacement; components in `(-1/2, 1/2]`.
pub fn min_image_displacement(d: Vec3) -> Vec3 {
    Vec3::new(min_image_coord(d.x), min_image_coord(d.y), min_image_coord(d.z))
}

/// Displacement `d` with `a + d ≡ b (mod 1)` and each `|d_i| ≤ 1/2`.
///
/// Antipodal ties resolve to `+1/2`.
pub fn min_image(a: TorusPoint, b: TorusPoint) -> Vec3 {
    min_image_displacement(b.0 - a.0)
}

/// Integer image range `k` along one axis for which a segment from `p` to
/// `p + h w` can come within `eps` of the lattice point `k`.
pub(crate) fn image_range(p: f64, w: f64, h: f64, eps: f64) -> std::ops::RangeInclusive<i64> {
    let end = p + h * w;
    let lo = (p.min(end) - eps).ceil() as i64;
    let hi = (p.max(end) + eps).floor() as i64;
    lo..=hi
}

/// Entering root of `|q + t w|^2 = eps^2` when the motion is inward, else `None`.
pub(crate) fn entering_root(q: Vec3, w: Vec3, eps: f64) -> Option<f64> {
    let a = w.norm_squared();
    if a == 0.0 {
        return None;
    }
    let b = q.dot(w);
    if b >= 0.0 {
        return None;
    }
    let c = q.norm_squared() - eps * eps;
    let disc = b * b - a * c;
    if disc <= 0.0 {
        return None;
    }
    // c / (-b + sqrt(disc)) is the smaller root, written to avoid cancellation
    let t = c / (-b + disc.sqrt());
    (t > 0.0).then_some(t)
}

/// Earliest contact time and contact normal over all periodic images, for
/// relative motion `rel_pos + t rel_vel` on `(0, horizon]`.
///
/// The normal points from the background centre towards the tagged centre.
pub fn predict_contact_event(
    rel_pos: Vec3,
    rel_vel: Vec3,
    epsilon: f64,
    horizon: f64,
) -> Result<Option<(f64, Vec3)>> {
    if !rel_pos.is_finite() || !rel_vel.is_finite() {
        return Err(Error::NonFinite("predict_contact"));
    }
    if !(horizon > 0.0) || !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "predict_contact needs horizon > 0 and epsilon in (0, 1/2), got {horizon}, {epsilon}"
        )));
    }
    let p = min_image_displacement(rel_pos);
    let dist = p.norm();
    if dist < epsilon - TOL_CONTACT {
        return Err(Error::Overlap { distance: dist, epsilon });
    }
    let mut best: Option<(f64, Vec3)> = None;
    for kx in image_range(p.x, rel_vel.x, horizon, epsilon) {
        for ky in image_range(p.y, rel_vel.y, horizon, epsilon) {
            for kz in image_range(p.z, rel_vel.z, horizon, epsilon) {
                let q = p - Vec3::new(kx as f64, ky as f64, kz as f64);
                if let Some(t) = entering_root(q, rel_vel, epsilon) {
                    if t <= horizon && best.is_none_or(|(bt, _)| t < bt) {
                        best = Some((t, (q + rel_vel * t) / epsilon));
                    }
                }
            }
        }
    }
    Ok(best)
}

/// Smallest `t ∈ (0, horizon]` at which some periodic image of the pair
/// reaches distance `epsilon` while approaching.
pub fn predict_contact(
    rel_pos: Vec3,
    rel_vel: Vec3,
    epsilon: f64,
    horizon: f64,
) -> Result<Option<f64>> {
    Ok(predict_contact_event(rel_pos, rel_vel, epsilon, horizon)?.map(|(t, _)| t))
}

/// Unit vector along the minimal-image displacement from the background
/// centre to the tagged centre; the pair must be in contact.
pub fn collision_normal(
    x_tagged: TorusPoint,
    x_background: TorusPoint,
    epsilon: f64,
) -> Result<Vec3> {
    let d = min_image(x_background, x_tagged);
    let dist = d.norm();
    if (dist - epsilon).abs() > TOL_CONTACT {
        return Err(Error::NotInContact { distance: dist, epsilon });
    }
    Ok(d / dist)
}

fn check_unit(nu: Vec3) -> Result<()> {
    let n = nu.norm();
    if (n - 1.0).abs() > TOL_UNIT || !n.is_finite() {
        return Err(Error::NonUnitNormal(n));
    }
    Ok(())
}

/// Post-collision tagged velocity `v - (nu·(v - v_j)) nu`.
///
/// The background velocity is left untouched. The map is a projection: the
/// normal relative velocity after a scatter is zero, so applying it twice
/// changes nothing.
pub fn scatter(v: Vec3, v_j: Vec3, nu: Vec3) -> Result<Vec3> {
    check_unit(nu)?;
    Ok(v - nu * nu.dot(v - v_j))
}

/// The equal-mass elastic pair collision `(v, w) -> (v - c nu, w + c nu)`
/// with `c = nu·(v - w)`, whose first component is [`scatter`]. It is its
/// own inverse and links pre- and post-collisional velocities in the gain term.
pub fn binary_collision(v: Vec3, w: Vec3, nu: Vec3) -> Result<(Vec3, Vec3)> {
    check_unit(nu)?;
    let c = nu.dot(v - w);
    Ok((v - nu * c, w + nu * c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tp(x: f64, y: f64, z: f64) -> TorusPoint {
        wrap(Vec3::new(x, y, z)).unwrap()
    }

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(tp(0.5, 0.5, 0.5).coords(), Vec3::new(0.5, 0.5, 0.5));
        let w = tp(1.25, -0.25, 2.0).coords();
        assert!(close(w, Vec3::new(0.25, 0.75, 0.0), 1e-15));
        let b = tp(-1e-15, 0.0, 0.0).coords();
        assert!((0.0..1.0).contains(&b.x));
        let tiny = tp(-1e-17, 0.0, 0.0).coords();
        assert!((0.0..1.0).contains(&tiny.x));
        assert!(wrap(Vec3::new(f64::NAN, 0.0, 0.0)).is_err());
        assert!(wrap(Vec3::new(0.0, f64::INFINITY, 0.0)).is_err());
    }

    #[test]
    fn min_image_examples() {
        let d = min_image(tp(0.0, 0.0, 0.0), tp(0.95, 0.0, 0.0));
        assert!(close(d, Vec3::new(-0.05, 0.0, 0.0), 1e-12));
        let a = tp(0.3, 0.6, 0.9);
        assert_eq!(min_image(a, a), Vec3::ZERO);
        let tie = min_image(tp(0.25, 0.2, 0.2), tp(0.75, 0.2, 0.2));
        assert_eq!(tie, Vec3::new(0.5, 0.0, 0.0));
        let tie_back = min_image(tp(0.75, 0.2, 0.2), tp(0.25, 0.2, 0.2));
        assert_eq!(tie_back, Vec3::new(0.5, 0.0, 0.0));
    }

    #[test]
    fn predict_contact_examples() {
        let t = predict_contact(Vec3::new(0.5, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0), 0.1, 1.0)
            .unwrap()
            .unwrap();
        assert!((t - 0.4).abs() < 1e-12);

        let t = predict_contact(Vec3::new(-0.2, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), 0.1, 1.0)
            .unwrap()
            .unwrap();
        assert!((t - 0.1).abs() < 1e-12);

        let none =
            predict_contact(Vec3::new(0.5, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), 0.1, 0.3).unwrap();
        assert_eq!(none, None);
    }

    #[test]
    fn predict_contact_wraps_for_fast_pairs() {
        // target sits behind the tagged particle; reaching it needs 2.8 cells of travel
        let t = predict_contact(Vec3::new(0.3, 0.0, 0.0), Vec3::new(-10.0, 0.0, 0.0), 0.1, 1.0)
            .unwrap()
            .unwrap();
        assert!((t - 0.02).abs() < 1e-12);
        let t = predict_contact(Vec3::new(0.3, 0.0, 0.0), Vec3::new(10.0, 0.0, 0.0), 0.1, 1.0)
            .unwrap()
            .unwrap();
        assert!((t - 0.06).abs() < 1e-12);
    }

    #[test]
    fn predict_contact_errors() {
        let err = predict_contact(Vec3::new(0.05, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), 0.1, 1.0);
        assert!(matches!(err, Err(Error::Overlap { .. })));
        assert!(predict_contact(Vec3::new(0.3, 0.0, 0.0), Vec3::ZERO, 0.1, 0.0).is_err());
    }

    #[test]
    fn tangency_is_not_a_collision() {
        let r = predict_contact(Vec3::new(0.25, 0.125, 0.0), Vec3::new(-1.0, 0.0, 0.0), 0.125, 1.0);
        assert_eq!(r.unwrap(), None);
    }

    #[test]
    fn contact_after_scatter_is_not_redetected() {
        let eps = 0.1;
        let nu = Vec3::new(0.6, 0.8, 0.0);
        let v_j = Vec3::new(0.1, -0.3, 0.2);
        let v = scatter(Vec3::new(-1.0, -2.0, 0.5), v_j, nu).unwrap();
        let got = predict_contact(nu * eps, v - v_j, eps, 1.0).unwrap();
        assert_eq!(got, None);
    }

    #[test]
    fn collision_normal_examples() {
        let n = collision_normal(tp(0.4, 0.0, 0.0), tp(0.5, 0.0, 0.0), 0.1).unwrap();
        assert!(close(n, Vec3::new(-1.0, 0.0, 0.0), 1e-12));
        let n = collision_normal(tp(0.5, 0.1, 0.0), tp(0.5, 0.0, 0.0), 0.1).unwrap();
        assert!(close(n, Vec3::new(0.0, 1.0, 0.0), 1e-12));
        let n = collision_normal(tp(0.05, 0.0, 0.0), tp(0.95, 0.0, 0.0), 0.1).unwrap();
        assert!(close(n, Vec3::new(1.0, 0.0, 0.0), 1e-12));
        let far = collision_normal(tp(0.3, 0.0, 0.0), tp(0.5, 0.0, 0.0), 0.1);
        assert!(matches!(far, Err(Error::NotInContact { .. })));
    }

    #[test]
    fn scatter_examples() {
        let x = Vec3::new(1.0, 0.0, 0.0);
        let v = scatter(x, Vec3::ZERO, Vec3::new(-1.0, 0.0, 0.0)).unwrap();
        assert_eq!(v, Vec3::ZERO);
        let v = scatter(x, Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0)).unwrap();
        assert_eq!(v, x);
        let v = scatter(x, Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 1.0, 0.0)).unwrap();
        assert_eq!(v, Vec3::new(1.0, 1.0, 0.0));
        assert!(matches!(
            scatter(x, Vec3::ZERO, Vec3::new(0.0, 2.0, 0.0)),
            Err(Error::NonUnitNormal(_))
        ));
    }

    fn arb_vec(scale: f64) -> impl Strategy<Value = Vec3> {
        (-scale..scale, -scale..scale, -scale..scale).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    fn arb_unit() -> impl Strategy<Value = Vec3> {
        arb_vec(1.0)
            .prop_filter("non-degenerate", |v| v.norm() > 1e-3)
            .prop_map(|v| v.normalized().unwrap())
    }

    proptest! {
        #[test]
        fn binary_collision_is_an_involution(v in arb_vec(10.0), w in arb_vec(10.0), nu in arb_unit()) {
            let (v1, w1) = binary_collision(v, w, nu).unwrap();
            let (v2, w2) = binary_collision(v1, w1, nu).unwrap();
            prop_assert!(close(v2, v, 1e-12 * (1.0 + v.max_abs() + w.max_abs())));
            prop_assert!(close(w2, w, 1e-12 * (1.0 + v.max_abs() + w.max_abs())));
            prop_assert_eq!(v1, scatter(v, w, nu).unwrap());
        }

        #[test]
        fn scatter_kills_normal_relative_velocity(v in arb_vec(10.0), w in arb_vec(10.0), nu in arb_unit()) {
            let out = scatter(v, w, nu).unwrap();
            prop_assert!((out - w).dot(nu).abs() <= 1e-12 * (1.0 + v.norm() + w.norm()));
            let (e1, e2) = nu.orthonormal_frame();
            prop_assert!((out - v).dot(e1).abs() <= 1e-12 * (1.0 + v.norm() + w.norm()));
            prop_assert!((out - v).dot(e2).abs() <= 1e-12 * (1.0 + v.norm() + w.norm()));
            let twice = scatter(out, w, nu).unwrap();
            prop_assert!(close(twice, out, 1e-12 * (1.0 + v.norm() + w.norm())));
        }

        #[test]
        fn min_image_is_short_and_consistent(a in arb_vec(3.0), b in arb_vec(3.0)) {
            let (pa, pb) = (wrap(a).unwrap(), wrap(b).unwrap());
            let d = min_image(pa, pb);
            prop_assert!(d.max_abs() <= 0.5);
            prop_assert!(d.norm() <= 3f64.sqrt() / 2.0 + 1e-15);
            let back = min_image_displacement(pa.coords() + d - pb.coords());
            prop_assert!(back.max_abs() < 1e-12);
        }

        #[test]
        fn wrapped_components_in_unit_interval(a in arb_vec(1e6)) {
            let w = wrap(a).unwrap().coords();
            for c in w.to_array() {
                prop_assert!((0.0..1.0).contains(&c));
            }
        }
    }
}
