//! Collision trees: the tagged particle's initial datum plus its ordered
//! collision history, and the classification of good trees.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    entering_root, image_range, min_image, min_image_displacement, scatter, wrap, TorusPoint, Vec3,
    TOL_UNIT,
};
use crate::sampling::ParticleState;

/// Margin for the strict non-grazing inequality.
pub const GRAZING_MARGIN: f64 = 1e-12;

/// Contact detection slack used when searching for earlier contacts with a
/// reconstructed background line.
const RECOLLISION_SLACK: f64 = 1e-9;

/// One collision: time, unit impact direction from the tagged centre to the
/// background centre, and the background velocity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionMarker {
    pub t: f64,
    pub nu: Vec3,
    pub v: Vec3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionTree {
    pub x0: TorusPoint,
    pub v0: Vec3,
    pub collisions: Vec<CollisionMarker>,
}

/// Free flight of the tagged particle from `start` with constant velocity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub x: TorusPoint,
    pub v: Vec3,
}

impl CollisionTree {
    pub fn root(x0: TorusPoint, v0: Vec3) -> Self {
        CollisionTree { x0, v0, collisions: Vec::new() }
    }

    /// Number of collisions `n(Φ)`.
    pub fn n(&self) -> usize {
        self.collisions.len()
    }

    /// Time of the final collision, 0 for the bare root.
    pub fn tau(&self) -> f64 {
        self.collisions.last().map_or(0.0, |c| c.t)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.v0.is_finite() {
            return Err(Error::NonFinite("tree root velocity"));
        }
        let mut prev = 0.0;
        for c in &self.collisions {
            if !(c.t > prev) || !c.t.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "collision times must be strictly increasing and positive, got {} after {prev}",
                    c.t
                )));
            }
            if ((c.nu.norm() - 1.0).abs()) > TOL_UNIT {
                return Err(Error::NonUnitNormal(c.nu.norm()));
            }
            if !c.v.is_finite() {
                return Err(Error::NonFinite("tree marker velocity"));
            }
            prev = c.t;
        }
        Ok(())
    }

    /// Appends a marker after the current final collision.
    pub fn append(&mut self, marker: CollisionMarker) -> Result<()> {
        if !(marker.t > self.tau()) {
            return Err(Error::InvalidParameter(format!(
                "marker time {} does not follow {}",
                marker.t,
                self.tau()
            )));
        }
        self.collisions.push(marker);
        Ok(())
    }

    /// The tree with its final collision removed.
    pub fn prune(&self) -> Result<CollisionTree> {
        if self.collisions.is_empty() {
            return Err(Error::EmptyTree);
        }
        let mut out = self.clone();
        out.collisions.pop();
        Ok(out)
    }

    /// Tagged velocities: `v0` then the velocity right after each collision.
    pub fn velocities(&self) -> Result<Vec<Vec3>> {
        let mut out = Vec::with_capacity(self.n() + 1);
        let mut v = self.v0;
        out.push(v);
        for c in &self.collisions {
            v = scatter(v, c.v, c.nu)?;
            out.push(v);
        }
        Ok(out)
    }

    /// Free-flight segments of the tagged path, one per collision plus the root.
    pub fn segments(&self) -> Result<Vec<Segment>> {
        let velocities = self.velocities()?;
        let mut segments = Vec::with_capacity(velocities.len());
        let mut seg = Segment { start: 0.0, x: self.x0, v: velocities[0] };
        segments.push(seg);
        for (c, &v) in self.collisions.iter().zip(&velocities[1..]) {
            seg = Segment { start: c.t, x: seg.x.advance(seg.v, c.t - seg.start), v };
            segments.push(seg);
        }
        Ok(segments)
    }

    /// Tagged state at time `t ≥ 0`, right-continuous at collisions.
    pub fn state_at(&self, t: f64) -> Result<ParticleState> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("time must be non-negative, got {t}")));
        }
        let segments = self.segments()?;
        let k = segments.partition_point(|s| s.start <= t) - 1;
        let s = segments[k];
        Ok(ParticleState::new(s.x.advance(s.v, t - s.start), s.v))
    }

    /// `𝒱(Φ)`: the largest of the tagged and background speeds in the tree.
    pub fn max_speed(&self) -> Result<f64> {
        let tagged = self.velocities()?.into_iter().map(Vec3::norm).fold(0.0, f64::max);
        Ok(self.collisions.iter().map(|c| c.v.norm()).fold(tagged, f64::max))
    }
}

/// Distance between trees: 1 across different collision counts, otherwise
/// the largest sup-norm difference over the root and the markers, capped at 1.
/// Root positions are compared along the minimal image.
pub fn tree_distance(a: &CollisionTree, b: &CollisionTree) -> f64 {
    if a.n() != b.n() {
        return 1.0;
    }
    let mut d = min_image(a.x0, b.x0).max_abs().max((a.v0 - b.v0).max_abs());
    for (p, q) in a.collisions.iter().zip(&b.collisions) {
        d = d.max((p.t - q.t).abs()).max((p.nu - q.nu).max_abs()).max((p.v - q.v).max_abs());
    }
    d.min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodTreeParams {
    pub epsilon: f64,
    pub v_eps: f64,
    pub m_eps: f64,
}

impl GoodTreeParams {
    pub fn new(epsilon: f64, v_eps: f64, m_eps: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        let slack = 1e-12;
        if epsilon * v_eps.powi(3) > 0.125 * (1.0 + slack) || v_eps <= 0.0 {
            return Err(Error::InvalidParameter(format!("speed cap {v_eps} violates ε V^3 ≤ 1/8")));
        }
        if m_eps > epsilon.powf(-0.5) * (1.0 + slack) || m_eps < 0.0 {
            return Err(Error::InvalidParameter(format!("collision cap {m_eps} violates M ≤ ε^(-1/2)")));
        }
        Ok(GoodTreeParams { epsilon, v_eps, m_eps })
    }
}

/// Largest admissible caps: `V = (8ε)^(-1/3)`, `M = ε^(-1/2)`.
pub fn default_good_params(epsilon: f64) -> Result<GoodTreeParams> {
    GoodTreeParams::new(epsilon, (8.0 * epsilon).powf(-1.0 / 3.0), epsilon.powf(-0.5))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodTreeReport {
    pub n: usize,
    pub tau: f64,
    pub max_speed: f64,
    pub recollision_free: bool,
    pub non_grazing: bool,
    pub overlap_free: bool,
    pub n_ok: bool,
    pub speed_ok: bool,
    pub good: bool,
}

impl GoodTreeReport {
    pub const CSV_HEADER: &'static str =
        "epsilon,n,tau,max_speed,recollision_free,non_grazing,overlap_free,n_ok,speed_ok,good";

    pub fn csv_row(&self, epsilon: f64) -> String {
        format!(
            "{epsilon},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.tau,
            self.max_speed,
            self.recollision_free,
            self.non_grazing,
            self.overlap_free,
            self.n_ok,
            self.speed_ok,
            self.good
        )
    }
}

/// Initial centre of the background particle hit at `marker`, given the
/// tagged position at the collision time.
pub fn background_origin(x_at_collision: TorusPoint, marker: &CollisionMarker, epsilon: f64) -> Vec3 {
    x_at_collision.coords() + marker.nu * epsilon - marker.v * marker.t
}

/// Whether the tagged path touches the background line `origin + t w_bg`
/// before `t_end`, ignoring the contact that ends the final segment.
fn earlier_contact(segments: &[Segment], origin: Vec3, v_bg: Vec3, t_end: f64, epsilon: f64) -> bool {
    let radius = epsilon + RECOLLISION_SLACK;
    for (k, seg) in segments.iter().enumerate() {
        if seg.start >= t_end {
            break;
        }
        let end = segments.get(k + 1).map_or(t_end, |s| s.start.min(t_end));
        let h = end - seg.start;
        let last = end == t_end;
        let bg = origin + v_bg * seg.start;
        let p = min_image_displacement(seg.x.coords() - bg);
        let w = seg.v - v_bg;
        for kx in image_range(p.x, w.x, h, radius) {
            for ky in image_range(p.y, w.y, h, radius) {
                for kz in image_range(p.z, w.z, h, radius) {
                    let q = p - Vec3::new(kx as f64, ky as f64, kz as f64);
                    if last && ((q + w * h).norm() - epsilon).abs() < 1e-7 {
                        continue;
                    }
                    if entering_root(q, w, radius).is_some_and(|s| s <= h) {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Checks the good-tree conditions for `tree` at diameter `params.epsilon`.
pub fn classify(tree: &CollisionTree, params: &GoodTreeParams) -> Result<GoodTreeReport> {
    let eps = params.epsilon;
    let segments = tree.segments()?;
    let mut recollision_free = true;
    let mut non_grazing = true;
    let mut overlap_free = true;
    for (i, marker) in tree.collisions.iter().enumerate() {
        let before = segments[i];
        let x_hit = before.x.advance(before.v, marker.t - before.start);
        if marker.nu.dot(before.v - marker.v) <= GRAZING_MARGIN {
            non_grazing = false;
        }
        let origin = background_origin(x_hit, marker, eps);
        if min_image(tree.x0, wrap(origin)?).norm() <= eps {
            overlap_free = false;
        }
        // a re-collision needs at least two markers
        if tree.n() >= 2 && recollision_free && earlier_contact(&segments[..=i], origin, marker.v, marker.t, eps) {
            recollision_free = false;
        }
    }
    let n = tree.n();
    let max_speed = tree.max_speed()?;
    let n_ok = n as f64 <= params.m_eps;
    let speed_ok = max_speed <= params.v_eps;
    Ok(GoodTreeReport {
        n,
        tau: tree.tau(),
        max_speed,
        recollision_free,
        non_grazing,
        overlap_free,
        n_ok,
        speed_ok,
        good: recollision_free && non_grazing && overlap_free && n_ok && speed_ok,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimStatus {
    Completed,
    AbortedSimultaneous,
    AbortedEventCap,
}

/// One line of the JSON-lines tree format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeRecord {
    pub x0: TorusPoint,
    pub v0: Vec3,
    pub collisions: Vec<CollisionMarker>,
    pub status: SimStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partners: Option<Vec<usize>>,
}

impl TreeRecord {
    pub fn tree(&self) -> CollisionTree {
        CollisionTree { x0: self.x0, v0: self.v0, collisions: self.collisions.clone() }
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        Ok(serde_json::from_str(line)?)
    }
}

/// Parses every non-blank line of a JSON-lines tree file.
pub fn read_tree_records(text: &str) -> Result<Vec<TreeRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(TreeRecord::from_json_line)
        .collect()
}
