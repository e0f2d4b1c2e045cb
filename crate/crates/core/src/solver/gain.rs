//! The gain term `Q⁺` in its spherical form and in the Carleman kernel form.
//!
//! Writing `v̄ = v + aν + w` with `w ⊥ ν`, the spherical form becomes
//! `Q⁺[f](v) = ∫ dν ∫_{a<0} (-a) f(v + aν) da ∫_{ν⊥} g0(v + w) dw`, and the
//! kernel form is `∫ k(v, v*) f(v*) dv*`. The two routes below share no
//! quadrature: the first integrates the plane numerically and the ray with
//! fixed panels, the second uses the closed-form plane integral and splits
//! rays exactly at the interpolation breakpoints.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::laws::BackgroundLaw;
use crate::quadrature::{GaussRule, SphereRule};
use crate::solver::density::{DensityMode, KineticDensity, VelocityDensity};

/// Boundary-layer mass above which a gain evaluation is flagged as truncated.
pub const TRUNCATION_FLAG_MASS: f64 = 1e-3;

/// Carleman kernel: the integral of `g0` over the plane through `v`
/// orthogonal to `v - v*`, divided by `|v - v*|`.
pub fn carleman_k(v: Vec3, v_star: Vec3, g0: &BackgroundLaw) -> Result<f64> {
    let diff = v - v_star;
    let r = diff.norm();
    if r == 0.0 {
        return Err(Error::InvalidParameter("Carleman kernel is singular at v = v*".into()));
    }
    Ok(g0.plane_integral(v.dot(diff).abs() / r) / r)
}

/// Quadrature settings for [`gain_sphere`].
#[derive(Clone, Debug)]
pub struct SphereGainRule {
    pub directions: SphereRule,
    /// Gauss points per ray panel.
    pub ray_points: usize,
    /// Ray panels per grid cell width.
    pub panels_per_cell: usize,
    /// Radial Gauss points per plane panel and number of plane panels.
    pub plane_radial: usize,
    pub plane_panels: usize,
    pub plane_angles: usize,
}

impl Default for SphereGainRule {
    fn default() -> Self {
        SphereGainRule {
            directions: SphereRule::product(48, 96),
            ray_points: 4,
            panels_per_cell: 4,
            plane_radial: 8,
            plane_panels: 6,
            plane_angles: 12,
        }
    }
}

/// Support box of the interpolated density, `[-b, b]^3`.
fn support_half_width(f: &KineticDensity) -> f64 {
    f.grid.v_max + 0.5 * f.grid.width()
}

/// Parameter interval on which `p + s d` lies in `[-b, b]^3`, intersected with `s ≥ 0`.
fn clip_ray(p: Vec3, d: Vec3, b: f64) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    for axis in 0..3 {
        let (pa, da) = (p.component(axis), d.component(axis));
        if da.abs() < 1e-300 {
            if pa.abs() > b {
                return None;
            }
            continue;
        }
        let (s1, s2) = ((-b - pa) / da, (b - pa) / da);
        lo = lo.max(s1.min(s2));
        hi = hi.min(s1.max(s2));
    }
    (hi > lo).then_some((lo, hi))
}

/// Numerical integral of `g0` over the plane `{c + w : w ⊥ n}` in polar
/// coordinates about the foot point of the plane.
fn plane_integral_numeric(g0: &BackgroundLaw, c: Vec3, n: Vec3, rule: &SphereGainRule, radial: &GaussRule) -> f64 {
    let foot = n * n.dot(c);
    let (e1, e2) = n.orthonormal_frame();
    // g0 is radial, so its support meets the plane in a disc about the foot point
    let outer = g0.support_radius().min(13.0 * g0.scale());
    let reach = (outer * outer - foot.norm_squared()).max(0.0).sqrt();
    if reach == 0.0 {
        return 0.0;
    }
    let dphi = std::f64::consts::TAU / rule.plane_angles as f64;
    let panel = reach / rule.plane_panels as f64;
    let mut acc = 0.0;
    for p in 0..rule.plane_panels {
        for (r, wr) in radial.mapped(p as f64 * panel, (p + 1) as f64 * panel) {
            for k in 0..rule.plane_angles {
                let phi = (k as f64 + 0.5) * dphi;
                let w = e1 * (r * phi.cos()) + e2 * (r * phi.sin());
                acc += wr * r * dphi * g0.density(foot + w);
            }
        }
    }
    acc
}

/// Result of a gain evaluation on gridded data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainValue {
    pub value: f64,
    /// True when the outermost cell layer holds enough mass that the zero
    /// extension beyond the grid may matter.
    pub truncated: bool,
}

/// Mass held by the outermost layer of velocity cells.
pub fn boundary_layer_mass(f: &KineticDensity) -> f64 {
    let n = f.grid.n_bins;
    f.velocity_cell_masses()
        .iter()
        .enumerate()
        .filter(|(i, _)| f.grid.coords(*i).iter().any(|&c| c == 0 || c + 1 == n))
        .map(|(_, m)| m)
        .sum()
}

/// `Q⁺[f](v)` from the spherical form.
pub fn gain_sphere(f: &KineticDensity, v: Vec3, g0: &BackgroundLaw, rule: &SphereGainRule) -> Result<GainValue> {
    if !v.is_finite() {
        return Err(Error::NonFinite("gain velocity"));
    }
    if f.mode != DensityMode::VelocityOnly {
        return Err(Error::Unsupported("gain_sphere evaluates velocity-only densities".into()));
    }
    let b = support_half_width(f);
    let panel = f.grid.width() / rule.panels_per_cell as f64;
    let ray_rule = GaussRule::legendre(rule.ray_points);
    let radial = GaussRule::legendre(rule.plane_radial);
    let value: f64 = rule
        .directions
        .points()
        .par_iter()
        .map(|&(nu, w)| {
            // pre-collisional velocities v + aν with a < 0, written as v - sν
            let Some((lo, hi)) = clip_ray(v, -nu, b) else {
                return 0.0;
            };
            let panels = ((hi - lo) / panel).ceil().max(1.0) as usize;
            let step = (hi - lo) / panels as f64;
            let mut ray = 0.0;
            for p in 0..panels {
                let a = lo + p as f64 * step;
                ray += ray_rule.integrate(a, a + step, |s| s * f.density(v - nu * s));
            }
            if ray == 0.0 {
                return 0.0;
            }
            w * ray * plane_integral_numeric(g0, v, nu, rule, &radial)
        })
        .sum();
    Ok(GainValue { value, truncated: boundary_layer_mass(f) > TRUNCATION_FLAG_MASS })
}

/// Quadrature settings for [`gain_carleman`].
#[derive(Clone, Debug)]
pub struct CarlemanRule {
    pub directions: SphereRule,
}

impl Default for CarlemanRule {
    fn default() -> Self {
        CarlemanRule { directions: SphereRule::product_with_offset(56, 112, 0.25) }
    }
}

/// Ray parameters in `(lo, hi)` at which `p + s d` crosses a plane through
/// the cell centres, where the trilinear interpolant changes polynomial piece.
fn centre_crossings(f: &KineticDensity, p: Vec3, d: Vec3, lo: f64, hi: f64) -> Vec<f64> {
    let h = f.grid.width();
    let first = f.grid.axis_centre(0) - h;
    let mut out = vec![lo, hi];
    for axis in 0..3 {
        let (pa, da) = (p.component(axis), d.component(axis));
        if da == 0.0 {
            continue;
        }
        for k in 0..=f.grid.n_bins + 1 {
            let s = (first + k as f64 * h - pa) / da;
            if s > lo && s < hi {
                out.push(s);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// `∫ k(v, v*) f(v*) dv*` in spherical coordinates about `v`:
/// `∫ dω P(|v·ω|) ∫ r f(v + rω) dr` with the closed-form plane integral `P`.
pub fn gain_carleman(f: &KineticDensity, v: Vec3, g0: &BackgroundLaw, rule: &CarlemanRule) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::NonFinite("gain velocity"));
    }
    if f.mode != DensityMode::VelocityOnly {
        return Err(Error::Unsupported("gain_carleman evaluates velocity-only densities".into()));
    }
    let b = support_half_width(f);
    // along a ray the interpolant is cubic between crossings, so r f(r) is quartic
    let gauss = GaussRule::legendre(3);
    Ok(rule
        .directions
        .points()
        .par_iter()
        .map(|&(omega, w)| {
            let Some((lo, hi)) = clip_ray(v, omega, b) else {
                return 0.0;
            };
            let breaks = centre_crossings(f, v, omega, lo, hi);
            let ray: f64 = breaks
                .windows(2)
                .map(|s| gauss.integrate(s[0], s[1], |r| r * f.density(v + omega * r)))
                .sum();
            if ray == 0.0 {
                return 0.0;
            }
            w * ray * g0.plane_integral(v.dot(omega).abs())
        })
        .sum())
}

/// `Q⁺[f](v)` for an analytic velocity density, via the kernel form with
/// adaptive radial quadrature.
pub fn gain_carleman_analytic<D: VelocityDensity>(f: &D, v: Vec3, g0: &BackgroundLaw, reach: f64, rule: &SphereRule) -> Result<f64> {
    let radial = GaussRule::legendre(24);
    let panels = 16;
    let values: Vec<f64> = rule
        .points()
        .par_iter()
        .map(|&(omega, w)| {
            let step = reach / panels as f64;
            let ray: f64 = (0..panels)
                .map(|p| radial.integrate(p as f64 * step, (p + 1) as f64 * step, |r| r * f.density(v + omega * r)))
                .sum();
            w * ray * g0.plane_integral(v.dot(omega).abs())
        })
        .collect();
    Ok(values.iter().sum())
}
