//! Quadrature helpers: adaptive double-exponential integration on intervals
//! and half-lines, and fixed product rules on intervals and the unit sphere.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

const MAX_DEPTH: u32 = 30;

/// Integrates `f` over `[a, b]` to absolute accuracy `tol`, bisecting
/// wherever a single double-exponential pass does not converge.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    integrate_rec(f, a, b, tol, 0)
}

fn integrate_rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64> {
    let out = quadrature::integrate(f, a, b, tol);
    if out.error_estimate <= tol {
        return Ok(out.integral);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Quadrature(format!(
            "[{a}, {b}]: error estimate {:.3e} above target {tol:.3e}",
            out.error_estimate
        )));
    }
    let mid = 0.5 * (a + b);
    Ok(integrate_rec(f, a, mid, 0.5 * tol, depth + 1)? + integrate_rec(f, mid, b, 0.5 * tol, depth + 1)?)
}

/// Integrates over consecutive breakpoints, splitting the tolerance evenly.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], tol: f64) -> Result<f64> {
    let pieces = breaks.len().saturating_sub(1).max(1) as f64;
    breaks
        .windows(2)
        .map(|w| integrate(f, w[0], w[1], tol / pieces))
        .sum()
}

/// Integrates `f` over `[a, ∞)` through `s = a + x / (1 - x)`.
pub fn integrate_tail<F: Fn(f64) -> f64>(f: &F, a: f64, tol: f64) -> Result<f64> {
    let g = |x: f64| {
        let one_minus = 1.0 - x;
        if one_minus <= 0.0 {
            return 0.0;
        }
        let s = a + x / one_minus;
        f(s) / (one_minus * one_minus)
    };
    integrate(&g, 0.0, 1.0, tol)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn legendre(points: usize) -> GaussRule {
        let degree = NonZeroUsize::new(points.max(1)).unwrap();
        let rule = GaussLegendre::new(degree);
        let (nodes, weights) = rule.as_node_weight_pairs().iter().copied().unzip();
        GaussRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Product rule on the unit sphere: Gauss-Legendre in `cos θ`, equispaced
/// azimuths with a fixed offset. Weights sum to `4π`.
#[derive(Clone, Debug)]
pub struct SphereRule {
    points: Vec<(Vec3, f64)>,
}

impl SphereRule {
    pub fn product(polar: usize, azimuthal: usize) -> SphereRule {
        Self::product_with_offset(polar, azimuthal, 0.5)
    }

    /// `offset ∈ [0, 1)` shifts the azimuth grid by a fraction of one step.
    pub fn product_with_offset(polar: usize, azimuthal: usize, offset: f64) -> SphereRule {
        let gauss = GaussRule::legendre(polar);
        let dphi = 2.0 * PI / azimuthal as f64;
        let mut points = Vec::with_capacity(polar * azimuthal);
        for (mu, w) in gauss.mapped(-1.0, 1.0) {
            let sin = (1.0 - mu * mu).max(0.0).sqrt();
            for k in 0..azimuthal {
                let phi = (k as f64 + offset) * dphi;
                points.push((Vec3::new(sin * phi.cos(), sin * phi.sin(), mu), w * dphi));
            }
        }
        SphereRule { points }
    }

    pub fn points(&self) -> &[(Vec3, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate<F: FnMut(Vec3) -> f64>(&self, mut f: F) -> f64 {
        self.points.iter().map(|&(n, w)| w * f(n)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptive_integration_of_narrow_gaussian() {
        let f = |x: f64| (-x * x / (2.0 * 0.01)).exp();
        let got = integrate(&f, -40.0, 40.0, 1e-14).unwrap();
        let exact = (2.0 * PI * 0.01).sqrt();
        assert!((got - exact).abs() < 1e-12, "{got} vs {exact}");
    }

    #[test]
    fn tail_integral() {
        let got = integrate_tail(&|s: f64| s.powi(-4), 2.0, 1e-14).unwrap();
        assert!((got - 1.0 / 24.0).abs() < 1e-12);
        let got = integrate_tail(&|s: f64| (-s).exp(), 0.0, 1e-14).unwrap();
        assert!((got - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gauss_rule_is_exact_for_polynomials() {
        let rule = GaussRule::legendre(3);
        let got = rule.integrate(0.0, 2.0, |x| x.powi(5) - x);
        assert!((got - (64.0 / 6.0 - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn sphere_rule_total_area_and_hemisphere_identity() {
        let rule = SphereRule::product(16, 32);
        assert!((rule.integrate(|_| 1.0) - 4.0 * PI).abs() < 1e-12);
        // ∫ [w·ν]_+ dν = π |w|; the kink at the equator limits accuracy
        let w = Vec3::new(2.0, 0.0, 0.0);
        let fine = SphereRule::product(64, 256);
        let got = fine.integrate(|n| w.dot(n).max(0.0));
        assert!((got - 2.0 * PI).abs() < 1e-3, "{got}");
        let wz = Vec3::new(0.0, 0.0, 2.0);
        let got = fine.integrate(|n| wz.dot(n).max(0.0));
        assert!((got - 2.0 * PI).abs() < 5e-3, "{got}");
    }
}
