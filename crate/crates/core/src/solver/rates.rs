//! The collision rate `λ(v) = π ∫ g0(v̄) |v - v̄| dv̄` and its tabulation.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::laws::BackgroundLaw;

/// Mean of `|u e - s ω|` over uniform directions `ω`, for unit `e`, written
/// without cancellation.
fn sphere_mean_distance(u: f64, s: f64) -> f64 {
    if u == 0.0 && s == 0.0 {
        0.0
    } else if s >= u {
        s + u * u / (3.0 * s)
    } else {
        u + s * s / (3.0 * u)
    }
}

/// `λ` as a function of the speed `u = |v|`.
pub fn loss_rate_speed(u: f64, g0: &BackgroundLaw) -> Result<f64> {
    if !u.is_finite() || u < 0.0 {
        return Err(Error::NonFinite("loss rate speed"));
    }
    let tol = 1e-13 * (1.0 + u);
    Ok(PI * g0.radial_integral(|s| sphere_mean_distance(u, s), &[u], tol)?)
}

/// Total collision rate of a tagged particle with velocity `v`.
pub fn loss_rate(v: Vec3, g0: &BackgroundLaw) -> Result<f64> {
    loss_rate_speed(v.norm(), g0)
}

/// Values on the uniform nodes `k * step`, read back by cubic Lagrange
/// interpolation on the four surrounding nodes.
#[derive(Clone, Debug)]
pub(crate) struct UniformTable {
    pub step: f64,
    pub values: Vec<f64>,
}

impl UniformTable {
    pub fn tabulate<F: Fn(f64) -> Result<f64>>(upper: f64, points: usize, f: F) -> Result<Self> {
        if !(upper > 0.0) || points < 4 {
            return Err(Error::InvalidParameter("table needs a positive range and four nodes".into()));
        }
        let step = upper / (points - 1) as f64;
        let values = (0..points).map(|k| f(k as f64 * step)).collect::<Result<Vec<_>>>()?;
        Ok(UniformTable { step, values })
    }

    pub fn upper(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    /// `None` beyond the last node.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let t = x / self.step;
        let k = t.floor() as usize;
        if k + 1 >= self.values.len() {
            return None;
        }
        let k0 = k.saturating_sub(1).min(self.values.len() - 4);
        let s = t - k0 as f64;
        let y = &self.values[k0..k0 + 4];
        let l0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
        let l1 = s * (s - 2.0) * (s - 3.0) / 2.0;
        let l2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
        let l3 = s * (s - 1.0) * (s - 2.0) / 6.0;
        Some(l0 * y[0] + l1 * y[1] + l2 * y[2] + l3 * y[3])
    }
}

/// `λ` tabulated on a uniform speed grid, with direct quadrature beyond it.
#[derive(Clone, Debug)]
pub struct RateCache {
    law: BackgroundLaw,
    table: UniformTable,
    beta: f64,
}

impl RateCache {
    pub const DEFAULT_POINTS: usize = 4001;

    /// Tabulates on `[0, u_max]` with `points` nodes.
    pub fn new(g0: &BackgroundLaw, u_max: f64, points: usize) -> Result<Self> {
        let table = UniformTable::tabulate(u_max, points, |u| loss_rate_speed(u, g0))?;
        Ok(RateCache { law: g0.clone(), table, beta: g0.beta()? })
    }

    /// Table spanning twelve spreads of the law beyond `speed_hint`.
    pub fn for_law(g0: &BackgroundLaw, speed_hint: f64) -> Result<Self> {
        let u_max = speed_hint.max(0.0) + 12.0 * g0.scale().max(0.1) + 1.0;
        Self::new(g0, u_max, Self::DEFAULT_POINTS)
    }

    pub fn law(&self) -> &BackgroundLaw {
        &self.law
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn u_max(&self) -> f64 {
        self.table.upper()
    }

    /// Nodes of the table, `(u, λ(u))`.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.table.values.iter().enumerate().map(|(k, &l)| (k as f64 * self.table.step, l))
    }

    pub fn lambda_speed(&self, u: f64) -> f64 {
        self.table.eval(u).unwrap_or_else(|| loss_rate_speed(u, &self.law).unwrap_or(f64::NAN))
    }

    pub fn lambda(&self, v: Vec3) -> f64 {
        self.lambda_speed(v.norm())
    }

    /// The a-priori bound `π(|v| + β)`.
    pub fn upper_bound(&self, v: Vec3) -> f64 {
        PI * (v.norm() + self.beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::erf;

    /// `E|v - X|` for `X ~ N(0, σ^2 I)` and `|v| = u`.
    fn maxwell_mean_distance(u: f64, sigma: f64) -> f64 {
        if u == 0.0 {
            return sigma * (8.0 / PI).sqrt();
        }
        sigma
            * ((2.0 / PI).sqrt() * (-u * u / (2.0 * sigma * sigma)).exp()
                + (u / sigma + sigma / u) * erf(u / (2f64.sqrt() * sigma)))
    }

    #[test]
    fn rest_rate_for_unit_maxwellian() {
        let l = loss_rate(Vec3::ZERO, &BackgroundLaw::maxwellian(1.0)).unwrap();
        assert!((l - (8.0 * PI).sqrt()).abs() < 1e-12 * l, "{l}");
    }

    #[test]
    fn rate_matches_closed_form() {
        for sigma in [0.3, 1.0, 2.5] {
            let g0 = BackgroundLaw::maxwellian(sigma);
            for u in [0.0, 1e-6, 0.01, 0.4, 1.0, 3.3, 12.0] {
                let l = loss_rate_speed(u, &g0).unwrap();
                let want = PI * maxwell_mean_distance(u, sigma);
                assert!((l - want).abs() < 1e-12 * want, "σ={sigma} u={u}: {l} vs {want}");
            }
        }
    }

    #[test]
    fn fast_particles_see_a_rate_close_to_pi_speed() {
        let l = loss_rate(Vec3::new(100.0, 0.0, 0.0), &BackgroundLaw::maxwellian(1.0)).unwrap();
        let r = l / (PI * 100.0);
        assert!((1.0..=1.001).contains(&r), "{r}");
    }

    #[test]
    fn uniform_ball_rate() {
        // E|v - X| for X uniform in the unit ball and v = 0 is 3/4
        let l = loss_rate(Vec3::ZERO, &BackgroundLaw::UniformBall { radius: 1.0 }).unwrap();
        assert!((l - 0.75 * PI).abs() < 1e-12);
        // for |v| ≥ R the mean distance is |v| + R^2 / (5|v|)
        let l = loss_rate_speed(2.0, &BackgroundLaw::UniformBall { radius: 1.0 }).unwrap();
        assert!((l - PI * (2.0 + 0.1)).abs() < 1e-11);
    }

    #[test]
    fn cache_interpolates_and_respects_bound() {
        let g0 = BackgroundLaw::maxwellian(1.0);
        let cache = RateCache::for_law(&g0, 3.0).unwrap();
        for (u, l) in cache.nodes() {
            assert!(l >= 0.0);
            assert!(l <= PI * (u + cache.beta()));
        }
        let mut prev = 0.0;
        for k in 0..500 {
            let u = k as f64 * 0.037;
            let l = cache.lambda_speed(u);
            let exact = loss_rate_speed(u, &g0).unwrap();
            assert!((l - exact).abs() < 1e-9 * exact);
            assert!(l >= prev);
            prev = l;
        }
        let far = cache.u_max() + 5.0;
        assert!((cache.lambda_speed(far) - loss_rate_speed(far, &g0).unwrap()).abs() < 1e-12);
    }
}
