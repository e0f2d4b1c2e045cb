//! Density `P_t(Φ)` of the idealized process on collision trees.

use crate::error::Result;
use crate::laws::{BackgroundLaw, InitialLaw};
use crate::solver::rates::loss_rate;
use crate::trees::CollisionTree;

/// `P_t(Φ) = f0(x0, v0) Π_k g0(v_k')[(v(τ_k⁻) - v_k')·ν_k]₊ · exp(-Σ λ(v) |segment|)`,
/// and 0 for `t < τ(Φ)`.
pub fn tree_density_p(tree: &CollisionTree, t: f64, f0: &InitialLaw, g0: &BackgroundLaw) -> Result<f64> {
    tree.validate()?;
    if t < tree.tau() {
        return Ok(0.0);
    }
    let mut value = f0.density(tree.x0, tree.v0);
    if value == 0.0 {
        return Ok(0.0);
    }
    let velocities = tree.velocities()?;
    let mut exponent = 0.0;
    let mut start = 0.0;
    for (c, &before) in tree.collisions.iter().zip(&velocities) {
        let approach = c.nu.dot(before - c.v).max(0.0);
        value *= g0.density(c.v) * approach;
        if value == 0.0 {
            return Ok(0.0);
        }
        exponent += (c.t - start) * loss_rate(before, g0)?;
        start = c.t;
    }
    exponent += (t - start) * loss_rate(*velocities.last().unwrap(), g0)?;
    Ok(value * (-exponent).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{TorusPoint, Vec3};
    use crate::trees::CollisionMarker;

    fn root() -> CollisionTree {
        CollisionTree::root(TorusPoint::try_from([0.5, 0.5, 0.5]).unwrap(), Vec3::ZERO)
    }

    #[test]
    fn bare_root_decays_at_the_rest_rate() {
        let f0 = InitialLaw::default();
        let p = tree_density_p(&root(), 1.0, &f0, &BackgroundLaw::maxwellian(1.0)).unwrap();
        let want = (-(8.0 * std::f64::consts::PI).sqrt()).exp();
        assert!((p - want).abs() < 1e-12 * want);
    }

    #[test]
    fn indicator_and_grazing() {
        let f0 = InitialLaw::default();
        let g0 = BackgroundLaw::maxwellian(1.0);
        let mut tree = root();
        tree.append(CollisionMarker { t: 0.4, nu: Vec3::new(-1.0, 0.0, 0.0), v: Vec3::new(1.0, 0.0, 0.0) }).unwrap();
        assert!(tree_density_p(&tree, 0.6, &f0, &g0).unwrap() > 0.0);
        assert_eq!(tree_density_p(&tree, 0.3, &f0, &g0).unwrap(), 0.0);
        let mut grazing = root();
        grazing.append(CollisionMarker { t: 0.4, nu: Vec3::new(0.0, 1.0, 0.0), v: Vec3::new(1.0, 0.0, 0.0) }).unwrap();
        assert_eq!(tree_density_p(&grazing, 0.6, &f0, &g0).unwrap(), 0.0);
    }

    #[test]
    fn one_collision_factorises() {
        let f0 = InitialLaw::default();
        let g0 = BackgroundLaw::maxwellian(1.0);
        let v_bar = Vec3::new(1.0, 0.2, 0.0);
        let nu = Vec3::new(-1.0, 0.0, 0.0);
        let mut tree = root();
        tree.append(CollisionMarker { t: 0.3, nu, v: v_bar }).unwrap();
        let after = tree.velocities().unwrap()[1];
        assert!((after - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        let want = g0.density(v_bar)
            * 1.0
            * (-0.3 * loss_rate(Vec3::ZERO, &g0).unwrap() - 0.7 * loss_rate(after, &g0).unwrap()).exp();
        let got = tree_density_p(&tree, 1.0, &f0, &g0).unwrap();
        assert!((got - want).abs() < 1e-12 * want);
    }
}
