//! Loss semigroup and the Duhamel series for the linear Boltzmann equation.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::laws::BackgroundLaw;
use crate::solver::density::{DensityMode, KineticDensity};
use crate::solver::operator::DiscreteGain;
use crate::solver::rates::loss_rate;

/// Default remainder mass above which a Duhamel solve is flagged.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-2;

/// Periodic trilinear interpolation of a scalar field on `l^3` cells of the unit torus.
fn periodic_interpolate(field: &[f64], l: usize, x: [f64; 3]) -> f64 {
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..3 {
        let p = (x[a] * l as f64 - 0.5).rem_euclid(l as f64);
        let fl = p.floor();
        base[a] = fl as usize % l;
        frac[a] = p - fl;
    }
    let at = |i: usize, j: usize, k: usize| field[((i % l) * l + j % l) * l + k % l];
    let mut acc = 0.0;
    for (di, wx) in [(0, 1.0 - frac[0]), (1, frac[0])] {
        for (dj, wy) in [(0, 1.0 - frac[1]), (1, frac[1])] {
            for (dk, wz) in [(0, 1.0 - frac[2]), (1, frac[2])] {
                acc += wx * wy * wz * at(base[0] + di, base[1] + dj, base[2] + dk);
            }
        }
    }
    acc
}

fn cell_rates(f: &KineticDensity, g0: &BackgroundLaw) -> Result<Vec<f64>> {
    (0..f.grid.len()).into_par_iter().map(|i| loss_rate(f.grid.centre(i), g0)).collect()
}

/// `T(t) f`: free transport with exponential loss at rate `λ(v)`.
pub fn semigroup_t(f: &KineticDensity, t: f64, g0: &BackgroundLaw) -> Result<KineticDensity> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("semigroup time must be finite and ≥ 0, got {t}")));
    }
    f.validate()?;
    let rates = cell_rates(f, g0)?;
    let mut out = f.clone();
    match f.mode {
        DensityMode::VelocityOnly => {
            for (value, l) in out.values.iter_mut().zip(&rates) {
                *value *= (-t * l).exp();
            }
        }
        DensityMode::PhaseSpace => {
            let l = f.spatial_bins;
            let cells = l * l * l;
            let nv = f.grid.len();
            // values[s * nv + j]: gather the spatial field of each velocity cell
            let shifted: Vec<Vec<f64>> = (0..nv)
                .into_par_iter()
                .map(|j| {
                    let field: Vec<f64> = (0..cells).map(|s| f.values[s * nv + j]).collect();
                    let v = f.grid.centre(j);
                    let decay = (-t * rates[j]).exp();
                    (0..cells)
                        .map(|s| {
                            let (i, r) = (s / (l * l), s % (l * l));
                            let c = [i, r / l, r % l].map(|k| (k as f64 + 0.5) / l as f64);
                            let back = [c[0] - t * v.x, c[1] - t * v.y, c[2] - t * v.z];
                            decay * periodic_interpolate(&field, l, back)
                        })
                        .collect()
                })
                .collect();
            for (j, field) in shifted.iter().enumerate() {
                for (s, value) in field.iter().enumerate() {
                    out.values[s * nv + j] = *value;
                }
            }
        }
    }
    Ok(out)
}

/// Weights of the exponential trapezoid step: with `z = λ dt`, the integral
/// `∫_0^dt e^{-λ(dt-s)} G(s) ds` for `G` linear between `G_k` and `G_{k+1}`
/// is `dt (a G_k + b G_{k+1})`.
fn step_weights(z: f64) -> (f64, f64, f64) {
    let decay = (-z).exp();
    let phi1 = if z < 1e-8 { 1.0 - 0.5 * z } else { -(-z).exp_m1() / z };
    let phi2 = if z < 1e-2 {
        0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0
    } else {
        (1.0 - (1.0 + z) * decay) / (z * z)
    };
    (decay, phi2, phi1 - phi2)
}

/// Output of a Duhamel solve.
#[derive(Clone, Debug)]
pub struct DuhamelSolution {
    /// Partial sum `Σ_{j ≤ j_max} f^(j)(t)`.
    pub density: KineticDensity,
    /// Mass of each term `f^(j)(t)`, starting at `j = 0`.
    pub level_masses: Vec<f64>,
    /// `1 - Σ level_masses` relative to the initial mass.
    pub remainder: f64,
    pub warning: Option<String>,
}

/// Duhamel series on a fixed velocity grid with a precomputed gain matrix.
pub struct DuhamelSolver {
    gain: DiscreteGain,
    pub time_steps: usize,
    pub tail_tolerance: f64,
}

impl DuhamelSolver {
    pub fn new(gain: DiscreteGain) -> Self {
        DuhamelSolver { gain, time_steps: 32, tail_tolerance: DEFAULT_TAIL_TOLERANCE }
    }

    pub fn gain(&self) -> &DiscreteGain {
        &self.gain
    }

    pub fn solve(&self, f0: &KineticDensity, t: f64, j_max: usize) -> Result<DuhamelSolution> {
        if f0.mode != DensityMode::VelocityOnly {
            return Err(Error::Unsupported("the Duhamel solver works on velocity-only densities".into()));
        }
        if f0.grid != *self.gain.grid() {
            return Err(Error::GridMismatch("initial density and gain matrix use different grids".into()));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("solve time must be finite and ≥ 0, got {t}")));
        }
        if self.time_steps == 0 {
            return Err(Error::InvalidParameter("time_steps must be positive".into()));
        }
        f0.validate()?;
        let steps = self.time_steps;
        let dt = t / steps as f64;
        let rates = self.gain.rates();
        let weights: Vec<(f64, f64, f64)> = rates.iter().map(|&l| step_weights(l * dt)).collect();
        let cell = f0.grid.cell_volume();
        let mass = |v: &[f64]| v.iter().sum::<f64>() * cell;
        let m0 = mass(&f0.values);

        // current term at every time node, cell-major: level[i * width + k]
        let width = steps + 1;
        let cells = f0.grid.len();
        let mut level = vec![0.0; cells * width];
        for i in 0..cells {
            for k in 0..width {
                level[i * width + k] = f0.values[i] * (-(k as f64 * dt) * rates[i]).exp();
            }
        }
        let at_t = |level: &[f64]| -> Vec<f64> { (0..cells).map(|i| level[i * width + steps]).collect() };
        let mut total = at_t(&level);
        let mut level_masses = vec![mass(&total)];
        for _ in 1..=j_max {
            let gains = self.gain.apply_batch(&level, width)?;
            level.par_chunks_mut(width).zip(gains.par_chunks(width)).zip(weights.par_iter()).for_each(
                |((p, g), &(decay, a, b))| {
                    p[0] = 0.0;
                    for k in 0..steps {
                        p[k + 1] = decay * p[k] + dt * (a * g[k] + b * g[k + 1]);
                    }
                },
            );
            let now = at_t(&level);
            for (acc, v) in total.iter_mut().zip(&now) {
                *acc += v;
            }
            level_masses.push(mass(&now));
        }
        let remainder = if m0 > 0.0 { 1.0 - level_masses.iter().sum::<f64>() / m0 } else { 0.0 };
        let warning = (remainder > self.tail_tolerance)
            .then(|| format!("Duhamel remainder mass {remainder:.3e} exceeds {:.1e}; raise j_max", self.tail_tolerance));
        let mut density = f0.clone();
        density.values = total;
        Ok(DuhamelSolution { density, level_masses, remainder, warning })
    }
}

/// One-shot Duhamel solve, building the gain matrix for the grid of `f0`.
pub fn duhamel_solve(f0: &KineticDensity, g0: &BackgroundLaw, t: f64, j_max: usize) -> Result<DuhamelSolution> {
    if f0.mode != DensityMode::VelocityOnly {
        return Err(Error::Unsupported("the Duhamel solver works on velocity-only densities".into()));
    }
    DuhamelSolver::new(DiscreteGain::build(f0.grid, g0)?).solve(f0, t, j_max)
}
