//! Densities on rectangular velocity grids, optionally times a periodic
//! spatial grid on the torus.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::laws::VelocityLaw;
use crate::quadrature::GaussRule;

/// Cube `[-v_max, v_max]^3` split into `n_bins^3` equal cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocityGrid {
    pub n_bins: usize,
    pub v_max: f64,
}

impl VelocityGrid {
    pub fn new(n_bins: usize, v_max: f64) -> Result<Self> {
        if n_bins == 0 || !(v_max > 0.0 && v_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid needs n_bins ≥ 1 and v_max > 0, got {n_bins}, {v_max}"
            )));
        }
        Ok(VelocityGrid { n_bins, v_max })
    }

    pub fn len(&self) -> usize {
        self.n_bins.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        self.n_bins == 0
    }

    pub fn width(&self) -> f64 {
        2.0 * self.v_max / self.n_bins as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.width().powi(3)
    }

    pub fn axis_centre(&self, i: usize) -> f64 {
        -self.v_max + (i as f64 + 0.5) * self.width()
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n_bins + iy) * self.n_bins + iz
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let n = self.n_bins;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    pub fn centre(&self, idx: usize) -> Vec3 {
        let [i, j, k] = self.coords(idx);
        Vec3::new(self.axis_centre(i), self.axis_centre(j), self.axis_centre(k))
    }

    fn axis_bin(&self, c: f64) -> Option<usize> {
        let x = (c + self.v_max) / self.width();
        if x >= 0.0 && x < self.n_bins as f64 {
            Some(x as usize)
        } else {
            None
        }
    }

    /// Cell containing `v`, `None` outside the cube.
    pub fn locate(&self, v: Vec3) -> Option<usize> {
        Some(self.index(self.axis_bin(v.x)?, self.axis_bin(v.y)?, self.axis_bin(v.z)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMode {
    VelocityOnly,
    PhaseSpace,
}

/// Anything that can be evaluated as a density on velocity space.
pub trait VelocityDensity: Sync {
    fn density(&self, v: Vec3) -> f64;
}

impl VelocityDensity for crate::laws::BackgroundLaw {
    fn density(&self, v: Vec3) -> f64 {
        crate::laws::BackgroundLaw::density(self, v)
    }
}

/// Cell values of a density. In phase-space mode the values are laid out as
/// `spatial cell × velocity cell`, spatial cells of side `1 / spatial_bins`.
#[derive(Clone, Debug, PartialEq)]
pub struct KineticDensity {
    pub mode: DensityMode,
    pub grid: VelocityGrid,
    pub spatial_bins: usize,
    pub values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DensityHeader {
    mode: DensityMode,
    n_bins: usize,
    v_max: f64,
    spatial_bins: usize,
    mass: f64,
}

impl KineticDensity {
    pub fn zeros(grid: VelocityGrid) -> Self {
        KineticDensity { mode: DensityMode::VelocityOnly, grid, spatial_bins: 1, values: vec![0.0; grid.len()] }
    }

    pub fn zeros_phase_space(grid: VelocityGrid, spatial_bins: usize) -> Self {
        KineticDensity {
            mode: DensityMode::PhaseSpace,
            grid,
            spatial_bins,
            values: vec![0.0; grid.len() * spatial_bins.pow(3)],
        }
    }

    /// Velocity-only density with the value of `f` at each cell centre.
    pub fn from_fn<F: Fn(Vec3) -> f64>(grid: VelocityGrid, f: F) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.centre(i))).collect();
        KineticDensity { mode: DensityMode::VelocityOnly, grid, spatial_bins: 1, values }
    }

    /// Cell averages of a velocity law. A point mass fills the cell that
    /// contains it.
    pub fn from_velocity_law(grid: VelocityGrid, law: &VelocityLaw) -> Result<Self> {
        let mut out = Self::zeros(grid);
        match law {
            VelocityLaw::PointMass { v } => {
                if let Some(i) = grid.locate(*v) {
                    out.values[i] = 1.0 / grid.cell_volume();
                }
            }
            other => {
                let radial = other.as_radial().ok_or_else(|| Error::InvalidLaw("law has no density".into()))?;
                let rule = GaussRule::legendre(4);
                let h = grid.width();
                for (i, value) in out.values.iter_mut().enumerate() {
                    let c = grid.centre(i);
                    let mut acc = 0.0;
                    for (x, wx) in rule.mapped(c.x - h / 2.0, c.x + h / 2.0) {
                        for (y, wy) in rule.mapped(c.y - h / 2.0, c.y + h / 2.0) {
                            for (z, wz) in rule.mapped(c.z - h / 2.0, c.z + h / 2.0) {
                                acc += wx * wy * wz * radial.density(Vec3::new(x, y, z));
                            }
                        }
                    }
                    *value = acc / grid.cell_volume();
                }
            }
        }
        Ok(out)
    }

    pub fn spatial_cells(&self) -> usize {
        self.spatial_bins.pow(3)
    }

    fn cell_measure(&self) -> f64 {
        self.grid.cell_volume() / self.spatial_cells() as f64
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_measure()
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.grid.len() * self.spatial_cells() {
            return Err(Error::GridMismatch("value count does not match the grid".into()));
        }
        if let Some(bad) = self.values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter(format!("density value {bad} is negative or not finite")));
        }
        let mass = self.mass();
        if mass > 1.0 + 1e-9 {
            return Err(Error::InvalidParameter(format!("density mass {mass} exceeds 1")));
        }
        Ok(())
    }

    /// Mass in each velocity cell, summed over space.
    pub fn velocity_cell_masses(&self) -> Vec<f64> {
        let nv = self.grid.len();
        let mut out = vec![0.0; nv];
        for chunk in self.values.chunks(nv) {
            for (o, v) in out.iter_mut().zip(chunk) {
                *o += v;
            }
        }
        let m = self.cell_measure();
        out.iter_mut().for_each(|o| *o *= m);
        out
    }

    /// The velocity marginal as a velocity-only density.
    pub fn velocity_marginal(&self) -> KineticDensity {
        let values = self.velocity_cell_masses().into_iter().map(|m| m / self.grid.cell_volume()).collect();
        KineticDensity { mode: DensityMode::VelocityOnly, grid: self.grid, spatial_bins: 1, values }
    }

    /// Cell masses regrouped onto a coarser `target` grid whose cell faces
    /// are also faces of this grid; mass outside the target goes to the
    /// returned overflow.
    pub fn rebin(&self, target: &VelocityGrid) -> Result<(Vec<f64>, f64)> {
        let ratio = target.width() / self.grid.width();
        let offset = (target.v_max - self.grid.v_max) / self.grid.width();
        let aligned = |x: f64| (x - x.round()).abs() < 1e-9;
        if !aligned(ratio) || ratio.round() < 1.0 || !aligned(offset) {
            return Err(Error::GridMismatch(format!(
                "cannot regroup a {}-bin grid over ±{} onto a {}-bin grid over ±{}",
                self.grid.n_bins, self.grid.v_max, target.n_bins, target.v_max
            )));
        }
        let masses = self.velocity_cell_masses();
        let mut out = vec![0.0; target.len()];
        let mut overflow = 0.0;
        for (i, m) in masses.iter().enumerate() {
            match target.locate(self.grid.centre(i)) {
                Some(j) => out[j] += m,
                None => overflow += m,
            }
        }
        Ok((out, overflow))
    }

    pub fn to_csv(&self) -> Result<String> {
        let header = DensityHeader {
            mode: self.mode,
            n_bins: self.grid.n_bins,
            v_max: self.grid.v_max,
            spatial_bins: self.spatial_bins,
            mass: self.mass(),
        };
        let mut out = format!("# {}\n", serde_json::to_string(&header)?);
        out.push_str("cell,ix,iy,iz,value\n");
        let nv = self.grid.len();
        for (k, v) in self.values.iter().enumerate() {
            let [i, j, l] = self.grid.coords(k % nv);
            writeln!(out, "{},{i},{j},{l},{v:e}", k / nv).expect("writing to a string");
        }
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header_line = lines.next().and_then(|l| l.strip_prefix("# ")).ok_or_else(|| Error::Parse("missing '# {json}' header".into()))?;
        let header: DensityHeader = serde_json::from_str(header_line)?;
        let grid = VelocityGrid::new(header.n_bins, header.v_max)?;
        let mut out = match header.mode {
            DensityMode::VelocityOnly => Self::zeros(grid),
            DensityMode::PhaseSpace => Self::zeros_phase_space(grid, header.spatial_bins),
        };
        let nv = grid.len();
        for line in lines.skip(1).filter(|l| !l.trim().is_empty()) {
            let cols: Vec<&str> = line.split(',').collect();
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{line}: {e}")));
            if cols.len() != 5 {
                return Err(Error::Parse(format!("expected 5 columns in {line:?}")));
            }
            let idx = |c: &str| parse(c).map(|x| x as usize);
            let k = idx(cols[0])? * nv + grid.index(idx(cols[1])?, idx(cols[2])?, idx(cols[3])?);
            *out.values.get_mut(k).ok_or_else(|| Error::Parse(format!("cell out of range in {line:?}")))? = parse(cols[4])?;
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_csv()?)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }

    /// Trilinear interpolation of velocity-only values between cell centres,
    /// with zero beyond the outermost centres' neighbours.
    fn interpolate(&self, v: Vec3) -> f64 {
        let n = self.grid.n_bins as isize;
        let h = self.grid.width();
        let pos = |c: f64| (c + self.grid.v_max) / h - 0.5;
        let (px, py, pz) = (pos(v.x), pos(v.y), pos(v.z));
        let lo = -1.0;
        let hi = n as f64;
        if !(px > lo && px < hi && py > lo && py < hi && pz > lo && pz < hi) {
            return 0.0;
        }
        let (ix, iy, iz) = (px.floor() as isize, py.floor() as isize, pz.floor() as isize);
        let (fx, fy, fz) = (px - ix as f64, py - iy as f64, pz - iz as f64);
        let at = |i: isize, j: isize, k: isize| -> f64 {
            if i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n {
                0.0
            } else {
                self.values[self.grid.index(i as usize, j as usize, k as usize)]
            }
        };
        let mut acc = 0.0;
        for (di, wx) in [(0, 1.0 - fx), (1, fx)] {
            for (dj, wy) in [(0, 1.0 - fy), (1, fy)] {
                for (dk, wz) in [(0, 1.0 - fz), (1, fz)] {
                    let w = wx * wy * wz;
                    if w != 0.0 {
                        acc += w * at(ix + di, iy + dj, iz + dk);
                    }
                }
            }
        }
        acc
    }
}

impl VelocityDensity for KineticDensity {
    fn density(&self, v: Vec3) -> f64 {
        match self.mode {
            DensityMode::VelocityOnly => self.interpolate(v),
            DensityMode::PhaseSpace => self.velocity_marginal().interpolate(v),
        }
    }
}
