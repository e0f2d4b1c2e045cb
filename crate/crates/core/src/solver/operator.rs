//! The gain operator as a matrix on a velocity grid.
//!
//! Entry `K[i][j]` is the integral of the Carleman kernel `k(c_i, ·)` over
//! cell `j`. Rows are stored only for cells with `ix ≤ iy ≤ iz` in the upper
//! half of the grid; every other row is the image of one of those under
//! a signed axis permutation. Columns are rescaled so that `Σ_i K[i][j]`
//! equals `λ(c_j)`, which makes the discrete gain and loss balance in mass.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::laws::BackgroundLaw;
use crate::quadrature::GaussRule;
use crate::solver::density::VelocityGrid;
use crate::solver::rates::{loss_rate, UniformTable};

const PLANE_TABLE_POINTS: usize = 8001;

/// Signed axis permutation acting on grid indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Transform {
    perm: [usize; 3],
    flip: [bool; 3],
}

impl Transform {
    fn apply(&self, c: [usize; 3], n: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for a in 0..3 {
            let v = c[self.perm[a]];
            out[a] = if self.flip[a] { n - 1 - v } else { v };
        }
        out
    }
}

/// Representative coordinates of `c` and the transform carrying them back to `c`.
fn fold(c: [usize; 3], n: usize) -> ([usize; 3], Transform) {
    let folded = c.map(|v| v.max(n - 1 - v));
    let flip = [0, 1, 2].map(|a| folded[a] != c[a]);
    let mut order = [0usize, 1, 2];
    order.sort_by_key(|&a| folded[a]);
    let rep = order.map(|a| folded[a]);
    // folded[a] = rep[perm[a]]
    let mut perm = [0; 3];
    for (pos, &a) in order.iter().enumerate() {
        perm[a] = pos;
    }
    (rep, Transform { perm, flip })
}

/// Plane integral of `g0` tabulated in the distance to the origin.
struct PlaneTable(UniformTable);

impl PlaneTable {
    fn new(g0: &BackgroundLaw, upper: f64) -> Result<Self> {
        Ok(PlaneTable(UniformTable::tabulate(upper, PLANE_TABLE_POINTS, |d| Ok(g0.plane_integral(d)))?))
    }

    fn at(&self, d: f64) -> f64 {
        self.0.eval(d).unwrap_or(0.0).max(0.0)
    }

    fn kernel(&self, v: Vec3, v_star: Vec3) -> f64 {
        let diff = v - v_star;
        let r = diff.norm();
        self.at(v.dot(diff).abs() / r) / r
    }
}

/// Integral of `k(c, ·)` over the cube of half-width `half` centred at `c`,
/// written as a sum over its six faces: on the face through `p`, the radial
/// integral is `|p|^2 / 2` and the solid angle element is `half |p|^-3 dA`.
fn diagonal_entry(plane: &PlaneTable, c: Vec3, half: f64, face: &GaussRule) -> f64 {
    let mut acc = 0.0;
    for axis in 0..3 {
        for sign in [-1.0, 1.0] {
            for (a, wa) in face.mapped(-half, half) {
                for (b, wb) in face.mapped(-half, half) {
                    let p = match axis {
                        0 => Vec3::new(sign * half, a, b),
                        1 => Vec3::new(a, sign * half, b),
                        _ => Vec3::new(a, b, sign * half),
                    };
                    let r = p.norm();
                    let d = c.dot(p).abs() / r;
                    acc += wa * wb * plane.at(d) * 0.5 * half / r;
                }
            }
        }
    }
    acc
}

/// Tensor Gauss rule over the cube centred at `centre`, split into `sub^3` subcubes.
fn cell_entry(plane: &PlaneTable, c: Vec3, centre: Vec3, h: f64, sub: usize, rule: &GaussRule) -> f64 {
    let step = h / sub as f64;
    let lo = centre - Vec3::new(0.5 * h, 0.5 * h, 0.5 * h);
    let mut acc = 0.0;
    for i in 0..sub {
        for j in 0..sub {
            for k in 0..sub {
                let o = lo + Vec3::new(i as f64 * step, j as f64 * step, k as f64 * step);
                for (x, wx) in rule.mapped(o.x, o.x + step) {
                    for (y, wy) in rule.mapped(o.y, o.y + step) {
                        for (z, wz) in rule.mapped(o.z, o.z + step) {
                            acc += wx * wy * wz * plane.kernel(c, Vec3::new(x, y, z));
                        }
                    }
                }
            }
        }
    }
    acc
}

/// Gain matrix with rows compressed by the symmetries of the cube.
#[derive(Clone, Debug)]
pub struct DiscreteGain {
    grid: VelocityGrid,
    rows: Vec<Vec<f64>>,
    /// For each output cell, its representative row and transform slot.
    outputs: Vec<(u32, u8)>,
    transforms: Vec<Transform>,
    /// `gather[t][j']` is the flat index of `T j'` for transform slot `t`.
    gather: Vec<Vec<u32>>,
    rates: Vec<f64>,
}

impl DiscreteGain {
    pub fn build(grid: VelocityGrid, g0: &BackgroundLaw) -> Result<Self> {
        g0.validate()?;
        let n = grid.n_bins;
        let h = grid.width();
        let reach = 2.0 * 3f64.sqrt() * (grid.v_max + h);
        let plane = PlaneTable::new(g0, reach.min(g0.support_radius()).max(h))?;

        let mut reps: Vec<[usize; 3]> = Vec::new();
        for iz in n / 2..n {
            for iy in n / 2..=iz {
                for ix in n / 2..=iy {
                    reps.push([ix, iy, iz]);
                }
            }
        }
        let rep_slot = |c: [usize; 3]| reps.binary_search_by_key(&(c[2], c[1], c[0]), |r| (r[2], r[1], r[0]));

        let mut transforms: Vec<Transform> = Vec::new();
        let mut outputs = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let (rep, t) = fold(grid.coords(i), n);
            let slot = rep_slot(rep).map_err(|_| Error::InvalidParameter("grid symmetry folding failed".into()))?;
            let ti = match transforms.iter().position(|&u| u == t) {
                Some(p) => p,
                None => {
                    transforms.push(t);
                    transforms.len() - 1
                }
            };
            outputs.push((slot as u32, ti as u8));
        }

        let rates: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|j| loss_rate(grid.centre(j), g0))
            .collect::<Result<_>>()?;

        let face = GaussRule::legendre(10);
        let near = GaussRule::legendre(3);
        let far = GaussRule::legendre(3);
        let mut rows: Vec<Vec<f64>> = reps
            .par_iter()
            .map(|&rc| {
                let i = grid.index(rc[0], rc[1], rc[2]);
                let c = grid.centre(i);
                (0..grid.len())
                    .map(|j| {
                        let jc = grid.coords(j);
                        let dist = (0..3).map(|a| rc[a].abs_diff(jc[a])).max().unwrap_or(0);
                        match dist {
                            0 => diagonal_entry(&plane, c, 0.5 * h, &face),
                            1 => cell_entry(&plane, c, grid.centre(j), h, 4, &near),
                            _ => cell_entry(&plane, c, grid.centre(j), h, 1, &far),
                        }
                    })
                    .collect()
            })
            .collect();

        // column sums of the full matrix, then rescale to λ
        let mut sums = vec![0.0; grid.len()];
        for &(slot, ti) in &outputs {
            let t = transforms[ti as usize];
            let row = &rows[slot as usize];
            for (jp, &k) in row.iter().enumerate() {
                let [x, y, z] = t.apply(grid.coords(jp), n);
                sums[grid.index(x, y, z)] += k;
            }
        }
        for row in rows.iter_mut() {
            for (j, k) in row.iter_mut().enumerate() {
                if sums[j] > 0.0 {
                    *k *= rates[j] / sums[j];
                }
            }
        }
        let gather = transforms
            .iter()
            .map(|t| {
                (0..grid.len())
                    .map(|jp| {
                        let [x, y, z] = t.apply(grid.coords(jp), n);
                        grid.index(x, y, z) as u32
                    })
                    .collect()
            })
            .collect();
        Ok(DiscreteGain { grid, rows, outputs, transforms, gather, rates })
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    /// `λ` at the cell centres.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Number of stored rows.
    pub fn stored_rows(&self) -> usize {
        self.rows.len()
    }

    /// Gain at every cell centre for cell values `f`.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.apply_batch(f, 1)
    }

    /// Gain applied to `width` densities at once. Values are cell-major:
    /// `f[j * width + k]` is cell `j` of density `k`, and so is the output.
    pub fn apply_batch(&self, f: &[f64], width: usize) -> Result<Vec<f64>> {
        if width == 0 || f.len() != self.grid.len() * width {
            return Err(Error::GridMismatch(format!(
                "{} values for {} cells of width {width}",
                f.len(),
                self.grid.len()
            )));
        }
        let mut out = vec![0.0; f.len()];
        out.par_chunks_mut(width).zip(self.outputs.par_iter()).for_each(|(acc, &(slot, ti))| {
            let row = &self.rows[slot as usize];
            let gather = &self.gather[ti as usize];
            for (&k, &src) in row.iter().zip(gather) {
                let base = src as usize * width;
                for (a, v) in acc.iter_mut().zip(&f[base..base + width]) {
                    *a += k * v;
                }
            }
        });
        Ok(out)
    }

    /// Entry `K[i][j]` of the uncompressed matrix.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (slot, ti) = self.outputs[i];
        let t = self.transforms[ti as usize];
        // K[T r][j] = K[r][T⁻¹ j]; search the preimage of j under T
        let n = self.grid.n_bins;
        let jc = self.grid.coords(j);
        let mut pre = [0; 3];
        for a in 0..3 {
            let v = if t.flip[a] { n - 1 - jc[a] } else { jc[a] };
            pre[t.perm[a]] = v;
        }
        self.rows[slot as usize][self.grid.index(pre[0], pre[1], pre[2])]
    }
}
