//! Velocity histograms and total-variation distances between them.
//!
//! A histogram has one category per velocity cell plus an overflow category
//! for velocities outside the grid and an absorbed category for particles
//! removed by a loss-only run. TV is taken over all categories.

use std::fmt::Write as _;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::solver::density::{KineticDensity, VelocityGrid};

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub grid: VelocityGrid,
    pub weights: Vec<f64>,
    pub overflow: f64,
    pub absorbed: f64,
    /// Number of samples behind the weights, 0 for a histogram of a density.
    pub samples: u64,
}

#[derive(Serialize, Deserialize)]
struct HistogramHeader {
    n_bins: usize,
    v_max: f64,
    samples: u64,
    overflow: f64,
    absorbed: f64,
}

impl Histogram {
    pub fn new(grid: VelocityGrid) -> Self {
        Histogram { grid, weights: vec![0.0; grid.len()], overflow: 0.0, absorbed: 0.0, samples: 0 }
    }

    pub fn add(&mut self, v: Vec3) {
        match self.grid.locate(v) {
            Some(i) => self.weights[i] += 1.0,
            None => self.overflow += 1.0,
        }
        self.samples += 1;
    }

    pub fn add_absorbed(&mut self) {
        self.absorbed += 1.0;
        self.samples += 1;
    }

    pub fn from_velocities<I: IntoIterator<Item = Vec3>>(grid: VelocityGrid, velocities: I) -> Self {
        let mut h = Histogram::new(grid);
        for v in velocities {
            h.add(v);
        }
        h
    }

    /// Cell masses of `f` on `grid`; mass missing from `total` is booked as absorbed.
    pub fn from_density(f: &KineticDensity, grid: &VelocityGrid, total: f64) -> Result<Self> {
        let (weights, overflow) = f.rebin(grid)?;
        let inside: f64 = weights.iter().sum::<f64>() + overflow;
        Ok(Histogram { grid: *grid, weights, overflow, absorbed: (total - inside).max(0.0), samples: 0 })
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum::<f64>() + self.overflow + self.absorbed
    }

    /// Probabilities of all categories: cells, then overflow, then absorbed.
    pub fn probabilities(&self) -> Result<Vec<f64>> {
        let total = self.total();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("histogram is empty".into()));
        }
        let mut p: Vec<f64> = self.weights.iter().map(|w| w / total).collect();
        p.push(self.overflow / total);
        p.push(self.absorbed / total);
        Ok(p)
    }

    /// Header line `# {json}` followed by `ix,iy,iz,weight` for non-empty cells.
    pub fn to_text(&self) -> Result<String> {
        let header = HistogramHeader {
            n_bins: self.grid.n_bins,
            v_max: self.grid.v_max,
            samples: self.samples,
            overflow: self.overflow,
            absorbed: self.absorbed,
        };
        let mut out = format!("# {}\nix,iy,iz,weight\n", serde_json::to_string(&header)?);
        for (i, w) in self.weights.iter().enumerate() {
            if *w != 0.0 {
                let [x, y, z] = self.grid.coords(i);
                writeln!(out, "{x},{y},{z},{w}").expect("writing to a String");
            }
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .and_then(|l| l.strip_prefix("# "))
            .ok_or_else(|| Error::Parse("histogram must start with a '# {json}' header".into()))?;
        let header: HistogramHeader = serde_json::from_str(header)?;
        let grid = VelocityGrid::new(header.n_bins, header.v_max)?;
        let mut h = Histogram::new(grid);
        h.overflow = header.overflow;
        h.absorbed = header.absorbed;
        h.samples = header.samples;
        for (k, line) in lines.enumerate() {
            if k == 0 && line.starts_with("ix") || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::Parse(format!("bad histogram row '{line}'")));
            }
            let idx = |s: &str| s.trim().parse::<usize>().map_err(|e| Error::Parse(format!("{e} in '{line}'")));
            let (x, y, z) = (idx(fields[0])?, idx(fields[1])?, idx(fields[2])?);
            if x >= grid.n_bins || y >= grid.n_bins || z >= grid.n_bins {
                return Err(Error::Parse(format!("cell out of range in '{line}'")));
            }
            let w: f64 = fields[3].trim().parse().map_err(|e| Error::Parse(format!("{e} in '{line}'")))?;
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Parse(format!("negative or non-finite weight in '{line}'")));
            }
            h.weights[grid.index(x, y, z)] = w;
        }
        Ok(h)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_text()?)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    /// Multinomial resample with the same sample count.
    fn resample<R: Rng + ?Sized>(&self, sampler: &WeightedIndex<f64>, rng: &mut R) -> Vec<f64> {
        let mut counts = vec![0.0; self.grid.len() + 2];
        for _ in 0..self.samples {
            counts[sampler.sample(rng)] += 1.0;
        }
        counts
    }
}

fn tv_of(a: &[f64], b: &[f64]) -> f64 {
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    0.5 * a.iter().zip(b).map(|(x, y)| (x / sa - y / sb).abs()).sum::<f64>()
}

/// `½ Σ |a - b|` over all categories of two normalized histograms.
pub fn estimate_tv(a: &Histogram, b: &Histogram) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch(format!(
            "{} bins over ±{} vs {} bins over ±{}",
            a.grid.n_bins, a.grid.v_max, b.grid.n_bins, b.grid.v_max
        )));
    }
    Ok(tv_of(&a.probabilities()?, &b.probabilities()?).min(1.0))
}

/// Bootstrap standard deviation of the TV estimate. Sample histograms are
/// resampled multinomially; density histograms are held fixed.
pub fn bootstrap_tv<R: Rng + ?Sized>(a: &Histogram, b: &Histogram, resamples: usize, rng: &mut R) -> Result<f64> {
    estimate_tv(a, b)?;
    if resamples < 2 {
        return Err(Error::InvalidParameter("bootstrap needs at least two resamples".into()));
    }
    let sampler = |h: &Histogram| -> Result<Option<WeightedIndex<f64>>> {
        if h.samples == 0 {
            return Ok(None);
        }
        WeightedIndex::new(h.probabilities()?).map(Some).map_err(|e| Error::InvalidParameter(e.to_string()))
    };
    let (sa, sb) = (sampler(a)?, sampler(b)?);
    let fixed = |h: &Histogram| -> Result<Vec<f64>> { h.probabilities() };
    let (pa, pb) = (fixed(a)?, fixed(b)?);
    let values: Vec<f64> = (0..resamples)
        .map(|_| {
            let ra = sa.as_ref().map_or_else(|| pa.clone(), |s| a.resample(s, rng));
            let rb = sb.as_ref().map_or_else(|| pb.clone(), |s| b.resample(s, rng));
            tv_of(&ra, &rb)
        })
        .collect();
    let mean = values.iter().sum::<f64>() / resamples as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    Ok(var.sqrt())
}
