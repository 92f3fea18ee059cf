use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single evaluation point whose derivatives come from central differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointChart {
    pub point: Vec<f64>,
    pub step: f64,
}

/// A periodic lattice on the flat torus `∏ [0, L_a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridChart {
    pub points_per_axis: usize,
    pub lengths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Chart {
    Point(PointChart),
    Grid(GridChart),
}

pub const DEFAULT_POINT_STEP: f64 = 1e-2;

impl Chart {
    pub fn point(point: Vec<f64>, step: f64) -> Result<Self> {
        let chart = Chart::Point(PointChart { point, step });
        chart.validate()?;
        Ok(chart)
    }

    pub fn grid(dim: usize, points_per_axis: usize, length: f64) -> Result<Self> {
        let chart = Chart::Grid(GridChart {
            points_per_axis,
            lengths: vec![length; dim],
        });
        chart.validate()?;
        Ok(chart)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() < 2 {
            return Err(Error::InvalidChart(format!(
                "dimension must be at least 2, got {}",
                self.dim()
            )));
        }
        match self {
            Chart::Point(p) => {
                if !(p.step > 0.0) || !p.step.is_finite() {
                    return Err(Error::InvalidChart(format!("step must be positive, got {}", p.step)));
                }
                if p.point.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidChart("point has non-finite coordinates".into()));
                }
            }
            Chart::Grid(g) => {
                if g.points_per_axis < 8 {
                    return Err(Error::InvalidChart(format!(
                        "grid needs at least 8 points per axis, got {}",
                        g.points_per_axis
                    )));
                }
                if g.lengths.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
                    return Err(Error::InvalidChart("axis lengths must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Chart::Point(p) => p.point.len(),
            Chart::Grid(g) => g.lengths.len(),
        }
    }

    /// Number of sample points.
    pub fn len(&self) -> usize {
        match self {
            Chart::Point(_) => 1,
            Chart::Grid(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coords(&self, sample: usize) -> Vec<f64> {
        match self {
            Chart::Point(p) => p.point.clone(),
            Chart::Grid(g) => g.coords(sample),
        }
    }

    /// Characteristic differentiation step: `h` for points, the largest spacing for grids.
    pub fn step(&self) -> f64 {
        match self {
            Chart::Point(p) => p.step,
            Chart::Grid(g) => (0..g.lengths.len()).map(|a| g.spacing(a)).fold(0.0, f64::max),
        }
    }
}

impl GridChart {
    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.points_per_axis as f64
    }

    /// Multi-index of a sample; axis 0 varies fastest.
    pub fn multi_index(&self, mut sample: usize) -> Vec<usize> {
        let np = self.points_per_axis;
        (0..self.dim())
            .map(|_| {
                let i = sample % np;
                sample /= np;
                i
            })
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .rev()
            .fold(0, |acc, &i| acc * self.points_per_axis + i)
    }

    pub fn coords(&self, sample: usize) -> Vec<f64> {
        self.multi_index(sample)
            .iter()
            .enumerate()
            .map(|(a, &i)| i as f64 * self.spacing(a))
            .collect()
    }

    /// Periodic neighbour of `sample` shifted by `offset` along `axis`.
    pub fn shift(&self, sample: usize, axis: usize, offset: isize) -> usize {
        let np = self.points_per_axis as isize;
        let stride = self.points_per_axis.pow(axis as u32);
        let i = ((sample / stride) % self.points_per_axis) as isize;
        let j = (i + offset).rem_euclid(np);
        (sample as isize + (j - i) * stride as isize) as usize
    }
}
