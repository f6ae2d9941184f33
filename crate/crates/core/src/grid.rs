//! Axis-aligned sampling grid over the unit disk.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::tol;

/// Regular grid on `[-1, 1]^m` with a circular mask `|x| <= 1`.
///
/// The resolution is odd so the disk center is a node.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainGrid {
    m: usize,
    resolution: usize,
    spacing: f64,
}

impl DomainGrid {
    pub fn new(m: usize, resolution: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Construction("domain dimension must be >= 1".into()));
        }
        if resolution < 3 || resolution % 2 == 0 {
            return Err(Error::Construction(format!(
                "resolution must be odd and >= 3, got {resolution}"
            )));
        }
        Ok(Self {
            m,
            resolution,
            spacing: 2.0 / (resolution - 1) as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Grid step h = 2 / (resolution - 1).
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of box nodes, `resolution^m`.
    pub fn node_count(&self) -> usize {
        self.resolution.pow(self.m as u32)
    }

    /// Flat index of the center node (all axes at the midpoint).
    pub fn center_index(&self) -> usize {
        let mid = (self.resolution - 1) / 2;
        let mut flat = 0;
        for _ in 0..self.m {
            flat = flat * self.resolution + mid;
        }
        flat
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut idx = vec![0usize; self.m];
        let mut rest = flat;
        for axis in (0..self.m).rev() {
            idx[axis] = rest % self.resolution;
            rest /= self.resolution;
        }
        idx
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.m);
        let mut flat = 0;
        for &i in multi {
            debug_assert!(i < self.resolution);
            flat = flat * self.resolution + i;
        }
        flat
    }

    /// Coordinates of a node. Per-axis values are `-1 + i * h`.
    pub fn point(&self, flat: usize) -> DVector<f64> {
        let multi = self.multi_index(flat);
        DVector::from_iterator(self.m, multi.iter().map(|&i| -1.0 + i as f64 * self.spacing))
    }

    /// Whether the node is inside the closed disk (with rounding slack).
    pub fn masked_in(&self, flat: usize) -> bool {
        self.point(flat).norm_squared() <= (1.0 + tol::MASK_SLACK) * (1.0 + tol::MASK_SLACK)
    }

    /// Flat indices of all masked-in nodes, in row-major order.
    pub fn masked_indices(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&i| self.masked_in(i)).collect()
    }

    /// The 2m axis neighbors of a node; `None` where the box ends.
    pub fn axis_neighbors(&self, flat: usize) -> Vec<Option<usize>> {
        let multi = self.multi_index(flat);
        let mut out = Vec::with_capacity(2 * self.m);
        for axis in 0..self.m {
            for delta in [-1isize, 1] {
                let i = multi[axis] as isize + delta;
                if i < 0 || i >= self.resolution as isize {
                    out.push(None);
                } else {
                    let mut n = multi.clone();
                    n[axis] = i as usize;
                    out.push(Some(self.flat_index(&n)));
                }
            }
        }
        out
    }

    /// Masked nodes with at least one axis neighbor outside the mask (or
    /// outside the box): the discrete rim of the disk.
    pub fn boundary_indices(&self) -> Vec<usize> {
        self.masked_indices()
            .into_iter()
            .filter(|&i| {
                self.axis_neighbors(i)
                    .iter()
                    .any(|n| n.map_or(true, |j| !self.masked_in(j)))
            })
            .collect()
    }

    /// Flat index of the node nearest to an arbitrary point (clamped to the box).
    pub fn nearest_node(&self, x: &DVector<f64>) -> usize {
        let mut multi = Vec::with_capacity(self.m);
        for axis in 0..self.m {
            let raw = ((x[axis] + 1.0) / self.spacing).round();
            let clamped = raw.clamp(0.0, (self.resolution - 1) as f64);
            multi.push(clamped as usize);
        }
        self.flat_index(&multi)
    }
}
