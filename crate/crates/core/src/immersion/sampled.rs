//! Sampled immersions: node values on the disk grid with multilinear
//! interpolation between nodes.
//!
//! File format (JSON, self-describing):
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "m": 2,
//!   "d": 3,
//!   "resolution": 101,
//!   "values": [[0.1, 0.2, 0.0], null, ...]
//! }
//! ```
//!
//! `values` lists one entry per box node in row-major order over the
//! `resolution^m` grid on `[-1, 1]^m` (last axis fastest); nodes outside the
//! disk mask are `null`.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DomainGrid;

/// Node values of an immersion on the disk grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledGrid {
    grid: DomainGrid,
    d: usize,
    values: Vec<Option<DVector<f64>>>,
}

#[derive(Serialize, Deserialize)]
struct SampledGridFile {
    schema_version: u32,
    m: usize,
    d: usize,
    resolution: usize,
    values: Vec<Option<Vec<f64>>>,
}

/// Interpolation weights within 1e-9 of a node snap to the node, so node
/// queries reproduce stored values bitwise.
const NODE_SNAP: f64 = 1e-9;

impl SampledGrid {
    /// Sample any immersion at every masked-in node.
    pub fn sample(spec: &super::ImmersionSpec, resolution: usize) -> Result<Self> {
        let grid = DomainGrid::new(spec.domain_dim(), resolution)?;
        let mut values = vec![None; grid.node_count()];
        for flat in grid.masked_indices() {
            values[flat] = Some(spec.eval(&grid.point(flat))?);
        }
        Ok(Self {
            grid,
            d: spec.ambient_dim(),
            values,
        })
    }

    pub fn from_values(
        m: usize,
        d: usize,
        resolution: usize,
        values: Vec<Option<DVector<f64>>>,
    ) -> Result<Self> {
        let grid = DomainGrid::new(m, resolution)?;
        if d <= m {
            return Err(Error::Construction(format!(
                "ambient dimension must exceed domain dimension, got m={m}, d={d}"
            )));
        }
        if values.len() != grid.node_count() {
            return Err(Error::Validation(format!(
                "expected {} node entries, got {}",
                grid.node_count(),
                values.len()
            )));
        }
        for (flat, v) in values.iter().enumerate() {
            match v {
                Some(v) if v.len() != d => {
                    return Err(Error::Validation(format!(
                        "node {flat} has {} components, expected {d}",
                        v.len()
                    )));
                }
                None if grid.masked_in(flat) => {
                    return Err(Error::Validation(format!(
                        "masked-in node {flat} has no value"
                    )));
                }
                _ => {}
            }
        }
        Ok(Self { grid, d, values })
    }

    pub fn grid(&self) -> &DomainGrid {
        &self.grid
    }

    pub fn ambient_dim(&self) -> usize {
        self.d
    }

    pub fn value_at(&self, flat: usize) -> Option<&DVector<f64>> {
        self.values.get(flat).and_then(|v| v.as_ref())
    }

    /// Multilinear interpolation. All corners of the containing cell must be
    /// sampled; cells straddling the rim are outside the sampled support.
    pub fn interpolate(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let m = self.grid.dim();
        let res = self.grid.resolution();
        let h = self.grid.spacing();
        let mut base = Vec::with_capacity(m);
        let mut frac = Vec::with_capacity(m);
        for axis in 0..m {
            let pos = (x[axis] + 1.0) / h;
            let mut i0 = pos.floor();
            let mut u = pos - i0;
            if u.abs() < NODE_SNAP {
                u = 0.0;
            } else if (1.0 - u).abs() < NODE_SNAP {
                i0 += 1.0;
                u = 0.0;
            }
            if i0 < 0.0 || i0 > (res - 1) as f64 {
                return Err(Error::Domain { norm: x.norm() });
            }
            // Allow the last node itself; otherwise the cell [i0, i0+1] is used.
            if u > 0.0 && i0 as usize >= res - 1 {
                return Err(Error::Domain { norm: x.norm() });
            }
            base.push(i0 as usize);
            frac.push(u);
        }

        let mut out = DVector::zeros(self.d);
        for corner in 0..(1usize << m) {
            let mut weight = 1.0;
            let mut multi = Vec::with_capacity(m);
            for axis in 0..m {
                let up = (corner >> axis) & 1 == 1;
                let u = frac[axis];
                weight *= if up { u } else { 1.0 - u };
                multi.push(base[axis] + usize::from(up));
            }
            if weight == 0.0 {
                continue;
            }
            let flat = self.grid.flat_index(&multi);
            match &self.values[flat] {
                Some(v) => out += v * weight,
                None => {
                    return Err(Error::Domain { norm: x.norm() });
                }
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let file = SampledGridFile {
            schema_version: 1,
            m: self.grid.dim(),
            d: self.d,
            resolution: self.grid.resolution(),
            values: self
                .values
                .iter()
                .map(|v| v.as_ref().map(|v| v.iter().copied().collect()))
                .collect(),
        };
        serde_json::to_string(&file).expect("sampled grid serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SampledGridFile =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if file.schema_version != 1 {
            return Err(Error::Format(format!(
                "unsupported schema_version {}",
                file.schema_version
            )));
        }
        Self::from_values(
            file.m,
            file.d,
            file.resolution,
            file.values
                .into_iter()
                .map(|v| v.map(DVector::from_vec))
                .collect(),
        )
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::immersion::ImmersionSpec;
    use nalgebra::dvector;

    #[test]
    fn node_roundtrip_is_exact() {
        let spec = ImmersionSpec::cylinder(0.3, 0.4).unwrap();
        let samples = SampledGrid::sample(&spec, 41).unwrap();
        let wrapped = ImmersionSpec::from_samples(samples.clone());
        for flat in samples.grid().masked_indices() {
            let x = samples.grid().point(flat);
            let direct = samples.value_at(flat).unwrap();
            let interp = wrapped.eval(&x).unwrap();
            assert_eq!(&interp, direct, "node {flat} not reproduced bitwise");
        }
    }

    #[test]
    fn sampled_jacobian_second_order() {
        let spec = ImmersionSpec::cylinder(0.3, 0.0).unwrap();
        let x = dvector![0.2, 0.1];
        let exact = spec.jet(&x).unwrap();
        let mut errs = Vec::new();
        for res in [51usize, 101, 201] {
            let wrapped = ImmersionSpec::from_samples(SampledGrid::sample(&spec, res).unwrap());
            let jet = wrapped.jet(&x).unwrap();
            errs.push((&jet.jacobian - &exact.jacobian).norm());
        }
        let slope = (errs[0] / errs[2]).log2() / 2.0;
        assert!(slope >= 1.9, "jacobian convergence slope {slope:.2}, errs {errs:?}");
    }

    #[test]
    fn json_roundtrip() {
        let spec = ImmersionSpec::plane(2, 3).unwrap();
        let samples = SampledGrid::sample(&spec, 21).unwrap();
        let back = SampledGrid::from_json(&samples.to_json()).unwrap();
        assert_eq!(samples, back);
    }

    #[test]
    fn malformed_json_rejected() {
        assert!(SampledGrid::from_json("{\"schema_version\": 9}").is_err());
        assert!(SampledGrid::from_json("not json").is_err());
    }

    #[test]
    fn off_support_interpolation_rejected() {
        let spec = ImmersionSpec::plane(2, 3).unwrap();
        let samples = SampledGrid::sample(&spec, 21).unwrap();
        // A point in a rim cell with unmasked corners.
        let err = samples.interpolate(&dvector![0.9999, 0.04]);
        assert!(err.is_err() || err.unwrap().len() == 3);
    }
}
