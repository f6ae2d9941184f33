//! Domain and image distances, span estimation, and the confinement report.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::{chain_to_boundary, ChainParams};
use crate::grid::DomainGrid;
use crate::immersion::ImmersionSpec;
use crate::nullity::NullityField;
use crate::tol;

/// Euclidean distance in the domain.
pub fn domain_distance(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    (x - y).norm()
}

/// Euclidean distance between the images.
pub fn image_distance(spec: &ImmersionSpec, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    Ok((spec.eval(x)? - spec.eval(y)?).norm())
}

/// Pair-sampling strategy for span estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpanSampler {
    /// All rim-node pairs plus center-to-every-node pairs (the extremes of
    /// the built-in families live there).
    BoundaryAndCenter { resolution: usize },
    /// Every masked node pair; O(N^2).
    FullPairwise { resolution: usize },
}

impl SpanSampler {
    fn describe(&self) -> String {
        match self {
            SpanSampler::BoundaryAndCenter { resolution } => {
                format!("boundary+center, resolution {resolution}")
            }
            SpanSampler::FullPairwise { resolution } => {
                format!("full pairwise, resolution {resolution}")
            }
        }
    }
}

/// Span estimate with the realizing pair.
#[derive(Debug, Clone)]
pub struct SpanEstimate {
    pub value: f64,
    pub pair: (DVector<f64>, DVector<f64>),
    pub pairs_evaluated: usize,
    pub sampler: String,
}

/// Largest image distance over the sampled pairs; monotone non-decreasing
/// under sample refinement.
pub fn span(spec: &ImmersionSpec, sampler: &SpanSampler) -> Result<SpanEstimate> {
    let (points, pairs): (Vec<DVector<f64>>, Vec<(usize, usize)>) = match *sampler {
        SpanSampler::BoundaryAndCenter { resolution } => {
            let grid = DomainGrid::new(spec.domain_dim(), resolution)?;
            let masked = grid.masked_indices();
            let boundary = grid.boundary_indices();
            let center = grid.center_index();
            let mut points = Vec::new();
            let mut index_of = std::collections::HashMap::new();
            let mut intern = |flat: usize, points: &mut Vec<DVector<f64>>| -> usize {
                *index_of.entry(flat).or_insert_with(|| {
                    points.push(grid.point(flat));
                    points.len() - 1
                })
            };
            let mut pairs = Vec::new();
            for i in 0..boundary.len() {
                for j in (i + 1)..boundary.len() {
                    let a = intern(boundary[i], &mut points);
                    let b = intern(boundary[j], &mut points);
                    pairs.push((a, b));
                }
            }
            let c = intern(center, &mut points);
            for &flat in &masked {
                if flat == center {
                    continue;
                }
                let a = intern(flat, &mut points);
                pairs.push((c, a));
            }
            (points, pairs)
        }
        SpanSampler::FullPairwise { resolution } => {
            let grid = DomainGrid::new(spec.domain_dim(), resolution)?;
            let masked = grid.masked_indices();
            let points: Vec<DVector<f64>> = masked.iter().map(|&f| grid.point(f)).collect();
            let mut pairs = Vec::with_capacity(points.len() * (points.len() - 1) / 2);
            for i in 0..points.len() {
                for j in (i + 1)..points.len() {
                    pairs.push((i, j));
                }
            }
            (points, pairs)
        }
    };

    let images: Vec<DVector<f64>> = points
        .par_iter()
        .map(|p| spec.eval(p))
        .collect::<Result<_>>()?;

    // deterministic parallel max: tie-break on the pair indices
    let best = pairs
        .par_iter()
        .map(|&(i, j)| ((&images[i] - &images[j]).norm(), i, j))
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX, usize::MAX),
            |a, b| {
                if (b.0, a.1, a.2) > (a.0, b.1, b.2) {
                    b
                } else {
                    a
                }
            },
        );

    if best.1 == usize::MAX {
        return Err(Error::Precondition("sampler produced no pairs".into()));
    }
    Ok(SpanEstimate {
        value: best.0,
        pair: (points[best.1].clone(), points[best.2].clone()),
        pairs_evaluated: pairs.len(),
        sampler: sampler.describe(),
    })
}

/// Boundary witness produced by chaining from the disk center.
#[derive(Debug, Clone, Serialize)]
pub struct SpanWitness {
    pub boundary_point: Vec<f64>,
    /// | r(center, q) - 1 |.
    pub witness_defect: f64,
    pub chain_segments: usize,
    pub chain_measured_defect: f64,
    pub chain_defect_bound: f64,
    pub epsilon: f64,
}

/// Everything the span/confinement verdict needs, serializable.
#[derive(Debug, Clone, Serialize)]
pub struct ConfinementReport {
    pub schema_version: u32,
    pub family: String,
    pub m: usize,
    pub d: usize,
    pub resolution: usize,
    pub isometry_max_strain: f64,
    pub isometry_certified: bool,
    /// sup of image distances over the sampled pairs.
    pub span_estimate: f64,
    /// Radius of the smallest origin-centered ball containing the sampled image.
    pub enclosing_radius: f64,
    /// True when d < 2m, the regime with a guaranteed span lower bound.
    pub span_bound_applies: bool,
    pub witness: Option<SpanWitness>,
    pub verdict: String,
}

impl ConfinementReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "family: {} (m = {}, d = {}, resolution {})\n",
            self.family, self.m, self.d, self.resolution
        ));
        out.push_str(&format!(
            "max strain: {:.3e} ({})\n",
            self.isometry_max_strain,
            if self.isometry_certified {
                "isometry certified"
            } else {
                "NOT ISOMETRIC"
            }
        ));
        out.push_str(&format!("span estimate: {:.6}\n", self.span_estimate));
        out.push_str(&format!("enclosing radius: {:.6}\n", self.enclosing_radius));
        if let Some(w) = &self.witness {
            out.push_str(&format!(
                "boundary witness: |r(center, q) - 1| = {:.3e} over {} segment(s), \
                 chain defect {:.3e} <= bound {:.3e} (epsilon {})\n",
                w.witness_defect,
                w.chain_segments,
                w.chain_measured_defect,
                w.chain_defect_bound,
                w.epsilon
            ));
        }
        out.push_str(&format!("verdict: {}\n", self.verdict));
        out
    }
}

/// Options for report generation.
#[derive(Debug, Clone)]
pub struct ReportParams {
    pub epsilon: f64,
    pub chain: ChainParams,
    pub full_pairwise: bool,
}

impl Default for ReportParams {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            chain: ChainParams::default(),
            full_pairwise: false,
        }
    }
}

/// Certify isometry over the grid, estimate span and enclosing radius, and
/// (when d < 2m) run the boundary-witness chain from the center.
pub fn confinement_report(
    spec: &ImmersionSpec,
    field: &NullityField,
    params: &ReportParams,
) -> Result<ConfinementReport> {
    let grid = field.grid();
    let resolution = grid.resolution();

    let mut max_strain: f64 = 0.0;
    for flat in grid.masked_indices() {
        if let Some(node) = field.node(flat) {
            max_strain = max_strain.max(node.max_strain);
        }
    }
    let certified = max_strain <= tol::ISOMETRY_REJECT;

    let masked = grid.masked_indices();
    let enclosing_radius = masked
        .par_iter()
        .map(|&f| spec.eval(&grid.point(f)).map(|y| y.norm()))
        .try_reduce(|| 0.0f64, |a, b| Ok(a.max(b)))?;

    let sampler = if params.full_pairwise {
        SpanSampler::FullPairwise { resolution }
    } else {
        SpanSampler::BoundaryAndCenter { resolution }
    };
    let span_est = span(spec, &sampler)?;

    let span_bound_applies = spec.ambient_dim() < 2 * spec.domain_dim();
    let (witness, verdict) = if !certified {
        (
            None,
            format!(
                "NOT ISOMETRIC: max strain {max_strain:.3e} exceeds {:.0e}; no verdict",
                tol::ISOMETRY_REJECT
            ),
        )
    } else if span_bound_applies {
        let m = spec.domain_dim();
        let center = DVector::zeros(m);
        let chain = chain_to_boundary(spec, &center, params.epsilon, field, &params.chain)?;
        let r = image_distance(spec, &center, &chain.end)?;
        let witness_defect = (r - 1.0).abs();
        let verdict = format!(
            "span lower bound regime (d = {} < 2m = {}): a center-to-boundary chord maps \
             with |r - 1| = {witness_defect:.3e}; the image cannot fit in any ball of \
             diameter < 1",
            spec.ambient_dim(),
            2 * m
        );
        (
            Some(SpanWitness {
                boundary_point: chain.end.iter().copied().collect(),
                witness_defect,
                chain_segments: chain.segments.len(),
                chain_measured_defect: chain.measured_defect,
                chain_defect_bound: chain.defect_bound,
                epsilon: params.epsilon,
            }),
            verdict,
        )
    } else {
        (
            None,
            format!(
                "confinable regime (d = {} >= 2m = {}): image enclosed in the origin ball \
                 of radius {enclosing_radius:.6}, span {:.6}",
                spec.ambient_dim(),
                2 * spec.domain_dim(),
                span_est.value
            ),
        )
    };

    Ok(ConfinementReport {
        schema_version: 1,
        family: spec.family_id().to_string(),
        m: spec.domain_dim(),
        d: spec.ambient_dim(),
        resolution,
        isometry_max_strain: max_strain,
        isometry_certified: certified,
        span_estimate: span_est.value,
        enclosing_radius,
        span_bound_applies,
        witness,
        verdict,
    })
}
