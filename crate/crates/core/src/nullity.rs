//! Flat symmetric bilinear forms, the constructive kernel lower bound, and
//! the stratification of the disk by relative-nullity index.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{self, gauss_residual_slices};
use crate::grid::DomainGrid;
use crate::immersion::ImmersionSpec;
use crate::tol;

/// Symmetric bilinear map `beta: V x V -> U` stored as one m x m slice per
/// U-coordinate, with the Euclidean inner product on U.
#[derive(Debug, Clone)]
pub struct FlatForm {
    dim_v: usize,
    dim_u: usize,
    slices: Vec<DMatrix<f64>>,
}

impl FlatForm {
    /// Build from slices, requiring each slice to be exactly symmetric.
    pub fn new(slices: Vec<DMatrix<f64>>) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::Validation("a form needs at least one slice".into()));
        }
        let m = slices[0].nrows();
        for (a, s) in slices.iter().enumerate() {
            if s.nrows() != m || s.ncols() != m {
                return Err(Error::Validation(format!(
                    "slice {a} is {}x{}, expected {m}x{m}",
                    s.nrows(),
                    s.ncols()
                )));
            }
            for j in 0..m {
                for k in (j + 1)..m {
                    if s[(j, k)] != s[(k, j)] {
                        return Err(Error::Validation(format!(
                            "slice {a} is asymmetric at ({j},{k})"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            dim_v: m,
            dim_u: slices.len(),
            slices,
        })
    }

    /// Build from a second fundamental form (symmetric by construction).
    pub fn from_second_form(form: &geometry::SecondForm) -> Self {
        Self {
            dim_v: form.dim(),
            dim_u: form.codim(),
            slices: form.components().to_vec(),
        }
    }

    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    pub fn dim_u(&self) -> usize {
        self.dim_u
    }

    pub fn slices(&self) -> &[DMatrix<f64>] {
        &self.slices
    }

    /// beta(x, y) as a U-vector.
    pub fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.dim_u, self.slices.iter().map(|s| (x.transpose() * s * y)[0]))
    }

    /// Largest |beta(e_j, v)| over the coordinate basis: the kernel
    /// membership residual of `v`.
    pub fn kernel_residual(&self, v: &DVector<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.dim_v {
            let mut sq = 0.0;
            for s in &self.slices {
                let mut acc = 0.0;
                for k in 0..self.dim_v {
                    acc += s[(j, k)] * v[k];
                }
                sq += acc * acc;
            }
            worst = worst.max(sq.sqrt());
        }
        worst
    }

    /// Largest absolute entry across slices.
    pub fn max_component(&self) -> f64 {
        self.slices
            .iter()
            .flat_map(|s| s.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// Re-express the form after an orthogonal change of basis Q on V:
    /// slices become `Q^T K Q`.
    pub fn reparametrized(&self, q: &DMatrix<f64>) -> FlatForm {
        let slices = self
            .slices
            .iter()
            .map(|s| {
                let t = q.transpose() * s * q;
                // symmetrize exactly; Q^T K Q of a symmetric K is symmetric
                // up to rounding only
                let m = t.nrows();
                let mut sym = DMatrix::zeros(m, m);
                for j in 0..m {
                    for k in j..m {
                        let v = 0.5 * (t[(j, k)] + t[(k, j)]);
                        sym[(j, k)] = v;
                        sym[(k, j)] = v;
                    }
                }
                sym
            })
            .collect();
        FlatForm {
            dim_v: self.dim_v,
            dim_u: self.dim_u,
            slices,
        }
    }
}

/// Flatness verdict: largest 4-tuple residual of
/// `<beta(X,W), beta(Y,Z)> - <beta(X,Z), beta(Y,W)>` against a tolerance.
pub fn is_flat(form: &FlatForm, tolerance: f64) -> (bool, f64) {
    let residual = gauss_residual_slices(form.slices());
    (residual <= tolerance, residual)
}

/// A certified null vector: `beta(. , vector)` vanishes up to `residual`.
#[derive(Debug, Clone)]
pub struct NullVector {
    pub vector: DVector<f64>,
    pub residual: f64,
}

/// Right singular directions of a stacked matrix, sorted by descending
/// singular value.
fn sorted_right_singular(stacked: &DMatrix<f64>) -> Vec<(f64, DVector<f64>)> {
    let svd = stacked.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut pairs: Vec<(f64, DVector<f64>)> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, v_t.row(i).transpose()))
        .collect();
    // some of the m right-singular directions may be absent when the
    // stacked matrix has fewer rows than columns; complete the basis
    let m = stacked.ncols();
    if pairs.len() < m {
        let mut basis: Vec<DVector<f64>> = pairs.iter().map(|(_, v)| v.clone()).collect();
        for i in 0..m {
            let mut v = DVector::zeros(m);
            v[i] = 1.0;
            for b in &basis {
                let c = b.dot(&v);
                v -= b * c;
            }
            if v.norm() > 1e-8 {
                let v = v.normalize();
                basis.push(v.clone());
                pairs.push((0.0, v));
                if pairs.len() == m {
                    break;
                }
            }
        }
    }
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite singular values"));
    pairs
}

/// Constructive null vector of a flat symmetric form with `dim V > dim U`.
///
/// Builds vectors `p_1, ..., p_{m+1}` that are pairwise beta-orthogonal: at
/// each step set `v = sum p_i`, solve the k x m system `beta(q, v) = 0` for a
/// unit `q`, and certify `<beta(q,q), beta(p_i,p_i)> = |beta(q,p_i)|^2 >= 0`
/// with `sum_i <beta(q,q), beta(p_i,p_i)> = 0` — both forced by flatness, so
/// a violation reports the input as not flat. The m+1 vectors are linearly
/// dependent; a coefficient `r_n != 0` in the dependency gives
/// `beta(p_n, p_n) = 0`, and positivity then forces `beta(., p_n) = 0`.
pub fn cartan_null_vector(form: &FlatForm) -> Result<NullVector> {
    let m = form.dim_v();
    let k = form.dim_u();
    if m <= k {
        return Err(Error::Precondition(format!(
            "null vector requires dim V > dim U, got dim V = {m}, dim U = {k}"
        )));
    }
    let scale = form.max_component().max(1.0);
    let cert_tol = 1e-9 * scale * scale;

    let mut ps: Vec<DVector<f64>> = Vec::with_capacity(m + 1);
    let mut p1 = DVector::zeros(m);
    p1[0] = 1.0;
    ps.push(p1);

    while ps.len() < m + 1 {
        let v: DVector<f64> = ps.iter().fold(DVector::zeros(m), |acc, p| acc + p);
        // beta(q, v) = 0 is k linear equations in m unknowns.
        let mut system = DMatrix::zeros(k, m);
        for (a, s) in form.slices().iter().enumerate() {
            let row = s * &v;
            for j in 0..m {
                system[(a, j)] = row[j];
            }
        }
        let q = sorted_right_singular(&system)
            .pop()
            .expect("m >= 1 singular directions")
            .1;

        // Certification: flatness makes every term of
        // sum_i <beta(q,q), beta(p_i,p_i)> a non-negative quantity summing
        // to zero.
        let bqq = form.apply(&q, &q);
        let mut total = 0.0;
        for p in &ps {
            let t = bqq.dot(&form.apply(p, p));
            if t < -cert_tol {
                return Err(Error::Certification(format!(
                    "negative product <beta(q,q), beta(p,p)> = {t:.3e}; the form is not flat"
                )));
            }
            total += t;
        }
        if total.abs() > cert_tol * (m as f64) {
            return Err(Error::Certification(format!(
                "<beta(q,q), beta(v,v)> = {total:.3e} does not vanish; the form is not flat"
            )));
        }
        ps.push(q);
    }

    // The m+1 vectors are dependent: take the smallest singular direction of
    // the m x (m+1) matrix of columns and pick its largest coefficient.
    let cols = DMatrix::from_fn(m, m + 1, |r, c| ps[c][r]);
    let dependency = sorted_right_singular(&cols)
        .pop()
        .expect("nontrivial dependency")
        .1;
    let n = dependency
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).expect("finite"))
        .map(|(i, _)| i)
        .expect("nonempty");
    let p = ps[n].normalize();
    let residual = form.kernel_residual(&p);
    Ok(NullVector { vector: p, residual })
}

/// Orthonormal kernel basis and nullity index of a form, by a relative
/// singular-value threshold on the stacked `(k m) x m` matrix.
#[derive(Debug, Clone)]
pub struct KernelSubspace {
    /// m x nu matrix whose columns span the kernel.
    pub basis: DMatrix<f64>,
    pub nu: usize,
    /// Ratio of the smallest retained (nonzero-side) singular value to the
    /// threshold: how decisively rank was separated. Infinite when the whole
    /// space is kernel.
    pub spectral_gap: f64,
    pub threshold: f64,
}

pub fn kernel_basis(form: &FlatForm, tau: f64) -> KernelSubspace {
    let m = form.dim_v();
    let k = form.dim_u();
    let mut stacked = DMatrix::zeros(k * m, m);
    for (a, s) in form.slices().iter().enumerate() {
        for j in 0..m {
            for l in 0..m {
                stacked[(a * m + j, l)] = s[(j, l)];
            }
        }
    }
    let pairs = sorted_right_singular(&stacked);
    let sigma_max = pairs.first().map_or(0.0, |(s, _)| *s);
    let threshold = tau * sigma_max.max(1.0);
    let kernel: Vec<&(f64, DVector<f64>)> =
        pairs.iter().filter(|(s, _)| *s <= threshold).collect();
    let nu = kernel.len();
    let mut basis = DMatrix::zeros(m, nu);
    for (i, (_, v)) in kernel.iter().enumerate() {
        basis.set_column(i, v);
    }
    let spectral_gap = pairs
        .iter()
        .filter(|(s, _)| *s > threshold)
        .map(|(s, _)| s / threshold)
        .fold(f64::INFINITY, f64::min);
    KernelSubspace {
        basis,
        nu,
        spectral_gap,
        threshold,
    }
}

/// Nullity data at one point: the index, its kernel, and whether the
/// underlying point certified as isometric.
#[derive(Debug, Clone)]
pub struct PointNullity {
    pub nu: usize,
    pub kernel: KernelSubspace,
    pub max_strain: f64,
    /// False when the strain exceeded the warn threshold; nu is still
    /// reported but should not be trusted.
    pub trusted: bool,
}

/// Relative-nullity index at a point: the kernel dimension of the second
/// fundamental form there.
pub fn nullity_index(spec: &ImmersionSpec, x: &DVector<f64>, tau: f64) -> Result<PointNullity> {
    let jet = spec.jet(x)?;
    let max_strain = geometry::strain_from_jet(&jet).max_abs();
    let frame = geometry::normal_frame_from_jet(&jet)?;
    let form = FlatForm::from_second_form(&geometry::second_form_from_jet(&jet, &frame)?);
    let kernel = kernel_basis(&form, tau);
    Ok(PointNullity {
        nu: kernel.nu,
        kernel,
        max_strain,
        trusted: max_strain <= tol::ISOMETRY_WARN,
    })
}

/// Per-node stratification record.
#[derive(Debug, Clone)]
pub struct NodeNullity {
    pub nu: usize,
    /// Index into `NullityField::index_sequence`.
    pub stratum: usize,
    /// Discrete-interior flag: all axis neighbors exist, are masked in,
    /// are analyzed, and carry the same nu.
    pub open_interior: bool,
    pub kernel: KernelSubspace,
    pub max_strain: f64,
}

/// Nullity index, kernel and stratum labels over a grid.
#[derive(Debug, Clone)]
pub struct NullityField {
    grid: DomainGrid,
    nodes: Vec<Option<NodeNullity>>,
    index_sequence: Vec<usize>,
    stratum_counts: Vec<usize>,
    open_coverage: f64,
    tau: f64,
}

#[derive(Serialize)]
struct NullitySummary<'a> {
    schema_version: u32,
    family: &'a str,
    m: usize,
    d: usize,
    resolution: usize,
    rank_tau: f64,
    index_sequence: &'a [usize],
    stratum_counts: &'a [usize],
    analyzed_nodes: usize,
    open_coverage: f64,
    min_spectral_gap: f64,
}

impl NullityField {
    pub fn grid(&self) -> &DomainGrid {
        &self.grid
    }

    pub fn node(&self, flat: usize) -> Option<&NodeNullity> {
        self.nodes.get(flat).and_then(|n| n.as_ref())
    }

    /// Realized nullity indices in increasing order.
    pub fn index_sequence(&self) -> &[usize] {
        &self.index_sequence
    }

    pub fn stratum_counts(&self) -> &[usize] {
        &self.stratum_counts
    }

    /// Fraction of analyzed nodes lying in the union of the discrete open
    /// strata.
    pub fn open_coverage(&self) -> f64 {
        self.open_coverage
    }

    pub fn analyzed_nodes(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_some()).count()
    }

    pub fn min_spectral_gap(&self) -> f64 {
        self.nodes
            .iter()
            .flatten()
            .map(|n| n.kernel.spectral_gap)
            .fold(f64::INFINITY, f64::min)
    }

    /// CSV rows: node coordinates, nu, stratum label, open flag, gap.
    pub fn to_csv(&self) -> String {
        let m = self.grid.dim();
        let mut out = String::new();
        for i in 0..m {
            out.push_str(&format!("x_{},", i + 1));
        }
        out.push_str("nu,stratum,open_interior,spectral_gap\n");
        for flat in 0..self.grid.node_count() {
            let Some(node) = &self.nodes[flat] else {
                continue;
            };
            let p = self.grid.point(flat);
            for v in p.iter() {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!(
                "{},{},{},{}\n",
                node.nu,
                node.stratum,
                u8::from(node.open_interior),
                node.kernel.spectral_gap
            ));
        }
        out
    }

    pub fn summary_json(&self, family: &str, d: usize) -> String {
        let summary = NullitySummary {
            schema_version: 1,
            family,
            m: self.grid.dim(),
            d,
            resolution: self.grid.resolution(),
            rank_tau: self.tau,
            index_sequence: &self.index_sequence,
            stratum_counts: &self.stratum_counts,
            analyzed_nodes: self.analyzed_nodes(),
            open_coverage: self.open_coverage,
            min_spectral_gap: self.min_spectral_gap(),
        };
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    }
}

/// Compute nu at every analyzable node, label strata by the realized index
/// sequence, and mark the discrete interior of each stratum.
pub fn stratify(spec: &ImmersionSpec, grid: &DomainGrid, tau: f64) -> Result<NullityField> {
    if grid.dim() != spec.domain_dim() {
        return Err(Error::Validation(format!(
            "grid dimension {} does not match the immersion ({})",
            grid.dim(),
            spec.domain_dim()
        )));
    }
    let analyzable: Vec<usize> = grid
        .masked_indices()
        .into_iter()
        .filter(|&flat| !spec.excluded(&grid.point(flat)))
        .collect();

    // Difference stencils may not fit near the rim; such nodes simply stay
    // unanalyzed.
    let computed: Vec<(usize, Option<PointNullity>)> = analyzable
        .par_iter()
        .map(|&flat| match nullity_index(spec, &grid.point(flat), tau) {
            Ok(pn) => Ok((flat, Some(pn))),
            Err(Error::Margin { .. }) => Ok((flat, None)),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;

    let mut per_node: Vec<Option<PointNullity>> = vec![None; grid.node_count()];
    for (flat, pn) in computed {
        per_node[flat] = pn;
    }

    let mut index_sequence: Vec<usize> = per_node
        .iter()
        .flatten()
        .map(|pn| pn.nu)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    index_sequence.sort_unstable();

    let stratum_of = |nu: usize| index_sequence.binary_search(&nu).expect("realized index");

    let nus: Vec<Option<usize>> = per_node
        .iter()
        .map(|p| p.as_ref().map(|pn| pn.nu))
        .collect();

    let mut nodes: Vec<Option<NodeNullity>> = vec![None; grid.node_count()];
    let mut stratum_counts = vec![0usize; index_sequence.len()];
    let mut open_count = 0usize;
    let mut analyzed = 0usize;
    for flat in 0..grid.node_count() {
        let Some(pn) = per_node[flat].take() else {
            continue;
        };
        analyzed += 1;
        let stratum = stratum_of(pn.nu);
        stratum_counts[stratum] += 1;
        // Discrete interior: every axis neighbor exists and shares the
        // stratum. A neighbor off the box, outside the mask or excluded
        // disqualifies the node, matching the open-in-R^m reading.
        let open_interior = grid
            .axis_neighbors(flat)
            .iter()
            .all(|n| n.map_or(false, |j| nus[j] == Some(pn.nu)));
        if open_interior {
            open_count += 1;
        }
        nodes[flat] = Some(NodeNullity {
            nu: pn.nu,
            stratum,
            open_interior,
            kernel: pn.kernel,
            max_strain: pn.max_strain,
        });
    }

    Ok(NullityField {
        grid: grid.clone(),
        nodes,
        index_sequence,
        stratum_counts,
        open_coverage: if analyzed == 0 {
            0.0
        } else {
            open_count as f64 / analyzed as f64
        },
        tau,
    })
}
