//! Straight segments in leaves of the relative-nullity distribution, and the
//! epsilon-jump chaining that extends them to the disk boundary.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry;
use crate::immersion::ImmersionSpec;
use crate::nullity::{self, FlatForm, NullityField};
use crate::tol;

/// Why a trace stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Reached the disk boundary with a certified final point.
    Boundary,
    /// The direction left the nullity kernel.
    NullityDrop,
    /// The image stopped being straight within tolerance.
    StraightnessLoss,
    /// Entered a region excluded from analysis (cone apex disk).
    ExcludedRegion,
}

/// A traced straight segment lying in a leaf: straight in the domain by
/// construction, certified straight in the image.
#[derive(Debug, Clone)]
pub struct GeneratorSegment {
    pub start: DVector<f64>,
    pub end: DVector<f64>,
    /// Unit direction in the kernel at `start`.
    pub direction: DVector<f64>,
    /// Domain length d(start, end).
    pub length: f64,
    /// Image length r(start, end).
    pub image_length: f64,
    /// Max deviation of sampled image points from the image chord.
    pub straightness_residual: f64,
    /// Max kernel-membership residual of the direction along the samples.
    pub kernel_residual_max: f64,
    /// Largest |K^a_{jk}| seen along the samples.
    pub curvature_max: f64,
    /// Nullity index at the segment start.
    pub nu: usize,
    pub termination: Termination,
    /// Domain sample points (including both endpoints).
    pub samples: Vec<DVector<f64>>,
}

impl GeneratorSegment {
    /// |d - r| of the endpoints.
    pub fn length_defect(&self) -> f64 {
        (self.length - self.image_length).abs()
    }

    /// Unit direction of the image chord.
    pub fn image_direction(&self, spec: &ImmersionSpec) -> Result<DVector<f64>> {
        let a = spec.eval(&self.start)?;
        let b = spec.eval(&self.end)?;
        let v = b - a;
        let n = v.norm();
        if n == 0.0 {
            return Err(Error::Precondition("zero-length image chord".into()));
        }
        Ok(v / n)
    }
}

/// Both certificates of a straightness check.
#[derive(Debug, Clone, Copy)]
pub struct StraightnessReport {
    pub passed: bool,
    /// Max deviation of sampled image points from the image chord.
    pub collinearity_residual: f64,
    /// |d(p,q) - r(p,q)|.
    pub length_defect: f64,
}

/// Sample the domain chord between p and q, map it through the immersion
/// and certify (a) collinearity with the image chord and (b) |d - r| <= tol.
pub fn straightness_check(
    spec: &ImmersionSpec,
    p: &DVector<f64>,
    q: &DVector<f64>,
    n_samples: usize,
    tolerance: f64,
) -> Result<StraightnessReport> {
    if p == q {
        return Err(Error::Precondition("straightness check needs p != q".into()));
    }
    if n_samples < 2 {
        return Err(Error::Precondition("need at least two samples".into()));
    }
    let d = (q - p).norm();
    let fp = spec.eval(p)?;
    let fq = spec.eval(q)?;
    let r = (&fq - &fp).norm();
    let mut collinearity_residual: f64 = 0.0;
    for i in 0..n_samples {
        let t = i as f64 / (n_samples - 1) as f64;
        let x = p * (1.0 - t) + q * t;
        let y = spec.eval(&x)?;
        let chord = &fp * (1.0 - t) + &fq * t;
        collinearity_residual = collinearity_residual.max((y - chord).norm());
    }
    let length_defect = (d - r).abs();
    Ok(StraightnessReport {
        passed: collinearity_residual <= tolerance && length_defect <= tolerance,
        collinearity_residual,
        length_defect,
    })
}

fn kernel_and_curvature(spec: &ImmersionSpec, x: &DVector<f64>) -> Result<FlatForm> {
    let jet = spec.jet(x)?;
    let frame = geometry::normal_frame_from_jet(&jet)?;
    let form = geometry::second_form_from_jet(&jet, &frame)?;
    Ok(FlatForm::from_second_form(&form))
}

/// First positive t with |x + t dir| = 1.
fn boundary_intersection(x: &DVector<f64>, dir: &DVector<f64>) -> f64 {
    let b = x.dot(dir);
    let c = x.norm_squared() - 1.0;
    (-b + (b * b - c).max(0.0).sqrt()).max(0.0)
}

/// Advance `x + t dir` in steps, re-certifying at each step that the point
/// stays in the disk, that `dir` stays in the nullity kernel, and that the
/// image stays straight. Stops at the last certified point; a boundary hit
/// is clipped to the exact circle and certified there.
pub fn trace_generator(
    spec: &ImmersionSpec,
    x: &DVector<f64>,
    dir: &DVector<f64>,
    step: f64,
    kernel_tol: f64,
) -> Result<GeneratorSegment> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Precondition(format!("step must be > 0, got {step}")));
    }
    let norm = dir.norm();
    if norm == 0.0 {
        return Err(Error::Precondition("direction must be nonzero".into()));
    }
    let dir = dir / norm;
    if spec.excluded(x) {
        return Err(Error::Precondition("start point is excluded from analysis".into()));
    }

    let form0 = kernel_and_curvature(spec, x)?;
    let res0 = form0.kernel_residual(&dir);
    if res0 > kernel_tol {
        return Err(Error::Precondition(format!(
            "direction is not in the nullity kernel at the start (residual {res0:.3e} > {kernel_tol:.3e})"
        )));
    }
    let nu = nullity::kernel_basis(&form0, tol::RANK_TAU).nu;

    let f_start = spec.eval(x)?;
    let chord_tol = tol::step_chord_tol(step);
    let mut samples = vec![x.clone()];
    let mut kernel_residual_max = res0;
    let mut curvature_max = form0.max_component();
    let mut t = 0.0f64;
    let termination;

    loop {
        let t_next = t + step;
        let y = x + &dir * t_next;
        let at_boundary = y.norm() > 1.0;
        let y = if at_boundary {
            let t_star = boundary_intersection(x, &dir);
            if t_star <= t {
                termination = Termination::Boundary;
                break;
            }
            x + &dir * t_star
        } else {
            y
        };

        if spec.excluded(&y) {
            termination = Termination::ExcludedRegion;
            break;
        }

        // Kernel membership. At the exact boundary a difference stencil may
        // not fit; the interior samples carry the certificate there.
        let kernel_ok = match kernel_and_curvature(spec, &y) {
            Ok(form) => {
                let res = form.kernel_residual(&dir);
                let ok = res <= kernel_tol;
                if ok {
                    kernel_residual_max = kernel_residual_max.max(res);
                    curvature_max = curvature_max.max(form.max_component());
                }
                ok
            }
            Err(Error::Margin { .. }) if at_boundary => true,
            Err(e) => return Err(e),
        };
        if !kernel_ok {
            termination = Termination::NullityDrop;
            break;
        }

        let t_reached = if at_boundary { boundary_intersection(x, &dir) } else { t_next };
        let fy = spec.eval(&y)?;
        if ((&fy - &f_start).norm() - t_reached).abs() > chord_tol {
            termination = Termination::StraightnessLoss;
            break;
        }

        samples.push(y);
        t = t_reached;
        if at_boundary {
            termination = Termination::Boundary;
            break;
        }
    }

    let end = samples.last().expect("start always present").clone();
    let f_end = spec.eval(&end)?;
    let image_length = (&f_end - &f_start).norm();
    let length = (&end - x).norm();

    // Final straightness residual of every sample against the image chord.
    let mut straightness_residual: f64 = 0.0;
    if length > 0.0 {
        for s in &samples {
            let tau = (s - x).norm() / length;
            let chord = &f_start * (1.0 - tau) + &f_end * tau;
            let y = spec.eval(s)?;
            straightness_residual = straightness_residual.max((y - chord).norm());
        }
    }

    Ok(GeneratorSegment {
        start: x.clone(),
        end,
        direction: dir,
        length,
        image_length,
        straightness_residual,
        kernel_residual_max,
        curvature_max,
        nu,
        termination,
        samples,
    })
}

/// Nearest grid node within `epsilon` of `z_star` that lies in a discrete
/// open stratum of strictly lower nullity. Ties break by lower stratum,
/// then by node index.
pub fn find_lower_nullity_neighbor(
    spec: &ImmersionSpec,
    z_star: &DVector<f64>,
    epsilon: f64,
    field: &NullityField,
) -> Result<DVector<f64>> {
    if z_star.norm() >= 1.0 {
        return Err(Error::Precondition("jump search needs an interior point".into()));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Precondition(format!("epsilon must be > 0, got {epsilon}")));
    }
    let nu_ref = nullity::nullity_index(spec, z_star, tol::RANK_TAU)?.nu;
    if nu_ref == 0 {
        return Err(Error::Precondition("no lower stratum can exist below nu = 0".into()));
    }

    let grid = field.grid();
    let h = grid.spacing();
    let center = grid.multi_index(grid.nearest_node(z_star));
    let res = grid.resolution() as isize;
    let m = grid.dim();

    let mut best: Option<(f64, usize, usize)> = None; // (distance, nu, flat)
    let max_ring = (epsilon / h).ceil() as isize + 1;
    for ring in 0..=max_ring {
        // nodes at Chebyshev distance `ring` are at least (ring - 1/2) h away
        let ring_floor = (ring as f64 - 0.5).max(0.0) * h;
        if let Some((d, _, _)) = best {
            if ring_floor > d {
                break;
            }
        }
        if ring_floor > epsilon {
            break;
        }
        for flat in chebyshev_ring(&center, ring, res, m, grid) {
            let Some(node) = field.node(flat) else { continue };
            if node.nu >= nu_ref || !node.open_interior {
                continue;
            }
            let d = (grid.point(flat) - z_star).norm();
            if d >= epsilon {
                continue;
            }
            let key = (d, node.nu, flat);
            if best.map_or(true, |b| key < b) {
                best = Some(key);
            }
        }
    }

    match best {
        Some((_, _, flat)) => Ok(grid.point(flat)),
        None => Err(Error::Resolution(format!(
            "no open-stratum node with nu < {nu_ref} within epsilon = {epsilon}"
        ))),
    }
}

fn chebyshev_ring(
    center: &[usize],
    ring: isize,
    res: isize,
    m: usize,
    grid: &crate::grid::DomainGrid,
) -> Vec<usize> {
    let mut out = Vec::new();
    let mut offsets = vec![-ring; m];
    'outer: loop {
        if offsets.iter().any(|o| o.abs() == ring) {
            let mut multi = Vec::with_capacity(m);
            let mut valid = true;
            for (axis, &off) in offsets.iter().enumerate() {
                let i = center[axis] as isize + off;
                if i < 0 || i >= res {
                    valid = false;
                    break;
                }
                multi.push(i as usize);
            }
            if valid {
                out.push(grid.flat_index(&multi));
            }
        }
        for axis in 0..m {
            offsets[axis] += 1;
            if offsets[axis] <= ring {
                continue 'outer;
            }
            offsets[axis] = -ring;
        }
        break;
    }
    out
}

/// One epsilon-jump between consecutive segments.
#[derive(Debug, Clone)]
pub struct JumpRecord {
    pub from: DVector<f64>,
    pub to: DVector<f64>,
    pub gap: f64,
    /// Angle between the adjoining segment directions in the domain.
    pub theta_domain: f64,
    /// Angle between the adjoining image chord directions.
    pub theta_image: f64,
}

/// Piecewise-straight path from an interior point to the disk boundary.
#[derive(Debug, Clone)]
pub struct ChainPath {
    pub segments: Vec<GeneratorSegment>,
    pub jumps: Vec<JumpRecord>,
    pub epsilon: f64,
    /// Largest |K^a_{jk}| over all traversed samples.
    pub curvature_bound: f64,
    pub disk_radius: f64,
    pub c1: f64,
    /// c1 * (2 + K R) * epsilon.
    pub defect_bound: f64,
    /// |d(p, q) - r(p, q)| for the chain endpoints.
    pub measured_defect: f64,
    pub start: DVector<f64>,
    pub end: DVector<f64>,
}

/// Tuning knobs for chain construction.
#[derive(Debug, Clone)]
pub struct ChainParams {
    /// Trace step; defaults to half the field's grid spacing.
    pub step: Option<f64>,
    pub kernel_tol: f64,
    pub rank_tau: f64,
    pub c1: f64,
    /// Reference direction for the first kernel-direction pick; defaults to
    /// the +x1 coordinate direction.
    pub initial_reference: Option<DVector<f64>>,
}

impl Default for ChainParams {
    fn default() -> Self {
        Self {
            step: None,
            kernel_tol: tol::TRACE_KERNEL_TOL,
            rank_tau: tol::RANK_TAU,
            c1: tol::C1_DEFAULT,
            initial_reference: None,
        }
    }
}

fn angle_between(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos()
}

/// Repeat { pick a kernel direction, trace, jump to a lower stratum } until
/// a segment reaches the boundary. The jump count is capped by the domain
/// dimension because every jump strictly decreases the nullity index.
pub fn chain_to_boundary(
    spec: &ImmersionSpec,
    start: &DVector<f64>,
    epsilon: f64,
    field: &NullityField,
    params: &ChainParams,
) -> Result<ChainPath> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Precondition(format!("epsilon must be > 0, got {epsilon}")));
    }
    let m = spec.domain_dim();
    if spec.ambient_dim() >= 2 * m {
        return Err(Error::Precondition(
            "chaining requires d < 2m (otherwise no flat direction is guaranteed)".into(),
        ));
    }
    let start_node = field
        .node(field.grid().nearest_node(start))
        .ok_or_else(|| Error::Precondition("start point is not over an analyzed node".into()))?;
    if !start_node.open_interior {
        return Err(Error::Precondition(
            "start point must lie in a discrete open stratum".into(),
        ));
    }

    let step = params.step.unwrap_or(field.grid().spacing() / 2.0);
    let mut reference_dir = match &params.initial_reference {
        Some(v) => {
            if v.len() != m || v.norm() == 0.0 {
                return Err(Error::Precondition(
                    "initial reference direction must be a nonzero m-vector".into(),
                ));
            }
            v.normalize()
        }
        None => {
            let mut e1 = DVector::zeros(m);
            e1[0] = 1.0;
            e1
        }
    };

    let mut segments: Vec<GeneratorSegment> = Vec::new();
    let mut jumps: Vec<JumpRecord> = Vec::new();
    let mut current = start.clone();

    loop {
        if segments.len() > m {
            return Err(Error::Certification(format!(
                "chain exceeded {m} segments without reaching the boundary; \
                 nullity did not decrease as required"
            )));
        }
        let pn = nullity::nullity_index(spec, &current, params.rank_tau)?;
        if pn.nu == 0 {
            return Err(Error::Certification(
                "no flat direction at the current point (nu = 0)".into(),
            ));
        }
        // kernel direction most aligned with the previous segment
        let mut best: Option<(f64, usize)> = None;
        for c in 0..pn.kernel.basis.ncols() {
            let score = pn.kernel.basis.column(c).dot(&reference_dir).abs();
            if best.map_or(true, |(s, _)| score > s) {
                best = Some((score, c));
            }
        }
        let (_, col) = best.expect("nu >= 1 kernel columns");
        let mut dir: DVector<f64> = pn.kernel.basis.column(col).into();
        if dir.dot(&reference_dir) < 0.0 {
            dir = -dir;
        }

        let seg = trace_generator(spec, &current, &dir, step, params.kernel_tol)?;
        if let Some(prev) = segments.last() {
            // finish the pending jump record with the angles
            let jump = jumps.last_mut().expect("jump recorded before new segment");
            jump.theta_domain = angle_between(&prev.direction, &seg.direction);
            jump.theta_image = angle_between(
                &prev.image_direction(spec)?,
                &seg.image_direction(spec)?,
            );
        }
        let termination = seg.termination;
        let seg_end = seg.end.clone();
        let seg_dir = seg.direction.clone();
        let seg_nu = seg.nu;
        segments.push(seg);

        match termination {
            Termination::Boundary => break,
            Termination::NullityDrop => {
                let w = find_lower_nullity_neighbor(spec, &seg_end, epsilon, field)?;
                let next_nu = nullity::nullity_index(spec, &w, params.rank_tau)?.nu;
                if next_nu >= seg_nu {
                    return Err(Error::Certification(format!(
                        "jump target nullity {next_nu} does not drop below {seg_nu}"
                    )));
                }
                jumps.push(JumpRecord {
                    from: seg_end.clone(),
                    to: w.clone(),
                    gap: (&w - &seg_end).norm(),
                    theta_domain: f64::NAN,
                    theta_image: f64::NAN,
                });
                reference_dir = seg_dir;
                current = w;
            }
            Termination::StraightnessLoss => {
                return Err(Error::Certification(
                    "trace lost image straightness before any stratum change".into(),
                ));
            }
            Termination::ExcludedRegion => {
                return Err(Error::Resolution(
                    "trace entered an excluded region; no certified continuation exists there"
                        .into(),
                ));
            }
        }
    }

    let end = segments.last().expect("at least one segment").end.clone();
    let curvature_bound = segments
        .iter()
        .map(|s| s.curvature_max)
        .fold(0.0f64, f64::max);
    let defect_bound = chain_defect_bound(curvature_bound, tol::DISK_RADIUS, epsilon, params.c1)?;
    let d = (&end - start).norm();
    let r = (spec.eval(&end)? - spec.eval(start)?).norm();

    Ok(ChainPath {
        segments,
        jumps,
        epsilon,
        curvature_bound,
        disk_radius: tol::DISK_RADIUS,
        c1: params.c1,
        defect_bound,
        measured_defect: (d - r).abs(),
        start: start.clone(),
        end,
    })
}

/// Composite-path distance agreement: if x-z and z-y are both
/// distance-preserving chords, the direct chord x-y must be too. The check
/// runs through the inner-product identity
/// `<phi(x) - phi(z), phi(y) - phi(z)> = <x - z, y - z>`.
#[derive(Debug, Clone, Copy)]
pub struct TransitivityReport {
    pub passed: bool,
    pub defect: f64,
    pub inner_product_residual: f64,
}

pub fn transitivity_check(
    spec: &ImmersionSpec,
    x: &DVector<f64>,
    z: &DVector<f64>,
    y: &DVector<f64>,
    tolerance: f64,
) -> Result<TransitivityReport> {
    let first = straightness_check(spec, x, z, 17, tolerance)?;
    let second = straightness_check(spec, z, y, 17, tolerance)?;
    if !first.passed || !second.passed {
        return Err(Error::Precondition(
            "transitivity needs both legs certified straight".into(),
        ));
    }
    let (fx, fz, fy) = (spec.eval(x)?, spec.eval(z)?, spec.eval(y)?);
    let ip_image = (&fx - &fz).dot(&(&fy - &fz));
    let ip_domain = (x - z).dot(&(y - z));
    let inner_product_residual = (ip_image - ip_domain).abs();
    let defect = ((&fx - &fy).norm() - (x - y).norm()).abs();
    Ok(TransitivityReport {
        passed: defect <= 10.0 * tolerance,
        defect,
        inner_product_residual,
    })
}

/// The chain defect certificate `c1 * (2 + K R) * epsilon`.
pub fn chain_defect_bound(k: f64, r: f64, epsilon: f64, c1: f64) -> Result<f64> {
    if k < 0.0 || !k.is_finite() {
        return Err(Error::Precondition(format!("K must be >= 0, got {k}")));
    }
    if r <= 0.0 {
        return Err(Error::Precondition(format!("R must be > 0, got {r}")));
    }
    if epsilon < 0.0 {
        return Err(Error::Precondition(format!("epsilon must be >= 0, got {epsilon}")));
    }
    if c1 <= 1.0 {
        return Err(Error::Precondition(format!("c1 must be > 1, got {c1}")));
    }
    Ok(c1 * (2.0 + k * r) * epsilon)
}

// ----- export -----

#[derive(Serialize)]
struct SegmentFile {
    start: Vec<f64>,
    end: Vec<f64>,
    direction: Vec<f64>,
    length: f64,
    image_length: f64,
    straightness_residual: f64,
    kernel_residual_max: f64,
    curvature_max: f64,
    nu: usize,
    termination: Termination,
}

#[derive(Serialize)]
struct JumpFile {
    from: Vec<f64>,
    to: Vec<f64>,
    gap: f64,
    theta_domain: f64,
    theta_image: f64,
}

#[derive(Serialize)]
struct ChainFile {
    schema_version: u32,
    family: String,
    epsilon: f64,
    c1: f64,
    curvature_bound: f64,
    disk_radius: f64,
    defect_bound: f64,
    measured_defect: f64,
    start: Vec<f64>,
    end: Vec<f64>,
    segments: Vec<SegmentFile>,
    jumps: Vec<JumpFile>,
}

impl ChainPath {
    pub fn to_json(&self, family: &str) -> String {
        let file = ChainFile {
            schema_version: 1,
            family: family.to_string(),
            epsilon: self.epsilon,
            c1: self.c1,
            curvature_bound: self.curvature_bound,
            disk_radius: self.disk_radius,
            defect_bound: self.defect_bound,
            measured_defect: self.measured_defect,
            start: self.start.iter().copied().collect(),
            end: self.end.iter().copied().collect(),
            segments: self
                .segments
                .iter()
                .map(|s| SegmentFile {
                    start: s.start.iter().copied().collect(),
                    end: s.end.iter().copied().collect(),
                    direction: s.direction.iter().copied().collect(),
                    length: s.length,
                    image_length: s.image_length,
                    straightness_residual: s.straightness_residual,
                    kernel_residual_max: s.kernel_residual_max,
                    curvature_max: s.curvature_max,
                    nu: s.nu,
                    termination: s.termination,
                })
                .collect(),
            jumps: self
                .jumps
                .iter()
                .map(|j| JumpFile {
                    from: j.from.iter().copied().collect(),
                    to: j.to.iter().copied().collect(),
                    gap: j.gap,
                    theta_domain: j.theta_domain,
                    theta_image: j.theta_image,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("chain serializes")
    }

    /// Polyline of domain and image sample points, one row per sample.
    pub fn polyline_csv(&self, spec: &ImmersionSpec) -> Result<String> {
        let m = spec.domain_dim();
        let d = spec.ambient_dim();
        let mut out = String::from("segment,t,");
        for i in 0..m {
            out.push_str(&format!("x_{},", i + 1));
        }
        for i in 0..d {
            out.push_str(&format!("y_{}", i + 1));
            if i + 1 < d {
                out.push(',');
            }
        }
        out.push('\n');
        for (si, seg) in self.segments.iter().enumerate() {
            for s in &seg.samples {
                let t = (s - &seg.start).norm();
                out.push_str(&format!("{si},{t},"));
                for v in s.iter() {
                    out.push_str(&format!("{v},"));
                }
                let y = spec.eval(s)?;
                for (i, v) in y.iter().enumerate() {
                    out.push_str(&format!("{v}"));
                    if i + 1 < d {
                        out.push(',');
                    }
                }
                out.push('\n');
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainGrid;
    use crate::immersion::bent_flap_depths;
    use nalgebra::dvector;

    fn field_for(spec: &ImmersionSpec, resolution: usize) -> NullityField {
        let grid = DomainGrid::new(spec.domain_dim(), resolution).unwrap();
        nullity::stratify(spec, &grid, tol::RANK_TAU).unwrap()
    }

    #[test]
    fn plane_chords_are_straight() {
        let spec = ImmersionSpec::plane(2, 3).unwrap();
        let r = straightness_check(&spec, &dvector![0.1, 0.2], &dvector![-0.4, 0.5], 9, 1e-12)
            .unwrap();
        assert!(r.passed);
        assert_eq!(r.collinearity_residual, 0.0);
        assert_eq!(r.length_defect, 0.0);
    }

    #[test]
    fn cylinder_ruling_straight_circumference_not() {
        let spec = ImmersionSpec::cylinder(0.25, 0.0).unwrap();
        let ruling = straightness_check(&spec, &dvector![-0.5, 0.2], &dvector![0.7, 0.2], 9, 1e-10)
            .unwrap();
        assert!(ruling.passed);

        let across = straightness_check(&spec, &dvector![0.1, -0.5], &dvector![0.1, 0.5], 9, 1e-10)
            .unwrap();
        assert!(!across.passed);
        // chord of a circle is strictly shorter than the arc
        assert!(across.length_defect > 1e-3);
        assert!(across.collinearity_residual > 1e-3);
    }

    #[test]
    fn degenerate_pair_rejected() {
        let spec = ImmersionSpec::plane(2, 3).unwrap();
        let p = dvector![0.1, 0.1];
        assert!(straightness_check(&spec, &p, &p, 9, 1e-10).is_err());
    }

    #[test]
    fn trace_plane_reaches_boundary() {
        let spec = ImmersionSpec::plane(2, 3).unwrap();
        let seg = trace_generator(
            &spec,
            &dvector![0.0, 0.0],
            &dvector![1.0, 0.0],
            0.01,
            tol::TRACE_KERNEL_TOL,
        )
        .unwrap();
        assert_eq!(seg.termination, Termination::Boundary);
        assert!((seg.length - 1.0).abs() < 1e-12);
        assert!((seg.end.norm() - 1.0).abs() < 1e-12);
        assert!(seg.length_defect() < 1e-12);
    }

    #[test]
    fn trace_cylinder_axis_from_center() {
        let spec = ImmersionSpec::cylinder(0.25, 0.0).unwrap();
        let seg = trace_generator(
            &spec,
            &dvector![0.0, 0.0],
            &dvector![1.0, 0.0],
            0.01,
            tol::TRACE_KERNEL_TOL,
        )
        .unwrap();
        assert_eq!(seg.termination, Termination::Boundary);
        assert!((seg.length - 1.0).abs() < 1e-12);
        assert!((seg.image_length - 1.0).abs() < 1e-10);
    }

    #[test]
    fn trace_non_kernel_direction_rejected() {
        let spec = ImmersionSpec::cylinder(0.25, 0.0).unwrap();
        let err = trace_generator(
            &spec,
            &dvector![0.0, 0.0],
            &dvector![0.0, 1.0],
            0.01,
            tol::TRACE_KERNEL_TOL,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn trace_bent_flap_stops_at_chord() {
        let spec = ImmersionSpec::bent_flap_disk(4.0, 0.5).unwrap();
        // straight down from the center, perpendicular to the bottom chord
        let seg = trace_generator(
            &spec,
            &dvector![0.0, 0.0],
            &dvector![0.0, -1.0],
            0.01,
            tol::TRACE_KERNEL_TOL,
        )
        .unwrap();
        assert_eq!(seg.termination, Termination::NullityDrop);
        // stops within one step of y = -1/2
        assert!((seg.end[1] + 0.5).abs() <= 0.01 + 1e-12, "end {}", seg.end[1]);
        assert_eq!(seg.nu, 2);
    }

    #[test]
    fn trace_cone_toward_apex_stops_at_exclusion() {
        let spec = ImmersionSpec::cone(0.3, 0.5).unwrap();
        // at (0.2, 0), the kernel is the radial direction from the apex
        // (-0.3, 0); tracing backwards runs into the excluded disk
        let seg = trace_generator(
            &spec,
            &dvector![0.2, 0.0],
            &dvector![-1.0, 0.0],
            0.01,
            tol::TRACE_KERNEL_TOL,
        )
        .unwrap();
        assert_eq!(seg.termination, Termination::ExcludedRegion);
        assert!(seg.end[0] > -0.25 + 0.0099);
    }

    #[test]
    fn jump_search_finds_flap_node() {
        let spec = ImmersionSpec::bent_flap_disk(4.0, 0.5).unwrap();
        let field = field_for(&spec, 101);
        let z_star = dvector![0.0, -0.5]; // on the bottom chord
        let w = find_lower_nullity_neighbor(&spec, &z_star, 0.05, &field).unwrap();
        let pn = nullity::nullity_index(&spec, &w, tol::RANK_TAU).unwrap();
        assert_eq!(pn.nu, 1);
        assert!((&w - &z_star).norm() < 0.05);
        assert!(bent_flap_depths(&w)[0] > 0.0);
    }

    #[test]
    fn jump_search_fails_on_single_stratum() {
        let plane = ImmersionSpec::plane(2, 3).unwrap();
        let field = field_for(&plane, 41);
        let err = find_lower_nullity_neighbor(&plane, &dvector![0.1, 0.1], 0.1, &field)
            .unwrap_err();
        assert!(matches!(err, Error::Resolution(_)));

        let cyl = ImmersionSpec::cylinder(0.25, 0.0).unwrap();
        let field = field_for(&cyl, 41);
        let err =
            find_lower_nullity_neighbor(&cyl, &dvector![0.1, 0.1], 0.1, &field).unwrap_err();
        assert!(matches!(err, Error::Resolution(_)));
    }

    #[test]
    fn chain_plane_single_segment() {
        let spec = ImmersionSpec::plane(2, 3).unwrap();
        let field = field_for(&spec, 41);
        let chain = chain_to_boundary(
            &spec,
            &dvector![0.0, 0.0],
            0.05,
            &field,
            &ChainParams::default(),
        )
        .unwrap();
        assert_eq!(chain.segments.len(), 1);
        assert!(chain.measured_defect < 1e-12);
        assert!((chain.end.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chain_cylinder_single_segment() {
        let spec = ImmersionSpec::cylinder(0.25, 0.0).unwrap();
        let field = field_for(&spec, 41);
        let chain = chain_to_boundary(
            &spec,
            &dvector![0.0, 0.0],
            0.05,
            &field,
            &ChainParams::default(),
        )
        .unwrap();
        assert_eq!(chain.segments.len(), 1);
        assert!(chain.measured_defect <= 1e-8);
    }

    #[test]
    fn chain_bent_flap_two_segments() {
        let spec = ImmersionSpec::bent_flap_disk(4.0, 0.5).unwrap();
        let field = field_for(&spec, 101);
        let chain = chain_to_boundary(
            &spec,
            &dvector![0.0, 0.0],
            0.05,
            &field,
            &ChainParams::default(),
        )
        .unwrap();
        assert_eq!(chain.segments.len(), 2, "triangle leaf then flap ruling");
        assert_eq!(chain.jumps.len(), 1);
        assert!((chain.end.norm() - 1.0).abs() < 1e-12);
        // the endpoint lies on the boundary arc of a flap
        assert!(bent_flap_depths(&chain.end).iter().any(|&s| s > 0.0));
        assert!(chain.measured_defect <= chain.defect_bound);
        // nullity strictly decreases across the jump
        assert!(chain.segments[1].nu < chain.segments[0].nu);
        // angles agree to within K * gap
        let j = &chain.jumps[0];
        assert!(
            (j.theta_domain - j.theta_image).abs()
                <= chain.curvature_bound * j.gap + 1e-9
        );
    }

    #[test]
    fn chain_rejects_wide_ambient() {
        let spec = ImmersionSpec::confinement_torus(2, 0.5).unwrap();
        let field = field_for(&spec, 41);
        let err = chain_to_boundary(
            &spec,
            &dvector![0.0, 0.0],
            0.05,
            &field,
            &ChainParams::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn transitivity_cases() {
        let plane = ImmersionSpec::plane(2, 3).unwrap();
        let r = transitivity_check(
            &plane,
            &dvector![-0.5, 0.0],
            &dvector![0.0, 0.3],
            &dvector![0.5, 0.0],
            1e-10,
        )
        .unwrap();
        assert!(r.passed);
        assert!(r.inner_product_residual < 1e-12);

        // cylinder: collinear points on one ruling
        let cyl = ImmersionSpec::cylinder(0.25, 0.0).unwrap();
        let r = transitivity_check(
            &cyl,
            &dvector![-0.6, 0.2],
            &dvector![0.0, 0.2],
            &dvector![0.6, 0.2],
            1e-10,
        )
        .unwrap();
        assert!(r.passed);

        // non-straight legs are a precondition failure
        let err = transitivity_check(
            &cyl,
            &dvector![0.1, -0.5],
            &dvector![0.1, 0.0],
            &dvector![0.1, 0.5],
            1e-10,
        );
        assert!(err.is_err());
    }

    #[test]
    fn defect_bound_formula() {
        assert!((chain_defect_bound(0.0, 1.0, 0.1, 2.0).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(chain_defect_bound(4.0, 1.0, 0.0, 2.0).unwrap(), 0.0);
        assert!((chain_defect_bound(4.0, 1.0, 0.05, 2.0).unwrap() - 0.6).abs() < 1e-15);
        assert!(chain_defect_bound(1.0, 1.0, 0.1, 1.0).is_err());
        assert!(chain_defect_bound(-1.0, 1.0, 0.1, 2.0).is_err());
    }

    #[test]
    fn segment_certificates_co_occur() {
        // Lemma-type equivalence: collinearity and |d - r| certify together.
        let spec = ImmersionSpec::bent_flap_disk(4.0, 0.5).unwrap();
        let field = field_for(&spec, 101);
        let chain = chain_to_boundary(
            &spec,
            &dvector![0.0, 0.0],
            0.05,
            &field,
            &ChainParams::default(),
        )
        .unwrap();
        for seg in &chain.segments {
            let col_ok = seg.straightness_residual <= tol::STRAIGHTNESS_TOL;
            let len_ok = seg.length_defect() <= tol::STRAIGHTNESS_TOL;
            assert_eq!(col_ok, len_ok);
            assert!(col_ok);
        }
    }
}
