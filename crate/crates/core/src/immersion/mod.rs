//! Immersions of the flat unit disk `D^m` into `R^d`, with exact or
//! finite-difference derivative access.

mod families;
pub mod profile;
mod sampled;

pub use sampled::SampledGrid;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tol;
use families::AnalyticJet;
use profile::CurvatureProfile;

/// How derivatives are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    /// Closed-form jacobian and hessian (built-in analytic families only).
    Analytic,
    /// Central differences of the stated order (2 or 4) with the given step.
    CentralDifference { step: f64, order: usize },
}

/// The built-in immersion families plus sampled data.
#[derive(Debug, Clone)]
pub enum ImmersionKind {
    Plane,
    ScaledPlane { scale: f64 },
    Cylinder { radius: f64, axis_angle: f64 },
    Cone { apex_offset: f64, opening: f64 },
    BentFlapDisk { profile: CurvatureProfile },
    ConfinementTorus { shell_radius: f64 },
    SphereChart,
    Sampled(Arc<SampledGrid>),
}

/// A map `phi: D^m -> R^d` together with its derivative policy.
#[derive(Debug, Clone)]
pub struct ImmersionSpec {
    m: usize,
    d: usize,
    kind: ImmersionKind,
    derivative_mode: DerivativeMode,
}

/// Value, jacobian and hessian of the immersion at one point.
#[derive(Debug, Clone)]
pub struct JetAtPoint {
    pub point: DVector<f64>,
    pub value: DVector<f64>,
    /// d x m matrix of first derivatives; column j is d(phi)/dx_j.
    pub jacobian: DMatrix<f64>,
    /// One m x m matrix per ambient component.
    pub hessian: Vec<DMatrix<f64>>,
}

impl JetAtPoint {
    /// Largest |H[j,k] - H[k,j]| over all components; zero for analytic jets.
    pub fn hessian_asymmetry(&self) -> f64 {
        let m = self.jacobian.ncols();
        let mut worst: f64 = 0.0;
        for h in &self.hessian {
            for j in 0..m {
                for k in (j + 1)..m {
                    worst = worst.max((h[(j, k)] - h[(k, j)]).abs());
                }
            }
        }
        worst
    }

    /// The d-vector of second derivatives `d^2 phi / dx_j dx_k`.
    pub fn second_derivative(&self, j: usize, k: usize) -> DVector<f64> {
        DVector::from_iterator(self.hessian.len(), self.hessian.iter().map(|h| h[(j, k)]))
    }
}

fn check_in_disk(x: &DVector<f64>) -> Result<()> {
    let norm = x.norm();
    if norm > 1.0 + tol::MASK_SLACK {
        return Err(Error::Domain { norm });
    }
    Ok(())
}

impl ImmersionSpec {
    // ----- constructors -----

    pub fn plane(m: usize, d: usize) -> Result<Self> {
        Self::scaled_plane(m, d, 1.0)
    }

    pub fn scaled_plane(m: usize, d: usize, scale: f64) -> Result<Self> {
        validate_dims(m, d)?;
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Construction(format!("scale must be > 0, got {scale}")));
        }
        Ok(Self {
            m,
            d,
            kind: if scale == 1.0 {
                ImmersionKind::Plane
            } else {
                ImmersionKind::ScaledPlane { scale }
            },
            derivative_mode: DerivativeMode::Analytic,
        })
    }

    pub fn cylinder(radius: f64, axis_angle: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Construction(format!(
                "cylinder radius must be > 0, got {radius}"
            )));
        }
        if !axis_angle.is_finite() {
            return Err(Error::Construction("axis angle must be finite".into()));
        }
        Ok(Self {
            m: 2,
            d: 3,
            kind: ImmersionKind::Cylinder { radius, axis_angle },
            derivative_mode: DerivativeMode::Analytic,
        })
    }

    /// Cone with apex at `(-apex_offset, 0)`. `opening` is the developed
    /// scale factor and must be the reciprocal of an integer >= 2 so the
    /// image wraps smoothly around the axis.
    pub fn cone(apex_offset: f64, opening: f64) -> Result<Self> {
        if !(0.0..=0.9).contains(&apex_offset) {
            return Err(Error::Construction(format!(
                "apex offset must lie in [0, 0.9], got {apex_offset}"
            )));
        }
        if !(opening.is_finite() && opening > 0.0 && opening < 1.0) {
            return Err(Error::Construction(format!(
                "opening must lie in (0, 1), got {opening}"
            )));
        }
        let turns = 1.0 / opening;
        if (turns - turns.round()).abs() > 1e-9 || turns.round() < 2.0 {
            return Err(Error::Construction(format!(
                "opening must be 1/n for an integer n >= 2 (smooth wrap), got {opening}"
            )));
        }
        Ok(Self {
            m: 2,
            d: 3,
            kind: ImmersionKind::Cone {
                apex_offset,
                opening,
            },
            derivative_mode: DerivativeMode::Analytic,
        })
    }

    /// Disk with the three circular segments beyond the inscribed
    /// equilateral triangle bent out of plane. The curvature profile ramps
    /// from zero at each chord (`kappa(0) = 0`), so the flaps join the flat
    /// triangle with vanishing curvature.
    pub fn bent_flap_disk(kappa_max: f64, ramp: f64) -> Result<Self> {
        if !(kappa_max.is_finite() && kappa_max >= 0.0) {
            return Err(Error::Construction(format!(
                "kappa_max must be >= 0, got {kappa_max}"
            )));
        }
        if !(ramp.is_finite() && ramp > 0.0 && ramp <= 1.0) {
            return Err(Error::Construction(format!(
                "ramp length must lie in (0, 1], got {ramp}"
            )));
        }
        Ok(Self {
            m: 2,
            d: 3,
            kind: ImmersionKind::BentFlapDisk {
                profile: CurvatureProfile::new(kappa_max, ramp),
            },
            derivative_mode: DerivativeMode::Analytic,
        })
    }

    /// The explicit confinement map into `R^{2m}`.
    pub fn confinement_torus(m: usize, shell_radius: f64) -> Result<Self> {
        Self::confinement_torus_in(m, 2 * m, shell_radius)
    }

    /// Confinement map padded with zeros into `R^d`, `d >= 2m`.
    pub fn confinement_torus_in(m: usize, d: usize, shell_radius: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Construction("domain dimension must be >= 1".into()));
        }
        if d < 2 * m {
            return Err(Error::Construction(format!(
                "confinement torus needs d >= 2m, got m={m}, d={d}"
            )));
        }
        if !(shell_radius.is_finite() && shell_radius > 0.0 && shell_radius < 1.0) {
            return Err(Error::Construction(format!(
                "shell radius must lie in (0, 1), got {shell_radius}"
            )));
        }
        Ok(Self {
            m,
            d,
            kind: ImmersionKind::ConfinementTorus { shell_radius },
            derivative_mode: DerivativeMode::Analytic,
        })
    }

    /// Latitude/longitude chart of the unit sphere (non-isometric control).
    pub fn sphere_chart() -> Self {
        Self {
            m: 2,
            d: 3,
            kind: ImmersionKind::SphereChart,
            derivative_mode: DerivativeMode::Analytic,
        }
    }

    /// Wrap sampled node values; derivatives are central differences at the
    /// sample spacing.
    pub fn from_samples(samples: SampledGrid) -> Self {
        let step = samples.grid().spacing();
        let (m, d) = (samples.grid().dim(), samples.ambient_dim());
        Self {
            m,
            d,
            kind: ImmersionKind::Sampled(Arc::new(samples)),
            derivative_mode: DerivativeMode::CentralDifference { step, order: 2 },
        }
    }

    /// Switch to finite differences (order 2 or 4). Sampled kinds keep the
    /// sample spacing as a lower bound on the step.
    pub fn with_central_differences(mut self, step: f64, order: usize) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Construction(format!("step must be > 0, got {step}")));
        }
        if order != 2 && order != 4 {
            return Err(Error::Construction(format!(
                "difference order must be 2 or 4, got {order}"
            )));
        }
        self.derivative_mode = DerivativeMode::CentralDifference { step, order };
        Ok(self)
    }

    // ----- accessors -----

    pub fn domain_dim(&self) -> usize {
        self.m
    }

    pub fn ambient_dim(&self) -> usize {
        self.d
    }

    pub fn codim(&self) -> usize {
        self.d - self.m
    }

    pub fn kind(&self) -> &ImmersionKind {
        &self.kind
    }

    pub fn derivative_mode(&self) -> DerivativeMode {
        self.derivative_mode
    }

    pub fn family_id(&self) -> &'static str {
        match self.kind {
            ImmersionKind::Plane => "plane",
            ImmersionKind::ScaledPlane { .. } => "scaled-plane",
            ImmersionKind::Cylinder { .. } => "cylinder",
            ImmersionKind::Cone { .. } => "cone",
            ImmersionKind::BentFlapDisk { .. } => "bent-flap",
            ImmersionKind::ConfinementTorus { .. } => "confinement-torus",
            ImmersionKind::SphereChart => "sphere-chart",
            ImmersionKind::Sampled(_) => "sampled-grid",
        }
    }

    /// Points excluded from derivative-based analysis (the cone apex disk).
    pub fn excluded(&self, x: &DVector<f64>) -> bool {
        match &self.kind {
            ImmersionKind::Cone { apex_offset, .. } => {
                let dx = x[0] + apex_offset;
                let dy = x[1];
                (dx * dx + dy * dy).sqrt() <= tol::CONE_APEX_EXCLUSION
            }
            _ => false,
        }
    }

    // ----- evaluation -----

    /// phi(x). Errors when x is outside the closed disk.
    pub fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_point(x)?;
        check_in_disk(x)?;
        if let ImmersionKind::Sampled(s) = &self.kind {
            return s.interpolate(x);
        }
        Ok(self.analytic_jet(x).value)
    }

    /// Value, jacobian and hessian at x.
    pub fn jet(&self, x: &DVector<f64>) -> Result<JetAtPoint> {
        self.check_point(x)?;
        check_in_disk(x)?;
        if self.excluded(x) {
            return Err(Error::Precondition(format!(
                "point within the excluded apex disk (radius {})",
                tol::CONE_APEX_EXCLUSION
            )));
        }
        match self.derivative_mode {
            DerivativeMode::Analytic => {
                let jet = self.analytic_jet(x);
                Ok(JetAtPoint {
                    point: x.clone(),
                    value: jet.value,
                    jacobian: jet.jacobian,
                    hessian: jet.hessian,
                })
            }
            DerivativeMode::CentralDifference { step, order } => {
                let reach = step * (order / 2) as f64 * 2.0;
                let norm = x.norm();
                if norm > 1.0 - reach {
                    return Err(Error::Margin {
                        norm,
                        max_norm: 1.0 - reach,
                    });
                }
                self.fd_jet(x, step, order)
            }
        }
    }

    fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.m {
            return Err(Error::Validation(format!(
                "point has dimension {}, expected {}",
                x.len(),
                self.m
            )));
        }
        Ok(())
    }

    fn analytic_jet(&self, x: &DVector<f64>) -> AnalyticJet {
        match &self.kind {
            ImmersionKind::Plane => families::plane_jet(self.m, self.d, 1.0, x),
            ImmersionKind::ScaledPlane { scale } => families::plane_jet(self.m, self.d, *scale, x),
            ImmersionKind::Cylinder { radius, axis_angle } => {
                families::cylinder_jet(*radius, *axis_angle, x)
            }
            ImmersionKind::Cone {
                apex_offset,
                opening,
            } => families::cone_jet(&[-apex_offset, 0.0], *opening, x),
            ImmersionKind::BentFlapDisk { profile } => families::bent_flap_jet(profile, x),
            ImmersionKind::ConfinementTorus { shell_radius } => {
                families::torus_jet(self.m, self.d, *shell_radius, x)
            }
            ImmersionKind::SphereChart => families::sphere_chart_jet(x),
            ImmersionKind::Sampled(_) => unreachable!("sampled kinds always difference"),
        }
    }

    fn fd_jet(&self, x: &DVector<f64>, h: f64, order: usize) -> Result<JetAtPoint> {
        let m = self.m;
        let value = self.eval(x)?;
        let shifted = |offsets: &[(usize, f64)]| -> Result<DVector<f64>> {
            let mut y = x.clone();
            for &(axis, delta) in offsets {
                y[axis] += delta;
            }
            self.eval(&y)
        };

        let mut jacobian = DMatrix::zeros(self.d, m);
        let mut hessian: Vec<DMatrix<f64>> = (0..self.d).map(|_| DMatrix::zeros(m, m)).collect();

        for j in 0..m {
            let (col, diag) = match order {
                2 => {
                    let fp = shifted(&[(j, h)])?;
                    let fm = shifted(&[(j, -h)])?;
                    let col = (&fp - &fm) / (2.0 * h);
                    let diag = (&fp - 2.0 * &value + &fm) / (h * h);
                    (col, diag)
                }
                4 => {
                    let fp1 = shifted(&[(j, h)])?;
                    let fm1 = shifted(&[(j, -h)])?;
                    let fp2 = shifted(&[(j, 2.0 * h)])?;
                    let fm2 = shifted(&[(j, -2.0 * h)])?;
                    let col = (-&fp2 + 8.0 * &fp1 - 8.0 * &fm1 + &fm2) / (12.0 * h);
                    let diag = (-&fp2 + 16.0 * &fp1 - 30.0 * &value + 16.0 * &fm1 - &fm2)
                        / (12.0 * h * h);
                    (col, diag)
                }
                _ => unreachable!("order validated at construction"),
            };
            jacobian.set_column(j, &col);
            for a in 0..self.d {
                hessian[a][(j, j)] = diag[a];
            }
        }

        for j in 0..m {
            for k in (j + 1)..m {
                let cross = match order {
                    2 => {
                        let fpp = shifted(&[(j, h), (k, h)])?;
                        let fpm = shifted(&[(j, h), (k, -h)])?;
                        let fmp = shifted(&[(j, -h), (k, h)])?;
                        let fmm = shifted(&[(j, -h), (k, -h)])?;
                        (fpp - fpm - fmp + fmm) / (4.0 * h * h)
                    }
                    4 => {
                        // Two nested fourth-order first-derivative stencils.
                        let c = [1.0, -8.0, 8.0, -1.0];
                        let off = [-2.0, -1.0, 1.0, 2.0];
                        let mut acc = DVector::zeros(self.d);
                        for (ci, oi) in c.iter().zip(off.iter()) {
                            for (cj, oj) in c.iter().zip(off.iter()) {
                                let f = shifted(&[(j, oi * h), (k, oj * h)])?;
                                acc += f * (ci * cj);
                            }
                        }
                        acc / (144.0 * h * h)
                    }
                    _ => unreachable!(),
                };
                for a in 0..self.d {
                    hessian[a][(j, k)] = cross[a];
                    hessian[a][(k, j)] = cross[a];
                }
            }
        }

        Ok(JetAtPoint {
            point: x.clone(),
            value,
            jacobian,
            hessian,
        })
    }
}

fn validate_dims(m: usize, d: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::Construction("domain dimension must be >= 1".into()));
    }
    if d <= m {
        return Err(Error::Construction(format!(
            "ambient dimension must exceed domain dimension, got m={m}, d={d}"
        )));
    }
    Ok(())
}

/// Depth of a point past each chord of the bent-flap triangle (positive in
/// the corresponding flap). Exposed for region classification in tests and
/// stratification diagnostics.
pub fn bent_flap_depths(x: &DVector<f64>) -> [f64; 3] {
    families::flap_depths(x)
}
