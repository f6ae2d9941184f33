//! Closed-form jets for the built-in immersion families.

use nalgebra::{DMatrix, DVector};

use super::profile::CurvatureProfile;

pub(super) struct AnalyticJet {
    pub value: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    pub hessian: Vec<DMatrix<f64>>,
}

fn zero_hessian(m: usize, d: usize) -> Vec<DMatrix<f64>> {
    (0..d).map(|_| DMatrix::zeros(m, m)).collect()
}

pub(super) fn plane_jet(m: usize, d: usize, scale: f64, x: &DVector<f64>) -> AnalyticJet {
    let value = DVector::from_fn(d, |a, _| if a < m { scale * x[a] } else { 0.0 });
    let jacobian = DMatrix::from_fn(d, m, |a, j| if a == j { scale } else { 0.0 });
    AnalyticJet {
        value,
        jacobian,
        hessian: zero_hessian(m, d),
    }
}

/// Disk rolled onto a cylinder of the given radius; the axis makes
/// `axis_angle` with the x1 coordinate direction.
pub(super) fn cylinder_jet(radius: f64, axis_angle: f64, x: &DVector<f64>) -> AnalyticJet {
    let a = [axis_angle.cos(), axis_angle.sin()];
    let b = [-axis_angle.sin(), axis_angle.cos()];
    let t = a[0] * x[0] + a[1] * x[1];
    let s = b[0] * x[0] + b[1] * x[1];
    let (sin, cos) = (s / radius).sin_cos();

    let value = DVector::from_vec(vec![t, radius * sin, radius * (1.0 - cos)]);
    let jacobian = DMatrix::from_fn(3, 2, |row, j| match row {
        0 => a[j],
        1 => cos * b[j],
        _ => sin * b[j],
    });
    let mut hessian = zero_hessian(2, 3);
    for j in 0..2 {
        for k in j..2 {
            let bb = b[j] * b[k];
            let h1 = -sin / radius * bb;
            let h2 = cos / radius * bb;
            hessian[1][(j, k)] = h1;
            hessian[1][(k, j)] = h1;
            hessian[2][(j, k)] = h2;
            hessian[2][(k, j)] = h2;
        }
    }
    AnalyticJet {
        value,
        jacobian,
        hessian,
    }
}

/// Disk rolled onto a cone. `opening` is the developed-cone scale factor
/// (the sine of the half-angle); it must be the reciprocal of an integer so
/// the angular coordinate wraps smoothly. The apex sits at `apex` in the
/// domain and at `(apex, 0)` in the image.
pub(super) fn cone_jet(apex: &[f64; 2], opening: f64, x: &DVector<f64>) -> AnalyticJet {
    let c = opening;
    let wz = (1.0 - c * c).sqrt();
    let u = [x[0] - apex[0], x[1] - apex[1]];
    let r = (u[0] * u[0] + u[1] * u[1]).sqrt();
    if r == 0.0 {
        // Apex itself: the value is defined, derivatives are not (the apex
        // lies inside the excluded disk, so jets are never requested here).
        return AnalyticJet {
            value: DVector::from_vec(vec![apex[0], apex[1], 0.0]),
            jacobian: DMatrix::zeros(3, 2),
            hessian: zero_hessian(2, 3),
        };
    }
    let theta = u[1].atan2(u[0]);
    let (sin_t, cos_t) = (theta / c).sin_cos();
    let rhat = [u[0] / r, u[1] / r];
    let shat = [-rhat[1], rhat[0]];

    let value = DVector::from_vec(vec![
        apex[0] + c * r * cos_t,
        apex[1] + c * r * sin_t,
        wz * r,
    ]);
    let jacobian = DMatrix::from_fn(3, 2, |row, j| match row {
        0 => c * cos_t * rhat[j] - sin_t * shat[j],
        1 => c * sin_t * rhat[j] + cos_t * shat[j],
        _ => wz * rhat[j],
    });

    // Polar second derivatives pushed to Cartesian coordinates.
    let phi_r = [c * cos_t, c * sin_t, wz];
    let phi_theta = [-r * sin_t, r * cos_t, 0.0];
    let phi_rtheta = [-sin_t, cos_t, 0.0];
    let phi_thetatheta = [-r / c * cos_t, -r / c * sin_t, 0.0];
    let mut hessian = zero_hessian(2, 3);
    for comp in 0..3 {
        for j in 0..2 {
            for k in j..2 {
                let sym = rhat[j] * shat[k] + shat[j] * rhat[k];
                let delta = if j == k { 1.0 } else { 0.0 };
                let v = phi_rtheta[comp] * sym / r
                    + phi_thetatheta[comp] * shat[j] * shat[k] / (r * r)
                    + phi_r[comp] * (delta - rhat[j] * rhat[k]) / r
                    - phi_theta[comp] * sym / (r * r);
                hessian[comp][(j, k)] = v;
                hessian[comp][(k, j)] = v;
            }
        }
    }
    AnalyticJet {
        value,
        jacobian,
        hessian,
    }
}

/// Apothem directions of the inscribed equilateral triangle (vertices at
/// 90, 210 and 330 degrees): unit normals of the three chords, pointing
/// away from the center. A point is past chord `i` when `n_i . x > 1/2`.
pub(super) const FLAP_NORMALS: [[f64; 2]; 3] = {
    // cos/sin of 270, 30, 150 degrees
    [
        [0.0, -1.0],
        [0.866_025_403_784_438_6, 0.5],
        [-0.866_025_403_784_438_6, 0.5],
    ]
};

/// Apothem of the inscribed equilateral triangle.
pub(super) const CHORD_OFFSET: f64 = 0.5;

/// Signed depth past each chord; at most one is positive inside the disk.
pub(super) fn flap_depths(x: &DVector<f64>) -> [f64; 3] {
    let mut s = [0.0; 3];
    for (i, n) in FLAP_NORMALS.iter().enumerate() {
        s[i] = n[0] * x[0] + n[1] * x[1] - CHORD_OFFSET;
    }
    s
}

/// Flat disk with the three circular segments beyond the inscribed triangle
/// bent out of plane as generalized cylinders.
pub(super) fn bent_flap_jet(profile: &CurvatureProfile, x: &DVector<f64>) -> AnalyticJet {
    let depths = flap_depths(x);
    let mut flap: Option<usize> = None;
    for (i, &s) in depths.iter().enumerate() {
        if s > 0.0 {
            debug_assert!(flap.is_none(), "flap regions overlap inside the disk");
            flap = Some(i);
        }
    }
    let Some(i) = flap else {
        // Inner triangle: rigid planar embedding.
        return plane_jet(2, 3, 1.0, x);
    };
    let n = FLAP_NORMALS[i];
    let s = depths[i];
    let (xi, zeta) = profile.offsets(s);
    let psi = profile.psi(s);
    let (sin_p, cos_p) = psi.sin_cos();
    let kappa = profile.kappa(s);

    let value = DVector::from_vec(vec![
        x[0] + (xi - s) * n[0],
        x[1] + (xi - s) * n[1],
        zeta,
    ]);
    let jacobian = DMatrix::from_fn(3, 2, |row, j| match row {
        0 | 1 => {
            let delta = if row == j { 1.0 } else { 0.0 };
            delta + (cos_p - 1.0) * n[j] * n[row]
        }
        _ => sin_p * n[j],
    });
    let mut hessian = zero_hessian(2, 3);
    for j in 0..2 {
        for k in j..2 {
            let nn = n[j] * n[k];
            for comp in 0..2 {
                let v = -kappa * sin_p * nn * n[comp];
                hessian[comp][(j, k)] = v;
                hessian[comp][(k, j)] = v;
            }
            let v = kappa * cos_p * nn;
            hessian[2][(j, k)] = v;
            hessian[2][(k, j)] = v;
        }
    }
    AnalyticJet {
        value,
        jacobian,
        hessian,
    }
}

/// The explicit confinement map for ambient dimension >= 2m: each domain
/// coordinate winds a circle of radius `shell_radius / sqrt(2m)`, so the
/// whole image sits on a sphere of radius `shell_radius / sqrt(2)`.
pub(super) fn torus_jet(m: usize, d: usize, shell_radius: f64, x: &DVector<f64>) -> AnalyticJet {
    let omega = (2.0 * m as f64).sqrt() / shell_radius;
    let amp = shell_radius / (2.0 * m as f64).sqrt();
    let mut value = DVector::zeros(d);
    let mut jacobian = DMatrix::zeros(d, m);
    let mut hessian = zero_hessian(m, d);
    for i in 0..m {
        let (sin, cos) = (omega * x[i]).sin_cos();
        value[2 * i] = amp * cos;
        value[2 * i + 1] = amp * sin;
        jacobian[(2 * i, i)] = -sin;
        jacobian[(2 * i + 1, i)] = cos;
        hessian[2 * i][(i, i)] = -omega * cos;
        hessian[2 * i + 1][(i, i)] = -omega * sin;
    }
    AnalyticJet {
        value,
        jacobian,
        hessian,
    }
}

/// Latitude/longitude chart of the unit sphere; deliberately non-isometric
/// away from the equator. Used as a negative control.
pub(super) fn sphere_chart_jet(x: &DVector<f64>) -> AnalyticJet {
    let (s1, c1) = x[0].sin_cos();
    let (s2, c2) = x[1].sin_cos();
    let value = DVector::from_vec(vec![c1 * c2, c1 * s2, s1]);
    let jacobian = DMatrix::from_fn(3, 2, |row, j| match (row, j) {
        (0, 0) => -s1 * c2,
        (0, 1) => -c1 * s2,
        (1, 0) => -s1 * s2,
        (1, 1) => c1 * c2,
        (2, 0) => c1,
        _ => 0.0,
    });
    let mut hessian = zero_hessian(2, 3);
    // component 0: cos x1 cos x2
    hessian[0][(0, 0)] = -c1 * c2;
    hessian[0][(0, 1)] = s1 * s2;
    hessian[0][(1, 0)] = s1 * s2;
    hessian[0][(1, 1)] = -c1 * c2;
    // component 1: cos x1 sin x2
    hessian[1][(0, 0)] = -c1 * s2;
    hessian[1][(0, 1)] = -s1 * c2;
    hessian[1][(1, 0)] = -s1 * c2;
    hessian[1][(1, 1)] = -c1 * s2;
    // component 2: sin x1
    hessian[2][(0, 0)] = -s1;
    AnalyticJet {
        value,
        jacobian,
        hessian,
    }
}
