//! First- and second-order extrinsic invariants: strain, normal frames,
//! the second fundamental form, shape operators, flatness residuals and
//! principal curvatures.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::immersion::{ImmersionSpec, JetAtPoint};
use crate::tol;

/// Deviation of the pulled-back metric from the identity,
/// `u = J^T J - I` (symmetric by construction).
#[derive(Debug, Clone, PartialEq)]
pub struct StrainTensor {
    entries: DMatrix<f64>,
}

impl StrainTensor {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

pub fn strain(spec: &ImmersionSpec, x: &DVector<f64>) -> Result<StrainTensor> {
    Ok(strain_from_jet(&spec.jet(x)?))
}

pub fn strain_from_jet(jet: &JetAtPoint) -> StrainTensor {
    let m = jet.jacobian.ncols();
    // Entry (i, j) and (j, i) are the same dot product in the same order,
    // so the result is bitwise symmetric.
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let mut dot = jet.jacobian.column(i).dot(&jet.jacobian.column(j));
            if i == j {
                dot -= 1.0;
            }
            g[(i, j)] = dot;
            g[(j, i)] = dot;
        }
    }
    StrainTensor { entries: g }
}

/// Orthonormal basis of the normal space at a point, each vector orthogonal
/// to all jacobian columns.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFrame {
    vectors: Vec<DVector<f64>>,
}

impl NormalFrame {
    pub fn vectors(&self) -> &[DVector<f64>] {
        &self.vectors
    }

    pub fn codim(&self) -> usize {
        self.vectors.len()
    }

    /// Apply an orthogonal change of frame `Q` ((d-m) x (d-m)): the new
    /// a-th vector is `sum_b Q[b, a] n_b`.
    pub fn rotated(&self, q: &DMatrix<f64>) -> NormalFrame {
        let k = self.vectors.len();
        assert_eq!(q.nrows(), k);
        assert_eq!(q.ncols(), k);
        let d = self.vectors[0].len();
        let vectors = (0..k)
            .map(|a| {
                let mut v = DVector::zeros(d);
                for b in 0..k {
                    v += &self.vectors[b] * q[(b, a)];
                }
                v
            })
            .collect();
        NormalFrame { vectors }
    }

    /// Max orthonormality defect among the frame vectors.
    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.vectors.len();
        let mut worst: f64 = 0.0;
        for a in 0..k {
            worst = worst.max((self.vectors[a].norm() - 1.0).abs());
            for b in (a + 1)..k {
                worst = worst.max(self.vectors[a].dot(&self.vectors[b]).abs());
            }
        }
        worst
    }
}

/// Orthonormalized tangent basis (jacobian columns after Gram-Schmidt).
fn tangent_basis(jacobian: &DMatrix<f64>) -> Result<Vec<DVector<f64>>> {
    let m = jacobian.ncols();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(m);
    for j in 0..m {
        let mut v: DVector<f64> = jacobian.column(j).into();
        let scale = v.norm();
        // two passes for numerical orthogonality
        for _ in 0..2 {
            for t in &basis {
                let c = t.dot(&v);
                v -= t * c;
            }
        }
        let n = v.norm();
        if n <= 1e-12 * scale.max(1.0) {
            return Err(Error::DegenerateImmersion);
        }
        basis.push(v / n);
    }
    Ok(basis)
}

/// Deterministic orthonormal completion of the tangent space: the canonical
/// ambient basis vectors are orthogonalized against the tangents and the
/// already-chosen normals, choosing at each step the candidate with the
/// largest residual norm (ties broken by lowest index).
pub fn normal_frame(spec: &ImmersionSpec, x: &DVector<f64>) -> Result<NormalFrame> {
    normal_frame_from_jet(&spec.jet(x)?)
}

pub fn normal_frame_from_jet(jet: &JetAtPoint) -> Result<NormalFrame> {
    let d = jet.jacobian.nrows();
    let m = jet.jacobian.ncols();
    let tangents = tangent_basis(&jet.jacobian)?;
    let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(d - m);
    while chosen.len() < d - m {
        let mut best: Option<(f64, usize, DVector<f64>)> = None;
        for i in 0..d {
            let mut v = DVector::zeros(d);
            v[i] = 1.0;
            for _ in 0..2 {
                for t in tangents.iter().chain(chosen.iter()) {
                    let c = t.dot(&v);
                    v -= t * c;
                }
            }
            let n = v.norm();
            if best.as_ref().map_or(true, |(bn, _, _)| n > *bn) {
                best = Some((n, i, v));
            }
        }
        let (n, _, v) = best.expect("d >= 1 candidates");
        if n <= 1e-12 {
            return Err(Error::DegenerateImmersion);
        }
        chosen.push(v / n);
    }
    Ok(NormalFrame { vectors: chosen })
}

/// The vector-valued second fundamental form `K^a_{jk} = (d^2 phi / dx_j dx_k) . n_a`
/// in a given normal frame, plus the tangential remainder of the hessian as
/// a diagnostic (it must vanish when the strain vanishes).
#[derive(Debug, Clone)]
pub struct SecondForm {
    /// One m x m symmetric matrix per frame normal.
    components: Vec<DMatrix<f64>>,
    frame: NormalFrame,
    /// Largest |hessian . tangent| over all index pairs: the part of the
    /// hessian not captured by the normal decomposition.
    tangential_max: f64,
}

impl SecondForm {
    pub fn components(&self) -> &[DMatrix<f64>] {
        &self.components
    }

    pub fn frame(&self) -> &NormalFrame {
        &self.frame
    }

    pub fn codim(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].nrows()
    }

    pub fn tangential_max(&self) -> f64 {
        self.tangential_max
    }

    /// The normal-space vector `alpha(e_j, e_k)` expressed in the frame.
    pub fn alpha(&self, j: usize, k: usize) -> DVector<f64> {
        DVector::from_iterator(
            self.components.len(),
            self.components.iter().map(|c| c[(j, k)]),
        )
    }

    /// Largest absolute component, the curvature bound `K`.
    pub fn max_component(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

pub fn second_form(
    spec: &ImmersionSpec,
    x: &DVector<f64>,
    frame: &NormalFrame,
) -> Result<SecondForm> {
    second_form_from_jet(&spec.jet(x)?, frame)
}

pub fn second_form_from_jet(jet: &JetAtPoint, frame: &NormalFrame) -> Result<SecondForm> {
    let m = jet.jacobian.ncols();
    let strain_max = strain_from_jet(jet).max_abs();
    if strain_max > tol::ISOMETRY_WARN {
        log::warn!(
            "second form requested at a strained point (max strain {strain_max:.3e}); \
             the normal/tangential split of the hessian is only exact for isometries"
        );
    }
    let tangents = tangent_basis(&jet.jacobian)?;
    let k = frame.codim();
    let mut components = vec![DMatrix::zeros(m, m); k];
    let mut tangential_max: f64 = 0.0;
    for j in 0..m {
        for l in j..m {
            let hess = jet.second_derivative(j, l);
            for (a, n) in frame.vectors().iter().enumerate() {
                let v = n.dot(&hess);
                components[a][(j, l)] = v;
                components[a][(l, j)] = v;
            }
            for t in &tangents {
                tangential_max = tangential_max.max(t.dot(&hess).abs());
            }
        }
    }
    Ok(SecondForm {
        components,
        frame: frame.clone(),
        tangential_max,
    })
}

/// Shape operator `A_xi = sum_a xi_a K^a` for unit normal coefficients `xi`
/// in the form's frame. Non-unit input is normalized with a warning.
pub fn shape_operator(form: &SecondForm, xi: &DVector<f64>) -> Result<DMatrix<f64>> {
    if xi.len() != form.codim() {
        return Err(Error::Validation(format!(
            "xi has {} coefficients, frame has {}",
            xi.len(),
            form.codim()
        )));
    }
    let norm = xi.norm();
    if norm == 0.0 {
        return Err(Error::Validation("xi must be nonzero".into()));
    }
    let mut xi = xi.clone();
    if (norm - 1.0).abs() > 1e-12 {
        log::warn!("shape operator: normalizing non-unit xi (|xi| = {norm})");
        xi /= norm;
    }
    let m = form.dim();
    let mut a = DMatrix::zeros(m, m);
    for (coeff, comp) in xi.iter().zip(form.components()) {
        a += comp * *coeff;
    }
    Ok(a)
}

/// Largest violation, over coordinate 4-tuples, of
/// `<alpha(X,W), alpha(Y,Z)> = <alpha(X,Z), alpha(Y,W)>`.
/// Zero (to rounding) for isometric immersions of a flat disk into flat space.
pub fn gauss_residual(form: &SecondForm) -> f64 {
    gauss_residual_slices(form.components())
}

pub(crate) fn gauss_residual_slices(slices: &[DMatrix<f64>]) -> f64 {
    let m = slices[0].nrows();
    let dot = |j: usize, k: usize, l: usize, n: usize| -> f64 {
        slices.iter().map(|c| c[(j, k)] * c[(l, n)]).sum()
    };
    let mut worst: f64 = 0.0;
    for x in 0..m {
        for y in 0..m {
            for z in 0..m {
                for w in 0..m {
                    let r = dot(x, w, y, z) - dot(x, z, y, w);
                    worst = worst.max(r.abs());
                }
            }
        }
    }
    worst
}

/// Result of the discrete Codazzi check: the residual together with the
/// differencing step it was measured at (compare against O(step)).
#[derive(Debug, Clone, Copy)]
pub struct CodazziResidual {
    pub residual: f64,
    pub step: f64,
}

/// Antisymmetrized derivative of the normal part of the hessian, projected
/// back onto the normal space: `P_perp(D_j alpha(e_k, e_l) - D_k alpha(e_j, e_l))`.
/// Central differences in the interior; one-sided within `2*step` of the rim.
pub fn codazzi_residual(spec: &ImmersionSpec, x: &DVector<f64>, step: f64) -> Result<CodazziResidual> {
    let m = spec.domain_dim();
    let jet0 = spec.jet(x)?;
    let tangents0 = tangent_basis(&jet0.jacobian)?;

    // Full ambient-valued normal part of the hessian at a point.
    let alpha_at = |y: &DVector<f64>| -> Result<Vec<Vec<DVector<f64>>>> {
        let jet = spec.jet(y)?;
        let tans = tangent_basis(&jet.jacobian)?;
        let mut out = vec![vec![DVector::zeros(spec.ambient_dim()); m]; m];
        for j in 0..m {
            for k in j..m {
                let mut v = jet.second_derivative(j, k);
                for t in &tans {
                    let c = t.dot(&v);
                    v -= t * c;
                }
                out[j][k] = v.clone();
                out[k][j] = v;
            }
        }
        Ok(out)
    };

    // d(alpha)/dx_axis by central or one-sided differences, never leaving
    // the disk.
    let diff_along = |axis: usize| -> Result<Vec<Vec<DVector<f64>>>> {
        let mut plus = x.clone();
        plus[axis] += step;
        let mut minus = x.clone();
        minus[axis] -= step;
        let can_plus = plus.norm() <= 1.0 && !spec.excluded(&plus);
        let can_minus = minus.norm() <= 1.0 && !spec.excluded(&minus);
        let (a, b, denom) = match (can_plus, can_minus) {
            (true, true) => (alpha_at(&plus)?, alpha_at(&minus)?, 2.0 * step),
            (true, false) => (alpha_at(&plus)?, alpha_at(x)?, step),
            (false, true) => (alpha_at(x)?, alpha_at(&minus)?, step),
            (false, false) => {
                return Err(Error::Margin {
                    norm: x.norm(),
                    max_norm: 1.0 - step,
                })
            }
        };
        let mut out = vec![vec![DVector::zeros(spec.ambient_dim()); m]; m];
        for j in 0..m {
            for k in 0..m {
                out[j][k] = (&a[j][k] - &b[j][k]) / denom;
            }
        }
        Ok(out)
    };

    let grads: Vec<_> = (0..m).map(diff_along).collect::<Result<_>>()?;

    let mut worst: f64 = 0.0;
    for j in 0..m {
        for k in (j + 1)..m {
            for l in 0..m {
                let mut v = &grads[j][k][l] - &grads[k][j][l];
                for t in &tangents0 {
                    let c = t.dot(&v);
                    v -= t * c;
                }
                worst = worst.max(v.amax());
            }
        }
    }
    Ok(CodazziResidual {
        residual: worst,
        step,
    })
}

/// Sorted principal curvatures (codimension one only) and their product,
/// the Gaussian curvature.
#[derive(Debug, Clone)]
pub struct PrincipalCurvatures {
    pub values: Vec<f64>,
    pub gaussian: f64,
}

pub fn principal_curvatures(form: &SecondForm) -> Result<PrincipalCurvatures> {
    if form.codim() != 1 {
        return Err(Error::UnsupportedCodimension {
            codim: form.codim(),
        });
    }
    let eig = form.components()[0].clone().symmetric_eigen();
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    let gaussian = values.iter().product();
    Ok(PrincipalCurvatures { values, gaussian })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn torus_strain_vanishes() {
        let spec = ImmersionSpec::confinement_torus(2, 0.3).unwrap();
        for p in [[0.0, 0.0], [0.4, -0.3], [-0.7, 0.1]] {
            let u = strain(&spec, &dvector![p[0], p[1]]).unwrap();
            assert!(u.max_abs() <= 1e-14, "strain {}", u.max_abs());
        }
    }

    #[test]
    fn scaled_plane_strain_is_three_delta() {
        let spec = ImmersionSpec::scaled_plane(2, 3, 2.0).unwrap();
        let u = strain(&spec, &dvector![0.1, 0.2]).unwrap();
        assert!((u.entries()[(0, 0)] - 3.0).abs() < 1e-15);
        assert!((u.entries()[(1, 1)] - 3.0).abs() < 1e-15);
        assert!(u.entries()[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn cylinder_strain_tiny_everywhere() {
        let spec = ImmersionSpec::cylinder(0.21, 0.9).unwrap();
        for p in [[0.3, 0.2], [-0.8, 0.1], [0.0, -0.9]] {
            let u = strain(&spec, &dvector![p[0], p[1]]).unwrap();
            assert!(u.max_abs() <= 1e-12);
        }
    }

    #[test]
    fn strain_bitwise_symmetric() {
        let spec = ImmersionSpec::sphere_chart();
        let u = strain(&spec, &dvector![0.3, 0.5]).unwrap();
        assert_eq!(u.entries()[(0, 1)], u.entries()[(1, 0)]);
    }

    #[test]
    fn plane_normal_frame_is_e3() {
        let spec = ImmersionSpec::plane(2, 3).unwrap();
        let frame = normal_frame(&spec, &dvector![0.3, -0.2]).unwrap();
        assert_eq!(frame.codim(), 1);
        assert_eq!(frame.vectors()[0], dvector![0.0, 0.0, 1.0]);
    }

    #[test]
    fn cylinder_normal_frame_is_radial() {
        // Oracle: cross product of the analytic tangents.
        let spec = ImmersionSpec::cylinder(0.25, 0.0).unwrap();
        let x = dvector![0.2, 0.3];
        let jet = spec.jet(&x).unwrap();
        let t0 = jet.jacobian.column(0);
        let t1 = jet.jacobian.column(1);
        let cross = dvector![
            t0[1] * t1[2] - t0[2] * t1[1],
            t0[2] * t1[0] - t0[0] * t1[2],
            t0[0] * t1[1] - t0[1] * t1[0]
        ];
        let frame = normal_frame(&spec, &x).unwrap();
        let n = &frame.vectors()[0];
        let align = n.dot(&cross).abs() / cross.norm();
        assert!((align - 1.0).abs() < 1e-12);
        assert!(frame.orthonormality_defect() < tol::FRAME_ORTHO);
        assert!(n.dot(&t0.into_owned()).abs() < tol::FRAME_TANGENT);
    }

    #[test]
    fn circle_normal_frame_is_radial() {
        let spec = ImmersionSpec::confinement_torus(1, 0.5).unwrap();
        let x = dvector![0.3];
        let frame = normal_frame(&spec, &x).unwrap();
        let jet = spec.jet(&x).unwrap();
        // the normal must be parallel to the position on the circle
        let y = &jet.value;
        let n = &frame.vectors()[0];
        assert!((n.dot(y).abs() / y.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cylinder_second_form_in_axis_basis() {
        let rho = 0.25;
        let spec = ImmersionSpec::cylinder(rho, 0.0).unwrap();
        let x = dvector![0.1, 0.4];
        let frame = normal_frame(&spec, &x).unwrap();
        let form = second_form(&spec, &x, &frame).unwrap();
        let k = &form.components()[0];
        assert!(k[(0, 0)].abs() < 1e-12);
        assert!(k[(0, 1)].abs() < 1e-12);
        assert!((k[(1, 1)].abs() - 1.0 / rho).abs() < 1e-10);
        assert!(form.tangential_max() < 1e-10);
    }

    #[test]
    fn torus_second_form_diagonal_norms() {
        let spec = ImmersionSpec::confinement_torus(2, 0.5).unwrap();
        let x = dvector![0.2, -0.3];
        let frame = normal_frame(&spec, &x).unwrap();
        let form = second_form(&spec, &x, &frame).unwrap();
        for i in 0..2 {
            let a = form.alpha(i, i);
            assert!((a.norm() - 4.0).abs() < 1e-10, "per-direction norm sqrt(2m)/R_s");
        }
        assert!(form.alpha(0, 1).norm() < 1e-10);
    }

    #[test]
    fn shape_operator_cases() {
        let rho = 0.25;
        let spec = ImmersionSpec::cylinder(rho, 0.0).unwrap();
        let x = dvector![0.1, 0.4];
        let frame = normal_frame(&spec, &x).unwrap();
        let form = second_form(&spec, &x, &frame).unwrap();
        let a = shape_operator(&form, &dvector![1.0]).unwrap();
        let eig = a.symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().map(|v| v.abs()).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(vals[0] < 1e-12);
        assert!((vals[1] - 1.0 / rho).abs() < 1e-10);
    }

    #[test]
    fn shape_operator_linear_in_xi() {
        let spec = ImmersionSpec::confinement_torus(2, 0.5).unwrap();
        let x = dvector![0.2, 0.1];
        let frame = normal_frame(&spec, &x).unwrap();
        let form = second_form(&spec, &x, &frame).unwrap();
        let inv = 1.0 / 2.0f64.sqrt();
        let xi = dvector![inv, inv];
        let combined = shape_operator(&form, &xi).unwrap();
        let a0 = shape_operator(&form, &dvector![1.0, 0.0]).unwrap();
        let a1 = shape_operator(&form, &dvector![0.0, 1.0]).unwrap();
        assert!(((&a0 * inv + &a1 * inv) - combined).norm() < 1e-12);
    }

    #[test]
    fn zero_form_shape_operator_zero() {
        let spec = ImmersionSpec::plane(2, 4).unwrap();
        let x = dvector![0.0, 0.0];
        let frame = normal_frame(&spec, &x).unwrap();
        let form = second_form(&spec, &x, &frame).unwrap();
        let a = shape_operator(&form, &dvector![0.6, 0.8]).unwrap();
        assert_eq!(a.norm(), 0.0);
    }

    #[test]
    fn gauss_residual_flat_families() {
        let plane = ImmersionSpec::plane(2, 3).unwrap();
        let x = dvector![0.2, 0.2];
        let frame = normal_frame(&plane, &x).unwrap();
        let form = second_form(&plane, &x, &frame).unwrap();
        assert_eq!(gauss_residual(&form), 0.0);

        let flap = ImmersionSpec::bent_flap_disk(4.0, 0.5).unwrap();
        let x = dvector![0.1, -0.7];
        let frame = normal_frame(&flap, &x).unwrap();
        let form = second_form(&flap, &x, &frame).unwrap();
        assert!(gauss_residual(&form) <= 1e-10);
    }

    #[test]
    fn sphere_chart_gauss_residual_large() {
        let spec = ImmersionSpec::sphere_chart();
        let x = dvector![0.0, 0.0]; // maps to the equator
        let frame = normal_frame(&spec, &x).unwrap();
        let form = second_form(&spec, &x, &frame).unwrap();
        assert!(gauss_residual(&form) >= 0.1);
    }

    #[test]
    fn sphere_chart_tangential_hessian_nonzero_off_equator() {
        let spec = ImmersionSpec::sphere_chart();
        let x = dvector![0.3, 0.2];
        let frame = normal_frame(&spec, &x).unwrap();
        let form = second_form(&spec, &x, &frame).unwrap();
        assert!(form.tangential_max() > 0.01);
    }

    #[test]
    fn codazzi_plane_zero_cylinder_small() {
        let plane = ImmersionSpec::plane(2, 3).unwrap();
        let r = codazzi_residual(&plane, &dvector![0.1, 0.1], 0.02).unwrap();
        assert_eq!(r.residual, 0.0);

        let h = 0.02;
        let cyl = ImmersionSpec::cylinder(0.25, 0.3).unwrap();
        let r = codazzi_residual(&cyl, &dvector![0.2, -0.1], h).unwrap();
        assert!(r.residual <= 5.0 * h, "residual {} step {}", r.residual, r.step);
        // discretization error: halving the step shrinks the residual
        let r2 = codazzi_residual(&cyl, &dvector![0.2, -0.1], h / 2.0).unwrap();
        assert!(r2.residual <= r.residual + 1e-12);

        let torus = ImmersionSpec::confinement_torus(2, 0.5).unwrap();
        let r = codazzi_residual(&torus, &dvector![0.3, 0.2], h).unwrap();
        assert!(r.residual <= 5.0 * h);
    }

    #[test]
    fn codazzi_one_sided_near_rim() {
        let cyl = ImmersionSpec::cylinder(0.25, 0.0).unwrap();
        let r = codazzi_residual(&cyl, &dvector![0.999, 0.0], 0.02).unwrap();
        assert!(r.residual.is_finite());
    }

    #[test]
    fn principal_curvature_cases() {
        let plane = ImmersionSpec::plane(2, 3).unwrap();
        let x = dvector![0.1, 0.1];
        let frame = normal_frame(&plane, &x).unwrap();
        let pc = principal_curvatures(&second_form(&plane, &x, &frame).unwrap()).unwrap();
        assert_eq!(pc.values, vec![0.0, 0.0]);
        assert_eq!(pc.gaussian, 0.0);

        let cyl = ImmersionSpec::cylinder(0.25, 0.0).unwrap();
        let frame = normal_frame(&cyl, &x).unwrap();
        let pc = principal_curvatures(&second_form(&cyl, &x, &frame).unwrap()).unwrap();
        let mut mags: Vec<f64> = pc.values.iter().map(|v| v.abs()).collect();
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(mags[0] < 1e-12 && (mags[1] - 4.0).abs() < 1e-10);
        assert!(pc.gaussian.abs() < 1e-10);

        let sphere = ImmersionSpec::sphere_chart();
        let x0 = dvector![0.0, 0.0]; // induced metric is the identity here
        let frame = normal_frame(&sphere, &x0).unwrap();
        let pc = principal_curvatures(&second_form(&sphere, &x0, &frame).unwrap()).unwrap();
        assert!((pc.gaussian - 1.0).abs() < 1e-6);

        let torus = ImmersionSpec::confinement_torus(2, 0.5).unwrap();
        let frame = normal_frame(&torus, &x).unwrap();
        let err = principal_curvatures(&second_form(&torus, &x, &frame).unwrap());
        assert!(matches!(err, Err(Error::UnsupportedCodimension { codim: 2 })));
    }

    #[test]
    fn strain_and_sff_converge_second_order() {
        let spec = ImmersionSpec::cylinder(0.25, 0.4).unwrap();
        let x = dvector![0.2, 0.1];
        let frame = normal_frame(&spec, &x).unwrap();
        let exact = second_form(&spec, &x, &frame).unwrap();
        let mut strain_errs = Vec::new();
        let mut sff_errs = Vec::new();
        for level in 0..3 {
            let h = 0.02 / f64::powi(2.0, level);
            let fd = spec.clone().with_central_differences(h, 2).unwrap();
            let u = strain(&fd, &x).unwrap();
            strain_errs.push(u.max_abs().max(1e-18));
            let form = second_form(&fd, &x, &frame).unwrap();
            let err = (&form.components()[0] - &exact.components()[0]).norm();
            sff_errs.push(err.max(1e-18));
        }
        let slope_strain = (strain_errs[0] / strain_errs[2]).log2() / 2.0;
        let slope_sff = (sff_errs[0] / sff_errs[2]).log2() / 2.0;
        assert!(slope_strain >= 1.9, "strain slope {slope_strain:.2}");
        assert!(slope_sff >= 1.9, "sff slope {slope_sff:.2}");
    }
}
