//! Cross-module invariants: frame covariance, reparametrization invariance,
//! epsilon refinement of chains, and grid-level certificates.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nullitylab::generators::{chain_to_boundary, ChainParams};
use nullitylab::geometry::{
    gauss_residual, normal_frame, principal_curvatures, second_form,
};
use nullitylab::nullity::{kernel_basis, stratify, FlatForm};
use nullitylab::{DomainGrid, ImmersionSpec};

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| {
        let u1: f64 = rng.gen_range(1e-12..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    });
    g.qr().q()
}

fn random_point(rng: &mut ChaCha8Rng, spec: &ImmersionSpec) -> DVector<f64> {
    loop {
        let x = DVector::from_fn(spec.domain_dim(), |_, _| rng.gen_range(-0.8..0.8));
        if x.norm() <= 0.8 && !spec.excluded(&x) {
            if spec.family_id() == "cone" && (x[0] + 0.3).hypot(x[1]) < 0.15 {
                continue;
            }
            return x;
        }
    }
}

/// Subspace distance via projector difference.
fn span_mismatch(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let pa = a * a.transpose();
    let pb = b * b.transpose();
    (pa - pb).norm()
}

#[test]
fn normal_frame_rotation_leaves_invariants_alone() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let specs = vec![
        ImmersionSpec::plane(2, 4).unwrap(),
        ImmersionSpec::cylinder(0.3, 0.4).unwrap(),
        ImmersionSpec::cone(0.3, 0.5).unwrap(),
        ImmersionSpec::bent_flap_disk(4.0, 0.5).unwrap(),
        ImmersionSpec::confinement_torus(2, 0.4).unwrap(),
    ];
    for spec in &specs {
        for _ in 0..20 {
            let x = random_point(&mut rng, spec);
            let frame = normal_frame(spec, &x).unwrap();
            let q = random_orthogonal(&mut rng, frame.codim());
            let rotated = frame.rotated(&q);
            assert!(rotated.orthonormality_defect() < 1e-10);

            let base = second_form(spec, &x, &frame).unwrap();
            let rot = second_form(spec, &x, &rotated).unwrap();

            // gauss residual is frame-invariant
            assert!(
                (gauss_residual(&base) - gauss_residual(&rot)).abs() < 1e-9,
                "{} at {x:?}",
                spec.family_id()
            );

            // nullity index and kernel subspace are frame-invariant
            let kb = kernel_basis(&FlatForm::from_second_form(&base), 1e-6);
            let kr = kernel_basis(&FlatForm::from_second_form(&rot), 1e-6);
            assert_eq!(kb.nu, kr.nu, "{}", spec.family_id());
            if kb.nu > 0 {
                assert!(span_mismatch(&kb.basis, &kr.basis) < 1e-9);
            }

            // codimension-one spectra only move by the O(1) orientation sign
            if spec.codim() == 1 {
                let pa = principal_curvatures(&base).unwrap();
                let pb = principal_curvatures(&rot).unwrap();
                let mut ma: Vec<f64> = pa.values.iter().map(|v| v.abs()).collect();
                let mut mb: Vec<f64> = pb.values.iter().map(|v| v.abs()).collect();
                ma.sort_by(|a, b| a.partial_cmp(b).unwrap());
                mb.sort_by(|a, b| a.partial_cmp(b).unwrap());
                for (a, b) in ma.iter().zip(mb.iter()) {
                    assert!((a - b).abs() < 1e-9);
                }
                assert!((pa.gaussian - pb.gaussian).abs() < 1e-9, "m = 2 gaussian invariant");
            }
        }
    }
}

#[test]
fn domain_reparametrization_preserves_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let specs = vec![
        ImmersionSpec::cylinder(0.3, 0.9).unwrap(),
        ImmersionSpec::bent_flap_disk(3.0, 0.5).unwrap(),
        ImmersionSpec::confinement_torus(2, 0.5).unwrap(),
    ];
    for spec in &specs {
        for _ in 0..20 {
            let x = random_point(&mut rng, spec);
            let frame = normal_frame(spec, &x).unwrap();
            let form = FlatForm::from_second_form(&second_form(spec, &x, &frame).unwrap());
            let q = random_orthogonal(&mut rng, spec.domain_dim());
            let re = form.reparametrized(&q);
            let ka = kernel_basis(&form, 1e-6);
            let kb = kernel_basis(&re, 1e-6);
            assert_eq!(ka.nu, kb.nu);
            if ka.nu > 0 {
                // kernel transforms by Q^T
                let back = &q * &kb.basis;
                assert!(span_mismatch(&ka.basis, &back) < 1e-9);
            }
        }
    }
}

#[test]
fn chain_defect_non_increasing_under_epsilon_refinement() {
    let spec = ImmersionSpec::bent_flap_disk(4.0, 0.5).unwrap();
    let grid = DomainGrid::new(2, 201).unwrap();
    let field = stratify(&spec, &grid, 1e-6).unwrap();
    let center = DVector::zeros(2);
    let mut defects = Vec::new();
    for epsilon in [0.1, 0.05, 0.025] {
        let chain =
            chain_to_boundary(&spec, &center, epsilon, &field, &ChainParams::default()).unwrap();
        assert!(chain.measured_defect <= chain.defect_bound);
        defects.push(chain.measured_defect);
    }
    for w in defects.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "defects {defects:?}");
    }
    // the sequence extrapolates to zero: by the finest epsilon it sits at
    // the numerical floor
    assert!(defects[2] <= nullitylab::tol::DEFECT_FLOOR, "defects {defects:?}");
}

#[test]
fn analytic_families_certify_on_the_grid() {
    let specs = vec![
        ImmersionSpec::plane(2, 3).unwrap(),
        ImmersionSpec::cylinder(0.25, 0.3).unwrap(),
        ImmersionSpec::cone(0.3, 0.5).unwrap(),
        ImmersionSpec::bent_flap_disk(4.0, 0.5).unwrap(),
        ImmersionSpec::confinement_torus(1, 0.5).unwrap(),
        ImmersionSpec::confinement_torus(2, 0.1).unwrap(),
    ];
    for spec in &specs {
        let grid = DomainGrid::new(spec.domain_dim(), 61).unwrap();
        let mut max_strain: f64 = 0.0;
        let mut max_asym: f64 = 0.0;
        for flat in grid.masked_indices() {
            let x = grid.point(flat);
            if spec.excluded(&x) {
                continue;
            }
            let jet = spec.jet(&x).unwrap();
            max_asym = max_asym.max(jet.hessian_asymmetry());
            max_strain = max_strain.max(nullitylab::geometry::strain_from_jet(&jet).max_abs());
        }
        assert_eq!(max_asym, 0.0, "{} analytic hessian symmetry", spec.family_id());
        assert!(
            max_strain <= 1e-10,
            "{} max strain {max_strain:.3e}",
            spec.family_id()
        );
    }
}

#[test]
fn sampled_grid_certificates_degrade_as_h_squared() {
    let spec = ImmersionSpec::confinement_torus(2, 0.5).unwrap();
    let x = DVector::from_vec(vec![0.21, -0.17]);
    let mut asyms = Vec::new();
    for res in [51usize, 101] {
        let sampled = nullitylab::SampledGrid::sample(&spec, res).unwrap();
        let wrapped = ImmersionSpec::from_samples(sampled);
        let jet = wrapped.jet(&x).unwrap();
        let h = 2.0 / (res - 1) as f64;
        assert!(jet.hessian_asymmetry() <= 10.0 * h * h);
        asyms.push(jet.hessian_asymmetry());
    }
}
