mod common;

use common::*;
use klshell::nurbs::NurbsSurface;
use klshell::shell::*;
use nalgebra::{Matrix2, Vector3};
use proptest::prelude::*;

/// Local coefficient vector of a global displacement field on the element containing `(t1, t2)`.
fn local(s: &NurbsSurface, t1: f64, t2: f64, u: &[f64]) -> (SurfaceFrame, StrainTriple, StrainTriple) {
    let b = s.basis(t1, t2, 2).unwrap();
    let f = SurfaceFrame::from_point(&point_from_basis(s, &b), (t1, t2)).unwrap();
    let ul: Vec<f64> = s
        .local_indices(b.span_u, b.span_v)
        .iter()
        .flat_map(|&c| [u[3 * c], u[3 * c + 1], u[3 * c + 2]])
        .collect();
    let e = membrane_strain_op(&f, &b).apply(&ul);
    let k = bending_strain_op(&f, &b).apply(&ul);
    (f, e, k)
}

fn surfaces(seed: u64) -> Vec<NurbsSurface> {
    vec![random_patch(seed, 2, 3), cylinder(1.5, 2.0, 3, 2), sphere_band(2.0, 2, 2)]
}

fn small(t: &StrainTriple, scale: f64, tol: f64) -> bool {
    t.e11.abs().max(t.e22.abs()).max(t.e12.abs()) <= tol * scale
}

proptest! {
    #![proptest_config(cases(48))]

    #[test]
    fn frame_invariants(seed in 0u64..1000, t1 in 0.0..=1.0f64, t2 in 0.0..=1.0f64) {
        for s in surfaces(seed) {
            let f = frame_at(&s, t1, t2).unwrap();
            prop_assert!((f.a3.norm() - 1.0).abs() <= 1e-14);
            prop_assert!(f.a3.dot(&f.a1).abs() <= 1e-13 * f.a1.norm());
            prop_assert!(f.a3.dot(&f.a2).abs() <= 1e-13 * f.a2.norm());
            prop_assert!((f.a_cov * f.a_con - Matrix2::identity()).norm() <= 1e-12);
            prop_assert!((f.b_cov - f.b_cov.transpose()).norm() == 0.0);
            prop_assert!((f.e1.norm() - 1.0).abs() <= 1e-14 && (f.e2.norm() - 1.0).abs() <= 1e-14);
            prop_assert!(f.e1.dot(&f.e2).abs() <= 1e-14);
            prop_assert!(f.e1.cross(&f.e2).dot(&f.a3) > 0.0);
            prop_assert!((f.jac - f.a_cov.determinant().sqrt()).abs() <= 1e-12 * f.jac);
        }
    }

    #[test]
    fn conic_curvatures(t1 in 0.0..=1.0f64, t2 in 0.0..=1.0f64, nu in 1usize..5) {
        let f = frame_at(&sphere_band(2.0, nu, nu), t1, t2).unwrap();
        // outward-or-inward normal only flips the sign; umbilic point either way
        prop_assert!((f.b_mixed.abs() - Matrix2::identity() * 0.5).norm() <= 1e-12);
        let c = frame_at(&cylinder(1.5, 2.0, nu, 1), t1, t2).unwrap();
        prop_assert!(c.b_mixed.determinant().abs() <= 1e-12);
        prop_assert!((c.b_mixed.trace().abs() - 1.0 / 1.5).abs() <= 1e-12);
    }

    #[test]
    fn rigid_motions_produce_no_strain(seed in 0u64..1000, t1 in 0.0..=1.0f64, t2 in 0.0..=1.0f64,
                                       c in prop::array::uniform3(-1.0..1.0f64), w in prop::array::uniform3(-1.0..1.0f64)) {
        for s in surfaces(seed) {
            let u = rigid_motion(&s, c, w);
            let (f, e, k) = local(&s, t1, t2, &u);
            let scale = max_abs(&u);
            prop_assert!(small(&e, scale * f.a_cov.norm(), 1e-12), "membrane {e:?}");
            prop_assert!(small(&k, scale * f.b_cov.norm().max(1.0) * f.a_cov.norm(), 1e-11), "bending {k:?}");
        }
    }

    #[test]
    fn uniform_scaling_changes_metric_and_curvature_proportionally(seed in 0u64..1000, t1 in 0.0..=1.0f64, t2 in 0.0..=1.0f64, sc in -0.1..0.1f64) {
        for s in surfaces(seed) {
            let u: Vec<f64> = (0..s.num_control_points()).flat_map(|i| (s.point(i) * sc).iter().copied().collect::<Vec<_>>()).collect();
            let (f, e, k) = local(&s, t1, t2, &u);
            let de = e.as_matrix() - f.a_cov * sc;
            let dk = k.as_matrix() + f.b_cov * sc;
            prop_assert!(de.norm() <= 1e-12 * f.a_cov.norm());
            prop_assert!(dk.norm() <= 1e-11 * (1.0 + f.b_cov.norm()));
        }
    }

    #[test]
    fn explicit_law_matches_voigt_matrix(seed in 0u64..1000, t1 in 0.0..=1.0f64, t2 in 0.0..=1.0f64,
                                          e in prop::array::uniform3(-1.0..1.0f64), nu in 0.0..0.49f64) {
        let s = random_patch(seed, 1, 1);
        let f = frame_at(&s, t1, t2).unwrap();
        let mat = ShellMaterial::new(3.0, nu, 0.2).unwrap();
        let strain = StrainTriple::new(e[0], e[1], e[2]);
        for (law, c) in [
            (membrane_law(&strain, &f, &mat), membrane_matrix(&f, &mat)),
            (bending_law(&strain, &f, &mat), bending_matrix(&f, &mat)),
        ] {
            let v = c * strain.voigt();
            let got = Vector3::new(law.s11, law.s22, law.s12);
            prop_assert!((v - got).norm() <= 1e-12 * (1.0 + v.norm()));
            prop_assert!((c - c.transpose()).norm() <= 1e-13 * c.norm());
            prop_assert!(c.symmetric_eigenvalues().min() > 0.0);
        }
    }

    #[test]
    fn energy_density_is_invariant_under_cartesian_transform(seed in 0u64..1000, t1 in 0.0..=1.0f64, t2 in 0.0..=1.0f64,
                                                             e in prop::array::uniform3(-1.0..1.0f64)) {
        let s = random_patch(seed, 1, 1);
        let f = frame_at(&s, t1, t2).unwrap();
        let mat = ShellMaterial::new(3.0, 0.3, 0.2).unwrap();
        let strain = StrainTriple::new(e[0], e[1], e[2]);
        let n = membrane_law(&strain, &f, &mat);
        let density = n.contract(&strain);
        let nc = to_local_cartesian(&n, &f).unwrap();
        let ec = strain_to_local_cartesian(&strain, &f);
        prop_assert!((nc.contract(&ec) - density).abs() <= 1e-12 * (1.0 + density.abs()));
        prop_assert!(density >= 0.0);
    }
}

#[test]
fn transformed_resultants_cannot_be_transformed_again() {
    let f = frame_at(&cylinder(1.0, 1.0, 1, 1), 0.3, 0.3).unwrap();
    let n = ResultantTriple::curvilinear(1.0, 2.0, 0.5);
    let c = to_local_cartesian(&n, &f).unwrap();
    assert!(to_local_cartesian(&c, &f).is_err());
    assert!(effective_membrane(&c, &n, &f).is_err());
}

#[test]
fn effective_force_vanishes_correction_on_flat_surface() {
    let f = frame_at(&flat_affine([2.0, 0.0, 0.0], [0.5, 1.0, 0.0], 1, 1), 0.4, 0.6).unwrap();
    let n = ResultantTriple::curvilinear(1.0, -2.0, 0.25);
    let m = ResultantTriple::curvilinear(3.0, 4.0, 5.0);
    assert_eq!(effective_membrane(&n, &m, &f).unwrap(), n);
}
