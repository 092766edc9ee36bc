mod common;

use common::*;
use klshell::discretization::*;
use klshell::nurbs::{Direction, NurbsSurface};
use klshell::postprocess::SolutionField;
use klshell::shell::{membrane_strain_op, ShellMaterial};
use proptest::prelude::*;

const KINDS: [ElementKind; 2] = [ElementKind::Cs, ElementKind::Cas];

fn patches(seed: u64) -> Vec<Patch> {
    vec![
        Patch::new(random_patch(seed, 3, 2)),
        Patch::new(cylinder(1.5, 2.0, 3, 3)),
        Patch::new(sphere_band(2.0, 2, 3)),
    ]
}

/// Spline coefficients of `t^power` for a quadratic knot vector (blossom values).
fn monomial_coefficients(knots: &[f64], power: usize) -> Vec<f64> {
    (0..knots.len() - 3)
        .map(|i| match power {
            0 => 1.0,
            1 => 0.5 * (knots[i + 1] + knots[i + 2]),
            _ => knots[i + 1] * knots[i + 2],
        })
        .collect()
}

proptest! {
    #![proptest_config(cases(16))]

    #[test]
    fn element_stiffness_is_symmetric(seed in 0u64..1000, q in 2usize..4) {
        let mat = material();
        let rule = gauss_rule(q).unwrap();
        for p in patches(seed) {
            for kind in KINDS {
                for e in p.elements() {
                    let k = element_stiffness(&p, e, &mat, &rule, kind).unwrap().total();
                    let n = 3 * e.cps.len();
                    let scale = common::max_abs(&k);
                    for i in 0..n {
                        for j in 0..i {
                            prop_assert!((k[i * n + j] - k[j * n + i]).abs() <= 1e-10 * scale);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rigid_motions_are_annihilated(seed in 0u64..1000, c in prop::array::uniform3(-1.0..1.0f64), w in prop::array::uniform3(-1.0..1.0f64)) {
        let mat = material();
        let rule = gauss_rule(3).unwrap();
        for p in patches(seed) {
            let u = rigid_motion(p.surface(), c, w);
            for kind in KINDS {
                let k = assemble(&p, &mat, &rule, kind).unwrap();
                let r = k.mul_vec(&u);
                prop_assert!(max_abs(&r) <= 1e-10 * k.norm_inf() * max_abs(&u), "{kind}: {}", max_abs(&r));
            }
        }
    }

    #[test]
    fn assumed_strains_reproduce_compatible_strains_at_corners(seed in 0u64..1000) {
        for p in patches(seed) {
            for e in p.elements() {
                let corners = p.corner_membrane_ops(e).unwrap();
                for (k, &(t1, t2)) in e.corners().iter().enumerate() {
                    let (b, f) = p.eval_in(e, t1, t2).unwrap();
                    prop_assert_eq!(&membrane_strain_op(&f, &b), &corners[k]);
                    let xi = if k % 2 == 0 { -1.0 } else { 1.0 };
                    let eta = if k < 2 { -1.0 } else { 1.0 };
                    prop_assert_eq!(&Patch::assumed_membrane_op(&corners, xi, eta), &corners[k]);
                }
            }
        }
    }

    #[test]
    fn assumed_strains_are_continuous_across_element_edges(seed in 0u64..1000, s in -1.0..=1.0f64) {
        let mat = material();
        for p in patches(seed) {
            let u = random_vector(seed, p.num_dofs());
            let field = SolutionField::new(p.clone(), u, ElementKind::Cas, mat).unwrap();
            let (nu, nv) = p.mesh();
            let el = |i: usize, j: usize| &p.elements()[i + nu * j];
            let mut scale = 0.0f64;
            let mut worst = 0.0f64;
            for j in 0..nv {
                for i in 0..nu {
                    let here = el(i, j);
                    let mut pairs = Vec::new();
                    if i + 1 < nu {
                        pairs.push((el(i + 1, j), (1.0, s), (-1.0, s)));
                    }
                    if j + 1 < nv {
                        pairs.push((el(i, j + 1), (s, 1.0), (s, -1.0)));
                    }
                    for (there, a, b) in pairs {
                        let x = &field.element_states(here, &[a]).unwrap()[0];
                        let y = &field.element_states(there, &[b]).unwrap()[0];
                        prop_assert!((x.x - y.x).norm() <= 1e-13);
                        let d = x.membrane.as_matrix() - y.membrane.as_matrix();
                        worst = worst.max(d.abs().max());
                        scale = scale.max(x.membrane.as_matrix().abs().max());
                    }
                }
            }
            prop_assert!(worst <= 1e-12 * scale, "edge jump {worst} vs {scale}");
        }
    }

    #[test]
    fn cs_and_cas_share_the_sparsity_pattern(seed in 0u64..1000) {
        let mat = material();
        let rule = gauss_rule(2).unwrap();
        for p in patches(seed) {
            let a = assemble(&p, &mat, &rule, ElementKind::Cs).unwrap();
            let b = assemble(&p, &mat, &rule, ElementKind::Cas).unwrap();
            prop_assert_eq!(a.dim(), b.dim());
            for i in 0..a.dim() {
                prop_assert_eq!(a.row_columns(i), b.row_columns(i));
            }
        }
    }

    #[test]
    fn cas_changes_only_the_membrane_part(seed in 0u64..1000) {
        let mat = material();
        let rule = gauss_rule(3).unwrap();
        for p in patches(seed) {
            for e in p.elements() {
                let a = element_stiffness(&p, e, &mat, &rule, ElementKind::Cs).unwrap();
                let b = element_stiffness(&p, e, &mat, &rule, ElementKind::Cas).unwrap();
                prop_assert_eq!(&a.bending, &b.bending);
            }
        }
    }

    #[test]
    fn energy_identity(seed in 0u64..1000, q in 2usize..4) {
        let mat = material();
        let rule = gauss_rule(q).unwrap();
        for p in patches(seed) {
            let u = random_vector(seed + 1, p.num_dofs());
            for kind in KINDS {
                let k = assemble(&p, &mat, &rule, kind).unwrap();
                let quad_form = 0.5 * u.iter().zip(k.mul_vec(&u)).map(|(a, b)| a * b).sum::<f64>();
                let field = SolutionField::new(p.clone(), u.clone(), kind, mat).unwrap();
                let e = field.energies(&rule).unwrap();
                prop_assert!((e.total - quad_form).abs() <= 1e-10 * quad_form, "{kind}: {} vs {quad_form}", e.total);
                prop_assert!((e.membrane + e.bending - e.total).abs() <= 1e-14 * e.total);
                prop_assert!(e.membrane >= 0.0 && e.bending >= 0.0);
            }
        }
    }

    #[test]
    fn cas_is_exact_for_linear_strain_fields_on_affine_patches(
        coef in prop::array::uniform18(-1.0..1.0f64), t1 in 0.0..=1.0f64, t2 in 0.0..=1.0f64, nu in 1usize..4, nv in 1usize..4,
    ) {
        // displacement components of total degree <= 2 in the parameters have linear strains,
        // which bilinear corner interpolation reproduces
        let s = flat_affine([2.0, 0.3, 0.0], [-0.4, 1.5, 0.0], nu, nv);
        let cu = |p| monomial_coefficients(s.knots(Direction::U).knots(), p);
        let cv = |p| monomial_coefficients(s.knots(Direction::V).knots(), p);
        let monomials = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2)];
        let (gu, gv) = s.grid();
        let mut u = vec![0.0; 3 * gu * gv];
        for (m, &(a, b)) in monomials.iter().enumerate() {
            let (ca, cb) = (cu(a), cv(b));
            for j in 0..gv {
                for i in 0..gu {
                    for comp in 0..3 {
                        u[3 * (i + gu * j) + comp] += coef[3 * m + comp] * ca[i] * cb[j];
                    }
                }
            }
        }
        let p = Patch::new(s);
        let mat = material();
        let cs = SolutionField::new(p.clone(), u.clone(), ElementKind::Cs, mat).unwrap();
        let cas = SolutionField::new(p, u, ElementKind::Cas, mat).unwrap();
        let (a, b) = (cs.state_at(t1, t2).unwrap(), cas.state_at(t1, t2).unwrap());
        let d = (a.membrane.as_matrix() - b.membrane.as_matrix()).abs().max();
        prop_assert!(d <= 1e-12 * (1.0 + a.membrane.as_matrix().abs().max()), "{d}");
    }
}

#[test]
fn assembly_is_deterministic() {
    let p = Patch::new(random_patch(11, 4, 4));
    let rule = gauss_rule(3).unwrap();
    let a = assemble(&p, &material(), &rule, ElementKind::Cas).unwrap();
    let b = assemble(&p, &material(), &rule, ElementKind::Cas).unwrap();
    assert_eq!(a, b);
}

#[test]
fn element_stiffness_is_positive_semidefinite_with_six_rigid_modes_for_cs() {
    let p = Patch::new(random_patch(3, 1, 1));
    let rule = gauss_rule(3).unwrap();
    let e = &p.elements()[0];
    let k = element_stiffness(&p, e, &material(), &rule, ElementKind::Cs).unwrap();
    let n = k.n;
    let m = nalgebra::DMatrix::from_row_slice(n, n, &k.total());
    let ev = m.symmetric_eigenvalues();
    let top = ev.max();
    assert!(ev.min() >= -1e-12 * top);
    let zeros = ev.iter().filter(|&&v| v.abs() <= 1e-10 * top).count();
    assert_eq!(zeros, 6);
}

#[test]
fn total_loads_are_conserved() {
    let s = cylinder(1.5, 2.0, 3, 2);
    let p = Patch::new(s);
    let rule = QuadratureRule::gauss(4);
    let f = load_area(&p, &rule, |_| nalgebra::Vector3::new(0.0, 0.0, -2.0)).unwrap();
    let area = std::f64::consts::FRAC_PI_2 * 1.5 * 2.0;
    let fz: f64 = f.iter().skip(2).step_by(3).sum();
    assert!((fz + 2.0 * area).abs() <= 1e-10 * area, "{fz}");
    let f = load_edge_line(&p, Edge::U0, 3, nalgebra::Vector3::new(0.5, 0.0, 0.0)).unwrap();
    let fx: f64 = f.iter().step_by(3).sum();
    assert!((fx - 0.5 * 2.0).abs() <= 1e-13);
    let f = load_point(&p, 0.3, 0.7, nalgebra::Vector3::new(0.0, 1.0, 0.0)).unwrap();
    let fy: f64 = f.iter().skip(1).step_by(3).sum();
    assert!((fy - 1.0).abs() <= 1e-14);
}

#[test]
fn cas_requires_quadratic_basis() {
    let p = Patch::new(
        NurbsSurface::new(
            klshell::nurbs::KnotVector::uniform(1, 1).unwrap(),
            klshell::nurbs::KnotVector::uniform(1, 1).unwrap(),
            vec![[0.0, 0.0, 0.0, 1.0], [1.0, 0.0, 0.0, 1.0], [0.0, 1.0, 0.0, 1.0], [1.0, 1.0, 0.0, 1.0]],
        )
        .unwrap(),
    );
    let mat = ShellMaterial::new(1.0, 0.0, 0.1).unwrap();
    assert!(assemble(&p, &mat, &gauss_rule(2).unwrap(), ElementKind::Cas).is_err());
    assert!(gauss_rule(4).is_err());
}

#[test]
fn tied_and_fixed_dofs_are_eliminated_consistently() {
    let p = Patch::new(flat_affine([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 2, 2));
    let rule = gauss_rule(3).unwrap();
    let k = assemble(&p, &material(), &rule, ElementKind::Cs).unwrap();
    let n = p.num_dofs();
    let mut c = Constraints::new();
    let row0 = p.edge_row(Edge::U0, 0);
    c.fix_points(&row0, &[0, 1, 2]);
    let row1 = p.edge_row(Edge::U0, 1);
    for (&a, &b) in row1.iter().zip(&row0) {
        c.tie(3 * a + 2, 3 * b + 2);
    }
    let f = random_vector(5, n);
    let sys = GlobalSystem { k: k.clone(), f: f.clone(), constraints: c };
    let red = apply_constraints(&sys).unwrap();
    let ur = random_vector(6, red.k.dim());
    let u = red.recover(&ur);
    // reduced quadratic form equals the full one on the constrained subspace
    let full = u.iter().zip(k.mul_vec(&u)).map(|(a, b)| a * b).sum::<f64>();
    let reduced = ur.iter().zip(red.k.mul_vec(&ur)).map(|(a, b)| a * b).sum::<f64>();
    assert!((full - reduced).abs() <= 1e-12 * full.abs());
    let work_full = u.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>();
    let work_red = ur.iter().zip(&red.f).map(|(a, b)| a * b).sum::<f64>();
    assert!((work_full - work_red).abs() <= 1e-12 * work_full.abs().max(1.0));
    for &c in &row0 {
        assert_eq!(u[3 * c..3 * c + 3], [0.0; 3]);
    }
}
