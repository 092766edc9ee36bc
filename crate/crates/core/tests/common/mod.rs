//! Geometry builders shared by the integration tests. None of them uses benchmark data.
#![allow(dead_code)]

use klshell::nurbs::{Direction, KnotVector, NurbsSurface};
use klshell::shell::ShellMaterial;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const HALF_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub fn refine(s: NurbsSurface, nu: usize, nv: usize) -> NurbsSurface {
    s.subdivide(Direction::U, nu).unwrap().subdivide(Direction::V, nv).unwrap()
}

/// Single biquadratic Bezier element from a 3x3 net, first index fastest.
pub fn bezier(control: Vec<[f64; 4]>) -> NurbsSurface {
    let k = KnotVector::uniform(2, 1).unwrap();
    NurbsSurface::new(k.clone(), k, control).unwrap()
}

/// Parallelogram spanned by `a` and `b`, parameterized affinely.
pub fn flat_affine(a: [f64; 3], b: [f64; 3], nu: usize, nv: usize) -> NurbsSurface {
    let mut c = Vec::new();
    for j in 0..3 {
        for i in 0..3 {
            let (s, t) = (i as f64 / 2.0, j as f64 / 2.0);
            c.push([s * a[0] + t * b[0], s * a[1] + t * b[1], s * a[2] + t * b[2], 1.0]);
        }
    }
    refine(bezier(c), nu, nv)
}

/// Quarter cylinder of the given radius about the z axis, height `h`.
pub fn cylinder(radius: f64, h: f64, nu: usize, nv: usize) -> NurbsSurface {
    let arc = [(1.0, 0.0, 1.0), (1.0, 1.0, HALF_SQRT2), (0.0, 1.0, 1.0)];
    let mut c = Vec::new();
    for j in 0..3 {
        let z = h * j as f64 / 2.0;
        for &(x, y, w) in &arc {
            c.push([radius * x, radius * y, z, w]);
        }
    }
    refine(bezier(c), nu, nv)
}

/// Sphere band between latitudes 0 and 60 degrees over a quarter turn of longitude.
pub fn sphere_band(radius: f64, nu: usize, nv: usize) -> NurbsSurface {
    let lon = [(1.0, 0.0, 1.0), (1.0, 1.0, HALF_SQRT2), (0.0, 1.0, 1.0)];
    let half = 30f64.to_radians();
    // profile arc in (r, z): end points at latitude 0 and 60 degrees, tangent intersection in between
    let lat = [
        (radius, 0.0, 1.0),
        (radius, radius * half.tan(), half.cos()),
        (radius * (2.0 * half).cos(), radius * (2.0 * half).sin(), 1.0),
    ];
    let mut c = Vec::new();
    for &(r, z, wz) in &lat {
        for &(x, y, wl) in &lon {
            c.push([r * x, r * y, z, wz * wl]);
        }
    }
    refine(bezier(c), nu, nv)
}

/// Smooth doubly curved rational patch with random control perturbations and weights.
pub fn random_patch(seed: u64, nu: usize, nv: usize) -> NurbsSurface {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Vec::new();
    for j in 0..3 {
        for i in 0..3 {
            let (x, y) = (i as f64, j as f64);
            c.push([
                x + rng.random_range(-0.15..0.15),
                y + rng.random_range(-0.15..0.15),
                0.3 * (x - 1.0) * (y - 1.0) + rng.random_range(-0.3..0.3),
                rng.random_range(0.7..1.3),
            ]);
        }
    }
    refine(bezier(c), nu, nv)
}

pub fn material() -> ShellMaterial {
    ShellMaterial::new(2.0e3, 0.3, 0.05).unwrap()
}

pub fn random_vector(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Displacement coefficients of the rigid motion `c + w x X`; exact because the basis sums to one.
pub fn rigid_motion(s: &NurbsSurface, c: [f64; 3], w: [f64; 3]) -> Vec<f64> {
    let mut u = Vec::with_capacity(3 * s.num_control_points());
    for i in 0..s.num_control_points() {
        let x = s.point(i);
        u.push(c[0] + w[1] * x[2] - w[2] * x[1]);
        u.push(c[1] + w[2] * x[0] - w[0] * x[2]);
        u.push(c[2] + w[0] * x[1] - w[1] * x[0]);
    }
    u
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Proptest configuration for integration tests, which have no source-adjacent regression file.
pub fn cases(n: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases: n,
        failure_persistence: None,
        ..Default::default()
    }
}
