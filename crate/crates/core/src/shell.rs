//! Pointwise Kirchhoff-Love kinematics and linear-elastic resultant laws in
//! curvilinear surface coordinates.
//!
//! Strain operators are materialized as dense rows over the element degrees of
//! freedom: column `3 * a + i` multiplies Cartesian component `i` of the control
//! displacement of local function `a`.

use nalgebra::{Matrix2, Matrix3, Vector3};

use crate::error::{Result, ShellError};
use crate::nurbs::{BasisEval, NurbsSurface, SurfacePoint};

/// Local geometry of the midsurface at one parametric point.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceFrame {
    pub a1: Vector3<f64>,
    pub a2: Vector3<f64>,
    /// Unit normal `a1 x a2 / |a1 x a2|`.
    pub a3: Vector3<f64>,
    pub a_cov: Matrix2<f64>,
    pub a_con: Matrix2<f64>,
    pub b_cov: Matrix2<f64>,
    /// `b^a_b = a^{al} b_{lb}`; row index raised.
    pub b_mixed: Matrix2<f64>,
    pub e1: Vector3<f64>,
    pub e2: Vector3<f64>,
    /// Area density `sqrt(det a_cov)`.
    pub jac: f64,
    /// Second parametric derivatives `(r_11, r_22, r_12)`.
    pub r_d2: [Vector3<f64>; 3],
}

impl SurfaceFrame {
    /// Build the frame from position derivatives; `at` is only used for error reporting.
    pub fn from_point(p: &SurfacePoint, at: (f64, f64)) -> Result<Self> {
        let [a1, a2] = p.d1;
        let n = a1.cross(&a2);
        let jac = n.norm();
        let scale = a1.norm() * a2.norm();
        if !jac.is_finite() || jac <= 1e-12 * scale {
            return Err(ShellError::SingularGeometry(at.0, at.1));
        }
        let a3 = n / jac;
        let a_cov = Matrix2::new(a1.dot(&a1), a1.dot(&a2), a2.dot(&a1), a2.dot(&a2));
        let det = a_cov[(0, 0)] * a_cov[(1, 1)] - a_cov[(0, 1)] * a_cov[(1, 0)];
        let a_con = Matrix2::new(a_cov[(1, 1)], -a_cov[(0, 1)], -a_cov[(1, 0)], a_cov[(0, 0)]) / det;
        let [r11, r22, r12] = p.d2;
        let b12 = r12.dot(&a3);
        let b_cov = Matrix2::new(r11.dot(&a3), b12, b12, r22.dot(&a3));
        let b_mixed = a_con * b_cov;
        let e1 = a1.normalize();
        let e2 = (a2 - e1 * a2.dot(&e1)).normalize();
        Ok(Self {
            a1,
            a2,
            a3,
            a_cov,
            a_con,
            b_cov,
            b_mixed,
            e1,
            e2,
            jac,
            r_d2: p.d2,
        })
    }

    /// Second derivative `a_{a,b}` for tensor indices `a, b` in {0, 1}.
    pub fn a_d(&self, a: usize, b: usize) -> Vector3<f64> {
        match (a, b) {
            (0, 0) => self.r_d2[0],
            (1, 1) => self.r_d2[1],
            _ => self.r_d2[2],
        }
    }

    pub fn tangent(&self, alpha: usize) -> Vector3<f64> {
        if alpha == 0 {
            self.a1
        } else {
            self.a2
        }
    }

    /// Transformation `T[a][g] = e^a . a_g` to the local Cartesian basis.
    pub fn cartesian_transform(&self) -> Matrix2<f64> {
        Matrix2::new(
            self.e1.dot(&self.a1),
            self.e1.dot(&self.a2),
            self.e2.dot(&self.a1),
            self.e2.dot(&self.a2),
        )
    }
}

/// Frame at a parametric point of a surface.
pub fn frame_at(s: &NurbsSurface, t1: f64, t2: f64) -> Result<SurfaceFrame> {
    SurfaceFrame::from_point(&s.eval(t1, t2, 2)?, (t1, t2))
}

/// Position derivatives reconstructed from an element basis and the control net.
pub fn point_from_basis(s: &NurbsSurface, basis: &BasisEval) -> SurfacePoint {
    let mut p = SurfacePoint {
        r: Vector3::zeros(),
        d1: [Vector3::zeros(); 2],
        d2: [Vector3::zeros(); 3],
    };
    for (a, idx) in s.local_indices(basis.span_u, basis.span_v).into_iter().enumerate() {
        let q = s.point(idx);
        p.r += q * basis.values[a];
        p.d1[0] += q * basis.d1[a][0];
        p.d1[1] += q * basis.d1[a][1];
        for k in 0..3 {
            p.d2[k] += q * basis.d2[a][k];
        }
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellMaterial {
    pub young: f64,
    pub poisson: f64,
    pub thickness: f64,
}

impl ShellMaterial {
    pub fn new(young: f64, poisson: f64, thickness: f64) -> Result<Self> {
        if !(young > 0.0 && young.is_finite()) {
            return Err(ShellError::InvalidMaterial(format!("Young's modulus {young} must be positive")));
        }
        if !(0.0..0.5).contains(&poisson) {
            return Err(ShellError::InvalidMaterial(format!("Poisson ratio {poisson} outside [0, 0.5)")));
        }
        if !(thickness > 0.0 && thickness.is_finite()) {
            return Err(ShellError::InvalidMaterial(format!("thickness {thickness} must be positive")));
        }
        Ok(Self {
            young,
            poisson,
            thickness,
        })
    }

    /// `Et / (1 - nu^2)`
    pub fn membrane_rigidity(&self) -> f64 {
        self.young * self.thickness / (1.0 - self.poisson * self.poisson)
    }

    /// `Et^3 / 12(1 - nu^2)`
    pub fn bending_rigidity(&self) -> f64 {
        self.membrane_rigidity() * self.thickness * self.thickness / 12.0
    }
}

/// Covariant strain coefficients `(11, 22, 12)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StrainTriple {
    pub e11: f64,
    pub e22: f64,
    pub e12: f64,
}

impl StrainTriple {
    pub fn new(e11: f64, e22: f64, e12: f64) -> Self {
        Self { e11, e22, e12 }
    }

    pub fn component(&self, a: usize, b: usize) -> f64 {
        match (a, b) {
            (0, 0) => self.e11,
            (1, 1) => self.e22,
            _ => self.e12,
        }
    }

    pub fn as_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.e11, self.e12, self.e12, self.e22)
    }

    /// Engineering (Voigt) vector `(e11, e22, 2 e12)`.
    pub fn voigt(&self) -> Vector3<f64> {
        Vector3::new(self.e11, self.e22, 2.0 * self.e12)
    }

    pub fn lerp4(weights: [f64; 4], corners: &[StrainTriple; 4]) -> Self {
        let mut s = StrainTriple::default();
        for (w, c) in weights.iter().zip(corners) {
            s.e11 += w * c.e11;
            s.e22 += w * c.e22;
            s.e12 += w * c.e12;
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultantBasis {
    Curvilinear,
    LocalCartesian,
}

/// Symmetric stress resultant `(11, 22, 12)` with the basis it refers to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultantTriple {
    pub s11: f64,
    pub s22: f64,
    pub s12: f64,
    pub basis: ResultantBasis,
}

impl ResultantTriple {
    pub fn curvilinear(s11: f64, s22: f64, s12: f64) -> Self {
        Self {
            s11,
            s22,
            s12,
            basis: ResultantBasis::Curvilinear,
        }
    }

    pub fn zero() -> Self {
        Self::curvilinear(0.0, 0.0, 0.0)
    }

    pub fn as_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.s11, self.s12, self.s12, self.s22)
    }

    fn from_matrix(m: &Matrix2<f64>, basis: ResultantBasis) -> Self {
        Self {
            s11: m[(0, 0)],
            s22: m[(1, 1)],
            s12: 0.5 * (m[(0, 1)] + m[(1, 0)]),
            basis,
        }
    }

    /// Full contraction `s^{ab} e_{ab}`.
    pub fn contract(&self, e: &StrainTriple) -> f64 {
        self.s11 * e.e11 + self.s22 * e.e22 + 2.0 * self.s12 * e.e12
    }
}

/// Linear map from element dofs to `(11, 22, 12)` covariant strain coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct StrainOperator {
    pub rows: [Vec<f64>; 3],
}

impl StrainOperator {
    fn zeros(ncols: usize) -> Self {
        Self {
            rows: [vec![0.0; ncols], vec![0.0; ncols], vec![0.0; ncols]],
        }
    }

    pub fn ncols(&self) -> usize {
        self.rows[0].len()
    }

    pub fn apply(&self, u: &[f64]) -> StrainTriple {
        let dot = |r: &Vec<f64>| r.iter().zip(u).map(|(a, b)| a * b).sum::<f64>();
        StrainTriple::new(dot(&self.rows[0]), dot(&self.rows[1]), dot(&self.rows[2]))
    }

    /// `sum_l w_l op_l`; all operators must share the same columns.
    pub fn combine(weights: &[f64], ops: &[&StrainOperator]) -> Self {
        let mut out = Self::zeros(ops[0].ncols());
        for (w, op) in weights.iter().zip(ops) {
            for k in 0..3 {
                for (o, v) in out.rows[k].iter_mut().zip(&op.rows[k]) {
                    *o += w * v;
                }
            }
        }
        out
    }
}

const PAIRS: [(usize, usize); 3] = [(0, 0), (1, 1), (0, 1)];

/// Rows of `e_ab = 1/2 (u_,a . a_b + u_,b . a_a)`.
pub fn membrane_strain_op(frame: &SurfaceFrame, basis: &BasisEval) -> StrainOperator {
    let mut op = StrainOperator::zeros(3 * basis.len());
    for (k, &(a, b)) in PAIRS.iter().enumerate() {
        let (ta, tb) = (frame.tangent(a), frame.tangent(b));
        for n in 0..basis.len() {
            let (na, nb) = (basis.d1[n][a], basis.d1[n][b]);
            for i in 0..3 {
                op.rows[k][3 * n + i] = 0.5 * (na * tb[i] + nb * ta[i]);
            }
        }
    }
    op
}

/// Rows of the linearized bending pseudo-strains
/// `k_ab = -a3.u_,ab + 1/|a1 x a2| [ (a_ab x a2).u_,1 + (a1 x a_ab).u_,2
///        + (a_ab.a3) ((a2 x a3).u_,1 + (a3 x a1).u_,2) ]`.
pub fn bending_strain_op(frame: &SurfaceFrame, basis: &BasisEval) -> StrainOperator {
    let mut op = StrainOperator::zeros(3 * basis.len());
    let a2xa3 = frame.a2.cross(&frame.a3);
    let a3xa1 = frame.a3.cross(&frame.a1);
    for (k, &(a, b)) in PAIRS.iter().enumerate() {
        let aab = frame.a_d(a, b);
        let bab = aab.dot(&frame.a3);
        let c1 = (aab.cross(&frame.a2) + a2xa3 * bab) / frame.jac;
        let c2 = (frame.a1.cross(&aab) + a3xa1 * bab) / frame.jac;
        for n in 0..basis.len() {
            let d2 = basis.d2[n][k];
            let [d1u, d1v] = basis.d1[n];
            for i in 0..3 {
                op.rows[k][3 * n + i] = -frame.a3[i] * d2 + c1[i] * d1u + c2[i] * d1v;
            }
        }
    }
    op
}

/// Constitutive matrix acting on Voigt strains `(e11, e22, 2 e12)` and returning
/// `(s11, s22, s12)`; `rigidity` is `Et/(1-nu^2)` or `Et^3/12(1-nu^2)`.
pub fn constitutive_matrix(frame: &SurfaceFrame, rigidity: f64, nu: f64) -> Matrix3<f64> {
    let g = &frame.a_con;
    let c = |a: usize, b: usize, l: usize, m: usize| {
        rigidity * (nu * g[(a, b)] * g[(l, m)] + 0.5 * (1.0 - nu) * (g[(a, l)] * g[(b, m)] + g[(a, m)] * g[(b, l)]))
    };
    Matrix3::from_fn(|i, j| {
        let (a, b) = PAIRS[i];
        let (l, m) = PAIRS[j];
        c(a, b, l, m)
    })
}

pub fn membrane_matrix(frame: &SurfaceFrame, mat: &ShellMaterial) -> Matrix3<f64> {
    constitutive_matrix(frame, mat.membrane_rigidity(), mat.poisson)
}

pub fn bending_matrix(frame: &SurfaceFrame, mat: &ShellMaterial) -> Matrix3<f64> {
    constitutive_matrix(frame, mat.bending_rigidity(), mat.poisson)
}

fn resultant_law(e: &StrainTriple, frame: &SurfaceFrame, rigidity: f64, nu: f64) -> ResultantTriple {
    let g = &frame.a_con;
    let em = e.as_matrix();
    // a^{ml} e_{lm}
    let trace: f64 = (0..2).flat_map(|l| (0..2).map(move |m| (l, m))).map(|(l, m)| g[(m, l)] * em[(l, m)]).sum();
    let mut n = Matrix2::zeros();
    for a in 0..2 {
        for b in 0..2 {
            let mut s = 0.0;
            for l in 0..2 {
                for m in 0..2 {
                    s += g[(a, l)] * g[(m, b)] * em[(l, m)];
                }
            }
            n[(a, b)] = rigidity * ((1.0 - nu) * s + nu * g[(a, b)] * trace);
        }
    }
    ResultantTriple::from_matrix(&n, ResultantBasis::Curvilinear)
}

/// Contravariant membrane forces from covariant membrane strains.
pub fn membrane_law(e: &StrainTriple, frame: &SurfaceFrame, mat: &ShellMaterial) -> ResultantTriple {
    resultant_law(e, frame, mat.membrane_rigidity(), mat.poisson)
}

/// Contravariant bending moments from covariant bending pseudo-strains.
pub fn bending_law(k: &StrainTriple, frame: &SurfaceFrame, mat: &ShellMaterial) -> ResultantTriple {
    resultant_law(k, frame, mat.bending_rigidity(), mat.poisson)
}

/// Effective membrane forces `n^{ab} - m^{al} b^b_l`.
///
/// The off-diagonal entry is symmetrized. The curvature term carries a minus sign
/// so that the result is the equilibrium membrane force for the bending strain
/// measure of [`bending_strain_op`].
pub fn effective_membrane(n: &ResultantTriple, m: &ResultantTriple, frame: &SurfaceFrame) -> Result<ResultantTriple> {
    if n.basis != ResultantBasis::Curvilinear || m.basis != ResultantBasis::Curvilinear {
        return Err(ShellError::AlreadyCartesian);
    }
    let eff = n.as_matrix() - m.as_matrix() * frame.b_mixed.transpose();
    Ok(ResultantTriple::from_matrix(&eff, ResultantBasis::Curvilinear))
}

/// `s^ab_hat = s^{gm} (e^a . a_g)(a_m . e^b)`.
pub fn to_local_cartesian(res: &ResultantTriple, frame: &SurfaceFrame) -> Result<ResultantTriple> {
    if res.basis == ResultantBasis::LocalCartesian {
        return Err(ShellError::AlreadyCartesian);
    }
    let t = frame.cartesian_transform();
    let out = t * res.as_matrix() * t.transpose();
    Ok(ResultantTriple::from_matrix(&out, ResultantBasis::LocalCartesian))
}

/// Covariant strain coefficients expressed in the local Cartesian basis,
/// `e_hat_ab = e_{gm} (e_a . a^g)(a^m . e_b)`.
pub fn strain_to_local_cartesian(e: &StrainTriple, frame: &SurfaceFrame) -> StrainTriple {
    // e_a . a^g = (T^{-T})_{ag} with T[a][g] = e^a . a_g
    let t = frame.cartesian_transform();
    let tinv_t = t.try_inverse().expect("nondegenerate frame").transpose();
    let out = tinv_t * e.as_matrix() * tinv_t.transpose();
    StrainTriple::new(out[(0, 0)], out[(1, 1)], 0.5 * (out[(0, 1)] + out[(1, 0)]))
}
