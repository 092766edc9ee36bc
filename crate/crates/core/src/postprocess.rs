//! Displacements, stress resultants, strain energies and resultant error norms
//! recovered from a solved control displacement vector.
//!
//! CAS solutions report membrane quantities from the corner-interpolated strains,
//! so recovered membrane forces are consistent with the element's internal work.

use std::io::Write;

use nalgebra::Vector3;

use crate::discretization::{bilinear_weights, Element, ElementKind, Patch, QuadratureRule};
use crate::error::{Result, ShellError};
use crate::shell::{
    bending_law, bending_strain_op, effective_membrane, membrane_law, membrane_strain_op, point_from_basis,
    to_local_cartesian, ResultantTriple, ShellMaterial, StrainTriple, SurfaceFrame,
};

/// Control displacement coefficients on a patch.
#[derive(Debug, Clone)]
pub struct SolutionField {
    patch: Patch,
    u: Vec<f64>,
    kind: ElementKind,
    material: ShellMaterial,
}

/// Kinematic state at one point of the midsurface.
#[derive(Debug, Clone)]
pub struct PointState {
    pub theta: (f64, f64),
    pub x: Vector3<f64>,
    pub u: Vector3<f64>,
    pub frame: SurfaceFrame,
    /// Membrane strains (assumed strains for CAS).
    pub membrane: StrainTriple,
    pub bending: StrainTriple,
}

/// Local Cartesian stress resultants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resultants {
    pub n: ResultantTriple,
    pub m: ResultantTriple,
    pub n_eff: ResultantTriple,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub membrane: f64,
    pub bending: f64,
    pub total: f64,
}

impl EnergyReport {
    pub fn membrane_ratio(&self) -> f64 {
        if self.total == 0.0 {
            0.0
        } else {
            self.membrane / self.total
        }
    }

    pub fn bending_ratio(&self) -> f64 {
        if self.total == 0.0 {
            0.0
        } else {
            self.bending / self.total
        }
    }
}

/// Local Cartesian resultant component compared against an analytic field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultantComponent {
    N11,
    M11,
    NEff11,
}

impl SolutionField {
    pub fn new(patch: Patch, u: Vec<f64>, kind: ElementKind, material: ShellMaterial) -> Result<Self> {
        if u.len() != patch.num_dofs() {
            return Err(ShellError::InvalidSurface(format!(
                "{} displacement coefficients for {} dofs",
                u.len(),
                patch.num_dofs()
            )));
        }
        Ok(Self { patch, u, kind, material })
    }

    pub fn patch(&self) -> &Patch {
        &self.patch
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.u
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn material(&self) -> &ShellMaterial {
        &self.material
    }

    fn local(&self, e: &Element) -> Vec<f64> {
        e.dofs().into_iter().map(|d| self.u[d]).collect()
    }

    pub fn displacement_at(&self, t1: f64, t2: f64) -> Result<Vector3<f64>> {
        let e = self.patch.element_at(t1, t2)?;
        let b = self.patch.surface().basis_in_span(e.span_u, e.span_v, t1, t2, 0)?;
        let mut u = Vector3::zeros();
        for (a, &cp) in e.cps.iter().enumerate() {
            u += Vector3::new(self.u[3 * cp], self.u[3 * cp + 1], self.u[3 * cp + 2]) * b.values[a];
        }
        Ok(u)
    }

    /// States at parent coordinates of one element; corner strains are computed once.
    pub fn element_states(&self, e: &Element, parent: &[(f64, f64)]) -> Result<Vec<PointState>> {
        let ue = self.local(e);
        let corners = match self.kind {
            ElementKind::Cas => {
                let ops = self.patch.corner_membrane_ops(e)?;
                Some([ops[0].apply(&ue), ops[1].apply(&ue), ops[2].apply(&ue), ops[3].apply(&ue)])
            }
            ElementKind::Cs => None,
        };
        let s = self.patch.surface();
        parent
            .iter()
            .map(|&(xi, eta)| {
                let (t1, t2) = e.map(xi, eta);
                let (basis, frame) = self.patch.eval_in(e, t1, t2)?;
                let p = point_from_basis(s, &basis);
                let mut u = Vector3::zeros();
                for a in 0..basis.len() {
                    u += Vector3::new(ue[3 * a], ue[3 * a + 1], ue[3 * a + 2]) * basis.values[a];
                }
                let membrane = match &corners {
                    Some(c) => StrainTriple::lerp4(bilinear_weights(xi, eta), c),
                    None => membrane_strain_op(&frame, &basis).apply(&ue),
                };
                let bending = bending_strain_op(&frame, &basis).apply(&ue);
                Ok(PointState {
                    theta: (t1, t2),
                    x: p.r,
                    u,
                    frame,
                    membrane,
                    bending,
                })
            })
            .collect()
    }

    pub fn state_at(&self, t1: f64, t2: f64) -> Result<PointState> {
        let e = self.patch.element_at(t1, t2)?;
        let xi = 2.0 * (t1 - e.u.0) / (e.u.1 - e.u.0) - 1.0;
        let eta = 2.0 * (t2 - e.v.0) / (e.v.1 - e.v.0) - 1.0;
        let mut st = self.element_states(e, &[(xi, eta)])?;
        // keep the requested parameters exactly
        st[0].theta = (t1, t2);
        Ok(st.pop().unwrap())
    }

    pub fn resultants_of(&self, st: &PointState) -> Result<Resultants> {
        let n = membrane_law(&st.membrane, &st.frame, &self.material);
        let m = bending_law(&st.bending, &st.frame, &self.material);
        let n_eff = effective_membrane(&n, &m, &st.frame)?;
        Ok(Resultants {
            n: to_local_cartesian(&n, &st.frame)?,
            m: to_local_cartesian(&m, &st.frame)?,
            n_eff: to_local_cartesian(&n_eff, &st.frame)?,
        })
    }

    pub fn resultants_at(&self, t1: f64, t2: f64) -> Result<Resultants> {
        self.resultants_of(&self.state_at(t1, t2)?)
    }

    /// Membrane, bending and total strain energy by quadrature.
    pub fn energies(&self, rule: &QuadratureRule) -> Result<EnergyReport> {
        let (mut em, mut eb) = (0.0, 0.0);
        for e in self.patch.elements() {
            let pj = e.parent_jacobian();
            for (st, w) in self.element_states(e, &rule.points)?.iter().zip(&rule.weights) {
                let da = w * pj * st.frame.jac;
                em += 0.5 * membrane_law(&st.membrane, &st.frame, &self.material).contract(&st.membrane) * da;
                eb += 0.5 * bending_law(&st.bending, &st.frame, &self.material).contract(&st.bending) * da;
            }
        }
        Ok(EnergyReport {
            membrane: em,
            bending: eb,
            total: em + eb,
        })
    }

    /// Relative L2 error `|r_h - r| / |r|` of a local Cartesian resultant component
    /// against an analytic field given as a function of position.
    pub fn l2_resultant_error(
        &self,
        exact: impl Fn(&Vector3<f64>) -> f64,
        which: ResultantComponent,
        rule: &QuadratureRule,
    ) -> Result<f64> {
        let (mut num, mut den) = (0.0, 0.0);
        for e in self.patch.elements() {
            let pj = e.parent_jacobian();
            for (st, w) in self.element_states(e, &rule.points)?.iter().zip(&rule.weights) {
                let r = self.resultants_of(st)?;
                let h = match which {
                    ResultantComponent::N11 => r.n.s11,
                    ResultantComponent::M11 => r.m.s11,
                    ResultantComponent::NEff11 => r.n_eff.s11,
                };
                let ex = exact(&st.x);
                let da = w * pj * st.frame.jac;
                num += (h - ex).powi(2) * da;
                den += ex * ex * da;
            }
        }
        if den == 0.0 {
            return Err(ShellError::UndefinedNorm);
        }
        Ok((num / den).sqrt())
    }

    /// Sample `density x density` parametric points (patch boundary included) and
    /// write one row per point below a `#` header.
    pub fn write_field<W: Write>(&self, out: &mut W, header: &FieldHeader, density: usize) -> Result<()> {
        let density = density.max(2);
        let ((u0, u1), (v0, v1)) = self.patch.surface().param_range();
        let (nu, nv) = self.patch.mesh();
        writeln!(out, "# benchmark {}", header.benchmark)?;
        writeln!(out, "# element {}", self.kind)?;
        writeln!(out, "# mesh {nu} {nv}")?;
        writeln!(out, "# slenderness {:?}", header.slenderness)?;
        writeln!(out, "# grid {density} {density}")?;
        writeln!(out, "# theta1 theta2 x y z ux uy uz n11 n22 n12 m11 m22 m12 neff11")?;
        for j in 0..density {
            for i in 0..density {
                let t1 = u0 + (u1 - u0) * i as f64 / (density - 1) as f64;
                let t2 = v0 + (v1 - v0) * j as f64 / (density - 1) as f64;
                let st = self.state_at(t1, t2)?;
                let r = self.resultants_of(&st)?;
                let vals = [
                    t1, t2, st.x.x, st.x.y, st.x.z, st.u.x, st.u.y, st.u.z, r.n.s11, r.n.s22, r.n.s12, r.m.s11, r.m.s22,
                    r.m.s12, r.n_eff.s11,
                ];
                let row: Vec<String> = vals.iter().map(|v| format!("{v:e}")).collect();
                writeln!(out, "{}", row.join(" "))?;
            }
        }
        Ok(())
    }
}

/// Run identification written at the top of a field file.
#[derive(Debug, Clone)]
pub struct FieldHeader {
    pub benchmark: String,
    pub slenderness: f64,
}
