//! Benchmark problems built as exact quadratic NURBS patches, and convergence
//! studies over uniformly refined meshes.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;
use std::time::Instant;

use nalgebra::Vector3;

use crate::discretization::{
    apply_constraints, assemble, gauss_rule, load_area, load_edge_line, load_point, Constraints, Edge, ElementKind,
    GlobalSystem, Patch, QuadratureRule,
};
use crate::error::{Result, ShellError};
use crate::nurbs::{Direction, KnotVector, NurbsSurface};
use crate::postprocess::{EnergyReport, ResultantComponent, SolutionField};
use crate::shell::ShellMaterial;
use crate::solver::solve_spd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchmarkId {
    Strip,
    Hemisphere,
    Scordelis,
    Hypar,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 4] = [BenchmarkId::Strip, BenchmarkId::Hemisphere, BenchmarkId::Scordelis, BenchmarkId::Hypar];

    pub fn name(&self) -> &'static str {
        match self {
            BenchmarkId::Strip => "strip",
            BenchmarkId::Hemisphere => "hemisphere",
            BenchmarkId::Scordelis => "scordelis",
            BenchmarkId::Hypar => "hypar",
        }
    }

    /// Slenderness values of the published convergence studies.
    pub fn standard_slenderness(&self) -> &'static [f64] {
        match self {
            BenchmarkId::Strip => &[1e1, 1e2, 1e3],
            BenchmarkId::Hemisphere => &[2.5e2, 2.5e3, 2.5e4],
            BenchmarkId::Scordelis => &[1e2, 1e3],
            BenchmarkId::Hypar => &[1e2, 1e3, 1e4],
        }
    }

    /// Published monitor deflection of a converged high-order solution.
    pub fn reference_deflection(&self, slenderness: f64) -> Option<f64> {
        let table: &[(f64, f64)] = match self {
            BenchmarkId::Strip => &[(1e1, -9.4561e-1), (1e2, -9.4250e-1), (1e3, -9.4247e-1)],
            BenchmarkId::Hemisphere => &[(2.5e2, -9.3521e-2), (2.5e3, -9.1594e-2), (2.5e4, -9.0817e-2)],
            BenchmarkId::Scordelis => &[(1e2, -3.0059e-1), (1e3, -3.2010e1)],
            BenchmarkId::Hypar => &[(1e2, -9.3128e-5), (1e3, -6.3957e-3), (1e4, -5.3059e-1)],
        };
        table
            .iter()
            .find(|(s, _)| ((s - slenderness) / s).abs() < 1e-9)
            .map(|&(_, v)| v)
    }
}

impl std::fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BenchmarkId {
    type Err = ShellError;
    fn from_str(s: &str) -> Result<Self> {
        BenchmarkId::ALL
            .into_iter()
            .find(|b| b.name() == s.to_ascii_lowercase())
            .ok_or_else(|| ShellError::Unsupported(format!("benchmark '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoadSpec {
    /// Force per unit midsurface area.
    Area(Vector3<f64>),
    /// Force per unit length along a patch edge.
    EdgeLine(Edge, Vector3<f64>),
    Point { theta: (f64, f64), force: Vector3<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    /// All components of the first two control rows.
    Clamp(Edge),
    /// Edge row fixed and only the normal component of the next row, so the slope
    /// vanishes while the membrane strain at the edge stays free. Exact when the
    /// surface normal along the edge is the global axis `normal`.
    RotationClamp { edge: Edge, normal: usize },
    /// Symmetry plane with unit normal along global axis `axis`.
    Symmetry(Edge, usize),
    /// Edge row restrained in the two global directions `dirs`.
    Diaphragm(Edge, [usize; 2]),
    /// Single restrained component at one control point; removes a rigid mode
    /// that the loads do not excite.
    Pin { cp: (usize, usize), comp: usize },
}

/// Displacement component monitored at a parametric point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monitor {
    pub theta: (f64, f64),
    pub component: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkCase {
    pub id: BenchmarkId,
    pub slenderness: f64,
    pub material: ShellMaterial,
    /// Single-element (Bezier) geometry in both directions.
    pub geometry: NurbsSurface,
    pub initial_mesh: (usize, usize),
    /// Which directions are refined by a convergence level.
    pub refine: (bool, bool),
    pub loads: Vec<LoadSpec>,
    pub supports: Vec<Support>,
    pub monitor: Monitor,
    pub reference: Option<f64>,
}

/// Bezier patch from rows of `[x, y, z, w]`, `u` fastest.
fn bezier(pu: usize, pv: usize, cps: Vec<[f64; 4]>) -> Result<NurbsSurface> {
    let open = |p: usize| KnotVector::new([vec![0.0; p + 1], vec![1.0; p + 1]].concat(), p);
    NurbsSurface::new(open(pu)?, open(pv)?, cps)
}

/// Quarter-circle strip of radius 10 and width 1, clamped at one end and loaded
/// radially at the free end.
pub fn make_strip(slenderness: f64) -> Result<BenchmarkCase> {
    let (r, b) = (10.0, 1.0);
    let t = r / slenderness;
    let material = ShellMaterial::new(1.0e3, 0.0, t)?;
    let arc = [(r, 0.0, 1.0), (r, r, FRAC_1_SQRT_2), (0.0, r, 1.0)];
    let mut cps = Vec::new();
    for k in 0..3 {
        let z = b * k as f64 / 2.0;
        for &(x, y, w) in &arc {
            cps.push([x, y, z, w]);
        }
    }
    let id = BenchmarkId::Strip;
    Ok(BenchmarkCase {
        id,
        slenderness,
        material,
        geometry: bezier(2, 2, cps)?,
        initial_mesh: (2, 1),
        refine: (true, false),
        loads: vec![LoadSpec::EdgeLine(Edge::U0, Vector3::new(-0.1 * t.powi(3), 0.0, 0.0))],
        supports: vec![Support::RotationClamp { edge: Edge::U1, normal: 1 }],
        monitor: Monitor {
            theta: (0.0, 0.5),
            component: 0,
        },
        reference: id.reference_deflection(slenderness),
    })
}

/// Quarter of a hemisphere of radius 10 with an 18 degree polar opening, pinched
/// by opposite radial point loads on the equator.
pub fn make_hemisphere(slenderness: f64) -> Result<BenchmarkCase> {
    let r = 10.0;
    let t = r / slenderness;
    let material = ShellMaterial::new(6.825e7, 0.3, t)?;
    // each load point sits on a symmetry plane of the quarter model and carries half the load
    let p = 0.5 * 31250.0 * t.powi(3);
    let top = 72f64.to_radians();
    let half = 0.5 * top;
    // meridian (rho, z, w) from the equator to the opening
    let meridian = [(r, 0.0, 1.0), (r, r * half.tan(), half.cos()), (r * top.cos(), r * top.sin(), 1.0)];
    // longitude quarter circle (cos, sin, w)
    let circle = [(1.0, 0.0, 1.0), (1.0, 1.0, FRAC_1_SQRT_2), (0.0, 1.0, 1.0)];
    let mut cps = Vec::new();
    for &(rho, z, wm) in &meridian {
        for &(c, s, wc) in &circle {
            cps.push([rho * c, rho * s, z, wm * wc]);
        }
    }
    let id = BenchmarkId::Hemisphere;
    Ok(BenchmarkCase {
        id,
        slenderness,
        material,
        geometry: bezier(2, 2, cps)?,
        initial_mesh: (2, 2),
        refine: (true, true),
        loads: vec![
            LoadSpec::Point {
                theta: (0.0, 0.0),
                force: Vector3::new(-p, 0.0, 0.0),
            },
            LoadSpec::Point {
                theta: (1.0, 0.0),
                force: Vector3::new(0.0, p, 0.0),
            },
        ],
        supports: vec![
            Support::Symmetry(Edge::U0, 1),
            Support::Symmetry(Edge::U1, 0),
            Support::Pin { cp: (0, 0), comp: 2 },
        ],
        monitor: Monitor {
            theta: (0.0, 0.0),
            component: 0,
        },
        reference: id.reference_deflection(slenderness),
    })
}

/// Full Scordelis-Lo roof: cylindrical panel of radius 25 and length 50 spanning
/// 40 degrees to each side of the crown, on end diaphragms, under self weight.
pub fn make_scordelis(slenderness: f64) -> Result<BenchmarkCase> {
    let (r, l) = (25.0, 50.0);
    let t = r / slenderness;
    let material = ShellMaterial::new(4.32e8, 0.0, t)?;
    let phi = 40f64.to_radians();
    let arc = [
        (-r * phi.sin(), r * phi.cos(), 1.0),
        (0.0, r / phi.cos(), phi.cos()),
        (r * phi.sin(), r * phi.cos(), 1.0),
    ];
    let mut cps = Vec::new();
    for k in 0..3 {
        let y = l * k as f64 / 2.0;
        for &(x, z, w) in &arc {
            cps.push([x, y, z, w]);
        }
    }
    let id = BenchmarkId::Scordelis;
    Ok(BenchmarkCase {
        id,
        slenderness,
        material,
        geometry: bezier(2, 2, cps)?,
        initial_mesh: (4, 4),
        refine: (true, true),
        loads: vec![LoadSpec::Area(Vector3::new(0.0, 0.0, -90.0))],
        supports: vec![
            Support::Diaphragm(Edge::V0, [0, 2]),
            Support::Diaphragm(Edge::V1, [0, 2]),
            Support::Pin { cp: (1, 0), comp: 1 },
        ],
        monitor: Monitor {
            theta: (0.0, 0.5),
            component: 2,
        },
        reference: id.reference_deflection(slenderness),
    })
}

/// Half of the hyperbolic paraboloid `z = x^2 - y^2` on the unit square, clamped
/// along `x = -1/2`, under self weight; the model boundary `y = 0` is a symmetry plane.
pub fn make_hypar(slenderness: f64) -> Result<BenchmarkCase> {
    let l = 1.0;
    let t = l / slenderness;
    let material = ShellMaterial::new(2.0e11, 0.3, t)?;
    let xs = [-0.5 * l, 0.0, 0.5 * l];
    let ys = [0.0, 0.25 * l, 0.5 * l];
    // Bernstein coefficients of x^2 on [-L/2, L/2] and y^2 on [0, L/2]
    let cx = [0.25 * l * l, -0.25 * l * l, 0.25 * l * l];
    let cy = [0.0, 0.0, 0.25 * l * l];
    let mut cps = Vec::new();
    for j in 0..3 {
        for i in 0..3 {
            cps.push([xs[i], ys[j], cx[i] - cy[j], 1.0]);
        }
    }
    let id = BenchmarkId::Hypar;
    Ok(BenchmarkCase {
        id,
        slenderness,
        material,
        geometry: bezier(2, 2, cps)?,
        initial_mesh: (2, 1),
        refine: (true, true),
        loads: vec![LoadSpec::Area(Vector3::new(0.0, 0.0, -8000.0 * t))],
        supports: vec![Support::Clamp(Edge::U0), Support::Symmetry(Edge::V0, 1)],
        monitor: Monitor {
            theta: (1.0, 0.0),
            component: 2,
        },
        reference: id.reference_deflection(slenderness),
    })
}

pub fn make_case(id: BenchmarkId, slenderness: f64) -> Result<BenchmarkCase> {
    match id {
        BenchmarkId::Strip => make_strip(slenderness),
        BenchmarkId::Hemisphere => make_hemisphere(slenderness),
        BenchmarkId::Scordelis => make_scordelis(slenderness),
        BenchmarkId::Hypar => make_hypar(slenderness),
    }
}

/// Solved benchmark on one mesh.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub field: SolutionField,
    pub deflection: f64,
    pub dofs: usize,
    pub free_dofs: usize,
    pub rel_residual: f64,
    /// `u^T f` with the full load vector; twice the total strain energy at equilibrium.
    pub work: f64,
}

impl BenchmarkCase {
    /// Mesh after `level` uniform bisections of the initial mesh.
    pub fn mesh_for_level(&self, level: usize) -> (usize, usize) {
        let f = 1usize << level;
        (
            self.initial_mesh.0 * if self.refine.0 { f } else { 1 },
            self.initial_mesh.1 * if self.refine.1 { f } else { 1 },
        )
    }

    /// Mesh with `n` elements along the first direction; the second follows the
    /// initial aspect of the case.
    pub fn mesh_for_elements(&self, n: usize) -> (usize, usize) {
        let n = n.max(1);
        match (self.refine, self.initial_mesh) {
            ((_, false), (_, m)) => (n, m),
            (_, (a, b)) => (n, (n * b / a).max(1)),
        }
    }

    pub fn surface(&self, mesh: (usize, usize)) -> Result<NurbsSurface> {
        self.geometry.subdivide(Direction::U, mesh.0)?.subdivide(Direction::V, mesh.1)
    }

    pub fn patch(&self, mesh: (usize, usize)) -> Result<Patch> {
        Ok(Patch::new(self.surface(mesh)?))
    }

    pub fn constraints(&self, patch: &Patch) -> Constraints {
        let mut c = Constraints::new();
        let nu = patch.surface().grid().0;
        for s in &self.supports {
            match *s {
                Support::Clamp(edge) => {
                    c.fix_points(&patch.edge_row(edge, 0), &[0, 1, 2]);
                    c.fix_points(&patch.edge_row(edge, 1), &[0, 1, 2]);
                }
                Support::RotationClamp { edge, normal } => {
                    c.fix_points(&patch.edge_row(edge, 0), &[0, 1, 2]);
                    c.fix_points(&patch.edge_row(edge, 1), &[normal]);
                }
                Support::Symmetry(edge, axis) => {
                    // mirror symmetry: zero normal displacement on the plane and
                    // zero cross-plane slope of the in-plane components
                    let on = patch.edge_row(edge, 0);
                    let next = patch.edge_row(edge, 1);
                    c.fix_points(&on, &[axis]);
                    for (&a, &b) in on.iter().zip(&next) {
                        for comp in (0..3).filter(|&k| k != axis) {
                            c.tie(3 * b + comp, 3 * a + comp);
                        }
                    }
                }
                Support::Diaphragm(edge, dirs) => {
                    c.fix_points(&patch.edge_row(edge, 0), &dirs);
                }
                Support::Pin { cp: (i, j), comp } => {
                    c.fix(3 * (i + nu * j) + comp);
                }
            }
        }
        c
    }

    pub fn load_vector(&self, patch: &Patch, rule: &QuadratureRule) -> Result<Vec<f64>> {
        let mut f = vec![0.0; patch.num_dofs()];
        for load in &self.loads {
            let part = match *load {
                LoadSpec::Area(q) => load_area(patch, rule, |_| q)?,
                LoadSpec::EdgeLine(edge, q) => load_edge_line(patch, edge, rule.per_dir, q)?,
                LoadSpec::Point { theta, force } => load_point(patch, theta.0, theta.1, force)?,
            };
            for (a, b) in f.iter_mut().zip(part) {
                *a += b;
            }
        }
        Ok(f)
    }

    pub fn system(&self, patch: &Patch, kind: ElementKind, rule: &QuadratureRule) -> Result<GlobalSystem> {
        Ok(GlobalSystem {
            k: assemble(patch, &self.material, rule, kind)?,
            f: self.load_vector(patch, rule)?,
            constraints: self.constraints(patch),
        })
    }

    /// Assemble, constrain and solve on a mesh; `quad` is the per-direction point count.
    pub fn solve(&self, mesh: (usize, usize), kind: ElementKind, quad: usize) -> Result<Analysis> {
        let rule = gauss_rule(quad)?;
        let patch = self.patch(mesh)?;
        let sys = self.system(&patch, kind, &rule)?;
        let red = apply_constraints(&sys)?;
        let sol = solve_spd(&red.k, &red.f)?;
        let u = red.recover(&sol.u);
        let work = u.iter().zip(&sys.f).map(|(a, b)| a * b).sum();
        let field = SolutionField::new(patch, u, kind, self.material)?;
        let deflection = field.displacement_at(self.monitor.theta.0, self.monitor.theta.1)?[self.monitor.component];
        Ok(Analysis {
            dofs: sys.k.dim(),
            free_dofs: red.k.dim(),
            rel_residual: sol.rel_residual,
            work,
            deflection,
            field,
        })
    }

    pub fn strip_exact(&self) -> Option<StripExact> {
        match self.loads.first() {
            Some(&LoadSpec::EdgeLine(_, q)) if self.id == BenchmarkId::Strip => Some(StripExact { qx: q.x, radius: 10.0 }),
            _ => None,
        }
    }
}

/// Statically determinate resultants of the strip, in terms of the angle `phi`
/// measured from the clamped end (`phi = atan2(x, y)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripExact {
    pub qx: f64,
    pub radius: f64,
}

impl StripExact {
    pub fn phi(x: &Vector3<f64>) -> f64 {
        x.x.atan2(x.y)
    }

    pub fn n_eff11(&self, x: &Vector3<f64>) -> f64 {
        self.qx * Self::phi(x).cos()
    }

    pub fn m11(&self, x: &Vector3<f64>) -> f64 {
        -self.qx * self.radius * Self::phi(x).cos()
    }

    /// Membrane force of the shell law: the effective force plus the moment
    /// times the physical curvature `-1/R` of the outward-oriented midsurface.
    pub fn n11(&self, x: &Vector3<f64>) -> f64 {
        self.n_eff11(x) + self.m11(x) * (-1.0 / self.radius)
    }

    /// Tip deflection of the thin curved cantilever, `q R^3 pi / (4 E I)` per unit width.
    pub fn thin_limit_deflection(&self, young: f64, thickness: f64) -> f64 {
        let ei = young * thickness.powi(3) / 12.0;
        self.qx * self.radius.powi(3) * PI / (4.0 * ei)
    }
}

/// One row of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub level: usize,
    pub mesh: (usize, usize),
    pub dofs: usize,
    pub deflection: f64,
    pub normalized: Option<f64>,
    pub error_n11: Option<f64>,
    pub error_m11: Option<f64>,
    pub energy: EnergyReport,
    pub rel_residual: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub benchmark: BenchmarkId,
    pub kind: ElementKind,
    pub quad: usize,
    pub slenderness: f64,
    pub levels: Vec<LevelResult>,
}

/// Per-level error and energy evaluation on a solved analysis.
pub fn evaluate(case: &BenchmarkCase, a: &Analysis, quad: usize) -> Result<(EnergyReport, Option<f64>, Option<f64>)> {
    let energy = a.field.energies(&gauss_rule(quad)?)?;
    let (en, em) = match case.strip_exact() {
        Some(ex) => {
            let fine = QuadratureRule::gauss(5);
            (
                Some(a.field.l2_resultant_error(|x| ex.n11(x), ResultantComponent::N11, &fine)?),
                Some(a.field.l2_resultant_error(|x| ex.m11(x), ResultantComponent::M11, &fine)?),
            )
        }
        None => (None, None),
    };
    Ok((energy, en, em))
}

/// Solve on a list of meshes, recording deflections, energies and error norms.
pub fn run_meshes(
    case: &BenchmarkCase,
    kind: ElementKind,
    quad: usize,
    meshes: &[(usize, usize)],
    mut progress: impl FnMut(&LevelResult, &Analysis),
) -> Result<ConvergenceReport> {
    if meshes.is_empty() {
        return Err(ShellError::Unsupported("at least one refinement level is required".into()));
    }
    if meshes.windows(2).any(|w| w[1].0 * w[1].1 <= w[0].0 * w[0].1) {
        return Err(ShellError::Unsupported("meshes must be strictly increasing".into()));
    }
    let mut levels = Vec::with_capacity(meshes.len());
    for (level, &mesh) in meshes.iter().enumerate() {
        let start = Instant::now();
        let run = || -> Result<(LevelResult, Analysis)> {
            let a = case.solve(mesh, kind, quad)?;
            let (energy, error_n11, error_m11) = evaluate(case, &a, quad)?;
            let row = LevelResult {
                level,
                mesh,
                dofs: a.dofs,
                deflection: a.deflection,
                normalized: case.reference.map(|r| a.deflection / r),
                error_n11,
                error_m11,
                energy,
                rel_residual: a.rel_residual,
                seconds: start.elapsed().as_secs_f64(),
            };
            Ok((row, a))
        };
        let (row, a) = run().map_err(|e| e.at_level(level))?;
        progress(&row, &a);
        levels.push(row);
    }
    Ok(ConvergenceReport {
        benchmark: case.id,
        kind,
        quad,
        slenderness: case.slenderness,
        levels,
    })
}

/// Convergence study over `levels` uniform refinements starting at the initial mesh.
pub fn run_convergence(case: &BenchmarkCase, kind: ElementKind, quad: usize, levels: usize) -> Result<ConvergenceReport> {
    let meshes: Vec<_> = (0..levels).map(|l| case.mesh_for_level(l)).collect();
    run_meshes(case, kind, quad, &meshes, |_, _| {})
}

impl ConvergenceReport {
    /// CSV with one row per level; wall time is included only on request so that
    /// identical runs produce identical files.
    pub fn write_csv<W: Write>(&self, out: W, with_timings: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "benchmark",
            "element",
            "quad",
            "slenderness",
            "level",
            "n_el1",
            "n_el2",
            "dofs",
            "deflection",
            "normalized",
            "e_l2_n11",
            "e_l2_m11",
            "energy_membrane",
            "energy_bending",
            "energy_total",
            "ratio_membrane",
            "ratio_bending",
            "residual",
        ];
        if with_timings {
            header.push("seconds");
        }
        w.write_record(&header)?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:?}"));
        for l in &self.levels {
            let mut rec = vec![
                self.benchmark.to_string(),
                self.kind.to_string(),
                self.quad.to_string(),
                format!("{:?}", self.slenderness),
                l.level.to_string(),
                l.mesh.0.to_string(),
                l.mesh.1.to_string(),
                l.dofs.to_string(),
                format!("{:?}", l.deflection),
                opt(l.normalized),
                opt(l.error_n11),
                opt(l.error_m11),
                format!("{:?}", l.energy.membrane),
                format!("{:?}", l.energy.bending),
                format!("{:?}", l.energy.total),
                format!("{:?}", l.energy.membrane_ratio()),
                format!("{:?}", l.energy.bending_ratio()),
                format!("{:?}", l.rel_residual),
            ];
            if with_timings {
                rec.push(format!("{:?}", l.seconds));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn names_round_trip() {
        for b in BenchmarkId::ALL {
            assert_eq!(b.name().parse::<BenchmarkId>().unwrap(), b);
        }
        assert!("roof".parse::<BenchmarkId>().is_err());
    }

    #[test]
    fn thin_limit_oracle() {
        let c = make_strip(1e3).unwrap();
        let ex = c.strip_exact().unwrap();
        assert_relative_eq!(ex.thin_limit_deflection(1e3, c.material.thickness), -0.3 * PI, max_relative = 1e-12);
    }

    #[test]
    fn level_meshes() {
        let c = make_strip(10.0).unwrap();
        assert_eq!(c.mesh_for_level(3), (16, 1));
        assert_eq!(c.mesh_for_elements(5), (5, 1));
        let h = make_hypar(10.0).unwrap();
        assert_eq!(h.mesh_for_level(2), (8, 4));
        assert_eq!(h.mesh_for_elements(16), (16, 8));
        let s = make_scordelis(100.0).unwrap();
        assert_eq!(s.mesh_for_elements(5), (5, 5));
    }
}
