//! Elements, quadrature, element stiffness (CS and CAS), assembly, loads and
//! constraint elimination on a single NURBS patch.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Matrix3, Vector3};

use crate::error::{Result, ShellError};
use crate::nurbs::{BasisEval, Direction, NurbsSurface};
use crate::shell::{
    bending_matrix, bending_strain_op, membrane_matrix, membrane_strain_op, point_from_basis, ShellMaterial,
    StrainOperator, SurfaceFrame,
};
use crate::solver::SparseSymmetric;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    /// Compatible strains from the discrete displacement field.
    Cs,
    /// Membrane strains interpolated bilinearly from the element corners.
    Cas,
}

impl std::fmt::Display for ElementKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ElementKind::Cs => "cs",
            ElementKind::Cas => "cas",
        })
    }
}

impl std::str::FromStr for ElementKind {
    type Err = ShellError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cs" => Ok(ElementKind::Cs),
            "cas" => Ok(ElementKind::Cas),
            other => Err(ShellError::Unsupported(format!("element kind '{other}'"))),
        }
    }
}

/// Tensor-product quadrature on the parent square `[-1, 1]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    pub per_dir: usize,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "at least one quadrature point");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            z = 0.0;
            dp = 1.0;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

impl QuadratureRule {
    /// Tensor Gauss-Legendre rule with `n` points per direction.
    pub fn gauss(n: usize) -> Self {
        let (x, w) = gauss_legendre_1d(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                points.push((x[i], x[j]));
                weights.push(w[i] * w[j]);
            }
        }
        Self {
            points,
            weights,
            per_dir: n,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Stiffness integration rule; only 2x2 and 3x3 are offered.
pub fn gauss_rule(n: usize) -> Result<QuadratureRule> {
    match n {
        2 | 3 => Ok(QuadratureRule::gauss(n)),
        _ => Err(ShellError::Unsupported(format!("{n}x{n} stiffness quadrature (2 or 3)"))),
    }
}

/// Nonempty knot-span pair with the control points supporting it.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub id: usize,
    pub span_u: usize,
    pub span_v: usize,
    pub u: (f64, f64),
    pub v: (f64, f64),
    /// Global control point indices in local basis order.
    pub cps: Vec<usize>,
}

impl Element {
    pub fn map(&self, xi: f64, eta: f64) -> (f64, f64) {
        (
            self.u.0 + 0.5 * (xi + 1.0) * (self.u.1 - self.u.0),
            self.v.0 + 0.5 * (eta + 1.0) * (self.v.1 - self.v.0),
        )
    }

    /// Parametric area per unit parent area.
    pub fn parent_jacobian(&self) -> f64 {
        0.25 * (self.u.1 - self.u.0) * (self.v.1 - self.v.0)
    }

    /// Corners ordered `(u0, v0), (u1, v0), (u0, v1), (u1, v1)`.
    pub fn corners(&self) -> [(f64, f64); 4] {
        [(self.u.0, self.v.0), (self.u.1, self.v.0), (self.u.0, self.v.1), (self.u.1, self.v.1)]
    }

    pub fn dofs(&self) -> Vec<usize> {
        self.cps.iter().flat_map(|&c| [3 * c, 3 * c + 1, 3 * c + 2]).collect()
    }

    pub fn contains(&self, t1: f64, t2: f64) -> bool {
        t1 >= self.u.0 && t1 <= self.u.1 && t2 >= self.v.0 && t2 <= self.v.1
    }
}

/// Bilinear corner interpolation weights at parent coordinates, in [`Element::corners`] order.
pub fn bilinear_weights(xi: f64, eta: f64) -> [f64; 4] {
    let (a0, a1) = (0.5 * (1.0 - xi), 0.5 * (1.0 + xi));
    let (b0, b1) = (0.5 * (1.0 - eta), 0.5 * (1.0 + eta));
    [a0 * b0, a1 * b0, a0 * b1, a1 * b1]
}

/// Patch boundary `theta_1 = first/last` (`U0`/`U1`) or `theta_2 = first/last` (`V0`/`V1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    U0,
    U1,
    V0,
    V1,
}

/// A NURBS surface with its element connectivity; dof `3 * cp + i` is component `i` of control point `cp`.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    surface: NurbsSurface,
    elements: Vec<Element>,
}

impl Patch {
    pub fn new(surface: NurbsSurface) -> Self {
        let ku = surface.knots(Direction::U).clone();
        let kv = surface.knots(Direction::V).clone();
        let mut elements = Vec::with_capacity(ku.num_elements() * kv.num_elements());
        for (sv, v0, v1) in kv.elements() {
            for (su, u0, u1) in ku.elements() {
                elements.push(Element {
                    id: elements.len(),
                    span_u: su,
                    span_v: sv,
                    u: (u0, u1),
                    v: (v0, v1),
                    cps: surface.local_indices(su, sv),
                });
            }
        }
        Self { surface, elements }
    }

    pub fn surface(&self) -> &NurbsSurface {
        &self.surface
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn num_dofs(&self) -> usize {
        3 * self.surface.num_control_points()
    }

    /// Mesh size `(elements along u, elements along v)`.
    pub fn mesh(&self) -> (usize, usize) {
        (
            self.surface.knots(Direction::U).num_elements(),
            self.surface.knots(Direction::V).num_elements(),
        )
    }

    /// Element containing a parametric point (right-endpoint convention on the last span).
    pub fn element_at(&self, t1: f64, t2: f64) -> Result<&Element> {
        let su = self.surface.knots(Direction::U).find_span(t1)?;
        let sv = self.surface.knots(Direction::V).find_span(t2)?;
        let pu = self.surface.degrees().0;
        let pv = self.surface.degrees().1;
        let (neu, _) = self.mesh();
        Ok(&self.elements[(su - pu) + neu * (sv - pv)])
    }

    /// Control points in the `depth`-th row parallel to `edge` (0 = on the edge).
    pub fn edge_row(&self, edge: Edge, depth: usize) -> Vec<usize> {
        let (nu, nv) = self.surface.grid();
        match edge {
            Edge::U0 => (0..nv).map(|j| depth + nu * j).collect(),
            Edge::U1 => (0..nv).map(|j| nu - 1 - depth + nu * j).collect(),
            Edge::V0 => (0..nu).map(|i| i + nu * depth).collect(),
            Edge::V1 => (0..nu).map(|i| i + nu * (nv - 1 - depth)).collect(),
        }
    }

    /// Basis and frame at a parametric point of an element.
    pub fn eval_in(&self, e: &Element, t1: f64, t2: f64) -> Result<(BasisEval, SurfaceFrame)> {
        let basis = self
            .surface
            .basis_in_span(e.span_u, e.span_v, t1, t2, 2)
            .map_err(|err| err.in_element(e.id))?;
        let frame = SurfaceFrame::from_point(&point_from_basis(&self.surface, &basis), (t1, t2))
            .map_err(|err| err.in_element(e.id))?;
        Ok((basis, frame))
    }

    /// Compatible membrane strain rows at the four element corners.
    pub fn corner_membrane_ops(&self, e: &Element) -> Result<[StrainOperator; 4]> {
        let (pu, pv) = self.surface.degrees();
        if (pu, pv) != (2, 2) {
            return Err(ShellError::Unsupported(format!(
                "assumed strains need biquadratic patches, found degrees ({pu}, {pv})"
            )));
        }
        let c = e.corners();
        let op = |k: usize| -> Result<StrainOperator> {
            let (b, f) = self.eval_in(e, c[k].0, c[k].1)?;
            Ok(membrane_strain_op(&f, &b))
        };
        Ok([op(0)?, op(1)?, op(2)?, op(3)?])
    }

    /// Assumed membrane strain rows at parent coordinates, from cached corner rows.
    pub fn assumed_membrane_op(corners: &[StrainOperator; 4], xi: f64, eta: f64) -> StrainOperator {
        let w = bilinear_weights(xi, eta);
        StrainOperator::combine(&w, &[&corners[0], &corners[1], &corners[2], &corners[3]])
    }
}

/// Element stiffness split into membrane and bending parts; dofs follow [`Element::dofs`].
#[derive(Debug, Clone, PartialEq)]
pub struct ElementStiffness {
    pub n: usize,
    pub membrane: Vec<f64>,
    pub bending: Vec<f64>,
}

impl ElementStiffness {
    fn zeros(n: usize) -> Self {
        Self {
            n,
            membrane: vec![0.0; n * n],
            bending: vec![0.0; n * n],
        }
    }

    pub fn total(&self) -> Vec<f64> {
        self.membrane.iter().zip(&self.bending).map(|(a, b)| a + b).collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.membrane[i * self.n + j] + self.bending[i * self.n + j]
    }
}

/// `k += scale * B^T D B` with Voigt rows `(B11, B22, 2 B12)`; upper triangle only.
fn add_btdb(k: &mut [f64], n: usize, op: &StrainOperator, d: &Matrix3<f64>, scale: f64) {
    let rows = [&op.rows[0], &op.rows[1], &op.rows[2]];
    let voigt = [1.0, 1.0, 2.0];
    let mut db = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..3 {
        for j in 0..3 {
            let dij = d[(i, j)] * voigt[j] * scale;
            if dij != 0.0 {
                for (o, r) in db[i].iter_mut().zip(rows[j].iter()) {
                    *o += dij * r;
                }
            }
        }
    }
    for a in 0..n {
        let ba = [rows[0][a], rows[1][a], 2.0 * rows[2][a]];
        if ba == [0.0; 3] {
            continue;
        }
        let row = &mut k[a * n..(a + 1) * n];
        for b in a..n {
            row[b] += ba[0] * db[0][b] + ba[1] * db[1][b] + ba[2] * db[2][b];
        }
    }
}

fn symmetrize_upper(k: &mut [f64], n: usize) {
    for a in 0..n {
        for b in a + 1..n {
            k[b * n + a] = k[a * n + b];
        }
    }
}

/// Element stiffness for either element kind.
pub fn element_stiffness(
    patch: &Patch,
    e: &Element,
    mat: &ShellMaterial,
    rule: &QuadratureRule,
    kind: ElementKind,
) -> Result<ElementStiffness> {
    let n = 3 * e.cps.len();
    let mut k = ElementStiffness::zeros(n);
    let corners = match kind {
        ElementKind::Cas => Some(patch.corner_membrane_ops(e)?),
        ElementKind::Cs => None,
    };
    let pj = e.parent_jacobian();
    for (&(xi, eta), &w) in rule.points.iter().zip(&rule.weights) {
        let (t1, t2) = e.map(xi, eta);
        let (basis, frame) = patch.eval_in(e, t1, t2)?;
        let da = w * pj * frame.jac;
        let mop = match &corners {
            Some(c) => Patch::assumed_membrane_op(c, xi, eta),
            None => membrane_strain_op(&frame, &basis),
        };
        add_btdb(&mut k.membrane, n, &mop, &membrane_matrix(&frame, mat), da);
        add_btdb(&mut k.bending, n, &bending_strain_op(&frame, &basis), &bending_matrix(&frame, mat), da);
    }
    symmetrize_upper(&mut k.membrane, n);
    symmetrize_upper(&mut k.bending, n);
    Ok(k)
}

pub fn element_stiffness_cs(patch: &Patch, e: &Element, mat: &ShellMaterial, rule: &QuadratureRule) -> Result<ElementStiffness> {
    element_stiffness(patch, e, mat, rule, ElementKind::Cs)
}

pub fn element_stiffness_cas(patch: &Patch, e: &Element, mat: &ShellMaterial, rule: &QuadratureRule) -> Result<ElementStiffness> {
    element_stiffness(patch, e, mat, rule, ElementKind::Cas)
}

/// Upper sparsity pattern: two dofs couple iff their control points share an element.
pub fn sparsity_pattern(patch: &Patch) -> SparseSymmetric {
    let s = patch.surface();
    let (nu, nv) = s.grid();
    let (pu, pv) = s.degrees();
    let ncp = nu * nv;
    // tensor-product supports without repeated interior knots overlap iff index gaps are <= degree
    let mut rows = Vec::with_capacity(3 * ncp);
    for cp in 0..ncp {
        let (i, j) = (cp % nu, cp / nu);
        let mut cps = Vec::new();
        for jj in j.saturating_sub(pv)..=(j + pv).min(nv - 1) {
            for ii in i.saturating_sub(pu)..=(i + pu).min(nu - 1) {
                let c = ii + nu * jj;
                if c >= cp {
                    cps.push(c);
                }
            }
        }
        cps.sort_unstable();
        for comp in 0..3 {
            let row = 3 * cp + comp;
            let mut cols: Vec<usize> = cps
                .iter()
                .flat_map(|&c| [3 * c, 3 * c + 1, 3 * c + 2])
                .filter(|&d| d >= row)
                .collect();
            cols.sort_unstable();
            rows.push(cols);
        }
    }
    SparseSymmetric::with_pattern(3 * ncp, rows)
}

/// Assembled stiffness with its membrane/bending split kept per element kind.
pub fn assemble(patch: &Patch, mat: &ShellMaterial, rule: &QuadratureRule, kind: ElementKind) -> Result<SparseSymmetric> {
    let mut k = sparsity_pattern(patch);
    for e in patch.elements() {
        let ke = element_stiffness(patch, e, mat, rule, kind)?;
        let dofs = e.dofs();
        for (a, &ga) in dofs.iter().enumerate() {
            for (b, &gb) in dofs.iter().enumerate() {
                if ga <= gb {
                    k.add(ga, gb, ke.get(a, b));
                }
            }
        }
    }
    Ok(k)
}

/// Consistent load of a force per unit area `f(x)` given as a function of position.
pub fn load_area(patch: &Patch, rule: &QuadratureRule, f: impl Fn(&Vector3<f64>) -> Vector3<f64>) -> Result<Vec<f64>> {
    let s = patch.surface();
    let mut out = vec![0.0; patch.num_dofs()];
    for e in patch.elements() {
        let pj = e.parent_jacobian();
        for (&(xi, eta), &w) in rule.points.iter().zip(&rule.weights) {
            let (t1, t2) = e.map(xi, eta);
            let (basis, frame) = patch.eval_in(e, t1, t2)?;
            let x = point_from_basis(s, &basis).r;
            let fx = f(&x) * (w * pj * frame.jac);
            for (a, &cp) in e.cps.iter().enumerate() {
                for i in 0..3 {
                    out[3 * cp + i] += basis.values[a] * fx[i];
                }
            }
        }
    }
    Ok(out)
}

/// Consistent load of a constant force per unit length along a patch edge.
pub fn load_edge_line(patch: &Patch, edge: Edge, points: usize, q: Vector3<f64>) -> Result<Vec<f64>> {
    let s = patch.surface();
    let ((u0, u1), (v0, v1)) = s.param_range();
    let (x, w) = gauss_legendre_1d(points);
    let mut out = vec![0.0; patch.num_dofs()];
    let (along, fixed) = match edge {
        Edge::U0 => (Direction::V, u0),
        Edge::U1 => (Direction::V, u1),
        Edge::V0 => (Direction::U, v0),
        Edge::V1 => (Direction::U, v1),
    };
    for (_, lo, hi) in s.knots(along).elements() {
        for (&xi, &wi) in x.iter().zip(&w) {
            let t = lo + 0.5 * (xi + 1.0) * (hi - lo);
            let (t1, t2) = match along {
                Direction::V => (fixed, t),
                Direction::U => (t, fixed),
            };
            let e = patch.element_at(t1, t2)?;
            let basis = s.basis_in_span(e.span_u, e.span_v, t1, t2, 1)?;
            let p = point_from_basis(s, &basis);
            let tangent = match along {
                Direction::V => p.d1[1],
                Direction::U => p.d1[0],
            };
            let scale = wi * 0.5 * (hi - lo) * tangent.norm();
            for (a, &cp) in e.cps.iter().enumerate() {
                for i in 0..3 {
                    out[3 * cp + i] += basis.values[a] * q[i] * scale;
                }
            }
        }
    }
    Ok(out)
}

/// Point force scattered with the basis values at `(t1, t2)`.
pub fn load_point(patch: &Patch, t1: f64, t2: f64, p: Vector3<f64>) -> Result<Vec<f64>> {
    let s = patch.surface();
    let e = patch.element_at(t1, t2)?;
    let basis = s.basis_in_span(e.span_u, e.span_v, t1, t2, 0)?;
    let mut out = vec![0.0; patch.num_dofs()];
    for (a, &cp) in e.cps.iter().enumerate() {
        for i in 0..3 {
            out[3 * cp + i] += basis.values[a] * p[i];
        }
    }
    Ok(out)
}

/// Homogeneous constraints: fixed dofs and ties `u[slave] = u[master]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Constraints {
    fixed: BTreeSet<usize>,
    ties: BTreeMap<usize, usize>,
}

impl Constraints {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fix(&mut self, dof: usize) -> &mut Self {
        self.fixed.insert(dof);
        self
    }

    /// Fix components of every control point in `cps`.
    pub fn fix_points(&mut self, cps: &[usize], comps: &[usize]) -> &mut Self {
        for &c in cps {
            for &i in comps {
                self.fixed.insert(3 * c + i);
            }
        }
        self
    }

    pub fn tie(&mut self, slave: usize, master: usize) -> &mut Self {
        self.ties.insert(slave, master);
        self
    }

    pub fn fixed(&self) -> &BTreeSet<usize> {
        &self.fixed
    }

    pub fn ties(&self) -> &BTreeMap<usize, usize> {
        &self.ties
    }

    /// Map each dof to its reduced index, or `None` when it is fixed.
    pub fn reduction_map(&self, ndof: usize) -> Result<(Vec<Option<usize>>, usize)> {
        for &d in self.fixed.iter().chain(self.ties.keys()).chain(self.ties.values()) {
            if d >= ndof {
                return Err(ShellError::InvalidConstraint(format!("dof {d} out of range (0..{ndof})")));
            }
        }
        // resolve chains of ties to a root dof
        let root = |mut d: usize| -> Result<usize> {
            for _ in 0..=self.ties.len() {
                match self.ties.get(&d) {
                    Some(&m) => d = m,
                    None => return Ok(d),
                }
            }
            Err(ShellError::InvalidConstraint(format!("cyclic tie through dof {d}")))
        };
        let mut map = vec![None; ndof];
        let mut next = 0;
        for (d, slot) in map.iter_mut().enumerate() {
            if self.ties.contains_key(&d) || self.fixed.contains(&d) {
                continue;
            }
            *slot = Some(next);
            next += 1;
        }
        for &slave in self.ties.keys() {
            let r = root(slave)?;
            map[slave] = if self.fixed.contains(&slave) { None } else { map[r] };
        }
        if next == 0 {
            return Err(ShellError::EmptySystem);
        }
        Ok((map, next))
    }
}

/// Assembled stiffness, load and constraints of one analysis.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub k: SparseSymmetric,
    pub f: Vec<f64>,
    pub constraints: Constraints,
}

/// System restricted to the free dofs, with the map back to the full dof vector.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub k: SparseSymmetric,
    pub f: Vec<f64>,
    pub map: Vec<Option<usize>>,
}

impl ReducedSystem {
    pub fn recover(&self, u: &[f64]) -> Vec<f64> {
        self.map.iter().map(|m| m.map_or(0.0, |r| u[r])).collect()
    }
}

/// Eliminate constrained dofs: `K_r = P^T K P`, `f_r = P^T f`.
pub fn apply_constraints(sys: &GlobalSystem) -> Result<ReducedSystem> {
    let n = sys.k.dim();
    let (map, nr) = sys.constraints.reduction_map(n)?;
    let mut entries = Vec::with_capacity(sys.k.nnz_upper());
    for (i, j, v) in sys.k.upper_entries() {
        if let (Some(ri), Some(rj)) = (map[i], map[j]) {
            // an off-diagonal pair collapsing onto one reduced dof contributes twice
            let v = if ri == rj && i != j { 2.0 * v } else { v };
            entries.push((ri.min(rj), ri.max(rj), v));
        }
    }
    let mut f = vec![0.0; nr];
    for (i, m) in map.iter().enumerate() {
        if let Some(r) = m {
            f[*r] += sys.f[i];
        }
    }
    Ok(ReducedSystem {
        k: SparseSymmetric::from_triplets(nr, &entries),
        f,
        map,
    })
}
