use nalgebra::Vector3;

use super::knots::{KnotVector, SpanBasis};
use crate::error::{Result, ShellError};

/// Parametric direction of a tensor-product surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    U,
    V,
}

/// Rational tensor-product surface. Control points are stored as Cartesian
/// `(x, y, z)` plus weight `w`, `u` index running fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct NurbsSurface {
    ku: KnotVector,
    kv: KnotVector,
    control: Vec<[f64; 4]>,
}

/// Position and parametric derivatives of the surface. Second derivatives are
/// ordered `(uu, vv, uv)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub r: Vector3<f64>,
    pub d1: [Vector3<f64>; 2],
    pub d2: [Vector3<f64>; 3],
}

/// Rational basis functions supported on one element and their partial derivatives.
///
/// Local function `i + (p_u + 1) * j` corresponds to control point
/// `(span_u - p_u + i, span_v - p_v + j)`. Second derivatives are `(uu, vv, uv)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisEval {
    pub span_u: usize,
    pub span_v: usize,
    pub values: Vec<f64>,
    pub d1: Vec<[f64; 2]>,
    pub d2: Vec<[f64; 3]>,
}

impl BasisEval {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl NurbsSurface {
    pub fn new(ku: KnotVector, kv: KnotVector, control: Vec<[f64; 4]>) -> Result<Self> {
        let (nu, nv) = (ku.num_basis(), kv.num_basis());
        if control.len() != nu * nv {
            return Err(ShellError::InvalidSurface(format!(
                "expected {}x{} control points, got {}",
                nu,
                nv,
                control.len()
            )));
        }
        if let Some(k) = control.iter().position(|c| c.iter().any(|x| !x.is_finite()) || c[3] <= 0.0) {
            return Err(ShellError::InvalidSurface(format!(
                "control point {k} has a non-positive or non-finite entry"
            )));
        }
        Ok(Self { ku, kv, control })
    }

    pub fn knots(&self, dir: Direction) -> &KnotVector {
        match dir {
            Direction::U => &self.ku,
            Direction::V => &self.kv,
        }
    }

    pub fn degrees(&self) -> (usize, usize) {
        (self.ku.degree(), self.kv.degree())
    }

    /// Control grid dimensions `(n_u, n_v)`.
    pub fn grid(&self) -> (usize, usize) {
        (self.ku.num_basis(), self.kv.num_basis())
    }

    pub fn num_control_points(&self) -> usize {
        self.control.len()
    }

    pub fn control_points(&self) -> &[[f64; 4]] {
        &self.control
    }

    pub fn control_point(&self, i: usize, j: usize) -> [f64; 4] {
        self.control[i + self.ku.num_basis() * j]
    }

    pub fn point(&self, index: usize) -> Vector3<f64> {
        let c = self.control[index];
        Vector3::new(c[0], c[1], c[2])
    }

    pub fn param_range(&self) -> ((f64, f64), (f64, f64)) {
        ((self.ku.first(), self.ku.last()), (self.kv.first(), self.kv.last()))
    }

    fn spans_at(&self, t1: f64, t2: f64) -> Result<(usize, usize)> {
        Ok((self.ku.find_span(t1)?, self.kv.find_span(t2)?))
    }

    /// Surface point and derivatives up to `order`, by projecting the homogeneous
    /// (weighted) surface and its derivatives through the quotient rule.
    pub fn eval(&self, t1: f64, t2: f64, order: usize) -> Result<SurfacePoint> {
        let (su, sv) = self.spans_at(t1, t2)?;
        let bu = self.ku.basis_ders_in_span(su, t1, order)?;
        let bv = self.kv.basis_ders_in_span(sv, t2, order)?;
        let (pu, pv) = self.degrees();
        let nu = self.ku.num_basis();

        // homogeneous derivatives: index (du, dv) with du + dv <= order
        let mut a = [[Vector3::zeros(); 3]; 3];
        let mut w = [[0.0; 3]; 3];
        for j in 0..=pv {
            for i in 0..=pu {
                let c = self.control[(su - pu + i) + nu * (sv - pv + j)];
                let pw = Vector3::new(c[0] * c[3], c[1] * c[3], c[2] * c[3]);
                for du in 0..=order {
                    for dv in 0..=(order - du) {
                        let n = bu.ders[du][i] * bv.ders[dv][j];
                        a[du][dv] += pw * n;
                        w[du][dv] += c[3] * n;
                    }
                }
            }
        }
        let r = a[0][0] / w[0][0];
        let mut pt = SurfacePoint {
            r,
            d1: [Vector3::zeros(); 2],
            d2: [Vector3::zeros(); 3],
        };
        if order >= 1 {
            let ru = (a[1][0] - r * w[1][0]) / w[0][0];
            let rv = (a[0][1] - r * w[0][1]) / w[0][0];
            pt.d1 = [ru, rv];
            if order >= 2 {
                let ruu = (a[2][0] - ru * (2.0 * w[1][0]) - r * w[2][0]) / w[0][0];
                let rvv = (a[0][2] - rv * (2.0 * w[0][1]) - r * w[0][2]) / w[0][0];
                let ruv = (a[1][1] - ru * w[0][1] - rv * w[1][0] - r * w[1][1]) / w[0][0];
                pt.d2 = [ruu, rvv, ruv];
            }
        }
        Ok(pt)
    }

    /// Rational basis on the element containing `(t1, t2)`.
    pub fn basis(&self, t1: f64, t2: f64, order: usize) -> Result<BasisEval> {
        let (su, sv) = self.spans_at(t1, t2)?;
        self.basis_in_span(su, sv, t1, t2, order)
    }

    /// Rational basis on a prescribed element; the point may lie on its boundary.
    pub fn basis_in_span(&self, su: usize, sv: usize, t1: f64, t2: f64, order: usize) -> Result<BasisEval> {
        let bu = self.ku.basis_ders_in_span(su, t1, order)?;
        let bv = self.kv.basis_ders_in_span(sv, t2, order)?;
        Ok(self.rationalize(&bu, &bv, order))
    }

    fn rationalize(&self, bu: &SpanBasis, bv: &SpanBasis, order: usize) -> BasisEval {
        let (pu, pv) = self.degrees();
        let nu = self.ku.num_basis();
        let nloc = (pu + 1) * (pv + 1);
        let (su, sv) = (bu.span, bv.span);
        let d = |ders: &Vec<Vec<f64>>, k: usize, i: usize| if k < ders.len() { ders[k][i] } else { 0.0 };

        // weighted products and weight function derivatives
        let mut nw = vec![[0.0f64; 6]; nloc]; // (0, u, v, uu, vv, uv)
        let mut wsum = [0.0f64; 6];
        for j in 0..=pv {
            for i in 0..=pu {
                let a = i + (pu + 1) * j;
                let w = self.control[(su - pu + i) + nu * (sv - pv + j)][3];
                let vals = [
                    d(&bu.ders, 0, i) * d(&bv.ders, 0, j),
                    d(&bu.ders, 1, i) * d(&bv.ders, 0, j),
                    d(&bu.ders, 0, i) * d(&bv.ders, 1, j),
                    d(&bu.ders, 2, i) * d(&bv.ders, 0, j),
                    d(&bu.ders, 0, i) * d(&bv.ders, 2, j),
                    d(&bu.ders, 1, i) * d(&bv.ders, 1, j),
                ];
                for k in 0..6 {
                    nw[a][k] = vals[k] * w;
                    wsum[k] += vals[k] * w;
                }
            }
        }
        let w0 = wsum[0];
        let mut out = BasisEval {
            span_u: su,
            span_v: sv,
            values: vec![0.0; nloc],
            d1: vec![[0.0; 2]; nloc],
            d2: vec![[0.0; 3]; nloc],
        };
        for (a, nw) in nw.iter().enumerate() {
            let r = nw[0] / w0;
            out.values[a] = r;
            if order >= 1 {
                let ru = (nw[1] - r * wsum[1]) / w0;
                let rv = (nw[2] - r * wsum[2]) / w0;
                out.d1[a] = [ru, rv];
                if order >= 2 {
                    let ruu = (nw[3] - 2.0 * ru * wsum[1] - r * wsum[3]) / w0;
                    let rvv = (nw[4] - 2.0 * rv * wsum[2] - r * wsum[4]) / w0;
                    let ruv = (nw[5] - ru * wsum[2] - rv * wsum[1] - r * wsum[5]) / w0;
                    out.d2[a] = [ruu, rvv, ruv];
                }
            }
        }
        out
    }

    /// Global control point indices of the local functions in a [`BasisEval`].
    pub fn local_indices(&self, su: usize, sv: usize) -> Vec<usize> {
        let (pu, pv) = self.degrees();
        let nu = self.ku.num_basis();
        let mut idx = Vec::with_capacity((pu + 1) * (pv + 1));
        for j in 0..=pv {
            for i in 0..=pu {
                idx.push((su - pu + i) + nu * (sv - pv + j));
            }
        }
        idx
    }

    /// Insert knots one at a time in homogeneous coordinates.
    pub fn insert_knots(&self, dir: Direction, new_knots: &[f64]) -> Result<Self> {
        let mut s = self.clone();
        for &t in new_knots {
            s = s.insert_knot(dir, t)?;
        }
        Ok(s)
    }

    fn insert_knot(&self, dir: Direction, t: f64) -> Result<Self> {
        let kvec = self.knots(dir);
        let (lo, hi) = (kvec.first(), kvec.last());
        if !(t > lo && t < hi) {
            return Err(ShellError::Domain { value: t, lo, hi });
        }
        let p = kvec.degree();
        let u = kvec.knots();
        let k = kvec.find_span(t)?;
        let mut knots = Vec::with_capacity(u.len() + 1);
        knots.extend_from_slice(&u[..=k]);
        knots.push(t);
        knots.extend_from_slice(&u[k + 1..]);
        let new_kv = KnotVector::new(knots, p)?;

        let (nu, nv) = self.grid();
        let (rows, len) = match dir {
            Direction::U => (nv, nu),
            Direction::V => (nu, nv),
        };
        let at = |line: usize, i: usize| match dir {
            Direction::U => i + nu * line,
            Direction::V => line + nu * i,
        };
        let mut lines: Vec<Vec<[f64; 4]>> = Vec::with_capacity(rows);
        for line in 0..rows {
            let hom: Vec<[f64; 4]> = (0..len)
                .map(|i| {
                    let c = self.control[at(line, i)];
                    [c[0] * c[3], c[1] * c[3], c[2] * c[3], c[3]]
                })
                .collect();
            let mut out = Vec::with_capacity(len + 1);
            for i in 0..=len {
                let q = if i + p <= k {
                    hom[i]
                } else if i > k {
                    hom[i - 1]
                } else {
                    let alpha = (t - u[i]) / (u[i + p] - u[i]);
                    let mut q = [0.0; 4];
                    for c in 0..4 {
                        q[c] = alpha * hom[i][c] + (1.0 - alpha) * hom[i - 1][c];
                    }
                    q
                };
                out.push([q[0] / q[3], q[1] / q[3], q[2] / q[3], q[3]]);
            }
            lines.push(out);
        }

        let (new_nu, new_nv) = match dir {
            Direction::U => (nu + 1, nv),
            Direction::V => (nu, nv + 1),
        };
        let mut control = vec![[0.0; 4]; new_nu * new_nv];
        for (line, pts) in lines.into_iter().enumerate() {
            for (i, c) in pts.into_iter().enumerate() {
                let idx = match dir {
                    Direction::U => i + new_nu * line,
                    Direction::V => line + new_nu * i,
                };
                control[idx] = c;
            }
        }
        let (ku, kv) = match dir {
            Direction::U => (new_kv, self.kv.clone()),
            Direction::V => (self.ku.clone(), new_kv),
        };
        NurbsSurface::new(ku, kv, control)
    }

    /// Bisect every nonempty span `times` times along `dir`.
    pub fn refine_uniform(&self, dir: Direction, times: usize) -> Result<Self> {
        let mut s = self.clone();
        for _ in 0..times {
            let mids: Vec<f64> = s.knots(dir).elements().map(|(_, a, b)| 0.5 * (a + b)).collect();
            s = s.insert_knots(dir, &mids)?;
        }
        Ok(s)
    }

    /// Split a single-element direction into `n` equal parametric spans.
    pub fn subdivide(&self, dir: Direction, n: usize) -> Result<Self> {
        let kvec = self.knots(dir);
        if kvec.num_elements() != 1 {
            return Err(ShellError::Unsupported(format!(
                "subdivision into {n} spans needs a single-element direction, found {}",
                kvec.num_elements()
            )));
        }
        if n == 0 {
            return Err(ShellError::InvalidKnots("zero elements requested".into()));
        }
        let (lo, hi) = (kvec.first(), kvec.last());
        let knots: Vec<f64> = (1..n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
        self.insert_knots(dir, &knots)
    }
}
