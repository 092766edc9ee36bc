//! Sparse symmetric storage and the direct SPD solve.

use faer::prelude::*;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::linalg::LltError;
use faer::sparse::{SparseColMat, Triplet};
use faer::Side;

use crate::error::{Result, ShellError};

/// Symmetric matrix stored as its upper triangle in compressed rows.
/// Column indices are sorted within each row and the diagonal is always present.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetric {
    /// Zero matrix on a prescribed upper pattern; each row must be sorted and start with its diagonal.
    pub fn with_pattern(n: usize, rows: Vec<Vec<usize>>) -> Self {
        assert_eq!(rows.len(), n);
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for (i, r) in rows.into_iter().enumerate() {
            debug_assert!(r.first() == Some(&i) && r.windows(2).all(|w| w[0] < w[1]));
            cols.extend(r);
            row_ptr.push(cols.len());
        }
        let nnz = cols.len();
        Self {
            n,
            row_ptr,
            cols,
            values: vec![0.0; nnz],
        }
    }

    /// Sum duplicate entries; `(i, j)` and `(j, i)` address the same stored value.
    /// Summation order per entry follows the input order.
    pub fn from_triplets(n: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in rows.iter_mut().enumerate() {
            row.push((i, 0.0));
        }
        for &(i, j, v) in entries {
            let (r, c) = if i <= j { (i, j) } else { (j, i) };
            rows[r].push((c, v));
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut values = Vec::new();
        for mut row in rows {
            // stable sort keeps input order among duplicates
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_upper(&self) -> usize {
        self.cols.len()
    }

    /// Stored `(column, value)` pairs of row `i`, columns `>= i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn row_columns(&self, i: usize) -> &[usize] {
        &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        let lo = self.row_ptr[r];
        self.cols[lo..self.row_ptr[r + 1]].binary_search(&c).ok().map(|k| lo + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Add to a structurally present entry; panics outside the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
        self.values[k] += v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.values[self.row_ptr[i]]).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                y[i] += v * x[j];
                if j != i {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let mut s = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                s[i] += v.abs();
                if j != i {
                    s[j] += v.abs();
                }
            }
        }
        s.into_iter().fold(0.0, f64::max)
    }

    /// Upper-triangle entries `(i, j, value)` with `i <= j`.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, j, v) in self.upper_entries() {
            d[i][j] = v;
            d[j][i] = v;
        }
        d
    }
}

/// Solution of `K u = f` with its relative residual `|K u - f| / |f|`.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub u: Vec<f64>,
    pub rel_residual: f64,
    pub refinement_steps: usize,
    /// Diagonal shift of the factorized matrix; zero unless the plain factorization broke down.
    pub shift: f64,
}

const MAX_REFINEMENT: usize = 3;
const TARGET_RESIDUAL: f64 = 1e-13;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Unevaluated sum `hi + lo` used to accumulate residuals without cancellation error.
#[derive(Debug, Clone, Copy, Default)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    fn add(&mut self, x: f64) {
        let s = self.hi + x;
        let bb = s - self.hi;
        let err = (self.hi - (s - bb)) + (x - bb);
        self.hi = s;
        self.lo += err;
    }

    /// Add the exact product `a * b`.
    fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        let e = a.mul_add(b, -p);
        self.add(p);
        self.lo += e;
    }

    fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

/// `f - K u` with products and sums carried in double-double precision.
fn residual_extended(k: &SparseSymmetric, u: &[f64], f: &[f64]) -> Vec<f64> {
    let mut acc: Vec<DoubleDouble> = f.iter().map(|&x| DoubleDouble { hi: x, lo: 0.0 }).collect();
    for i in 0..k.dim() {
        for (j, v) in k.row(i) {
            acc[i].add_product(-v, u[j]);
            if j != i {
                acc[j].add_product(-v, u[i]);
            }
        }
    }
    acc.iter().map(DoubleDouble::value).collect()
}

/// Relative residual `|K u - f| / |f|` evaluated in extended precision.
pub fn relative_residual(k: &SparseSymmetric, u: &[f64], f: &[f64]) -> f64 {
    let fnorm = norm(f);
    let r = norm(&residual_extended(k, u, f));
    if fnorm == 0.0 {
        r
    } else {
        r / fnorm
    }
}

/// Normwise backward error `|KU - F| / (|K| |U| + |F|)`, with the infinity norm of `K`
/// bounding its spectral norm. Unlike the relative residual this is not inflated by conditioning.
pub fn backward_error(k: &SparseSymmetric, u: &[f64], f: &[f64]) -> f64 {
    let den = k.norm_inf() * norm(u) + norm(f);
    let r = norm(&residual_extended(k, u, f));
    if den == 0.0 {
        r
    } else {
        r / den
    }
}

fn factor(k: &SparseSymmetric, shift: f64) -> std::result::Result<Llt<usize, f64>, ShellError> {
    let n = k.dim();
    let triplets: Vec<Triplet<usize, usize, f64>> = k
        .upper_entries()
        .map(|(i, j, v)| Triplet::new(i, j, if i == j { v + shift } else { v }))
        .collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| ShellError::Solver(format!("{e:?}")))?;
    mat.sp_cholesky(Side::Upper).map_err(|e| match e {
        LltError::Numeric(faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index }) => {
            ShellError::Indefinite(index)
        }
        other => ShellError::Solver(format!("{other:?}")),
    })
}

/// Diagonal shifts tried, relative to the largest diagonal entry, when the plain
/// factorization breaks down on a semidefinite matrix.
const SHIFTS: [f64; 7] = [1e-14, 1e-13, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8];
const MAX_SHIFTED_REFINEMENT: usize = 200;
/// A shifted solve that cannot reduce the residual below this is declared indefinite.
const SHIFTED_ACCEPT: f64 = 1e-6;

/// Sparse Cholesky solve with a fill-reducing ordering, followed by iterative
/// refinement with extended-precision residuals.
///
/// Positive semidefinite matrices with a consistent right-hand side are solved
/// through a slightly shifted factorization iterated against the unshifted matrix;
/// the result then carries no component along the null space.
pub fn solve_spd(k: &SparseSymmetric, f: &[f64]) -> Result<SolveReport> {
    let n = k.dim();
    if n == 0 {
        return Err(ShellError::EmptySystem);
    }
    assert_eq!(f.len(), n);
    let diag = k.diagonal();
    if let Some(i) = diag.iter().position(|&d| d == 0.0) {
        return Err(ShellError::Singular(i));
    }
    let (llt, shift) = match factor(k, 0.0) {
        Ok(l) => (l, 0.0),
        Err(ShellError::Indefinite(first)) => {
            let dmax = diag.iter().fold(0.0f64, |a, &d| a.max(d.abs()));
            SHIFTS
                .iter()
                .find_map(|s| factor(k, s * dmax).ok().map(|l| (l, s * dmax)))
                .ok_or(ShellError::Indefinite(first))?
        }
        Err(e) => return Err(e),
    };

    let fnorm = norm(f);
    if fnorm == 0.0 {
        return Ok(SolveReport {
            u: vec![0.0; n],
            rel_residual: 0.0,
            refinement_steps: 0,
            shift,
        });
    }
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let x = llt.solve(Col::<f64>::from_fn(n, |i| rhs[i]));
        (0..n).map(|i| x[i]).collect()
    };
    let mut u = solve(f);
    let mut r = residual_extended(k, &u, f);
    let mut rel = norm(&r) / fnorm;
    let mut steps = 0;
    let max_steps = if shift == 0.0 { MAX_REFINEMENT } else { MAX_SHIFTED_REFINEMENT };
    let mut stalls = 0;
    while rel > TARGET_RESIDUAL && steps < max_steps {
        let du = solve(&r);
        let cand: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + b).collect();
        let rc = residual_extended(k, &cand, f);
        let relc = norm(&rc) / fnorm;
        steps += 1;
        if relc >= rel {
            break;
        }
        // stop once progress per step is negligible
        stalls = if relc > 0.9 * rel { stalls + 1 } else { 0 };
        (u, r, rel) = (cand, rc, relc);
        if stalls >= 5 {
            break;
        }
    }
    if !rel.is_finite() {
        return Err(ShellError::Solver("non-finite solution".into()));
    }
    if shift > 0.0 && rel > SHIFTED_ACCEPT {
        return Err(ShellError::Indefinite(0));
    }
    Ok(SolveReport {
        u,
        rel_residual: rel,
        refinement_steps: steps,
        shift,
    })
}
