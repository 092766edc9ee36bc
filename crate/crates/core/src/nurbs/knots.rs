use crate::error::{Result, ShellError};

/// Open (clamped) knot vector without repeated interior knots.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    knots: Vec<f64>,
    degree: usize,
}

/// Nonzero univariate B-spline functions on one knot span, with derivatives.
///
/// `ders[k][j]` is the k-th derivative of basis function `span - degree + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanBasis {
    pub span: usize,
    pub ders: Vec<Vec<f64>>,
}

impl KnotVector {
    pub fn new(knots: Vec<f64>, degree: usize) -> Result<Self> {
        let m = knots.len();
        if m < 2 * (degree + 1) {
            return Err(ShellError::InvalidKnots(format!(
                "{m} knots cannot support {} basis functions of degree {degree}",
                degree + 1
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(ShellError::InvalidKnots("non-finite knot".into()));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(ShellError::InvalidKnots("knots must be nondecreasing".into()));
        }
        let (first, last) = (knots[0], knots[m - 1]);
        if knots[..=degree].iter().any(|&k| k != first) || knots[m - degree - 1..].iter().any(|&k| k != last) {
            return Err(ShellError::InvalidKnots(format!(
                "end knots must be repeated {} times",
                degree + 1
            )));
        }
        if first.is_nan() || last.is_nan() || first >= last {
            return Err(ShellError::InvalidKnots("empty parameter range".into()));
        }
        // interior breakpoints: strictly increasing from knots[degree] to knots[m - degree - 1]
        if knots[degree..m - degree].windows(2).any(|w| w[1] <= w[0]) {
            return Err(ShellError::InvalidKnots(
                "repeated interior knots are not supported".into(),
            ));
        }
        Ok(Self { knots, degree })
    }

    /// Open knot vector on [0, 1] with `elements` equal spans.
    pub fn uniform(degree: usize, elements: usize) -> Result<Self> {
        if elements == 0 {
            return Err(ShellError::InvalidKnots("at least one element required".into()));
        }
        let mut knots = vec![0.0; degree + 1];
        knots.extend((1..elements).map(|k| k as f64 / elements as f64));
        knots.extend(std::iter::repeat_n(1.0, degree + 1));
        Self::new(knots, degree)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn first(&self) -> f64 {
        self.knots[0]
    }

    pub fn last(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    pub fn num_elements(&self) -> usize {
        self.num_basis() - self.degree
    }

    /// Distinct breakpoints, first to last.
    pub fn breakpoints(&self) -> &[f64] {
        &self.knots[self.degree..self.knots.len() - self.degree]
    }

    /// Nonempty spans as `(span index, lower knot, upper knot)`.
    pub fn elements(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        (self.degree..self.num_basis()).map(move |i| (i, self.knots[i], self.knots[i + 1]))
    }

    /// Index `i` with `knots[i] <= t < knots[i + 1]`; the last knot belongs to the last span.
    pub fn find_span(&self, t: f64) -> Result<usize> {
        let (lo, hi) = (self.first(), self.last());
        if !(t >= lo && t <= hi) {
            return Err(ShellError::Domain { value: t, lo, hi });
        }
        let n = self.num_basis();
        if t >= self.knots[n] {
            return Ok(n - 1);
        }
        // partition_point gives the first knot strictly greater than t
        let upper = self.knots[self.degree..=n].partition_point(|&k| k <= t) + self.degree;
        Ok(upper - 1)
    }

    /// Nonzero basis functions and derivatives up to `order` at `t`.
    pub fn basis_ders(&self, t: f64, order: usize) -> Result<SpanBasis> {
        let span = self.find_span(t)?;
        self.basis_ders_in_span(span, t, order)
    }

    /// As [`basis_ders`](Self::basis_ders) but on a prescribed span; `t` may sit on either end of it.
    pub fn basis_ders_in_span(&self, span: usize, t: f64, order: usize) -> Result<SpanBasis> {
        if order > 2 {
            return Err(ShellError::Unsupported(format!(
                "basis derivatives of order {order} (at most 2)"
            )));
        }
        if span < self.degree || span >= self.num_basis() {
            return Err(ShellError::InvalidKnots(format!("span {span} is not a nonempty span")));
        }
        let (lo, hi) = (self.knots[span], self.knots[span + 1]);
        let tol = 1e-12 * (self.last() - self.first());
        if t < lo - tol || t > hi + tol {
            return Err(ShellError::Domain { value: t, lo, hi });
        }
        Ok(SpanBasis {
            span,
            ders: ders_basis_funs(&self.knots, self.degree, span, t, order),
        })
    }
}

/// Cox-de Boor recurrence with derivatives (triangular table form).
fn ders_basis_funs(u: &[f64], p: usize, span: usize, t: f64, n: usize) -> Vec<Vec<f64>> {
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = t - u[span + 1 - j];
        right[j] = u[span + j] - t;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    let mut ders = vec![vec![0.0; p + 1]; n + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let mut a = vec![vec![0.0; p + 1]; 2];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=n.min(p) {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if (r as isize - 1) <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = p as f64;
    for (k, row) in ders.iter_mut().enumerate().take(n.min(p) + 1).skip(1) {
        for v in row.iter_mut() {
            *v *= factor;
        }
        factor *= (p - k) as f64;
    }
    ders
}
