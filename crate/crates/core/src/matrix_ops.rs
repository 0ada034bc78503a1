//! Dense complex linear algebra for the rate formulas.
//!
//! Everything here goes through one factorization: a Householder QR of the
//! (conjugate-transposed) wide matrix followed by a one-sided Jacobi SVD of
//! the small triangular factor. For an `r x c` matrix with `r <= c` this
//! gives
//!
//! ```text
//! M = W . diag(sigma) . (Q [U_r; 0])^H
//! ```
//!
//! where `Q` is the product of `r` Householder reflectors of length `c`. The
//! remaining columns of `Q` complete the right-singular basis, which is how
//! the null space is obtained without ever forming the full `c x c` unitary.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;

/// Relative singular-value cutoff used by the pseudo-inverse and rank decisions.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Dense complex matrix stored in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for z in self.row(i).iter().take(8) {
                write!(f, "{:+.4e}{:+.4e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting empty shapes and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape {
                rows,
                cols,
                reason: "dimensions must be at least 1",
            });
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            values.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty {rows}x{cols} matrix");
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    /// Stacks the columns `cols[j]` (each of length `rows`) into a matrix.
    fn from_columns(rows: usize, cols: &[Vec<Complex64>]) -> Self {
        let mut m = Self::zeros(rows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            for (i, &z) in col.iter().enumerate() {
                m.data[i * cols.len() + j] = z;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Matrix product. Panics on inner-dimension mismatch.
    pub fn matmul(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul {}x{} by {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    /// Multiplies row `i` by `factors[i]`, i.e. `diag(factors) * self`.
    pub fn scale_rows(&self, factors: &[f64]) -> Self {
        assert_eq!(factors.len(), self.rows);
        let mut out = self.clone();
        for (i, &f) in factors.iter().enumerate() {
            for z in &mut out.data[i * self.cols..(i + 1) * self.cols] {
                *z *= f;
            }
        }
        out
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn select_cols(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.rows, cols.len(), |i, j| self[(i, cols[j])])
    }

    pub fn sub(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape());
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn row_norm_sqr(&self, i: usize) -> f64 {
        self.row(i).iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn col_norm_sqr(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self.data[i * self.cols + j].norm_sqr()).sum()
    }

    /// Largest Euclidean row norm.
    pub fn max_row_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row_norm_sqr(i))
            .fold(0.0, f64::max)
            .sqrt()
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, rhs: &ComplexMatrix) -> f64 {
        assert_eq!(self.shape(), rhs.shape());
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// `M = U diag(singular_values) V^H`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: ComplexMatrix,
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

impl SvdFactors {
    /// `U diag(s) V^H` using the leading `singular_values.len()` columns of `V`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let k = self.singular_values.len();
        let us = ComplexMatrix::from_fn(self.u.rows(), k, |i, s| {
            self.u[(i, s)] * self.singular_values[s]
        });
        let vh = ComplexMatrix::from_fn(k, self.v.rows(), |s, j| self.v[(j, s)].conj());
        us.matmul(&vh)
    }

    /// Number of singular values above the pseudo-inverse cutoff.
    pub fn rank(&self, rows: usize, cols: usize) -> usize {
        let cutoff = rank_cutoff(&self.singular_values, rows, cols);
        self.singular_values.iter().filter(|&&s| s > cutoff).count()
    }
}

fn rank_cutoff(sigma: &[f64], rows: usize, cols: usize) -> f64 {
    let smax = sigma.first().copied().unwrap_or(0.0);
    rows.max(cols) as f64 * smax * RANK_TOLERANCE
}

#[inline]
fn dotc(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * y;
    }
    acc
}

fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Householder reflectors `H_j = I - tau_j v_j v_j^H`, with `v_j` acting on
/// entries `j..len`. `Q = H_0 H_1 ... H_{p-1}`.
#[derive(Debug, Clone)]
struct Reflectors {
    len: usize,
    vs: Vec<Vec<Complex64>>,
    taus: Vec<f64>,
}

impl Reflectors {
    /// In-place QR of the given columns (all of length `len >= columns.len()`).
    /// On return `columns[c][..=c]` holds column `c` of `R`.
    fn factor(len: usize, columns: &mut [Vec<Complex64>]) -> Self {
        let p = columns.len();
        debug_assert!(p <= len);
        let mut vs = Vec::with_capacity(p);
        let mut taus = Vec::with_capacity(p);
        for j in 0..p {
            let x = &columns[j][j..];
            let xnorm = norm_sqr(x).sqrt();
            if xnorm == 0.0 {
                vs.push(vec![Complex64::new(0.0, 0.0); len - j]);
                taus.push(0.0);
                continue;
            }
            let x0 = x[0];
            let phase = if x0.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                x0 / x0.norm()
            };
            let alpha = -phase * xnorm;
            let mut v = x.to_vec();
            v[0] -= alpha;
            let tau = 2.0 / norm_sqr(&v);
            {
                let col = &mut columns[j];
                col[j] = alpha;
                for z in &mut col[j + 1..] {
                    *z = Complex64::new(0.0, 0.0);
                }
            }
            for col in columns[j + 1..].iter_mut() {
                let seg = &mut col[j..];
                let w = dotc(&v, seg) * tau;
                for (s, vi) in seg.iter_mut().zip(&v) {
                    *s -= w * vi;
                }
            }
            vs.push(v);
            taus.push(tau);
        }
        Self { len, vs, taus }
    }

    fn count(&self) -> usize {
        self.vs.len()
    }

    #[inline]
    fn reflect(&self, j: usize, x: &mut [Complex64]) {
        let tau = self.taus[j];
        if tau == 0.0 {
            return;
        }
        let v = &self.vs[j];
        let seg = &mut x[j..];
        let w = dotc(v, seg) * tau;
        for (s, vi) in seg.iter_mut().zip(v) {
            *s -= w * vi;
        }
    }

    /// `x <- Q x`.
    fn apply_q(&self, x: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.len);
        for j in (0..self.count()).rev() {
            self.reflect(j, x);
        }
    }

    /// `x <- Q^H x`.
    fn apply_qh(&self, x: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.len);
        for j in 0..self.count() {
            self.reflect(j, x);
        }
    }

    /// `Q [top; 0]` for a short vector `top`.
    fn expand(&self, top: &[Complex64], offset: usize) -> Vec<Complex64> {
        let mut z = vec![Complex64::new(0.0, 0.0); self.len];
        z[offset..offset + top.len()].copy_from_slice(top);
        self.apply_q(&mut z);
        z
    }
}

/// One-sided (Hestenes) Jacobi on the columns of `b`. Returns the rotated
/// columns (mutually orthogonal) and the accumulated unitary `w` such that
/// `b_in * w = b_out`.
fn jacobi_columns(
    b: &mut [Vec<Complex64>],
    shape: (usize, usize),
) -> Result<Vec<Vec<Complex64>>> {
    let p = b.len();
    let len = b.first().map_or(0, Vec::len);
    let mut w: Vec<Vec<Complex64>> = (0..p)
        .map(|j| {
            let mut e = vec![Complex64::new(0.0, 0.0); p];
            e[j] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();
    let tol = f64::EPSILON * (len.max(1) as f64);
    let mut norms: Vec<f64> = b.iter().map(|c| norm_sqr(c)).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..p {
            for j in i + 1..p {
                let (alpha, beta) = (norms[i], norms[j]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let g = dotc(&b[i], &b[j]);
                let gabs = g.norm();
                if gabs <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = g / gabs;
                let zeta = (beta - alpha) / (2.0 * gabs);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let sp = phase * s;
                let spc = sp.conj();
                rotate_pair(b, i, j, c, sp, spc);
                rotate_pair(&mut w, i, j, c, sp, spc);
                norms[i] = alpha - t * gabs;
                norms[j] = beta + t * gabs;
            }
        }
        if !rotated {
            return Ok(w);
        }
        for (n, col) in norms.iter_mut().zip(b.iter()) {
            *n = norm_sqr(col);
        }
    }
    Err(Error::NoConvergence {
        rows: shape.0,
        cols: shape.1,
        sweeps: MAX_SWEEPS,
    })
}

#[inline]
fn rotate_pair(
    cols: &mut [Vec<Complex64>],
    i: usize,
    j: usize,
    c: f64,
    sp: Complex64,
    spc: Complex64,
) {
    let (left, right) = cols.split_at_mut(j);
    let ci = &mut left[i];
    let cj = &mut right[0];
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = a * c - spc * b;
        *y = sp * a + b * c;
    }
}

/// Extends the (possibly incomplete) orthonormal set `basis` of vectors in
/// `C^len` by filling every `None` slot with a unit vector orthogonal to all
/// others.
fn complete_orthonormal(basis: &mut [Option<Vec<Complex64>>], len: usize) {
    let mut candidate = 0;
    for slot in 0..basis.len() {
        if basis[slot].is_some() {
            continue;
        }
        while candidate < len {
            let mut e = vec![Complex64::new(0.0, 0.0); len];
            e[candidate] = Complex64::new(1.0, 0.0);
            candidate += 1;
            for _ in 0..2 {
                for q in basis.iter().flatten() {
                    let proj = dotc(q, &e);
                    for (x, qi) in e.iter_mut().zip(q) {
                        *x -= proj * qi;
                    }
                }
            }
            let n = norm_sqr(&e).sqrt();
            if n > 1e-3 {
                e.iter_mut().for_each(|x| *x /= n);
                basis[slot] = Some(e);
                break;
            }
        }
    }
}

/// SVD of a matrix with `rows <= cols`, kept in factored form.
struct WideSvd {
    rows: usize,
    cols: usize,
    q: Reflectors,
    /// Left factor of the triangular block, `rows x rows`, column-wise.
    u_r: Vec<Vec<Complex64>>,
    /// Left singular vectors of `M`, column-wise.
    w: Vec<Vec<Complex64>>,
    sigma: Vec<f64>,
}

impl WideSvd {
    fn new(m: &ComplexMatrix) -> Result<Self> {
        let (rows, cols) = m.shape();
        debug_assert!(rows <= cols);
        // Columns of M^H are the conjugated rows of M.
        let mut columns: Vec<Vec<Complex64>> =
            (0..rows).map(|i| m.row(i).iter().map(|z| z.conj()).collect()).collect();
        let q = Reflectors::factor(cols, &mut columns);
        for col in &mut columns {
            col.truncate(rows);
        }
        let w = jacobi_columns(&mut columns, (rows, cols))?;

        let mut sigma: Vec<f64> = columns.iter().map(|c| norm_sqr(c).sqrt()).collect();
        let mut order: Vec<usize> = (0..rows).collect();
        order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
        let smax = order.first().map_or(0.0, |&i| sigma[i]);
        let negligible = smax * f64::EPSILON * rows as f64;

        let mut u_r: Vec<Option<Vec<Complex64>>> = order
            .iter()
            .map(|&i| {
                let s = sigma[i];
                if s > negligible && s > 0.0 {
                    Some(columns[i].iter().map(|z| z / s).collect())
                } else {
                    None
                }
            })
            .collect();
        complete_orthonormal(&mut u_r, rows);
        let w_sorted = order.iter().map(|&i| w[i].clone()).collect();
        sigma = order.iter().map(|&i| sigma[i]).collect();

        Ok(Self {
            rows,
            cols,
            q,
            u_r: u_r.into_iter().map(Option::unwrap).collect(),
            w: w_sorted,
            sigma,
        })
    }

    fn rank(&self) -> usize {
        let cutoff = rank_cutoff(&self.sigma, self.rows, self.cols);
        self.sigma.iter().filter(|&&s| s > cutoff).count()
    }

    /// Right singular vectors `Q [U_r; 0]` (thin) or, with `full`, completed
    /// by `Q [0; I]`.
    fn right_vectors(&self, full: bool) -> ComplexMatrix {
        let mut cols: Vec<Vec<Complex64>> =
            self.u_r.iter().map(|u| self.q.expand(u, 0)).collect();
        if full {
            let one = [Complex64::new(1.0, 0.0)];
            for k in self.rows..self.cols {
                cols.push(self.q.expand(&one, k));
            }
        }
        ComplexMatrix::from_columns(self.cols, &cols)
    }

    fn left_vectors(&self) -> ComplexMatrix {
        ComplexMatrix::from_columns(self.rows, &self.w)
    }

    /// `M^+ = Q [U_r diag(1/sigma) W^H; 0]`, shape `cols x rows`.
    fn pseudo_inverse(&self) -> ComplexMatrix {
        let r = self.rows;
        let rank = self.rank();
        let mut out = ComplexMatrix::zeros(self.cols, r);
        let mut top = vec![Complex64::new(0.0, 0.0); r];
        for b in 0..r {
            for (a, t) in top.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for s in 0..rank {
                    acc += self.u_r[s][a] * self.w[s][b].conj() / self.sigma[s];
                }
                *t = acc;
            }
            let col = self.q.expand(&top, 0);
            for (i, z) in col.into_iter().enumerate() {
                out[(i, b)] = z;
            }
        }
        out
    }
}

/// Thin SVD: `U` is `rows x k`, `V` is `cols x k`, `k = min(rows, cols)`.
pub fn svd(m: &ComplexMatrix) -> Result<SvdFactors> {
    svd_impl(m, false)
}

/// SVD with the complete `cols x cols` right-singular basis. The trailing
/// `cols - min(rows, cols)` columns of `V` belong to zero singular values.
pub fn svd_full(m: &ComplexMatrix) -> Result<SvdFactors> {
    svd_impl(m, true)
}

fn svd_impl(m: &ComplexMatrix, full_v: bool) -> Result<SvdFactors> {
    let (rows, cols) = m.shape();
    if rows <= cols {
        let f = WideSvd::new(m)?;
        Ok(SvdFactors {
            u: f.left_vectors(),
            v: f.right_vectors(full_v),
            singular_values: f.sigma,
        })
    } else {
        // M^H = W S V'^H  =>  M = V' S W^H; W is already cols x cols.
        let f = WideSvd::new(&m.adjoint())?;
        Ok(SvdFactors {
            u: f.right_vectors(false),
            v: f.left_vectors(),
            singular_values: f.sigma,
        })
    }
}

/// Moore-Penrose pseudo-inverse, shape `cols x rows`. Singular values at or
/// below `max(rows, cols) * sigma_max * 1e-12` are treated as zero.
pub fn pseudo_inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if m.rows() <= m.cols() {
        Ok(WideSvd::new(m)?.pseudo_inverse())
    } else {
        Ok(WideSvd::new(&m.adjoint())?.pseudo_inverse().adjoint())
    }
}

/// Orthonormal basis of the right null space `{x : M x = 0}`, taken from the
/// trailing right-singular vectors.
///
/// For a wide matrix the basis is held implicitly as Householder reflectors
/// so that `M' R` and `R X` can be formed without the `cols x dim` matrix.
pub struct NullSpace {
    ambient: usize,
    repr: NullRepr,
}

enum NullRepr {
    Householder {
        q: Reflectors,
        /// Right-singular vectors of numerically zero singular values that
        /// lie in the row space of the reflectors (rank-deficient input).
        deficient: Vec<Vec<Complex64>>,
        offset: usize,
    },
    Explicit(ComplexMatrix),
}

impl NullSpace {
    pub fn of(m: &ComplexMatrix) -> Result<Self> {
        let (rows, cols) = m.shape();
        if rows < cols {
            let f = WideSvd::new(m)?;
            let rank = f.rank();
            let deficient = f.u_r[rank..].iter().map(|u| f.q.expand(u, 0)).collect();
            Ok(Self {
                ambient: cols,
                repr: NullRepr::Householder {
                    q: f.q,
                    deficient,
                    offset: rows,
                },
            })
        } else {
            let factors = svd(m)?;
            let rank = factors.rank(rows, cols);
            if rank == cols {
                return Err(Error::EmptyNullSpace { rows, cols, rank });
            }
            let keep: Vec<usize> = (rank..cols).collect();
            Ok(Self {
                ambient: cols,
                repr: NullRepr::Explicit(factors.v.select_cols(&keep)),
            })
        }
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            NullRepr::Householder {
                deficient, offset, ..
            } => deficient.len() + self.ambient - offset,
            NullRepr::Explicit(r) => r.cols(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    /// The basis `R` as an `ambient x dim` matrix.
    pub fn basis(&self) -> ComplexMatrix {
        match &self.repr {
            NullRepr::Explicit(r) => r.clone(),
            NullRepr::Householder { .. } => self.lift(&ComplexMatrix::identity(self.dim())),
        }
    }

    /// `A R` for `A` with `ambient` columns.
    pub fn restrict(&self, a: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(a.cols(), self.ambient);
        match &self.repr {
            NullRepr::Explicit(r) => a.matmul(r),
            NullRepr::Householder {
                q,
                deficient,
                offset,
            } => {
                let dim = self.dim();
                let nd = deficient.len();
                let mut out = ComplexMatrix::zeros(a.rows(), dim);
                let mut y = vec![Complex64::new(0.0, 0.0); self.ambient];
                for i in 0..a.rows() {
                    let row = a.row(i);
                    for (d, vec) in deficient.iter().enumerate() {
                        out[(i, d)] = row.iter().zip(vec).map(|(x, v)| x * v).sum();
                    }
                    for (yi, x) in y.iter_mut().zip(row) {
                        *yi = x.conj();
                    }
                    q.apply_qh(&mut y);
                    for l in 0..self.ambient - offset {
                        out[(i, nd + l)] = y[offset + l].conj();
                    }
                }
                out
            }
        }
    }

    /// `R X` for `X` with `dim` rows.
    pub fn lift(&self, x: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(x.rows(), self.dim());
        match &self.repr {
            NullRepr::Explicit(r) => r.matmul(x),
            NullRepr::Householder {
                q,
                deficient,
                offset,
            } => {
                let nd = deficient.len();
                let mut out = ComplexMatrix::zeros(self.ambient, x.cols());
                let mut z = vec![Complex64::new(0.0, 0.0); self.ambient];
                for b in 0..x.cols() {
                    z.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
                    for l in 0..self.ambient - offset {
                        z[offset + l] = x[(nd + l, b)];
                    }
                    q.apply_q(&mut z);
                    for (d, vec) in deficient.iter().enumerate() {
                        let coef = x[(d, b)];
                        for (zi, v) in z.iter_mut().zip(vec) {
                            *zi += coef * v;
                        }
                    }
                    for (i, &zi) in z.iter().enumerate() {
                        out[(i, b)] = zi;
                    }
                }
                out
            }
        }
    }
}

/// Explicit orthonormal null-space basis, `cols x (cols - rank)`.
pub fn null_space_basis(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let ns = NullSpace::of(m)?;
    if ns.dim() == 0 {
        return Err(Error::EmptyNullSpace {
            rows: m.rows(),
            cols: m.cols(),
            rank: m.cols(),
        });
    }
    Ok(ns.basis())
}
