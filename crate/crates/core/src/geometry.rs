//! Small dense linear algebra: the handful of factorizations, frame changes
//! and reflections the lattice machinery needs.
//!
//! Vectors are plain `[f64]` slices (row vectors). Matrices are row-major;
//! a lattice generator stores its basis vectors as rows, so a lattice point
//! with integer coordinates `z` is `vec_mat(z, g)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance on coordinates.
pub const COORD_TOL: f64 = 1e-10;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for Mat {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Mat::from_rows(&rows)
    }
}

impl From<Mat> for Vec<Vec<f64>> {
    fn from(m: Mat) -> Self {
        m.to_rows()
    }
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Ragged);
            }
            if r.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite);
            }
            data.extend_from_slice(r);
        }
        Ok(Mat { rows: rows.len(), cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Mat) -> Result<Mat> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, found: rhs.rows });
        }
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let r = rhs.row(k);
                for (o, &b) in out.row_mut(i).iter_mut().zip(r) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · selfᵀ`, the Gram matrix of the rows.
    pub fn gram(&self) -> Mat {
        Mat::from_fn(self.rows, self.rows, |i, j| dot(self.row(i), self.row(j)))
    }

    /// Row vector times matrix: `x · self`.
    pub fn vec_mul(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, found: x.len() });
        }
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, &m) in out.iter_mut().zip(self.row(i)) {
                *o += xi * m;
            }
        }
        Ok(out)
    }

    /// Matrix times column vector: `self · x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, found: x.len() });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn nonzeros(&self) -> usize {
        self.data.iter().filter(|&&x| x != 0.0).count()
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Mat> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch { expected: self.rows, found: self.cols });
        }
        let n = self.rows;
        let scale = self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut a = self.clone();
        let mut inv = Mat::identity(n);
        for c in 0..n {
            let p = (c..n)
                .max_by(|&i, &j| a[(i, c)].abs().total_cmp(&a[(j, c)].abs()))
                .unwrap();
            if a[(p, c)].abs() <= 1e-13 * scale.max(1.0) {
                return Err(Error::RankDeficient);
            }
            if p != c {
                a.swap_rows(p, c);
                inv.swap_rows(p, c);
            }
            let d = a[(c, c)];
            a.row_mut(c).iter_mut().for_each(|x| *x /= d);
            inv.row_mut(c).iter_mut().for_each(|x| *x /= d);
            for r in 0..n {
                if r == c {
                    continue;
                }
                let f = a[(r, c)];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let (ac, ic) = (a[(c, j)], inv[(c, j)]);
                    a[(r, j)] -= f * ac;
                    inv[(r, j)] -= f * ic;
                }
            }
        }
        Ok(inv)
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm2(a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lower-triangular Cholesky factor `L` with `L·Lᵀ = gram`.
pub fn cholesky_lower(gram: &Mat) -> Result<Mat> {
    if !gram.is_square() {
        return Err(Error::DimensionMismatch { expected: gram.rows(), found: gram.cols() });
    }
    let n = gram.rows();
    let scale = (0..n).map(|i| gram[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
    for i in 0..n {
        for j in 0..i {
            if (gram[(i, j)] - gram[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let d = gram[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
        if d <= 1e-14 * scale || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let s = gram[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Rotate a basis so that `b_2, …, b_n` lie in `{y : y₁ = 0}` and `b_1` has a
/// positive first coordinate.
///
/// Returns `(G′, Q)` with `G′ = G·Q` and `Q` orthogonal. The rows are
/// orthonormalized in the order `b_2, …, b_n, b_1`; the last direction (the
/// normal of the span of `b_2, …, b_n`) becomes the first axis. A basis that
/// is already oriented is returned unchanged with `Q = I`.
pub fn orient_axis_frame(generator: &Mat) -> Result<(Mat, Mat)> {
    let n = generator.rows();
    if n < 2 {
        return Err(Error::InvalidDimension { n, reason: "orientation needs n >= 2" });
    }
    if !generator.is_square() {
        return Err(Error::DimensionMismatch { expected: n, found: generator.cols() });
    }
    let scale = (0..n).map(|i| norm(generator.row(i))).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::RankDeficient);
    }

    let oriented = (1..n).all(|i| generator[(i, 0)] == 0.0) && generator[(0, 0)] > 0.0;
    if oriented {
        return Ok((generator.clone(), Mat::identity(n)));
    }

    // Modified Gram-Schmidt over (b_2, ..., b_n, b_1).
    let order: Vec<usize> = (1..n).chain(std::iter::once(0)).collect();
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(n);
    for &i in &order {
        let mut r = generator.row(i).to_vec();
        for _ in 0..2 {
            for q in &frame {
                let c = dot(&r, q);
                r.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let len = norm(&r);
        if len <= 1e-12 * scale {
            return Err(Error::RankDeficient);
        }
        r.iter_mut().for_each(|x| *x /= len);
        frame.push(r);
    }
    // Columns of Q: [normal, q_1, ..., q_{n-1}].
    let normal = frame.pop().unwrap();
    let q = Mat::from_fn(n, n, |i, j| if j == 0 { normal[i] } else { frame[j - 1][i] });
    let mut g = generator.matmul(&q)?;
    for i in 1..n {
        g[(i, 0)] = 0.0;
    }
    debug_assert!(g[(0, 0)] > 0.0);
    Ok((g, q))
}

/// Affine hyperplane `{ y : y·normal = offset }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Hyperplane {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if normal.iter().chain(std::iter::once(&offset)).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        if norm2(&normal) == 0.0 {
            return Err(Error::ZeroNormal);
        }
        Ok(Hyperplane { normal, offset })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// `y·v − p`, unnormalized.
    pub fn eval(&self, y: &[f64]) -> f64 {
        dot(y, &self.normal) - self.offset
    }

    /// Signed Euclidean distance from `y` to the hyperplane.
    pub fn signed_distance(&self, y: &[f64]) -> f64 {
        self.eval(y) / norm(&self.normal)
    }

    /// Unit normal and offset scaled accordingly.
    pub fn normalized(&self) -> (Vec<f64>, f64) {
        let len = norm(&self.normal);
        (self.normal.iter().map(|x| x / len).collect(), self.offset / len)
    }
}

/// Mirror image of `y` across `h`.
pub fn reflect(h: &Hyperplane, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: y.len() });
    }
    Ok(reflect_unchecked(h, y))
}

pub(crate) fn reflect_unchecked(h: &Hyperplane, y: &[f64]) -> Vec<f64> {
    let c = 2.0 * h.eval(y) / norm2(&h.normal);
    y.iter().zip(&h.normal).map(|(x, v)| x - c * v).collect()
}
