//! Fixed-size vectors and column-major matrices over a [`Real`] scalar,
//! with the Minkowski form `diag(1, …, 1, -1)` (last coordinate timelike).

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::scalar::Real;

/// A vector in `ℝ^D`, read either as Minkowski or Euclidean coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MVector<T, const D: usize>(pub [T; D]);

impl<T: Real, const D: usize> MVector<T, D> {
    pub fn zero() -> Self {
        Self([T::zero(); D])
    }

    /// Unit basis vector `e_i`.
    pub fn basis(i: usize) -> Self {
        let mut v = Self::zero();
        v.0[i] = T::one();
        v
    }

    /// The hyperboloid basepoint `(0, …, 0, 1)`.
    pub fn timelike_unit() -> Self {
        Self::basis(D - 1)
    }

    /// Minkowski inner product, signature `(+, …, +, −)`.
    #[inline]
    pub fn mdot(&self, other: &Self) -> T {
        let mut acc = T::zero();
        for i in 0..D - 1 {
            acc = acc + self.0[i] * other.0[i];
        }
        acc - self.0[D - 1] * other.0[D - 1]
    }

    /// Euclidean inner product of the raw coordinates.
    #[inline]
    pub fn edot(&self, other: &Self) -> T {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| *a * *b).sum()
    }

    pub fn enorm(&self) -> T {
        self.edot(self).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        (*self - *other).max_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn cast<U: Real>(&self) -> MVector<U, D> {
        MVector(self.0.map(|x| U::lit(x.to_f64_lossy())))
    }
}

impl<T: Real, const D: usize> Default for MVector<T, D> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T, const D: usize> Index<usize> for MVector<T, D> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T, const D: usize> IndexMut<usize> for MVector<T, D> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

impl<T: Real, const D: usize> Add for MVector<T, D> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for i in 0..D {
            self.0[i] = self.0[i] + rhs.0[i];
        }
        self
    }
}

impl<T: Real, const D: usize> AddAssign for MVector<T, D> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<T: Real, const D: usize> Sub for MVector<T, D> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..D {
            self.0[i] = self.0[i] - rhs.0[i];
        }
        self
    }
}

impl<T: Real, const D: usize> SubAssign for MVector<T, D> {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<T: Real, const D: usize> Neg for MVector<T, D> {
    type Output = Self;
    fn neg(self) -> Self {
        Self(self.0.map(|x| -x))
    }
}

impl<T: Real, const D: usize> Mul<T> for MVector<T, D> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self(self.0.map(|x| x * s))
    }
}

/// Square matrix stored column-major: `cols[c][r]` is row `r` of column `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix<T, const D: usize> {
    cols: [[T; D]; D],
}

impl<T: Real, const D: usize> Matrix<T, D> {
    pub fn zero() -> Self {
        Self {
            cols: [[T::zero(); D]; D],
        }
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..D {
            m.cols[i][i] = T::one();
        }
        m
    }

    /// The Minkowski metric `J = diag(1, …, 1, −1)`.
    pub fn minkowski_metric() -> Self {
        let mut m = Self::identity();
        m.cols[D - 1][D - 1] = -T::one();
        m
    }

    pub fn from_cols(cols: [[T; D]; D]) -> Self {
        Self { cols }
    }

    pub fn from_col_vectors(cols: [MVector<T, D>; D]) -> Self {
        Self {
            cols: cols.map(|c| c.0),
        }
    }

    /// Builds from a flat column-major slice of length `D*D`.
    pub fn from_col_major(values: &[T]) -> Option<Self> {
        if values.len() != D * D {
            return None;
        }
        let mut m = Self::zero();
        for c in 0..D {
            for r in 0..D {
                m.cols[c][r] = values[c * D + r];
            }
        }
        Some(m)
    }

    pub fn to_col_major(&self) -> Vec<T> {
        self.cols.iter().flat_map(|c| c.iter().copied()).collect()
    }

    pub fn cols(&self) -> &[[T; D]; D] {
        &self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.cols[col][row]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: T) {
        self.cols[col][row] = v;
    }

    pub fn col(&self, c: usize) -> MVector<T, D> {
        MVector(self.cols[c])
    }

    pub fn set_col(&mut self, c: usize, v: MVector<T, D>) {
        self.cols[c] = v.0;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zero();
        for c in 0..D {
            for r in 0..D {
                t.cols[r][c] = self.cols[c][r];
            }
        }
        t
    }

    #[inline]
    pub fn mul_vec(&self, v: &MVector<T, D>) -> MVector<T, D> {
        let mut out = [T::zero(); D];
        for c in 0..D {
            let s = v.0[c];
            for (r, o) in out.iter_mut().enumerate() {
                *o = *o + self.cols[c][r] * s;
            }
        }
        MVector(out)
    }

    pub fn trace(&self) -> T {
        (0..D).map(|i| self.cols[i][i]).sum()
    }

    pub fn max_abs(&self) -> T {
        self.cols
            .iter()
            .flat_map(|c| c.iter())
            .fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut m = T::zero();
        for c in 0..D {
            for r in 0..D {
                m = m.max((self.cols[c][r] - other.cols[c][r]).abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.cols.iter().flat_map(|c| c.iter()).all(|x| x.is_finite())
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            cols: self.cols.map(|c| c.map(|x| x * s)),
        }
    }

    /// `J Mᵀ J`, the inverse of any matrix preserving the Minkowski form.
    pub fn minkowski_adjoint(&self) -> Self {
        let mut t = self.transpose();
        for c in 0..D {
            for r in 0..D {
                let sign_r = if r == D - 1 { -T::one() } else { T::one() };
                let sign_c = if c == D - 1 { -T::one() } else { T::one() };
                t.cols[c][r] = t.cols[c][r] * sign_r * sign_c;
            }
        }
        t
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> T {
        let mut a = self.transpose().cols; // row-major copy
        let mut det = T::one();
        for k in 0..D {
            let mut p = k;
            for r in k + 1..D {
                if a[r][k].abs() > a[p][k].abs() {
                    p = r;
                }
            }
            if a[p][k] == T::zero() {
                return T::zero();
            }
            if p != k {
                a.swap(p, k);
                det = -det;
            }
            det = det * a[k][k];
            for r in k + 1..D {
                let f = a[r][k] / a[k][k];
                for c in k..D {
                    a[r][c] = a[r][c] - f * a[k][c];
                }
            }
        }
        det
    }

    pub fn cast<U: Real>(&self) -> Matrix<U, D> {
        Matrix {
            cols: self.cols.map(|c| c.map(|x| U::lit(x.to_f64_lossy()))),
        }
    }
}

impl<T: Real, const D: usize> Mul for Matrix<T, D> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zero();
        for c in 0..D {
            out.cols[c] = self.mul_vec(&MVector(rhs.cols[c])).0;
        }
        out
    }
}

impl<T: Real, const D: usize> Sub for Matrix<T, D> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for c in 0..D {
            for r in 0..D {
                self.cols[c][r] = self.cols[c][r] - rhs.cols[c][r];
            }
        }
        self
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order with the matching eigenvectors as
/// columns of the second value.
pub fn symmetric_eigen<T: Real, const D: usize>(m: &Matrix<T, D>) -> ([T; D], Matrix<T, D>) {
    let mut a = *m;
    let mut v = Matrix::<T, D>::identity();
    let scale = m.max_abs().max(T::min_positive_value());
    for _sweep in 0..100 {
        let mut off = T::zero();
        for c in 0..D {
            for r in 0..D {
                if r != c {
                    off = off.max(a.get(r, c).abs());
                }
            }
        }
        if off <= T::epsilon() * scale * T::lit(1e-2) {
            break;
        }
        for p in 0..D {
            for q in p + 1..D {
                let apq = a.get(p, q);
                if apq == T::zero() {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (T::two() * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..D {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..D {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..D {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let mut order: [usize; D] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| a.get(i, i).partial_cmp(&a.get(j, j)).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.map(|i| a.get(i, i));
    let mut vectors = Matrix::zero();
    for (k, &i) in order.iter().enumerate() {
        vectors.set_col(k, v.col(i));
    }
    (values, vectors)
}

/// Gram–Schmidt under the Minkowski form: the last column becomes a unit
/// timelike vector on the upper sheet, the others unit spacelike and
/// orthogonal to it and to each other.
pub fn minkowski_orthonormalize<T: Real, const D: usize>(m: &Matrix<T, D>) -> Matrix<T, D> {
    let mut out = *m;
    let mut t = out.col(D - 1);
    let n = (-t.mdot(&t)).abs().sqrt();
    t = t * (T::one() / n);
    if t[D - 1] < T::zero() {
        t = -t;
    }
    out.set_col(D - 1, t);
    for c in 0..D - 1 {
        let mut v = out.col(c);
        // timelike part first, then the already-fixed spacelike columns
        v = v + t * v.mdot(&t);
        for prev in 0..c {
            let u = out.col(prev);
            v = v - u * v.mdot(&u);
        }
        let n = v.mdot(&v).abs().sqrt();
        out.set_col(c, v * (T::one() / n));
    }
    out
}

/// Gram–Schmidt under the Euclidean form on all columns.
pub fn euclidean_orthonormalize<T: Real, const D: usize>(m: &Matrix<T, D>) -> Matrix<T, D> {
    let mut out = *m;
    for c in 0..D {
        let mut v = out.col(c);
        for prev in 0..c {
            let u = out.col(prev);
            v = v - u * v.edot(&u);
        }
        out.set_col(c, v * (T::one() / v.enorm()));
    }
    out
}
