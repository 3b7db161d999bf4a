//! Isometries of the hyperboloid: orthochronous matrices preserving the
//! Minkowski form, and their classification.

use crate::error::{precondition, Result};
use crate::hyperboloid::{MPoint, MTangent};
use crate::linalg::{minkowski_orthonormalize, symmetric_eigen, MVector, Matrix};
use crate::scalar::{acosh_clamped, Real};

/// An orthochronous Lorentz transformation (`MᵀJM = J`, `M_DD ≥ 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry<T, const D: usize> {
    m: Matrix<T, D>,
}

/// Geometric type of an isometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Classification<T> {
    Identity,
    /// Elliptic: fixes a point and rotates about it by `angle ∈ (0, π]`.
    Rotation { angle: T },
    /// Hyperbolic without twist: slides along an axis by `length`.
    Translation { length: T },
    /// Parabolic, loxodromic or orientation-reversing.
    Other,
}

impl<T: Real> Classification<T> {
    /// Rotation angle carried by the classification (0 unless a rotation).
    pub fn rotation_angle(&self) -> T {
        match self {
            Classification::Rotation { angle } => *angle,
            _ => T::zero(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Classification::Identity => "identity",
            Classification::Rotation { .. } => "rotation",
            Classification::Translation { .. } => "translation",
            Classification::Other => "other",
        }
    }
}

impl<T: Real, const D: usize> Default for Isometry<T, D> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real, const D: usize> Isometry<T, D> {
    pub fn identity() -> Self {
        Self {
            m: Matrix::identity(),
        }
    }

    /// Checks the isometry invariant (relative to the entry size) before wrapping.
    pub fn from_matrix(m: Matrix<T, D>) -> Result<Self> {
        let iso = Self { m };
        let err = iso.invariant_error();
        let scale = T::one().max(m.max_abs() * m.max_abs());
        if !m.is_finite() || err > T::isometry_tol() * scale {
            return precondition(format!("matrix does not preserve the Minkowski form (error {err})"));
        }
        if m.get(D - 1, D - 1) < T::one() - T::isometry_tol() {
            return precondition("matrix is not orthochronous");
        }
        Ok(iso)
    }

    pub fn from_matrix_unchecked(m: Matrix<T, D>) -> Self {
        Self { m }
    }

    pub fn matrix(&self) -> &Matrix<T, D> {
        &self.m
    }

    /// `max |MᵀJM − J|`.
    pub fn invariant_error(&self) -> T {
        let j = Matrix::<T, D>::minkowski_metric();
        (self.m.transpose() * j * self.m).max_abs_diff(&j)
    }

    pub fn apply_vector(&self, v: &MVector<T, D>) -> MVector<T, D> {
        self.m.mul_vec(v)
    }

    pub fn apply_point(&self, p: &MPoint<T, D>) -> MPoint<T, D> {
        MPoint::new_unchecked(self.m.mul_vec(&p.vector()).0)
    }

    pub fn apply_tangent(&self, v: &MTangent<T, D>) -> MTangent<T, D> {
        MTangent::new_unchecked(self.apply_point(v.base()), self.m.mul_vec(&v.vector()))
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        Self { m: self.m * other.m }
    }

    pub fn inverse(&self) -> Self {
        Self {
            m: self.m.minkowski_adjoint(),
        }
    }

    /// Re-orthonormalizes the columns under the Minkowski form.
    pub fn renormalized(&self) -> Self {
        Self {
            m: minkowski_orthonormalize(&self.m),
        }
    }

    /// Renormalizes only when drift exceeds the invariant tolerance.
    pub fn renormalized_if_drifted(&self) -> Self {
        let scale = T::one().max(self.m.max_abs() * self.m.max_abs());
        if self.invariant_error() > T::invariant_tol() * scale {
            self.renormalized()
        } else {
            *self
        }
    }

    /// The transvection along the geodesic from `p` to `q`:
    /// `x ↦ x + ⟨x,p+q⟩/(1−⟨p,q⟩)·(p+q) − 2⟨x,p⟩·q`.
    ///
    /// Maps `p` to `q` and acts on tangents at `p` as parallel transport.
    pub fn translation_along(p: &MPoint<T, D>, q: &MPoint<T, D>) -> Self {
        let pv = p.vector();
        let qv = q.vector();
        let s = pv + qv;
        let denom = T::one() - pv.mdot(&qv);
        let mut m = Matrix::identity();
        for c in 0..D {
            // column c is the image of e_c; ⟨e_c, w⟩ = ±w_c
            let sign = if c == D - 1 { -T::one() } else { T::one() };
            let col = MVector::<T, D>::basis(c) + s * (sign * s[c] / denom) - qv * (T::two() * sign * pv[c]);
            m.set_col(c, col);
        }
        Self { m }
    }

    /// Boost at the origin along the unit spatial direction `dir` (given by
    /// its first `D−1` coordinates; the last entry is ignored) by length `s`.
    pub fn boost(dir: &[T; D], s: T) -> Self {
        let mut u = MVector(*dir);
        u[D - 1] = T::zero();
        let n = u.enorm();
        if n <= T::epsilon() || s == T::zero() {
            return Self::identity();
        }
        let u = u * (T::one() / n);
        let (ch, sh) = (s.cosh(), s.sinh());
        let et = MVector::<T, D>::timelike_unit();
        let mut m = Matrix::identity();
        for c in 0..D {
            let x = MVector::<T, D>::basis(c);
            let xu = x.edot(&u);
            let xt = x[D - 1];
            let col = x + (u * xu + et * xt) * (ch - T::one()) + (u * xt + et * xu) * sh;
            m.set_col(c, col);
        }
        Self { m }
    }

    /// Rotation by `theta` fixing `p` in the tangent plane spanned by the
    /// orthonormal tangents `e1, e2` (sending `e1` towards `e2`).
    pub fn rotation_at(p: &MPoint<T, D>, e1: &MTangent<T, D>, e2: &MTangent<T, D>, theta: T) -> Result<Self> {
        let tol = T::invariant_tol() * T::lit(10.0) * T::one().max(p.vector().max_abs().powi(2));
        for (name, e) in [("e1", e1), ("e2", e2)] {
            if e.base().vector().max_abs_diff(&p.vector()) > tol {
                return precondition(format!("{name} is not based at the rotation center"));
            }
            if p.vector().mdot(&e.vector()).abs() > tol || (e.norm_squared() - T::one()).abs() > tol {
                return precondition(format!("{name} is not a unit tangent at the rotation center"));
            }
        }
        if e1.dot(e2).abs() > tol {
            return precondition("rotation plane tangents are not orthogonal");
        }
        let (c, s) = (theta.cos(), theta.sin());
        let a = e1.vector();
        let b = e2.vector();
        let mut m = Matrix::identity();
        for col in 0..D {
            let x = MVector::<T, D>::basis(col);
            let xa = x.mdot(&a);
            let xb = x.mdot(&b);
            let img = x + (a * xa + b * xb) * (c - T::one()) + (b * xa - a * xb) * s;
            m.set_col(col, img);
        }
        Ok(Self { m })
    }

    /// Rotation at the origin in the coordinate plane `(i, j)`, `e_i → e_j`.
    pub fn rotation_in_plane(i: usize, j: usize, theta: T) -> Self {
        let mut m = Matrix::identity();
        let (c, s) = (theta.cos(), theta.sin());
        m.set(i, i, c);
        m.set(j, i, s);
        m.set(i, j, -s);
        m.set(j, j, c);
        Self { m }
    }

    /// Reflection in the hyperplane Minkowski-orthogonal to the spacelike `n`:
    /// `x ↦ x − 2⟨x,n⟩/⟨n,n⟩·n`.
    pub fn reflection(n: &MVector<T, D>) -> Result<Self> {
        let nn = n.mdot(n);
        if nn <= T::epsilon() {
            return precondition("mirror normal must be spacelike");
        }
        let mut m = Matrix::identity();
        for c in 0..D {
            let x = MVector::<T, D>::basis(c);
            m.set_col(c, x - *n * (T::two() * x.mdot(n) / nn));
        }
        Ok(Self { m })
    }

    /// Maps the frame `src` (D−1 orthonormal tangents followed by the base
    /// point) onto `dst`: `M = B_dst · J · B_srcᵀ · J`.
    pub fn from_frames(src: &Matrix<T, D>, dst: &Matrix<T, D>) -> Self {
        Self {
            m: *dst * src.minkowski_adjoint(),
        }
    }

    /// Classifies by fixed points: identity, rotation about a point,
    /// translation along an axis, or other.
    pub fn classify(&self) -> Classification<T> {
        self.classify_with_tol(T::invariant_tol())
    }

    pub fn classify_with_tol(&self, tol: T) -> Classification<T> {
        if self.m.max_abs_diff(&Matrix::identity()) <= tol {
            return Classification::Identity;
        }
        if self.m.determinant() < T::zero() {
            return Classification::Other;
        }
        if let Some(center) = self.fixed_point() {
            let angle = self.rotation_angle_about(&center);
            if angle <= tol {
                return Classification::Identity;
            }
            return Classification::Rotation { angle };
        }
        // Pure translations fix a (D−2)-dimensional spacelike subspace pointwise.
        let null = self.eigenvalue_one_space();
        if null.len() == D - 2 && self.null_space_definiteness(&null) > T::zero() {
            let length = acosh_clamped((self.m.trace() - T::lit((D - 2) as f64)) * T::half());
            return Classification::Translation { length };
        }
        Classification::Other
    }

    /// A fixed point in hyperbolic space, if the isometry is elliptic.
    pub fn fixed_point(&self) -> Option<MPoint<T, D>> {
        let null = self.eigenvalue_one_space();
        if null.is_empty() {
            return None;
        }
        // Minkowski Gram matrix on the null space; a negative eigenvalue
        // means it contains a timelike direction.
        let k = null.len();
        let mut g = Matrix::<T, D>::identity();
        for a in 0..k {
            for b in 0..k {
                g.set(a, b, null[a].mdot(&null[b]));
            }
        }
        let (vals, vecs) = symmetric_eigen(&g);
        let tol = T::lit(1e-7);
        let (idx, min) = vals
            .iter()
            .enumerate()
            .take(D)
            .filter(|(i, _)| vecs.col(*i).0[k..].iter().all(|x| x.abs() < T::lit(1e-6)))
            .fold((usize::MAX, T::infinity()), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
        if idx == usize::MAX || min >= -tol {
            return None;
        }
        let coeffs = vecs.col(idx);
        let mut x = MVector::<T, D>::zero();
        for a in 0..k {
            x = x + null[a] * coeffs[a];
        }
        let n = (-x.mdot(&x)).sqrt();
        x = x * (T::one() / n);
        if x[D - 1] < T::zero() {
            x = -x;
        }
        Some(MPoint::new_unchecked(x.0))
    }

    /// Angle of the rotation induced on the tangent space at a fixed point.
    fn rotation_angle_about(&self, center: &MPoint<T, D>) -> T {
        let to_origin = Self::translation_along(center, &MPoint::origin());
        let local = to_origin.compose(self).compose(&to_origin.inverse());
        let r = |i: usize, j: usize| local.m.get(i, j);
        match D {
            3 => r(1, 0).atan2(r(0, 0)).abs(),
            4 => {
                let axis = [r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)];
                let sin2 = axis.iter().map(|a| *a * *a).sum::<T>().sqrt();
                let cos2 = r(0, 0) + r(1, 1) + r(2, 2) - T::one();
                sin2.atan2(cos2)
            }
            _ => {
                // general dimension: trace only
                let tr = (0..D - 1).map(|i| r(i, i)).sum::<T>();
                let c = ((tr - T::lit((D - 3) as f64)) * T::half()).max(-T::one()).min(T::one());
                c.acos()
            }
        }
    }

    /// Basis (Euclidean orthonormal) of `ker(M − I)`.
    fn eigenvalue_one_space(&self) -> Vec<MVector<T, D>> {
        let a = self.m - Matrix::identity();
        let ata = a.transpose() * a;
        let (vals, vecs) = symmetric_eigen(&ata);
        let scale = T::one().max(self.m.max_abs());
        let thresh = T::lit(1e-14) * scale * scale;
        (0..D).filter(|&i| vals[i] <= thresh).map(|i| vecs.col(i)).collect()
    }

    /// Smallest eigenvalue of the Minkowski Gram matrix on a subspace.
    fn null_space_definiteness(&self, basis: &[MVector<T, D>]) -> T {
        let k = basis.len();
        if k == 0 {
            return T::one();
        }
        let mut g = Matrix::<T, D>::identity();
        for a in 0..k {
            for b in 0..k {
                g.set(a, b, basis[a].mdot(&basis[b]));
            }
        }
        let (vals, _) = symmetric_eigen(&g);
        vals.iter().take(D).fold(T::infinity(), |m, v| m.min(*v))
    }

    pub fn cast<U: Real>(&self) -> Isometry<U, D> {
        Isometry { m: self.m.cast() }
    }
}

/// `A B A⁻¹ B⁻¹` with its classification.
pub fn commutator<T: Real, const D: usize>(a: &Isometry<T, D>, b: &Isometry<T, D>) -> (Isometry<T, D>, Classification<T>) {
    let c = a.compose(b).compose(&a.inverse()).compose(&b.inverse());
    let class = c.classify();
    (c, class)
}
