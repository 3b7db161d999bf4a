//! Points and tangent vectors of the hyperboloid model.
//!
//! `D` is the ambient Minkowski dimension: `D = 4` realizes ℍ³ and `D = 3`
//! realizes ℍ² (coordinates `(x₁, x₂, x₄)`). Points live on the upper sheet
//! of `⟨x,x⟩ = −1`, tangents at `p` satisfy `⟨p,v⟩ = 0`.

use crate::error::{precondition, Error, Result};
use crate::linalg::MVector;
use crate::scalar::{acosh_clamped, Real};

/// Minkowski inner product `a₁b₁ + … + a_{D−1}b_{D−1} − a_D b_D`.
#[inline]
pub fn minkowski_dot<T: Real, const D: usize>(a: &[T; D], b: &[T; D]) -> T {
    MVector(*a).mdot(&MVector(*b))
}

/// A point of hyperbolic space on the upper sheet of the hyperboloid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MPoint<T, const D: usize> {
    coords: MVector<T, D>,
}

impl<T: Real, const D: usize> MPoint<T, D> {
    /// The basepoint `o = (0, …, 0, 1)`.
    pub fn origin() -> Self {
        Self {
            coords: MVector::timelike_unit(),
        }
    }

    /// Validates `⟨x,x⟩ = −1` (relative to the size of `x`) and `x_D ≥ 1`.
    pub fn new(coords: [T; D]) -> Result<Self> {
        let v = MVector(coords);
        if !v.is_finite() {
            return Err(Error::InvalidPoint("non-finite coordinates".into()));
        }
        let norm = v.mdot(&v);
        let scale = T::one().max(v[D - 1] * v[D - 1]);
        if (norm + T::one()).abs() > T::invariant_tol() * scale {
            return Err(Error::InvalidPoint(format!(
                "<x,x> = {norm}, expected -1"
            )));
        }
        if v[D - 1] < T::one() - T::invariant_tol() {
            return Err(Error::InvalidPoint(format!(
                "timelike coordinate {} < 1 (lower sheet)",
                v[D - 1]
            )));
        }
        Ok(Self { coords: v })
    }

    /// Wraps coordinates without checking; callers guarantee the invariants.
    pub fn new_unchecked(coords: [T; D]) -> Self {
        Self {
            coords: MVector(coords),
        }
    }

    /// Lifts the spatial coordinates to the sheet, ignoring the given
    /// timelike entry. Also the renormalization used after long compositions.
    pub fn lift(coords: [T; D]) -> Self {
        let mut v = MVector(coords);
        let mut s = T::one();
        for i in 0..D - 1 {
            s = s + v[i] * v[i];
        }
        v[D - 1] = s.sqrt();
        Self { coords: v }
    }

    pub fn coords(&self) -> &[T; D] {
        &self.coords.0
    }

    pub fn vector(&self) -> MVector<T, D> {
        self.coords
    }

    /// Deviation of `⟨x,x⟩` from −1.
    pub fn sheet_error(&self) -> T {
        (self.coords.mdot(&self.coords) + T::one()).abs()
    }

    pub fn renormalized(&self) -> Self {
        Self::lift(self.coords.0)
    }

    pub fn cast<U: Real>(&self) -> MPoint<U, D> {
        MPoint {
            coords: self.coords.cast(),
        }
    }
}

/// A tangent vector `vec` at `base`. Unit-ness is not enforced; see
/// [`MTangent::is_unit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MTangent<T, const D: usize> {
    base: MPoint<T, D>,
    vec: MVector<T, D>,
}

impl<T: Real, const D: usize> MTangent<T, D> {
    /// Checks `⟨base, vec⟩ = 0`, scaled by the coordinate sizes.
    pub fn new(base: MPoint<T, D>, vec: [T; D]) -> Result<Self> {
        let v = MVector(vec);
        let scale = T::one().max(base.vector().max_abs() * v.max_abs());
        let dot = base.vector().mdot(&v);
        if dot.abs() > T::invariant_tol() * scale {
            return precondition(format!("tangent not orthogonal to base: <p,v> = {dot}"));
        }
        Ok(Self { base, vec: v })
    }

    /// Like [`MTangent::new`] but additionally requires `⟨v,v⟩ = 1`.
    pub fn unit(base: MPoint<T, D>, vec: [T; D]) -> Result<Self> {
        let t = Self::new(base, vec)?;
        if !t.is_unit() {
            return precondition(format!("tangent is not unit: <v,v> = {}", t.norm_squared()));
        }
        Ok(t)
    }

    /// Orthogonal projection of an arbitrary vector onto the tangent space.
    pub fn project(base: MPoint<T, D>, vec: [T; D]) -> Self {
        let p = base.vector();
        let v = MVector(vec);
        Self {
            base,
            vec: v + p * v.mdot(&p),
        }
    }

    pub(crate) fn new_unchecked(base: MPoint<T, D>, vec: MVector<T, D>) -> Self {
        Self { base, vec }
    }

    pub fn base(&self) -> &MPoint<T, D> {
        &self.base
    }

    pub fn vec(&self) -> &[T; D] {
        &self.vec.0
    }

    pub fn vector(&self) -> MVector<T, D> {
        self.vec
    }

    pub fn norm_squared(&self) -> T {
        self.vec.mdot(&self.vec)
    }

    pub fn norm(&self) -> T {
        self.norm_squared().max(T::zero()).sqrt()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm_squared() - T::one()).abs() <= T::invariant_tol() * T::one().max(self.vec.max_abs())
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n <= T::epsilon() {
            return precondition("cannot normalize a zero tangent");
        }
        Ok(Self {
            base: self.base,
            vec: self.vec * (T::one() / n),
        })
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            base: self.base,
            vec: self.vec * s,
        }
    }

    /// Minkowski inner product with another tangent at the same base.
    pub fn dot(&self, other: &Self) -> T {
        self.vec.mdot(&other.vec)
    }
}

/// Hyperbolic distance `arccosh(−⟨p,q⟩)`.
///
/// Inputs with `−⟨p,q⟩` more than `1e−7` below 1 are rejected; the band just
/// below 1 clamps to distance 0. Near points use the chord form
/// `2·asinh(|p−q|/2)`, which keeps full relative precision at small scales.
pub fn distance<T: Real, const D: usize>(p: &MPoint<T, D>, q: &MPoint<T, D>) -> Result<T> {
    let c = -p.vector().mdot(&q.vector());
    if c.is_nan() {
        return Err(Error::InvalidPoint("non-finite inner product".into()));
    }
    if c < T::one() - T::clamp_tol() * T::one().max(c.abs()) {
        return Err(Error::InvalidPoint(format!(
            "-<p,q> = {c} < 1: points are not on one sheet"
        )));
    }
    if c < T::two() {
        let diff = p.vector() - q.vector();
        let chord = diff.mdot(&diff).max(T::zero()).sqrt();
        Ok(T::two() * (chord * T::half()).asinh())
    } else {
        Ok(acosh_clamped(c))
    }
}

/// Point at arc length `t` along the geodesic leaving `v.base()` in the unit
/// direction `v`: `cosh(t)·p + sinh(t)·v`.
pub fn geodesic_point<T: Real, const D: usize>(v: &MTangent<T, D>, t: T) -> Result<MPoint<T, D>> {
    if !v.is_unit() {
        return precondition(format!(
            "geodesic direction must be unit, <v,v> = {}",
            v.norm_squared()
        ));
    }
    let p = v.base().vector();
    if p.mdot(&v.vector()).abs() > T::invariant_tol() * T::one().max(p.max_abs() * v.vector().max_abs()) {
        return precondition("geodesic direction is not tangent at its base");
    }
    Ok(MPoint::new_unchecked(
        (p * t.cosh() + v.vector() * t.sinh()).0,
    ))
}

/// Exponential map for a tangent of any length.
pub fn exp<T: Real, const D: usize>(v: &MTangent<T, D>) -> MPoint<T, D> {
    let n = v.norm();
    let p = v.base().vector();
    if n <= T::epsilon() {
        return MPoint::lift((p + v.vector()).0);
    }
    MPoint::new_unchecked((p * n.cosh() + v.vector() * (n.sinh() / n)).0)
}

/// Inverse of [`exp`]: the tangent at `p` of length `distance(p,q)` pointing at `q`.
pub fn log<T: Real, const D: usize>(p: &MPoint<T, D>, q: &MPoint<T, D>) -> Result<MTangent<T, D>> {
    let d = distance(p, q)?;
    let pv = p.vector();
    let u = q.vector() + pv * pv.mdot(&q.vector());
    let un = u.mdot(&u).max(T::zero()).sqrt();
    if un <= T::epsilon() {
        return Ok(MTangent::new_unchecked(*p, MVector::zero()));
    }
    Ok(MTangent::new_unchecked(*p, u * (d / un)))
}

/// Orthonormal basis of the tangent space at `p`, obtained by Gram–Schmidt
/// on the projected coordinate axes. At the origin it is `e₁, …, e_{D−1}`.
pub fn tangent_basis<T: Real, const D: usize>(p: &MPoint<T, D>) -> Vec<MTangent<T, D>> {
    let mut out: Vec<MTangent<T, D>> = Vec::with_capacity(D - 1);
    for axis in 0..D - 1 {
        let mut t = MTangent::project(*p, MVector::<T, D>::basis(axis).0).vector();
        for prev in &out {
            t = t - prev.vector() * t.mdot(&prev.vector());
        }
        let n = t.mdot(&t).sqrt();
        out.push(MTangent::new_unchecked(*p, t * (T::one() / n)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    type P4 = MPoint<f64, 4>;

    #[test]
    fn dot_examples() {
        let o = [0.0, 0.0, 0.0, 1.0];
        assert_eq!(minkowski_dot(&o, &o), -1.0);
        assert_eq!(minkowski_dot(&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]), 0.0);
        let q = [0.0, 0.0, 1f64.sinh(), 1f64.cosh()];
        assert_eq!(minkowski_dot(&q, &o), -1f64.cosh());
    }

    #[test]
    fn distance_examples() {
        let o = P4::origin();
        assert_eq!(distance(&o, &o).unwrap(), 0.0);
        let q = P4::new([0.0, 0.0, 1f64.sinh(), 1f64.cosh()]).unwrap();
        assert!((distance(&o, &q).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn off_sheet_pairs_are_rejected() {
        let o = P4::origin();
        let bad = P4::new_unchecked([0.0, 0.0, 0.0, 0.5]);
        assert!(matches!(distance(&o, &bad), Err(Error::InvalidPoint(_))));
        // inside the clamp band
        let near = P4::new_unchecked([0.0, 0.0, 0.0, 1.0 - 5e-8]);
        assert_eq!(distance(&o, &near).unwrap(), 0.0);
    }

    #[test]
    fn point_validation() {
        assert!(P4::new([0.0, 0.0, 0.0, 1.0]).is_ok());
        assert!(P4::new([0.0, 0.0, 0.0, -1.0]).is_err());
        assert!(P4::new([1.0, 0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn geodesic_examples() {
        let o = P4::origin();
        let v = MTangent::unit(o, [1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(geodesic_point(&v, 0.0).unwrap(), o);
        let x = geodesic_point(&v, 1f64.asinh()).unwrap();
        assert!((x.coords()[0] - 1.0).abs() < 1e-15);
        assert!((x.coords()[3] - 2f64.sqrt()).abs() < 1e-15);
        assert!(x.sheet_error() < 1e-12);
        assert!((distance(&o, &x).unwrap() - 1f64.asinh()).abs() < 1e-12);
    }

    #[test]
    fn geodesic_rejects_non_unit() {
        let o = P4::origin();
        let v = MTangent::new(o, [2.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(geodesic_point(&v, 1.0).is_err());
        assert!(MTangent::new(o, [0.0, 0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn log_inverts_exp() {
        let p = P4::lift([0.3, -0.2, 0.5, 0.0]);
        let v = MTangent::project(p, [0.4, 0.1, -0.7, 0.0]);
        let q = exp(&v);
        let back = log(&p, &q).unwrap();
        assert!((back.vector() - v.vector()).max_abs() < 1e-12);
    }
}
