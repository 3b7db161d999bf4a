//! The product geometry ℍ²×𝔼: a hyperbolic plane to walk on times a
//! Euclidean vertical line.

use crate::error::{precondition, Result};
use crate::hyperboloid::{distance, geodesic_point, MPoint, MTangent};
use crate::isometry::{Classification, Isometry};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::space::Space;

/// A point `(h, z)` of ℍ²×𝔼.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductPoint<T> {
    pub h: MPoint<T, 3>,
    pub z: T,
}

impl<T: Real> ProductPoint<T> {
    pub fn new(h: MPoint<T, 3>, z: T) -> Self {
        Self { h, z }
    }

    pub fn origin() -> Self {
        Self {
            h: MPoint::origin(),
            z: T::zero(),
        }
    }
}

/// A split isometry: `(h, z) ↦ (A·h, ±z + shift)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductIsometry<T> {
    pub h_part: Isometry<T, 3>,
    pub z_shift: T,
    pub z_flip: bool,
}

impl<T: Real> Default for ProductIsometry<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> ProductIsometry<T> {
    pub fn identity() -> Self {
        Self {
            h_part: Isometry::identity(),
            z_shift: T::zero(),
            z_flip: false,
        }
    }

    pub fn horizontal(h_part: Isometry<T, 3>) -> Self {
        Self {
            h_part,
            z_shift: T::zero(),
            z_flip: false,
        }
    }

    pub fn vertical(z_shift: T) -> Self {
        Self {
            h_part: Isometry::identity(),
            z_shift,
            z_flip: false,
        }
    }

    pub fn apply(&self, p: &ProductPoint<T>) -> ProductPoint<T> {
        let z = if self.z_flip { -p.z } else { p.z };
        ProductPoint {
            h: self.h_part.apply_point(&p.h),
            z: z + self.z_shift,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let shift = if self.z_flip {
            -other.z_shift + self.z_shift
        } else {
            other.z_shift + self.z_shift
        };
        Self {
            h_part: self.h_part.compose(&other.h_part),
            z_shift: shift,
            z_flip: self.z_flip ^ other.z_flip,
        }
    }

    pub fn inverse(&self) -> Self {
        let shift = if self.z_flip { self.z_shift } else { -self.z_shift };
        Self {
            h_part: self.h_part.inverse(),
            z_shift: shift,
            z_flip: self.z_flip,
        }
    }

    pub fn renormalized_if_drifted(&self) -> Self {
        Self {
            h_part: self.h_part.renormalized_if_drifted(),
            ..*self
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        let flip = if self.z_flip == other.z_flip { T::zero() } else { T::infinity() };
        self.h_part
            .matrix()
            .max_abs_diff(other.h_part.matrix())
            .max((self.z_shift - other.z_shift).abs())
            .max(flip)
    }

    pub fn is_identity(&self, tol: T) -> bool {
        self.max_abs_diff(&Self::identity()) <= tol
    }

    pub fn classify(&self) -> Classification<T> {
        self.classify_with_tol(T::invariant_tol())
    }

    pub fn classify_with_tol(&self, tol: T) -> Classification<T> {
        if self.z_flip {
            return Classification::Other;
        }
        let h = self.h_part.classify_with_tol(tol);
        let vertical = self.z_shift.abs() > tol;
        match (h, vertical) {
            (Classification::Identity, false) => Classification::Identity,
            (Classification::Identity, true) => Classification::Translation {
                length: self.z_shift.abs(),
            },
            (Classification::Translation { length }, false) => Classification::Translation { length },
            (Classification::Translation { length }, true) => Classification::Translation {
                length: (length * length + self.z_shift * self.z_shift).sqrt(),
            },
            (Classification::Rotation { angle }, false) => Classification::Rotation { angle },
            _ => Classification::Other,
        }
    }

    /// `A B A⁻¹ B⁻¹`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.compose(other).compose(&self.inverse()).compose(&other.inverse())
    }

    /// The matrix of the hyperbolic factor embedded in 4×4, acting on
    /// `(x₁, x₂, x₃, x₄)` with the `x₃` slot left fixed.
    pub fn embedded_h_matrix(&self) -> Matrix<T, 4> {
        embed_h2_matrix(self.h_part.matrix())
    }
}

/// Embeds a 3×3 ℍ² matrix (coordinates `x₁, x₂, x₄`) into 4×4.
pub fn embed_h2_matrix<T: Real>(m: &Matrix<T, 3>) -> Matrix<T, 4> {
    const MAP: [usize; 3] = [0, 1, 3];
    let mut out = Matrix::<T, 4>::identity();
    for c in 0..3 {
        for r in 0..3 {
            out.set(MAP[r], MAP[c], m.get(r, c));
        }
    }
    out
}

/// Product-metric distance `√(d_ℍ²² + Δz²)`.
pub fn product_distance<T: Real>(p: &ProductPoint<T>, q: &ProductPoint<T>) -> Result<T> {
    let dh = distance(&p.h, &q.h)?;
    let dz = p.z - q.z;
    Ok((dh * dh + dz * dz).sqrt())
}

/// A direction in ℍ²×𝔼: horizontal tangent plus vertical rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductTangent<T> {
    pub h: MTangent<T, 3>,
    pub z_rate: T,
}

/// Point at parameter `t` on the product geodesic with unit direction `dir`.
pub fn product_geodesic<T: Real>(p: &ProductPoint<T>, dir: &ProductTangent<T>, t: T) -> Result<ProductPoint<T>> {
    if dir.h.base().vector().max_abs_diff(&p.h.vector()) > T::invariant_tol() * T::one().max(p.h.vector().max_abs()) {
        return precondition("direction is not based at the start point");
    }
    let hs = dir.h.norm_squared();
    let total = hs + dir.z_rate * dir.z_rate;
    if total <= T::epsilon() {
        return precondition("zero direction");
    }
    if (total - T::one()).abs() > T::invariant_tol() {
        return precondition(format!("direction not normalized: |v|² = {total}"));
    }
    let speed = hs.max(T::zero()).sqrt();
    let h = if speed <= T::epsilon() {
        *dir.h.base()
    } else {
        geodesic_point(&dir.h.scaled(T::one() / speed), t * speed)?
    };
    Ok(ProductPoint { h, z: p.z + dir.z_rate * t })
}

/// Angular half-sizes `(width, height)` of an object with the given half
/// extents seen face-on from distance `d`.
///
/// Hyperbolic extents subtend `arctan(tanh(e)/sinh(d))`, Euclidean ones
/// `arctan(e/d)`. In ℍ²×𝔼 the width is hyperbolic and the height Euclidean,
/// to first order.
pub fn angular_sizes<T: Real>(half_width: T, half_height: T, d: T, space: Space) -> Result<(T, T)> {
    if half_width <= T::zero() || half_height <= T::zero() || d <= T::zero() {
        return precondition("extents and distance must be positive");
    }
    let hyp = |e: T| (e.tanh() / d.sinh()).atan();
    let euc = |e: T| (e / d).atan();
    Ok(match space {
        Space::H3 => (hyp(half_width), hyp(half_height)),
        Space::H2E => (hyp(half_width), euc(half_height)),
        Space::Euclidean => (euc(half_width), euc(half_height)),
    })
}
