//! The three model spaces the walkthrough and renderer run in, plus the
//! Euclidean motions used for the flat comparator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isometry::Classification;
use crate::linalg::{euclidean_orthonormalize, MVector, Matrix};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    H3,
    H2E,
    Euclidean,
}

impl Space {
    pub fn name(&self) -> &'static str {
        match self {
            Space::H3 => "h3",
            Space::H2E => "h2e",
            Space::Euclidean => "euclidean",
        }
    }
}

impl std::fmt::Display for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Space {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h3" => Ok(Space::H3),
            "h2e" | "h2xe" => Ok(Space::H2E),
            "euclidean" | "e3" => Ok(Space::Euclidean),
            other => Err(Error::Parse(format!("unknown space '{other}'"))),
        }
    }
}

/// Rotation of ℝ³ (orthogonal, det +1), column-major.
pub type Rotation3<T> = Matrix<T, 3>;

/// Right-handed rotation by `theta` about coordinate axis `axis` of ℝ³.
pub fn axis_rotation<T: Real>(axis: usize, theta: T) -> Rotation3<T> {
    let (c, s) = (theta.cos(), theta.sin());
    let (i, j) = ((axis + 1) % 3, (axis + 2) % 3);
    let mut m = Rotation3::identity();
    m.set(i, i, c);
    m.set(j, i, s);
    m.set(i, j, -s);
    m.set(j, j, c);
    m
}

/// Angle of a 3-D rotation matrix, in `[0, π]`.
pub fn rotation3_angle<T: Real>(r: &Rotation3<T>) -> T {
    let axis = [
        r.get(2, 1) - r.get(1, 2),
        r.get(0, 2) - r.get(2, 0),
        r.get(1, 0) - r.get(0, 1),
    ];
    let sin2 = axis.iter().map(|a| *a * *a).sum::<T>().sqrt();
    sin2.atan2(r.trace() - T::one())
}

/// A rigid motion of 𝔼³ as a 4×4 affine matrix (last row `0 0 0 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EuclideanMotion<T> {
    m: Matrix<T, 4>,
}

impl<T: Real> Default for EuclideanMotion<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> EuclideanMotion<T> {
    pub fn identity() -> Self {
        Self {
            m: Matrix::identity(),
        }
    }

    pub fn from_parts(rot: &Rotation3<T>, trans: [T; 3]) -> Self {
        let mut m = Matrix::identity();
        for c in 0..3 {
            for r in 0..3 {
                m.set(r, c, rot.get(r, c));
            }
        }
        for (r, t) in trans.iter().enumerate() {
            m.set(r, 3, *t);
        }
        Self { m }
    }

    pub fn from_matrix_unchecked(m: Matrix<T, 4>) -> Self {
        Self { m }
    }

    pub fn translation(v: [T; 3]) -> Self {
        Self::from_parts(&Rotation3::identity(), v)
    }

    pub fn matrix(&self) -> &Matrix<T, 4> {
        &self.m
    }

    pub fn rotation(&self) -> Rotation3<T> {
        let mut r = Rotation3::zero();
        for c in 0..3 {
            for row in 0..3 {
                r.set(row, c, self.m.get(row, c));
            }
        }
        r
    }

    pub fn translation_part(&self) -> [T; 3] {
        [self.m.get(0, 3), self.m.get(1, 3), self.m.get(2, 3)]
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self { m: self.m * other.m }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation().transpose();
        let t = MVector(self.translation_part());
        let nt = rt.mul_vec(&t);
        Self::from_parts(&rt, [-nt[0], -nt[1], -nt[2]])
    }

    pub fn apply(&self, p: &[T; 3]) -> [T; 3] {
        let v = self.m.mul_vec(&MVector([p[0], p[1], p[2], T::one()]));
        [v[0], v[1], v[2]]
    }

    pub fn apply_direction(&self, v: &[T; 3]) -> [T; 3] {
        self.rotation().mul_vec(&MVector(*v)).0
    }

    /// `max |RᵀR − I|` of the linear part.
    pub fn invariant_error(&self) -> T {
        let r = self.rotation();
        (r.transpose() * r).max_abs_diff(&Rotation3::identity())
    }

    pub fn renormalized(&self) -> Self {
        Self::from_parts(&euclidean_orthonormalize(&self.rotation()), self.translation_part())
    }

    pub fn classify(&self) -> Classification<T> {
        self.classify_with_tol(T::invariant_tol())
    }

    pub fn classify_with_tol(&self, tol: T) -> Classification<T> {
        let r = self.rotation();
        let t = MVector(self.translation_part());
        let angle = rotation3_angle(&r);
        if angle <= tol {
            if t.max_abs() <= tol {
                return Classification::Identity;
            }
            return Classification::Translation { length: t.enorm() };
        }
        if r.determinant() < T::zero() {
            return Classification::Other;
        }
        // rotation axis from the antisymmetric part; a fixed point exists iff
        // the translation has no component along it
        let axis = MVector([
            r.get(2, 1) - r.get(1, 2),
            r.get(0, 2) - r.get(2, 0),
            r.get(1, 0) - r.get(0, 1),
        ]);
        let axis = if axis.enorm() > tol {
            axis * (T::one() / axis.enorm())
        } else {
            // half-turn: axis from R + I
            let s = r.col(0) + r.col(1) + r.col(2) + MVector([T::one(); 3]);
            s * (T::one() / s.enorm().max(T::epsilon()))
        };
        if t.edot(&axis).abs() <= tol {
            Classification::Rotation { angle }
        } else {
            Classification::Other
        }
    }
}
