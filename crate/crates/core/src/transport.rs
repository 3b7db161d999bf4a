//! Parallel transport along geodesics and holonomy of closed loops, on the
//! hyperboloid and on the unit sphere S².

use crate::error::{precondition, Error, Result};
use crate::hyperboloid::{distance, tangent_basis, MPoint, MTangent};
use crate::isometry::Isometry;
use crate::linalg::{MVector, Matrix};
use crate::scalar::Real;

/// Transports `v` (based at `p`) along the geodesic to `q`:
/// `v′ = v + ⟨v,q⟩/(1 − ⟨p,q⟩)·(p + q)`.
pub fn parallel_transport<T: Real, const D: usize>(v: &MTangent<T, D>, q: &MPoint<T, D>) -> Result<MTangent<T, D>> {
    let p = v.base().vector();
    let qv = q.vector();
    let denom = T::one() - p.mdot(&qv);
    if denom.abs() <= T::invariant_tol() {
        return Err(Error::DegenerateTransport(format!("1 - <p,q> = {denom}")));
    }
    let w = v.vector() + (p + qv) * (v.vector().mdot(&qv) / denom);
    Ok(MTangent::new_unchecked(*q, w))
}

/// Result of transporting a frame around a closed loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Holonomy<T, const D: usize> {
    /// Net rotation angle in `[0, π]`.
    pub angle: T,
    /// Oriented angle in `(−π, π]` for surfaces (ℍ², `D = 3`); `None` in ℍ³.
    pub signed_angle: Option<T>,
    /// The rotation fixing the start point that maps the initial frame to the
    /// transported one.
    pub rotation: Isometry<T, D>,
}

fn check_closed<T: Real, const D: usize>(lp: &[MPoint<T, D>]) -> Result<()> {
    if lp.len() < 2 {
        return precondition("loop needs at least two points");
    }
    let first = lp[0].vector();
    let last = lp[lp.len() - 1].vector();
    if first.max_abs_diff(&last) > T::invariant_tol() * T::one().max(first.max_abs()) {
        return precondition("loop does not close on its start point");
    }
    Ok(())
}

/// Holonomy of the piecewise-geodesic loop through `lp` (first point
/// repeated at the end). Consecutive duplicate points contribute nothing.
pub fn holonomy_of_loop<T: Real, const D: usize>(lp: &[MPoint<T, D>]) -> Result<Holonomy<T, D>> {
    check_closed(lp)?;
    let start = lp[0];
    let initial = tangent_basis(&start);
    let mut frame = initial.clone();
    for w in lp.windows(2) {
        let (_, b) = (w[0], w[1]);
        frame = frame
            .iter()
            .map(|t| parallel_transport(t, &b))
            .collect::<Result<Vec<_>>>()?;
    }
    // re-anchor exactly at the start point
    let frame: Vec<MTangent<T, D>> = frame
        .into_iter()
        .map(|t| MTangent::new_unchecked(start, t.vector()))
        .collect();

    let mut src = Matrix::<T, D>::zero();
    let mut dst = Matrix::<T, D>::zero();
    for i in 0..D - 1 {
        src.set_col(i, initial[i].vector());
        dst.set_col(i, frame[i].vector());
    }
    src.set_col(D - 1, start.vector());
    dst.set_col(D - 1, start.vector());
    let rotation = Isometry::from_frames(&src, &dst);

    // r_ij = ⟨e_i, f_j⟩ in the tangent space at the start point
    let r = |i: usize, j: usize| initial[i].dot(&frame[j]);
    let (angle, signed) = match D {
        3 => {
            let s = r(1, 0).atan2(r(0, 0));
            // orient by det[e₁, e₂, p] so the sign does not depend on the basis
            let mut m = Matrix::<T, 3>::zero();
            m.set_col(0, MVector([initial[0].vec()[0], initial[0].vec()[1], initial[0].vec()[2]]));
            m.set_col(1, MVector([initial[1].vec()[0], initial[1].vec()[1], initial[1].vec()[2]]));
            let sp = start.coords();
            m.set_col(2, MVector([sp[0], sp[1], sp[2]]));
            let s = if m.determinant() < T::zero() { -s } else { s };
            (s.abs(), Some(s))
        }
        _ => {
            let n = D - 1;
            let mut tr = T::zero();
            for i in 0..n {
                tr = tr + r(i, i);
            }
            if n == 3 {
                let axis = [r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)];
                let sin2 = axis.iter().map(|a| *a * *a).sum::<T>().sqrt();
                (sin2.atan2(tr - T::one()), None)
            } else {
                let c = ((tr - T::lit((n - 2) as f64)) * T::half()).max(-T::one()).min(T::one());
                (c.acos(), None)
            }
        }
    };
    Ok(Holonomy {
        angle,
        signed_angle: signed,
        rotation,
    })
}

/// Interior angle at `p` of the geodesic triangle `p, q, r`.
pub fn interior_angle<T: Real, const D: usize>(p: &MPoint<T, D>, q: &MPoint<T, D>, r: &MPoint<T, D>) -> Result<T> {
    let u = MTangent::project(*p, q.vector().0).vector();
    let w = MTangent::project(*p, r.vector().0).vector();
    let uu = u.mdot(&u);
    let ww = w.mdot(&w);
    let uw = u.mdot(&w);
    if uu <= T::zero() || ww <= T::zero() {
        return precondition("triangle has coincident vertices");
    }
    let cross = (uu * ww - uw * uw).max(T::zero()).sqrt();
    Ok(cross.atan2(uw))
}

/// Sum of interior angles of the geodesic triangle `a, b, c`.
pub fn angle_sum<T: Real, const D: usize>(a: &MPoint<T, D>, b: &MPoint<T, D>, c: &MPoint<T, D>) -> Result<T> {
    Ok(interior_angle(a, b, c)? + interior_angle(b, c, a)? + interior_angle(c, a, b)?)
}

/// A point of the unit sphere S² ⊂ ℝ³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint<T> {
    coords: [T; 3],
}

impl<T: Real> SpherePoint<T> {
    pub fn new(coords: [T; 3]) -> Result<Self> {
        let n = MVector(coords).enorm();
        if (n - T::one()).abs() > T::invariant_tol() {
            return Err(Error::InvalidPoint(format!("sphere point has norm {n}")));
        }
        Ok(Self { coords })
    }

    pub fn normalized(coords: [T; 3]) -> Self {
        let n = MVector(coords).enorm();
        Self {
            coords: coords.map(|x| x / n),
        }
    }

    pub fn coords(&self) -> &[T; 3] {
        &self.coords
    }
}

/// Transports the tangent `v` at `a` along the great-circle arc to `b`:
/// `v′ = v − (v·b)/(1 + a·b)·(a + b)`.
pub fn sphere_parallel_transport<T: Real>(a: &SpherePoint<T>, b: &SpherePoint<T>, v: &[T; 3]) -> Result<[T; 3]> {
    let av = MVector(a.coords);
    let bv = MVector(b.coords);
    let vv = MVector(*v);
    if av.edot(&vv).abs() > T::invariant_tol() * T::one().max(vv.max_abs()) {
        return precondition("vector is not tangent to the sphere at the start point");
    }
    let denom = T::one() + av.edot(&bv);
    if denom <= T::lit(1e-12) {
        return Err(Error::DegenerateTransport("antipodal points".into()));
    }
    Ok((vv - (av + bv) * (vv.edot(&bv) / denom)).0)
}

/// Holonomy of a closed piecewise great-circle loop on S².
///
/// Returns the signed rotation angle of a transported tangent, positive when
/// counterclockwise seen from outside the sphere at the start point.
pub fn sphere_holonomy_of_loop<T: Real>(lp: &[SpherePoint<T>]) -> Result<T> {
    if lp.len() < 2 {
        return precondition("loop needs at least two points");
    }
    let first = MVector(lp[0].coords);
    if first.max_abs_diff(&MVector(lp[lp.len() - 1].coords)) > T::invariant_tol() {
        return precondition("loop does not close on its start point");
    }
    // any tangent at the start point
    let helper = if first[0].abs() < T::lit(0.9) {
        MVector([T::one(), T::zero(), T::zero()])
    } else {
        MVector([T::zero(), T::one(), T::zero()])
    };
    let v0 = helper - first * helper.edot(&first);
    let v0 = v0 * (T::one() / v0.enorm());
    let mut v = v0.0;
    for w in lp.windows(2) {
        v = sphere_parallel_transport(&w[0], &w[1], &v)?;
    }
    let v1 = MVector(v);
    let cross = cross3(&v0.0, &v1.0);
    let sin = MVector(cross).edot(&first);
    Ok(sin.atan2(v0.edot(&v1)))
}

pub(crate) fn cross3<T: Real>(a: &[T; 3], b: &[T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Area of a geodesic triangle in ℍ² from the Minkowski triple product:
/// `tan(A/2) = |det(p,q,r)| / (1 − ⟨p,q⟩ − ⟨q,r⟩ − ⟨r,p⟩)`.
pub fn triangle_area<T: Real>(p: &MPoint<T, 3>, q: &MPoint<T, 3>, r: &MPoint<T, 3>) -> Result<T> {
    // validate the inputs as a pair set
    distance(p, q)?;
    distance(q, r)?;
    let m = Matrix::from_cols([*p.coords(), *q.coords(), *r.coords()]);
    let num = m.determinant().abs();
    let den = T::one() - p.vector().mdot(&q.vector()) - q.vector().mdot(&r.vector()) - r.vector().mdot(&p.vector());
    Ok(T::two() * num.atan2(den))
}
