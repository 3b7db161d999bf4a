//! Maps from the hyperboloid to the Beltrami–Klein ball, the Poincaré ball
//! and the upper half-space, with exact inverses.
//!
//! Half-space convention: `(x₁, x₂, 1)/(x₄ − x₃)` in ℍ³ and `(x₁, 1)/(x₄ − x₂)`
//! in ℍ²; the last coordinate is the height above the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperboloid::MPoint;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Klein,
    Poincare,
    #[serde(alias = "halfplane")]
    HalfSpace,
}

impl std::str::FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "klein" => Ok(Model::Klein),
            "poincare" => Ok(Model::Poincare),
            "halfspace" | "halfplane" | "half-plane" | "half-space" => Ok(Model::HalfSpace),
            other => Err(Error::Parse(format!("unknown model '{other}'"))),
        }
    }
}

fn project_slice<T: Real>(x: &[T], out: &mut [T], model: Model) {
    let n = x.len() - 1;
    let t = x[n];
    match model {
        Model::Klein => {
            for i in 0..n {
                out[i] = x[i] / t;
            }
        }
        Model::Poincare => {
            for i in 0..n {
                out[i] = x[i] / (T::one() + t);
            }
        }
        Model::HalfSpace => {
            // x_n is the last spatial coordinate; t − x_n > 0 on the sheet
            let denom = t - x[n - 1];
            for i in 0..n - 1 {
                out[i] = x[i] / denom;
            }
            out[n - 1] = T::one() / denom;
        }
    }
}

fn unproject_slice<T: Real>(y: &[T], out: &mut [T], model: Model) -> Result<()> {
    let n = y.len();
    match model {
        Model::Klein => {
            let r2: T = y.iter().map(|v| *v * *v).sum();
            if r2 >= T::one() {
                return Err(Error::InvalidPoint("Klein coordinates outside the unit ball".into()));
            }
            let t = T::one() / (T::one() - r2).sqrt();
            for i in 0..n {
                out[i] = y[i] * t;
            }
            out[n] = t;
        }
        Model::Poincare => {
            let r2: T = y.iter().map(|v| *v * *v).sum();
            if r2 >= T::one() {
                return Err(Error::InvalidPoint("Poincaré coordinates outside the unit ball".into()));
            }
            let f = T::one() / (T::one() - r2);
            for i in 0..n {
                out[i] = T::two() * y[i] * f;
            }
            out[n] = (T::one() + r2) * f;
        }
        Model::HalfSpace => {
            let h = y[n - 1];
            if h <= T::zero() {
                return Err(Error::InvalidPoint("half-space height must be positive".into()));
            }
            let mut s = T::one();
            for i in 0..n - 1 {
                out[i] = y[i] / h;
                s = s + out[i] * out[i];
            }
            // x_D − x_n = 1/h and x_D + x_n = (1 + Σxᵢ²)·h
            let diff = T::one() / h;
            let sum = s * h;
            out[n - 1] = (sum - diff) * T::half();
            out[n] = (sum + diff) * T::half();
        }
    }
    Ok(())
}

/// Projects a point of ℍ³ into the chosen ball/half-space model.
pub fn project_h3<T: Real>(p: &MPoint<T, 4>, model: Model) -> [T; 3] {
    let mut out = [T::zero(); 3];
    project_slice(p.coords(), &mut out, model);
    out
}

pub fn unproject_h3<T: Real>(y: &[T; 3], model: Model) -> Result<MPoint<T, 4>> {
    let mut out = [T::zero(); 4];
    unproject_slice(y, &mut out, model)?;
    Ok(MPoint::new_unchecked(out))
}

/// Projects a point of ℍ² (coordinates `(x₁, x₂, x₄)`) into a disk/half-plane model.
pub fn project_h2<T: Real>(p: &MPoint<T, 3>, model: Model) -> [T; 2] {
    let mut out = [T::zero(); 2];
    project_slice(p.coords(), &mut out, model);
    out
}

pub fn unproject_h2<T: Real>(y: &[T; 2], model: Model) -> Result<MPoint<T, 3>> {
    let mut out = [T::zero(); 3];
    unproject_slice(y, &mut out, model)?;
    Ok(MPoint::new_unchecked(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperboloid::{geodesic_point, MTangent};

    #[test]
    fn basepoint_images() {
        let o = MPoint::<f64, 4>::origin();
        assert_eq!(project_h3(&o, Model::Klein), [0.0; 3]);
        assert_eq!(project_h3(&o, Model::Poincare), [0.0; 3]);
        assert_eq!(project_h3(&o, Model::HalfSpace), [0.0, 0.0, 1.0]);
        assert_eq!(project_h2(&MPoint::<f64, 3>::origin(), Model::HalfSpace), [0.0, 1.0]);
    }

    #[test]
    fn radii_at_unit_distance() {
        let o = MPoint::<f64, 4>::origin();
        let v = MTangent::unit(o, [1.0, 0.0, 0.0, 0.0]).unwrap();
        let p = geodesic_point(&v, 1.0).unwrap();
        assert!((project_h3(&p, Model::Klein)[0] - 0.761594155955765).abs() < 1e-12);
        assert!((project_h3(&p, Model::Poincare)[0] - 0.46211715726000974).abs() < 1e-12);
    }

    #[test]
    fn round_trips() {
        let p = MPoint::<f64, 4>::lift([0.4, -1.2, 0.9, 0.0]);
        for model in [Model::Klein, Model::Poincare, Model::HalfSpace] {
            let back = unproject_h3(&project_h3(&p, model), model).unwrap();
            assert!(back.vector().max_abs_diff(&p.vector()) < 1e-12, "{model:?}");
        }
        let q = MPoint::<f64, 3>::lift([-0.7, 0.2, 0.0]);
        for model in [Model::Klein, Model::Poincare, Model::HalfSpace] {
            let back = unproject_h2(&project_h2(&q, model), model).unwrap();
            assert!(back.vector().max_abs_diff(&q.vector()) < 1e-12, "{model:?}");
        }
    }

    #[test]
    fn out_of_model_inputs_rejected() {
        assert!(unproject_h3(&[1.0, 0.0, 0.0], Model::Klein).is_err());
        assert!(unproject_h2(&[0.3, -0.1], Model::HalfSpace).is_err());
    }
}
