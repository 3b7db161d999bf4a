//! Hyperbolic and product-space geometry engine.
//!
//! Points of ℍ³ and ℍ² live on the hyperboloid `⟨x,x⟩ = −1` in Minkowski
//! space (signature `+,+,+,−`, last coordinate timelike); isometries are
//! 4×4 (or 3×3) Lorentz matrices stored column-major. On top of that sit the
//! product space ℍ²×𝔼, Coxeter tilings, perception formulas, a camera-frame
//! walkthrough and a software renderer.
//!
//! The geometric types are generic over the scalar ([`Real`]: `f32`/`f64`);
//! the aliases below fix `f64`, which is what the tilings, renderer and CLI use.

pub mod error;
pub mod hyperboloid;
pub mod isometry;
pub mod linalg;
pub mod models;
pub mod perception;
pub mod product;
pub mod render;
pub mod scalar;
pub mod space;
pub mod tiling;
pub mod transport;
pub mod walk;

pub use error::{Error, Result};
pub use hyperboloid::{distance, exp, geodesic_point, log, minkowski_dot, tangent_basis};
pub use isometry::{commutator, Classification};
pub use models::{project_h2, project_h3, unproject_h2, unproject_h3, Model};
pub use product::{angular_sizes, product_distance, product_geodesic};
pub use scalar::Real;
pub use space::Space;
pub use transport::{
    holonomy_of_loop, parallel_transport, sphere_holonomy_of_loop, sphere_parallel_transport,
};

/// Point of ℍ³.
pub type MPoint = hyperboloid::MPoint<f64, 4>;
/// Tangent vector of ℍ³.
pub type MTangent = hyperboloid::MTangent<f64, 4>;
/// Isometry of ℍ³.
pub type Isometry = isometry::Isometry<f64, 4>;
/// Point of ℍ² (coordinates `x₁, x₂, x₄`).
pub type H2Point = hyperboloid::MPoint<f64, 3>;
pub type H2Tangent = hyperboloid::MTangent<f64, 3>;
pub type H2Isometry = isometry::Isometry<f64, 3>;
pub type ProductPoint = product::ProductPoint<f64>;
pub type ProductIsometry = product::ProductIsometry<f64>;
pub type SpherePoint = transport::SpherePoint<f64>;
pub type Matrix4 = linalg::Matrix<f64, 4>;
