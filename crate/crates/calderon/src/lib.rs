//! Numerical laboratory for the inverse conductivity problem on balls:
//! forward Dirichlet-to-Neumann synthesis, boundary recovery of the
//! conductivity and its gradient, DtN transfer to a larger ball, complex
//! geometrical optics solutions through a boundary integral equation with
//! Faddeev kernels, scattering-transform extraction, and recovery of the
//! conductivity from the reconstructed potential.

pub mod linalg;
pub mod quad;
pub mod conductivity;
pub mod dtn;
pub mod sphere;

pub use linalg::{CMat, C64};
pub use sphere::{BoundaryField, SobolevIndex, SphericalGrid};
