//! Numerical laboratory for unbounded supersolutions of the slow-diffusion
//! evolutionary p-Laplace equation `v_t = div(|grad v|^{p-2} grad v)`, `p > 2`.

pub mod analysis;
pub mod error;
pub mod evolve;
pub mod field;
pub mod geometry;
pub mod giant;
pub mod grid;
pub mod linalg;
pub mod params;
pub mod quadrature;
pub mod residual;
pub mod solutions;
pub(crate) mod stencil;

pub use error::{Error, Result};
pub use field::{AnalyticField, DeclaredClass, Field, FamilySpec, SingularLocus};
pub use geometry::{Cylinder, CylinderShape, SpaceTimePoint};
pub use giant::{GiantDomain, GiantSolution};
pub use grid::{GridField, GridSpec};
pub use params::MediumParams;
