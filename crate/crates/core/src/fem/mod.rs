//! Lagrange finite elements for small-strain linear elasticity.

pub mod assembly;
pub mod element;
pub mod generate;
pub mod io;
pub mod mesh;
pub mod post;
mod refine;

pub use assembly::{assemble_and_solve, element_point, BodyForce, DofMap, LoadCase, Solution, SolverOptions, System};
pub use element::{ElementKind, QuadratureOptions, ALL_KINDS};
pub use io::{load_mesh, parse_mesh, save_mesh};
pub use mesh::{BoundaryFace, DirichletBc, Element, Mesh, SurfaceQp, FREE_TAG};
pub use post::{
    ndet_surface_field, stress_at_surface, stress_from_gradient, surface_integral, LifeField, SurfaceStress,
};
