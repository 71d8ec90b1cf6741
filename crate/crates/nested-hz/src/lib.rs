//! Mixed stress-displacement finite elements for planar linear elasticity.
//!
//! The discrete stress space is the symmetric matrix-valued cubic Lagrange
//! space enriched with elementwise H(div) bubbles; the displacement space is
//! discontinuous vector-valued P2. On top of the plain space the crate
//! provides two relaxations of the vertex continuity of stresses:
//!
//! * an *extended* space on bisection-refined meshes, where the pure
//!   tangential stress component may take two one-sided values at each
//!   vertex created as an edge midpoint (the resulting spaces are nested
//!   under refinement), and
//! * a *corner-relaxed* space that splits the tangential component at
//!   selected boundary corners so that discontinuous traction data can be
//!   imposed exactly.
//!
//! The crate also contains a residual a-posteriori error estimator with bulk
//! marking, an adaptive refinement loop, and a set of benchmark problems
//! (smooth manufactured solution, polynomial patch test, a bimaterial
//! interface, an L-shaped domain with a corner singularity, and Cook's
//! membrane).

pub mod adapt;
pub mod elem;
pub mod estimator;
pub mod fields;
pub mod la;
pub mod mesh;
pub mod poly;
pub mod problems;
pub mod quad;
pub mod report;
pub mod space;
pub mod system;

pub use elem::{ElementGeometry, StressShapes, SymMatrix2};
pub use mesh::{Mesh, VertexKind};
