//! Knot vectors, rational B-spline surfaces, and knot insertion.

mod io;
mod knots;
mod surface;

pub use knots::{KnotVector, SpanBasis};
pub use surface::{BasisEval, Direction, NurbsSurface, SurfacePoint};
