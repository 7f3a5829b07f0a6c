//! Single-source shortest paths in weighted unit-disk graphs, built on
//! half-plane additively-weighted Voronoi diagrams.
//!
//! The crate is organized bottom-up:
//!
//! - [`geom`]: the numeric kernel — weighted sites, additively-weighted
//!   distances, bisector classification (hyperbola branch / line / empty),
//!   and curve intersection primitives.
//! - [`vd`]: the half-plane diagram `VD+(S)` of sites below the x-axis,
//!   restricted to the closed half-plane above it: DCEL-style representation,
//!   divide-and-conquer construction, spoke subdivision, and point location.
//! - [`merge`]: linear-time merge of two half-plane diagrams by sweeping the
//!   axis for contour seeds and tracing contour components through the
//!   spoke-subdivided inputs.
//! - [`awnn`]: insertion-only additively-weighted nearest-neighbor solvers
//!   with a separating line: the amortized-rebuild recursive structure, the
//!   logarithmic method baseline, an offline tree solver, and a brute oracle.
//! - [`sssp`]: the grid-based shortest-path algorithm driven by the
//!   nearest-neighbor machinery, plus an explicit-graph Dijkstra oracle.
//! - [`io`]: text formats (point files, op sequences, diagram serialization).
//!
//! All geometry is plain `f64` with a relative tolerance of `1e-9` for
//! predicates; degenerate inputs are handled by seeded perturbation and
//! bounded retries rather than exact arithmetic.

pub mod awnn;
pub mod error;
pub mod geom;
pub mod io;
pub mod merge;
pub mod sssp;
pub mod vd;

pub use error::{GeomError, MergeError, NnError, ParseError, SsspError, VdError};
pub use geom::{Point, SiteId, WeightedSite};
