//! Gibbs random T-tessellations of bounded convex polygonal domains.
//!
//! The crate provides, bottom to top:
//! - [`geom`]: planar primitives with lines in (angle, offset) coordinates
//!   carrying the scaled rigid-motion-invariant measure;
//! - [`tess`]: the T-tessellation state with full adjacency, a cached
//!   statistics block, validation of the defining properties and counting
//!   identities, and a plain-text state format;
//! - [`ops`]: the three reversible local updates (split, merge, flip) with
//!   enumeration, uniform sampling, exact receipts and inverses;
//! - [`lines`]: Poisson line process sampling and exhaustive enumeration of
//!   the T-tessellations supported by a small line pattern;
//! - [`models`]: stable energy models (completely random, Arak-Clifford-
//!   Surgailis, squared-area penalty, angle reward, composites);
//! - [`sampler`]: the Metropolis-Hastings-Green chain plus numerical
//!   verifiers (Georgii-Nguyen-Zessin identities, conditional uniformity,
//!   convergence preconditions);
//! - [`monitor`]: traces, Lorenz curves, angle histograms, segment survival
//!   and CSV/SVG export;
//! - [`config`]: the TOML run configuration behind the `ttess` binary.
//!
//! All geometry and chain arithmetic is generic over the scalar type via
//! [`real::Real`]; `f64` is the working precision of every shipped entry
//! point and of the aliases below.

pub mod config;
pub mod geom;
pub mod lines;
pub mod models;
pub mod monitor;
pub mod ops;
pub mod real;
pub mod sampler;
pub mod tess;

/// Working scalar of the shipped tools.
pub type Scalar = f64;
pub type Point = geom::Point<Scalar>;
pub type Line = geom::Line<Scalar>;
pub type Polygon = geom::Polygon<Scalar>;
pub type Tolerance = geom::Tolerance<Scalar>;
pub type Tessellation = tess::TTessellation<Scalar>;
pub type LinePattern = lines::LinePattern<Scalar>;
