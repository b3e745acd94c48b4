//! Numerical laboratory for dispersive space-time norms on discrete
//! frequency lattices.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`] — discrete (xi, tau) geometries, dense and sparse
//!   coefficient fields, the unitary transform pair and free Schroedinger
//!   evolution;
//! * [`norms`] — weighted X(s,b) norms, mixed Lebesgue norms, multiplier
//!   and cutoff helpers, the duality pairing;
//! * [`bilinear`] — twisted convolutions with distance/sum symbols and the
//!   closed-form identity for their interaction with free evolutions;
//! * [`estimates`] — a registry of multilinear inequality cases with
//!   admissibility predicates, random ensembles and quotient maximisation;
//! * [`counterexamples`] — concentrated mode families whose inequality
//!   quotients grow with a predictable log-log slope, plus convolution
//!   lower-bound certificates;
//! * [`solver`] — a Picard/Duhamel pseudospectral solver for Schroedinger
//!   equations with power nonlinearities and rough random data.
//!
//! Every routine is deterministic given its inputs and seed; all
//! floating-point work is f64.

pub mod bilinear;
pub mod counterexamples;
pub mod error;
pub mod estimates;
pub mod lattice;
pub mod norms;
pub mod report;
pub mod solver;

pub use error::CoreError;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CoreError>;
