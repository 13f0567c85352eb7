//! Numerical renormalization of Lorenz maps.
//!
//! A Lorenz map is an increasing map of the unit interval with a single
//! discontinuity at a critical point `c`, each branch a power law `x^alpha`
//! composed with a diffeomorphism. This crate implements the machinery
//! needed to study such maps numerically:
//!
//! - [`diffeo`]: pure maps (rescaled power laws), the nonlinearity operator
//!   and its inverse, zooms, distortion, Schwarzian derivative, Koebe bound;
//! - [`decomp`]: decompositions (ordered lists of pure maps), their
//!   composition, zooming and concatenation algebra;
//! - [`lorenz`]: Lorenz maps as five-tuples `(u, v, c, phi, psi)` with exact
//!   evaluation, closed-form inverse branches and symbolic orbits;
//! - [`renorm`]: detection of monotone-type renormalizability, the
//!   renormalization operator on plain and decomposed maps, a brute-force
//!   first-return oracle, and numerical verification reports;
//! - [`param`]: parameter-plane machinery: slice families, trivial-boundary
//!   curves, island solving, cascades of renormalizable parameters,
//!   finite-difference Jacobian and cone-field diagnostics;
//! - [`attractor`]: Cantor-attractor covers and statistics, transfer maps,
//!   loop graphs, winding matrices and invariant measures via Hilbert-metric
//!   cone contraction.
//!
//! All numerical kernels are generic over the scalar type through [`Real`];
//! the `*64` aliases at the crate root name the common double-precision
//! instantiations. Quantitative tolerances (module [`tol`]) are calibrated
//! for `f64`.

pub mod attractor;
pub mod decomp;
pub mod diffeo;
mod error;
pub mod lorenz;
pub mod param;
pub mod renorm;

pub use error::{Error, Result};

/// Scalar type for all numerical kernels.
///
/// Implemented by `f32` and `f64`. The extra bounds beyond
/// [`num_traits::Float`] let generic code convert literals and counters
/// without naming a concrete type.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumAssignOps
    + core::fmt::Debug
    + core::fmt::Display
    + 'static
{
}

impl<T> Real for T where
    T: num_traits::Float
        + num_traits::FromPrimitive
        + num_traits::NumAssignOps
        + core::fmt::Debug
        + core::fmt::Display
        + 'static
{
}

/// Converts an `f64` literal into the working scalar type.
pub(crate) fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 literal converts to any Real")
}

/// Converts a count into the working scalar type.
pub(crate) fn count<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("grid size converts to any Real")
}

/// Named tolerances and resolutions used across the crate (calibrated for `f64`).
pub mod tol {
    /// Below this |s| pure maps are evaluated by first-order expansion in s.
    pub const SMALL_S: f64 = 1e-9;
    /// Pieces with |s| below this are pruned after renormalization.
    pub const PRUNE_S: f64 = 1e-15;
    /// Default grid resolution for the inverse-nonlinearity quadrature.
    pub const GRID_N: usize = 1025;
    /// Grid resolution for sup-norm and distortion sampling.
    pub const SUP_GRID_N: usize = 257;
    /// Bisection width for periodic-point root finding.
    pub const ROOT_BISECT: f64 = 1e-13;
    /// Maximum Newton polish steps after bisection.
    pub const NEWTON_MAX: usize = 8;
    /// Validation tolerance for periodicity of return-interval endpoints.
    pub const PERIODICITY: f64 = 1e-11;
    /// An orbit point this close to the critical point fails word checks.
    pub const CRIT_COLLISION: f64 = 1e-13;
    /// Margin for the strict inequalities in the nontriviality test.
    pub const NONTRIVIAL: f64 = 1e-14;
    /// Relative step for central finite differences.
    pub const FD_STEP: f64 = 1e-6;
    /// Retries (each shrinking the step) when an FD probe changes type.
    pub const FD_RETRIES: usize = 4;
    /// Box-diameter floor below which cascades abort (double precision).
    pub const BOX_FLOOR: f64 = 1e-13;
    /// Residual target for island solving.
    pub const ISLAND_RESIDUAL: f64 = 1e-8;
    /// Iteration cap for niceness checks on interval endpoints.
    pub const NICE_CAP: usize = 100_000;
    /// Iteration cap for transfer-map orbits.
    pub const TRANSFER_CAP: usize = 1_000_000;
    /// Orbit points closer than this to their start are declared periodic.
    pub const PERIODIC_RETURN: f64 = 1e-10;
}

pub type Interval64 = diffeo::Interval<f64>;
pub type PureMap64 = diffeo::PureMap<f64>;
pub type GridDiffeo64 = diffeo::GridDiffeo<f64>;
pub type Decomposition64 = decomp::Decomposition<f64>;
pub type LorenzMap64 = lorenz::LorenzMap<f64>;
pub type ReturnStructure64 = renorm::ReturnStructure<f64>;
pub type Slice64 = param::Slice<f64>;
