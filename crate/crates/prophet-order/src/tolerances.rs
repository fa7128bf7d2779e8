//! Centralized numeric tolerances.
//!
//! Every comparison threshold used by the library lives here so that the
//! guard hierarchy is visible in one place. Routines promise *at most* these
//! errors; most converge well past them.

/// Absolute tolerance on the value axis (threshold inversion, quantiles).
///
/// Bisection on a bounded support reaches machine precision in ~100 steps,
/// so this is a guaranteed bound, not the achieved one.
pub const TOL_VALUE: f64 = 1e-10;

/// Absolute tolerance on the probability axis.
///
/// Exceedance identities such as `(1 - p_i)(1 - q_i) = 1 - t` must hold at
/// every grid node to within this bound.
pub const TOL_PROB: f64 = 1e-9;

/// Half-width at which root brackets for the auxiliary-function crossings
/// (`beta`, the `gamma` point) stop shrinking.
pub const ROOT_XTOL: f64 = 1e-12;

/// Default absolute tolerance for adaptive quadrature of smooth integrands.
pub const QUAD_TOL: f64 = 1e-11;

/// Outer bisection tolerance when solving the single-threshold scheme's
/// defining equation for `alpha`.
pub const ALPHA_XTOL: f64 = 1e-10;

/// Quadrature tolerance for the integral inside that defining equation.
/// Tighter than [`ALPHA_XTOL`] so the outer root is not chasing noise.
pub const ALPHA_QUAD_TOL: f64 = 1e-11;

/// Upper integration limits are capped at `1 - INTEGRAND_EDGE` wherever an
/// integrand contains `ln(1 - x)`. The discarded tail is bounded by
/// `sup|integrand| * INTEGRAND_EDGE`, far below [`QUAD_TOL`].
pub const INTEGRAND_EDGE: f64 = 1e-9;

/// Slack accepted on the total mass of a per-item arrival law: a scheme is
/// well defined when every `int_0^1 f_i(t) dt <= 1 + WELL_DEFINED_SLACK`.
/// Above this the item counts as adverse.
pub const WELL_DEFINED_SLACK: f64 = 1e-6;

/// Extra mass tolerated on the special item's law under the per-item-threshold
/// scheme before construction fails. Overshoot within this margin is clamped
/// into the atom at `t = 1`.
pub const SCHEME_SAFETY_MARGIN: f64 = 1e-3;

/// Node-wise agreement required between the common-threshold densities and
/// the general builder evaluated on the common schedule.
pub const SCHEME_COINCIDENCE_TOL: f64 = 1e-8;

/// Agreement required between the closed-form normalizer `g` and its
/// integral form accumulated on the grid.
pub const G_CROSS_CHECK_TOL: f64 = 1e-5;

/// Largest exceedance increment allowed across one grid cell. Cells where
/// any item's leave-one-out exceedance moves by more than this are split
/// until the quadrature resolves the step.
pub const MAX_CELL_EXCEEDANCE_STEP: f64 = 2e-3;

/// Hard cap on grid nodes produced by adaptive cell splitting.
pub const GRID_NODE_CAP: usize = 200_000;

/// Number of halving passes adaptive cell splitting may take.
pub const GRID_REFINE_PASSES: usize = 16;

/// Strong duality: the primal and dual LP optima must agree to this bound.
pub const LP_DUALITY_TOL: f64 = 1e-9;

/// Most-negative residual tolerated when verifying dominance constraints and
/// mixture feasibility extracted from an LP solution.
pub const LP_RESIDUAL_TOL: f64 = 1e-9;

/// Pivot threshold inside the dense simplex: entries smaller in magnitude
/// are treated as zero.
pub const SIMPLEX_EPS: f64 = 1e-11;

/// Agreement required between the hardness recursion and exhaustive
/// enumeration on brute-forceable cases.
pub const RECURSION_MATCH_TOL: f64 = 1e-12;

/// Default smoothing width for finite supports, as a fraction of the joint
/// support span.
pub const DEFAULT_SMOOTHING_FRACTION: f64 = 1e-6;

/// Default number of uniform time-grid nodes before endpoint refinement.
pub const DEFAULT_GRID_RESOLUTION: usize = 4096;

/// Hard cap on the number of deterministic algorithms the LP enumerator may
/// generate before giving up.
pub const ENUMERATION_CAP: u64 = 100_000;
