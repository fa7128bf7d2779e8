//! Order-selection prophet inequalities over independent items.
//!
//! A gambler inspects `n` independent nonnegative values one at a time and
//! must accept or reject each on sight; the benchmark is the expected maximum.
//! When the gambler also chooses the inspection order, randomized arrival
//! times combined with time-varying acceptance thresholds give strong
//! guarantees. This crate implements that toolkit end to end:
//!
//! - [`distributions`]: value distributions, instances, time grids, and the
//!   level functions (threshold inversion, per-item exceedance curves) that
//!   every scheme is built from.
//! - [`scheme`]: arrival-time constructions. The single-threshold scheme
//!   draws every arrival time from one common law; the two-scheme builder
//!   detects the one problematic item, gives it its own threshold curve, and
//!   certifies a 0.7258 guarantee.
//! - [`analysis`]: the closed-form machinery behind the guarantee. Computes
//!   the scheme constants, the certified auxiliary-function bounds, and the
//!   wrap-up bound showing the per-item arrival laws stay sub-probability.
//! - [`simulator`]: seeded, parallel Monte Carlo estimation of approximate
//!   stochastic dominance, `P[ALG > x] >= gamma * P[MAX > x]`.
//! - [`secretary`]: an upper-bound construction for order-aware
//!   prophet-secretary showing no algorithm beats 0.7254.
//! - [`lp_asd`]: exact linear programs on finite supports connecting
//!   competitiveness to approximate stochastic dominance, with a verified
//!   mixture extraction.
//! - [`cli`]: a thin command-line front end over the library; see the
//!   `examples/` directory for library-first entry points.
//!
//! All numeric tolerances are pinned in [`tolerances`].

pub mod analysis;
pub mod cli;
pub mod distributions;
pub mod lp_asd;
pub mod numerics;
pub mod scheme;
pub mod secretary;
pub mod simulator;
pub mod tolerances;
