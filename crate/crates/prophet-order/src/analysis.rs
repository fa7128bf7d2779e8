//! Closed-form machinery behind the scheme guarantees.
//!
//! The well-definedness of an arrival-time scheme at competitiveness `gamma`
//! reduces, after a change of variables onto the leave-one-out exceedance
//! axis `x`, to bounding
//!
//! ```text
//! G_hat(0, gamma) = int_0^1 gamma / ( g_hat(x) * exp(gamma * int_0^x p~/g_hat) ) dx
//! ```
//!
//! by 1, where `p~` is the item's survival seen through that change of
//! variables and `g_hat(x) = gamma*(-(1-x)ln(1-x)*(1-p~(x)) - x) + 1` is a
//! certified lower bound on the scheme's normalizer. Everything in this
//! module is a function of `gamma` and scalar probes: the auxiliary
//! functions `H`, `K`, `M`, their crossing points `beta` and the `gamma`
//! point, the envelope `mu` and the comparison kernels `Y`, `W`, the
//! certified numeric bounds that rule out two simultaneously troublesome
//! items, and the wrap-up bound showing the special item's arrival law stays
//! sub-probability.

use serde::Serialize;
use thiserror::Error;

use crate::distributions::{threshold_tau_excluding, DistributionError, Instance};
use crate::numerics::{bisect, integrate, Bisection, NoSignChange};
use crate::scheme::GAMMA_STAR;
use crate::tolerances::{
    ALPHA_QUAD_TOL, ALPHA_XTOL, INTEGRAND_EDGE, QUAD_TOL, ROOT_XTOL,
};

/// Second competitiveness level at which the certified bounds are evaluated;
/// slightly above the worst `gamma' = gamma*/(1 - gamma* mu(c))` the wrap-up
/// bound induces for non-special items.
pub const GAMMA_PRIME: f64 = 0.7276;

/// Certified bracket for `beta` at `gamma = 0.7258`.
pub const BETA_BRACKET_STAR: (f64, f64) = (0.7879, 0.7880);
/// Certified bracket for the `gamma` point at `gamma = 0.7258`.
pub const GAMMA_POINT_BRACKET_STAR: (f64, f64) = (0.7893, 0.7894);
/// Certified bracket for `beta` at `gamma = 0.7276`.
pub const BETA_BRACKET_PRIME: (f64, f64) = (0.7850, 0.7851);
/// Certified bracket for the `gamma` point at `gamma = 0.7276`.
pub const GAMMA_POINT_BRACKET_PRIME: (f64, f64) = (0.7900, 0.7901);

/// Cap on `H - M` at the `gamma` point for `gamma = 0.7258`.
pub const HM_CAP_STAR: f64 = 0.00163;
/// Cap on `H - M` at the `gamma` point for `gamma = 0.7276`.
pub const HM_CAP_PRIME: f64 = 0.00555;
/// Cap on `gamma (1 - beta) - H(beta) (1 - gamma beta)` for `gamma = 0.7258`.
pub const BETA_MARGIN_CAP_STAR: f64 = 0.00068;
/// Cap on `gamma (1 - beta) - H(beta) (1 - gamma beta)` for `gamma = 0.7276`.
pub const BETA_MARGIN_CAP_PRIME: f64 = 0.00237;

#[derive(Debug, Error)]
pub enum AnalysisError {
    /// A root bracket failed to certify a sign change.
    #[error("bracket failure: {0}")]
    Bracket(#[from] NoSignChange),

    /// A scalar argument fell outside a function's domain.
    #[error("out of domain: {0}")]
    Domain(String),

    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

// ---------------------------------------------------------------------------
// Auxiliary functions
// ---------------------------------------------------------------------------

/// `-(1 - z) ln(1 - z) - z`, evaluated safely at `z = 1`.
pub(crate) fn phi(z: f64) -> f64 {
    let u = 1.0 - z;
    if u <= 0.0 {
        -z
    } else {
        -u * u.ln() - z
    }
}

/// `-(1 - z) ln(1 - z)`, evaluated safely at `z = 1`.
fn neg_log_term(z: f64) -> f64 {
    let u = 1.0 - z;
    if u <= 0.0 {
        0.0
    } else {
        -u * u.ln()
    }
}

/// Lower-bound normalizer `g_hat` at exceedance `z` with survival probe `p`.
pub(crate) fn hat_g(z: f64, p: f64, gamma: f64) -> f64 {
    gamma * (neg_log_term(z) * (1.0 - p) - z) + 1.0
}

/// `H(z) = gamma * (-(1-z) ln(1-z)) / (gamma * phi(z) + 1)`: the hazard the
/// scheme spends at exceedance level `z` when the probed item never exceeds.
pub fn aux_h(z: f64, gamma: f64) -> f64 {
    gamma * neg_log_term(z) / (gamma * phi(z) + 1.0)
}

/// `K(z) = gamma (1 - z) / (1 - gamma z)`: the tail mass of the arrival law
/// above `z` when the probed item always exceeds.
pub fn aux_k(z: f64, gamma: f64) -> f64 {
    gamma * (1.0 - z) / (1.0 - gamma * z)
}

/// `M(z) = 1 - int_0^z gamma / (gamma phi(x) + 1) dx`: one minus the head
/// mass of the arrival law below `z` when the probed item never exceeds.
pub fn aux_m(z: f64, gamma: f64) -> f64 {
    1.0 - integrate(|x| gamma / (gamma * phi(x) + 1.0), 0.0, z, QUAD_TOL)
}

// ---------------------------------------------------------------------------
// Crossing points and per-gamma constants
// ---------------------------------------------------------------------------

/// Root of `H = K` on `(1 - 1/e, 1)`: the exceedance level where the
/// always-exceeding and never-exceeding tails balance. Unique because the
/// crossing satisfies the strictly increasing closed form
/// `gamma = (ln(1-z) + 1) / (ln(1-z) + z)`.
pub fn find_gamma_point(gamma: f64) -> Result<Bisection, AnalysisError> {
    check_gamma(gamma)?;
    let lo = 1.0 - (-1.0f64).exp();
    let hi = 1.0 - INTEGRAND_EDGE;
    Ok(bisect(|z| aux_h(z, gamma) - aux_k(z, gamma), lo, hi, ROOT_XTOL)?)
}

/// First root of `M = H` on `[0, gamma point]`. `M` strictly decreases and
/// `H` strictly increases there, so the crossing is unique; it only exists
/// when `H` exceeds `M` at the `gamma` point, i.e. above the
/// single-threshold scheme's critical competitiveness.
pub fn find_beta(gamma: f64) -> Result<Bisection, AnalysisError> {
    let gp = find_gamma_point(gamma)?;
    Ok(bisect(|z| aux_m(z, gamma) - aux_h(z, gamma), 0.0, gp.root, ROOT_XTOL)?)
}

/// The per-`gamma` scalar constants every certified bound is phrased in.
#[derive(Debug, Clone, Serialize)]
pub struct GammaConstants {
    pub gamma: f64,
    /// Root of `H = K`.
    pub gamma_point: f64,
    pub gamma_point_bracket: (f64, f64),
    /// First root of `M = H`; strictly below [`Self::gamma_point`].
    pub beta: f64,
    pub beta_bracket: (f64, f64),
    /// `H - M` at the `gamma` point; positive above the single-threshold
    /// scheme's critical competitiveness.
    pub hm_gap: f64,
}

impl GammaConstants {
    pub fn compute(gamma: f64) -> Result<Self, AnalysisError> {
        let gp = find_gamma_point(gamma)?;
        let beta = find_beta(gamma)?;
        let hm_gap = aux_h(gp.root, gamma) - aux_m(gp.root, gamma);
        Ok(GammaConstants {
            gamma,
            gamma_point: gp.root,
            gamma_point_bracket: gp.bracket,
            beta: beta.root,
            beta_bracket: beta.bracket,
            hm_gap,
        })
    }
}

fn check_gamma(gamma: f64) -> Result<(), AnalysisError> {
    if !(0.0 < gamma && gamma < 1.0) {
        return Err(AnalysisError::Domain(format!("gamma = {gamma} must lie in (0, 1)")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Single-threshold scheme constants
// ---------------------------------------------------------------------------

/// Constants of the single-threshold scheme: the worst-case support bottom
/// `alpha` of its hard instance and the matching competitiveness.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PTConstants {
    pub alpha: f64,
    pub gamma_pt: f64,
}

/// Solve the defining equation
///
/// ```text
/// int_alpha^1 (ln a + 1) / ((ln a + 1)(-x ln x + x) - a) dx + 1 / ln a = 0
/// ```
///
/// by bisection on `alpha` in `(0, 1/e)` with nested quadrature, then read
/// off `gamma_pt = (ln a + 1) / (ln a + 1 - a)`. The equation restates
/// `M = K` at the triple point `z = 1 - alpha` where `M`, `H`, and `K` all
/// meet; tests cross-check against that formulation directly.
pub fn compute_pt_constants() -> Result<PTConstants, AnalysisError> {
    let defect = |alpha: f64| {
        let l = alpha.ln() + 1.0;
        let integral = integrate(
            |x| {
                let inner = if x <= 0.0 { 0.0 } else { -x * x.ln() + x };
                l / (l * inner - alpha)
            },
            alpha,
            1.0,
            ALPHA_QUAD_TOL,
        );
        integral + 1.0 / alpha.ln()
    };
    let root = bisect(defect, 0.05, 0.36, ALPHA_XTOL)?;
    let alpha = root.root;
    let l = alpha.ln() + 1.0;
    Ok(PTConstants { alpha, gamma_pt: l / (l - alpha) })
}

/// The classic iid prophet constant: the `gamma ~ 0.745` solving
/// `int_0^1 dy / (y (1 - ln y) + 1/gamma - 1) = 1`.
pub fn iid_prophet_constant() -> Result<f64, AnalysisError> {
    let mass = |gamma: f64| {
        integrate(
            |y| {
                let denom = if y <= 0.0 { 0.0 } else { y * (1.0 - y.ln()) };
                1.0 / (denom + 1.0 / gamma - 1.0)
            },
            0.0,
            1.0,
            QUAD_TOL,
        ) - 1.0
    };
    Ok(bisect(mass, 0.6, 0.9, ROOT_XTOL)?.root)
}

// ---------------------------------------------------------------------------
// Envelope and comparison kernels
// ---------------------------------------------------------------------------

/// Envelope `mu(x)` bounding the prefix mass `int_0^x p~` of a weakly
/// adverse item:
/// `mu(x) = hm_gap * (gamma phi(x) + 1) / (gamma (M(x) - H(x)))`
/// on `[0, beta)`.
pub fn mu_fn(gc: &GammaConstants, x: f64) -> Result<f64, AnalysisError> {
    if !(0.0..1.0).contains(&x) || x >= gc.beta {
        return Err(AnalysisError::Domain(format!(
            "mu argument {x} must lie in [0, beta = {})",
            gc.beta
        )));
    }
    let gamma = gc.gamma;
    let slack = aux_m(x, gamma) - aux_h(x, gamma);
    Ok(gc.hm_gap * (gamma * phi(x) + 1.0) / (gamma * slack))
}

fn y_raw(gamma: f64, z: f64, p: f64) -> f64 {
    let k = aux_k(z, gamma);
    let tail = 1.0 - gamma * z;
    (gamma * (1.0 - k) / tail - gamma * (1.0 - p * k) / hat_g(z, p, gamma)) * tail
}

fn w_raw(gamma: f64, z: f64, p: f64) -> f64 {
    let m = aux_m(z, gamma);
    gamma / (gamma * phi(z) + 1.0) - gamma * (1.0 - p * m) / hat_g(z, p, gamma)
}

/// Tail comparison kernel `Y(z, p)` on `z in [gamma point, 1]`,
/// `p in [0, 1]`: the arrival-density deficit at exceedance `z` of an item
/// whose survival there is `p`, relative to the always-exceeding profile.
/// Non-negative, zero at `p = 1`, non-increasing in `p`.
pub fn y_fn(gc: &GammaConstants, z: f64, p: f64) -> Result<f64, AnalysisError> {
    if !(gc.gamma_point..=1.0).contains(&z) {
        return Err(AnalysisError::Domain(format!(
            "Y argument z = {z} must lie in [gamma point = {}, 1]",
            gc.gamma_point
        )));
    }
    check_unit(p, "Y survival probe")?;
    Ok(y_raw(gc.gamma, z, p))
}

/// Head comparison kernel `W(z, p)` on `z in [0, beta]`, `p in [0, 1]`: the
/// arrival-density surplus at exceedance `z` of an item whose survival there
/// is `p`, relative to the never-exceeding profile. Non-negative, zero at
/// `p = 0`, non-decreasing in `p`.
pub fn w_fn(gc: &GammaConstants, z: f64, p: f64) -> Result<f64, AnalysisError> {
    if !(0.0..=gc.beta).contains(&z) {
        return Err(AnalysisError::Domain(format!(
            "W argument z = {z} must lie in [0, beta = {}]",
            gc.beta
        )));
    }
    check_unit(p, "W survival probe")?;
    Ok(w_raw(gc.gamma, z, p))
}

fn check_unit(p: f64, what: &str) -> Result<(), AnalysisError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AnalysisError::Domain(format!("{what} {p} must lie in [0, 1]")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// x-space well-definedness integral
// ---------------------------------------------------------------------------

/// Default grid resolution for [`g_hat_integral`].
pub const G_HAT_RESOLUTION: usize = 8193;

/// `G_hat(0, gamma)`: total arrival-law mass an item with survival profile
/// `ptilde` would need under the certified lower-bound normalizer. The item
/// is weakly adverse at `gamma` exactly when this exceeds 1.
///
/// Trapezoid accumulation on a uniform exceedance grid capped at
/// `1 - 1e-9`, with the capped tail added back analytically.
pub fn g_hat_integral(ptilde: impl Fn(f64) -> f64, gamma: f64, resolution: usize) -> f64 {
    assert!(resolution >= 3, "needs at least 3 nodes");
    let xmax = 1.0 - INTEGRAND_EDGE;
    let h = xmax / (resolution - 1) as f64;
    let mut total = 0.0;
    let mut inner = 0.0;
    let mut prev_x = 0.0;
    let mut prev_p = ptilde(0.0);
    let mut prev_g = hat_g(0.0, prev_p, gamma);
    let mut prev_out = gamma / (prev_g * (gamma * inner).exp());
    for k in 1..resolution {
        let x = h * k as f64;
        let p = ptilde(x);
        let g = hat_g(x, p, gamma);
        inner += 0.5 * (prev_p / prev_g + p / g) * (x - prev_x);
        let out = gamma / (g * (gamma * inner).exp());
        total += 0.5 * (prev_out + out) * (x - prev_x);
        prev_x = x;
        prev_p = p;
        prev_g = g;
        prev_out = out;
    }
    total + prev_out * (1.0 - xmax)
}

// ---------------------------------------------------------------------------
// Certified bounds
// ---------------------------------------------------------------------------

struct Probe {
    lo: f64,
    hi: f64,
    p: f64,
    reference: f64,
    rel_tol: f64,
}

const Y_PROBE_STAR: Probe =
    Probe { lo: 0.7894, hi: 0.9, p: 0.9, reference: 0.000693, rel_tol: 0.02 };
const W_PROBE_STAR: Probe =
    Probe { lo: 0.67, hi: 0.7879, p: 0.2, reference: 0.00165, rel_tol: 0.03 };
const Y_PROBE_PRIME: Probe =
    Probe { lo: 0.7901, hi: 0.947, p: 0.811, reference: 0.002384, rel_tol: 0.02 };
const W_PROBE_PRIME: Probe =
    Probe { lo: 0.58, hi: 0.7850, p: 0.3763, reference: 0.0096, rel_tol: 0.05 };

/// One evaluated kernel integral together with the value it must exceed.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeIntegral {
    pub lo: f64,
    pub hi: f64,
    pub survival_probe: f64,
    pub value: f64,
    pub reference: f64,
    pub rel_tol: f64,
    pub must_exceed: f64,
    pub matches_reference: bool,
    pub exceeds: bool,
}

/// The certified constants and kernel integrals at one `gamma`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundSet {
    pub constants: GammaConstants,
    pub gamma_point_bracket_expected: (f64, f64),
    pub gamma_point_in_bracket: bool,
    pub beta_bracket_expected: (f64, f64),
    pub beta_in_bracket: bool,
    /// `H - M` at the `gamma` point; must stay below `hm_cap`.
    pub hm_gap: f64,
    pub hm_cap: f64,
    pub hm_within_cap: bool,
    /// `gamma (1 - beta) - H(beta)(1 - gamma beta)`; must stay below
    /// `beta_margin_cap`.
    pub beta_margin: f64,
    pub beta_margin_cap: f64,
    pub beta_margin_within_cap: bool,
    /// Tail kernel integral exceeding `beta_margin_cap`: certifies that a
    /// weakly adverse item's survival cannot be large deep in the tail.
    pub y: ProbeIntegral,
    /// Head kernel integral exceeding `hm_cap`: certifies that a weakly
    /// adverse item's survival cannot be small early on.
    pub w: ProbeIntegral,
}

impl BoundSet {
    pub fn pass(&self) -> bool {
        self.gamma_point_in_bracket
            && self.beta_in_bracket
            && self.hm_within_cap
            && self.beta_margin_within_cap
            && self.y.matches_reference
            && self.y.exceeds
            && self.w.matches_reference
            && self.w.exceeds
    }
}

/// The full certified-bounds report at the two pinned competitiveness
/// levels 0.7258 and 0.7276.
#[derive(Debug, Clone, Serialize)]
pub struct CertifiedBounds {
    pub primary: BoundSet,
    pub secondary: BoundSet,
}

impl CertifiedBounds {
    pub fn pass(&self) -> bool {
        self.primary.pass() && self.secondary.pass()
    }
}

fn probe_integral(
    probe: &Probe,
    kernel: impl Fn(f64) -> f64,
    must_exceed: f64,
) -> ProbeIntegral {
    let value = integrate(kernel, probe.lo, probe.hi, QUAD_TOL);
    ProbeIntegral {
        lo: probe.lo,
        hi: probe.hi,
        survival_probe: probe.p,
        value,
        reference: probe.reference,
        rel_tol: probe.rel_tol,
        must_exceed,
        matches_reference: (value - probe.reference).abs()
            <= probe.rel_tol * probe.reference.abs(),
        exceeds: value > must_exceed,
    }
}

fn bound_set(
    gamma: f64,
    gp_bracket: (f64, f64),
    beta_bracket: (f64, f64),
    hm_cap: f64,
    beta_margin_cap: f64,
    y_probe: &Probe,
    w_probe: &Probe,
) -> Result<BoundSet, AnalysisError> {
    let constants = GammaConstants::compute(gamma)?;
    let beta = constants.beta;
    let beta_margin = gamma * (1.0 - beta) - aux_h(beta, gamma) * (1.0 - gamma * beta);
    let y = probe_integral(y_probe, |z| y_raw(gamma, z, y_probe.p), beta_margin_cap);
    let w = probe_integral(w_probe, |z| w_raw(gamma, z, w_probe.p), hm_cap);
    Ok(BoundSet {
        gamma_point_in_bracket: (gp_bracket.0..=gp_bracket.1).contains(&constants.gamma_point),
        gamma_point_bracket_expected: gp_bracket,
        beta_in_bracket: (beta_bracket.0..=beta_bracket.1).contains(&constants.beta),
        beta_bracket_expected: beta_bracket,
        hm_gap: constants.hm_gap,
        hm_cap,
        hm_within_cap: constants.hm_gap < hm_cap,
        beta_margin,
        beta_margin_cap,
        beta_margin_within_cap: beta_margin < beta_margin_cap,
        y,
        w,
        constants,
    })
}

/// Evaluate every certified numeric bound at the pinned competitiveness
/// levels: the `beta` and `gamma`-point brackets, the `H - M` gap and the
/// `beta` margin with their caps, and the four kernel integrals that rule
/// out two simultaneously weakly adverse items.
pub fn certified_bounds() -> Result<CertifiedBounds, AnalysisError> {
    Ok(CertifiedBounds {
        primary: bound_set(
            GAMMA_STAR,
            GAMMA_POINT_BRACKET_STAR,
            BETA_BRACKET_STAR,
            HM_CAP_STAR,
            BETA_MARGIN_CAP_STAR,
            &Y_PROBE_STAR,
            &W_PROBE_STAR,
        )?,
        secondary: bound_set(
            GAMMA_PRIME,
            GAMMA_POINT_BRACKET_PRIME,
            BETA_BRACKET_PRIME,
            HM_CAP_PRIME,
            BETA_MARGIN_CAP_PRIME,
            &Y_PROBE_PRIME,
            &W_PROBE_PRIME,
        )?,
    })
}

// ---------------------------------------------------------------------------
// Wrap-up bound
// ---------------------------------------------------------------------------

/// Upper bound on the special item's arrival-law mass under the per-item
/// scheme, in the small-`epsilon` limit.
#[derive(Debug, Clone, Serialize)]
pub struct WrapupBound {
    pub gamma: f64,
    pub c: f64,
    /// `K(gamma point) + M(c) - M(gamma point) + int_0^c gamma/(1 - gamma mu)`.
    pub bound: f64,
    pub sub_probability: bool,
    /// `gamma / (1 - gamma mu(c))`: the level at which non-special items
    /// must fail to be weakly adverse. Stays below [`GAMMA_PRIME`].
    pub implied_gamma_prime: f64,
}

/// Evaluate the wrap-up bound at competitiveness `gamma` and head cutoff
/// `c`. Requires `c < beta` and `c < 1 - 1/e`.
pub fn wrapup_bound(gamma: f64, c: f64) -> Result<WrapupBound, AnalysisError> {
    let gc = GammaConstants::compute(gamma)?;
    let e_inv = (-1.0f64).exp();
    if !(0.0 < c && c < gc.beta && c < 1.0 - e_inv) {
        return Err(AnalysisError::Domain(format!(
            "cutoff c = {c} must lie in (0, min(beta = {}, 1 - 1/e))",
            gc.beta
        )));
    }
    let mu_c = mu_fn(&gc, c)?;
    if gamma * mu_c >= 1.0 {
        return Err(AnalysisError::Domain(format!(
            "1 - gamma mu(c) = {} is not positive",
            1.0 - gamma * mu_c
        )));
    }
    let head = integrate(
        |x| {
            let mu = gc.hm_gap * (gamma * phi(x) + 1.0)
                / (gamma * (aux_m(x, gamma) - aux_h(x, gamma)));
            gamma / (1.0 - gamma * mu)
        },
        0.0,
        c,
        QUAD_TOL,
    );
    let bound = aux_k(gc.gamma_point, gamma) + aux_m(c, gamma) - aux_m(gc.gamma_point, gamma)
        + head;
    Ok(WrapupBound {
        gamma,
        c,
        bound,
        sub_probability: bound < 1.0,
        implied_gamma_prime: gamma / (1.0 - gamma * mu_c),
    })
}

// ---------------------------------------------------------------------------
// Property checks for weakly adverse items
// ---------------------------------------------------------------------------

/// Which structural bound a probe exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyKind {
    /// Prefix mass `int_0^x p~ <= mu(x)` for `x < min(beta, 1 - 1/e)`.
    PrefixMassBound,
    /// Tail kernel `int_{gamma point}^x Y(z, p~(x)) dz` stays below the
    /// `beta` margin for `x > gamma point`.
    TailBound,
    /// Head kernel `int_x^beta W(z, p~(x)) dz` stays below the `H - M` gap
    /// for `x < beta`.
    HeadBound,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyProbe {
    pub x: f64,
    pub kind: PropertyKind,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

/// Structural-bound evaluations for one item of an instance.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub gamma: f64,
    pub item: usize,
    /// `G_hat(0, gamma)` for the item; the structural bounds are only
    /// guaranteed when this exceeds 1.
    pub ghat: f64,
    pub weakly_adverse: bool,
    pub probes: Vec<PropertyProbe>,
}

/// Evaluate the weakly-adverse structural bounds for `item` at the given
/// probe points on the leave-one-out exceedance axis.
pub fn property_checks(
    inst: &Instance,
    item: usize,
    gamma: f64,
    probes: &[f64],
) -> Result<PropertyReport, AnalysisError> {
    let gc = GammaConstants::compute(gamma)?;
    let ptilde = tabulate_ptilde(inst, item, G_HAT_RESOLUTION)?;
    let ghat = g_hat_integral(|x| ptilde.eval(x), gamma, G_HAT_RESOLUTION);
    let e_inv = (-1.0f64).exp();
    let mut out = Vec::new();
    for &x in probes {
        check_unit(x, "probe point")?;
        let p_at_x = ptilde.eval(x);
        if x < gc.beta && x < 1.0 - e_inv {
            let lhs = ptilde.prefix(x);
            let rhs = mu_fn(&gc, x)?;
            out.push(PropertyProbe {
                x,
                kind: PropertyKind::PrefixMassBound,
                lhs,
                rhs,
                satisfied: lhs <= rhs,
            });
        }
        if x > gc.gamma_point {
            let lhs = integrate(|z| y_raw(gamma, z, p_at_x), gc.gamma_point, x, QUAD_TOL);
            let rhs = gamma * (1.0 - gc.beta)
                - aux_h(gc.beta, gamma) * (1.0 - gamma * gc.beta);
            out.push(PropertyProbe {
                x,
                kind: PropertyKind::TailBound,
                lhs,
                rhs,
                satisfied: lhs < rhs,
            });
        }
        if x < gc.beta {
            let lhs = integrate(|z| w_raw(gamma, z, p_at_x), x, gc.beta, QUAD_TOL);
            let rhs = gc.hm_gap;
            out.push(PropertyProbe {
                x,
                kind: PropertyKind::HeadBound,
                lhs,
                rhs,
                satisfied: lhs < rhs,
            });
        }
    }
    Ok(PropertyReport {
        gamma,
        item,
        ghat,
        weakly_adverse: ghat > 1.0,
        probes: out,
    })
}

/// The survival profile `p~(x)`: the item's survival at the value where the
/// other items' max-exceedance equals `x`, tabulated for interpolation.
pub(crate) struct PtildeTable {
    xs: Vec<f64>,
    ps: Vec<f64>,
    prefix: Vec<f64>,
}

impl PtildeTable {
    pub(crate) fn eval(&self, x: f64) -> f64 {
        crate::numerics::interp(&self.xs, &self.ps, x)
    }

    /// `int_0^x p~(y) dy` by trapezoid prefix plus a partial cell.
    pub(crate) fn prefix(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        let n = self.xs.len();
        if x >= self.xs[n - 1] {
            return self.prefix[n - 1];
        }
        let hi = self.xs.partition_point(|&v| v <= x);
        let lo = hi - 1;
        let p_at_x = self.eval(x);
        self.prefix[lo] + 0.5 * (self.ps[lo] + p_at_x) * (x - self.xs[lo])
    }
}

/// Tabulate `p~` for `item` on a uniform exceedance grid. Levels where the
/// leave-one-out threshold is non-invertible fall back to the neighboring
/// node (the profile is monotone, so the error is one grid cell).
pub(crate) fn tabulate_ptilde(
    inst: &Instance,
    item: usize,
    resolution: usize,
) -> Result<PtildeTable, AnalysisError> {
    let xmax = 1.0 - INTEGRAND_EDGE;
    let h = xmax / (resolution - 1) as f64;
    let mut xs = Vec::with_capacity(resolution);
    let mut ps = Vec::with_capacity(resolution);
    for k in 0..resolution {
        let x = h * k as f64;
        match threshold_tau_excluding(inst, x, Some(item)) {
            Ok(y) => {
                xs.push(x);
                ps.push(inst.survival(item, y));
            }
            Err(DistributionError::NonInvertible { .. }) if !ps.is_empty() => {
                xs.push(x);
                let last = *ps.last().expect("non-empty");
                ps.push(last);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let mut prefix = Vec::with_capacity(resolution);
    let mut acc = 0.0;
    prefix.push(0.0);
    for k in 1..xs.len() {
        acc += 0.5 * (ps[k - 1] + ps[k]) * (xs[k] - xs[k - 1]);
        prefix.push(acc);
    }
    Ok(PtildeTable { xs, ps, prefix })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aux_functions_hit_closed_form_endpoints() {
        for gamma in [0.5, 0.7258, 0.7276, 0.9] {
            assert_eq!(aux_h(0.0, gamma), 0.0);
            assert!((aux_k(0.0, gamma) - gamma).abs() < 1e-15);
            assert!(aux_k(1.0, gamma).abs() < 1e-15);
            assert!((aux_m(0.0, gamma) - 1.0).abs() < 1e-15);
            assert!(aux_h(1.0 - 1e-12, gamma) < 1e-9, "H vanishes at 1");
        }
    }

    #[test]
    fn m_is_strictly_decreasing() {
        let gamma = 0.7258;
        let mut prev = aux_m(0.0, gamma);
        for k in 1..=20 {
            let z = k as f64 / 20.0;
            let m = aux_m(z, gamma);
            assert!(m < prev, "M must decrease, failed at z = {z}");
            prev = m;
        }
    }

    #[test]
    fn gamma_point_satisfies_closed_form() {
        for gamma in [GAMMA_STAR, GAMMA_PRIME] {
            let gp = find_gamma_point(gamma).expect("bracket certifies");
            let z = gp.root;
            let implied = ((1.0 - z).ln() + 1.0) / ((1.0 - z).ln() + z);
            assert!(
                (implied - gamma).abs() < 1e-9,
                "closed form at gamma = {gamma}: implied {implied}"
            );
            assert!((aux_h(z, gamma) - aux_k(z, gamma)).abs() < 1e-11);
        }
    }

    #[test]
    fn h_peaks_at_the_gamma_point() {
        let gamma = GAMMA_STAR;
        let z = find_gamma_point(gamma).expect("bracket certifies").root;
        let d = 1e-4;
        assert!(aux_h(z - d, gamma) < aux_h(z, gamma) + 1e-12);
        assert!(aux_h(z + d, gamma) < aux_h(z, gamma) + 1e-12);
    }

    #[test]
    fn beta_crosses_m_and_h_below_the_gamma_point() {
        for gamma in [GAMMA_STAR, GAMMA_PRIME] {
            let beta = find_beta(gamma).expect("crossing exists").root;
            let gp = find_gamma_point(gamma).expect("bracket certifies").root;
            assert!(beta < gp, "beta {beta} must precede gamma point {gp}");
            assert!((aux_m(beta, gamma) - aux_h(beta, gamma)).abs() < 1e-10);
        }
    }

    #[test]
    fn beta_does_not_exist_below_the_critical_competitiveness() {
        assert!(matches!(find_beta(0.70), Err(AnalysisError::Bracket(_))));
    }

    #[test]
    fn single_threshold_constants_match_quoted_values() {
        let pt = compute_pt_constants().expect("defining equation has a root");
        assert!((pt.alpha - 0.2109).abs() < 2e-4, "alpha = {}", pt.alpha);
        assert!((pt.gamma_pt - 0.7251).abs() < 1e-4, "gamma_pt = {}", pt.gamma_pt);
    }

    #[test]
    fn single_threshold_constants_match_triple_point_oracle() {
        // Independent route: the critical competitiveness is where the
        // H-M gap at the gamma point changes sign (M = H = K triple point),
        // and there alpha = 1 - gamma point.
        let gap = |gamma: f64| {
            let z = find_gamma_point(gamma).expect("bracket certifies").root;
            aux_h(z, gamma) - aux_m(z, gamma)
        };
        let root = bisect(gap, 0.70, 0.74, 1e-10).expect("gap changes sign");
        let gamma_oracle = root.root;
        let alpha_oracle = 1.0 - find_gamma_point(gamma_oracle).expect("bracket").root;
        let pt = compute_pt_constants().expect("defining equation has a root");
        assert!(
            (pt.gamma_pt - gamma_oracle).abs() < 1e-8,
            "gamma_pt {} vs oracle {gamma_oracle}",
            pt.gamma_pt
        );
        assert!(
            (pt.alpha - alpha_oracle).abs() < 1e-6,
            "alpha {} vs oracle {alpha_oracle}",
            pt.alpha
        );
    }

    #[test]
    fn iid_constant_is_near_0745() {
        let c = iid_prophet_constant().expect("mass crosses 1");
        assert!((c - 0.745).abs() < 1e-3, "got {c}");
    }

    #[test]
    fn kernels_vanish_at_their_degenerate_probe() {
        let gc = GammaConstants::compute(GAMMA_STAR).expect("constants");
        for k in 0..10 {
            let z_tail = gc.gamma_point + (1.0 - gc.gamma_point) * k as f64 / 10.0;
            let y = y_fn(&gc, z_tail, 1.0).expect("in domain");
            assert!(y.abs() < 1e-12, "Y(z, 1) = {y} at z = {z_tail}");
            let z_head = gc.beta * k as f64 / 10.0;
            let w = w_fn(&gc, z_head, 0.0).expect("in domain");
            assert!(w.abs() < 1e-12, "W(z, 0) = {w} at z = {z_head}");
        }
    }

    #[test]
    fn kernels_are_monotone_in_the_survival_probe() {
        let gc = GammaConstants::compute(GAMMA_STAR).expect("constants");
        let z_tail = 0.5 * (gc.gamma_point + 1.0);
        let z_head = 0.5 * gc.beta;
        let mut prev_y = f64::INFINITY;
        let mut prev_w = f64::NEG_INFINITY;
        for k in 0..=10 {
            let p = k as f64 / 10.0;
            let y = y_fn(&gc, z_tail, p).expect("in domain");
            let w = w_fn(&gc, z_head, p).expect("in domain");
            assert!(y <= prev_y + 1e-12, "Y must not increase in p");
            assert!(w >= prev_w - 1e-12, "W must not decrease in p");
            assert!(y >= -1e-12 && w >= -1e-12, "kernels stay non-negative");
            prev_y = y;
            prev_w = w;
        }
    }

    #[test]
    fn kernel_domains_are_enforced() {
        let gc = GammaConstants::compute(GAMMA_STAR).expect("constants");
        assert!(y_fn(&gc, 0.5, 0.5).is_err(), "z below the gamma point");
        assert!(w_fn(&gc, 0.9, 0.5).is_err(), "z above beta");
        assert!(mu_fn(&gc, 0.95).is_err(), "x above beta");
        assert!(y_fn(&gc, 0.8, 1.5).is_err(), "p outside [0, 1]");
    }

    #[test]
    fn certified_bounds_all_pass() {
        let cb = certified_bounds().expect("constants computable");
        assert!(cb.primary.pass(), "primary bound set: {:#?}", cb.primary);
        assert!(cb.secondary.pass(), "secondary bound set: {:#?}", cb.secondary);
    }

    #[test]
    fn g_hat_integral_matches_step_profile_closed_form() {
        // For a survival profile that steps from 0 to 1 at w, the integral
        // collapses to 1 - M(w) + K(w).
        let gamma = 0.7;
        for w in [0.3, 0.5, 0.7891] {
            let got = g_hat_integral(|x| if x > w { 1.0 } else { 0.0 }, gamma, 32769);
            let want = 1.0 - aux_m(w, gamma) + aux_k(w, gamma);
            assert!(
                (got - want).abs() < 2e-4,
                "w = {w}: got {got}, closed form {want}"
            );
        }
    }

    #[test]
    fn g_hat_integral_converges_under_refinement() {
        let gamma = GAMMA_STAR;
        let coarse = g_hat_integral(|x| x, gamma, 4097);
        let fine = g_hat_integral(|x| x, gamma, 16385);
        assert!((coarse - fine).abs() < 1e-6, "coarse {coarse}, fine {fine}");
    }

    #[test]
    fn step_profile_at_the_critical_support_is_borderline() {
        // The hard profile steps at 1 - alpha; at gamma_pt its mass is
        // exactly 1, above it is strictly more.
        let pt = compute_pt_constants().expect("constants");
        let w = 1.0 - pt.alpha;
        let step = |x: f64| if x > w { 1.0 } else { 0.0 };
        let at_critical = g_hat_integral(step, pt.gamma_pt, 32769);
        assert!((at_critical - 1.0).abs() < 5e-4, "got {at_critical}");
        let above = g_hat_integral(step, GAMMA_STAR, 32769);
        assert!(above > 1.0, "mass at 0.7258 must exceed 1, got {above}");
    }

    #[test]
    fn wrapup_bound_is_sub_probability_at_the_pinned_parameters() {
        let wb = wrapup_bound(GAMMA_STAR, 0.28).expect("in domain");
        assert!((wb.bound - 0.9998).abs() < 1e-3, "bound = {}", wb.bound);
        assert!(wb.sub_probability, "bound = {} must stay below 1", wb.bound);
        assert!(
            wb.implied_gamma_prime < GAMMA_PRIME,
            "implied gamma' = {} must stay below {GAMMA_PRIME}",
            wb.implied_gamma_prime
        );
        assert!((wb.implied_gamma_prime - 0.72759).abs() < 5e-5);
    }

    #[test]
    fn wrapup_bound_rejects_out_of_domain_cutoffs() {
        assert!(wrapup_bound(GAMMA_STAR, 0.9).is_err());
        assert!(wrapup_bound(GAMMA_STAR, 0.0).is_err());
    }
}
