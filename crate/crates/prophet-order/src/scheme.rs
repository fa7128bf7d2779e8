//! Arrival-time threshold schemes.
//!
//! Each item draws an arrival time from its own law on `[0, 1]` (possibly
//! with an atom at 1, where it is never accepted), items are inspected in
//! arrival order, and item `i` arriving at `t` is accepted when its value
//! exceeds a threshold curve `tau_i(t)`. With threshold curves `tau_i`,
//! write `pbar_i(t) = P[v_i > tau_i(t)]` and
//! `qbar_i(t) = P[max_{j != i} v_j > tau_i(t)]`. The normalizer
//!
//! ```text
//! gbar(t) = 1 - gamma * sum_i int_0^t pbar_i dqbar_i
//! ```
//!
//! and the arrival densities
//!
//! ```text
//! fbar_i(t) = gamma * qbar_i'(t) / gbar(t) * exp(-gamma * int_0^t qbar_i' pbar_i / gbar)
//! ```
//!
//! deliver `P[ALG > x] = gamma * P[max > x]` for every `x` provided every
//! `int_0^1 fbar_i <= 1` (the leftover mass becomes the atom at 1).
//!
//! The common-threshold scheme uses one `tau` for everyone. When exactly one
//! item makes its law over-full ("adverse"), the two-scheme builder reroutes
//! that item through its own curve chosen so that
//! `qbar_1(t) = h(q_1(t))` for a piecewise-linear reshaping function `h`,
//! which provably restores well-definedness at `gamma = 0.7258`.

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{g_hat_integral, tabulate_ptilde, AnalysisError, G_HAT_RESOLUTION};
use crate::distributions::{
    level_functions, threshold_tau_excluding, DistributionError, Instance, LevelFunctions,
    TimeGrid, ValueDistribution,
};
use crate::tolerances::{
    GRID_NODE_CAP, GRID_REFINE_PASSES, MAX_CELL_EXCEEDANCE_STEP, SCHEME_SAFETY_MARGIN, TOL_PROB,
    WELL_DEFINED_SLACK,
};

/// Competitiveness target of the two-scheme construction.
pub const GAMMA_STAR: f64 = 0.7258;

/// Default head cutoff `c` of the reshaping function.
pub const DEFAULT_C: f64 = 0.28;

/// Default kink parameter `epsilon` of the reshaping function.
pub const DEFAULT_EPSILON: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("invalid scheme parameters: {0}")]
    InvalidParams(String),

    /// The scheme's normalizer or monotonicity assumptions broke down.
    #[error("degenerate scheme: {0}")]
    Degenerate(String),

    /// Neither the common-threshold nor the per-item-threshold construction
    /// produced well-defined arrival laws.
    #[error("both schemes failed: {0}")]
    BothSchemesFailed(String),

    #[error(transparent)]
    Distribution(#[from] DistributionError),

    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Parameters of a scheme build.
#[derive(Debug, Clone, Serialize)]
pub struct SchemeParams {
    /// Competitiveness target.
    pub gamma: f64,
    /// Head cutoff of the reshaping function (Scheme II only).
    pub c: f64,
    /// Kink parameter of the reshaping function (Scheme II only).
    pub epsilon: f64,
    /// Time grid all curves are tabulated on.
    pub grid: TimeGrid,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams {
            gamma: GAMMA_STAR,
            c: DEFAULT_C,
            epsilon: DEFAULT_EPSILON,
            grid: TimeGrid::default(),
        }
    }
}

impl SchemeParams {
    pub fn with_gamma(gamma: f64) -> Self {
        SchemeParams { gamma, ..SchemeParams::default() }
    }

    fn validate(&self) -> Result<(), SchemeError> {
        if !(0.0 < self.gamma && self.gamma < 1.0) {
            return Err(SchemeError::InvalidParams(format!(
                "gamma = {} must lie in (0, 1)",
                self.gamma
            )));
        }
        if !(0.0 < self.epsilon && self.epsilon < self.c && self.c < 1.0) {
            return Err(SchemeError::InvalidParams(format!(
                "need 0 < epsilon < c < 1, got epsilon = {}, c = {}",
                self.epsilon, self.c
            )));
        }
        if self.grid.len() < 3 {
            return Err(SchemeError::InvalidParams("grid needs at least 3 nodes".into()));
        }
        Ok(())
    }
}

/// Which construction a build ended up using.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SchemeId {
    /// Common threshold curve for every item.
    SchemeI,
    /// Per-item curve for one designated item, common curve for the rest.
    SchemeII,
}

// ---------------------------------------------------------------------------
// Threshold schedules
// ---------------------------------------------------------------------------

struct ScheduleSlot {
    tau: Vec<f64>,
    pbar: Vec<f64>,
    qbar: Vec<f64>,
    multiplicity: usize,
}

/// Tabulated threshold curves: one slot per group of identical items, plus
/// an optional dedicated slot for the special item.
pub struct ThresholdSchedule {
    grid: TimeGrid,
    slots: Vec<ScheduleSlot>,
    slot_of_item: Vec<usize>,
    special: Option<usize>,
}

impl ThresholdSchedule {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// True when every item shares one threshold curve.
    pub fn is_common(&self) -> bool {
        self.special.is_none()
    }

    /// The item routed through its own curve, if any.
    pub fn special_item(&self) -> Option<usize> {
        self.special
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn slot_of(&self, item: usize) -> usize {
        self.slot_of_item[item]
    }

    /// Threshold curve for `item` at the grid nodes.
    pub fn tau(&self, item: usize) -> &[f64] {
        &self.slots[self.slot_of_item[item]].tau
    }

    /// `P[v_item > tau_item(t)]` at the grid nodes.
    pub fn pbar(&self, item: usize) -> &[f64] {
        &self.slots[self.slot_of_item[item]].pbar
    }

    /// `P[max_{j != item} v_j > tau_item(t)]` at the grid nodes.
    pub fn qbar(&self, item: usize) -> &[f64] {
        &self.slots[self.slot_of_item[item]].qbar
    }
}

/// The common-threshold schedule induced by an instance's level functions.
pub fn common_schedule(inst: &Instance, lf: &LevelFunctions) -> ThresholdSchedule {
    let n_groups = inst.group_count();
    let mut slots = Vec::with_capacity(n_groups);
    for g in 0..n_groups {
        slots.push(ScheduleSlot {
            tau: lf.tau().to_vec(),
            pbar: lf.p_of_group(g).to_vec(),
            qbar: lf.q_of_group(g).to_vec(),
            multiplicity: inst.group_size(g),
        });
    }
    let slot_of_item = (0..inst.n()).map(|i| inst.group_of(i)).collect();
    ThresholdSchedule { grid: lf.grid().clone(), slots, slot_of_item, special: None }
}

// ---------------------------------------------------------------------------
// Reshaping function
// ---------------------------------------------------------------------------

/// The piecewise-linear reshaping function `h` mapping the common-threshold
/// exceedance of the special item's companions onto the special curve:
/// steep (`(c - eps)/eps`) on `[0, eps)`, nearly flat on `[eps, c)`, and the
/// identity on `[c, 1]`. Strictly increasing with `h(0) = 0`, `h(1) = 1`.
pub fn h_fn(x: f64, c: f64, epsilon: f64) -> f64 {
    debug_assert!(0.0 < epsilon && epsilon < c && c < 1.0);
    let x = x.clamp(0.0, 1.0);
    if x < epsilon {
        (c - epsilon) / epsilon * x
    } else if x < c {
        c + epsilon * (x - c) / (c - epsilon)
    } else {
        x
    }
}

/// Build the per-item-threshold schedule: item `special` gets the curve
/// solving `qbar(t) = h(q_special(t))`, everyone else keeps the common
/// curve.
pub fn scheme_two_schedule(
    inst: &Instance,
    lf: &LevelFunctions,
    params: &SchemeParams,
    special: usize,
) -> Result<ThresholdSchedule, SchemeError> {
    params.validate()?;
    if special >= inst.n() {
        return Err(SchemeError::InvalidParams(format!(
            "special item {special} out of range for {} items",
            inst.n()
        )));
    }
    let mut schedule = common_schedule(inst, lf);
    let nodes = lf.grid().nodes();
    let q_special = lf.q(special);
    let mut tau = Vec::with_capacity(nodes.len());
    let mut pbar = Vec::with_capacity(nodes.len());
    let mut qbar = Vec::with_capacity(nodes.len());
    for (k, &_t) in nodes.iter().enumerate() {
        let target = h_fn(q_special[k], params.c, params.epsilon);
        let y = threshold_tau_excluding(inst, target, Some(special))?;
        let check = crate::distributions::max_exceed_prob(inst, y, Some(special));
        if target > 0.0 && target < 1.0 && (check - target).abs() > TOL_PROB {
            return Err(SchemeError::Degenerate(format!(
                "special curve misses its exceedance target at node {k}: |{check} - {target}|"
            )));
        }
        tau.push(y);
        pbar.push(inst.survival(special, y));
        qbar.push(target);
    }
    let last = pbar.len() - 1;
    if pbar[0] > TOL_PROB || pbar[last] < 1.0 - TOL_PROB {
        return Err(SchemeError::Degenerate(format!(
            "special item's survival must sweep 0 to 1 along its curve, got {} to {}; \
             its support extends beyond the other items' span",
            pbar[0], pbar[last]
        )));
    }
    let group = inst.group_of(special);
    schedule.slots[group].multiplicity -= 1;
    schedule.slots.push(ScheduleSlot { tau, pbar, qbar, multiplicity: 1 });
    schedule.slot_of_item[special] = schedule.slots.len() - 1;
    schedule.special = Some(special);
    Ok(schedule)
}

/// Build a schedule on an adaptively split grid: cells where any item's
/// exceedance curve moves by more than [`MAX_CELL_EXCEEDANCE_STEP`] are
/// halved until all increments resolve.
///
/// Distributions concentrating mass on a narrow band squeeze a macroscopic
/// exceedance sweep of the other items into a sliver of the time axis;
/// without splitting, the cell-wise quadrature would step over it.
pub fn refined_schedule(
    inst: &Instance,
    params: &SchemeParams,
    special: Option<usize>,
) -> Result<(LevelFunctions, ThresholdSchedule), SchemeError> {
    params.validate()?;
    let mut grid = params.grid.clone();
    for _ in 0..GRID_REFINE_PASSES {
        let lf = level_functions(inst, &grid)?;
        let schedule = match special {
            None => common_schedule(inst, &lf),
            Some(item) => scheme_two_schedule(inst, &lf, params, item)?,
        };
        let splits = cells_needing_split(&schedule);
        if splits.is_empty() {
            return Ok((lf, schedule));
        }
        if grid.len() + splits.len() > GRID_NODE_CAP {
            return Err(SchemeError::Degenerate(format!(
                "resolving exceedance steps needs more than {GRID_NODE_CAP} grid nodes"
            )));
        }
        grid = grid.merged_with(&splits);
    }
    Err(SchemeError::Degenerate(format!(
        "exceedance steps still unresolved after {GRID_REFINE_PASSES} splitting passes"
    )))
}

fn cells_needing_split(schedule: &ThresholdSchedule) -> Vec<f64> {
    let nodes = schedule.grid.nodes();
    let mut splits = Vec::new();
    for k in 1..nodes.len() {
        let steep = schedule.slots.iter().any(|slot| {
            slot.multiplicity > 0 && slot.qbar[k] - slot.qbar[k - 1] > MAX_CELL_EXCEEDANCE_STEP
        });
        if steep {
            splits.push(0.5 * (nodes[k - 1] + nodes[k]));
        }
    }
    splits
}

// ---------------------------------------------------------------------------
// Arrival laws
// ---------------------------------------------------------------------------

/// One item's arrival-time law, tabulated on the grid.
#[derive(Debug, Clone, Serialize)]
pub struct ArrivalLaw {
    /// Pointwise density at the grid nodes (central differences; for
    /// reporting and plotting, the cumulative table is authoritative).
    pub density: Vec<f64>,
    /// Cumulative mass at the grid nodes, accumulated cell by cell.
    pub cumulative: Vec<f64>,
    /// Probability of arriving exactly at `t = 1` (never accepted).
    pub atom_at_one: f64,
}

impl ArrivalLaw {
    /// Mass on `[0, 1)` before the atom.
    pub fn continuous_mass(&self) -> f64 {
        *self.cumulative.last().expect("non-empty table")
    }

    /// Draw an arrival time from the law by inverse transform.
    ///
    /// `u` uniform on `[0, 1)`; mass beyond the continuous part (the atom,
    /// plus clamped overshoot) maps to `t = 1`.
    pub fn sample_time(&self, grid: &TimeGrid, u: f64) -> f64 {
        let total = self.continuous_mass();
        if u >= total {
            return 1.0;
        }
        let cum = &self.cumulative;
        let hi = cum.partition_point(|&v| v < u);
        if hi == 0 {
            return 0.0;
        }
        let lo = hi - 1;
        let nodes = grid.nodes();
        let span = cum[hi] - cum[lo];
        if span <= 0.0 {
            return nodes[hi];
        }
        nodes[lo] + (u - cum[lo]) / span * (nodes[hi] - nodes[lo])
    }
}

/// Per-slot outputs of the density builder.
pub struct SlotTables {
    pub law: ArrivalLaw,
    /// `int_0^1 fbar` before any clamping.
    pub integral: f64,
    /// `int_0^t pbar fbar ds` at the grid nodes; enters the product
    /// identity `prod_i (1 - accept_mass_i(t)) = gbar(t)`.
    pub accept_mass: Vec<f64>,
    /// Probability that one item of this slot ends up accepted:
    /// `gamma * int_0^1 pbar dqbar`. The no-stop factor cancels against
    /// the damping inside `fbar`, leaving this closed form.
    pub accept_prob: f64,
}

/// Everything the general density builder produces.
pub struct SchemeTables {
    /// The normalizer `gbar` at the grid nodes (integral form).
    pub gbar: Vec<f64>,
    pub slots: Vec<SlotTables>,
    slot_of_item: Vec<usize>,
    pub multiplicities: Vec<usize>,
}

impl SchemeTables {
    pub fn law(&self, item: usize) -> &ArrivalLaw {
        &self.slots[self.slot_of_item[item]].law
    }

    /// `int_0^1 fbar_item` before clamping.
    pub fn integral(&self, item: usize) -> f64 {
        self.slots[self.slot_of_item[item]].integral
    }

    /// Probability that `item` ends up accepted.
    pub fn accept_prob(&self, item: usize) -> f64 {
        self.slots[self.slot_of_item[item]].accept_prob
    }

    pub fn slot_of(&self, item: usize) -> usize {
        self.slot_of_item[item]
    }
}

/// Build arrival laws for an arbitrary per-item threshold schedule.
///
/// All integrals are accumulated cell-wise against the increments of
/// `qbar` (Stieltjes form), which keeps them exact across kinks in the
/// curves; the pointwise densities use central differences.
pub fn arrival_density_general(
    schedule: &ThresholdSchedule,
    gamma: f64,
) -> Result<SchemeTables, SchemeError> {
    let nodes = schedule.grid.nodes();
    let m = nodes.len();
    let n_slots = schedule.slots.len();
    for slot in &schedule.slots {
        if slot.pbar.len() != m || slot.qbar.len() != m || slot.tau.len() != m {
            return Err(SchemeError::InvalidParams(
                "schedule tables disagree with the grid length".into(),
            ));
        }
    }
    let dq = |slot: &ScheduleSlot, k: usize| -> Result<f64, SchemeError> {
        let d = slot.qbar[k] - slot.qbar[k - 1];
        if d < -1e-9 {
            return Err(SchemeError::Degenerate(format!(
                "qbar decreases by {d:.3e} across node {k}"
            )));
        }
        Ok(d.max(0.0))
    };

    let mut gbar = vec![1.0; m];
    let mut inner = vec![0.0; n_slots];
    let mut cumulative: Vec<Vec<f64>> = vec![vec![0.0; m]; n_slots];
    let mut accept: Vec<Vec<f64>> = vec![vec![0.0; m]; n_slots];
    let mut pq: Vec<f64> = vec![0.0; n_slots];
    let mut damp_prev = vec![1.0; n_slots];
    for k in 1..m {
        let mut delta_g = 0.0;
        for slot in &schedule.slots {
            if slot.multiplicity == 0 {
                continue;
            }
            let avg_p = 0.5 * (slot.pbar[k - 1] + slot.pbar[k]);
            delta_g += slot.multiplicity as f64 * avg_p * dq(slot, k)?;
        }
        gbar[k] = gbar[k - 1] - gamma * delta_g;
        if gbar[k] <= 0.0 {
            return Err(SchemeError::Degenerate(format!(
                "normalizer gbar hit {:.3e} at t = {}",
                gbar[k], nodes[k]
            )));
        }
        for (s, slot) in schedule.slots.iter().enumerate() {
            let d = dq(slot, k)?;
            pq[s] += 0.5 * (slot.pbar[k - 1] + slot.pbar[k]) * d;
            let prev_ratio = slot.pbar[k - 1] / gbar[k - 1];
            let ratio = slot.pbar[k] / gbar[k];
            inner[s] += 0.5 * (prev_ratio + ratio) * d;
            let damp = (-gamma * inner[s]).exp();
            let avg_f = 0.5 * (damp_prev[s] / gbar[k - 1] + damp / gbar[k]);
            cumulative[s][k] = cumulative[s][k - 1] + gamma * avg_f * d;
            let avg_pf = 0.5
                * (slot.pbar[k - 1] * damp_prev[s] / gbar[k - 1]
                    + slot.pbar[k] * damp / gbar[k]);
            accept[s][k] = accept[s][k - 1] + gamma * avg_pf * d;
            damp_prev[s] = damp;
        }
    }

    let mut slots = Vec::with_capacity(n_slots);
    for (s, slot) in schedule.slots.iter().enumerate() {
        let mut density = Vec::with_capacity(m);
        let mut inner_run = 0.0;
        for k in 0..m {
            let slope = if k == 0 {
                (slot.qbar[1] - slot.qbar[0]) / (nodes[1] - nodes[0])
            } else if k == m - 1 {
                (slot.qbar[k] - slot.qbar[k - 1]) / (nodes[k] - nodes[k - 1])
            } else {
                (slot.qbar[k + 1] - slot.qbar[k - 1]) / (nodes[k + 1] - nodes[k - 1])
            };
            if k > 0 {
                let d = (slot.qbar[k] - slot.qbar[k - 1]).max(0.0);
                inner_run += 0.5
                    * (slot.pbar[k - 1] / gbar[k - 1] + slot.pbar[k] / gbar[k])
                    * d;
            }
            let f = gamma * slope.max(0.0) / gbar[k] * (-gamma * inner_run).exp();
            density.push(f);
        }
        let integral = cumulative[s][m - 1];
        let atom_at_one = (1.0 - integral).max(0.0);
        slots.push(SlotTables {
            law: ArrivalLaw { density, cumulative: std::mem::take(&mut cumulative[s]), atom_at_one },
            integral,
            accept_mass: std::mem::take(&mut accept[s]),
            accept_prob: gamma * pq[s],
        });
    }
    Ok(SchemeTables {
        gbar,
        slots,
        slot_of_item: schedule.slot_of_item.clone(),
        multiplicities: schedule.slots.iter().map(|s| s.multiplicity).collect(),
    })
}

/// Arrival laws of the common-threshold scheme: the general builder run on
/// the common schedule.
pub fn arrival_density_pt(
    lf: &LevelFunctions,
    inst: &Instance,
    gamma: f64,
) -> Result<SchemeTables, SchemeError> {
    arrival_density_general(&common_schedule(inst, lf), gamma)
}

/// Closed-form normalizer of the common-threshold scheme at the grid nodes:
/// `g(t) = gamma * (sum_i (1 - q_i(t)) p_i(t) - t) + 1`.
///
/// Cross-check for the integral form accumulated by the density builder.
pub fn g_fn(lf: &LevelFunctions, inst: &Instance, gamma: f64) -> Vec<f64> {
    let nodes = lf.grid().nodes();
    let mut out = Vec::with_capacity(nodes.len());
    for (k, &t) in nodes.iter().enumerate() {
        let mut s = 0.0;
        for g in 0..inst.group_count() {
            let p = lf.p_of_group(g)[k];
            let q = lf.q_of_group(g)[k];
            s += inst.group_size(g) as f64 * (1.0 - q) * p;
        }
        out.push(gamma * (s - t) + 1.0);
    }
    out
}

// ---------------------------------------------------------------------------
// Adverseness
// ---------------------------------------------------------------------------

/// Outcome of the x-space weak-adverseness test for one item.
#[derive(Debug, Clone, Serialize)]
pub struct AdverseCheck {
    pub item: usize,
    pub gamma: f64,
    /// `G_hat(0, gamma)` under the certified lower-bound normalizer.
    pub ghat: f64,
    pub weakly_adverse: bool,
}

/// Decide whether `item` is weakly adverse at `gamma`: whether its arrival
/// law would need total mass above 1 even under the certified lower bound
/// on the normalizer. Runs on the leave-one-out exceedance axis and needs
/// no time grid.
pub fn weakly_adverse_check(
    inst: &Instance,
    item: usize,
    gamma: f64,
) -> Result<AdverseCheck, SchemeError> {
    if item >= inst.n() {
        return Err(SchemeError::InvalidParams(format!(
            "item {item} out of range for {} items",
            inst.n()
        )));
    }
    let table = tabulate_ptilde(inst, item, G_HAT_RESOLUTION)?;
    let ghat = g_hat_integral(|x| table.eval(x), gamma, G_HAT_RESOLUTION);
    Ok(AdverseCheck { item, gamma, ghat, weakly_adverse: ghat > 1.0 })
}

// ---------------------------------------------------------------------------
// The two-scheme builder
// ---------------------------------------------------------------------------

/// A fully built scheme: schedule, arrival laws, and provenance of the
/// construction decision.
pub struct BuiltScheme {
    pub params: SchemeParams,
    pub scheme_id: SchemeId,
    pub schedule: ThresholdSchedule,
    pub tables: SchemeTables,
    /// The item routed through its own curve under [`SchemeId::SchemeII`].
    pub adverse_item: Option<usize>,
    /// Every item whose common-scheme law was over-full (diagnostic).
    pub adverse_items: Vec<usize>,
}

impl BuiltScheme {
    pub fn law(&self, item: usize) -> &ArrivalLaw {
        self.tables.law(item)
    }

    pub fn integral(&self, item: usize) -> f64 {
        self.tables.integral(item)
    }

    pub fn grid(&self) -> &TimeGrid {
        self.schedule.grid()
    }
}

/// Build the scheme for an instance: try the common threshold first; if
/// some item's law is over-full, reroute the smallest-index such item
/// through its own curve.
pub fn build_two_scheme(inst: &Instance, params: SchemeParams) -> Result<BuiltScheme, SchemeError> {
    params.validate()?;
    let (_, schedule) = refined_schedule(inst, &params, None)?;
    let tables = arrival_density_general(&schedule, params.gamma)?;
    let mut adverse_items: Vec<usize> = Vec::new();
    for item in 0..inst.n() {
        let g = inst.group_of(item);
        if inst.group_rep(g) == item && tables.integral(item) > 1.0 + WELL_DEFINED_SLACK {
            adverse_items.push(item);
        }
    }
    if adverse_items.is_empty() {
        return Ok(BuiltScheme {
            params,
            scheme_id: SchemeId::SchemeI,
            schedule,
            tables,
            adverse_item: None,
            adverse_items,
        });
    }
    let special = adverse_items[0];
    let (_, schedule2) = refined_schedule(inst, &params, Some(special))?;
    let tables2 = arrival_density_general(&schedule2, params.gamma)?;
    let mut over = Vec::new();
    for item in 0..inst.n() {
        let g = inst.group_of(item);
        if (inst.group_rep(g) == item || item == special)
            && tables2.integral(item) > 1.0 + SCHEME_SAFETY_MARGIN
        {
            over.push((item, tables2.integral(item)));
        }
    }
    if !over.is_empty() {
        return Err(SchemeError::BothSchemesFailed(format!(
            "common scheme leaves over-full items {adverse_items:?}; \
             per-item scheme still over-full at {over:?} (gamma = {})",
            params.gamma
        )));
    }
    Ok(BuiltScheme {
        params,
        scheme_id: SchemeId::SchemeII,
        schedule: schedule2,
        tables: tables2,
        adverse_item: Some(special),
        adverse_items,
    })
}

// ---------------------------------------------------------------------------
// Stress instance
// ---------------------------------------------------------------------------

/// The hard instance of the common-threshold scheme: `n` iid items whose
/// maximum is uniform on `[0, 1]`, plus one item concentrating mass
/// `1 - 2/n` on the narrow band `[alpha, alpha + 1/n]` with thin linear
/// tails covering the rest of `[0, 1]`.
///
/// The tails matter: every item must carry positive density across the
/// whole joint support, or the concentrated item's leave-one-out
/// exceedance never sweeps to 1 and its arrival law stays lean. At the
/// critical `alpha ~ 0.2109` the concentrated item's law saturates as `n`
/// grows, and above competitiveness ~0.7251 it becomes over-full.
pub fn hard_instance(n: usize, alpha: f64) -> Result<Instance, DistributionError> {
    if n < 8 {
        return Err(DistributionError::Invalid("hard instance needs n >= 8".into()));
    }
    let width = 1.0 / n as f64;
    if !(0.0 < alpha && alpha + width < 1.0) {
        return Err(DistributionError::Invalid(format!(
            "hard instance needs 0 < alpha and alpha + 1/n < 1, got alpha = {alpha}"
        )));
    }
    let tail = width;
    let mut items = Vec::with_capacity(n + 1);
    items.push(ValueDistribution::PiecewiseLinearCdf {
        knots: vec![
            (0.0, 0.0),
            (alpha, tail),
            (alpha + width, 1.0 - tail),
            (1.0, 1.0),
        ],
    });
    items.extend(std::iter::repeat_n(
        ValueDistribution::Power { hi: 1.0, exponent: width },
        n,
    ));
    Instance::new(items)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
