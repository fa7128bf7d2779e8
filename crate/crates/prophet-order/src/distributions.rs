//! Value distributions, instances, time grids, and level functions.
//!
//! An [`Instance`] is a finite list of independent nonnegative value
//! distributions. Arrival-time schemes are built from its *level functions*:
//! the common threshold `tau(t)` solving `P[max_i v_i > tau] = t`, the
//! per-item exceedance `p_i(t) = P[v_i > tau(t)]`, and the leave-one-out
//! exceedance `q_i(t) = P[max_{j != i} v_j > tau(t)]`. These satisfy
//! `(1 - p_i)(1 - q_i) = 1 - t` by independence, which is checked at every
//! grid node.
//!
//! Identical items are deduplicated into groups so instances with many iid
//! copies (the hard instances have a thousand) cost one curve per distinct
//! distribution, not per item.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tolerances::{
    DEFAULT_GRID_RESOLUTION, DEFAULT_SMOOTHING_FRACTION, TOL_PROB,
};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum DistributionError {
    /// The instance description itself is malformed.
    #[error("invalid instance: {0}")]
    Invalid(String),

    /// A probability-axis argument fell outside `[0, 1]`.
    #[error("probability argument {t} outside [0, 1]")]
    InvalidProbability { t: f64 },

    /// The max-value CDF is flat or jumps at this level, so the threshold
    /// `tau(t)` is not a single well-defined value. Happens for disjoint or
    /// purely atomic supports; smoothing finite supports avoids it.
    #[error("threshold level t = {t} is not invertible: the max-value exceedance is flat or jumps there")]
    NonInvertible { t: f64 },

    /// `(1 - p_i)(1 - q_i) = 1 - t` failed beyond tolerance; indicates a
    /// numerical defect rather than a bad input.
    #[error("exceedance identity violated at node {node} (t = {t}): residual {residual:.3e}")]
    IdentityViolation { node: usize, t: f64, residual: f64 },
}

// ---------------------------------------------------------------------------
// Value distributions
// ---------------------------------------------------------------------------

/// A single item's value distribution. All kinds are supported on `[0, inf)`
/// and described by their CDF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueDistribution {
    /// Uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// Atoms `(value, probability)`; probabilities sum to one. Atoms are
    /// smoothed into narrow ramps by the instance's smoothing width.
    FiniteSupport { points: Vec<(f64, f64)> },
    /// Explicit piecewise-linear CDF through `(value, cdf)` knots, from 0 up
    /// to 1. Repeated values encode jumps.
    PiecewiseLinearCdf { knots: Vec<(f64, f64)> },
    /// CDF `(v / hi)^exponent` on `[0, hi]`. With `exponent = 1/N` this is
    /// the per-item law whose `N`-fold iid maximum is uniform on `[0, hi]`.
    Power { hi: f64, exponent: f64 },
}

impl ValueDistribution {
    fn validate(&self) -> Result<(), DistributionError> {
        let bad = |msg: String| Err(DistributionError::Invalid(msg));
        match self {
            ValueDistribution::Uniform { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || *lo < 0.0 || hi <= lo {
                    return bad(format!("uniform needs 0 <= lo < hi, got [{lo}, {hi}]"));
                }
            }
            ValueDistribution::FiniteSupport { points } => {
                if points.is_empty() {
                    return bad("finite support needs at least one atom".into());
                }
                let mut mass = 0.0;
                for &(v, p) in points {
                    if !v.is_finite() || v < 0.0 {
                        return bad(format!("atom value {v} must be finite and nonnegative"));
                    }
                    if !p.is_finite() || p <= 0.0 {
                        return bad(format!("atom probability {p} must be positive"));
                    }
                    mass += p;
                }
                if (mass - 1.0).abs() > 1e-9 {
                    return bad(format!("atom probabilities sum to {mass}, expected 1"));
                }
            }
            ValueDistribution::PiecewiseLinearCdf { knots } => {
                if knots.len() < 2 {
                    return bad("piecewise-linear CDF needs at least two knots".into());
                }
                for w in knots.windows(2) {
                    if w[1].0 < w[0].0 || w[1].1 < w[0].1 {
                        return bad("piecewise-linear CDF knots must be non-decreasing".into());
                    }
                }
                let (x0, f0) = knots[0];
                let (x1, f1) = knots[knots.len() - 1];
                if !x0.is_finite() || !x1.is_finite() || x0 < 0.0 {
                    return bad("piecewise-linear CDF values must be finite and nonnegative".into());
                }
                if f0.abs() > 1e-9 || (f1 - 1.0).abs() > 1e-9 {
                    return bad(format!("piecewise-linear CDF must run from 0 to 1, got {f0}..{f1}"));
                }
                if x1 <= x0 {
                    return bad("piecewise-linear CDF support has zero width".into());
                }
            }
            ValueDistribution::Power { hi, exponent } => {
                if !hi.is_finite() || *hi <= 0.0 || !exponent.is_finite() || *exponent <= 0.0 {
                    return bad(format!("power CDF needs hi > 0 and exponent > 0, got ({hi}, {exponent})"));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Evaluatable form
// ---------------------------------------------------------------------------

/// Piecewise-linear CDF in evaluatable form. `xs` is non-decreasing;
/// repeated entries encode jumps. `fs` runs from 0 to 1.
#[derive(Debug, Clone)]
struct Pwl {
    xs: Vec<f64>,
    fs: Vec<f64>,
}

impl Pwl {
    fn cdf(&self, x: f64) -> f64 {
        if x < self.xs[0] {
            return 0.0;
        }
        let n = self.xs.len();
        if x >= self.xs[n - 1] {
            return 1.0;
        }
        // First knot strictly to the right of x; right-continuity at jumps
        // falls out because the upper duplicate sorts after the lower one.
        let hi = self.xs.partition_point(|&v| v <= x);
        let lo = hi - 1;
        let span = self.xs[hi] - self.xs[lo];
        if span <= 0.0 {
            return self.fs[lo];
        }
        let w = (x - self.xs[lo]) / span;
        self.fs[lo] + w * (self.fs[hi] - self.fs[lo])
    }

    fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.xs[0];
        }
        let n = self.fs.len();
        if u >= 1.0 {
            return self.xs[n - 1];
        }
        let hi = self.fs.partition_point(|&f| f < u);
        if hi == 0 {
            return self.xs[0];
        }
        let lo = hi - 1;
        let span = self.fs[hi] - self.fs[lo];
        if span <= 0.0 {
            return self.xs[hi];
        }
        let w = (u - self.fs[lo]) / span;
        self.xs[lo] + w * (self.xs[hi] - self.xs[lo])
    }

    /// Largest value with CDF zero.
    fn bottom(&self) -> f64 {
        let mut b = self.xs[0];
        for (x, f) in self.xs.iter().zip(&self.fs) {
            if *f == 0.0 {
                b = *x;
            } else {
                break;
            }
        }
        b
    }

    /// Smallest value with CDF one.
    fn top(&self) -> f64 {
        for (x, f) in self.xs.iter().zip(&self.fs) {
            if *f >= 1.0 {
                return *x;
            }
        }
        self.xs[self.xs.len() - 1]
    }

    /// Intervals of strictly positive density, plus jump locations.
    fn density_shape(&self) -> (Vec<(f64, f64)>, Vec<f64>) {
        let mut intervals = Vec::new();
        let mut jumps = Vec::new();
        for i in 0..self.xs.len() - 1 {
            let dx = self.xs[i + 1] - self.xs[i];
            let df = self.fs[i + 1] - self.fs[i];
            if df > 0.0 {
                if dx > 0.0 {
                    intervals.push((self.xs[i], self.xs[i + 1]));
                } else {
                    jumps.push(self.xs[i]);
                }
            }
        }
        (intervals, jumps)
    }
}

/// Resolved, directly evaluatable distribution (finite supports already
/// smoothed).
#[derive(Debug, Clone)]
enum EvalDist {
    Uniform { lo: f64, hi: f64 },
    Power { hi: f64, exponent: f64 },
    Pwl(Pwl),
}

impl EvalDist {
    fn from_spec(spec: &ValueDistribution, smoothing: f64) -> Self {
        match spec {
            ValueDistribution::Uniform { lo, hi } => EvalDist::Uniform { lo: *lo, hi: *hi },
            ValueDistribution::Power { hi, exponent } => {
                EvalDist::Power { hi: *hi, exponent: *exponent }
            }
            ValueDistribution::PiecewiseLinearCdf { knots } => {
                let mut xs: Vec<f64> = knots.iter().map(|k| k.0).collect();
                let mut fs: Vec<f64> = knots.iter().map(|k| k.1).collect();
                let n = fs.len();
                fs[0] = 0.0;
                fs[n - 1] = 1.0;
                for f in fs.iter_mut() {
                    *f = f.clamp(0.0, 1.0);
                }
                for i in 1..n {
                    if fs[i] < fs[i - 1] {
                        fs[i] = fs[i - 1];
                    }
                    if xs[i] < xs[i - 1] {
                        xs[i] = xs[i - 1];
                    }
                }
                EvalDist::Pwl(Pwl { xs, fs })
            }
            ValueDistribution::FiniteSupport { points } => {
                EvalDist::Pwl(smooth_atoms(points, smoothing))
            }
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        match self {
            EvalDist::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            EvalDist::Power { hi, exponent } => {
                if x <= 0.0 {
                    0.0
                } else if x >= *hi {
                    1.0
                } else {
                    (x / hi).powf(*exponent)
                }
            }
            EvalDist::Pwl(p) => p.cdf(x),
        }
    }

    fn survival(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    fn quantile(&self, u: f64) -> f64 {
        match self {
            EvalDist::Uniform { lo, hi } => lo + (hi - lo) * u.clamp(0.0, 1.0),
            EvalDist::Power { hi, exponent } => hi * u.clamp(0.0, 1.0).powf(1.0 / exponent),
            EvalDist::Pwl(p) => p.quantile(u),
        }
    }

    fn bottom(&self) -> f64 {
        match self {
            EvalDist::Uniform { lo, .. } => *lo,
            EvalDist::Power { .. } => 0.0,
            EvalDist::Pwl(p) => p.bottom(),
        }
    }

    fn top(&self) -> f64 {
        match self {
            EvalDist::Uniform { hi, .. } => *hi,
            EvalDist::Power { hi, .. } => *hi,
            EvalDist::Pwl(p) => p.top(),
        }
    }

    fn density_shape(&self) -> (Vec<(f64, f64)>, Vec<f64>) {
        match self {
            EvalDist::Uniform { lo, hi } => (vec![(*lo, *hi)], Vec::new()),
            EvalDist::Power { hi, .. } => (vec![(0.0, *hi)], Vec::new()),
            EvalDist::Pwl(p) => p.density_shape(),
        }
    }
}

/// Turn atoms into a piecewise-linear CDF by spreading each atom's mass
/// uniformly over `[v, v + width]`. Overlapping ramps add. With zero width
/// the atoms stay as jumps.
fn smooth_atoms(points: &[(f64, f64)], width: f64) -> Pwl {
    let mut atoms: Vec<(f64, f64)> = points.to_vec();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    if width <= 0.0 {
        let mut xs = Vec::with_capacity(2 * atoms.len());
        let mut fs = Vec::with_capacity(2 * atoms.len());
        let mut cum = 0.0;
        for &(v, p) in &atoms {
            xs.push(v);
            fs.push(cum);
            cum += p;
            xs.push(v);
            fs.push(cum);
        }
        let n = fs.len();
        fs[n - 1] = 1.0;
        return Pwl { xs, fs };
    }
    // Sweep the ramp endpoints, accumulating density slope.
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(2 * atoms.len());
    for &(v, p) in &atoms {
        events.push((v, p / width));
        events.push((v + width, -p / width));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut xs = Vec::new();
    let mut fs = Vec::new();
    let mut slope = 0.0;
    let mut cum = 0.0;
    let mut i = 0;
    while i < events.len() {
        let x = events[i].0;
        if let Some(&last) = xs.last() {
            cum += slope * (x - last);
        }
        while i < events.len() && events[i].0 == x {
            slope += events[i].1;
            i += 1;
        }
        xs.push(x);
        fs.push(cum);
    }
    let n = fs.len();
    fs[n - 1] = 1.0;
    for f in fs.iter_mut() {
        *f = f.clamp(0.0, 1.0);
    }
    Pwl { xs, fs }
}

// ---------------------------------------------------------------------------
// Instance
// ---------------------------------------------------------------------------

/// Serialized form of an [`Instance`]: the item list plus an optional
/// absolute smoothing width (defaults to 1e-6 of the joint support span).
#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceFile {
    items: Vec<ValueDistribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    smoothing_width: Option<f64>,
}

struct Group {
    dist: EvalDist,
    count: usize,
    rep: usize,
}

/// A problem instance: independent items with known distributions.
///
/// Construction resolves smoothing, deduplicates identical items into
/// groups, and precomputes the joint support together with the flat levels
/// of the max-value exceedance (where threshold inversion must fail).
#[derive(Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct Instance {
    items: Vec<ValueDistribution>,
    smoothing_width: f64,
    groups: Vec<Group>,
    item_group: Vec<usize>,
    bottom: f64,
    top: f64,
    plateau_levels: Vec<f64>,
}

impl Clone for Instance {
    fn clone(&self) -> Self {
        Instance::with_smoothing(self.items.clone(), self.smoothing_width)
            .expect("a validated instance reclones")
    }
}

impl std::fmt::Debug for Instance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Instance")
            .field("n", &self.items.len())
            .field("groups", &self.groups.len())
            .field("smoothing_width", &self.smoothing_width)
            .field("support", &(self.bottom, self.top))
            .finish()
    }
}

impl TryFrom<InstanceFile> for Instance {
    type Error = DistributionError;
    fn try_from(file: InstanceFile) -> Result<Self, Self::Error> {
        match file.smoothing_width {
            Some(w) => Instance::with_smoothing(file.items, w),
            None => Instance::new(file.items),
        }
    }
}

impl From<Instance> for InstanceFile {
    fn from(inst: Instance) -> Self {
        InstanceFile { items: inst.items, smoothing_width: Some(inst.smoothing_width) }
    }
}

impl Instance {
    /// Build an instance with the default smoothing width
    /// (1e-6 of the joint support span).
    pub fn new(items: Vec<ValueDistribution>) -> Result<Self, DistributionError> {
        let span = joint_span(&items)?;
        Instance::with_smoothing(items, DEFAULT_SMOOTHING_FRACTION * span)
    }

    /// Build an instance with an explicit absolute smoothing width for
    /// finite supports. Zero width keeps atoms as CDF jumps.
    pub fn with_smoothing(
        items: Vec<ValueDistribution>,
        smoothing_width: f64,
    ) -> Result<Self, DistributionError> {
        if items.is_empty() {
            return Err(DistributionError::Invalid("instance needs at least one item".into()));
        }
        if !smoothing_width.is_finite() || smoothing_width < 0.0 {
            return Err(DistributionError::Invalid(format!(
                "smoothing width {smoothing_width} must be finite and nonnegative"
            )));
        }
        for item in &items {
            item.validate()?;
        }
        let mut groups: Vec<Group> = Vec::new();
        let mut item_group: Vec<usize> = Vec::with_capacity(items.len());
        for (idx, item) in items.iter().enumerate() {
            let gid = items[..idx].iter().position(|other| other == item).map(|first| item_group[first]);
            match gid {
                Some(g) => {
                    groups[g].count += 1;
                    item_group.push(g);
                }
                None => {
                    groups.push(Group {
                        dist: EvalDist::from_spec(item, smoothing_width),
                        count: 1,
                        rep: idx,
                    });
                    item_group.push(groups.len() - 1);
                }
            }
        }
        let bottom = groups.iter().map(|g| g.dist.bottom()).fold(f64::NEG_INFINITY, f64::max);
        let top = groups.iter().map(|g| g.dist.top()).fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() || !bottom.is_finite() || top <= bottom {
            return Err(DistributionError::Invalid(
                "joint support has zero width: the maximum is deterministic".into(),
            ));
        }
        let mut inst = Instance {
            items,
            smoothing_width,
            groups,
            item_group,
            bottom,
            top,
            plateau_levels: Vec::new(),
        };
        inst.plateau_levels = plateau_levels(&inst, None);
        Ok(inst)
    }

    /// Parse an instance from its JSON file form.
    pub fn from_json(text: &str) -> Result<Self, DistributionError> {
        serde_json::from_str(text)
            .map_err(|e| DistributionError::Invalid(format!("instance JSON: {e}")))
    }

    pub fn n(&self) -> usize {
        self.items.len()
    }

    pub fn items(&self) -> &[ValueDistribution] {
        &self.items
    }

    pub fn smoothing_width(&self) -> f64 {
        self.smoothing_width
    }

    /// Bottom of the joint support: below this the max-value exceedance is 1.
    pub fn support_bottom(&self) -> f64 {
        self.bottom
    }

    /// Top of the joint support: above this the max-value exceedance is 0.
    pub fn support_top(&self) -> f64 {
        self.top
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn group_of(&self, item: usize) -> usize {
        self.item_group[item]
    }

    pub fn group_size(&self, group: usize) -> usize {
        self.groups[group].count
    }

    /// Index of the first item in the given group.
    pub fn group_rep(&self, group: usize) -> usize {
        self.groups[group].rep
    }

    pub fn cdf(&self, item: usize, x: f64) -> f64 {
        self.groups[self.item_group[item]].dist.cdf(x)
    }

    pub fn survival(&self, item: usize, x: f64) -> f64 {
        self.groups[self.item_group[item]].dist.survival(x)
    }

    /// Inverse CDF, for sampling.
    pub fn quantile(&self, item: usize, u: f64) -> f64 {
        self.groups[self.item_group[item]].dist.quantile(u)
    }
}

fn joint_span(items: &[ValueDistribution]) -> Result<f64, DistributionError> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for item in items {
        item.validate()?;
        let (b, t) = match item {
            ValueDistribution::Uniform { lo, hi } => (*lo, *hi),
            ValueDistribution::Power { hi, .. } => (0.0, *hi),
            ValueDistribution::PiecewiseLinearCdf { knots } => {
                (knots[0].0, knots[knots.len() - 1].0)
            }
            ValueDistribution::FiniteSupport { points } => {
                let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
                let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
        };
        lo = lo.min(b);
        hi = hi.max(t);
    }
    if items.is_empty() || hi <= lo || !hi.is_finite() || !lo.is_finite() {
        // A span of zero still yields a valid width of zero for pure atoms.
        return Ok(0.0);
    }
    Ok(hi - lo)
}

// ---------------------------------------------------------------------------
// Max-value exceedance and threshold inversion
// ---------------------------------------------------------------------------

/// `P[max v_j > x]` over all items, or over all but `exclude`.
pub fn max_exceed_prob(inst: &Instance, x: f64, exclude: Option<usize>) -> f64 {
    let skip = exclude.map(|i| {
        assert!(i < inst.n(), "exclude index {i} out of range for {} items", inst.n());
        inst.item_group[i]
    });
    let mut product = 1.0;
    for (g, group) in inst.groups.iter().enumerate() {
        let count = group.count - usize::from(skip == Some(g));
        if count == 0 {
            continue;
        }
        let f = group.dist.cdf(x);
        if f == 0.0 {
            return 1.0;
        }
        product *= f.powi(count as i32);
    }
    1.0 - product
}

/// Flat levels of the max-value exceedance over the given item set: one
/// entry per maximal value-interval where every remaining item has zero
/// density (and none has support fully above it).
fn plateau_levels(inst: &Instance, exclude: Option<usize>) -> Vec<f64> {
    let skip = exclude.map(|i| inst.item_group[i]);
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    let mut jumps: Vec<f64> = Vec::new();
    let mut bottom = f64::NEG_INFINITY;
    let mut top = f64::NEG_INFINITY;
    for (g, group) in inst.groups.iter().enumerate() {
        let count = group.count - usize::from(skip == Some(g));
        if count == 0 {
            continue;
        }
        bottom = bottom.max(group.dist.bottom());
        top = top.max(group.dist.top());
        let (ivs, js) = group.dist.density_shape();
        intervals.extend(ivs);
        jumps.extend(js);
    }
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in intervals {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    // Complement of the union inside (bottom, top), split at jump points.
    let mut gaps: Vec<(f64, f64)> = Vec::new();
    let mut cursor = bottom;
    for &(lo, hi) in &merged {
        if lo > cursor {
            gaps.push((cursor, lo.min(top)));
        }
        cursor = cursor.max(hi);
        if cursor >= top {
            break;
        }
    }
    if cursor < top {
        gaps.push((cursor, top));
    }
    jumps.sort_by(f64::total_cmp);
    let mut levels = Vec::new();
    for (lo, hi) in gaps {
        if hi <= lo {
            continue;
        }
        let mut cuts = vec![lo];
        cuts.extend(jumps.iter().copied().filter(|&j| j > lo && j < hi));
        cuts.push(hi);
        for w in cuts.windows(2) {
            if w[1] > w[0] {
                let mid = 0.5 * (w[0] + w[1]);
                levels.push(exceed_over(inst, mid, skip));
            }
        }
    }
    levels
}

fn exceed_over(inst: &Instance, x: f64, skip: Option<usize>) -> f64 {
    let mut product = 1.0;
    for (g, group) in inst.groups.iter().enumerate() {
        let count = group.count - usize::from(skip == Some(g));
        if count == 0 {
            continue;
        }
        let f = group.dist.cdf(x);
        if f == 0.0 {
            return 1.0;
        }
        product *= f.powi(count as i32);
    }
    1.0 - product
}

/// The common threshold: the value `tau` with `P[max v_j > tau] = t`.
///
/// `tau(0)` is the top of the joint support and `tau(1)` the bottom.
/// Fails with [`DistributionError::NonInvertible`] when the exceedance is
/// flat or jumps at level `t`.
pub fn threshold_tau(inst: &Instance, t: f64) -> Result<f64, DistributionError> {
    threshold_tau_excluding(inst, t, None)
}

/// Same inversion over all items except `exclude` (used for per-item
/// threshold curves).
pub fn threshold_tau_excluding(
    inst: &Instance,
    t: f64,
    exclude: Option<usize>,
) -> Result<f64, DistributionError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(DistributionError::InvalidProbability { t });
    }
    let skip = exclude.map(|i| {
        assert!(i < inst.n(), "exclude index {i} out of range for {} items", inst.n());
        inst.item_group[i]
    });
    let mut bottom = f64::NEG_INFINITY;
    let mut top = f64::NEG_INFINITY;
    let mut remaining = 0;
    for (g, group) in inst.groups.iter().enumerate() {
        let count = group.count - usize::from(skip == Some(g));
        if count == 0 {
            continue;
        }
        remaining += count;
        bottom = bottom.max(group.dist.bottom());
        top = top.max(group.dist.top());
    }
    if remaining == 0 {
        return Err(DistributionError::Invalid("threshold over an empty item set".into()));
    }
    if t == 0.0 {
        return Ok(top);
    }
    if t == 1.0 {
        return Ok(bottom);
    }
    let computed;
    let levels: &[f64] = match exclude {
        None => &inst.plateau_levels,
        Some(_) => {
            computed = plateau_levels(inst, exclude);
            &computed
        }
    };
    if levels.iter().any(|&l| (l - t).abs() <= TOL_PROB) {
        return Err(DistributionError::NonInvertible { t });
    }
    let f_bottom = exceed_over(inst, bottom, skip) - t;
    if f_bottom <= 0.0 {
        // The exceedance jumps below `t` already at the support bottom.
        return Err(DistributionError::NonInvertible { t });
    }
    let mut lo = bottom;
    let mut hi = top;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if exceed_over(inst, mid, skip) - t > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let residual = (exceed_over(inst, root, skip) - t).abs();
    if residual > 10.0 * TOL_PROB {
        return Err(DistributionError::NonInvertible { t });
    }
    Ok(root)
}

// ---------------------------------------------------------------------------
// Time grid
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TimeGridSpec {
    resolution: usize,
    refined: bool,
}

/// Discretization of the arrival-time axis `[0, 1]`.
///
/// Uniform nodes plus optional geometric refinement toward both endpoints
/// (down to spacing 1e-12), where threshold curves steepen.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "TimeGridSpec", into = "TimeGridSpec")]
pub struct TimeGrid {
    nodes: Vec<f64>,
    resolution: usize,
    refined: bool,
}

impl TryFrom<TimeGridSpec> for TimeGrid {
    type Error = DistributionError;
    fn try_from(spec: TimeGridSpec) -> Result<Self, Self::Error> {
        if spec.resolution < 2 {
            return Err(DistributionError::Invalid("grid needs at least 2 nodes".into()));
        }
        Ok(if spec.refined {
            TimeGrid::refined(spec.resolution)
        } else {
            TimeGrid::uniform(spec.resolution)
        })
    }
}

impl From<TimeGrid> for TimeGridSpec {
    fn from(g: TimeGrid) -> Self {
        TimeGridSpec { resolution: g.resolution, refined: g.refined }
    }
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid::refined(DEFAULT_GRID_RESOLUTION)
    }
}

impl TimeGrid {
    /// `resolution` uniformly spaced nodes from 0 to 1.
    pub fn uniform(resolution: usize) -> Self {
        assert!(resolution >= 2, "grid needs at least 2 nodes");
        let m = (resolution - 1) as f64;
        let nodes = (0..resolution).map(|k| k as f64 / m).collect();
        TimeGrid { nodes, resolution, refined: false }
    }

    /// Uniform nodes plus geometrically spaced nodes packed toward both
    /// endpoints.
    pub fn refined(resolution: usize) -> Self {
        assert!(resolution >= 2, "grid needs at least 2 nodes");
        let m = (resolution - 1) as f64;
        let mut nodes: Vec<f64> = (0..resolution).map(|k| k as f64 / m).collect();
        let mut step = 0.5 / m;
        while step >= 1e-12 {
            nodes.push(step);
            nodes.push(1.0 - step);
            step *= 0.5;
        }
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        TimeGrid { nodes, resolution, refined: true }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Linear interpolation of a node-aligned table at time `t`.
    pub fn interp(&self, table: &[f64], t: f64) -> f64 {
        crate::numerics::interp(&self.nodes, table, t)
    }

    /// A copy of this grid with extra nodes merged in (sorted, deduplicated).
    ///
    /// Used by adaptive cell splitting. The merged grid keeps the original
    /// construction parameters, so serializing it reproduces the base grid,
    /// not the splits.
    pub fn merged_with(&self, extra: &[f64]) -> TimeGrid {
        let mut nodes = self.nodes.clone();
        nodes.extend(extra.iter().copied().filter(|t| (0.0..=1.0).contains(t)));
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        TimeGrid { nodes, resolution: self.resolution, refined: self.refined }
    }
}

// ---------------------------------------------------------------------------
// Level functions
// ---------------------------------------------------------------------------

/// Tabulated level functions on a time grid: the common threshold and the
/// per-group exceedance curves `p` and `q`.
///
/// Curves are stored once per group of identical items; per-item accessors
/// route through the group map.
pub struct LevelFunctions {
    grid: TimeGrid,
    tau: Vec<f64>,
    group_p: Vec<Vec<f64>>,
    group_q: Vec<Vec<f64>>,
    item_group: Vec<usize>,
}

impl LevelFunctions {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Common threshold values at the grid nodes (non-increasing).
    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn group_count(&self) -> usize {
        self.group_p.len()
    }

    pub fn group_of(&self, item: usize) -> usize {
        self.item_group[item]
    }

    /// `p_i(t) = P[v_i > tau(t)]` at the grid nodes.
    pub fn p(&self, item: usize) -> &[f64] {
        &self.group_p[self.item_group[item]]
    }

    /// `q_i(t) = P[max_{j != i} v_j > tau(t)]` at the grid nodes.
    pub fn q(&self, item: usize) -> &[f64] {
        &self.group_q[self.item_group[item]]
    }

    pub fn p_of_group(&self, group: usize) -> &[f64] {
        &self.group_p[group]
    }

    pub fn q_of_group(&self, group: usize) -> &[f64] {
        &self.group_q[group]
    }
}

/// Tabulate `tau`, `p_i`, and `q_i` on the grid and verify the exceedance
/// identity `(1 - p_i)(1 - q_i) = 1 - t` at every node.
pub fn level_functions(
    inst: &Instance,
    grid: &TimeGrid,
) -> Result<LevelFunctions, DistributionError> {
    let n_nodes = grid.len();
    let n_groups = inst.groups.len();
    let mut tau = Vec::with_capacity(n_nodes);
    let mut group_p = vec![Vec::with_capacity(n_nodes); n_groups];
    let mut group_q = vec![Vec::with_capacity(n_nodes); n_groups];
    let mut cdfs = vec![0.0; n_groups];
    for (node, &t) in grid.nodes().iter().enumerate() {
        let x = threshold_tau(inst, t)?;
        tau.push(x);
        for (g, group) in inst.groups.iter().enumerate() {
            cdfs[g] = group.dist.cdf(x);
        }
        for g in 0..n_groups {
            let p = 1.0 - cdfs[g];
            let mut others = 1.0;
            for (h, group) in inst.groups.iter().enumerate() {
                let count = group.count - usize::from(h == g);
                if count == 0 {
                    continue;
                }
                if cdfs[h] == 0.0 {
                    others = 0.0;
                    break;
                }
                others *= cdfs[h].powi(count as i32);
            }
            let q = 1.0 - others;
            let residual = ((1.0 - p) * (1.0 - q) - (1.0 - t)).abs();
            if residual > TOL_PROB {
                return Err(DistributionError::IdentityViolation { node, t, residual });
            }
            group_p[g].push(p);
            group_q[g].push(q);
        }
    }
    Ok(LevelFunctions {
        grid: grid.clone(),
        tau,
        group_p,
        group_q,
        item_group: inst.item_group.clone(),
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn two_uniform() -> Instance {
        Instance::new(vec![
            ValueDistribution::Uniform { lo: 0.0, hi: 1.0 },
            ValueDistribution::Uniform { lo: 0.0, hi: 1.0 },
        ])
        .expect("valid instance")
    }

    #[test]
    fn json_round_trip() {
        let inst = Instance::with_smoothing(
            vec![
                ValueDistribution::Uniform { lo: 0.0, hi: 2.0 },
                ValueDistribution::FiniteSupport { points: vec![(0.5, 0.25), (1.5, 0.75)] },
                ValueDistribution::PiecewiseLinearCdf {
                    knots: vec![(0.0, 0.0), (1.0, 0.5), (2.0, 1.0)],
                },
                ValueDistribution::Power { hi: 1.0, exponent: 0.01 },
            ],
            1e-6,
        )
        .expect("valid instance");
        let text = serde_json::to_string(&inst).expect("serializes");
        let back = Instance::from_json(&text).expect("parses");
        assert_eq!(back.items(), inst.items());
        assert_eq!(back.smoothing_width(), 1e-6);
        assert_eq!(back.group_count(), 4);
    }

    #[test]
    fn rejects_malformed_items() {
        assert!(Instance::new(vec![]).is_err());
        assert!(Instance::new(vec![ValueDistribution::Uniform { lo: 1.0, hi: 1.0 }]).is_err());
        assert!(Instance::new(vec![ValueDistribution::Uniform { lo: -1.0, hi: 1.0 }]).is_err());
        assert!(Instance::new(vec![ValueDistribution::FiniteSupport {
            points: vec![(1.0, 0.4)],
        }])
        .is_err());
        assert!(Instance::new(vec![ValueDistribution::Power { hi: 1.0, exponent: 0.0 }]).is_err());
        assert!(Instance::new(vec![ValueDistribution::PiecewiseLinearCdf {
            knots: vec![(0.0, 0.0), (1.0, 0.4)],
        }])
        .is_err());
    }

    #[test]
    fn identical_items_share_a_group() {
        let inst = two_uniform();
        assert_eq!(inst.group_count(), 1);
        assert_eq!(inst.group_size(0), 2);
        assert_eq!(inst.group_of(1), 0);
    }

    #[test]
    fn exceedance_of_two_uniforms() {
        let inst = two_uniform();
        // P[max > x] = 1 - x^2.
        assert!((max_exceed_prob(&inst, 0.5, None) - 0.75).abs() < 1e-15);
        // Excluding one item leaves a single uniform.
        assert!((max_exceed_prob(&inst, 0.5, Some(0)) - 0.5).abs() < 1e-15);
        assert_eq!(max_exceed_prob(&inst, -0.5, None), 1.0);
        assert_eq!(max_exceed_prob(&inst, 1.5, None), 0.0);
    }

    #[test]
    fn threshold_inverts_two_uniforms() {
        let inst = two_uniform();
        // tau(t) = sqrt(1 - t).
        for t in [0.1, 0.25, 0.5, 0.75, 0.9, 0.999] {
            let tau = threshold_tau(&inst, t).expect("invertible");
            assert!(
                (tau - (1.0 - t).sqrt()).abs() < 1e-10,
                "t = {t}: tau = {tau}, want {}",
                (1.0 - t).sqrt()
            );
        }
        assert_eq!(threshold_tau(&inst, 0.0).expect("top"), 1.0);
        assert_eq!(threshold_tau(&inst, 1.0).expect("bottom"), 0.0);
        assert!(matches!(
            threshold_tau(&inst, 1.5),
            Err(DistributionError::InvalidProbability { .. })
        ));
    }

    #[test]
    fn threshold_excluding_reduces_to_single_item() {
        let inst = two_uniform();
        for t in [0.2, 0.5, 0.8] {
            let tau = threshold_tau_excluding(&inst, t, Some(1)).expect("invertible");
            assert!((tau - (1.0 - t)).abs() < 1e-10);
        }
    }

    #[test]
    fn power_item_stacks_to_uniform_max() {
        // N iid items with CDF v^(1/N): the max is uniform on [0, 1].
        let n = 50;
        let items = vec![ValueDistribution::Power { hi: 1.0, exponent: 1.0 / n as f64 }; n];
        let inst = Instance::new(items).expect("valid instance");
        assert_eq!(inst.group_count(), 1);
        for x in [0.1, 0.3, 0.7, 0.95] {
            let e = max_exceed_prob(&inst, x, None);
            assert!((e - (1.0 - x)).abs() < 1e-12, "x = {x}: exceed = {e}");
        }
        let tau = threshold_tau(&inst, 0.4).expect("invertible");
        assert!((tau - 0.6).abs() < 1e-10);
    }

    #[test]
    fn smoothing_merges_overlapping_ramps() {
        let d = ValueDistribution::FiniteSupport { points: vec![(1.0, 0.5), (1.05, 0.5)] };
        let inst = Instance::with_smoothing(vec![d], 0.2).expect("valid instance");
        // Ramps [1.0, 1.2] and [1.05, 1.25] overlap; CDF must stay monotone
        // and reach 1 at 1.25.
        let mut prev = 0.0;
        for k in 0..=100 {
            let x = 0.95 + 0.35 * k as f64 / 100.0;
            let f = inst.cdf(0, x);
            assert!(f >= prev - 1e-12, "CDF must be monotone at {x}");
            prev = f;
        }
        assert_eq!(inst.cdf(0, 1.25), 1.0);
        assert_eq!(inst.cdf(0, 0.999), 0.0);
        assert!((inst.cdf(0, 1.1) - (0.25 + 0.125)).abs() < 1e-12);
    }

    #[test]
    fn atoms_without_smoothing_make_flat_levels_non_invertible() {
        let d = ValueDistribution::FiniteSupport { points: vec![(1.0, 0.5), (2.0, 0.5)] };
        let inst = Instance::with_smoothing(vec![d.clone(), d], 0.0).expect("valid instance");
        // Exceedance is 0.75 on the whole gap [1, 2): flat level.
        assert!(matches!(
            threshold_tau(&inst, 0.75),
            Err(DistributionError::NonInvertible { .. })
        ));
        // Level 0.5 falls inside the jump at x = 2.
        assert!(matches!(
            threshold_tau(&inst, 0.5),
            Err(DistributionError::NonInvertible { .. })
        ));
    }

    #[test]
    fn disjoint_supports_still_invert_above_the_joint_bottom() {
        let inst = Instance::new(vec![
            ValueDistribution::Uniform { lo: 0.0, hi: 1.0 },
            ValueDistribution::Uniform { lo: 2.0, hi: 3.0 },
        ])
        .expect("valid instance");
        // Below x = 2 the exceedance is pinned at 1, so the joint bottom is 2
        // and every interior level is attained on (2, 3).
        assert_eq!(inst.support_bottom(), 2.0);
        let tau = threshold_tau(&inst, 0.5).expect("invertible");
        assert!((tau - 2.5).abs() < 1e-10);
        let tau = threshold_tau(&inst, 1.0 - 1e-9).expect("invertible");
        assert!(tau - 2.0 < 1e-8);
    }

    #[test]
    fn shared_flat_band_makes_its_level_non_invertible() {
        let flat_middle = ValueDistribution::PiecewiseLinearCdf {
            knots: vec![(0.0, 0.0), (1.0, 0.5), (2.0, 0.5), (3.0, 1.0)],
        };
        let inst =
            Instance::new(vec![flat_middle.clone(), flat_middle]).expect("valid instance");
        // Both CDFs are flat on (1, 2), so the max-value exceedance is stuck
        // at 1 - 0.25 there.
        assert!(matches!(
            threshold_tau(&inst, 0.75),
            Err(DistributionError::NonInvertible { .. })
        ));
        // 1 - F(tau)^2 = 0.5 with F = 0.5 + 0.5 (tau - 2) gives tau = 1 + sqrt(2).
        let tau = threshold_tau(&inst, 0.5).expect("invertible elsewhere");
        assert!((tau - (1.0 + 2.0_f64.sqrt())).abs() < 1e-9, "got {tau}");
    }

    #[test]
    fn grids_are_strictly_increasing_and_span_unit_interval() {
        for grid in [TimeGrid::uniform(64), TimeGrid::refined(64), TimeGrid::default()] {
            let nodes = grid.nodes();
            assert_eq!(nodes[0], 0.0);
            assert_eq!(nodes[nodes.len() - 1], 1.0);
            for w in nodes.windows(2) {
                assert!(w[1] > w[0], "nodes must strictly increase");
            }
        }
        let refined = TimeGrid::refined(64);
        assert!(refined.len() > 64, "refinement adds endpoint nodes");
        assert!(refined.nodes()[1] <= 2e-12, "tail spacing reaches the 1e-12 scale");
    }

    #[test]
    fn level_functions_satisfy_exceedance_identity() {
        let inst = Instance::new(vec![
            ValueDistribution::Uniform { lo: 0.0, hi: 1.0 },
            ValueDistribution::Uniform { lo: 0.0, hi: 2.0 },
            ValueDistribution::Power { hi: 1.5, exponent: 0.5 },
        ])
        .expect("valid instance");
        let grid = TimeGrid::uniform(257);
        let lf = level_functions(&inst, &grid).expect("level functions");
        for (k, &t) in grid.nodes().iter().enumerate() {
            for item in 0..inst.n() {
                let p = lf.p(item)[k];
                let q = lf.q(item)[k];
                assert!(
                    ((1.0 - p) * (1.0 - q) - (1.0 - t)).abs() <= TOL_PROB,
                    "identity at node {k}, item {item}"
                );
            }
        }
        // Endpoints: p and q run from 0 to 1.
        for item in 0..inst.n() {
            assert_eq!(lf.p(item)[0], 0.0);
            assert_eq!(lf.q(item)[0], 0.0);
            assert!((lf.p(item)[grid.len() - 1] - 1.0).abs() < 1e-12);
            assert!((lf.q(item)[grid.len() - 1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn level_functions_for_two_uniforms_match_closed_form() {
        let inst = two_uniform();
        let grid = TimeGrid::uniform(101);
        let lf = level_functions(&inst, &grid).expect("level functions");
        for (k, &t) in grid.nodes().iter().enumerate() {
            let expected = 1.0 - (1.0 - t).sqrt();
            assert!((lf.p(0)[k] - expected).abs() < 1e-9, "p at t = {t}");
            assert!((lf.q(1)[k] - expected).abs() < 1e-9, "q at t = {t}");
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let inst = Instance::with_smoothing(
            vec![
                ValueDistribution::Uniform { lo: 0.5, hi: 2.0 },
                ValueDistribution::FiniteSupport { points: vec![(0.2, 0.3), (0.9, 0.7)] },
                ValueDistribution::Power { hi: 2.0, exponent: 3.0 },
            ],
            1e-4,
        )
        .expect("valid instance");
        for item in 0..inst.n() {
            for u in [0.01, 0.2, 0.5, 0.77, 0.99] {
                let x = inst.quantile(item, u);
                let f = inst.cdf(item, x);
                assert!((f - u).abs() < 1e-9, "item {item}, u = {u}: cdf(quantile) = {f}");
            }
        }
    }
}
