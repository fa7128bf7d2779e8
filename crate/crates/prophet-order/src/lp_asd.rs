//! Finite-support duality between competitiveness and approximate
//! stochastic dominance.
//!
//! On an instance whose items take values in a common finite grid
//! `0 = a_1 < ... < a_k`, every deterministic strategy is an inspection
//! order plus a threshold per position, and there are finitely many of
//! them. Two linear programs over this family are exact duals:
//!
//! * the min program prices the support levels with weights `c_j`
//!   normalized against the prophet's exceedance curve and asks how much
//!   priced value the best single strategy must collect;
//! * the max program mixes the strategies to push every exceedance
//!   probability `P[A >= a_j]` above a common multiple `alpha` of the
//!   prophet's `P[X >= a_j]`.
//!
//! Both are solved independently by a small dense simplex and must meet at
//! the same optimum, which is the instance's certified dominance ratio.
//! The max program's solution is constructive: its weights are a randomized
//! algorithm whose exceedance curve dominates `alpha` times the prophet's.
//!
//! A variant covers the order-aware random-arrival setting, where the
//! inspection order is drawn uniformly and revealed up front instead of
//! chosen. Deterministic strategies become maps from arrival orders to
//! threshold sequences; since a mixture of maps factors into independent
//! per-order mixtures, the program groups its columns by arrival order
//! rather than enumerating the map space.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tolerances::{
    ENUMERATION_CAP, LP_DUALITY_TOL, LP_RESIDUAL_TOL, SIMPLEX_EPS, TOL_PROB,
};

/// Item count cap for the order-aware random-arrival variant.
pub const SECRETARY_MAX_ITEMS: usize = 3;
/// Support size cap for the order-aware random-arrival variant.
pub const SECRETARY_MAX_SUPPORT: usize = 2;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("invalid finite instance: {0}")]
    Invalid(String),

    #[error("enumeration needs {needed} strategies, cap is {cap}")]
    CapExceeded { needed: u64, cap: u64 },

    #[error("linear program is infeasible: {0}")]
    Infeasible(String),

    #[error("linear program is unbounded: {0}")]
    Unbounded(String),

    #[error("solution verification failed: {0}")]
    Verification(String),
}

/// Which arrival-order game the strategy family plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    /// The algorithm picks the inspection order.
    OrderSelection,
    /// The order is drawn uniformly at random and revealed up front.
    OrderAwareSecretary,
}

/// An instance whose items share a finite support grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiniteInstance {
    /// Support grid, ascending, starting at 0.
    pub values: Vec<f64>,
    /// Per-item probabilities over the grid; each row sums to 1.
    pub items: Vec<Vec<f64>>,
}

impl FiniteInstance {
    pub fn new(values: Vec<f64>, items: Vec<Vec<f64>>) -> Result<Self, LpError> {
        if values.is_empty() {
            return Err(LpError::Invalid("support grid is empty".into()));
        }
        if values[0] != 0.0 {
            return Err(LpError::Invalid("support grid must start at 0".into()));
        }
        if values.windows(2).any(|w| !w.iter().all(|v| v.is_finite()) || w[0] >= w[1]) {
            return Err(LpError::Invalid("support grid must ascend strictly".into()));
        }
        if items.is_empty() {
            return Err(LpError::Invalid("need at least one item".into()));
        }
        for (i, row) in items.iter().enumerate() {
            if row.len() != values.len() {
                return Err(LpError::Invalid(format!(
                    "item {i} has {} probabilities for {} support points",
                    row.len(),
                    values.len()
                )));
            }
            if row.iter().any(|&p| p < 0.0) {
                return Err(LpError::Invalid(format!("item {i} has a negative probability")));
            }
            let mass: f64 = row.iter().sum();
            if (mass - 1.0).abs() > TOL_PROB {
                return Err(LpError::Invalid(format!(
                    "item {i} probabilities sum to {mass}, not 1"
                )));
            }
        }
        Ok(FiniteInstance { values, items })
    }

    pub fn from_json(text: &str) -> Result<Self, LpError> {
        let raw: FiniteInstance = serde_json::from_str(text)
            .map_err(|e| LpError::Invalid(format!("bad instance json: {e}")))?;
        FiniteInstance::new(raw.values, raw.items)
    }

    pub fn n(&self) -> usize {
        self.items.len()
    }

    pub fn support_size(&self) -> usize {
        self.values.len()
    }

    /// `P[X_i >= a_j]` by grid index.
    pub fn survival(&self, item: usize, level: usize) -> f64 {
        self.items[item][level..].iter().sum()
    }

    /// `P[max_i X_i >= a_j]` by grid index.
    pub fn max_survival(&self, level: usize) -> f64 {
        let mut below = 1.0;
        for row in &self.items {
            below *= row[..level].iter().sum::<f64>();
        }
        1.0 - below
    }

    /// Expected value of a random variable given its exceedance curve on
    /// the grid.
    fn expectation_of_curve(&self, exceedance: &[f64]) -> f64 {
        let mut prev = 0.0;
        let mut total = 0.0;
        for (&v, &e) in self.values.iter().zip(exceedance) {
            total += (v - prev) * e;
            prev = v;
        }
        total
    }
}

/// An inspection order with one threshold per position.
///
/// In the order-selection setting the order is the strategy's choice; in
/// the order-aware random-arrival setting it records which arrival order
/// this column serves. `None` is the infinite threshold (never accept).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeterministicAlgorithm {
    pub order: Vec<usize>,
    pub thresholds: Vec<Option<usize>>,
}

impl DeterministicAlgorithm {
    /// `P[A >= a_j]` for every grid index, by exhausting all value
    /// profiles. An unaccepted run scores value 0, which only the bottom
    /// grid level counts.
    pub fn exceedance(&self, inst: &FiniteInstance) -> Vec<f64> {
        let k = inst.support_size();
        let n = inst.n();
        let mut mass = vec![0.0f64; k];
        let mut profile = vec![0usize; n];
        'profiles: loop {
            let mut prob = 1.0;
            for (i, &v) in profile.iter().enumerate() {
                prob *= inst.items[i][v];
            }
            if prob > 0.0 {
                let mut taken = 0usize;
                for (t, &i) in self.order.iter().enumerate() {
                    if let Some(th) = self.thresholds[t] {
                        if profile[i] >= th {
                            taken = profile[i];
                            break;
                        }
                    }
                }
                mass[taken] += prob;
            }
            let mut pos = 0;
            loop {
                if pos == n {
                    break 'profiles;
                }
                profile[pos] += 1;
                if profile[pos] < k {
                    break;
                }
                profile[pos] = 0;
                pos += 1;
            }
        }
        let mut exceedance = vec![0.0f64; k];
        let mut tail = 0.0;
        for j in (0..k).rev() {
            tail += mass[j];
            exceedance[j] = tail;
        }
        exceedance
    }
}

/// The enumerated strategy family with precomputed exceedance curves.
///
/// Columns are grouped by arrival order: one group in the order-selection
/// setting, `n!` groups in the order-aware one. A mixture puts conditional
/// weight on each group's columns, and the group average is the blended
/// exceedance curve.
#[derive(Debug, Clone)]
pub struct AlgorithmFamily {
    pub setting: Setting,
    pub algorithms: Vec<DeterministicAlgorithm>,
    pub exceedance: Vec<Vec<f64>>,
    group_of: Vec<usize>,
    group_count: usize,
}

impl AlgorithmFamily {
    pub fn len(&self) -> usize {
        self.algorithms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.algorithms.is_empty()
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    pub fn group_of(&self, column: usize) -> usize {
        self.group_of[column]
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| idx[i] < idx[i + 1]) else {
            return out;
        };
        let j = (i + 1..n).rev().find(|&j| idx[j] > idx[i]).expect("successor exists");
        idx.swap(i, j);
        idx[i + 1..].reverse();
    }
}

fn threshold_tuples(n: usize, k: usize) -> Vec<Vec<Option<usize>>> {
    // Odometer over {a_1..a_k, infinity} per position, encoded 0..=k.
    let mut out = Vec::new();
    let mut digits = vec![0usize; n];
    'outer: loop {
        out.push(digits.iter().map(|&d| if d == k { None } else { Some(d) }).collect());
        let mut pos = 0;
        loop {
            if pos == n {
                break 'outer;
            }
            digits[pos] += 1;
            if digits[pos] <= k {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
    out
}

/// Enumerate all deterministic strategies for the chosen setting, with
/// exceedance curves computed in parallel.
pub fn enumerate_algorithms(
    inst: &FiniteInstance,
    setting: Setting,
) -> Result<AlgorithmFamily, LpError> {
    let n = inst.n();
    let k = inst.support_size();
    if setting == Setting::OrderAwareSecretary
        && (n > SECRETARY_MAX_ITEMS || k > SECRETARY_MAX_SUPPORT)
    {
        return Err(LpError::Invalid(format!(
            "order-aware setting is capped at {SECRETARY_MAX_ITEMS} items \
             and {SECRETARY_MAX_SUPPORT} support points"
        )));
    }
    let mut count = u32::try_from(n)
        .ok()
        .and_then(|e| (k as u64 + 1).checked_pow(e))
        .unwrap_or(u64::MAX);
    for i in 2..=n as u64 {
        count = count.saturating_mul(i);
    }
    if count > ENUMERATION_CAP {
        return Err(LpError::CapExceeded { needed: count, cap: ENUMERATION_CAP });
    }

    let perms = permutations(n);
    let tuples = threshold_tuples(n, k);
    let mut algorithms = Vec::with_capacity(count as usize);
    let mut group_of = Vec::with_capacity(count as usize);
    for (g, order) in perms.iter().enumerate() {
        for thresholds in &tuples {
            algorithms.push(DeterministicAlgorithm {
                order: order.clone(),
                thresholds: thresholds.clone(),
            });
            group_of.push(g);
        }
    }
    let exceedance: Vec<Vec<f64>> =
        algorithms.par_iter().map(|alg| alg.exceedance(inst)).collect();
    let group_count = match setting {
        Setting::OrderSelection => 1,
        Setting::OrderAwareSecretary => perms.len(),
    };
    let group_of = match setting {
        Setting::OrderSelection => vec![0; algorithms.len()],
        Setting::OrderAwareSecretary => group_of,
    };
    Ok(AlgorithmFamily { setting, algorithms, exceedance, group_of, group_count })
}

/// Joint solution of the dual program pair.
///
/// Optima need not be unique; both programs are solved by deterministic
/// pivoting, so the reported point is reproducible but is just the first
/// optimum found.
#[derive(Debug, Clone, Serialize)]
pub struct LpSolution {
    /// Optimum of the min program.
    pub mu: f64,
    /// Level prices `c_j` from the min program.
    pub certificate: Vec<f64>,
    /// Optimum of the max program; the certified dominance ratio.
    pub alpha: f64,
    /// Mixture weight per strategy column, conditional on its group.
    pub weights: Vec<f64>,
    /// `P[max >= a_j]` per grid index.
    pub max_survival: Vec<f64>,
}

/// Solve the dual program pair independently and cross-check strong
/// duality.
pub fn solve_lp_pair(
    inst: &FiniteInstance,
    family: &AlgorithmFamily,
) -> Result<LpSolution, LpError> {
    if family.is_empty() {
        return Err(LpError::Invalid("empty strategy family".into()));
    }
    let k = inst.support_size();
    let g: Vec<f64> = (0..k).map(|j| inst.max_survival(j)).collect();

    // Deduplicate columns with identical exceedance curves within a group.
    let mut reps: Vec<usize> = Vec::new();
    let mut seen: std::collections::BTreeMap<(usize, Vec<u64>), usize> = Default::default();
    for col in 0..family.len() {
        let key = (
            family.group_of[col],
            family.exceedance[col].iter().map(|x| x.to_bits()).collect(),
        );
        seen.entry(key).or_insert_with(|| {
            reps.push(col);
            reps.len() - 1
        });
    }
    let m = reps.len();
    let groups = family.group_count;
    let scale = groups as f64;

    // Max program: columns [alpha+, alpha-, w_1..w_m, t_1..t_k].
    // Rows: per level j, sum_m (E_mj / groups) w_m - g_j alpha+ + g_j alpha- - t_j = 0;
    // per group, sum of its w_m = 1.
    let mut a2 = vec![vec![0.0f64; 2 + m + k]; k + groups];
    let mut b2 = vec![0.0f64; k + groups];
    for j in 0..k {
        a2[j][0] = -g[j];
        a2[j][1] = g[j];
        for (col, &rep) in reps.iter().enumerate() {
            a2[j][2 + col] = family.exceedance[rep][j] / scale;
        }
        a2[j][2 + m + j] = -1.0;
    }
    for grp in 0..groups {
        for (col, &rep) in reps.iter().enumerate() {
            if family.group_of[rep] == grp {
                a2[k + grp][2 + col] = 1.0;
            }
        }
        b2[k + grp] = 1.0;
    }
    let mut c2 = vec![0.0f64; 2 + m + k];
    c2[0] = -1.0;
    c2[1] = 1.0;
    let (obj2, x2) = simplex_solve(&a2, &b2, &c2)?;
    let alpha = -obj2;
    let mut weights = vec![0.0f64; family.len()];
    for (col, &rep) in reps.iter().enumerate() {
        weights[rep] = x2[2 + col];
    }

    // Min program: columns [d_1+..d_G+, d_1-..d_G-, c_1..c_k, s_1..s_m].
    // Rows: normalization sum_j c_j g_j = 1; per strategy column,
    // d_{group} - sum_j c_j E_mj - s_m = 0.
    let mut a1 = vec![vec![0.0f64; 2 * groups + k + m]; 1 + m];
    let mut b1 = vec![0.0f64; 1 + m];
    for j in 0..k {
        a1[0][2 * groups + j] = g[j];
    }
    b1[0] = 1.0;
    for (col, &rep) in reps.iter().enumerate() {
        let grp = family.group_of[rep];
        a1[1 + col][grp] = 1.0;
        a1[1 + col][groups + grp] = -1.0;
        for j in 0..k {
            a1[1 + col][2 * groups + j] = -family.exceedance[rep][j];
        }
        a1[1 + col][2 * groups + k + col] = -1.0;
    }
    let mut c1 = vec![0.0f64; 2 * groups + k + m];
    for grp in 0..groups {
        c1[grp] = 1.0 / scale;
        c1[groups + grp] = -1.0 / scale;
    }
    let (mu, x1) = simplex_solve(&a1, &b1, &c1)?;
    let certificate = x1[2 * groups..2 * groups + k].to_vec();

    if (mu - alpha).abs() > LP_DUALITY_TOL {
        return Err(LpError::Verification(format!(
            "strong duality violated: min optimum {mu}, max optimum {alpha}"
        )));
    }
    let norm: f64 = certificate.iter().zip(&g).map(|(&c, &gj)| c * gj).sum();
    if (norm - 1.0).abs() > LP_RESIDUAL_TOL {
        return Err(LpError::Verification(format!("certificate normalization is {norm}")));
    }
    Ok(LpSolution { mu, certificate, alpha, weights, max_survival: g })
}

/// The randomized algorithm extracted from the max program, with its
/// dominance verification.
#[derive(Debug, Clone, Serialize)]
pub struct AsdMixture {
    /// Certified dominance ratio.
    pub alpha: f64,
    /// `(column, weight)` pairs with positive weight.
    pub support: Vec<(usize, f64)>,
    /// Blended exceedance curve of the mixture.
    pub exceedance: Vec<f64>,
    /// `P[A >= a_j] - alpha P[max >= a_j]` per grid index.
    pub residuals: Vec<f64>,
    pub expected_value: f64,
    pub expected_max: f64,
}

/// Read the mixture out of a solved pair and verify dominance level by
/// level.
pub fn extract_asd_mixture(
    inst: &FiniteInstance,
    family: &AlgorithmFamily,
    solution: &LpSolution,
) -> Result<AsdMixture, LpError> {
    let k = inst.support_size();
    let scale = family.group_count as f64;
    let mut per_group = vec![0.0f64; family.group_count];
    let mut exceedance = vec![0.0f64; k];
    let mut support = Vec::new();
    for (col, &w) in solution.weights.iter().enumerate() {
        if w > 0.0 {
            support.push((col, w));
            per_group[family.group_of[col]] += w;
            for (acc, &e) in exceedance.iter_mut().zip(&family.exceedance[col]) {
                *acc += w * e / scale;
            }
        }
    }
    for (grp, &total) in per_group.iter().enumerate() {
        if (total - 1.0).abs() > LP_RESIDUAL_TOL {
            return Err(LpError::Verification(format!(
                "group {grp} mixture weights sum to {total}"
            )));
        }
    }
    let residuals: Vec<f64> = (0..k)
        .map(|j| exceedance[j] - solution.alpha * solution.max_survival[j])
        .collect();
    if let Some((j, &r)) = residuals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .filter(|&(_, &r)| r < -LP_RESIDUAL_TOL)
    {
        return Err(LpError::Verification(format!(
            "dominance fails at level {j} with residual {r}"
        )));
    }
    let expected_value = inst.expectation_of_curve(&exceedance);
    let expected_max = inst.expectation_of_curve(&solution.max_survival);
    if expected_value < solution.alpha * expected_max - LP_RESIDUAL_TOL {
        return Err(LpError::Verification(format!(
            "mixture expectation {expected_value} falls below \
             {} of the prophet's {expected_max}",
            solution.alpha
        )));
    }
    Ok(AsdMixture {
        alpha: solution.alpha,
        support,
        exceedance,
        residuals,
        expected_value,
        expected_max,
    })
}

/// Enumerate, solve, and extract in one call.
pub fn certify_instance(
    inst: &FiniteInstance,
    setting: Setting,
) -> Result<(AlgorithmFamily, LpSolution, AsdMixture), LpError> {
    let family = enumerate_algorithms(inst, setting)?;
    let solution = solve_lp_pair(inst, &family)?;
    let mixture = extract_asd_mixture(inst, &family, &solution)?;
    Ok((family, solution, mixture))
}

// ---------------------------------------------------------------------------
// Dense two-phase simplex
// ---------------------------------------------------------------------------

/// Minimize `c . x` subject to `A x = b`, `x >= 0`, by the two-phase
/// simplex method with Bland's rule. Returns the optimum and a basic
/// optimal point. Small and dense on purpose; the programs here have at
/// most a few hundred rows.
fn simplex_solve(
    a: &[Vec<f64>],
    b: &[f64],
    c: &[f64],
) -> Result<(f64, Vec<f64>), LpError> {
    let m = a.len();
    let n = c.len();
    // Flip rows to make the right-hand side non-negative.
    let mut tableau: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for (row, &bi) in a.iter().zip(b) {
        let sign = if bi < 0.0 { -1.0 } else { 1.0 };
        tableau.push(row.iter().map(|&v| sign * v).collect());
        rhs.push(sign * bi);
    }
    // Phase one: artificial basis.
    for (i, row) in tableau.iter_mut().enumerate() {
        row.extend((0..m).map(|j| if i == j { 1.0 } else { 0.0 }));
    }
    let total = n + m;
    let mut basis: Vec<usize> = (n..total).collect();
    let phase_one: Vec<f64> = (0..total).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    let feas = run_simplex(&mut tableau, &mut rhs, &mut basis, &phase_one, total)?;
    if feas > SIMPLEX_EPS {
        return Err(LpError::Infeasible(format!("phase-one residual {feas}")));
    }
    // Drive leftover artificials out of the basis; a row with no real
    // pivot candidate is redundant and gets dropped.
    let mut row = 0;
    while row < basis.len() {
        if basis[row] >= n {
            if let Some(col) = (0..n).find(|&j| tableau[row][j].abs() > SIMPLEX_EPS) {
                pivot(&mut tableau, &mut rhs, &mut basis, row, col);
            } else {
                tableau.remove(row);
                rhs.remove(row);
                basis.remove(row);
                continue;
            }
        }
        row += 1;
    }
    for r in tableau.iter_mut() {
        r.truncate(n);
    }
    let mut phase_two = c.to_vec();
    phase_two.resize(n, 0.0);
    let optimum = run_simplex(&mut tableau, &mut rhs, &mut basis, &phase_two, n)?;
    let mut x = vec![0.0f64; n];
    for (row, &var) in basis.iter().enumerate() {
        x[var] = rhs[row];
    }
    Ok((optimum, x))
}

fn pivot(
    tableau: &mut [Vec<f64>],
    rhs: &mut [f64],
    basis: &mut [usize],
    row: usize,
    col: usize,
) {
    let scale = tableau[row][col];
    for v in tableau[row].iter_mut() {
        *v /= scale;
    }
    rhs[row] /= scale;
    let pivot_row = tableau[row].clone();
    let pivot_rhs = rhs[row];
    for i in 0..tableau.len() {
        if i == row {
            continue;
        }
        let factor = tableau[i][col];
        if factor == 0.0 {
            continue;
        }
        for (v, &p) in tableau[i].iter_mut().zip(&pivot_row) {
            *v -= factor * p;
        }
        rhs[i] -= factor * pivot_rhs;
    }
    basis[row] = col;
}

/// Run Bland-rule simplex iterations to optimality for the given costs.
/// Returns the objective value.
fn run_simplex(
    tableau: &mut [Vec<f64>],
    rhs: &mut [f64],
    basis: &mut [usize],
    costs: &[f64],
    width: usize,
) -> Result<f64, LpError> {
    loop {
        // Reduced costs priced against the current basis.
        let mut y = vec![0.0f64; tableau.len()];
        for (row, &var) in basis.iter().enumerate() {
            y[row] = costs[var];
        }
        let entering = (0..width).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let reduced: f64 = costs[j]
                - tableau.iter().zip(&y).map(|(row, &yi)| row[j] * yi).sum::<f64>();
            reduced < -SIMPLEX_EPS
        });
        let Some(col) = entering else {
            let value: f64 = basis.iter().zip(rhs.iter()).map(|(&v, &r)| costs[v] * r).sum();
            return Ok(value);
        };
        let mut leave: Option<(usize, f64)> = None;
        for row in 0..tableau.len() {
            let t = tableau[row][col];
            if t > SIMPLEX_EPS {
                let ratio = rhs[row] / t;
                let better = match leave {
                    None => true,
                    Some((best_row, best)) => {
                        ratio < best - SIMPLEX_EPS
                            || (ratio < best + SIMPLEX_EPS && basis[row] < basis[best_row])
                    }
                };
                if better {
                    leave = Some((row, ratio));
                }
            }
        }
        let Some((row, _)) = leave else {
            return Err(LpError::Unbounded(format!("column {col} has no blocking row")));
        };
        pivot(tableau, rhs, basis, row, col);
    }
}
