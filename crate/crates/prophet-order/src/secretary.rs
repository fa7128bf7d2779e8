//! Random-arrival hardness: the optimal stopping value of a near-worst-case
//! instance under a uniformly random arrival order.
//!
//! The instance has `n` iid items supported on `{0, b_1, ..., b_k, 1/(n e)}`
//! (each `b_j` with probability `p_j / n`, the huge tail value with
//! probability `e`) plus one deterministic item of value `a`. As the tail
//! parameter `e` vanishes, the tail's contribution to every expectation
//! collapses to `1/n` per item, so the limit is computable in closed form.
//!
//! For a fixed arrival order, the optimal policy follows the classic
//! backward recursion `tau_i = tau_{i+1} + E[(v_i - tau_{i+1})^+]`. Only
//! the deterministic item's position matters, so the random-order optimum
//! is the mean of `n + 1` per-position recursions. Since the iid step map
//! is the same everywhere, all per-position recursions live on two orbits
//! of that map (one from 0, one from `a`), which cuts the cost from
//! quadratic to linear without changing a single floating-point operation.

use serde::Serialize;
use thiserror::Error;

use crate::numerics::Kahan;
use crate::tolerances::ENUMERATION_CAP;

#[derive(Debug, Error)]
pub enum SecretaryError {
    #[error("invalid hardness instance: {0}")]
    Invalid(String),

    #[error("enumeration needs {needed} policies, cap is {cap}")]
    CapExceeded { needed: u64, cap: u64 },
}

/// The hardness instance parameters.
#[derive(Debug, Clone, Serialize)]
pub struct HardnessInstance {
    /// Number of iid items (one deterministic item is added on top).
    pub n: usize,
    /// Value of the deterministic item; must sit below every `b_j`.
    pub a: f64,
    /// Mid-range support points, ascending.
    pub b: Vec<f64>,
    /// Per-point weights; item `j` has probability `p_j / n`.
    pub p: Vec<f64>,
    /// Tail probability per item; `None` evaluates the vanishing-tail
    /// limit in closed form.
    pub epsilon: Option<f64>,
}

impl HardnessInstance {
    /// The parameter set achieving a ratio near 0.7254 at `n = 10^5`.
    pub fn reference(n: usize) -> Self {
        HardnessInstance {
            n,
            a: 0.82,
            b: vec![1.2, 1.25, 1.3, 1.35, 1.4, 1.45, 1.5, 1.55, 1.6, 1.65, 1.7, 1.8],
            p: vec![
                0.02, 0.03, 0.04, 0.05, 0.04, 0.03, 0.03, 0.02, 0.02, 0.02, 0.02, 0.005,
            ],
            epsilon: None,
        }
    }

    pub fn validate(&self) -> Result<(), SecretaryError> {
        if self.n == 0 {
            return Err(SecretaryError::Invalid("need at least one iid item".into()));
        }
        if self.b.len() != self.p.len() {
            return Err(SecretaryError::Invalid("b and p lengths differ".into()));
        }
        if !self.a.is_finite() || self.a <= 0.0 {
            return Err(SecretaryError::Invalid("a must be positive".into()));
        }
        let mut prev = self.a;
        for (&b, &p) in self.b.iter().zip(&self.p) {
            if !b.is_finite() || b <= prev {
                return Err(SecretaryError::Invalid(
                    "support points must ascend strictly above a".into(),
                ));
            }
            if !p.is_finite() || p <= 0.0 {
                return Err(SecretaryError::Invalid("weights must be positive".into()));
            }
            prev = b;
        }
        let mass: f64 = self.p.iter().sum::<f64>() / self.n as f64;
        let tail = self.epsilon.unwrap_or(0.0);
        if mass + tail >= 1.0 {
            return Err(SecretaryError::Invalid(
                "per-item probabilities exceed 1; increase n".into(),
            ));
        }
        if let Some(e) = self.epsilon {
            if !e.is_finite() || e <= 0.0 {
                return Err(SecretaryError::Invalid("epsilon must be positive".into()));
            }
            let top = 1.0 / (self.n as f64 * e);
            if top <= *self.b.last().expect("validated non-empty") {
                return Err(SecretaryError::Invalid(
                    "tail value must exceed every b; decrease epsilon".into(),
                ));
            }
        }
        Ok(())
    }

    /// One backward-recursion step through an iid item:
    /// `tau + E[(v - tau)^+]`.
    fn iid_step(&self, tau: f64) -> f64 {
        let n = self.n as f64;
        let mut gain = 0.0;
        for (&b, &p) in self.b.iter().zip(&self.p) {
            if b > tau {
                gain += (b - tau) * p / n;
            }
        }
        match self.epsilon {
            // The tail value 1/(n e) carries probability e, so its gain is
            // (1/(n e) - tau) e = 1/n - e tau; in the limit just 1/n.
            None => tau + gain + 1.0 / n,
            Some(e) => {
                let top = 1.0 / (n * e);
                tau + gain + (top - tau).max(0.0) * e
            }
        }
    }

    /// One backward-recursion step through the deterministic item:
    /// `tau + (a - tau)^+`.
    fn det_step(&self, tau: f64) -> f64 {
        if tau < self.a {
            self.a
        } else {
            tau
        }
    }

    /// Expected maximum over all `n + 1` items.
    pub fn expected_max(&self) -> f64 {
        let n = self.n as f64;
        let count = self.n as i32;
        let k = self.b.len();
        let tail = self.epsilon.unwrap_or(0.0);
        // suffix[i] = sum_{j >= i} p_j / n.
        let mut suffix = vec![0.0; k + 1];
        for i in (0..k).rev() {
            suffix[i] = suffix[i + 1] + self.p[i] / n;
        }
        let mut total = self.a * (1.0 - tail - suffix[0]).powi(count);
        for i in 0..k {
            total += self.b[i]
                * ((1.0 - tail - suffix[i + 1]).powi(count)
                    - (1.0 - tail - suffix[i]).powi(count));
        }
        total += match self.epsilon {
            None => 1.0,
            Some(e) => (1.0 - (1.0 - e).powi(count)) / (n * e),
        };
        total
    }

    /// The per-position fixed-order items (deterministic item at
    /// `position`, 0-indexed), for exhaustive cross-checks. Needs a finite
    /// tail parameter.
    pub fn fixed_order_items(&self, position: usize) -> Result<Vec<DiscreteItem>, SecretaryError> {
        self.validate()?;
        let e = self.epsilon.ok_or_else(|| {
            SecretaryError::Invalid("fixed-order items need a finite epsilon".into())
        })?;
        if position > self.n {
            return Err(SecretaryError::Invalid(format!(
                "position {position} out of range for {} items",
                self.n + 1
            )));
        }
        let n = self.n as f64;
        let mut outcomes = vec![(0.0, 1.0 - self.p.iter().sum::<f64>() / n - e)];
        outcomes.extend(self.b.iter().zip(&self.p).map(|(&b, &p)| (b, p / n)));
        outcomes.push((1.0 / (n * e), e));
        let iid = DiscreteItem { outcomes };
        let det = DiscreteItem { outcomes: vec![(self.a, 1.0)] };
        let mut items = vec![iid; self.n + 1];
        items[position] = det;
        Ok(items)
    }
}

/// Outcome of a hardness evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct HardnessReport {
    pub n: usize,
    pub epsilon: Option<f64>,
    pub expected_max: f64,
    /// Mean optimal stopping value over the uniformly random arrival order.
    pub opt: f64,
    pub ratio: f64,
    /// Optimal stopping value per position of the deterministic item.
    pub position_values: Vec<f64>,
}

/// Evaluate the hardness ratio in linear time via the two step-map orbits.
///
/// Bit-identical to [`hardness_ratio_direct`]: both walk the same orbits of
/// the same step maps, this one just shares the work across positions.
pub fn hardness_ratio(inst: &HardnessInstance) -> Result<HardnessReport, SecretaryError> {
    inst.validate()?;
    let count = inst.n + 1;
    // from_zero[s] applies the iid step s times to 0; the deterministic
    // step maps anything below a to exactly a, so every per-position
    // recursion continues either on this orbit or on the orbit from a.
    let mut from_zero = Vec::with_capacity(count);
    from_zero.push(0.0f64);
    for s in 1..count {
        from_zero.push(inst.iid_step(from_zero[s - 1]));
    }
    let mut from_a = Vec::with_capacity(count);
    from_a.push(inst.a);
    for s in 1..count {
        from_a.push(inst.iid_step(from_a[s - 1]));
    }

    // Position p sees count - 1 - p iid items behind it, so its incoming
    // threshold is from_zero[count - 1 - p]: walk the zero orbit in reverse
    // while the a-orbit walks forward.
    let terminal = from_zero[count - 1];
    let mut position_values = Vec::with_capacity(count);
    for (&tau, &continued) in from_zero.iter().rev().zip(&from_a) {
        let value = if tau < inst.a {
            // det_step lands exactly on a; the remaining steps ride the
            // a-orbit.
            continued
        } else {
            // det_step is the identity here, so the whole chain is the
            // zero orbit continued to its final point.
            terminal
        };
        position_values.push(value);
    }
    finish_report(inst, position_values)
}

/// Evaluate the hardness ratio by running the backward recursion once per
/// position of the deterministic item. Quadratic; kept as the reference
/// implementation the orbit method must match bit for bit.
pub fn hardness_ratio_direct(inst: &HardnessInstance) -> Result<HardnessReport, SecretaryError> {
    inst.validate()?;
    let count = inst.n + 1;
    let mut position_values = Vec::with_capacity(count);
    for position in 0..count {
        let mut tau = 0.0f64;
        for slot in (0..count).rev() {
            tau = if slot == position { inst.det_step(tau) } else { inst.iid_step(tau) };
        }
        position_values.push(tau);
    }
    finish_report(inst, position_values)
}

fn finish_report(
    inst: &HardnessInstance,
    position_values: Vec<f64>,
) -> Result<HardnessReport, SecretaryError> {
    let mut sum = Kahan::default();
    for &v in &position_values {
        sum.add(v);
    }
    let opt = sum.value() / position_values.len() as f64;
    let expected_max = inst.expected_max();
    Ok(HardnessReport {
        n: inst.n,
        epsilon: inst.epsilon,
        expected_max,
        opt,
        ratio: opt / expected_max,
        position_values,
    })
}

// ---------------------------------------------------------------------------
// Fixed-order optimum and its exhaustive oracle
// ---------------------------------------------------------------------------

/// A finite-support item for fixed-order games.
#[derive(Debug, Clone)]
pub struct DiscreteItem {
    /// `(value, probability)` pairs; probabilities must sum to 1.
    pub outcomes: Vec<(f64, f64)>,
}

impl DiscreteItem {
    fn validate(&self) -> Result<(), SecretaryError> {
        if self.outcomes.is_empty() {
            return Err(SecretaryError::Invalid("item needs at least one outcome".into()));
        }
        let mass: f64 = self.outcomes.iter().map(|&(_, p)| p).sum();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(SecretaryError::Invalid(format!(
                "outcome probabilities sum to {mass}, not 1"
            )));
        }
        if self.outcomes.iter().any(|&(_, p)| p < 0.0) {
            return Err(SecretaryError::Invalid("negative outcome probability".into()));
        }
        Ok(())
    }

    fn gain_above(&self, tau: f64) -> f64 {
        self.outcomes
            .iter()
            .map(|&(v, p)| if v > tau { (v - tau) * p } else { 0.0 })
            .sum()
    }
}

/// Optimal expected value for items inspected in the given order, by the
/// backward threshold recursion.
pub fn fixed_order_optimum(items: &[DiscreteItem]) -> Result<f64, SecretaryError> {
    if items.is_empty() {
        return Err(SecretaryError::Invalid("need at least one item".into()));
    }
    for item in items {
        item.validate()?;
    }
    let mut tau = 0.0f64;
    for item in items.iter().rev() {
        tau += item.gain_above(tau);
    }
    Ok(tau)
}

/// Optimal expected value for items inspected in the given order, by
/// exhausting every upward-closed acceptance policy.
///
/// Any optimal policy accepts exactly the values above some per-position
/// cutoff, so searching all cutoff combinations whose acceptance sets are
/// value-suffixes of each support is exhaustive. Exponential; guarded by
/// [`ENUMERATION_CAP`].
pub fn fixed_order_optimum_exhaustive(items: &[DiscreteItem]) -> Result<f64, SecretaryError> {
    if items.is_empty() {
        return Err(SecretaryError::Invalid("need at least one item".into()));
    }
    let mut policies: u64 = 1;
    for item in items {
        item.validate()?;
        policies = policies
            .checked_mul(item.outcomes.len() as u64 + 1)
            .filter(|&p| p <= ENUMERATION_CAP)
            .ok_or(SecretaryError::CapExceeded { needed: u64::MAX, cap: ENUMERATION_CAP })?;
    }
    if policies > ENUMERATION_CAP {
        return Err(SecretaryError::CapExceeded { needed: policies, cap: ENUMERATION_CAP });
    }

    let sorted: Vec<Vec<(f64, f64)>> = items
        .iter()
        .map(|item| {
            let mut o = item.outcomes.clone();
            o.sort_by(|a, b| a.0.total_cmp(&b.0));
            o
        })
        .collect();

    let mut best = f64::NEG_INFINITY;
    let mut cutoffs = vec![0usize; items.len()];
    loop {
        // cutoffs[i] = number of lowest outcomes the policy rejects.
        let mut value = 0.0f64;
        for (i, outcomes) in sorted.iter().enumerate().rev() {
            let accept: f64 = outcomes[cutoffs[i]..].iter().map(|&(v, p)| v * p).sum();
            let reject_mass: f64 = outcomes[..cutoffs[i]].iter().map(|&(_, p)| p).sum();
            value = accept + reject_mass * value;
        }
        best = best.max(value);

        let mut pos = 0;
        loop {
            if pos == cutoffs.len() {
                return Ok(best);
            }
            cutoffs[pos] += 1;
            if cutoffs[pos] <= sorted[pos].len() {
                break;
            }
            cutoffs[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tolerances::RECURSION_MATCH_TOL;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tiny_instance() -> HardnessInstance {
        HardnessInstance {
            n: 3,
            a: 0.5,
            b: vec![0.9, 1.3],
            p: vec![0.6, 0.3],
            epsilon: Some(0.05),
        }
    }

    #[test]
    fn orbit_and_direct_recursions_agree_bit_for_bit() {
        for inst in [
            tiny_instance(),
            HardnessInstance::reference(1000),
            HardnessInstance { epsilon: Some(1e-4), ..HardnessInstance::reference(500) },
        ] {
            let fast = hardness_ratio(&inst).expect("orbit");
            let slow = hardness_ratio_direct(&inst).expect("direct");
            for (a, b) in fast.position_values.iter().zip(&slow.position_values) {
                assert_eq!(a.to_bits(), b.to_bits(), "per-position values must match exactly");
            }
            assert_eq!(fast.opt.to_bits(), slow.opt.to_bits());
        }
    }

    #[test]
    fn recursion_matches_exhaustive_policy_search() {
        let inst = tiny_instance();
        for position in 0..=inst.n {
            let items = inst.fixed_order_items(position).expect("items");
            let recursive = fixed_order_optimum(&items).expect("recursion");
            let exhaustive = fixed_order_optimum_exhaustive(&items).expect("search");
            assert!(
                (recursive - exhaustive).abs() <= RECURSION_MATCH_TOL,
                "position {position}: {recursive} vs {exhaustive}"
            );
        }
    }

    #[test]
    fn per_position_recursion_matches_the_generic_fixed_order_game() {
        let inst = tiny_instance();
        let report = hardness_ratio(&inst).expect("orbit");
        for position in 0..=inst.n {
            let items = inst.fixed_order_items(position).expect("items");
            let generic = fixed_order_optimum(&items).expect("recursion");
            assert!(
                (report.position_values[position] - generic).abs() <= RECURSION_MATCH_TOL,
                "position {position}"
            );
        }
    }

    #[test]
    fn expected_max_matches_exhaustive_enumeration_on_a_tiny_instance() {
        let inst = tiny_instance();
        let items = inst.fixed_order_items(0).expect("items");
        // Enumerate all outcome profiles of the n + 1 items.
        let mut expected = 0.0f64;
        let sizes: Vec<usize> = items.iter().map(|i| i.outcomes.len()).collect();
        let mut idx = vec![0usize; items.len()];
        'outer: loop {
            let mut prob = 1.0;
            let mut max = f64::NEG_INFINITY;
            for (i, item) in items.iter().enumerate() {
                let (v, p) = item.outcomes[idx[i]];
                prob *= p;
                max = max.max(v);
            }
            expected += prob * max;
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    break 'outer;
                }
                idx[pos] += 1;
                if idx[pos] < sizes[pos] {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
        assert!(
            (inst.expected_max() - expected).abs() < 1e-12,
            "formula {} vs enumeration {expected}",
            inst.expected_max()
        );
    }

    #[test]
    fn expected_max_limit_is_approached_as_the_tail_vanishes() {
        let limit = HardnessInstance::reference(200).expected_max();
        let near = HardnessInstance { epsilon: Some(1e-7), ..HardnessInstance::reference(200) }
            .expected_max();
        assert!((limit - near).abs() < 1e-4, "limit {limit} vs near {near}");
    }

    #[test]
    fn expected_max_matches_monte_carlo() {
        let inst = HardnessInstance { epsilon: Some(0.01), ..HardnessInstance::reference(50) };
        let formula = inst.expected_max();
        let items = inst.fixed_order_items(0).expect("items");
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let trials = 200_000;
        let mut sum = Kahan::default();
        let mut sum_sq = 0.0f64;
        for _ in 0..trials {
            let mut max = f64::NEG_INFINITY;
            for item in &items {
                let mut u: f64 = rng.gen();
                let mut v = item.outcomes[0].0;
                for &(value, p) in &item.outcomes {
                    if u < p {
                        v = value;
                        break;
                    }
                    u -= p;
                }
                max = max.max(v);
            }
            sum.add(max);
            sum_sq += max * max;
        }
        let mean = sum.value() / trials as f64;
        let var = (sum_sq / trials as f64 - mean * mean).max(0.0);
        let sigma = (var / trials as f64).sqrt();
        assert!(
            (formula - mean).abs() <= 4.0 * sigma,
            "formula {formula} vs monte carlo {mean} (sigma {sigma})"
        );
    }

    #[test]
    fn reference_ratio_lands_near_its_reported_value() {
        let report = hardness_ratio(&HardnessInstance::reference(100_000)).expect("orbit");
        assert!(
            (report.ratio - 0.725398).abs() < 1e-5,
            "ratio at n = 1e5: {:.8}",
            report.ratio
        );
        assert!(report.ratio < 0.7254, "the ratio certifies the bound");
    }

    #[test]
    fn ratio_converges_from_smaller_sizes() {
        let coarse = hardness_ratio(&HardnessInstance::reference(10_000)).expect("orbit");
        assert!(
            (coarse.ratio - 0.7254).abs() < 5e-4,
            "ratio at n = 1e4: {:.8}",
            coarse.ratio
        );
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let items = vec![
            DiscreteItem {
                outcomes: (0..20).map(|i| (i as f64, 0.05)).collect::<Vec<_>>()
            };
            5
        ];
        assert!(matches!(
            fixed_order_optimum_exhaustive(&items),
            Err(SecretaryError::CapExceeded { .. })
        ));
    }

    #[test]
    fn invalid_instances_are_rejected() {
        let mut bad = tiny_instance();
        bad.b = vec![0.4, 1.3];
        assert!(bad.validate().is_err(), "b must stay above a");
        let mut bad = tiny_instance();
        bad.epsilon = Some(0.9);
        assert!(bad.validate().is_err(), "tail value must clear the support");
    }
}
