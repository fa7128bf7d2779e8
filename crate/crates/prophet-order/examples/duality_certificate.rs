//! Certify finite-support instances: enumerate every deterministic
//! order-plus-thresholds strategy, solve the dual program pair, and read
//! off a randomized strategy whose exceedance curve dominates alpha times
//! the prophet's at every support level.

use prophet_order::lp_asd::{certify_instance, FiniteInstance, Setting};

fn show(label: &str, inst: &FiniteInstance, setting: Setting) {
    let (family, solution, mixture) = certify_instance(inst, setting).expect("certifies");
    println!("{label}");
    println!("  strategies enumerated: {}", family.len());
    println!("  min-program optimum mu    = {:.12}", solution.mu);
    println!("  max-program optimum alpha = {:.12}", solution.alpha);
    println!("  mixture ({} strategies):", mixture.support.len());
    for &(col, weight) in &mixture.support {
        let alg = &family.algorithms[col];
        let thresholds: Vec<String> = alg
            .thresholds
            .iter()
            .map(|t| match t {
                Some(j) => format!("{}", inst.values[*j]),
                None => "inf".into(),
            })
            .collect();
        println!(
            "    weight {weight:.6}  order {:?}  thresholds [{}]",
            alg.order,
            thresholds.join(", ")
        );
    }
    println!("  exceedance vs alpha * prophet:");
    for (j, &v) in inst.values.iter().enumerate() {
        println!(
            "    x = {v}: {:.6} >= {:.6} (residual {:+.2e})",
            mixture.exceedance[j],
            solution.alpha * solution.max_survival[j],
            mixture.residuals[j]
        );
    }
    println!(
        "  expected values: mixture {:.6}, prophet {:.6}, ratio {:.6}",
        mixture.expected_value,
        mixture.expected_max,
        mixture.expected_value / mixture.expected_max
    );
    println!();
}

fn main() {
    let coins = FiniteInstance::new(vec![0.0, 1.0], vec![vec![0.5, 0.5], vec![0.5, 0.5]])
        .expect("valid instance");
    show("two fair coins, chosen order", &coins, Setting::OrderSelection);

    let spread = FiniteInstance::new(
        vec![0.0, 1.0, 2.0],
        vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3], vec![0.3, 0.7, 0.0]],
    )
    .expect("valid instance");
    show("three items on {0, 1, 2}, chosen order", &spread, Setting::OrderSelection);

    let skewed = FiniteInstance::new(
        vec![0.0, 1.0],
        vec![vec![0.3, 0.7], vec![0.8, 0.2], vec![0.5, 0.5]],
    )
    .expect("valid instance");
    show("three biased coins, random order revealed upfront", &skewed, Setting::OrderAwareSecretary);
}
