//! Evaluate the random-arrival hard instance: many iid items with a thin
//! huge-value tail plus one deterministic item. The optimal stopping value
//! under a uniformly random order, divided by the expected maximum, caps
//! what any random-order algorithm can guarantee.

use prophet_order::secretary::{hardness_ratio, HardnessInstance};

fn main() {
    println!("vanishing-tail limit");
    println!("{:>8} {:>14} {:>14} {:>12}", "n", "E[max]", "opt", "ratio");
    for n in [1_000usize, 10_000, 100_000] {
        let report = hardness_ratio(&HardnessInstance::reference(n)).expect("evaluates");
        println!(
            "{n:>8} {:>14.9} {:>14.9} {:>12.9}",
            report.expected_max, report.opt, report.ratio
        );
    }
    println!();

    println!("finite tails at n = 10000");
    println!("{:>10} {:>14} {:>14} {:>12}", "epsilon", "E[max]", "opt", "ratio");
    for epsilon in [1e-5, 1e-6, 1e-8] {
        let inst =
            HardnessInstance { epsilon: Some(epsilon), ..HardnessInstance::reference(10_000) };
        let report = hardness_ratio(&inst).expect("evaluates");
        println!(
            "{epsilon:>10.0e} {:>14.9} {:>14.9} {:>12.9}",
            report.expected_max, report.opt, report.ratio
        );
    }
    println!();

    let report = hardness_ratio(&HardnessInstance::reference(100_000)).expect("evaluates");
    let extremes = report
        .position_values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    println!(
        "per-position optimal values at n = 100000 span [{:.6}, {:.6}]",
        extremes.0, extremes.1
    );
    println!("certified cap on the random-order guarantee: {:.6}", report.ratio);
}
