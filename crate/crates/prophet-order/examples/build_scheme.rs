//! Build arrival-time schemes for two contrasting instances.
//!
//! Two iid uniforms stay on the common time-indexed threshold. The hard
//! instance (a near-atom close to the critical support bottom plus many
//! small iid items) makes the near-atom's arrival law over-full, and the
//! builder reroutes that item through its own reshaped threshold curve, so
//! every law is a genuine sub-probability again.

use prophet_order::distributions::{Instance, ValueDistribution};
use prophet_order::scheme::{build_two_scheme, hard_instance, SchemeParams};

fn report(label: &str, inst: &Instance) {
    let built = build_two_scheme(inst, SchemeParams::default()).expect("scheme builds");
    println!("{label}");
    println!("  construction: {:?}", built.scheme_id);
    println!("  grid nodes:   {}", built.grid().len());
    if let Some(item) = built.adverse_item {
        println!("  rerouted item: {item} (over-full set: {:?})", built.adverse_items);
    }
    let show = inst.n().min(3);
    for item in 0..show {
        println!(
            "  item {item}: arrival mass {:.9}, accept probability {:.6}, atom at 1 = {:.6}",
            built.integral(item),
            built.tables.accept_prob(item),
            built.law(item).atom_at_one
        );
    }
    if inst.n() > show {
        let last = inst.n() - 1;
        println!(
            "  ... item {last}: arrival mass {:.9}, accept probability {:.6}",
            built.integral(last),
            built.tables.accept_prob(last)
        );
    }
    let total: f64 = (0..inst.n()).map(|i| built.tables.accept_prob(i)).sum();
    println!("  total stop probability: {total:.9}");
    println!();
}

fn main() {
    let uniforms = Instance::new(vec![
        ValueDistribution::Uniform { lo: 0.0, hi: 1.0 },
        ValueDistribution::Uniform { lo: 0.0, hi: 1.0 },
    ])
    .expect("valid instance");
    report("two iid uniforms", &uniforms);

    let alpha = 0.2109;
    let hard = hard_instance(400, alpha).expect("valid instance");
    report(&format!("hard instance (400 iid items + near-atom at {alpha})"), &hard);
}
