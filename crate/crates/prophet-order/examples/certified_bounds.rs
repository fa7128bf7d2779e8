//! Evaluate every certified inequality backing the per-item scheme's
//! guarantee: root brackets, gap caps, the two kernel integrals at each
//! pinned competitiveness level, and the wrap-up bound that keeps the
//! special item's arrival law below total mass 1.

use prophet_order::analysis::{certified_bounds, wrapup_bound};
use prophet_order::scheme::{DEFAULT_C, GAMMA_STAR};

fn flag(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

fn main() {
    let bounds = certified_bounds().expect("bounds evaluate");
    for set in [&bounds.primary, &bounds.secondary] {
        let gc = &set.constants;
        println!("gamma = {}", gc.gamma);
        println!(
            "  beta        {:.10}  in {:?}  {}",
            gc.beta,
            set.beta_bracket_expected,
            flag(set.beta_in_bracket)
        );
        println!(
            "  gamma point {:.10}  in {:?}  {}",
            gc.gamma_point,
            set.gamma_point_bracket_expected,
            flag(set.gamma_point_in_bracket)
        );
        println!(
            "  H - M gap    {:.8}  < {}  {}",
            set.hm_gap,
            set.hm_cap,
            flag(set.hm_within_cap)
        );
        println!(
            "  beta margin  {:.8}  < {}  {}",
            set.beta_margin,
            set.beta_margin_cap,
            flag(set.beta_margin_within_cap)
        );
        println!(
            "  tail kernel  {:.8}  ref {}  > margin cap  {}",
            set.y.value,
            set.y.reference,
            flag(set.y.matches_reference && set.y.exceeds)
        );
        println!(
            "  head kernel  {:.8}  ref {}  > gap cap     {}",
            set.w.value,
            set.w.reference,
            flag(set.w.matches_reference && set.w.exceeds)
        );
        println!();
    }

    let wrap = wrapup_bound(GAMMA_STAR, DEFAULT_C).expect("bound evaluates");
    println!(
        "wrap-up bound at (gamma, c) = ({GAMMA_STAR}, {DEFAULT_C}): {:.10}  < 1  {}",
        wrap.bound,
        flag(wrap.sub_probability)
    );
    println!(
        "implied secondary level: {:.10} (certified bounds above also ran at {})",
        wrap.implied_gamma_prime,
        bounds.secondary.constants.gamma
    );
    println!();
    println!("all bounds pass: {}", bounds.pass() && wrap.sub_probability);
}
