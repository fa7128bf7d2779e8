//! Print the closed-form constants the whole construction is calibrated
//! against: the single-threshold scheme's critical pair, the crossing
//! points of the auxiliary curves at the two pinned competitiveness
//! levels, and the iid benchmark constant for context.

use prophet_order::analysis::{
    compute_pt_constants, iid_prophet_constant, GammaConstants, GAMMA_PRIME,
};
use prophet_order::scheme::GAMMA_STAR;

fn main() {
    let pt = compute_pt_constants().expect("constants converge");
    println!("single-threshold scheme");
    println!("  worst-case support bottom  alpha    = {:.12}", pt.alpha);
    println!("  critical competitiveness   gamma_pt = {:.12}", pt.gamma_pt);
    println!();

    for gamma in [GAMMA_STAR, GAMMA_PRIME] {
        let gc = GammaConstants::compute(gamma).expect("crossings bracket");
        println!("crossing points at gamma = {gamma}");
        println!("  beta  (first root of M = H) = {:.12}", gc.beta);
        println!("  gamma point (root of H = K) = {:.12}", gc.gamma_point);
        println!("  H - M at the gamma point    = {:.8e}", gc.hm_gap);
        println!();
    }

    let iid = iid_prophet_constant().expect("fixed point converges");
    println!("iid benchmark constant        = {iid:.12}");
}
