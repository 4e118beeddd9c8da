//! Scratch: dissect the curvature cross-route error near r1.
use capflow::conformal::build_metric;
use capflow::profile::{build_profile, CapParams, ProfileFns};

fn main() {
    let m = build_metric(build_profile(&CapParams::with_a(5.0)).unwrap(), 0.0).unwrap();
    let p = m.profile().unwrap().clone();
    let r1 = m.r1();
    for dr in [-2e-3, -1e-3, -6.6e-4, -3e-4, -1e-4, 0.0, 1e-4, 3e-4, 1e-3] {
        let r = r1 + dr;
        let l = m.l_of_r(r);
        let k1 = p.curvature(l);
        let k2 = m.curvature_xy(r);
        // independent: K = -rho'' / rho at l, and Delta ln g = rho'' g / r identity
        let lng_pp_true = {
            // lng'' = d/dr [ g(rho'-1)/ (r g) * g ] ... use identity: lap = rho'' g / r
            let g = m.g(r);
            let lap = p.rho_pp(l) * g / r;
            let slope = g * m.g_prime(r) / (g * g);
            lap - slope / r
        };
        println!("r={r:.6} l={l:.6} k_prof={k1:+.8} k_xy={k2:+.8} diff={:+.3e} lngpp_true={lng_pp_true:+.6}", k2 - k1);
    }
    // slope accuracy check against identity slope = (rho'-1)/r
    println!("\nslope error vs identity:");
    for dr in [-1e-3, -1e-4, 1e-4, 1e-3] {
        let r = r1 + dr;
        let l = m.l_of_r(r);
        let slope_tab = m.g(r) * m.g_prime(r) / (m.g(r) * m.g(r));
        let slope_true = (p.rho_p(l) - 1.0) / r;
        println!("r={r:.6} slope_tab={slope_tab:+.10} true={slope_true:+.10} err={:+.3e}", slope_tab - slope_true);
    }
}
