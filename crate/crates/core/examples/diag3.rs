//! Scratch: Riccati residual profile along a deep chord (5-point stencil).
use capflow::conformal::build_metric;
use capflow::jacobi::{build_chord, ChordOpts};
use capflow::profile::{build_profile, CapParams};
use std::sync::Arc;

fn main() {
    let m = Arc::new(build_metric(build_profile(&CapParams::with_a(5.0)).unwrap(), 0.0).unwrap());
    let chord = build_chord(&m, 0.5, &ChordOpts::default()).unwrap();
    let fwd = chord.samples_forward();
    let h = fwd[1].t - fwd[0].t;
    let mut worst_core = 0.0f64;
    let mut worst_all = 0.0f64;
    for i in 2..fwd.len() - 2 {
        let ok = (i - 2..=i + 2).all(|k| fwd[k].j_c.abs() >= 0.2);
        if !ok { continue; }
        let u = |k: usize| fwd[k].jp_c / fwd[k].j_c;
        let du = (-u(i + 2) + 8.0 * u(i + 1) - 8.0 * u(i - 1) + u(i - 2)) / (12.0 * h);
        let res = (du + u(i) * u(i) + fwd[i].k).abs();
        worst_all = worst_all.max(res);
        if fwd[i].r <= m.r0() { worst_core = worst_core.max(res); }
    }
    println!("5pt residual: core {:.3e}  all {:.3e}", worst_core, worst_all);
    // growth factors for cone-interior data
    use capflow::jacobi::cone_transit;
    for u0 in [0.0, 0.5, 1.0] {
        for frac in [0.1, 0.5, 0.9] {
            let c = frac * m.r2() * m.g_inf();
            let t = cone_transit(&m, c, m.r2() * (1.0 - 1e-9), u0, &ChordOpts::default()).unwrap();
            println!("u0={u0} frac={frac}: u_exit={:+.4} growth={:.4} JJ'={:+.3e} T={:.3}", t.u_exit, t.growth, t.cone_product, t.transit_time);
        }
    }
}
