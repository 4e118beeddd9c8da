//! Scratch diagnostics for integrator accuracy (not part of the test suite).
use capflow::conformal::build_metric;
use capflow::flow::{integrate, HamiltonianSpec, IntegrateOpts, SchemeOrder};
use capflow::profile::{build_profile, CapParams};
use std::sync::Arc;

fn main() {
    let m = Arc::new(build_metric(build_profile(&CapParams::with_a(5.0)).unwrap(), 0.0).unwrap());
    println!("r0={} r1={} r2={} g_inf={}", m.r0(), m.r1(), m.r2(), m.g_inf());

    // curvature route disagreement profile
    let p = m.profile().unwrap().clone();
    use capflow::profile::ProfileFns;
    let mut worst = (0.0f64, 0.0f64);
    for i in 1..8000 {
        let r = m.r2() * i as f64 / 8000.0;
        let k1 = p.curvature(m.l_of_r(r));
        let k2 = m.curvature_xy(r);
        if (k1 - k2).abs() > worst.0 {
            worst = ((k1 - k2).abs(), r);
        }
    }
    println!("curvature xy worst {:.3e} at r={}", worst.0, worst.1);

    let spec = HamiltonianSpec::conformal(m.clone());
    let g = m.factor_sq(0.9f64.hypot(0.13)).sqrt();
    let y0 = [-0.9, 0.13, g, 0.0];
    for order in [SchemeOrder::Order2, SchemeOrder::Order4, SchemeOrder::Order6, SchemeOrder::Order8] {
        let t0 = std::time::Instant::now();
        let opts = IntegrateOpts { order, sample_every: 10, detect_events: false };
        let tr = integrate(&spec, &y0, 50.0, 1e-3, &opts).unwrap();
        let fwd_last = tr.last_state().to_vec();
        let back = integrate(&spec, &fwd_last, -50.0, 1e-3, &opts).unwrap();
        let rev: f64 = back.last_state().iter().zip(y0.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("{order:?}: drift={:.3e} rev={:.3e} elapsed={:?}", tr.energy_drift(), rev, t0.elapsed());
    }
}
