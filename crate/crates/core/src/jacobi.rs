//! Perpendicular Jacobi fields and Riccati data along unit-speed geodesics of
//! the conformal metric: cap chords, conjugate-point detection, and the cone
//! mechanism (cone preservation through a cap passage and strict advance
//! between passages).
//!
//! The scalar normal component satisfies `J'' + K(t) J = 0` with `K` the
//! Gaussian curvature at the moving base point; `u = J'/J` solves the Riccati
//! equation `u' + u^2 + K = 0`. Blow-ups of `u` are zeros of `J` and are
//! always detected in the linear `(J, J')` chart.

use std::sync::Arc;

use thiserror::Error;

use crate::conformal::RadialMetric;
use crate::flow::hamiltonian::wrap;
use crate::flow::integrator::{SchemeOrder, Stepper};
use crate::flow::linearized::{step_linearized, TangentMatrix};
use crate::flow::{FlowError, HamiltonianSpec, HamiltonianSystem};

#[derive(Debug, Error)]
pub enum JacobiError {
    #[error("chord never reaches the inner parallel (turning radius {r_min})")]
    ChordTooShallow { r_min: f64 },
    #[error("clairaut fraction {0} outside the admissible range")]
    BadClairaut(f64),
    #[error("passage did not close within the time budget")]
    NoExit,
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Scalar perpendicular Jacobi data at a trace sample.
#[derive(Debug, Clone, Copy)]
pub struct TransverseState {
    pub t: f64,
    pub j: f64,
    pub jp: f64,
}

/// One sample row of a propagated chord: base radius, curvature, and the two
/// fundamental Jacobi solutions.
#[derive(Debug, Clone, Copy)]
pub struct ChordSample {
    pub t: f64,
    pub r: f64,
    pub k: f64,
    pub j_s: f64,
    pub jp_s: f64,
    pub j_c: f64,
    pub jp_c: f64,
}

/// A cap chord: geodesic segment through the rotationally symmetric region,
/// symmetric about its closest approach (t = 0).
#[derive(Debug, Clone)]
pub struct CapChord {
    /// Clairaut value of the chord.
    pub clairaut: f64,
    /// Turning (closest-approach) radius.
    pub r_min: f64,
    /// Half-time to the outer parallel `r1`.
    pub t1: f64,
    /// Half-time to the inner parallel `r0` (deep chords only).
    pub t2: Option<f64>,
    /// Samples over `[-T1, T1]` with `J_S` (odd seed) and `J_C` (even seed).
    pub samples: Vec<ChordSample>,
}

/// Tangent matrix of the scalar Jacobi pair: `[[0, 1], [-K(r), 0]]`.
struct JacobiBlock<'a> {
    metric: &'a RadialMetric,
}

impl TangentMatrix for JacobiBlock<'_> {
    fn block_dim(&self) -> usize {
        2
    }
    fn fill(&self, base_stage: &[f64], a: &mut [f64]) {
        let x = wrap(base_stage[0]);
        let y = wrap(base_stage[1]);
        let r = (x * x + y * y).sqrt();
        a[0] = 0.0;
        a[1] = 1.0;
        a[2] = -self.metric.curvature(r);
        a[3] = 0.0;
    }
}

/// Integrate the scalar Jacobi equation `J'' + k(t) J = 0` with a prescribed
/// curvature function, by the same midpoint/Cayley scheme as the flow-coupled
/// propagation. Returns samples at every step.
pub fn propagate_scalar<K: Fn(f64) -> f64>(
    k_of_t: K,
    init: (f64, f64),
    t_span: f64,
    h: f64,
) -> Vec<TransverseState> {
    let n = (t_span.abs() / h).round().max(1.0) as usize;
    let hs = if t_span >= 0.0 { h } else { -h };
    let mut v = [init.0, init.1];
    let mut out = Vec::with_capacity(n + 1);
    out.push(TransverseState {
        t: 0.0,
        j: v[0],
        jp: v[1],
    });
    for i in 0..n {
        let t_mid = (i as f64 + 0.5) * hs;
        let k = k_of_t(t_mid);
        // Cayley form of the midpoint rule for [[0,1],[-k,0]]
        let b = 0.5 * hs;
        let det = 1.0 + b * b * k;
        let (j, jp) = (v[0], v[1]);
        let nj = ((1.0 - b * b * k) * j + 2.0 * b * jp) / det;
        let njp = ((1.0 - b * b * k) * jp - 2.0 * b * k * j) / det;
        v = [nj, njp];
        out.push(TransverseState {
            t: (i + 1) as f64 * hs,
            j: v[0],
            jp: v[1],
        });
    }
    out
}

/// Solve `r g(r) = c` for the turning radius on a monotone branch.
fn turning_radius(metric: &RadialMetric, c: f64, lo: f64, hi: f64) -> f64 {
    let f = |r: f64| r * metric.g(r) - c;
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fa * fm <= 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Options for chord propagation.
#[derive(Debug, Clone, Copy)]
pub struct ChordOpts {
    pub h: f64,
    pub order: SchemeOrder,
}

impl Default for ChordOpts {
    fn default() -> Self {
        Self {
            h: 1e-3,
            order: SchemeOrder::Order6,
        }
    }
}

/// Propagate the base geodesic plus two Jacobi pairs from `y0` until the
/// radius reaches `stop_radius` (in the direction `sign` of time).
fn half_chord(
    metric: &Arc<RadialMetric>,
    y0: [f64; 4],
    js: (f64, f64),
    jc: (f64, f64),
    stop_radius: f64,
    sign: f64,
    opts: &ChordOpts,
) -> Result<Vec<ChordSample>, JacobiError> {
    let spec = HamiltonianSpec::conformal(metric.clone());
    let sys = HamiltonianSystem { spec: &spec };
    let stepper = Stepper::new(opts.order);
    let block = JacobiBlock { metric };
    let mut y = y0.to_vec();
    let mut vs = [js.0, js.1];
    let mut vc = [jc.0, jc.1];
    let mut out = Vec::new();
    let radius = |y: &[f64]| {
        let (x, yy) = (wrap(y[0]), wrap(y[1]));
        (x * x + yy * yy).sqrt()
    };
    let push = |t: f64, y: &[f64], vs: &[f64; 2], vc: &[f64; 2], out: &mut Vec<ChordSample>| {
        let r = radius(y);
        out.push(ChordSample {
            t,
            r,
            k: metric.curvature(r),
            j_s: vs[0],
            jp_s: vs[1],
            j_c: vc[0],
            jp_c: vc[1],
        });
    };
    push(0.0, &y, &vs, &vc, &mut out);
    let h = sign * opts.h;
    let max_steps = (60.0 / opts.h) as usize;
    let mut crossed = false;
    for i in 1..=max_steps {
        {
            let mut blocks: [&mut [f64]; 2] = [&mut vs, &mut vc];
            step_linearized(&stepper, &sys, &block, &mut y, &mut blocks, h)
                .map_err(FlowError::from)?;
        }
        push(i as f64 * h, &y, &vs, &vc, &mut out);
        if radius(&y) >= stop_radius {
            crossed = true;
            break;
        }
    }
    if !crossed {
        return Err(JacobiError::NoExit);
    }
    Ok(out)
}

/// Linear-interpolation time at which the radius crosses `target`.
fn crossing_time(samples: &[ChordSample], target: f64) -> Option<f64> {
    for w in samples.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.r - target) * (b.r - target) <= 0.0 && a.r != b.r {
            let f = (target - a.r) / (b.r - a.r);
            return Some(a.t + f * (b.t - a.t));
        }
    }
    None
}

/// Build a cap chord by Clairaut fraction: `c = frac * rho(l1)` with
/// `frac in [0, 1)` turns inside the core and defines a deep chord
/// (endpoints on `C_{r1}`, reaching `r <= r0`).
pub fn build_chord(
    metric: &Arc<RadialMetric>,
    clairaut_frac: f64,
    opts: &ChordOpts,
) -> Result<CapChord, JacobiError> {
    if !(0.0..1.0).contains(&clairaut_frac) {
        return Err(JacobiError::BadClairaut(clairaut_frac));
    }
    let profile = metric.profile().expect("cap metric required");
    let rho_l1 = 0.4 * profile.l1();
    let c = clairaut_frac * rho_l1;
    let r_min = if c == 0.0 {
        0.0
    } else {
        turning_radius(metric, c, 1e-12, metric.r0())
    };
    // start at the turning point (r_min, 0) with tangential unit covector;
    // for the radial chord (c = 0) start at the center moving along x
    let y0 = if c == 0.0 {
        [0.0, 0.0, metric.factor_sq(0.0).sqrt(), 0.0]
    } else {
        [r_min, 0.0, 0.0, metric.factor_sq(r_min).sqrt()]
    };
    // J_S: odd seed (J = 0, J' = 1); J_C: even seed (J = 1, J' = 0)
    let fwd = half_chord(metric, y0, (0.0, 1.0), (1.0, 0.0), metric.r1(), 1.0, opts)?;
    let bwd = half_chord(metric, y0, (0.0, 1.0), (1.0, 0.0), metric.r1(), -1.0, opts)?;
    let t1 = crossing_time(&fwd, metric.r1()).ok_or(JacobiError::NoExit)?;
    let t2 = crossing_time(&fwd, metric.r0());
    let mut samples: Vec<ChordSample> = bwd.into_iter().skip(1).rev().collect();
    samples.extend(fwd);
    Ok(CapChord {
        clairaut: c,
        r_min,
        t1,
        t2,
        samples,
    })
}

impl CapChord {
    /// Max curvature asymmetry `|K(t) - K(-t)|` over matched samples.
    pub fn curvature_asymmetry(&self) -> f64 {
        let n = self.samples.len();
        let mut worst = 0.0_f64;
        for i in 0..n / 2 {
            worst = worst.max((self.samples[i].k - self.samples[n - 1 - i].k).abs());
        }
        worst
    }

    /// Samples of the forward half `[0, T1]`.
    pub fn samples_forward(&self) -> &[ChordSample] {
        let mid = self.samples.len() / 2;
        &self.samples[mid..]
    }

    /// Wronskian drift of the (J_S, J_C) pair over the whole chord.
    pub fn wronskian_drift(&self) -> f64 {
        let w = |s: &ChordSample| s.j_s * s.jp_c - s.jp_s * s.j_c;
        let w0 = w(&self.samples[self.samples.len() / 2]);
        self.samples
            .iter()
            .fold(0.0_f64, |acc, s| acc.max((w(s) - w0).abs()))
    }
}

/// Zeros of a sampled scalar component located by cubic-Hermite bisection
/// (the derivative samples are available, so each bracket refines cleanly).
pub fn riccati_events(ts: &[f64], js: &[f64], jps: &[f64]) -> Vec<f64> {
    let mut zeros = Vec::new();
    for i in 1..ts.len() {
        let (j0, j1) = (js[i - 1], js[i]);
        if j0 == 0.0 {
            if i == 1 {
                zeros.push(ts[0]);
            }
            continue;
        }
        if j0 * j1 < 0.0 {
            let h = ts[i] - ts[i - 1];
            let (d0, d1) = (jps[i - 1], jps[i]);
            let eval = |s: f64| {
                let s2 = s * s;
                let s3 = s2 * s;
                (2.0 * s3 - 3.0 * s2 + 1.0) * j0
                    + (s3 - 2.0 * s2 + s) * h * d0
                    + (-2.0 * s3 + 3.0 * s2) * j1
                    + (s3 - s2) * h * d1
            };
            let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
            let mut flo = j0;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let fm = eval(mid);
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            zeros.push(ts[i - 1] + 0.5 * (lo + hi) * h);
        }
    }
    zeros
}

/// Report on `u_S = J_S'/J_S` over a deep chord: residuals at the
/// parallel-crossing times and the count of interior zeros of `J_S`.
#[derive(Debug, Clone)]
pub struct SymmetricFieldReport {
    pub u_s_t1: f64,
    pub u_s_t2: f64,
    pub extra_zeros: usize,
    pub t1: f64,
    pub t2: f64,
}

/// Evaluate `(J, J')` of a sampled component at time `t` by Hermite
/// interpolation between the straddling samples.
fn eval_component(
    samples: &[ChordSample],
    t: f64,
    pick: impl Fn(&ChordSample) -> (f64, f64),
) -> (f64, f64) {
    let mut i = 1;
    while i < samples.len() - 1 && samples[i].t < t {
        i += 1;
    }
    let (a, b) = (&samples[i - 1], &samples[i]);
    let h = b.t - a.t;
    let s = ((t - a.t) / h).clamp(0.0, 1.0);
    let (j0, d0) = pick(a);
    let (j1, d1) = pick(b);
    let s2 = s * s;
    let s3 = s2 * s;
    let j = (2.0 * s3 - 3.0 * s2 + 1.0) * j0
        + (s3 - 2.0 * s2 + s) * h * d0
        + (-2.0 * s3 + 3.0 * s2) * j1
        + (s3 - s2) * h * d1;
    let jp = d0 + (d1 - d0) * s;
    (j, jp)
}

/// Check structure (A) on a deep chord: `u_S` residuals at `T1`, `T2` and
/// interior-zero count of `J_S` away from `t = 0`.
pub fn check_symmetric_field(chord: &CapChord) -> Result<SymmetricFieldReport, JacobiError> {
    let t2 = chord.t2.ok_or(JacobiError::ChordTooShallow {
        r_min: chord.r_min,
    })?;
    let fwd = chord.samples_forward();
    let pick = |s: &ChordSample| (s.j_s, s.jp_s);
    let at = |t: f64| {
        let (j, jp) = eval_component(fwd, t, pick);
        jp / j
    };
    let ts: Vec<f64> = fwd.iter().map(|s| s.t).collect();
    let js: Vec<f64> = fwd.iter().map(|s| s.j_s).collect();
    let jps: Vec<f64> = fwd.iter().map(|s| s.jp_s).collect();
    // J_S(0) = 0 is the seeded zero; count zeros strictly inside (0, T1]
    let zeros = riccati_events(&ts, &js, &jps);
    let extra = zeros.iter().filter(|&&z| z > 1e-9 && z <= chord.t1).count();
    Ok(SymmetricFieldReport {
        u_s_t1: at(chord.t1),
        u_s_t2: at(t2),
        extra_zeros: extra,
        t1: chord.t1,
        t2,
    })
}

/// First blow-up time of `u_C` (first zero of `J_C`) on the forward half.
pub fn first_conjugate_time(chord: &CapChord) -> Option<f64> {
    let fwd = chord.samples_forward();
    let ts: Vec<f64> = fwd.iter().map(|s| s.t).collect();
    let js: Vec<f64> = fwd.iter().map(|s| s.j_c).collect();
    let jps: Vec<f64> = fwd.iter().map(|s| s.jp_c).collect();
    riccati_events(&ts, &js, &jps)
        .into_iter()
        .find(|&z| z > 0.0)
}

/// Outcome of carrying a cone-boundary (or interior) solution through one
/// full passage of the rotationally symmetric region.
#[derive(Debug, Clone, Copy)]
pub struct ConeTransit {
    pub clairaut: f64,
    pub r_entry: f64,
    pub transit_time: f64,
    pub j_exit: f64,
    pub jp_exit: f64,
    /// `J' J` at exit; the cone condition is `>= 0`.
    pub cone_product: f64,
    /// `u = J'/J` at exit (may be large near a conjugate point).
    pub u_exit: f64,
    /// Euclidean norm growth of `(J, J')` over the passage.
    pub growth: f64,
}

/// Carry the Jacobi solution with `u(entry) = u_entry` (seed `J = 1`,
/// `J' = u_entry`) through a passage entering at radius `r_entry` with the
/// given Clairaut value, until the orbit exits back through `r_entry`.
pub fn cone_transit(
    metric: &Arc<RadialMetric>,
    c: f64,
    r_entry: f64,
    u_entry: f64,
    opts: &ChordOpts,
) -> Result<ConeTransit, JacobiError> {
    let g = metric.factor_sq(r_entry).sqrt();
    let sin_th = c / (r_entry * g);
    if !(0.0..=1.0).contains(&sin_th) {
        return Err(JacobiError::BadClairaut(sin_th));
    }
    let cos_th = (1.0 - sin_th * sin_th).sqrt();
    // entry at (r_entry, 0), momentum tilted inward by the Clairaut angle
    let y0 = [r_entry, 0.0, -g * cos_th, g * sin_th];
    let samples = half_chord(
        metric,
        y0,
        (1.0, u_entry),
        (1.0, 0.0),
        r_entry,
        1.0,
        opts,
    )?;
    let t_exit = crossing_time(&samples[1..], r_entry).unwrap_or(samples.last().unwrap().t);
    let (j, jp) = eval_component(&samples, t_exit, |s| (s.j_s, s.jp_s));
    let norm0 = (1.0 + u_entry * u_entry).sqrt();
    Ok(ConeTransit {
        clairaut: c,
        r_entry,
        transit_time: t_exit,
        j_exit: j,
        jp_exit: jp,
        cone_product: j * jp,
        u_exit: jp / j,
        growth: (j * j + jp * jp).sqrt() / norm0,
    })
}

/// Strict-advance measurement: from the cone boundary `u = 0` at a first
/// cap entry, the value of `u` at the second entry.
#[derive(Debug, Clone, Copy)]
pub struct StrictAdvance {
    pub margin: f64,
    pub crossings: usize,
    pub elapsed: f64,
}

pub fn strict_advance(
    metric: &Arc<RadialMetric>,
    start: [f64; 4],
    horizon: f64,
    opts: &ChordOpts,
) -> Result<StrictAdvance, JacobiError> {
    let spec = HamiltonianSpec::conformal(metric.clone());
    let sys = HamiltonianSystem { spec: &spec };
    let stepper = Stepper::new(opts.order);
    let block = JacobiBlock { metric };
    let radius = |y: &[f64]| {
        let (x, yy) = (wrap(y[0]), wrap(y[1]));
        (x * x + yy * yy).sqrt()
    };
    let r1 = metric.r1();
    let mut y = start.to_vec();
    let mut v = [1.0, 0.0];
    let mut inside = radius(&y) < r1;
    let mut armed = false;
    let mut crossings = 0usize;
    let n = (horizon / opts.h) as usize;
    for i in 0..n {
        let prev_inside = inside;
        {
            let mut blocks: [&mut [f64]; 1] = [&mut v];
            step_linearized(&stepper, &sys, &block, &mut y, &mut blocks, opts.h)
                .map_err(FlowError::from)?;
        }
        inside = radius(&y) < r1;
        if inside && !prev_inside {
            crossings += 1;
            if !armed {
                // seed the cone boundary at the first entry
                v = [1.0, 0.0];
                armed = true;
            } else {
                let margin = v[1] / v[0];
                return Ok(StrictAdvance {
                    margin,
                    crossings,
                    elapsed: (i + 1) as f64 * opts.h,
                });
            }
        }
    }
    Err(JacobiError::NoExit)
}
