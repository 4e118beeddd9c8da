//! Conformal torus metric from a radial profile: solve the singular relation
//! `dr/r = dl/rho(l)` for the mutually inverse maps `r(l)`/`l(r)`, define the
//! conformal factor `g(r) = l'(r)`, and certify the cap structure (two
//! geodesic parallels, positive core curvature, negative collar, flat tail).
//!
//! The solve writes `r(l) = l * exp(Lambda(l))` with
//! `Lambda(l) = int_0^l (1/rho(s) - 1/s) ds`; on the quintic core the
//! integrand reduces to the cancellation-free closed form
//! `5 a s (1 - 2 a s^2) / (1 - 5 a s^2 + 10 a^2 s^4)`, and beyond `l2` the
//! relation integrates in closed form because `l - rho(l)` is constant.
//!
//! An optional uniform shift `delta` models the family `(g^2 + delta)(dx^2+dy^2)`;
//! all evaluators take it into account through the squared factor.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interp::{HermiteTable, UniformHermite};
use crate::profile::{Profile, ProfileDoc, ProfileFns};
use crate::quad::gauss8;
use crate::report::{CertificateReport, CheckItem};

/// Largest admissible `r2`: the cap disc must sit inside the fundamental
/// domain with margin.
pub const MAX_CAP_RADIUS: f64 = 0.95;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("singular radial solve: {0}")]
    SingularityFailure(String),
    #[error("cap too large: r2 = {r2} >= {max}", max = MAX_CAP_RADIUS)]
    CapTooLarge { r2: f64 },
    #[error("invalid conformal shift delta = {delta}: must exceed -{min_gsq}")]
    InvalidShift { delta: f64, min_gsq: f64 },
    #[error("invalid metric document: {0}")]
    BadDocument(String),
}

/// The monotone coordinate change between geodesic radius `l` and conformal
/// radius `r`, with its log-correction table `Lambda`.
#[derive(Debug, Clone)]
pub struct RadialMap {
    l2: f64,
    r2: f64,
    rho_l2: f64,
    /// (Lambda, tail) Hermite nodes over l in [0, l2].
    tab_lam: HermiteTable,
    /// r values at the same nodes, for inversion bracketing.
    r_nodes: Vec<f64>,
    l_nodes: Vec<f64>,
}

/// Integrand of the log correction, `1/rho - 1/l`, evaluated without
/// cancellation on the quintic core.
fn tail<P: ProfileFns + ?Sized>(p: &P, s: f64) -> f64 {
    let (_, l1, _) = p.markers();
    let a = p.a();
    if s <= l1 {
        let s2 = s * s;
        5.0 * a * s * (1.0 - 2.0 * a * s2) / (1.0 - 5.0 * a * s2 + 10.0 * a * a * s2 * s2)
    } else {
        let rho = p.rho(s);
        (s - rho) / (s * rho)
    }
}

/// Solve `dr/r = dl/rho` for the strictly increasing map `r(l)` with
/// `r(l)/l -> 1` as `l -> 0`.
pub fn solve_r_of_l<P: ProfileFns + ?Sized>(p: &P, grid_n: usize) -> Result<RadialMap, MetricError> {
    let (_, l1, l2) = p.markers();
    // A profile with rho'(0) != 1 makes the integrand unbounded at 0.
    let probe = tail(p, 1e-9 * l1);
    if !probe.is_finite() || probe.abs() > 1.0 {
        return Err(MetricError::SingularityFailure(format!(
            "tail({:.1e}) = {probe}",
            1e-9 * l1
        )));
    }

    // Core mesh graded toward l1: the curvature derivative grows like
    // 1/rho^2 there and the chart-side cross-checks need second-derivative
    // accuracy of the tabulated g.
    let n_core = (grid_n / 2).max(1024);
    let n_trans = grid_n.max(1024);
    let mut l_nodes = Vec::with_capacity(3 * n_core + n_trans + 2);
    for &(a, b) in &[(0.0, 0.8), (0.8, 0.98), (0.98, 1.0)] {
        for i in 0..n_core {
            l_nodes.push(l1 * (a + (b - a) * i as f64 / n_core as f64));
        }
    }
    l_nodes.push(l1);
    for i in 1..=n_trans {
        l_nodes.push(l1 + (l2 - l1) * i as f64 / n_trans as f64);
    }
    let m = l_nodes.len();
    let mut lam = vec![0.0; m];
    let mut tails = vec![0.0; m];
    tails[0] = 0.0;
    for i in 1..m {
        let (lo, hi) = (l_nodes[i - 1], l_nodes[i]);
        lam[i] = lam[i - 1] + gauss8(&|s| tail(p, s), lo, hi);
        tails[i] = tail(p, hi);
    }
    let r_nodes: Vec<f64> = l_nodes
        .iter()
        .zip(lam.iter())
        .map(|(&l, &v)| l * v.exp())
        .collect();
    let r2 = r_nodes[m - 1];
    Ok(RadialMap {
        l2,
        r2,
        rho_l2: p.rho(l2),
        tab_lam: HermiteTable::new(l_nodes.clone(), lam, tails),
        r_nodes,
        l_nodes,
    })
}

impl RadialMap {
    pub fn r2(&self) -> f64 {
        self.r2
    }

    /// `r(l) = l exp(Lambda(l))`, conical closed form beyond `l2`.
    pub fn r_of_l(&self, l: f64) -> f64 {
        if l <= 0.0 {
            return 0.0;
        }
        if l >= self.l2 {
            // rho(l) = rho(l2) + (l - l2); dr/r = dl/rho integrates to
            // r = r2 * rho(l)/rho(l2).
            return self.r2 * (self.rho_l2 + (l - self.l2)) / self.rho_l2;
        }
        l * self.tab_lam.eval(l).exp()
    }

    /// Log correction `Lambda(l) = ln(r(l)/l)`.
    pub fn log_correction(&self, l: f64) -> f64 {
        if l <= 0.0 {
            return 0.0;
        }
        if l >= self.l2 {
            return (self.r_of_l(l) / l).ln();
        }
        self.tab_lam.eval(l)
    }

    /// Inverse map, Newton-polished to ~1e-14.
    pub fn l_of_r(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r >= self.r2 {
            return self.l2 + self.rho_l2 * (r - self.r2) / self.r2;
        }
        // bracket by the precomputed nodes
        let idx = match self
            .r_nodes
            .binary_search_by(|v| v.partial_cmp(&r).unwrap())
        {
            Ok(i) => return self.l_nodes[i],
            Err(i) => i,
        };
        let (lo, hi) = (self.l_nodes[idx - 1], self.l_nodes[idx]);
        let (rlo, rhi) = (self.r_nodes[idx - 1], self.r_nodes[idx]);
        let mut l = lo + (hi - lo) * (r - rlo) / (rhi - rlo);
        // Newton on F(l) = r(l) - r with dr/dl = r(l) (1/l + tail(l)); the map
        // is smooth and monotone within the cell, so a clamped iteration from
        // the chord seed converges quadratically.
        for _ in 0..12 {
            let rl = self.r_of_l(l);
            let drdl = rl * (1.0 / l + self.tab_lam.deriv(l));
            let mut next = l - (rl - r) / drdl;
            if !(next >= lo && next <= hi) || !next.is_finite() {
                next = if rl > r { 0.5 * (lo + l) } else { 0.5 * (l + hi) };
            }
            let moved = (next - l).abs();
            l = next;
            if moved <= 1e-16 * l.max(1e-9) {
                break;
            }
        }
        l
    }
}

/// Conformal torus metric `(g(r)^2 + delta)(dx^2 + dy^2)` built from a profile.
#[derive(Debug, Clone)]
pub struct RadialMetric {
    profile: Option<Profile>,
    map: Option<RadialMap>,
    delta: f64,
    r0: f64,
    r1: f64,
    r2: f64,
    g_inf: f64,
    /// (g, g') nodes over r in [0, r2], graded toward r1.
    tab_g: HermiteTable,
    /// Uniform (g^2, (g^2)') table over [0, r2]: O(1) flow hot path.
    tab_w: UniformHermite,
    /// Uniform base-metric curvature (K, dK/dr) table over [0, r2].
    tab_k: UniformHermite,
}

/// Cells of the uniform hot-path tables.
const FAST_TABLE_CELLS: usize = 32_768;

/// Build the metric tables from a certified profile. `delta` shifts the
/// squared conformal factor uniformly; it must keep the factor positive.
pub fn build_metric(profile: Profile, delta: f64) -> Result<RadialMetric, MetricError> {
    let map = solve_r_of_l(&profile, 4096)?;
    let r2 = map.r2();
    if r2 >= MAX_CAP_RADIUS {
        return Err(MetricError::CapTooLarge { r2 });
    }
    let g_inf = profile.rho_l2() / r2;
    if delta <= -(g_inf * g_inf) {
        return Err(MetricError::InvalidShift {
            delta,
            min_gsq: g_inf * g_inf,
        });
    }
    let r0 = map.r_of_l(profile.l0());
    let r1 = map.r_of_l(profile.l1());

    let m = map.l_nodes.len();
    let mut g = vec![0.0; m];
    let mut gp = vec![0.0; m];
    for i in 0..m {
        let l = map.l_nodes[i];
        let r = map.r_nodes[i];
        let (gi, gpi) = if i == 0 {
            (1.0, 0.0)
        } else {
            let gi = profile.rho(l) / r;
            (gi, gi * (profile.rho_p(l) - 1.0) / r)
        };
        g[i] = gi;
        gp[i] = gpi;
    }
    let r_nodes = map.r_nodes.clone();
    let tab_g = HermiteTable::new(r_nodes, g, gp);
    // uniform hot-path tables: exact node data through l(r)
    let node = |r: f64| -> (f64, f64, f64, f64) {
        if r == 0.0 {
            return (1.0, 0.0, profile.curvature(0.0), 0.0);
        }
        let l = map.l_of_r(r);
        let gi = profile.rho(l) / r;
        let gpi = gi * (profile.rho_p(l) - 1.0) / r;
        (gi, gpi, profile.curvature(l), profile.curvature_prime(l) * gi)
    };
    let tab_w = UniformHermite::resample(
        |r| {
            let (gi, gpi, _, _) = node(r);
            (gi * gi, 2.0 * gi * gpi)
        },
        0.0,
        r2,
        FAST_TABLE_CELLS,
    );
    let tab_k = UniformHermite::resample(
        |r| {
            let (_, _, k, kp) = node(r);
            (k, kp)
        },
        0.0,
        r2,
        FAST_TABLE_CELLS,
    );
    Ok(RadialMetric {
        profile: Some(profile),
        map: Some(map),
        delta,
        r0,
        r1,
        r2,
        g_inf,
        tab_g,
        tab_w,
        tab_k,
    })
}

impl RadialMetric {
    /// The flat torus (no cap): `g == 1`, zero curvature, `r0 = r1 = r2 = 0`.
    pub fn flat() -> Self {
        let xs = vec![0.0, 1.0];
        RadialMetric {
            profile: None,
            map: None,
            delta: 0.0,
            r0: 0.0,
            r1: 0.0,
            r2: 0.0,
            g_inf: 1.0,
            tab_g: HermiteTable::new(xs, vec![1.0, 1.0], vec![0.0, 0.0]),
            tab_w: UniformHermite::resample(|_| (1.0, 0.0), 0.0, 1.0, 1),
            tab_k: UniformHermite::resample(|_| (0.0, 0.0), 0.0, 1.0, 1),
        }
    }

    pub fn is_flat(&self) -> bool {
        self.profile.is_none()
    }

    pub fn profile(&self) -> Option<&Profile> {
        self.profile.as_ref()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn r0(&self) -> f64 {
        self.r0
    }
    pub fn r1(&self) -> f64 {
        self.r1
    }
    pub fn r2(&self) -> f64 {
        self.r2
    }
    /// Base conformal factor for `r >= r2` (shift excluded).
    pub fn g_inf(&self) -> f64 {
        self.g_inf
    }

    /// Return a copy with a different uniform shift.
    pub fn with_delta(&self, delta: f64) -> Result<Self, MetricError> {
        if delta <= -(self.g_inf * self.g_inf) {
            return Err(MetricError::InvalidShift {
                delta,
                min_gsq: self.g_inf * self.g_inf,
            });
        }
        let mut m = self.clone();
        m.delta = delta;
        Ok(m)
    }

    /// Base factor `g(r)` (shift excluded).
    pub fn g(&self, r: f64) -> f64 {
        if r >= self.r2 {
            self.g_inf
        } else {
            self.tab_g.eval(r)
        }
    }

    pub fn g_prime(&self, r: f64) -> f64 {
        if r >= self.r2 {
            0.0
        } else {
            self.tab_g.deriv(r)
        }
    }

    /// Squared conformal factor including the shift: `g(r)^2 + delta`.
    pub fn factor_sq(&self, r: f64) -> f64 {
        if r >= self.r2 {
            self.g_inf * self.g_inf + self.delta
        } else {
            self.tab_w.eval(r) + self.delta
        }
    }

    /// Radial derivative of the squared factor (shift-independent).
    pub fn factor_sq_prime(&self, r: f64) -> f64 {
        if r >= self.r2 {
            0.0
        } else {
            self.tab_w.deriv(r)
        }
    }

    /// Second radial derivative of the squared factor.
    pub fn factor_sq_prime2(&self, r: f64) -> f64 {
        if r >= self.r2 {
            0.0
        } else {
            self.tab_w.eval_all(r).2
        }
    }

    /// Squared factor with first and second radial derivatives in one lookup.
    #[inline]
    pub fn factor_sq_all(&self, r: f64) -> (f64, f64, f64) {
        if r >= self.r2 {
            (self.g_inf * self.g_inf + self.delta, 0.0, 0.0)
        } else {
            let (w, wp, wpp) = self.tab_w.eval_all(r);
            (w + self.delta, wp, wpp)
        }
    }

    /// Conformal factor of the shifted metric, `sqrt(g^2 + delta)`.
    pub fn factor(&self, r: f64) -> f64 {
        self.factor_sq(r).sqrt()
    }

    pub fn r_of_l(&self, l: f64) -> f64 {
        match &self.map {
            Some(m) => m.r_of_l(l),
            None => l,
        }
    }

    pub fn l_of_r(&self, r: f64) -> f64 {
        match &self.map {
            Some(m) => m.l_of_r(r),
            None => r,
        }
    }

    /// Gaussian curvature of the (possibly shifted) metric at radius `r`.
    ///
    /// For the base metric this reads the profile-side table
    /// `K = -rho''(l(r))/rho(l(r))`; for shifted metrics it falls back to the
    /// conformal Laplacian route.
    pub fn curvature(&self, r: f64) -> f64 {
        if r >= self.r2 {
            return 0.0;
        }
        if self.delta == 0.0 {
            self.tab_k.eval(r)
        } else {
            self.curvature_xy(r)
        }
    }

    /// Curvature via the conformal Laplacian `K = -(Delta ln G)/G^2` with
    /// `G^2 = g^2 + delta`, assembled from the tabulated chart data `(g, g')`
    /// alone. The derivative of the slope `(ln G)' = g g'/(g^2+delta)` is
    /// taken by a local finite-difference fit through exact table nodes, so
    /// the route never touches the profile curvature formula.
    pub fn curvature_xy(&self, r: f64) -> f64 {
        if r >= self.r2 || self.r2 <= 0.0 {
            return 0.0;
        }
        let (xs, gs, gps) = self.tab_g.nodes();
        let n = xs.len();
        // window of 6 nodes around r (slope is odd: extend through 0 by sign)
        let idx = xs.partition_point(|&x| x < r);
        let lo = idx.saturating_sub(3).min(n.saturating_sub(6));
        let mut xw = [0.0; 6];
        let mut sw = [0.0; 6];
        for k in 0..6 {
            let i = lo + k;
            xw[k] = xs[i];
            sw[k] = gs[i] * gps[i] / (gs[i] * gs[i] + self.delta);
        }
        let slope_r = fornberg_eval(&xw, &sw, r, 0);
        let lng_pp = fornberg_eval(&xw, &sw, r, 1);
        let lap = if r < 1e-7 * self.r2 {
            2.0 * lng_pp
        } else {
            lng_pp + slope_r / r
        };
        let gsq = {
            let g = self.tab_g.eval(r);
            g * g + self.delta
        };
        -lap / gsq
    }

    /// Curvature at a Cartesian point of the fundamental domain.
    pub fn curvature_at(&self, x: f64, y: f64) -> f64 {
        self.curvature((x * x + y * y).sqrt())
    }
}

/// Value (`order = 0`) or first derivative (`order = 1`) at `x` of the
/// interpolating polynomial through `(xs, ys)` (Fornberg weights).
fn fornberg_eval(xs: &[f64], ys: &[f64], x: f64, order: usize) -> f64 {
    let n = xs.len();
    let m = order;
    // Fornberg's recursion for finite-difference weights at arbitrary nodes
    let mut c = vec![0.0; n * (m + 1)];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x;
    c[0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i * (m + 1) + k] =
                        c1 * (k as f64 * c[(i - 1) * (m + 1) + k - 1] - c5 * c[(i - 1) * (m + 1) + k])
                            / c2;
                }
                c[i * (m + 1)] = -c1 * c5 * c[(i - 1) * (m + 1)] / c2;
            }
            for k in (1..=mn).rev() {
                c[j * (m + 1) + k] =
                    (c4 * c[j * (m + 1) + k] - k as f64 * c[j * (m + 1) + k - 1]) / c3;
            }
            c[j * (m + 1)] = c4 * c[j * (m + 1)] / c3;
        }
        c1 = c2;
    }
    (0..n).map(|i| c[i * (m + 1) + m] * ys[i]).sum()
}

/// Find roots of `phi(r) = 1 + r (ln G)'(r)` on `(0, r2)`: the geodesic
/// parallels of the (possibly shifted) metric. `phi == d rho_g / d l` in the
/// polar chart of that metric.
fn find_parallels(m: &RadialMetric, samples: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    if m.r2 <= 0.0 {
        return roots;
    }
    let phi = |r: f64| {
        let g = m.tab_g.eval(r);
        let gp = m.tab_g.deriv(r);
        1.0 + r * g * gp / (g * g + m.delta)
    };
    let mut prev_r = m.r2 * 1e-6;
    let mut prev = phi(prev_r);
    for i in 1..=samples {
        let r = m.r2 * i as f64 / samples as f64;
        let v = phi(r);
        if prev == 0.0 {
            roots.push(prev_r);
        } else if prev * v < 0.0 {
            let (mut lo, mut hi) = (prev_r, r);
            let (mut flo, _fhi) = (prev, v);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = phi(mid);
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_r = r;
        prev = v;
    }
    roots
}

/// Certify the cap structure of a metric: two geodesic parallels, positive
/// curvature through the inner one, negative at the outer one, strictly
/// decreasing center-to-boundary, nonpositive on the collar, flat outside.
pub fn dbg_certificate(m: &RadialMetric) -> CertificateReport {
    let mut rep = CertificateReport::new("metric");
    let parallels = find_parallels(m, 4000);
    rep.push(CheckItem::predicate(
        "two geodesic parallels",
        parallels.len() == 2,
        parallels.len() as f64,
    ));
    if parallels.len() != 2 {
        return rep;
    }
    let (p0, p1) = (parallels[0], parallels[1]);
    // geodesic-parallel residual in the polar chart of the shifted metric
    let slope = |r: f64| {
        let g = m.tab_g.eval(r);
        let gp = m.tab_g.deriv(r);
        1.0 + r * g * gp / (g * g + m.delta)
    };
    rep.push(CheckItem::abs("parallel residual at r0", slope(p0), 1e-9));
    rep.push(CheckItem::abs("parallel residual at r1", slope(p1), 1e-9));

    let mut min_k_core = f64::INFINITY;
    for i in 0..=1500 {
        let r = p0 * i as f64 / 1500.0;
        min_k_core = min_k_core.min(m.curvature(r));
    }
    rep.push(CheckItem::predicate(
        "K > 0 on {r <= r0}",
        min_k_core > 0.0,
        min_k_core,
    ));
    let k1 = m.curvature(p1);
    rep.push(CheckItem::predicate("K(r1) < 0", k1 < 0.0, k1));

    let mut max_dk = f64::NEG_INFINITY;
    for i in 0..1500 {
        let a = p1 * i as f64 / 1500.0;
        let b = p1 * (i + 1) as f64 / 1500.0;
        max_dk = max_dk.max(m.curvature(b) - m.curvature(a));
    }
    rep.push(CheckItem::predicate(
        "K decreasing on [0, r1]",
        max_dk < 0.0,
        max_dk,
    ));

    // the collar curvature vanishes to all orders at r2, so the sign check
    // carries the finite-difference noise floor of the chart route
    let mut max_k_collar = f64::NEG_INFINITY;
    for i in 1..1500 {
        let r = p1 + (m.r2 - p1) * i as f64 / 1500.0;
        max_k_collar = max_k_collar.max(m.curvature(r));
    }
    rep.push(CheckItem::predicate(
        "K <= 0 on (r1, r2)",
        max_k_collar <= 1e-6,
        max_k_collar,
    ));
    let mut max_k_out = 0.0_f64;
    for i in 0..=200 {
        let r = m.r2 + (1.0 - m.r2).max(0.2) * i as f64 / 200.0;
        max_k_out = max_k_out.max(m.curvature(r).abs());
    }
    rep.push(CheckItem::abs("K = 0 outside the cap", max_k_out, 1e-12));
    rep
}

/// Scan shifts `delta` symmetric about zero; return the largest magnitude for
/// which the certificate passes on both sides, with per-delta reports.
pub fn certified_shift_range(
    m: &RadialMetric,
    deltas: &[f64],
) -> (f64, Vec<(f64, CertificateReport)>) {
    let mut reports = Vec::new();
    let mut best = 0.0_f64;
    for &d in deltas {
        let (rep, ok) = match m.with_delta(d) {
            Ok(shifted) => {
                let rep = dbg_certificate(&shifted);
                let ok = rep.passed();
                (rep, ok)
            }
            Err(_) => (CertificateReport::new("metric"), false),
        };
        if ok {
            let partner = reports
                .iter()
                .any(|(dd, r): &(f64, CertificateReport)| *dd == -d && r.passed());
            if d == 0.0 || partner || !deltas.contains(&-d) {
                best = best.max(d.abs());
            }
        }
        reports.push((d, rep));
    }
    (best, reports)
}

/// Serialized form: profile document plus the metric grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricDoc {
    pub schema: String,
    pub a: f64,
    pub delta: f64,
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub g_inf: f64,
    pub profile: ProfileDoc,
    /// Rows (r, g, g') on a coarse export grid.
    pub grid: Vec<[f64; 3]>,
}

impl RadialMetric {
    pub fn to_doc(&self) -> Result<MetricDoc, MetricError> {
        let profile = self
            .profile
            .as_ref()
            .ok_or_else(|| MetricError::BadDocument("flat metric has no profile".into()))?;
        let mut grid = Vec::with_capacity(513);
        for i in 0..=512 {
            let r = self.r2 * i as f64 / 512.0;
            grid.push([r, self.g(r), self.g_prime(r)]);
        }
        Ok(MetricDoc {
            schema: "capflow/metric/1".into(),
            a: profile.a(),
            delta: self.delta,
            r0: self.r0,
            r1: self.r1,
            r2: self.r2,
            g_inf: self.g_inf,
            profile: profile.to_doc(),
            grid,
        })
    }

    /// Rebuild the full metric from its document (deterministic).
    pub fn from_doc(doc: &MetricDoc) -> Result<Self, MetricError> {
        let profile = Profile::from_doc(&doc.profile)
            .map_err(|e| MetricError::BadDocument(e.to_string()))?;
        build_metric(profile, doc.delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{build_profile, CapParams, FlatProfile};

    fn metric5() -> RadialMetric {
        build_metric(build_profile(&CapParams::with_a(5.0)).unwrap(), 0.0).unwrap()
    }

    #[test]
    fn flat_profile_gives_identity_map() {
        let map = solve_r_of_l(&FlatProfile { nominal_a: 5.0 }, 2048).unwrap();
        for i in 0..100 {
            let l = 0.6 * i as f64 / 99.0;
            assert!((map.r_of_l(l) - l).abs() < 1e-13);
        }
    }

    #[test]
    fn small_l_series_of_r_over_l() {
        // oracle: r/l = 1 + (5a/2) l^2 + O(l^4); at l = 1e-3, a = 5 the l^4
        // terms are below 1e-9
        let p = build_profile(&CapParams::with_a(5.0)).unwrap();
        let map = solve_r_of_l(&p, 2048).unwrap();
        let l = 1e-3;
        let ratio = map.r_of_l(l) / l;
        assert!(
            (ratio - (1.0 + 12.5 * l * l)).abs() < 1e-9,
            "ratio = {ratio}"
        );
        // lim ln(r/l) = 0
        assert!(map.log_correction(1e-8).abs() < 1e-12);
    }

    #[test]
    fn roundtrip_l_r() {
        let m = metric5();
        let mut worst = 0.0_f64;
        for i in 0..=3000 {
            let l = 1.3 * m.profile().unwrap().l2() * i as f64 / 3000.0;
            let r = m.r_of_l(l);
            worst = worst.max((m.l_of_r(r) - l).abs());
        }
        assert!(worst < 1e-10, "roundtrip error {worst}");
    }

    #[test]
    fn factor_matches_rho_identity() {
        // rho(l(r)) = r g(r) within 1e-8 on (0, r2]
        let m = metric5();
        let p = m.profile().unwrap().clone();
        let mut worst = 0.0_f64;
        for i in 1..=4000 {
            let r = m.r2() * i as f64 / 4000.0;
            let lhs = p.rho(m.l_of_r(r));
            worst = worst.max((lhs - r * m.g(r)).abs());
        }
        assert!(worst < 1e-8, "identity residual {worst}");
    }

    #[test]
    fn g_boundary_values_and_monotonicity() {
        let m = metric5();
        assert!((m.g(0.0) - 1.0).abs() < 1e-12);
        assert!((m.factor_sq(0.0) - 1.0).abs() < 1e-8);
        // non-increasing everywhere; strictly decreasing on a coarse interior
        // grid (the factor is flat to all orders at r2)
        let mut prev = m.g(0.0);
        for i in 1..=2000 {
            let r = m.r2() * i as f64 / 2000.0;
            let g = m.g(r);
            assert!(g <= prev + 1e-15, "g increasing at r={r}");
            assert!(g > 0.0);
            prev = g;
        }
        let mut prev = m.g(0.0);
        for i in 1..=40 {
            let r = 0.95 * m.r2() * i as f64 / 40.0;
            let g = m.g(r);
            assert!(g < prev, "g not strictly decreasing at r={r}");
            prev = g;
        }
        for i in 0..=20 {
            let r = m.r2() + 0.4 * i as f64 / 20.0;
            assert_eq!(m.g(r), m.g_inf());
        }
    }

    #[test]
    fn shrinking_bound_and_monotone_r2() {
        // r2(a) <= exp(2 - ln(3 - sqrt 5)) / (2 sqrt a)
        let bound_const = (2.0 - (3.0 - 5.0_f64.sqrt()).ln()).exp();
        let mut prev_r2 = f64::INFINITY;
        for a in [5.0, 25.0, 100.0, 400.0] {
            let m = build_metric(build_profile(&CapParams::with_a(a)).unwrap(), 0.0).unwrap();
            let bound = bound_const / (2.0 * a.sqrt());
            assert!(m.r2() <= bound, "a={a}: r2={} bound={bound}", m.r2());
            assert!(m.r2() < prev_r2);
            prev_r2 = m.r2();
        }
    }

    #[test]
    fn curvature_routes_agree() {
        let m = metric5();
        let p = m.profile().unwrap().clone();
        let mut worst = 0.0_f64;
        for i in 1..4000 {
            let r = m.r2() * i as f64 / 4000.0;
            let k_profile = {
                let l = m.l_of_r(r);
                p.curvature(l)
            };
            let k_xy = m.curvature_xy(r);
            worst = worst.max((k_profile - k_xy).abs());
        }
        assert!(worst < 1e-6, "curvature route disagreement {worst}");
        // center limit equals 30 a
        assert!((m.curvature_xy(1e-12) - 150.0).abs() < 1e-4);
        assert_eq!(m.curvature_xy(m.r2() * 1.5), 0.0);
    }

    #[test]
    fn certificate_passes_for_cap_fails_for_flat() {
        let m = metric5();
        let rep = dbg_certificate(&m);
        assert!(rep.passed(), "{}", rep.render());
        let flat = RadialMetric::flat();
        assert!(!dbg_certificate(&flat).passed());
    }

    #[test]
    fn certificate_passes_for_small_shift() {
        let m = metric5();
        let d0 = 1e-3 * (1.0 - m.g_inf() * m.g_inf());
        for d in [-d0, d0] {
            let shifted = m.with_delta(d).unwrap();
            let rep = dbg_certificate(&shifted);
            assert!(rep.passed(), "delta={d}:\n{}", rep.render());
        }
    }

    #[test]
    fn doc_roundtrip_reproduces_metric() {
        let m = metric5();
        let doc = m.to_doc().unwrap();
        let m2 = RadialMetric::from_doc(&doc).unwrap();
        assert_eq!(m.r2(), m2.r2());
        for i in 0..200 {
            let r = 1.2 * m.r2() * i as f64 / 199.0;
            assert_eq!(m.g(r), m2.g(r));
            assert_eq!(m.curvature(r), m2.curvature(r));
        }
    }

    #[test]
    fn shift_below_floor_rejected() {
        let m = metric5();
        let bad = m.with_delta(-(m.g_inf() * m.g_inf()) - 0.01);
        assert!(matches!(bad, Err(MetricError::InvalidShift { .. })));
    }
}
