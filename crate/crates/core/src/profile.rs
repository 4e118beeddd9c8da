//! Radial cap profile: the function rho(l) defining a rotationally symmetric
//! cap in geodesic polar coordinates `ds^2 = dl^2 + rho(l)^2 dtheta^2`.
//!
//! For a curvature scale `a > 0` the profile is the quintic
//! `rho(l) = l - 5 a l^3 + 10 a^2 l^5` on `[0, 1/sqrt(5a)]`, continued through
//! a smooth transition so that `rho' == 1` beyond `1/(2 sqrt a)`. The second
//! derivative on the transition is
//! `rho''(l) = lambda1(l) (-30 a l + 200 a^2 l^3) + C (1 - lambda1(l)) lambda2(l)`,
//! with the normalization constant `C > 0` fixed by `int_0^inf rho'' dl = 0`.
//!
//! Marker radii: `l0 = 1/sqrt(10a)` and `l1 = 1/sqrt(5a)` are the two critical
//! parallels (`rho'(l0) = rho'(l1) = 0`), and `l2 = 1/(2 sqrt a)` is where the
//! profile becomes an exact cone (`rho' == 1`). The Gaussian curvature
//! `K = -rho''/rho` is positive on `[0, l0]`, strictly decreasing up to `l1`,
//! negative on `(l*, l2)` and zero beyond.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interp::HermiteTable;
use crate::mollifier::{smooth_step, smooth_step_prime, unit_bump, unit_bump_prime};
use crate::quad::{adaptive_simpson, gauss8};
use crate::report::{CertificateReport, CheckItem};

/// Relative tolerance for the closed-form identity
/// `rho rho''' - rho' rho'' = 100 a^2 l^3 (1 + 12 a l^2 - 40 a^2 l^4)`.
pub const IDENTITY_RTOL: f64 = 1e-9;
/// Tolerance on the critical-parallel derivatives `rho'(l0)`, `rho'(l1)`.
pub const PARALLEL_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("invalid cap parameters: {0}")]
    InvalidParams(String),
    #[error("normalization failed: {0}")]
    NormalizationFailed(String),
}

/// Parameters of the cap construction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CapParams {
    /// Curvature scale `a > 0`; central curvature is `30 a`.
    pub a: f64,
    /// Absolute tolerance for the normalization quadrature.
    pub quadrature_tol: f64,
    /// Node count for the tabulated transition piece.
    pub grid_n: usize,
}

impl Default for CapParams {
    fn default() -> Self {
        Self {
            a: 5.0,
            quadrature_tol: 1e-12,
            grid_n: 4096,
        }
    }
}

impl CapParams {
    pub fn with_a(a: f64) -> Self {
        Self {
            a,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(ProfileError::InvalidParams(format!("a = {}", self.a)));
        }
        if !(self.quadrature_tol > 0.0) {
            return Err(ProfileError::InvalidParams(format!(
                "quadrature_tol = {}",
                self.quadrature_tol
            )));
        }
        if self.grid_n < 1000 {
            return Err(ProfileError::InvalidParams(format!(
                "grid_n = {} < 1000",
                self.grid_n
            )));
        }
        Ok(())
    }
}

/// The smooth cutoff pair of the transition region `(l1, l2)`.
///
/// `lambda1` is 1 on `[0, l1]`, 0 on `[l2, inf)`, monotone between;
/// `lambda2` is a bump supported exactly on `(l1, l2)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Bumps {
    pub l1: f64,
    pub l2: f64,
}

impl Bumps {
    pub fn lambda1(&self, l: f64) -> f64 {
        smooth_step((self.l2 - l) / (self.l2 - self.l1))
    }

    pub fn lambda1_prime(&self, l: f64) -> f64 {
        let w = self.l2 - self.l1;
        -smooth_step_prime((self.l2 - l) / w) / w
    }

    pub fn lambda2(&self, l: f64) -> f64 {
        unit_bump((l - self.l1) / (self.l2 - self.l1))
    }

    pub fn lambda2_prime(&self, l: f64) -> f64 {
        let w = self.l2 - self.l1;
        unit_bump_prime((l - self.l1) / w) / w
    }
}

/// `lambda1` transitions on `(l1, l2)` and `lambda2` is supported there.
pub fn build_bumps(params: &CapParams) -> Result<Bumps, ProfileError> {
    params.validate()?;
    Ok(Bumps {
        l1: 1.0 / (5.0 * params.a).sqrt(),
        l2: 1.0 / (2.0 * params.a.sqrt()),
    })
}

/// Polynomial second derivative `-30 a l + 200 a^2 l^3` of the core piece.
fn q_poly(a: f64, l: f64) -> f64 {
    -30.0 * a * l + 200.0 * a * a * l * l * l
}

/// Solve `int_0^inf rho'' dl = 0` for the positive constant `C`.
///
/// The integral is linear in `C`: with `I1 = int lambda1 q` (which includes
/// the exact core contribution `-1`) and `I2 = int (1-lambda1) lambda2`,
/// the solution is `C = -I1 / I2`.
pub fn normalize_c<F1, F2>(
    a: f64,
    l1: f64,
    l2: f64,
    lambda1: F1,
    lambda2: F2,
    quadrature_tol: f64,
) -> Result<f64, ProfileError>
where
    F1: Fn(f64) -> f64,
    F2: Fn(f64) -> f64,
{
    // int_0^{l1} q dl = [-15 a l^2 + 50 a^2 l^4]_0^{l1} = -3 + 2 = -1 exactly.
    let tol = (quadrature_tol * 1e-3).max(1e-16);
    let i1_trans = adaptive_simpson(&|l| lambda1(l) * q_poly(a, l), l1, l2, tol)
        .ok_or_else(|| ProfileError::NormalizationFailed("I1 quadrature diverged".into()))?;
    let i2 = adaptive_simpson(&|l| (1.0 - lambda1(l)) * lambda2(l), l1, l2, tol)
        .ok_or_else(|| ProfileError::NormalizationFailed("I2 quadrature diverged".into()))?;
    let i1 = -1.0 + i1_trans;
    if !(i2 > 0.0) {
        return Err(ProfileError::NormalizationFailed(format!(
            "bump integral I2 = {i2} not positive"
        )));
    }
    let c = -i1 / i2;
    if !(c > 0.0) || !c.is_finite() {
        return Err(ProfileError::NormalizationFailed(format!(
            "computed C = {c} not positive"
        )));
    }
    Ok(c)
}

/// Evaluators shared by the built profile and the flat reference profile.
pub trait ProfileFns {
    fn rho(&self, l: f64) -> f64;
    fn rho_p(&self, l: f64) -> f64;
    fn rho_pp(&self, l: f64) -> f64;
    fn rho_ppp(&self, l: f64) -> f64;
    /// Marker radii (l0, l1, l2).
    fn markers(&self) -> (f64, f64, f64);
    /// Curvature scale (0 for the flat profile).
    fn a(&self) -> f64;

    /// Gaussian curvature `K(l) = -rho''(l)/rho(l)`, total at `l = 0`.
    fn curvature(&self, l: f64) -> f64 {
        if l <= 0.0 {
            // rho''/rho -> rho'''(0)/rho'(0) = -30 a by the core series.
            return 30.0 * self.a();
        }
        -self.rho_pp(l) / self.rho(l)
    }

    /// Derivative of the curvature, `K' = -(rho rho''' - rho' rho'')/rho^2`.
    fn curvature_prime(&self, l: f64) -> f64 {
        if l <= 0.0 {
            return 0.0;
        }
        let r = self.rho(l);
        -(r * self.rho_ppp(l) - self.rho_p(l) * self.rho_pp(l)) / (r * r)
    }
}

/// The flat reference `rho(l) = l` (no cap); marker radii are the nominal
/// positions for the given `a` so that degenerate checks have somewhere to
/// look.
#[derive(Debug, Clone, Copy)]
pub struct FlatProfile {
    pub nominal_a: f64,
}

impl ProfileFns for FlatProfile {
    fn rho(&self, l: f64) -> f64 {
        l
    }
    fn rho_p(&self, _l: f64) -> f64 {
        1.0
    }
    fn rho_pp(&self, _l: f64) -> f64 {
        0.0
    }
    fn rho_ppp(&self, _l: f64) -> f64 {
        0.0
    }
    fn markers(&self) -> (f64, f64, f64) {
        (
            1.0 / (10.0 * self.nominal_a).sqrt(),
            1.0 / (5.0 * self.nominal_a).sqrt(),
            1.0 / (2.0 * self.nominal_a.sqrt()),
        )
    }
    fn a(&self) -> f64 {
        0.0
    }
}

/// A built cap profile: exact quintic core, tabulated transition, conical tail.
#[derive(Debug, Clone)]
pub struct Profile {
    a: f64,
    c_norm: f64,
    l0: f64,
    l1: f64,
    l2: f64,
    rho_l2: f64,
    /// `l - rho(l)` for `l >= l2` (constant there).
    cone_gap: f64,
    bumps: Bumps,
    /// (rho, rho') Hermite nodes over [l1, l2].
    tab_rho: HermiteTable,
    /// (rho', rho'') Hermite nodes over [l1, l2].
    tab_rho_p: HermiteTable,
}

impl Profile {
    pub fn a(&self) -> f64 {
        self.a
    }
    /// Normalization constant of the transition bump.
    pub fn c_norm(&self) -> f64 {
        self.c_norm
    }
    pub fn l0(&self) -> f64 {
        self.l0
    }
    pub fn l1(&self) -> f64 {
        self.l1
    }
    pub fn l2(&self) -> f64 {
        self.l2
    }
    /// `rho(l2)`; the conical tail is `rho(l) = rho(l2) + (l - l2)`.
    pub fn rho_l2(&self) -> f64 {
        self.rho_l2
    }

    fn rho_pp_transition(&self, l: f64) -> f64 {
        let lam1 = self.bumps.lambda1(l);
        let lam2 = self.bumps.lambda2(l);
        lam1 * q_poly(self.a, l) + self.c_norm * (1.0 - lam1) * lam2
    }
}

impl ProfileFns for Profile {
    fn rho(&self, l: f64) -> f64 {
        let a = self.a;
        if l <= self.l1 {
            l * (1.0 - 5.0 * a * l * l + 10.0 * a * a * l * l * l * l)
        } else if l >= self.l2 {
            self.rho_l2 + (l - self.l2)
        } else {
            self.tab_rho.eval(l)
        }
    }

    fn rho_p(&self, l: f64) -> f64 {
        let a = self.a;
        if l <= self.l1 {
            1.0 - 15.0 * a * l * l + 50.0 * a * a * l * l * l * l
        } else if l >= self.l2 {
            1.0
        } else {
            self.tab_rho_p.eval(l)
        }
    }

    fn rho_pp(&self, l: f64) -> f64 {
        if l <= self.l1 {
            q_poly(self.a, l)
        } else if l >= self.l2 {
            0.0
        } else {
            self.rho_pp_transition(l)
        }
    }

    fn rho_ppp(&self, l: f64) -> f64 {
        let a = self.a;
        if l <= self.l1 {
            -30.0 * a + 600.0 * a * a * l * l
        } else if l >= self.l2 {
            0.0
        } else {
            let lam1 = self.bumps.lambda1(l);
            let lam1p = self.bumps.lambda1_prime(l);
            let lam2 = self.bumps.lambda2(l);
            let lam2p = self.bumps.lambda2_prime(l);
            let qp = -30.0 * a + 600.0 * a * a * l * l;
            lam1p * q_poly(a, l) + lam1 * qp + self.c_norm * (-lam1p * lam2 + (1.0 - lam1) * lam2p)
        }
    }

    fn markers(&self) -> (f64, f64, f64) {
        (self.l0, self.l1, self.l2)
    }

    fn a(&self) -> f64 {
        self.a
    }
}

/// Build the profile for the given parameters: normalize the bump constant,
/// then tabulate `(rho, rho')` across the transition by cumulative
/// Gauss-Legendre integration of the analytic `rho''`.
pub fn build_profile(params: &CapParams) -> Result<Profile, ProfileError> {
    params.validate()?;
    let a = params.a;
    let bumps = build_bumps(params)?;
    let (l1, l2) = (bumps.l1, bumps.l2);
    let l0 = 1.0 / (10.0 * a).sqrt();
    let c_norm = normalize_c(
        a,
        l1,
        l2,
        |l| bumps.lambda1(l),
        |l| bumps.lambda2(l),
        params.quadrature_tol,
    )?;

    let rpp = |l: f64| {
        let lam1 = bumps.lambda1(l);
        lam1 * q_poly(a, l) + c_norm * (1.0 - lam1) * bumps.lambda2(l)
    };

    let n = params.grid_n;
    let h = (l2 - l1) / n as f64;
    let mut xs = Vec::with_capacity(n + 1);
    let mut rho = Vec::with_capacity(n + 1);
    let mut rho_p = Vec::with_capacity(n + 1);
    let mut rho_pp = Vec::with_capacity(n + 1);
    // rho(l1) = 0.4 l1 and rho'(l1) = 0 exactly for the quintic core.
    xs.push(l1);
    rho.push(l1 * (1.0 - 5.0 * a * l1 * l1 + 10.0 * a * a * l1 * l1 * l1 * l1));
    rho_p.push(1.0 - 15.0 * a * l1 * l1 + 50.0 * a * a * l1 * l1 * l1 * l1);
    rho_pp.push(q_poly(a, l1));
    for i in 1..=n {
        let lo = l1 + (i - 1) as f64 * h;
        let hi = if i == n { l2 } else { l1 + i as f64 * h };
        let dp = gauss8(&rpp, lo, hi);
        // int_lo^hi rho'(s) ds = rho'(lo) (hi-lo) + int_lo^hi (hi-s) rho''(s) ds
        let dr = rho_p[i - 1] * (hi - lo) + gauss8(&|s| (hi - s) * rpp(s), lo, hi);
        xs.push(hi);
        rho.push(rho[i - 1] + dr);
        rho_p.push(rho_p[i - 1] + dp);
        rho_pp.push(rpp(hi));
    }
    let slope_end = rho_p[n];
    if (slope_end - 1.0).abs() > 1e-9 {
        return Err(ProfileError::NormalizationFailed(format!(
            "rho'(l2) = {slope_end} after tabulation; normalization inconsistent"
        )));
    }
    // Pin the conical tail to exact slope 1.
    rho_p[n] = 1.0;
    rho_pp[n] = 0.0;
    let rho_l2 = rho[n];

    let tab_rho = HermiteTable::new(xs.clone(), rho, rho_p.clone());
    let tab_rho_p = HermiteTable::new(xs, rho_p, rho_pp);

    Ok(Profile {
        a,
        c_norm,
        l0,
        l1,
        l2,
        rho_l2,
        cone_gap: l2 - rho_l2,
        bumps,
        tab_rho,
        tab_rho_p,
    })
}

impl Profile {
    /// `l - rho(l)` on the conical tail; equals `max_l (l - rho(l))`.
    pub fn cone_gap(&self) -> f64 {
        self.cone_gap
    }
}

/// Closed-form right side of the curvature-monotonicity identity on the core.
pub fn identity_rhs(a: f64, l: f64) -> f64 {
    100.0 * a * a * l * l * l * (1.0 + 12.0 * a * l * l - 40.0 * a * a * l * l * l * l)
}

/// Certify conditions (i)-(v) of the construction plus the closed-form
/// identity for `K' < 0`. Failures are report entries, never panics.
pub fn verify_profile<P: ProfileFns + ?Sized>(p: &P) -> CertificateReport {
    let mut rep = CertificateReport::new("profile");
    let (l0, l1, l2) = p.markers();
    let a = p.a();

    // (i) rho(0) = 0, rho'(0) = 1, rho > 0 for l > 0.
    rep.push(CheckItem::abs("rho(0) = 0", p.rho(0.0), 1e-14));
    rep.push(CheckItem::abs("rho'(0) = 1", p.rho_p(0.0) - 1.0, 1e-14));
    let mut min_rho = f64::INFINITY;
    for i in 1..=2000 {
        let l = 1.5 * l2 * i as f64 / 2000.0;
        min_rho = min_rho.min(p.rho(l));
    }
    rep.push(CheckItem::predicate(
        "rho positive on (0, 1.5 l2]",
        min_rho > 0.0,
        min_rho,
    ));

    // (ii) critical parallels.
    rep.push(CheckItem::abs("rho'(l0) = 0", p.rho_p(l0), PARALLEL_TOL));
    rep.push(CheckItem::abs("rho'(l1) = 0", p.rho_p(l1), PARALLEL_TOL));

    // (iii) K > 0 on [0, l0]; K(l1) < 0.
    let mut min_k_core = f64::INFINITY;
    for i in 0..=1000 {
        let l = l0 * i as f64 / 1000.0;
        min_k_core = min_k_core.min(p.curvature(l));
    }
    rep.push(CheckItem::predicate(
        "K > 0 on [0, l0]",
        min_k_core > 0.0,
        min_k_core,
    ));
    let k_l1 = p.curvature(l1);
    rep.push(CheckItem::predicate("K(l1) < 0", k_l1 < 0.0, k_l1));

    // (iv) identity and K' < 0 on (0, l1].
    let mut max_rel = 0.0_f64;
    let mut max_kp = f64::NEG_INFINITY;
    for i in 1..=1000 {
        let l = l1 * i as f64 / 1000.0;
        let lhs = p.rho(l) * p.rho_ppp(l) - p.rho_p(l) * p.rho_pp(l);
        let rhs = identity_rhs(a, l);
        let rel = (lhs - rhs).abs() / rhs.abs().max(1.0);
        max_rel = max_rel.max(rel);
        max_kp = max_kp.max(p.curvature_prime(l));
    }
    rep.push(CheckItem::abs(
        "rho rho''' - rho' rho'' identity (rel)",
        max_rel,
        IDENTITY_RTOL,
    ));
    rep.push(CheckItem::predicate("K' < 0 on (0, l1]", max_kp < 0.0, max_kp));
    // K strictly decreasing on a sampled grid (finite differences).
    let mut max_dk = f64::NEG_INFINITY;
    let eps_l = 1e-3 * l1;
    for i in 0..1000 {
        let x0 = eps_l + (l1 - eps_l) * i as f64 / 1000.0;
        let x1 = eps_l + (l1 - eps_l) * (i + 1) as f64 / 1000.0;
        max_dk = max_dk.max(p.curvature(x1) - p.curvature(x0));
    }
    rep.push(CheckItem::predicate(
        "K decreasing on sampled [eps, l1]",
        max_dk < 0.0,
        max_dk,
    ));

    // (v) K < 0 on (l1, l2), K = 0 beyond, rho' = 1 beyond. The bump is flat
    // to all orders at the endpoints, so strict negativity is checked on the
    // interior 90% of the interval and nonpositivity on the rest.
    let mut max_k_annulus = f64::NEG_INFINITY;
    let mut max_k_interior = f64::NEG_INFINITY;
    for i in 1..1000 {
        let frac = i as f64 / 1000.0;
        let k = p.curvature(l1 + (l2 - l1) * frac);
        max_k_annulus = max_k_annulus.max(k);
        if (0.05..=0.95).contains(&frac) {
            max_k_interior = max_k_interior.max(k);
        }
    }
    rep.push(CheckItem::predicate(
        "K <= 0 on (l1, l2)",
        max_k_annulus <= 0.0,
        max_k_annulus,
    ));
    rep.push(CheckItem::predicate(
        "K < 0 on annulus interior",
        max_k_interior < 0.0,
        max_k_interior,
    ));
    let mut max_abs_k_tail = 0.0_f64;
    let mut max_slope_err = 0.0_f64;
    for i in 0..=100 {
        let l = l2 + l2 * i as f64 / 100.0;
        max_abs_k_tail = max_abs_k_tail.max(p.curvature(l).abs());
        max_slope_err = max_slope_err.max((p.rho_p(l) - 1.0).abs());
    }
    rep.push(CheckItem::abs("K = 0 for l >= l2", max_abs_k_tail, 1e-12));
    rep.push(CheckItem::abs(
        "rho' = 1 for l >= l2",
        max_slope_err,
        PARALLEL_TOL,
    ));

    // rho(l) <= l everywhere sampled.
    let mut max_excess = f64::NEG_INFINITY;
    for i in 1..=2000 {
        let l = 1.5 * l2 * i as f64 / 2000.0;
        max_excess = max_excess.max(p.rho(l) - l);
    }
    rep.push(CheckItem::predicate(
        "rho(l) <= l",
        max_excess <= 1e-12,
        max_excess,
    ));

    rep
}

/// Serialized form: parameters plus the tabulated grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileDoc {
    pub schema: String,
    pub a: f64,
    pub c: f64,
    pub l0: f64,
    pub l1: f64,
    pub l2: f64,
    /// Rows (l, rho, rho', rho'') across the transition.
    pub grid: Vec<[f64; 4]>,
}

impl Profile {
    pub fn to_doc(&self) -> ProfileDoc {
        let (xs, rho, rho_p) = self.tab_rho.nodes();
        let grid = xs
            .iter()
            .zip(rho.iter().zip(rho_p.iter()))
            .map(|(&l, (&r, &rp))| [l, r, rp, self.rho_pp(l)])
            .collect();
        ProfileDoc {
            schema: "capflow/profile/1".into(),
            a: self.a,
            c: self.c_norm,
            l0: self.l0,
            l1: self.l1,
            l2: self.l2,
            grid,
        }
    }

    pub fn from_doc(doc: &ProfileDoc) -> Result<Self, ProfileError> {
        if doc.grid.len() < 2 {
            return Err(ProfileError::InvalidParams("grid too short".into()));
        }
        let bumps = Bumps {
            l1: doc.l1,
            l2: doc.l2,
        };
        let xs: Vec<f64> = doc.grid.iter().map(|r| r[0]).collect();
        let rho: Vec<f64> = doc.grid.iter().map(|r| r[1]).collect();
        let rho_p: Vec<f64> = doc.grid.iter().map(|r| r[2]).collect();
        let rho_pp: Vec<f64> = doc.grid.iter().map(|r| r[3]).collect();
        let rho_l2 = *rho.last().unwrap();
        Ok(Profile {
            a: doc.a,
            c_norm: doc.c,
            l0: doc.l0,
            l1: doc.l1,
            l2: doc.l2,
            rho_l2,
            cone_gap: doc.l2 - rho_l2,
            bumps,
            tab_rho: HermiteTable::new(xs.clone(), rho, rho_p.clone()),
            tab_rho_p: HermiteTable::new(xs, rho_p, rho_pp),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p5() -> Profile {
        build_profile(&CapParams::with_a(5.0)).unwrap()
    }

    #[test]
    fn bump_boundary_values() {
        let params = CapParams::with_a(5.0);
        let b = build_bumps(&params).unwrap();
        assert_eq!(b.lambda1(0.0), 1.0);
        assert_eq!(b.lambda1(b.l1), 1.0);
        assert_eq!(b.lambda1(b.l2), 0.0);
        assert_eq!(b.lambda2(b.l1), 0.0);
        assert_eq!(b.lambda2(b.l2), 0.0);
        assert!(b.lambda2(0.5 * (b.l1 + b.l2)) > 0.0);
    }

    #[test]
    fn core_integral_is_minus_one() {
        // oracle: antiderivative -15 a l^2 + 50 a^2 l^4 evaluated at l1
        let a = 5.0;
        let l1 = 1.0 / (5.0f64 * a).sqrt();
        let exact = -15.0 * a * l1 * l1 + 50.0 * a * a * l1.powi(4);
        assert!((exact + 1.0).abs() < 1e-14);
        let quad = adaptive_simpson(&|l| q_poly(a, l), 0.0, l1, 1e-14).unwrap();
        assert!((quad + 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalization_zeroes_the_integral() {
        let p = p5();
        let total = adaptive_simpson(&|l| p.rho_pp(l), 0.0, p.l2(), 1e-14).unwrap();
        assert!(total.abs() < 1e-10, "int rho'' = {total}");
        assert!(p.c_norm() > 0.0);
    }

    #[test]
    fn doubling_lambda2_halves_c() {
        let params = CapParams::with_a(5.0);
        let b = build_bumps(&params).unwrap();
        let c1 = normalize_c(
            params.a,
            b.l1,
            b.l2,
            |l| b.lambda1(l),
            |l| b.lambda2(l),
            1e-12,
        )
        .unwrap();
        let c2 = normalize_c(
            params.a,
            b.l1,
            b.l2,
            |l| b.lambda1(l),
            |l| 2.0 * b.lambda2(l),
            1e-12,
        )
        .unwrap();
        assert!((c2 - 0.5 * c1).abs() < 1e-9 * c1);
    }

    #[test]
    fn quintic_core_values() {
        let p = p5();
        // rho(l1) = 0.4 l1 = 0.08 for a = 5
        assert!((p.rho(0.2) - 0.08).abs() < 1e-15);
        // rho'(l0) = 1 - 1.5 + 0.5 = 0
        assert!(p.rho_p(p.l0()).abs() < PARALLEL_TOL);
        assert!(p.rho_p(p.l1()).abs() < PARALLEL_TOL);
        // rho' = 1 beyond l2
        for &l in &[p.l2(), 1.1 * p.l2(), 3.0 * p.l2()] {
            assert!((p.rho_p(l) - 1.0).abs() < PARALLEL_TOL);
        }
    }

    #[test]
    fn curvature_limit_and_signs() {
        let p = p5();
        // K(0+) = 30 a = 150; oracle: evaluation at l = 1e-6 agrees
        assert!((p.curvature(0.0) - 150.0).abs() < 1e-12);
        assert!((p.curvature(1e-6) - 150.0).abs() < 1e-6);
        assert!(p.curvature(p.l0()) > 0.0);
        assert!(p.curvature(p.l1()) < 0.0);
        assert!(p.curvature(p.l2()).abs() < 1e-12);
        assert!(p.curvature(2.0 * p.l2()).abs() < 1e-12);
    }

    #[test]
    fn identity_at_sample_point() {
        // a = 5, l = 0.1: 100*25*0.001*(1 + 0.6 - 0.1) = 3.75
        let p = p5();
        let lhs = p.rho(0.1) * p.rho_ppp(0.1) - p.rho_p(0.1) * p.rho_pp(0.1);
        assert!((identity_rhs(5.0, 0.1) - 3.75).abs() < 1e-12);
        assert!((lhs - 3.75).abs() < 1e-9);
    }

    #[test]
    fn certificate_passes_for_built_profiles() {
        for a in [5.0, 25.0, 100.0] {
            let p = build_profile(&CapParams::with_a(a)).unwrap();
            let rep = verify_profile(&p);
            assert!(rep.passed(), "a={a}: {rep:?}");
        }
    }

    #[test]
    fn certificate_fails_for_flat_profile() {
        let rep = verify_profile(&FlatProfile { nominal_a: 5.0 });
        assert!(!rep.passed());
        // (ii) fails: rho' = 1 at the would-be parallels
        assert!(!rep.item("rho'(l0) = 0").unwrap().passed);
        assert!(!rep.item("K > 0 on [0, l0]").unwrap().passed);
        // curvature is identically zero
        assert!(rep.item("K = 0 for l >= l2").unwrap().passed);
    }

    #[test]
    fn transition_tables_match_integral_oracle() {
        // oracle: independent adaptive-Simpson integration of rho'' from l1
        let p = p5();
        for frac in [0.15, 0.4, 0.62, 0.85, 0.98] {
            let l = p.l1() + frac * (p.l2() - p.l1());
            let rp = adaptive_simpson(&|s| p.rho_pp(s), p.l1(), l, 1e-14).unwrap();
            assert!(
                (p.rho_p(l) - rp).abs() < 1e-11,
                "rho' mismatch at {l}: {} vs {rp}",
                p.rho_p(l)
            );
            let dr = adaptive_simpson(&|s| p.rho_p(s), p.l1(), l, 1e-14).unwrap();
            assert!((p.rho(l) - (p.rho(p.l1()) + dr)).abs() < 1e-11);
        }
    }

    #[test]
    fn doc_roundtrip() {
        let p = p5();
        let doc = p.to_doc();
        let q = Profile::from_doc(&doc).unwrap();
        for i in 0..200 {
            let l = 1.4 * p.l2() * i as f64 / 199.0;
            assert_eq!(p.rho(l), q.rho(l));
            assert_eq!(p.rho_p(l), q.rho_p(l));
        }
    }
}
