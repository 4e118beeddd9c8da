//! The four Hamiltonians of the laboratory on `T*T^n` (momentum `p`, lifted
//! position `q`; the conformal radius is taken from the wrapped first two
//! coordinates):
//!
//! * `Flat`:              `H0 = |p|^2 / 2`
//! * `ConformalKinetic`:  `H = |p|^2 / (2 W(r))` with `W = g^2 + delta`
//! * `PerturbedKinetic`:  `H_eps = H0 + eps (1 - W(r)) xi(|p|^2)`
//! * `Relativistic`:      `Ht_eps = -sqrt(1 - 2 H_eps)`
//!
//! `xi` is a smooth momentum cutoff, identically 1 on `[0, 1/3]` and 0 on
//! `[2/3, inf)`.

use std::sync::Arc;

use thiserror::Error;

use crate::conformal::RadialMetric;
use crate::flow::integrator::MAX_DIM;
use crate::mollifier::{smooth_step, smooth_step_prime};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("relativistic branch requires 2 H_eps < 1 (got 2H = {two_h})")]
    EnergyOutOfRange { two_h: f64 },
    #[error("state lies outside the rotationally symmetric cap (r = {r} >= r2 = {r2})")]
    OutsideCap { r: f64, r2: f64 },
    #[error("hamiltonian requires a metric")]
    MissingMetric,
    #[error("step rejected: {0}")]
    Step(#[from] crate::flow::integrator::StepError),
    #[error("invalid integration parameters: {0}")]
    BadParams(String),
}

/// Smooth momentum cutoff: 1 on [0, 1/3], 0 on [2/3, inf).
pub fn xi(s: f64) -> f64 {
    smooth_step((2.0 / 3.0 - s) * 3.0)
}

pub fn xi_prime(s: f64) -> f64 {
    -3.0 * smooth_step_prime((2.0 / 3.0 - s) * 3.0)
}

fn xi_second(s: f64) -> f64 {
    // central difference of the analytic first derivative; only feeds the
    // Newton fallback and quadratic Hessian terms of the cutoff
    let h = 1e-6;
    (xi_prime(s + h) - xi_prime(s - h)) / (2.0 * h)
}

/// Wrap a lifted coordinate into the fundamental domain [-1, 1).
pub fn wrap(x: f64) -> f64 {
    x - 2.0 * ((x + 1.0) / 2.0).floor()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum HamiltonianKind {
    Flat,
    ConformalKinetic,
    PerturbedKinetic,
    Relativistic,
}

/// A concrete Hamiltonian: kind, optional metric, perturbation strength, and
/// degrees of freedom (2 on the section, 3 for the full torus).
#[derive(Debug, Clone)]
pub struct HamiltonianSpec {
    pub kind: HamiltonianKind,
    pub metric: Option<Arc<RadialMetric>>,
    pub eps: f64,
    pub dof: usize,
}

impl HamiltonianSpec {
    pub fn flat(dof: usize) -> Self {
        Self {
            kind: HamiltonianKind::Flat,
            metric: None,
            eps: 0.0,
            dof,
        }
    }

    pub fn conformal(metric: Arc<RadialMetric>) -> Self {
        Self {
            kind: HamiltonianKind::ConformalKinetic,
            metric: Some(metric),
            eps: 0.0,
            dof: 2,
        }
    }

    pub fn perturbed(metric: Arc<RadialMetric>, eps: f64, dof: usize) -> Self {
        Self {
            kind: HamiltonianKind::PerturbedKinetic,
            metric: Some(metric),
            eps,
            dof,
        }
    }

    pub fn relativistic(metric: Arc<RadialMetric>, eps: f64, dof: usize) -> Self {
        Self {
            kind: HamiltonianKind::Relativistic,
            metric: Some(metric),
            eps,
            dof,
        }
    }

    pub fn phase_dim(&self) -> usize {
        2 * self.dof
    }

    fn metric(&self) -> &RadialMetric {
        self.metric.as_ref().expect("metric required for this kind")
    }

    /// Wrapped radius of the base point (first two coordinates).
    pub fn radius(&self, y: &[f64]) -> f64 {
        let x = wrap(y[0]);
        let yy = wrap(y[1]);
        (x * x + yy * yy).sqrt()
    }

    fn p_sq(&self, y: &[f64]) -> f64 {
        let n = self.dof;
        y[n..2 * n].iter().map(|p| p * p).sum()
    }

    /// Kinetic-plus-potential value `H_eps` (equals `H0` for `eps = 0`).
    fn perturbed_value(&self, y: &[f64]) -> f64 {
        let s = self.p_sq(y);
        let mut h = 0.5 * s;
        if self.eps != 0.0 {
            let w = self.metric().factor_sq(self.radius(y));
            h += self.eps * (1.0 - w) * xi(s);
        }
        h
    }

    pub fn value(&self, y: &[f64]) -> Result<f64, FlowError> {
        match self.kind {
            HamiltonianKind::Flat => Ok(0.5 * self.p_sq(y)),
            HamiltonianKind::ConformalKinetic => {
                let m = self.metric.as_ref().ok_or(FlowError::MissingMetric)?;
                Ok(0.5 * self.p_sq(y) / m.factor_sq(self.radius(y)))
            }
            HamiltonianKind::PerturbedKinetic => {
                if self.metric.is_none() {
                    return Err(FlowError::MissingMetric);
                }
                Ok(self.perturbed_value(y))
            }
            HamiltonianKind::Relativistic => {
                if self.metric.is_none() {
                    return Err(FlowError::MissingMetric);
                }
                let two_h = 2.0 * self.perturbed_value(y);
                if two_h >= 1.0 {
                    return Err(FlowError::EnergyOutOfRange { two_h });
                }
                Ok(-(1.0 - two_h).sqrt())
            }
        }
    }

    /// Gradient `(H_q, H_p)` written into `dq`/`dp` (length `dof` each).
    pub fn grad(&self, y: &[f64], dq: &mut [f64], dp: &mut [f64]) {
        let n = self.dof;
        let p = &y[n..2 * n];
        dq.fill(0.0);
        match self.kind {
            HamiltonianKind::Flat => {
                dp.copy_from_slice(p);
            }
            HamiltonianKind::ConformalKinetic => {
                let m = self.metric();
                let r = self.radius(y);
                let w = m.factor_sq(r);
                for i in 0..n {
                    dp[i] = p[i] / w;
                }
                if r > 1e-12 {
                    let a = 0.5 * self.p_sq(y);
                    let coef = -a * m.factor_sq_prime(r) / (w * w) / r;
                    dq[0] = coef * wrap(y[0]);
                    dq[1] = coef * wrap(y[1]);
                }
            }
            HamiltonianKind::PerturbedKinetic => {
                self.perturbed_grad(y, dq, dp);
            }
            HamiltonianKind::Relativistic => {
                self.perturbed_grad(y, dq, dp);
                let two_h = 2.0 * self.perturbed_value(y);
                let scale = 1.0 / (1.0 - two_h).max(1e-14).sqrt();
                for i in 0..n {
                    dq[i] *= scale;
                    dp[i] *= scale;
                }
            }
        }
    }

    fn perturbed_grad(&self, y: &[f64], dq: &mut [f64], dp: &mut [f64]) {
        let n = self.dof;
        let p = &y[n..2 * n];
        dp.copy_from_slice(p);
        dq.fill(0.0);
        if self.eps == 0.0 {
            return;
        }
        let m = self.metric();
        let r = self.radius(y);
        let s = self.p_sq(y);
        let w = m.factor_sq(r);
        let xs = xi(s);
        let xps = xi_prime(s);
        if r > 1e-12 && xs != 0.0 {
            let coef = -self.eps * xs * m.factor_sq_prime(r) / r;
            dq[0] = coef * wrap(y[0]);
            dq[1] = coef * wrap(y[1]);
        }
        if xps != 0.0 {
            let c = 2.0 * self.eps * (1.0 - w) * xps;
            for i in 0..n {
                dp[i] += c * p[i];
            }
        }
    }

    /// Hamiltonian vector field `(H_p, -H_q)`.
    pub fn vector_field(&self, y: &[f64], dy: &mut [f64]) {
        let n = self.dof;
        let mut dq = [0.0; MAX_DIM / 2];
        let mut dp = [0.0; MAX_DIM / 2];
        self.grad(y, &mut dq[..n], &mut dp[..n]);
        dy[..n].copy_from_slice(&dp[..n]);
        for i in 0..n {
            dy[n + i] = -dq[i];
        }
    }

    /// Dense Hessian of `H` (row-major `2n x 2n`, block order `(q, p)`).
    pub fn hessian(&self, y: &[f64], out: &mut [f64]) {
        let n = self.dof;
        let d = 2 * n;
        out[..d * d].fill(0.0);
        let p = &y[n..2 * n];
        match self.kind {
            HamiltonianKind::Flat => {
                for i in 0..n {
                    out[(n + i) * d + n + i] = 1.0;
                }
            }
            HamiltonianKind::ConformalKinetic => {
                let m = self.metric();
                let r = self.radius(y);
                let w = m.factor_sq(r);
                let wp = m.factor_sq_prime(r);
                let wpp = m.factor_sq_prime2(r);
                let a = 0.5 * self.p_sq(y);
                // u = 1/W: u' = -W'/W^2, u'' = (2 W'^2/W - W'') / W^2
                let up = -wp / (w * w);
                let upp = (2.0 * wp * wp / w - wpp) / (w * w);
                // H_pp = I / W
                for i in 0..n {
                    out[(n + i) * d + n + i] = 1.0 / w;
                }
                // H_{p q} = p_i u'(r) xhat_j and symmetric counterpart
                if r > 1e-8 {
                    let xh = [wrap(y[0]) / r, wrap(y[1]) / r];
                    for i in 0..n {
                        for j in 0..2 {
                            let v = p[i] * up * xh[j];
                            out[(n + i) * d + j] = v;
                            out[j * d + (n + i)] = v;
                        }
                    }
                    // H_qq = A [u'' xhat xhat^T + u' (I - xhat xhat^T)/r]
                    for i in 0..2 {
                        for j in 0..2 {
                            let xx = xh[i] * xh[j];
                            let idm = if i == j { 1.0 } else { 0.0 };
                            out[i * d + j] = a * (upp * xx + up * (idm - xx) / r);
                        }
                    }
                } else {
                    // radial limit: H_qq -> A u''(0) I with u''(0) = -W''(0)/W^2
                    let u0 = -wpp / (w * w);
                    for i in 0..2 {
                        out[i * d + i] = a * u0;
                    }
                }
            }
            HamiltonianKind::PerturbedKinetic => {
                self.perturbed_hessian(y, out);
            }
            HamiltonianKind::Relativistic => {
                // Ht = phi(H_eps), phi(u) = -sqrt(1-2u):
                // Hess Ht = phi' Hess H + phi'' grad H grad H^T
                self.perturbed_hessian(y, out);
                let two_h = 2.0 * self.perturbed_value(y);
                let om = (1.0 - two_h).max(1e-14);
                let phi_p = om.powf(-0.5);
                let phi_pp = om.powf(-1.5);
                let mut dq = [0.0; MAX_DIM / 2];
                let mut dp = [0.0; MAX_DIM / 2];
                self.perturbed_grad(y, &mut dq[..n], &mut dp[..n]);
                let mut grad = [0.0; MAX_DIM];
                grad[..n].copy_from_slice(&dq[..n]);
                grad[n..d].copy_from_slice(&dp[..n]);
                for i in 0..d {
                    for j in 0..d {
                        out[i * d + j] = phi_p * out[i * d + j] + phi_pp * grad[i] * grad[j];
                    }
                }
            }
        }
    }

    fn perturbed_hessian(&self, y: &[f64], out: &mut [f64]) {
        let n = self.dof;
        let d = 2 * n;
        for i in 0..n {
            out[(n + i) * d + n + i] = 1.0;
        }
        if self.eps == 0.0 {
            return;
        }
        let m = self.metric();
        let r = self.radius(y);
        let s = self.p_sq(y);
        let p = &y[n..2 * n];
        let w = m.factor_sq(r);
        let wp = m.factor_sq_prime(r);
        let wpp = m.factor_sq_prime2(r);
        let xs = xi(s);
        let xp = xi_prime(s);
        let xpp = xi_second(s);
        // V = (1 - W(r)) xi(s); H = H0 + eps V
        // V_qq block (first two coordinates)
        if r > 1e-8 {
            let xh = [wrap(y[0]) / r, wrap(y[1]) / r];
            for i in 0..2 {
                for j in 0..2 {
                    let xx = xh[i] * xh[j];
                    let idm = if i == j { 1.0 } else { 0.0 };
                    out[i * d + j] +=
                        -self.eps * xs * (wpp * xx + wp * (idm - xx) / r);
                }
            }
            // V_qp = -W'(r) xhat_i * xi'(s) * 2 p_j
            for i in 0..2 {
                for j in 0..n {
                    let v = -self.eps * wp * xh[i] * 2.0 * xp * p[j];
                    out[i * d + (n + j)] += v;
                    out[(n + j) * d + i] += v;
                }
            }
        } else {
            for i in 0..2 {
                out[i * d + i] += -self.eps * xs * wpp;
            }
        }
        // V_pp = (1-W)(2 xi' I + 4 xi'' p p^T)
        for i in 0..n {
            for j in 0..n {
                let idm = if i == j { 1.0 } else { 0.0 };
                out[(n + i) * d + (n + j)] +=
                    self.eps * (1.0 - w) * (2.0 * xp * idm + 4.0 * xpp * p[i] * p[j]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::build_metric;
    use crate::profile::{build_profile, CapParams};

    fn metric5() -> Arc<RadialMetric> {
        Arc::new(build_metric(build_profile(&CapParams::with_a(5.0)).unwrap(), 0.0).unwrap())
    }

    #[test]
    fn xi_plateau_and_support() {
        assert_eq!(xi(0.0), 1.0);
        assert_eq!(xi(1.0 / 3.0), 1.0);
        assert_eq!(xi(2.0 / 3.0), 0.0);
        assert_eq!(xi(0.9), 0.0);
        assert!(xi(0.5) > 0.0 && xi(0.5) < 1.0);
    }

    #[test]
    fn flat_value() {
        let spec = HamiltonianSpec::flat(2);
        let h = spec.value(&[0.3, -0.7, 0.6, 0.0]).unwrap();
        assert!((h - 0.18).abs() < 1e-15);
    }

    #[test]
    fn relativistic_value_eps0() {
        let spec = HamiltonianSpec::relativistic(metric5(), 0.0, 2);
        let h = spec.value(&[0.0, 0.0, 0.6, 0.0]).unwrap();
        assert!((h + 0.8).abs() < 1e-15);
        let bad = spec.value(&[0.0, 0.0, 1.0, 0.2]);
        assert!(matches!(bad, Err(FlowError::EnergyOutOfRange { .. })));
    }

    #[test]
    fn perturbation_constant_outside_disc() {
        // for r >= r2 the potential is eps (1 - g_inf^2) xi(|p|^2), q-independent
        let m = metric5();
        let spec = HamiltonianSpec::perturbed(m.clone(), 1e-2, 2);
        let s: f64 = 0.2; // |p|^2 < 1/3 so xi = 1
        let p = s.sqrt();
        let expect = 0.5 * s + 1e-2 * (1.0 - m.g_inf() * m.g_inf());
        for q in [[0.9, 0.0], [0.8, 0.5], [-0.9, -0.9]] {
            let h = spec.value(&[q[0], q[1], p, 0.0]).unwrap();
            assert!((h - expect).abs() < 1e-14, "q = {q:?}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let m = metric5();
        let specs = [
            HamiltonianSpec::flat(2),
            HamiltonianSpec::conformal(m.clone()),
            HamiltonianSpec::perturbed(m.clone(), 5e-2, 2),
            HamiltonianSpec::relativistic(m.clone(), 5e-2, 2),
        ];
        let y = [0.31, -0.12, 0.45, 0.33]; // inside the cap, |p|^2 ~ 0.31
        let h = 1e-6;
        for spec in &specs {
            let mut dq = [0.0; 2];
            let mut dp = [0.0; 2];
            spec.grad(&y, &mut dq, &mut dp);
            for k in 0..4 {
                let mut yp = y;
                let mut ym = y;
                yp[k] += h;
                ym[k] -= h;
                let fd =
                    (spec.value(&yp).unwrap() - spec.value(&ym).unwrap()) / (2.0 * h);
                let an = if k < 2 { dq[k] } else { dp[k - 2] };
                assert!(
                    (fd - an).abs() < 2e-7 * fd.abs().max(1.0),
                    "{:?} comp {k}: fd {fd} vs {an}",
                    spec.kind
                );
            }
        }
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let m = metric5();
        let specs = [
            HamiltonianSpec::conformal(m.clone()),
            HamiltonianSpec::perturbed(m.clone(), 5e-2, 2),
            HamiltonianSpec::relativistic(m, 5e-2, 2),
        ];
        let y = [0.26, 0.17, 0.41, -0.29];
        let h = 1e-5;
        for spec in &specs {
            let mut hess = [0.0; 16];
            spec.hessian(&y, &mut hess);
            for i in 0..4 {
                for j in 0..4 {
                    let mut ypp = y;
                    let mut ypm = y;
                    let mut ymp = y;
                    let mut ymm = y;
                    ypp[i] += h;
                    ypp[j] += h;
                    ypm[i] += h;
                    ypm[j] -= h;
                    ymp[i] -= h;
                    ymp[j] += h;
                    ymm[i] -= h;
                    ymm[j] -= h;
                    let fd = (spec.value(&ypp).unwrap() - spec.value(&ypm).unwrap()
                        - spec.value(&ymp).unwrap()
                        + spec.value(&ymm).unwrap())
                        / (4.0 * h * h);
                    assert!(
                        (fd - hess[i * 4 + j]).abs() < 5e-4 * fd.abs().max(1.0),
                        "{:?} ({i},{j}): fd {fd} vs {}",
                        spec.kind,
                        hess[i * 4 + j]
                    );
                }
            }
        }
    }

    #[test]
    fn wrap_into_fundamental_domain() {
        assert_eq!(wrap(0.5), 0.5);
        assert_eq!(wrap(1.0), -1.0);
        assert_eq!(wrap(-1.0), -1.0);
        assert_eq!(wrap(2.3), 0.2999999999999998);
        assert_eq!(wrap(-2.7), -0.7000000000000002);
    }
}
