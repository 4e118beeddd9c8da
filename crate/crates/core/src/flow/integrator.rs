//! Fixed-step implicit midpoint stepping with symmetric compositions.
//!
//! The base step solves `w = y + (h/2) f(w)` by fixed-point iteration with a
//! Newton fallback, then sets `y <- 2w - y`. Higher orders are symmetric
//! compositions of midpoint substeps (Suzuki fractal for order 4, Yoshida
//! coefficient sets for orders 6 and 8), so every order is symplectic and
//! time-reversible.

use thiserror::Error;

/// Convergence target for the implicit stage iteration.
pub const STAGE_TOL: f64 = 1e-13;

pub const MAX_DIM: usize = 12;

#[derive(Debug, Error)]
pub enum StepError {
    #[error("implicit stage iteration failed to converge (h = {h})")]
    StepRejected { h: f64 },
    #[error("state dimension {0} exceeds supported maximum {MAX_DIM}")]
    DimensionTooLarge(usize),
}

/// An autonomous first-order system `y' = f(y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, y: &[f64], dy: &mut [f64]);
    /// Row-major Jacobian of `f`; return `false` when unavailable.
    fn jacobian(&self, _y: &[f64], _jac: &mut [f64]) -> bool {
        false
    }
}

/// Composition order of the midpoint scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SchemeOrder {
    Order2,
    Order4,
    Order6,
    Order8,
}

impl SchemeOrder {
    pub fn substep_fractions(&self) -> &'static [f64] {
        match self {
            SchemeOrder::Order2 => &ORDER2,
            SchemeOrder::Order4 => &ORDER4,
            SchemeOrder::Order6 => &ORDER6,
            SchemeOrder::Order8 => &ORDER8,
        }
    }
}

const ORDER2: [f64; 1] = [1.0];

// Suzuki fractal: p, p, 1-4p, p, p with p = 1/(4 - 4^{1/3}).
const SUZUKI_P: f64 = 0.414_490_771_794_375_6;
const ORDER4: [f64; 5] = [
    SUZUKI_P,
    SUZUKI_P,
    1.0 - 4.0 * SUZUKI_P,
    SUZUKI_P,
    SUZUKI_P,
];

// Yoshida 6th-order solution A: symmetric 7-stage composition.
const Y6_W1: f64 = -1.177_679_984_178_87;
const Y6_W2: f64 = 0.235_573_213_359_357;
const Y6_W3: f64 = 0.784_513_610_477_560;
const Y6_W0: f64 = 1.0 - 2.0 * (Y6_W1 + Y6_W2 + Y6_W3);
const ORDER6: [f64; 7] = [Y6_W3, Y6_W2, Y6_W1, Y6_W0, Y6_W1, Y6_W2, Y6_W3];

// Yoshida 8th-order solution D: symmetric 15-stage composition.
const Y8_W1: f64 = 0.102_799_849_391_985;
const Y8_W2: f64 = -1.960_610_232_975_49;
const Y8_W3: f64 = 1.938_139_137_622_76;
const Y8_W4: f64 = -0.158_240_635_368_243;
const Y8_W5: f64 = -1.444_852_236_860_48;
const Y8_W6: f64 = 0.253_693_336_566_229;
const Y8_W7: f64 = 0.914_844_246_229_740;
const Y8_W0: f64 = 1.0 - 2.0 * (Y8_W1 + Y8_W2 + Y8_W3 + Y8_W4 + Y8_W5 + Y8_W6 + Y8_W7);
const ORDER8: [f64; 15] = [
    Y8_W7, Y8_W6, Y8_W5, Y8_W4, Y8_W3, Y8_W2, Y8_W1, Y8_W0, Y8_W1, Y8_W2, Y8_W3, Y8_W4, Y8_W5,
    Y8_W6, Y8_W7,
];

/// Solve the dense system `A x = b` in place by partial-pivot elimination.
/// `a` is row-major `n x n`. Returns `false` on a singular pivot.
pub(crate) fn solve_dense(n: usize, a: &mut [f64], b: &mut [f64]) -> bool {
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for row in (col + 1)..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best < 1e-300 {
            return false;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for row in (col + 1)..n {
            let f = a[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut v = b[col];
        for k in (col + 1)..n {
            v -= a[col * n + k] * b[k];
        }
        b[col] = v / a[col * n + col];
    }
    true
}

/// Fixed-step symmetric/symplectic stepper.
#[derive(Debug, Clone, Copy)]
pub struct Stepper {
    pub order: SchemeOrder,
}

impl Default for Stepper {
    fn default() -> Self {
        Self {
            order: SchemeOrder::Order6,
        }
    }
}

impl Stepper {
    pub fn new(order: SchemeOrder) -> Self {
        Self { order }
    }

    /// One implicit-midpoint substep of size `h`.
    fn midpoint<S: OdeSystem>(&self, sys: &S, y: &mut [f64], h: f64) -> Result<(), StepError> {
        let n = sys.dim();
        if n > MAX_DIM {
            return Err(StepError::DimensionTooLarge(n));
        }
        let mut f = [0.0; MAX_DIM];
        let mut w = [0.0; MAX_DIM];
        let mut w_next = [0.0; MAX_DIM];
        sys.rhs(y, &mut f[..n]);
        for i in 0..n {
            w[i] = y[i] + 0.5 * h * f[i];
        }
        let scale = y
            .iter()
            .fold(1.0_f64, |acc, v| acc.max(v.abs()))
            .max(1.0);
        let mut converged = false;
        for _ in 0..16 {
            sys.rhs(&w[..n], &mut f[..n]);
            let mut delta = 0.0_f64;
            for i in 0..n {
                w_next[i] = y[i] + 0.5 * h * f[i];
                delta = delta.max((w_next[i] - w[i]).abs());
            }
            w[..n].copy_from_slice(&w_next[..n]);
            if delta <= STAGE_TOL * scale {
                converged = true;
                break;
            }
        }
        if !converged {
            // Newton on F(w) = w - y - (h/2) f(w)
            let mut jac = [0.0; MAX_DIM * MAX_DIM];
            if !sys.jacobian(&w[..n], &mut jac[..n * n]) {
                return Err(StepError::StepRejected { h });
            }
            let mut ok = false;
            for _ in 0..30 {
                sys.rhs(&w[..n], &mut f[..n]);
                let mut rhs = [0.0; MAX_DIM];
                let mut err = 0.0_f64;
                for i in 0..n {
                    rhs[i] = -(w[i] - y[i] - 0.5 * h * f[i]);
                    err = err.max(rhs[i].abs());
                }
                if err <= STAGE_TOL * scale {
                    ok = true;
                    break;
                }
                sys.jacobian(&w[..n], &mut jac[..n * n]);
                let mut m = [0.0; MAX_DIM * MAX_DIM];
                for r in 0..n {
                    for c in 0..n {
                        m[r * n + c] = if r == c { 1.0 } else { 0.0 } - 0.5 * h * jac[r * n + c];
                    }
                }
                if !solve_dense(n, &mut m[..n * n], &mut rhs[..n]) {
                    return Err(StepError::StepRejected { h });
                }
                for i in 0..n {
                    w[i] += rhs[i];
                }
            }
            if !ok {
                return Err(StepError::StepRejected { h });
            }
        }
        for i in 0..n {
            y[i] = 2.0 * w[i] - y[i];
        }
        Ok(())
    }

    /// One composed step of size `h`.
    pub fn step<S: OdeSystem>(&self, sys: &S, y: &mut [f64], h: f64) -> Result<(), StepError> {
        for &frac in self.order.substep_fractions() {
            self.midpoint(sys, y, frac * h)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Harmonic oscillator q'' = -q.
    struct Sho;
    impl OdeSystem for Sho {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, y: &[f64], dy: &mut [f64]) {
            dy[0] = y[1];
            dy[1] = -y[0];
        }
        fn jacobian(&self, _y: &[f64], jac: &mut [f64]) -> bool {
            jac.copy_from_slice(&[0.0, 1.0, -1.0, 0.0]);
            true
        }
    }

    #[test]
    fn midpoint_conserves_quadratic_energy() {
        let st = Stepper::new(SchemeOrder::Order2);
        let mut y = [1.0, 0.0];
        for _ in 0..10_000 {
            st.step(&Sho, &mut y, 1e-2).unwrap();
        }
        let e = 0.5 * (y[0] * y[0] + y[1] * y[1]);
        assert!((e - 0.5).abs() < 1e-12, "energy {e}");
    }

    #[test]
    fn composition_orders_converge() {
        // error at t = 1 for several h; check observed order
        for (order, expect) in [
            (SchemeOrder::Order2, 2.0),
            (SchemeOrder::Order4, 4.0),
            (SchemeOrder::Order6, 6.0),
        ] {
            let st = Stepper::new(order);
            let err = |h: f64| {
                let n = (1.0 / h).round() as usize;
                let mut y = [1.0, 0.0];
                for _ in 0..n {
                    st.step(&Sho, &mut y, h).unwrap();
                }
                ((y[0] - (1.0f64).cos()).powi(2) + (y[1] + (1.0f64).sin()).powi(2)).sqrt()
            };
            let e1 = err(0.05);
            let e2 = err(0.025);
            let p = (e1 / e2).log2();
            assert!(
                (p - expect).abs() < 0.6,
                "{order:?}: observed order {p}, errors {e1:.3e}/{e2:.3e}"
            );
        }
    }

    #[test]
    fn order8_is_very_accurate() {
        // a wrong coefficient set would leave O(h^3) error ~ 1e-4 here
        let st = Stepper::new(SchemeOrder::Order8);
        let err = |h: f64| {
            let n = (1.0 / h).round() as usize;
            let mut y = [1.0, 0.0];
            for _ in 0..n {
                st.step(&Sho, &mut y, h).unwrap();
            }
            ((y[0] - (1.0f64).cos()).powi(2) + (y[1] + (1.0f64).sin()).powi(2)).sqrt()
        };
        assert!(err(0.05) < 1e-11, "err = {:.3e}", err(0.05));
        let p = (err(0.1) / err(0.05)).log2();
        assert!(p > 6.5, "observed order {p}");
    }

    #[test]
    fn reversibility() {
        let st = Stepper::default();
        let mut y = [0.3, 0.8];
        for _ in 0..100 {
            st.step(&Sho, &mut y, 1e-2).unwrap();
        }
        for _ in 0..100 {
            st.step(&Sho, &mut y, -1e-2).unwrap();
        }
        assert!((y[0] - 0.3).abs() < 1e-12);
        assert!((y[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn dense_solver_roundtrip() {
        let mut a = [2.0, 1.0, -1.0, -3.0, -1.0, 2.0, -2.0, 1.0, 2.0];
        let mut b = [8.0, -11.0, -3.0];
        assert!(solve_dense(3, &mut a, &mut b));
        assert!((b[0] - 2.0).abs() < 1e-12);
        assert!((b[1] - 3.0).abs() < 1e-12);
        assert!((b[2] + 1.0).abs() < 1e-12);
    }
}
