//! Midpoint stepping of a base flow together with linear tangent blocks.
//!
//! For a tangent system `v' = A(z(t)) v` riding on a base orbit, the implicit
//! midpoint stage of the combined system decouples: first the base stage `w`
//! is solved as usual, then each tangent vector advances by the exact Cayley
//! map `v <- (I - (h/2)A(w))^{-1} (I + (h/2)A(w)) v`. The Cayley map inherits
//! the conservation properties of the midpoint rule (Wronskians, symplectic
//! forms of Hamiltonian blocks) up to the stage solve tolerance.

use crate::flow::integrator::{OdeSystem, SchemeOrder, StepError, Stepper, MAX_DIM};

/// Maximum tangent block dimension (variational blocks of a 3-dof flow).
pub const MAX_BLOCK: usize = 6;

/// Supplies the tangent matrix `A` (row-major `k x k`) at a base stage point.
pub trait TangentMatrix {
    fn block_dim(&self) -> usize;
    fn fill(&self, base_stage: &[f64], a: &mut [f64]);
}

/// Solve `(I - B) x = (I + B) v` in place of `v` via dense elimination.
fn cayley_apply(k: usize, b: &[f64], vs: &mut [&mut [f64]]) {
    let mut m = [0.0; MAX_BLOCK * MAX_BLOCK];
    for r in 0..k {
        for c in 0..k {
            m[r * k + c] = if r == c { 1.0 } else { 0.0 } - b[r * k + c];
        }
    }
    // LU factorization with partial pivoting, shared across the vectors
    let mut perm = [0usize; MAX_BLOCK];
    for (i, p) in perm.iter_mut().enumerate().take(k) {
        *p = i;
    }
    for col in 0..k {
        let mut piv = col;
        let mut best = m[col * k + col].abs();
        for row in (col + 1)..k {
            let v = m[row * k + col].abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if piv != col {
            for c in 0..k {
                m.swap(col * k + c, piv * k + c);
            }
            perm.swap(col, piv);
        }
        let d = m[col * k + col];
        for row in (col + 1)..k {
            let f = m[row * k + col] / d;
            m[row * k + col] = f;
            for c in (col + 1)..k {
                m[row * k + c] -= f * m[col * k + c];
            }
        }
    }
    for v in vs.iter_mut() {
        // rhs = (I + B) v
        let mut rhs = [0.0; MAX_BLOCK];
        for r in 0..k {
            let mut s = v[r];
            for c in 0..k {
                s += b[r * k + c] * v[c];
            }
            rhs[r] = s;
        }
        // permute and solve
        let mut x = [0.0; MAX_BLOCK];
        for r in 0..k {
            x[r] = rhs[perm[r]];
        }
        for r in 0..k {
            for c in 0..r {
                x[r] -= m[r * k + c] * x[c];
            }
        }
        for r in (0..k).rev() {
            for c in (r + 1)..k {
                x[r] -= m[r * k + c] * x[c];
            }
            x[r] /= m[r * k + r];
        }
        v[..k].copy_from_slice(&x[..k]);
    }
}

/// Step the base system and the riding tangent vectors by one composed step.
pub fn step_linearized<S: OdeSystem, T: TangentMatrix>(
    stepper: &Stepper,
    sys: &S,
    tangent: &T,
    y: &mut [f64],
    vectors: &mut [&mut [f64]],
    h: f64,
) -> Result<(), StepError> {
    let k = tangent.block_dim();
    debug_assert!(k <= MAX_BLOCK);
    let mut a = [0.0; MAX_BLOCK * MAX_BLOCK];
    let mut b = [0.0; MAX_BLOCK * MAX_BLOCK];
    for &frac in stepper.order.substep_fractions() {
        let hs = frac * h;
        // base midpoint substep, capturing the stage point
        let mut w = [0.0; MAX_DIM];
        let n = sys.dim();
        w[..n].copy_from_slice(y);
        midpoint_stage(sys, &mut w[..n], hs)?;
        // tangent Cayley at the stage
        tangent.fill(&w[..n], &mut a[..k * k]);
        for r in 0..k * k {
            b[r] = 0.5 * hs * a[r];
        }
        cayley_apply(k, &b[..k * k], vectors);
        // base update from the stage: y <- 2w - y
        for i in 0..n {
            y[i] = 2.0 * w[i] - y[i];
        }
    }
    Ok(())
}

/// Solve the midpoint stage `w = y + (h/2) f(w)` in place of `w` (which must
/// enter holding `y`).
fn midpoint_stage<S: OdeSystem>(sys: &S, w: &mut [f64], h: f64) -> Result<(), StepError> {
    let n = sys.dim();
    let mut f = [0.0; MAX_DIM];
    let y: [f64; MAX_DIM] = {
        let mut y = [0.0; MAX_DIM];
        y[..n].copy_from_slice(w);
        y
    };
    sys.rhs(w, &mut f[..n]);
    for i in 0..n {
        w[i] = y[i] + 0.5 * h * f[i];
    }
    let scale = y[..n]
        .iter()
        .fold(1.0_f64, |acc, v| acc.max(v.abs()));
    for _ in 0..16 {
        sys.rhs(w, &mut f[..n]);
        let mut delta = 0.0_f64;
        for i in 0..n {
            let next = y[i] + 0.5 * h * f[i];
            delta = delta.max((next - w[i]).abs());
            w[i] = next;
        }
        if delta <= crate::flow::integrator::STAGE_TOL * scale {
            return Ok(());
        }
    }
    // Newton fallback
    let mut jac = [0.0; MAX_DIM * MAX_DIM];
    if !sys.jacobian(w, &mut jac[..n * n]) {
        return Err(StepError::StepRejected { h });
    }
    for _ in 0..30 {
        sys.rhs(w, &mut f[..n]);
        let mut rhs = [0.0; MAX_DIM];
        let mut err = 0.0_f64;
        for i in 0..n {
            rhs[i] = -(w[i] - y[i] - 0.5 * h * f[i]);
            err = err.max(rhs[i].abs());
        }
        if err <= crate::flow::integrator::STAGE_TOL * scale {
            return Ok(());
        }
        sys.jacobian(w, &mut jac[..n * n]);
        let mut m = [0.0; MAX_DIM * MAX_DIM];
        for r in 0..n {
            for c in 0..n {
                m[r * n + c] = if r == c { 1.0 } else { 0.0 } - 0.5 * h * jac[r * n + c];
            }
        }
        if !crate::flow::integrator::solve_dense(n, &mut m[..n * n], &mut rhs[..n]) {
            return Err(StepError::StepRejected { h });
        }
        for i in 0..n {
            w[i] += rhs[i];
        }
    }
    Err(StepError::StepRejected { h })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Sho;
    impl OdeSystem for Sho {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, y: &[f64], dy: &mut [f64]) {
            dy[0] = y[1];
            dy[1] = -y[0];
        }
    }

    /// Tangent of the oscillator is the oscillator itself.
    struct ShoTangent;
    impl TangentMatrix for ShoTangent {
        fn block_dim(&self) -> usize {
            2
        }
        fn fill(&self, _base: &[f64], a: &mut [f64]) {
            a.copy_from_slice(&[0.0, 1.0, -1.0, 0.0]);
        }
    }

    #[test]
    fn tangent_matches_flow_for_linear_system() {
        let st = Stepper::new(SchemeOrder::Order4);
        let mut y = [1.0, 0.0];
        let mut v = [1.0, 0.0];
        let mut blocks: [&mut [f64]; 1] = [&mut v];
        for _ in 0..1000 {
            step_linearized(&st, &Sho, &ShoTangent, &mut y, &mut blocks, 1e-2).unwrap();
        }
        // for a linear system the tangent flow equals the flow itself, up to
        // the accumulated stage-iteration tolerance of the base solve
        assert!((v[0] - y[0]).abs() < 1e-9);
        assert!((v[1] - y[1]).abs() < 1e-9);
    }

    #[test]
    fn cayley_preserves_wronskian() {
        let st = Stepper::new(SchemeOrder::Order2);
        let mut y = [0.5, 0.2];
        let mut v1 = [1.0, 0.0];
        let mut v2 = [0.0, 1.0];
        for _ in 0..2000 {
            let mut blocks: [&mut [f64]; 2] = [&mut v1, &mut v2];
            step_linearized(&st, &Sho, &ShoTangent, &mut y, &mut blocks, 5e-3).unwrap();
        }
        let w = v1[0] * v2[1] - v1[1] * v2[0];
        assert!((w - 1.0).abs() < 1e-12, "wronskian {w}");
    }
}
