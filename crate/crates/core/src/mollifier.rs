//! Smooth cutoff primitives shared by the profile bumps and the momentum
//! cutoff: the standard `exp(-1/x)` mollifier transition and the unit bump.

/// `exp(-1/x)` for `x > 0`, zero otherwise. Flat to all orders at 0.
fn f(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

fn f_prime(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp() / (x * x)
    } else {
        0.0
    }
}

/// Smooth step `S(x) = f(x) / (f(x) + f(1-x))`: 0 for `x <= 0`, 1 for `x >= 1`,
/// strictly increasing in between.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = f(x);
    let b = f(1.0 - x);
    a / (a + b)
}

/// Derivative of [`smooth_step`].
pub fn smooth_step_prime(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let a = f(x);
    let b = f(1.0 - x);
    let ap = f_prime(x);
    let bp = -f_prime(1.0 - x);
    (ap * b - a * bp) / ((a + b) * (a + b))
}

/// Unit bump `exp(-1/(u(1-u)))` on `(0,1)`, zero outside. Peak value `e^{-4}`
/// at `u = 1/2`, flat to all orders at both endpoints.
pub fn unit_bump(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    (-1.0 / (u * (1.0 - u))).exp()
}

/// Derivative of [`unit_bump`].
pub fn unit_bump_prime(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    let s = u * (1.0 - u);
    unit_bump(u) * (1.0 - 2.0 * u) / (s * s)
}
