//! Quadrature kernels: fixed Gauss-Legendre panels and adaptive Simpson.

/// 8-point Gauss-Legendre nodes/weights on [-1, 1].
const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Single 8-point Gauss-Legendre panel over [a, b].
pub fn gauss8<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for i in 0..8 {
        s += GL8_W[i] * f(c + h * GL8_X[i]);
    }
    s * h
}

/// Composite 8-point Gauss-Legendre with `n` panels.
pub fn gauss8_composite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = 0.0;
    for i in 0..n {
        s += gauss8(f, a + i as f64 * h, a + (i + 1) as f64 * h);
    }
    s
}

/// Adaptive Simpson to absolute tolerance `tol`. Returns `None` if the
/// recursion depth budget is exhausted before convergence.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Option<f64> {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Option<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let err = left + right - whole;
        if err.abs() <= 15.0 * tol {
            return Some(left + right + err / 15.0);
        }
        if depth == 0 {
            return None;
        }
        let l = rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
        let r = rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
        Some(l + r)
    }
    if a == b {
        return Some(0.0);
    }
    let fa = f(a);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, a, b);
    rec(f, a, b, fa, fm, fb, whole, tol, 60)
}
