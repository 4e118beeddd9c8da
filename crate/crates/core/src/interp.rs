//! Cubic Hermite tables on non-uniform grids, with first and second
//! derivative evaluation of the piecewise polynomial.

use serde::{Deserialize, Serialize};

/// Piecewise cubic Hermite interpolant through `(x_i, y_i, y'_i)` nodes.
/// Evaluation clamps to the end values outside the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HermiteTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
    dys: Vec<f64>,
}

impl HermiteTable {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, dys: Vec<f64>) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert_eq!(xs.len(), dys.len());
        assert!(xs.len() >= 2, "need at least two nodes");
        assert!(
            xs.windows(2).all(|w| w[1] > w[0]),
            "grid must be strictly increasing"
        );
        Self { xs, ys, dys }
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn nodes(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.xs, &self.ys, &self.dys)
    }

    fn cell(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.xs.len() - 2),
        }
    }

    /// Value at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.cell(x);
        let (h, t) = self.local(i, x);
        let (y0, y1, d0, d1) = (self.ys[i], self.ys[i + 1], self.dys[i], self.dys[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
    }

    /// First derivative at `x`.
    pub fn deriv(&self, x: f64) -> f64 {
        let i = self.cell(x);
        let (h, t) = self.local(i, x);
        let (y0, y1, d0, d1) = (self.ys[i], self.ys[i + 1], self.dys[i], self.dys[i + 1]);
        let t2 = t * t;
        let dh00 = 6.0 * t2 - 6.0 * t;
        let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
        let dh01 = -6.0 * t2 + 6.0 * t;
        let dh11 = 3.0 * t2 - 2.0 * t;
        (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1
    }

    /// Second derivative at `x` (piecewise linear, discontinuous at nodes).
    pub fn deriv2(&self, x: f64) -> f64 {
        let i = self.cell(x);
        let (h, t) = self.local(i, x);
        let (y0, y1, d0, d1) = (self.ys[i], self.ys[i + 1], self.dys[i], self.dys[i + 1]);
        let ddh00 = 12.0 * t - 6.0;
        let ddh10 = 6.0 * t - 4.0;
        let ddh01 = -12.0 * t + 6.0;
        let ddh11 = 6.0 * t - 2.0;
        (ddh00 * y0 + ddh01 * y1) / (h * h) + (ddh10 * d0 + ddh11 * d1) / h
    }

    fn local(&self, i: usize, x: f64) -> (f64, f64) {
        let h = self.xs[i + 1] - self.xs[i];
        let t = ((x - self.xs[i]) / h).clamp(0.0, 1.0);
        (h, t)
    }
}

/// Cubic Hermite table on a uniform grid: O(1) cell lookup for hot paths.
#[derive(Debug, Clone)]
pub struct UniformHermite {
    x0: f64,
    inv_h: f64,
    h: f64,
    ys: Vec<f64>,
    dys: Vec<f64>,
}

impl UniformHermite {
    /// Resample `(f, f')` evaluators over `[a, b]` with `n` cells.
    pub fn resample<F: Fn(f64) -> (f64, f64)>(f: F, a: f64, b: f64, n: usize) -> Self {
        assert!(n >= 1 && b > a);
        let h = (b - a) / n as f64;
        let mut ys = Vec::with_capacity(n + 1);
        let mut dys = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let x = if i == n { b } else { a + i as f64 * h };
            let (y, dy) = f(x);
            ys.push(y);
            dys.push(dy);
        }
        Self {
            x0: a,
            inv_h: 1.0 / h,
            h,
            ys,
            dys,
        }
    }

    #[inline]
    fn locate(&self, x: f64) -> (usize, f64) {
        let s = (x - self.x0) * self.inv_h;
        let max_cell = (self.ys.len() - 2) as f64;
        let cell = s.floor().clamp(0.0, max_cell);
        ((cell as usize), (s - cell).clamp(0.0, 1.0))
    }

    /// Value, first, and second derivative in one cell lookup.
    #[inline]
    pub fn eval_all(&self, x: f64) -> (f64, f64, f64) {
        let (i, t) = self.locate(x);
        let (y0, y1, d0, d1) = (self.ys[i], self.ys[i + 1], self.dys[i], self.dys[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * self.h * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * self.h * d1;
        let dv = ((6.0 * t2 - 6.0 * t) * (y0 - y1)) * self.inv_h
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (3.0 * t2 - 2.0 * t) * d1;
        let ddv = ((12.0 * t - 6.0) * (y0 - y1)) * self.inv_h * self.inv_h
            + ((6.0 * t - 4.0) * d0 + (6.0 * t - 2.0) * d1) * self.inv_h;
        (v, dv, ddv)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_all(x).0
    }

    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        self.eval_all(x).1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_of<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(
        f: F,
        df: G,
        a: f64,
        b: f64,
        n: usize,
    ) -> HermiteTable {
        let xs: Vec<f64> = (0..=n)
            .map(|i| a + (b - a) * i as f64 / n as f64)
            .collect();
        let ys = xs.iter().map(|&x| f(x)).collect();
        let dys = xs.iter().map(|&x| df(x)).collect();
        HermiteTable::new(xs, ys, dys)
    }

    #[test]
    fn reproduces_cubics_exactly() {
        let f = |x: f64| 2.0 * x * x * x - x * x + 3.0 * x - 5.0;
        let df = |x: f64| 6.0 * x * x - 2.0 * x + 3.0;
        let t = table_of(f, df, -1.0, 2.0, 7);
        for i in 0..100 {
            let x = -1.0 + 3.0 * i as f64 / 99.0;
            assert!((t.eval(x) - f(x)).abs() < 1e-12);
            assert!((t.deriv(x) - df(x)).abs() < 1e-11);
            assert!((t.deriv2(x) - (12.0 * x - 2.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn interpolates_sin_accurately() {
        let t = table_of(|x| x.sin(), |x| x.cos(), 0.0, 3.0, 300);
        for i in 0..500 {
            let x = 3.0 * i as f64 / 499.0;
            assert!((t.eval(x) - x.sin()).abs() < 1e-9);
            assert!((t.deriv(x) - x.cos()).abs() < 1e-7);
        }
    }

    #[test]
    fn clamps_outside_grid() {
        let t = table_of(|x| x, |_| 1.0, 0.0, 1.0, 4);
        assert_eq!(t.eval(-5.0), 0.0);
        assert_eq!(t.eval(9.0), 1.0);
    }

    #[test]
    fn uniform_matches_nonuniform() {
        let f = |x: f64| (2.0 * x).sin() + 0.3 * x;
        let df = |x: f64| 2.0 * (2.0 * x).cos() + 0.3;
        let u = UniformHermite::resample(|x| (f(x), df(x)), 0.0, 2.0, 800);
        for i in 0..=1000 {
            let x = 2.0 * i as f64 / 1000.0;
            let (v, dv, ddv) = u.eval_all(x);
            assert!((v - f(x)).abs() < 1e-10);
            assert!((dv - df(x)).abs() < 1e-7);
            assert!((ddv - (-4.0 * (2.0 * x).sin())).abs() < 1e-4);
        }
    }
}
