//! Uniform grids in the log variable v = log r.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub v_min: f64,
    pub h: f64,
    pub n: usize,
}

impl Grid {
    /// Grid covering `[v_min, v_max]` with spacing `h`. The span must be an
    /// integer multiple of `h` up to rounding.
    pub fn new(v_min: f64, v_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Grid(format!("spacing must be positive, got {h}")));
        }
        if !(v_min < v_max) {
            return Err(Error::Grid(format!("need v_min < v_max, got [{v_min}, {v_max}]")));
        }
        let cells = (v_max - v_min) / h;
        let m = cells.round();
        if (cells - m).abs() > 1e-6 {
            return Err(Error::Grid(format!(
                "span {} is not a multiple of h = {h}",
                v_max - v_min
            )));
        }
        Ok(Grid { v_min, h, n: m as usize + 1 })
    }

    #[inline]
    pub fn v(&self, i: usize) -> f64 {
        self.v_min + self.h * i as f64
    }

    pub fn v_max(&self) -> f64 {
        self.v(self.n - 1)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.v(i)).collect()
    }

    pub fn nearest(&self, v: f64) -> usize {
        let i = ((v - self.v_min) / self.h).round();
        i.clamp(0.0, (self.n - 1) as f64) as usize
    }

    pub fn contains(&self, a: f64, b: f64) -> bool {
        let tol = 1e-9 * self.h;
        self.v_min <= a + tol && b <= self.v_max() + tol
    }

    /// Trapezoid weights including the factor h.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let mut w = vec![self.h; self.n];
        w[0] *= 0.5;
        w[self.n - 1] *= 0.5;
        w
    }

    pub fn refine(&self) -> Grid {
        Grid { v_min: self.v_min, h: 0.5 * self.h, n: 2 * self.n - 1 }
    }
}

/// Trapezoid integral of samples against the grid.
pub fn trapezoid(grid: &Grid, f: &[f64]) -> f64 {
    let n = f.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = f[1..n - 1].iter().sum();
    grid.h * (inner + 0.5 * (f[0] + f[n - 1]))
}

/// Relative L² distance restricted to a mask, `‖a−b‖/‖b‖`.
pub fn rel_l2(a: &[f64], b: &[f64], mask: impl Fn(usize) -> bool) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..a.len().min(b.len()) {
        if mask(i) {
            num += (a[i] - b[i]).powi(2);
            den += b[i].powi(2);
        }
    }
    if den == 0.0 {
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (num / den).sqrt()
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts_nodes() {
        let g = Grid::new(-1.0, 1.0, 0.25).unwrap();
        assert_eq!(g.n, 9);
        assert_eq!(g.v_max(), 1.0);
        assert_eq!(g.nearest(0.13), 5);
    }

    #[test]
    fn rejects_bad_spacing() {
        assert!(Grid::new(0.0, 1.0, 0.3).is_err());
        assert!(Grid::new(1.0, 0.0, 0.1).is_err());
        assert!(Grid::new(0.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let g = Grid::new(0.0, 2.0, 0.1).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|v| 3.0 * v + 1.0).collect();
        assert!((trapezoid(&g, &f) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn slope_of_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        assert!((ls_slope(&x, &y) - 2.0).abs() < 1e-14);
    }
}
