//! Mode parameters, the weights ϖ/ζ, the windowed Y-norm and a windowed
//! Fourier diagnostic.

use crate::error::{Error, Result};
use crate::grid::Grid;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

/// Parameters attached to an azimuthal mode k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveSpec {
    pub k: i64,
    pub k_dagger: i64,
}

impl WaveSpec {
    pub fn new(k: i64, k_dagger: i64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("mode k must be nonzero".into()));
        }
        if k_dagger < 5 {
            return Err(Error::Domain(format!("k_dagger must be at least 5, got {k_dagger}")));
        }
        Ok(WaveSpec { k, k_dagger })
    }

    pub fn abs_k(&self) -> f64 {
        self.k.unsigned_abs() as f64
    }

    /// κ_k = min(|k|, k†).
    pub fn kappa(&self) -> i64 {
        self.k.abs().min(self.k_dagger)
    }

    /// μ_k = √(k²+8).
    pub fn mu(&self) -> f64 {
        mu(self.abs_k())
    }

    /// μ*_k = (9μ_k + |k| + 2)/10.
    pub fn mu_star(&self) -> f64 {
        mu_star(self.abs_k())
    }

    /// μ*_{κ_k}, the decay rate required of the data's left tail.
    pub fn mu_star_kappa(&self) -> f64 {
        mu_star(self.kappa() as f64)
    }
}

pub fn mu_star(k: f64) -> f64 {
    (9.0 * mu(k) + k + 2.0) / 10.0
}

pub fn mu(k: f64) -> f64 {
    (k * k + 8.0).sqrt()
}

/// Length of [min(v,ρ), max(v,ρ)] ∩ [min(w*,0), 0].
pub fn overlap_d(w_star: f64, v: f64, rho: f64) -> f64 {
    let lo = v.min(rho).max(w_star.min(0.0));
    let hi = v.max(rho).min(0.0);
    (hi - lo).max(0.0)
}

/// ϖ_{k,w*}(v,ρ) = exp(−|k||v−ρ| − (μ_k−|k|)·d_{w*}(v,ρ)).
pub fn varpi(k_eff: f64, w_star: f64, v: f64, rho: f64) -> f64 {
    log_varpi(k_eff, w_star, v, rho).exp()
}

pub fn log_varpi(k_eff: f64, w_star: f64, v: f64, rho: f64) -> f64 {
    let k = k_eff.abs();
    -k * (v - rho).abs() - (mu(k) - k) * overlap_d(w_star, v, rho)
}

/// ζ = 1/ϖ.
pub fn zeta(k_eff: f64, w_star: f64, v: f64, rho: f64) -> f64 {
    (-log_varpi(k_eff, w_star, v, rho)).exp()
}

/// Centered differences with one-sided ends.
pub fn gradient(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let h = grid.h;
    (0..n)
        .map(|i| {
            if i == 0 {
                (f[1] - f[0]) / h
            } else if i == n - 1 {
                (f[n - 1] - f[n - 2]) / h
            } else {
                (f[i + 1] - f[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// sup over integer j of ‖e^{|k*||v|}h‖_{L²(j,j+2)} + |k|^{−1}‖e^{|k*||v|}h′‖_{L²(j,j+2)},
/// by trapezoid quadrature over the nodes of each window. `dh` defaults to
/// centered differences of `h`.
pub fn y_norm(grid: &Grid, h: &[f64], dh: Option<&[f64]>, k: f64, k_star: f64) -> Result<f64> {
    if grid.h > 2.0 / 3.0 {
        return Err(Error::Grid(format!("spacing {} leaves fewer than 4 points per window", grid.h)));
    }
    let owned;
    let dh = match dh {
        Some(d) => d,
        None => {
            owned = gradient(grid, h);
            &owned
        }
    };
    let j_lo = grid.v_min.floor() as i64;
    let j_hi = grid.v_max().ceil() as i64 - 2;
    let mut best: f64 = 0.0;
    for j in j_lo..=j_hi.max(j_lo) {
        let (a, b) = (j as f64, j as f64 + 2.0);
        let idx: Vec<usize> = (0..grid.n)
            .filter(|&i| {
                let v = grid.v(i);
                v >= a - 1e-12 && v <= b + 1e-12
            })
            .collect();
        if idx.len() < 4 {
            continue;
        }
        let (mut s0, mut s1) = (0.0, 0.0);
        for (m, &i) in idx.iter().enumerate() {
            let wt = if m == 0 || m == idx.len() - 1 { 0.5 } else { 1.0 } * grid.h;
            let e = (k_star.abs() * grid.v(i).abs()).exp();
            s0 += wt * (e * h[i]).powi(2);
            s1 += wt * (e * dh[i]).powi(2);
        }
        best = best.max(s0.sqrt() + s1.sqrt() / k.abs());
    }
    Ok(best)
}

/// Σ_m e^{2δ⟨k,ξ_m⟩^{1/2}} |ĥ_m|² Δξ for h multiplied by the cutoff
/// exp(−1/(1−x²)) rescaled to `window`. Trend monitor only.
pub fn gevrey_norm_estimate(grid: &Grid, h: &[f64], k: f64, delta: f64, window: (f64, f64)) -> Result<f64> {
    let (a, b) = window;
    if !(a < b) || !grid.contains(a, b) {
        return Err(Error::Grid(format!("window [{a}, {b}] not inside the grid")));
    }
    let idx: Vec<usize> = (0..grid.n).filter(|&i| grid.v(i) > a && grid.v(i) < b).collect();
    let m = idx.len();
    if m < 4 {
        return Err(Error::Grid("window holds fewer than 4 nodes".into()));
    }
    let samples: Vec<f64> = idx
        .iter()
        .map(|&i| {
            let x = (2.0 * grid.v(i) - (a + b)) / (b - a);
            let chi = if x.abs() < 1.0 { (-1.0 / (1.0 - x * x)).exp() } else { 0.0 };
            chi * h[i]
        })
        .collect();
    Ok(spectral_weighted_sum(&samples, grid.h, k, delta))
}

/// Σ_m e^{2δ⟨k,ξ_m⟩^{1/2}} |ĥ_m|² Δξ for compactly supported samples with spacing `dv`.
pub fn spectral_weighted_sum(samples: &[f64], dv: f64, k: f64, delta: f64) -> f64 {
    let m = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x * dv, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let dxi = 2.0 * std::f64::consts::PI / (m as f64 * dv);
    let mut s = 0.0;
    for (j, c) in buf.iter().enumerate() {
        let jj = if j <= m / 2 { j as f64 } else { j as f64 - m as f64 };
        let xi = jj * dxi;
        let br = (2.0 + k * k + xi * xi).sqrt();
        s += (2.0 * delta * br.sqrt()).exp() * c.norm_sqr() * dxi;
    }
    s
}
