//! Spectral density functions: the damped resolvent solve for Γ_{k,ε}^ι,
//! the ε → 0 limit Γ_k with its profile Θ_k and boundary trace, and the
//! post-hoc checks on the limit (derivative jump, principal-value residual,
//! depletion rate).

use crate::cutoffs::{phi0, phi0_d1, phi0_d2, phi_star};
use crate::error::{Error, Result};
use crate::grid::{ls_slope, Grid};
use crate::norms::{spectral_weighted_sum, WaveSpec};
use crate::profile::{BParts, VortexProfile};
use crate::quad::{gl8, integrate};
use crate::tridiag::Tridiag;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Initial vorticity samples f_0^k, either tabulated (linear interpolation,
/// zero outside the table) or given as a function.
#[derive(Clone)]
pub enum DataSource {
    Samples { grid: Grid, values: Vec<f64> },
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataSource::Samples { grid, .. } => write!(f, "Samples({grid:?})"),
            DataSource::Function(_) => write!(f, "Function"),
        }
    }
}

impl DataSource {
    pub fn zero() -> Self {
        DataSource::Function(Arc::new(|_| 0.0))
    }

    /// amplitude·exp(−((v−center)/width)²)
    pub fn gaussian(center: f64, width: f64, amplitude: f64) -> Self {
        DataSource::Function(Arc::new(move |v| amplitude * (-((v - center) / width).powi(2)).exp()))
    }

    pub fn function(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        DataSource::Function(Arc::new(f))
    }

    pub fn eval(&self, v: f64) -> f64 {
        match self {
            DataSource::Function(f) => f(v),
            DataSource::Samples { grid, values } => {
                let t = (v - grid.v_min) / grid.h;
                if t < 0.0 || t > (grid.n - 1) as f64 {
                    return 0.0;
                }
                let i = (t.floor() as usize).min(grid.n - 2);
                let s = t - i as f64;
                (1.0 - s) * values[i] + s * values[i + 1]
            }
        }
    }

    /// α·f + β·g, pointwise.
    pub fn combine(alpha: f64, f: &DataSource, beta: f64, g: &DataSource) -> DataSource {
        let (f, g) = (f.clone(), g.clone());
        DataSource::Function(Arc::new(move |v| alpha * f.eval(v) + beta * g.eval(v)))
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailFit {
    /// fitted slope of log|F_0| over the leftmost 7 units of the sampling
    /// range (None if F_0 is negligible there)
    pub left_slope: Option<f64>,
    /// same over the rightmost 7 units
    pub right_slope: Option<f64>,
    pub left_required: f64,
    pub right_required: f64,
}

/// f_0^k together with the corrected data F_0k = f_0^k − (σ_k/c*)De^{|k|v}Φ_0.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub k: i64,
    pub wave: WaveSpec,
    pub profile: VortexProfile,
    pub sigma_k: f64,
    /// f_0^k after projection (for |k| = 1)
    pub source: DataSource,
    /// coefficient of the projected-out Gaussian e^{−v²}, 0 if |k| ≠ 1
    pub projection: f64,
    pub grid: Grid,
    pub f0: Vec<f64>,
    pub big_f0: Vec<f64>,
    pub m_dagger: f64,
    pub tails: TailFit,
}

/// Sampling half-range for data given as a function.
const RANGE: f64 = 24.0;
/// Width of the tail windows at either end of the sampling range.
const TAIL_WINDOW: f64 = 7.0;
/// Gevrey radius in the windowed weighted norm.
const DELTA1: f64 = 0.1;

/// ∫ f e^{3v} dv over [−40, 40] on unit panels.
pub fn cubic_moment(f: &DataSource) -> f64 {
    (-40..40)
        .map(|j| integrate(|v| f.eval(v) * (3.0 * v).exp(), j as f64, j as f64 + 1.0, 1e-16, 1e-13))
        .sum()
}

impl InitialData {
    pub fn build(profile: &VortexProfile, k: i64, raw: DataSource, sigma_k: f64) -> Result<Self> {
        Self::build_with(profile, WaveSpec::new(k, 5)?, raw, sigma_k)
    }

    pub fn build_with(profile: &VortexProfile, wave: WaveSpec, raw: DataSource, sigma_k: f64) -> Result<Self> {
        let k = wave.k;
        if k.abs() > wave.k_dagger && sigma_k != 0.0 {
            return Err(Error::Data(format!("σ_k must vanish for |k| > k† = {}", wave.k_dagger)));
        }
        if !sigma_k.is_finite() {
            return Err(Error::Data("σ_k must be finite".into()));
        }
        let (source, projection) = if k.abs() == 1 {
            let psi = DataSource::gaussian(0.0, 1.0, 1.0);
            let alpha = cubic_moment(&raw) / (PI.sqrt() * 2.25f64.exp());
            (DataSource::combine(1.0, &raw, -alpha, &psi), alpha)
        } else {
            (raw, 0.0)
        };
        let grid = match &source {
            DataSource::Samples { grid, .. } => {
                if grid.v_min > -5.0 - TAIL_WINDOW || grid.v_max() < 5.0 + TAIL_WINDOW {
                    return Err(Error::Data(format!(
                        "samples must cover [−12, 12], got [{}, {}]",
                        grid.v_min,
                        grid.v_max()
                    )));
                }
                *grid
            }
            DataSource::Function(_) => Grid::new(-RANGE, RANGE, 1.0 / 64.0)?,
        };
        let f0: Vec<f64> = grid.nodes().iter().map(|&v| source.eval(v)).collect();
        let mut data = InitialData {
            k,
            wave,
            profile: *profile,
            sigma_k,
            source,
            projection,
            grid,
            f0: Vec::new(),
            big_f0: Vec::new(),
            m_dagger: 0.0,
            tails: TailFit { left_slope: None, right_slope: None, left_required: 0.0, right_required: 0.0 },
        };
        data.big_f0 = grid.nodes().iter().map(|&v| data.big_f0_at(v)).collect();
        data.f0 = f0;
        data.tails = data.fit_tails()?;
        data.m_dagger = data.windowed_norm();
        Ok(data)
    }

    pub fn f0_at(&self, v: f64) -> f64 {
        self.source.eval(v)
    }

    /// The correction (σ_k/c*)e^{|k|v}Φ_0(v) relating Π and Γ.
    pub fn pi_shift(&self, v: f64) -> f64 {
        if self.sigma_k == 0.0 {
            return 0.0;
        }
        self.sigma_k / self.profile.c_star * (self.wave.abs_k() * v).exp() * phi0(v)
    }

    pub fn big_f0_at(&self, v: f64) -> f64 {
        let f = self.source.eval(v);
        if self.sigma_k == 0.0 {
            return f;
        }
        f - self.profile.big_d(v) * self.pi_shift(v)
    }

    /// (σ_k/c*)(2|k|e^{|k|v}Φ_0′ + e^{|k|v}Φ_0″): the smooth source created by
    /// moving the e^{|k|v}Φ_0 part of Π to the right-hand side.
    pub fn smooth_source(&self, v: f64) -> f64 {
        if self.sigma_k == 0.0 {
            return 0.0;
        }
        let k = self.wave.abs_k();
        self.sigma_k / self.profile.c_star * (k * v).exp() * (2.0 * k * phi0_d1(v) + phi0_d2(v))
    }

    pub fn is_zero(&self) -> bool {
        self.sigma_k == 0.0 && self.f0.iter().all(|&x| x == 0.0)
    }

    fn fit_tails(&self) -> Result<TailFit> {
        let left_required = self.wave.mu_star_kappa();
        let right_required = -(self.wave.kappa() as f64 + 8.0);
        let scale = self.big_f0.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let fit = |lo: f64, hi: f64| -> Option<f64> {
            let (xs, ys): (Vec<f64>, Vec<f64>) = (0..self.grid.n)
                .map(|i| (self.grid.v(i), self.big_f0[i].abs()))
                .filter(|&(v, a)| v >= lo - 1e-12 && v <= hi + 1e-12 && a > 1e-300 && a > 1e-14 * scale)
                .map(|(v, a)| (v, a.ln()))
                .unzip();
            if xs.len() < 32 {
                None
            } else {
                Some(ls_slope(&xs, &ys))
            }
        };
        let (lo, hi) = (self.grid.v_min, self.grid.v_max());
        let left_slope = fit(lo, lo + TAIL_WINDOW);
        let right_slope = fit(hi - TAIL_WINDOW, hi);
        if let Some(s) = left_slope {
            if s < 0.98 * left_required {
                return Err(Error::Data(format!(
                    "left tail decays like e^{{{s:.3}v}}, slower than the required e^{{{left_required:.3}v}}"
                )));
            }
        }
        if let Some(s) = right_slope {
            if s > 0.98 * right_required {
                return Err(Error::Data(format!(
                    "right tail decays like e^{{{s:.3}v}}, slower than the required e^{{{right_required:.3}v}}"
                )));
            }
        }
        Ok(TailFit { left_slope, right_slope, left_required, right_required })
    }

    /// sup_j ‖e^{δ⟨k,ξ⟩^{1/2}} (F_0Φ*(·−j))^‖·(1 + e^{(μ*+κ+8)j})e^{−μ*j}
    /// over integer windows [j−4, j+4] inside the sampling range.
    fn windowed_norm(&self) -> f64 {
        let ms = self.wave.mu_star_kappa();
        let kap = self.wave.kappa() as f64 + 8.0;
        let dv = 1.0 / 32.0;
        let lo = (self.grid.v_min + 4.0).ceil() as i64;
        let hi = (self.grid.v_max() - 4.0).floor() as i64;
        (lo..=hi)
            .map(|j| {
                let jf = j as f64;
                let samples: Vec<f64> = (0..256)
                    .map(|m| {
                        let v = jf - 4.0 + m as f64 * dv;
                        self.big_f0_at(v) * phi_star(v - jf)
                    })
                    .collect();
                let norm = spectral_weighted_sum(&samples, dv, self.wave.abs_k(), DELTA1).sqrt();
                let weight = (-ms * jf).exp() + ((kap) * jf).exp();
                norm * weight
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Iota {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Iota {
    fn sign(self) -> f64 {
        match self {
            Iota::Plus => 1.0,
            Iota::Minus => -1.0,
        }
    }
}

/// Γ_{k,ε}^ι(·, w) and Π_{k,ε}^ι(·, w) on the solver grid.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralSlice {
    pub k: i64,
    /// the grid node used for w
    pub w: f64,
    pub epsilon: f64,
    pub iota: Iota,
    pub grid: Grid,
    #[serde(skip)]
    pub gamma: Vec<Complex64>,
    #[serde(skip)]
    pub pi: Vec<Complex64>,
    /// max-norm residual of the discrete system relative to its right-hand side
    pub residual: f64,
}

/// Precomputed Gauss points of every element for one (profile, data, grid).
///
/// The equation (k² − ∂²)Γ + e^{2v}D/(ΔB + iιε)·Γ = e^{2v}F_0/(ΔB + iιε) + s
/// is discretized with continuous piecewise-linear elements. On the two
/// elements touching w the pole of 1/(ΔB + iιε) is split off: its linear
/// part is integrated in closed form and the remainder on panels graded
/// geometrically toward w, so the discrete problem is accurate for any ε > 0.
pub struct SdfSolver {
    profile: VortexProfile,
    data: Arc<InitialData>,
    grid: Grid,
    k2: f64,
    gv: Vec<f64>,
    gw: Vec<f64>,
    xd: Vec<f64>,
    rhs_f: Vec<f64>,
    src: Vec<f64>,
    bp: Vec<BParts>,
    node_bp: Vec<BParts>,
}

const NG: usize = 8;

impl SdfSolver {
    pub fn new(profile: &VortexProfile, data: Arc<InitialData>, grid: Grid) -> Result<Self> {
        if grid.n < 8 {
            return Err(Error::Grid("solver grid needs at least 8 nodes".into()));
        }
        let (x, w) = gl8();
        let ne = grid.n - 1;
        let h = grid.h;
        let mut gv = Vec::with_capacity(ne * NG);
        let mut gw = Vec::with_capacity(ne * NG);
        for e in 0..ne {
            let c = grid.v(e) + 0.5 * h;
            for g in 0..NG {
                gv.push(c + 0.5 * h * x[g]);
                gw.push(0.5 * h * w[g]);
            }
        }
        let xd = gv.par_iter().map(|&v| profile.xd(v)).collect();
        let rhs_f = gv.par_iter().map(|&v| (2.0 * v).exp() * data.big_f0_at(v)).collect();
        let src = gv.par_iter().map(|&v| data.smooth_source(v)).collect();
        let bp = gv.par_iter().map(|&v| profile.b_parts(v)).collect();
        let node_bp = grid.nodes().iter().map(|&v| profile.b_parts(v)).collect();
        let k2 = data.wave.abs_k().powi(2);
        Ok(SdfSolver { profile: *profile, data, grid, k2, gv, gw, xd, rhs_f, src, bp, node_bp })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn data(&self) -> &InitialData {
        &self.data
    }

    /// Checks 0 < ε < 0.1·e^{−2|w|}.
    pub fn check_epsilon(eps: f64, w: f64) -> Result<()> {
        let cap = 0.1 * (-2.0 * w.abs()).exp();
        if !(eps > 0.0) {
            return Err(Error::Epsilon { eps, reason: "ε > 0 is required".into() });
        }
        if !(eps < cap) {
            return Err(Error::Epsilon { eps, reason: format!("ε < 0.1·e^(−2|w|) = {cap:e} is required") });
        }
        Ok(())
    }

    /// Index of the node w snaps to; w must lie at least two cells inside.
    pub fn snap(&self, w: f64) -> Result<usize> {
        let j = self.grid.nearest(w);
        if j < 2 || j + 3 > self.grid.n || (w - self.grid.v(j)).abs() > self.grid.h {
            return Err(Error::Grid(format!(
                "w = {w} must lie inside [{}, {}] with two cells to spare",
                self.grid.v_min,
                self.grid.v_max()
            )));
        }
        Ok(j)
    }

    pub fn solve(&self, iota: Iota, eps: f64, w: f64) -> Result<SpectralSlice> {
        Self::check_epsilon(eps, w)?;
        let jw = self.snap(w)?;
        let wn = self.grid.v(jw);
        let (mat, rhs) = self.assemble(iota.sign() * eps, jw);
        let gamma = mat.solve(&rhs)?;
        let res = mat.apply(&gamma);
        let scale = rhs.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let err = res.iter().zip(&rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        let residual = if scale > 0.0 { err / scale } else { err };
        let pi = gamma
            .iter()
            .enumerate()
            .map(|(i, g)| g + self.data.pi_shift(self.grid.v(i)))
            .collect();
        Ok(SpectralSlice { k: self.data.k, w: wn, epsilon: eps, iota, grid: self.grid, gamma, pi, residual })
    }

    /// Condensed element matrices and loads for signed shift se = ιε.
    fn assemble(&self, se: f64, jw: usize) -> (Tridiag<Complex64>, Vec<Complex64>) {
        let n = self.grid.n;
        let h = self.grid.h;
        let pw = self.node_bp[jw];
        let per_elem: Vec<[Complex64; 9]> = (0..n - 1)
            .into_par_iter()
            .map(|e| {
                if e + 1 == jw || e == jw {
                    self.singular_element(e, jw, se)
                } else {
                    self.regular_element(e, pw, se)
                }
            })
            .collect();
        let mut t = Tridiag::<Complex64>::new(n);
        let mut r = vec![Complex64::new(0.0, 0.0); n];
        for (e, p) in per_elem.iter().enumerate() {
            let (a, b) = self.local_system(p);
            let c = condense(&a, &b);
            t.diag[e] += c.0;
            t.upper[e] += c.1;
            t.lower[e] += c.1;
            t.diag[e + 1] += c.2;
            r[e] += c.3;
            r[e + 1] += c.4;
        }
        // natural Robin ends: Γ′ = λ_L Γ at v_min, Γ′ = −λ_R Γ at v_max
        let v0 = self.grid.v_min;
        let q0 = self.profile.xd(v0) / (Complex64::new(VortexProfile::delta_from_parts(self.node_bp[0], pw), se));
        t.diag[0] += (self.k2 + q0.re.max(0.0)).sqrt();
        let qn = self.profile.xd(self.grid.v_max())
            / (Complex64::new(VortexProfile::delta_from_parts(self.node_bp[n - 1], pw), se));
        t.diag[n - 1] += (self.k2 + qn.re.max(0.0)).sqrt();
        let _ = h;
        (t, r)
    }

    /// Full 3×3 element matrix (end, mid, end) and load from the pole
    /// integrals `p` = [00, 01, 02, 11, 12, 22, load0, load1, load2].
    fn local_system(&self, p: &[Complex64; 9]) -> ([[Complex64; 3]; 3], [Complex64; 3]) {
        let h = self.grid.h;
        const K: [[f64; 3]; 3] = [[7.0, -8.0, 1.0], [-8.0, 16.0, -8.0], [1.0, -8.0, 7.0]];
        const M: [[f64; 3]; 3] = [[4.0, 2.0, -1.0], [2.0, 16.0, 2.0], [-1.0, 2.0, 4.0]];
        let pot = [[p[0], p[1], p[2]], [p[1], p[3], p[4]], [p[2], p[4], p[5]]];
        let mut a = [[Complex64::new(0.0, 0.0); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] = pot[i][j] + K[i][j] / (3.0 * h) + self.k2 * h * M[i][j] / 30.0;
            }
        }
        (a, [p[6], p[7], p[8]])
    }

    /// Quadratic shape functions on the element starting at `va`.
    #[inline]
    fn shapes(&self, va: f64, v: f64) -> [f64; 3] {
        let t = (v - va) / self.grid.h;
        [(1.0 - t) * (1.0 - 2.0 * t), 4.0 * t * (1.0 - t), t * (2.0 * t - 1.0)]
    }

    #[inline]
    fn integrands(&self, n: [f64; 3], xd: f64, f: f64) -> [f64; 9] {
        [
            xd * n[0] * n[0],
            xd * n[0] * n[1],
            xd * n[0] * n[2],
            xd * n[1] * n[1],
            xd * n[1] * n[2],
            xd * n[2] * n[2],
            f * n[0],
            f * n[1],
            f * n[2],
        ]
    }

    fn regular_element(&self, e: usize, pw: BParts, se: f64) -> [Complex64; 9] {
        let va = self.grid.v(e);
        let mut acc = [Complex64::new(0.0, 0.0); 9];
        for g in 0..NG {
            let q = e * NG + g;
            let inv = 1.0 / Complex64::new(VortexProfile::delta_from_parts(self.bp[q], pw), se);
            let n = self.shapes(va, self.gv[q]);
            let p = self.integrands(n, self.xd[q], self.rhs_f[q]);
            for m in 0..9 {
                acc[m] += inv * (p[m] * self.gw[q]);
            }
            if self.data.sigma_k != 0.0 {
                for m in 0..3 {
                    acc[6 + m] += self.gw[q] * n[m] * self.src[q];
                }
            }
        }
        acc
    }

    fn singular_element(&self, e: usize, jw: usize, se: f64) -> [Complex64; 9] {
        let (va, vb) = (self.grid.v(e), self.grid.v(e + 1));
        let data = &*self.data;
        let mut acc = [Complex64::new(0.0, 0.0); 9];
        pole_integrals(&self.profile, (va, vb), self.grid.v(jw), se, 9, &mut acc, |v, out| {
            let f = (2.0 * v).exp() * data.big_f0_at(v);
            out.copy_from_slice(&self.integrands(self.shapes(va, v), self.profile.xd(v), f));
        });
        if data.sigma_k != 0.0 {
            let (x, wt) = gl8();
            let hh = 0.5 * (vb - va);
            for g in 0..NG {
                let v = va + hh * (1.0 + x[g]);
                let n = self.shapes(va, v);
                let s = data.smooth_source(v);
                for m in 0..3 {
                    acc[6 + m] += hh * wt[g] * n[m] * s;
                }
            }
        }
        acc
    }
}

/// ∫ ψ_m(v)/(B(v) − B(w) + i·se) dv over `elem` = [a, b], with w = a or w = b,
/// for m < `n_out`, added into `acc`. `psi` must be smooth on the element.
///
/// The linear part 1/(B′(w)(v−w) + i·se) of the pole is integrated in closed
/// form against ψ(w); the bounded remainders are integrated on panels graded
/// geometrically toward w, down to below the width |se/B′(w)|.
pub fn pole_integrals(
    profile: &VortexProfile,
    elem: (f64, f64),
    w: f64,
    se: f64,
    n_out: usize,
    acc: &mut [Complex64],
    psi: impl Fn(f64, &mut [f64]),
) {
    let (va, vb) = elem;
    let h = vb - va;
    let pw = profile.b_parts(w);
    let beta = profile.bp(w);
    let mut psi_w = vec![0.0; n_out];
    psi(w, &mut psi_w);
    let mut p = vec![0.0; n_out];
    let log_int = ((Complex64::new(beta * (vb - w), se)).ln() - (Complex64::new(beta * (va - w), se)).ln()) / beta;
    let dir = if (va - w).abs() < (vb - w).abs() { 1.0 } else { -1.0 };
    let delta = (se / beta).abs();
    let levels = ((h / delta).log2().ceil() as i64 + 4).clamp(3, 60) as i32;
    let (x, wt) = gl8();
    let mut panel = |t0: f64, t1: f64| {
        for g in 0..NG {
            let t = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * x[g];
            let v = w + dir * t;
            let dt = 0.5 * (t1 - t0) * wt[g];
            let full = 1.0 / Complex64::new(VortexProfile::delta_from_parts(profile.b_parts(v), pw), se);
            let l = 1.0 / Complex64::new(beta * dir * t, se);
            psi(v, &mut p);
            for m in 0..n_out {
                acc[m] += (full - l) * (p[m] * dt) + l * ((p[m] - psi_w[m]) * dt);
            }
        }
    };
    panel(0.0, h * 2f64.powi(-levels));
    for m in (0..levels).rev() {
        panel(h * 2f64.powi(-m - 1), h * 2f64.powi(-m));
    }
    for m in 0..n_out {
        acc[m] += log_int * psi_w[m];
    }
}

/// Eliminates the midpoint unknown: returns (a00, a02, a22, b0, b2).
fn condense(a: &[[Complex64; 3]; 3], b: &[Complex64; 3]) -> (Complex64, Complex64, Complex64, Complex64, Complex64) {
    let inv = 1.0 / a[1][1];
    (
        a[0][0] - a[0][1] * a[1][0] * inv,
        a[0][2] - a[0][1] * a[1][2] * inv,
        a[2][2] - a[2][1] * a[1][2] * inv,
        b[0] - a[0][1] * b[1] * inv,
        b[2] - a[2][1] * b[1] * inv,
    )
}

/// One-shot solve on `grid`.
pub fn solve_pi(
    profile: &VortexProfile,
    iota: Iota,
    epsilon: f64,
    w: f64,
    data: Arc<InitialData>,
    grid: Grid,
) -> Result<SpectralSlice> {
    SdfSolver::new(profile, data, grid)?.solve(iota, epsilon, w)
}

/// ε_j = eps0·base^{−j}·e^{−2|w|}, j = 0..=levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsSchedule {
    pub eps0: f64,
    pub base: f64,
    pub levels: usize,
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule { eps0: 1e-3, base: 4.0, levels: 3 }
    }
}

impl EpsSchedule {
    pub fn epsilons(&self, w: f64) -> Vec<f64> {
        let s = (-2.0 * w.abs()).exp();
        (0..=self.levels).map(|j| self.eps0 * self.base.powi(-(j as i32)) * s).collect()
    }
}

/// Γ_k(·, w) = 2 lim Im Γ⁺_{k,ε}(·, w) with its profile Θ_k(v) = Γ_k(v + w, w)
/// and trace ϝ_k(w) = lim Re Γ⁺_{k,ε}(w, w).
#[derive(Debug, Clone, Serialize)]
pub struct LimitSlice {
    pub k: i64,
    /// the grid node w was snapped to
    pub w: f64,
    pub w_index: usize,
    pub grid: Grid,
    #[serde(skip)]
    pub gamma_limit: Vec<f64>,
    /// grid of Θ: the solver grid shifted by −w
    pub theta_grid: Grid,
    #[serde(skip)]
    pub theta: Vec<f64>,
    pub trace: f64,
    pub extrapolation_order: f64,
    /// per-step orders log_base(‖d_j‖/‖d_{j+1}‖)
    pub orders: Vec<f64>,
    /// L² norms of successive differences of 2·Im Γ⁺
    pub differences: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// false if successive differences failed to shrink; the finest-ε
    /// value is then returned without extrapolation
    pub monotone: bool,
    pub max_residual: f64,
}

impl LimitSlice {
    /// Θ at index i of `theta_grid` (same as Γ_k at solver index i).
    pub fn theta_at(&self, v: f64) -> Option<f64> {
        let t = (v - self.theta_grid.v_min) / self.theta_grid.h;
        let i = t.round();
        if (t - i).abs() > 1e-9 || i < 0.0 || i as usize >= self.theta.len() {
            return None;
        }
        Some(self.theta[i as usize])
    }
}

impl SdfSolver {
    pub fn limit(&self, w: f64, schedule: &EpsSchedule) -> Result<LimitSlice> {
        if schedule.levels < 1 || !(schedule.base > 1.0) {
            return Err(Error::Config("ε schedule needs base > 1 and at least one refinement".into()));
        }
        let jw = self.snap(w)?;
        let wn = self.grid.v(jw);
        let eps = schedule.epsilons(wn);
        let slices: Vec<SpectralSlice> =
            eps.par_iter().map(|&e| self.solve(Iota::Plus, e, wn)).collect::<Result<_>>()?;
        let ys: Vec<Vec<f64>> = slices.iter().map(|s| s.gamma.iter().map(|z| 2.0 * z.im).collect()).collect();
        let traces: Vec<f64> = slices.iter().map(|s| s.gamma[jw].re).collect();
        let l2 = |a: &[f64], b: &[f64]| {
            (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() * self.grid.h).sqrt()
        };
        let differences: Vec<f64> = ys.windows(2).map(|p| l2(&p[1], &p[0])).collect();
        let orders: Vec<f64> = differences
            .windows(2)
            .map(|d| if d[1] > 0.0 { (d[0] / d[1]).ln() / schedule.base.ln() } else { f64::INFINITY })
            .collect();
        let monotone = differences.windows(2).all(|d| d[1] <= d[0]);
        let last = ys.len() - 1;
        let p = orders.last().copied().unwrap_or(1.0);
        let max_residual = slices.iter().fold(0.0f64, |m, s| m.max(s.residual));
        let (gamma_limit, trace, order) = if differences.iter().all(|&d| d == 0.0) {
            (ys[last].clone(), traces[last], 0.0)
        } else if monotone && p.is_finite() && p > 0.0 {
            let c = 1.0 / (schedule.base.powf(p) - 1.0);
            let g = ys[last].iter().zip(&ys[last - 1]).map(|(a, b)| a + c * (a - b)).collect();
            let tr = traces[last] + c * (traces[last] - traces[last - 1]);
            (g, tr, p)
        } else {
            (ys[last].clone(), traces[last], p)
        };
        let theta_grid = Grid { v_min: self.grid.v_min - wn, h: self.grid.h, n: self.grid.n };
        Ok(LimitSlice {
            k: self.data.k,
            w: wn,
            w_index: jw,
            grid: self.grid,
            theta: gamma_limit.clone(),
            gamma_limit,
            theta_grid,
            trace,
            extrapolation_order: order,
            orders,
            differences,
            epsilons: eps,
            monotone,
            max_residual,
        })
    }
}

pub fn limit_gamma(
    profile: &VortexProfile,
    w: f64,
    data: Arc<InitialData>,
    grid: Grid,
    schedule: &EpsSchedule,
) -> Result<LimitSlice> {
    SdfSolver::new(profile, data, grid)?.limit(w, schedule)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct JumpReport {
    pub measured: f64,
    pub predicted: f64,
    pub residual: f64,
}

/// Cells on each side of the origin used by [`jump_check`].
pub const JUMP_CELLS: std::ops::RangeInclusive<usize> = 2..=6;

/// Compares [∂_vΘ](0) with 2πe^{2w}(Dϝ − F_0)(w)/B′(w).
///
/// Near the origin q = A/v + O(1) with A = e^{2w}D(w)/B′(w), so the slope
/// difference at distance s is D(s) = [∂_vΘ] + 2A²Θ(0)·s·log s + c·s + O(s² log s).
/// The cell averages of the s·log s term are subtracted from the one-sided
/// first differences 2–6 cells off the origin and the rest is fitted by a
/// line in s.
pub fn jump_check(slice: &LimitSlice, data: &InitialData) -> JumpReport {
    let p = &data.profile;
    let (t, j, h) = (&slice.theta, slice.w_index, slice.grid.h);
    let w = slice.w;
    let a = p.xd(w) / p.bp(w);
    let slog = |x: f64| if x == 0.0 { 0.0 } else { 0.5 * x * x * x.ln() - 0.25 * x * x };
    let (xs, ys): (Vec<f64>, Vec<f64>) = JUMP_CELLS
        .map(|m| {
            let (s0, s1) = ((m - 1) as f64 * h, m as f64 * h);
            let right = (t[j + m] - t[j + m - 1]) / h;
            let left = (t[j - m + 1] - t[j - m]) / h;
            let sing = 2.0 * a * a * t[j] * (slog(s1) - slog(s0)) / h;
            (0.5 * (s0 + s1), right - left - sing)
        })
        .unzip();
    let slope = ls_slope(&xs, &ys);
    let (mx, my) = (xs.iter().sum::<f64>() / xs.len() as f64, ys.iter().sum::<f64>() / ys.len() as f64);
    let measured = my - slope * mx;
    let predicted = 2.0 * PI * (2.0 * w).exp() * (p.big_d(w) * slice.trace - data.big_f0_at(w)) / p.bp(w);
    let residual = if predicted == 0.0 && measured == 0.0 {
        0.0
    } else {
        (measured - predicted).abs() / predicted.abs().max(f64::MIN_POSITIVE)
    };
    JumpReport { measured, predicted, residual }
}

/// Default half-width of the region around v = 0 left out of [`pv_residual`].
pub const PV_EXCLUSION: f64 = 0.25;

/// max over |v| ≥ `exclusion` of |(k² − ∂²)Θ + e^{2(v+w)}D(v+w)Θ/(B(v+w) − B(w))|
/// divided by max|Θ|, with a five-point second difference.
pub fn pv_residual(slice: &LimitSlice, profile: &VortexProfile, exclusion: f64) -> f64 {
    let t = &slice.theta;
    let g = slice.theta_grid;
    let h = g.h;
    let k2 = (slice.k as f64).powi(2);
    let scale = t.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let n = t.len();
    (2..n - 2)
        .into_par_iter()
        .filter_map(|i| {
            let v = g.v(i);
            // keep the stencil off the origin
            if v.abs() < exclusion.max(2.5 * h) {
                return None;
            }
            let d2 = (-t[i - 2] + 16.0 * t[i - 1] - 30.0 * t[i] + 16.0 * t[i + 1] - t[i + 2]) / (12.0 * h * h);
            let vv = v + slice.w;
            let q = profile.xd(vv) / profile.delta_b(vv, slice.w);
            Some((k2 * t[i] - d2 + q * t[i]).abs())
        })
        .reduce(|| 0.0, f64::max)
        / scale
}

/// −slope of log|Θ| against v over `window` (in the Θ variable).
pub fn depletion_fit(slice: &LimitSlice, window: (f64, f64)) -> Result<f64> {
    let (a, b) = window;
    if !(b - a >= 4.0) {
        return Err(Error::Domain(format!("fit window [{a}, {b}] is shorter than 4 units")));
    }
    let g = slice.theta_grid;
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..g.n)
        .filter(|&i| g.v(i) >= a - 1e-12 && g.v(i) <= b + 1e-12 && slice.theta[i] != 0.0)
        .map(|i| (g.v(i), slice.theta[i].abs().ln()))
        .unzip();
    if xs.len() < 8 {
        return Err(Error::Data("too few nonzero samples in the fit window".into()));
    }
    Ok(-ls_slope(&xs, &ys))
}

/// The standard depletion window: Θ-variable v ∈ [2, −w − 2], i.e. absolute
/// positions [w + 2, −2] to the right of the source.
pub fn depletion_window(w: f64) -> Result<(f64, f64)> {
    if w > -10.0 {
        return Err(Error::Domain(format!("depletion fits need w ≤ −10, got {w}")));
    }
    Ok((2.0, -w - 2.0))
}
