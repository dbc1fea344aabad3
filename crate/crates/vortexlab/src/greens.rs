//! Green's kernels of k² − ∂_v² + V: the free kernel, the exact kernel of the
//! step potential 8·1_{[A,A′]}, and the long-range kernel of the mollified
//! potential V_w, tabulated on a grid.

use crate::cutoffs::smooth_step;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::norms::{log_varpi, mu};
use crate::profile::VortexProfile;
use crate::tridiag::Tridiag;
use nalgebra::{Matrix6, Vector6};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PotentialTag {
    Free,
    Step { a: f64, a_prime: f64 },
    Longrange { w: f64 },
    Sampled,
}

/// Tabulated G(v_i, ρ_j), stored row-major.
#[derive(Debug, Clone)]
pub struct GreenKernel {
    pub k: i64,
    pub w: Option<f64>,
    pub grid: Grid,
    pub values: Vec<f64>,
    pub tag: PotentialTag,
}

impl GreenKernel {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.grid.n).map(|i| self.get(i, j)).collect()
    }

    pub fn symmetry_residual(&self) -> f64 {
        let n = self.grid.n;
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                r = r.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        r
    }

    fn from_fn(k: i64, w: Option<f64>, grid: Grid, tag: PotentialTag, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let n = grid.n;
        let values: Vec<f64> = (0..n * n).into_par_iter().map(|ij| f(grid.v(ij / n), grid.v(ij % n))).collect();
        GreenKernel { k, w, grid, values, tag }
    }
}

fn check_k(k: i64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("mode k must be nonzero".into()));
    }
    Ok(k.unsigned_abs() as f64)
}

/// e^{−|k||v−ρ|}/(2|k|).
pub fn free_green(k: i64, v: f64, rho: f64) -> Result<f64> {
    let k = check_k(k)?;
    Ok((-k * (v - rho).abs()).exp() / (2.0 * k))
}

/// Kernel of −∂_r² − r^{−1}∂_r + k²/r² in the radial variable:
/// (ρ/2|k|)·min(r/ρ, ρ/r)^{|k|}.
pub fn free_green_r(k: i64, r: f64, rho: f64) -> Result<f64> {
    let k = check_k(k)?;
    if r <= 0.0 || rho <= 0.0 {
        return Err(Error::Domain("radii must be positive".into()));
    }
    let q = (r / rho).min(rho / r);
    Ok(rho / (2.0 * k) * q.powf(k))
}

pub fn free_kernel(k: i64, grid: Grid) -> Result<GreenKernel> {
    let kk = check_k(k)?;
    Ok(GreenKernel::from_fn(k, None, grid, PotentialTag::Free, move |v, r| {
        (-kk * (v - r).abs()).exp() / (2.0 * kk)
    }))
}

/// Exact kernel of (k² − ∂_v² + 8·1_{[A,A′]})g = δ(· − ρ) for one source ρ.
#[derive(Debug, Clone)]
pub struct StepKernel {
    k: f64,
    mu: f64,
    /// left end of the potential after shifting A′ to 0
    a: f64,
    shift: f64,
    rho: f64,
    reflected: bool,
    source_inside: bool,
    c: [f64; 6],
}

impl StepKernel {
    pub fn new(k: i64, a: f64, a_prime: f64, rho: f64) -> Result<Self> {
        let kk = check_k(k)?;
        if !(a <= a_prime) {
            return Err(Error::Domain(format!("need A ≤ A′, got A = {a}, A′ = {a_prime}")));
        }
        if rho > a_prime {
            let mut s = Self::new(k, -a_prime, -a, -rho)?;
            s.reflected = true;
            return Ok(s);
        }
        let m = mu(kk);
        let (a0, r) = (a - a_prime, rho - a_prime);
        let mut mat = Matrix6::<f64>::zeros();
        let mut rhs = Vector6::<f64>::zeros();
        let inside = r >= a0;
        if !inside {
            // pieces: c1 e^{k(v−ρ)} | c2 e^{k(v−A)} + c3 e^{−k(v−ρ)} | c4 e^{μv} + c5 e^{−μ(v−A)} | c6 e^{−kv}
            let ek = (kk * (r - a0)).exp();
            let ea = (m * a0).exp();
            mat.row_mut(0).copy_from_slice(&[1.0, -ek, -1.0, 0.0, 0.0, 0.0]);
            mat.row_mut(1).copy_from_slice(&[-kk, kk * ek, -kk, 0.0, 0.0, 0.0]);
            rhs[1] = -1.0;
            mat.row_mut(2).copy_from_slice(&[0.0, 1.0, ek, -ea, -1.0, 0.0]);
            mat.row_mut(3).copy_from_slice(&[0.0, kk, -kk * ek, -m * ea, m, 0.0]);
            mat.row_mut(4).copy_from_slice(&[0.0, 0.0, 0.0, 1.0, ea, -1.0]);
            mat.row_mut(5).copy_from_slice(&[0.0, 0.0, 0.0, m, -m * ea, kk]);
        } else {
            // pieces: c1 e^{k(v−A)} | c2 e^{μ(v−ρ)} + c3 e^{−μ(v−A)} | c4 e^{μv} + c5 e^{−μ(v−ρ)} | c6 e^{−kv}
            let ea = (m * (a0 - r)).exp();
            let er = (m * r).exp();
            mat.row_mut(0).copy_from_slice(&[1.0, -ea, -1.0, 0.0, 0.0, 0.0]);
            mat.row_mut(1).copy_from_slice(&[kk, -m * ea, m, 0.0, 0.0, 0.0]);
            mat.row_mut(2).copy_from_slice(&[0.0, 1.0, ea, -er, -1.0, 0.0]);
            mat.row_mut(3).copy_from_slice(&[0.0, -m, m * ea, m * er, -m, 0.0]);
            rhs[3] = -1.0;
            mat.row_mut(4).copy_from_slice(&[0.0, 0.0, 0.0, 1.0, er, -1.0]);
            mat.row_mut(5).copy_from_slice(&[0.0, 0.0, 0.0, m, -m * er, kk]);
        }
        let sol = mat
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("step-kernel coefficient system".into()))?;
        if sol.iter().any(|x| !x.is_finite()) {
            return Err(Error::Singular("step-kernel coefficients are not finite".into()));
        }
        let mut c = [0.0; 6];
        c.copy_from_slice(sol.as_slice());
        Ok(StepKernel { k: kk, mu: m, a: a0, shift: a_prime, rho: r, reflected: false, source_inside: inside, c })
    }

    /// Value and v-derivative at v.
    pub fn eval(&self, v: f64) -> (f64, f64) {
        if self.reflected {
            let (g, dg) = self.eval_unreflected(-v);
            return (g, -dg);
        }
        self.eval_unreflected(v)
    }

    fn eval_unreflected(&self, v: f64) -> (f64, f64) {
        let (k, m, a, r, c) = (self.k, self.mu, self.a, self.rho, &self.c);
        let v = v - self.shift;
        let pair = |c1: f64, r1: f64, x1: f64, c2: f64, r2: f64, x2: f64| {
            let e1 = c1 * (r1 * x1).exp();
            let e2 = c2 * (r2 * x2).exp();
            (e1 + e2, r1 * e1 + r2 * e2)
        };
        if v > 0.0 {
            let e = c[5] * (-k * v).exp();
            return (e, -k * e);
        }
        if !self.source_inside {
            if v <= r {
                let e = c[0] * (k * (v - r)).exp();
                (e, k * e)
            } else if v < a {
                pair(c[1], k, v - a, c[2], -k, v - r)
            } else {
                pair(c[3], m, v, c[4], -m, v - a)
            }
        } else if v <= a {
            let e = c[0] * (k * (v - a)).exp();
            (e, k * e)
        } else if v < r {
            pair(c[1], m, v - r, c[2], -m, v - a)
        } else {
            pair(c[3], m, v, c[4], -m, v - r)
        }
    }
}

/// g_k(v, ρ) for the step potential 8·1_{[A,A′]}.
pub fn step_green(k: i64, a: f64, a_prime: f64, v: f64, rho: f64) -> Result<f64> {
    Ok(StepKernel::new(k, a, a_prime, rho)?.eval(v).0)
}

pub fn step_kernel(k: i64, a: f64, a_prime: f64, grid: Grid) -> Result<GreenKernel> {
    let cols: Vec<StepKernel> = (0..grid.n).map(|j| StepKernel::new(k, a, a_prime, grid.v(j))).collect::<Result<_>>()?;
    let n = grid.n;
    let values = (0..n * n).into_par_iter().map(|ij| cols[ij % n].eval(grid.v(ij / n)).0).collect();
    Ok(GreenKernel { k, w: None, grid, values, tag: PotentialTag::Step { a, a_prime } })
}

/// V_w(v) = e^{2v}D(v)/(B(v)−B(w)) · [1_{[w+2,∞)} ∗ Ψ†](v), defined for w ≤ −5.
pub fn potential_vw(profile: &VortexProfile, w: f64, v: f64) -> Result<f64> {
    if w > -5.0 {
        return Err(Error::Domain(format!("long-range potential needs w ≤ −5, got {w}")));
    }
    let s = smooth_step(v - w - 2.0);
    if s == 0.0 {
        return Ok(0.0);
    }
    Ok(profile.longrange_plateau(v, w)? * s)
}

/// Discrete kernel of k² − ∂_v² + V on `grid` with Robin ends
/// ∂_vG = λ_L G at v_min and ∂_vG = −λ_R G at v_max, λ = √(k²+V(end)).
///
/// The ghost-node closure is scaled by ½ in the end rows, which makes the
/// matrix symmetric; the kernel is then that matrix's inverse divided by h.
pub fn green_matrix(k: i64, grid: Grid, potential: &[f64]) -> Result<Vec<f64>> {
    let kk = check_k(k)?;
    let n = grid.n;
    if potential.len() != n || n < 3 {
        return Err(Error::Grid("potential length must match a grid of at least 3 nodes".into()));
    }
    let h = grid.h;
    let h2 = h * h;
    let mut t = Tridiag::<f64>::new(n);
    for i in 0..n {
        t.diag[i] = kk * kk + potential[i] + 2.0 / h2;
    }
    for i in 0..n - 1 {
        t.lower[i] = -1.0 / h2;
        t.upper[i] = -1.0 / h2;
    }
    let lam_l = (kk * kk + potential[0]).sqrt();
    let lam_r = (kk * kk + potential[n - 1]).sqrt();
    t.diag[0] = 0.5 * (kk * kk + potential[0]) + 1.0 / h2 + lam_l / h;
    t.diag[n - 1] = 0.5 * (kk * kk + potential[n - 1]) + 1.0 / h2 + lam_r / h;
    let lu = t.factor()?;
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0 / h;
            lu.solve(&e)
        })
        .collect();
    let mut values = vec![0.0; n * n];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..n {
            values[i * n + j] = col[i];
        }
    }
    Ok(values)
}

pub fn sampled_kernel(k: i64, grid: Grid, potential: &[f64]) -> Result<GreenKernel> {
    let values = green_matrix(k, grid, potential)?;
    Ok(GreenKernel { k, w: None, grid, values, tag: PotentialTag::Sampled })
}

/// Default grid for the long-range kernel: h = 1/64 on [w−12, 12].
pub fn default_longrange_grid(w: f64) -> Result<Grid> {
    let lo = (w - 12.0).floor();
    Grid::new(lo, 12.0, 1.0 / 64.0)
}

/// 𝒢_k^w: kernel of k² − ∂_v² + V_w.
pub fn longrange_green(profile: &VortexProfile, k: i64, w: f64, grid: Grid) -> Result<GreenKernel> {
    if w > -5.0 {
        return Err(Error::Domain(format!("long-range potential needs w ≤ −5, got {w}")));
    }
    if !grid.contains(w - 5.0, 5.0) {
        return Err(Error::Grid(format!(
            "grid [{}, {}] must contain [w−5, 5] = [{}, 5]",
            grid.v_min,
            grid.v_max(),
            w - 5.0
        )));
    }
    let pot: Vec<f64> = grid.nodes().iter().map(|&v| potential_vw(profile, w, v)).collect::<Result<_>>()?;
    let values = green_matrix(k, grid, &pot)?;
    Ok(GreenKernel { k, w: Some(w), grid, values, tag: PotentialTag::Longrange { w } })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    /// sup |k|·G/ϖ and where it is attained
    pub max_ratio: f64,
    pub max_ratio_at: (f64, f64),
    /// sup |∂_vG|/ϖ off the diagonal and where it is attained
    pub max_derivative_ratio: f64,
    pub max_derivative_ratio_at: (f64, f64),
    pub symmetry_residual: f64,
    pub min_value: f64,
}

/// Ratios of the kernel to the weight ϖ_{k,w*}. The weight uses w* = w for
/// long-range kernels, w* = A for step kernels and no plateau otherwise.
pub fn verify_green_bound(kernel: &GreenKernel) -> BoundReport {
    let g = &kernel.grid;
    let n = g.n;
    let k = kernel.k.unsigned_abs() as f64;
    let w_star = match kernel.tag {
        PotentialTag::Longrange { w } => w,
        PotentialTag::Step { a, .. } => a,
        _ => 0.0,
    };
    let rows: Vec<(f64, (f64, f64), f64, (f64, f64), f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let v = g.v(i);
            let mut best = (0.0, (v, v), 0.0, (v, v), f64::INFINITY);
            for j in 0..n {
                let rho = g.v(j);
                let lw = log_varpi(k, w_star, v, rho);
                let gij = kernel.get(i, j);
                best.4 = best.4.min(gij);
                let r = k * gij.abs() * (-lw).exp();
                if r > best.0 {
                    best.0 = r;
                    best.1 = (v, rho);
                }
                if i >= 1 && i + 1 < n && i.abs_diff(j) > 1 {
                    let dg = (kernel.get(i + 1, j) - kernel.get(i - 1, j)) / (2.0 * g.h);
                    let rd = dg.abs() * (-lw).exp();
                    if rd > best.2 {
                        best.2 = rd;
                        best.3 = (v, rho);
                    }
                }
            }
            best
        })
        .collect();
    let mut rep = BoundReport {
        max_ratio: 0.0,
        max_ratio_at: (0.0, 0.0),
        max_derivative_ratio: 0.0,
        max_derivative_ratio_at: (0.0, 0.0),
        symmetry_residual: kernel.symmetry_residual(),
        min_value: f64::INFINITY,
    };
    for r in rows {
        if r.0 > rep.max_ratio {
            rep.max_ratio = r.0;
            rep.max_ratio_at = r.1;
        }
        if r.2 > rep.max_derivative_ratio {
            rep.max_derivative_ratio = r.2;
            rep.max_derivative_ratio_at = r.3;
        }
        rep.min_value = rep.min_value.min(r.4);
    }
    rep
}
