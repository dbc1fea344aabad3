//! Time evolution of a single mode from the spectral density, the split of
//! the vorticity into local and nonlocal profiles, decay diagnostics, and an
//! independent method-of-lines integrator of the linearized equation.

use crate::cutoffs::phi_star;
use crate::error::{Error, Result};
use crate::grid::{ls_slope, Grid};
use crate::profile::VortexProfile;
use crate::sdf::{DataSource, EpsSchedule, InitialData, SdfSolver};
use crate::tridiag::Tridiag;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

type C = Complex64;

/// Largest phase |k|t·|ΔB| allowed on a single w-cell.
pub const FILON_PHASE_CAP: f64 = 50.0;

/// Γ_k(·, w) on the solver grid for every w node of a sub-grid.
#[derive(Debug, Clone)]
pub struct ThetaField {
    pub k: i64,
    pub grid: Grid,
    /// solver-grid indices of the w nodes
    pub w_index: Vec<usize>,
    /// B(w) at the w nodes
    pub u: Vec<f64>,
    /// Γ_k(v_i, w_j), one column per w node
    pub gamma: Vec<Vec<f64>>,
    pub traces: Vec<f64>,
}

impl ThetaField {
    /// Solves for Γ_k(·, w) at every `w_stride`-th node of `grid` inside `w_range`.
    pub fn compute(
        profile: &VortexProfile,
        data: Arc<InitialData>,
        grid: Grid,
        w_range: (f64, f64),
        w_stride: usize,
        schedule: &EpsSchedule,
    ) -> Result<Self> {
        let solver = SdfSolver::new(profile, data.clone(), grid)?;
        let (lo, hi) = (grid.nearest(w_range.0), grid.nearest(w_range.1));
        if lo < 2 || hi + 3 > grid.n || lo >= hi || w_stride == 0 {
            return Err(Error::Grid(format!(
                "w range [{}, {}] must lie inside the solver grid with two cells to spare",
                w_range.0, w_range.1
            )));
        }
        let w_index: Vec<usize> = (lo..=hi).step_by(w_stride).collect();
        let slices: Vec<(Vec<f64>, f64)> = w_index
            .par_iter()
            .map(|&j| solver.limit(grid.v(j), schedule).map(|l| (l.gamma_limit, l.trace)))
            .collect::<Result<_>>()?;
        let (gamma, traces) = slices.into_iter().unzip();
        let u = w_index.iter().map(|&j| profile.big_b(grid.v(j))).collect();
        Ok(ThetaField { k: data.k, grid, w_index, u, gamma, traces })
    }

    /// Θ ≡ 0 on the given w nodes.
    pub fn zero(k: i64, grid: Grid, w_index: Vec<usize>, profile: &VortexProfile) -> Self {
        let u = w_index.iter().map(|&j| profile.big_b(grid.v(j))).collect();
        let m = w_index.len();
        ThetaField { k, grid, w_index, u, gamma: vec![vec![0.0; grid.n]; m], traces: vec![0.0; m] }
    }

    /// Largest t for which every w-cell carries phase at most [`FILON_PHASE_CAP`].
    pub fn t_max(&self) -> f64 {
        let du = self.u.windows(2).map(|p| (p[1] - p[0]).abs()).fold(0.0, f64::max);
        FILON_PHASE_CAP / ((self.k.abs() as f64) * du)
    }

    /// Weights c_j with ∫ g(w)e^{−iktB(w)}B′(w)dw ≈ Σ c_j g(w_j) for g linear
    /// in u = B(w) on each cell.
    pub fn filon_weights(&self, t: f64) -> Result<Vec<C>> {
        if t < 0.0 || t > self.t_max() {
            return Err(Error::Domain(format!("t = {t} outside the resolvable range [0, {:.3e}]", self.t_max())));
        }
        let kappa = self.k as f64 * t;
        let mut c = vec![C::new(0.0, 0.0); self.u.len()];
        for j in 0..self.u.len() - 1 {
            let (u0, u1) = (self.u[j], self.u[j + 1]);
            let d = u1 - u0;
            let (e0, e1) = filon_moments(kappa * d);
            let ph = C::from_polar(d, -kappa * u0);
            c[j] += ph * (e0 - e1);
            c[j + 1] += ph * e1;
        }
        Ok(c)
    }
}

/// (∫_0^1 e^{−iθs}ds, ∫_0^1 s e^{−iθs}ds)
fn filon_moments(theta: f64) -> (C, C) {
    if theta.abs() < 1e-2 {
        // Taylor series: Σ (−iθ)^n/(n+1)!, Σ (−iθ)^n/(n!(n+2))
        let z = C::new(0.0, -theta);
        let (mut e0, mut e1) = (C::new(0.0, 0.0), C::new(0.0, 0.0));
        let mut p = C::new(1.0, 0.0);
        let mut fact = 1.0;
        for n in 0..8 {
            if n > 0 {
                p *= z;
                fact *= n as f64;
            }
            e0 += p / (fact * (n + 1) as f64);
            e1 += p / (fact * (n + 2) as f64);
        }
        return (e0, e1);
    }
    let em = C::from_polar(1.0, -theta);
    let it = C::new(0.0, theta);
    ((1.0 - em) / it, (em * (1.0 + it) - 1.0) / (theta * theta))
}

/// φ_k(t, ·) = −(1/2π)∫e^{−iktB(w)}Γ_k(·, w)B′(w)dw.
pub fn stream_from_theta(field: &ThetaField, t: f64) -> Result<Vec<C>> {
    let c = field.filon_weights(t)?;
    let n = field.grid.n;
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let s: C = c.iter().zip(&field.gamma).map(|(cj, g)| cj * g[i]).sum();
            -s / (2.0 * PI)
        })
        .collect())
}

/// f = −e^{−2v}(k² − ∂²)φ with the 3-point stencil; end nodes are set to 0.
pub fn vorticity_from_stream(grid: &Grid, k: i64, phi: &[C]) -> Vec<C> {
    let k2 = (k as f64).powi(2);
    let h2 = grid.h * grid.h;
    let n = phi.len();
    (0..n)
        .map(|i| {
            if i == 0 || i == n - 1 {
                return C::new(0.0, 0.0);
            }
            let lap = (phi[i + 1] - 2.0 * phi[i] + phi[i - 1]) / h2;
            -(-2.0 * grid.v(i)).exp() * (k2 * phi[i] - lap)
        })
        .collect()
}

/// (f¹, f²): the vorticity split by Φ*(v − w) inside the w-integral.
pub fn split_f(field: &ThetaField, t: f64) -> Result<(Vec<C>, Vec<C>)> {
    let c = field.filon_weights(t)?;
    let g = field.grid;
    let n = g.n;
    let k2 = (field.k as f64).powi(2);
    let h2 = g.h * g.h;
    let pairs: Vec<(C, C)> = (0..n)
        .into_par_iter()
        .map(|i| {
            if i == 0 || i == n - 1 {
                return (C::new(0.0, 0.0), C::new(0.0, 0.0));
            }
            let v = g.v(i);
            let (mut a, mut b) = (C::new(0.0, 0.0), C::new(0.0, 0.0));
            for (j, col) in field.gamma.iter().enumerate() {
                let op = k2 * col[i] - (col[i + 1] - 2.0 * col[i] + col[i - 1]) / h2;
                let cut = phi_star(v - g.v(field.w_index[j]));
                a += c[j] * (op * cut);
                b += c[j] * (op * (1.0 - cut));
            }
            let s = (-2.0 * v).exp() / (2.0 * PI);
            (a * s, b * s)
        })
        .collect();
    Ok(pairs.into_iter().unzip())
}

/// φ, f, f¹, f² at a list of times.
#[derive(Debug, Clone)]
pub struct ModeEvolution {
    pub k: i64,
    pub grid: Grid,
    pub times: Vec<f64>,
    pub phi: Vec<Vec<C>>,
    pub f: Vec<Vec<C>>,
    pub f1: Vec<Vec<C>>,
    pub f2: Vec<Vec<C>>,
}

pub fn evolve(field: &ThetaField, times: &[f64]) -> Result<ModeEvolution> {
    let mut evo = ModeEvolution {
        k: field.k,
        grid: field.grid,
        times: times.to_vec(),
        phi: Vec::new(),
        f: Vec::new(),
        f1: Vec::new(),
        f2: Vec::new(),
    };
    for &t in times {
        let phi = stream_from_theta(field, t)?;
        let f = vorticity_from_stream(&field.grid, field.k, &phi);
        let (f1, f2) = split_f(field, t)?;
        evo.phi.push(phi);
        evo.f.push(f);
        evo.f1.push(f1);
        evo.f2.push(f2);
    }
    Ok(evo)
}

/// Relative L² distance of complex grid functions over nodes with `mask`.
pub fn rel_l2_c(a: &[C], b: &[C], mask: impl Fn(usize) -> bool) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..a.len().min(b.len()) {
        if mask(i) {
            num += (a[i] - b[i]).norm_sqr();
            den += b[i].norm_sqr();
        }
    }
    if den == 0.0 {
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (num / den).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowDecay {
    pub v_star: f64,
    /// ⟨t⟩·‖F²_{v*}(t)‖·|B′(v*)| per time
    pub f2_weighted: Vec<f64>,
    pub f2_sup: f64,
    /// ‖F¹_{v*}(t)‖ per time
    pub f1_norm: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub times: Vec<f64>,
    pub windows: Vec<WindowDecay>,
    /// −slope of log‖F¹_{v*}‖ against v* over the windows with v* > 0,
    /// and slope over windows with v* < 0, at each time
    pub f1_right_exponent: Vec<Option<f64>>,
    pub f1_left_exponent: Vec<Option<f64>>,
    /// |∫f(t,v)g(v)dv| for the test function g
    pub weak_proxy: Vec<f64>,
}

/// Diagnostics on windows Φ*(v − v*) and against a Gaussian test function.
pub fn decay_report(
    evo: &ModeEvolution,
    profile: &VortexProfile,
    windows: &[f64],
    test_fn: &DataSource,
) -> Result<DecayReport> {
    if evo.times.len() < 4 {
        return Err(Error::Domain(format!("need at least 4 time samples, got {}", evo.times.len())));
    }
    let g = evo.grid;
    for &vs in windows {
        if !g.contains(vs - 4.0, vs + 4.0) {
            return Err(Error::Grid(format!("window around v* = {vs} leaves the grid")));
        }
    }
    let tw = g.trapezoid_weights();
    // the phase e^{ikBt} does not change the windowed L² norm
    let norm_in = |f: &[C], vs: f64| -> f64 {
        let mut s = 0.0;
        for i in 0..g.n {
            let v = g.v(i);
            let cut = phi_star(v - vs);
            if cut == 0.0 {
                continue;
            }
            s += tw[i] * (f[i] * cut).norm_sqr();
        }
        s.sqrt()
    };
    let win: Vec<WindowDecay> = windows
        .iter()
        .map(|&vs| {
            let bp = profile.bp(vs).abs();
            let f2_weighted: Vec<f64> = evo
                .times
                .iter()
                .zip(&evo.f2)
                .map(|(&t, f2)| (1.0 + t * t).sqrt() * norm_in(f2, vs) * bp)
                .collect();
            let f1_norm: Vec<f64> = evo.f1.iter().map(|f1| norm_in(f1, vs)).collect();
            WindowDecay { v_star: vs, f2_sup: f2_weighted.iter().copied().fold(0.0, f64::max), f2_weighted, f1_norm }
        })
        .collect();
    let fit_side = |left: bool, ti: usize| -> Option<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = win
            .iter()
            .filter(|w| if left { w.v_star < 0.0 } else { w.v_star > 0.0 })
            .filter(|w| w.f1_norm[ti] > 0.0)
            .map(|w| (w.v_star, w.f1_norm[ti].ln()))
            .unzip();
        if xs.len() < 3 {
            return None;
        }
        let s = ls_slope(&xs, &ys);
        Some(if left { s } else { -s })
    };
    let nt = evo.times.len();
    let weak: Vec<f64> = evo
        .f
        .iter()
        .map(|f| (0..g.n).map(|i| f[i] * (tw[i] * test_fn.eval(g.v(i)))).sum::<C>().norm())
        .collect();
    Ok(DecayReport {
        times: evo.times.clone(),
        f1_left_exponent: (0..nt).map(|ti| fit_side(true, ti)).collect(),
        f1_right_exponent: (0..nt).map(|ti| fit_side(false, ti)).collect(),
        windows: win,
        weak_proxy: weak,
    })
}

/// Solves (k² − ∂²)φ = rhs with the 3-point stencil and Robin ends
/// φ′ = |k|φ at v_min, φ′ = −|k|φ at v_max.
pub fn elliptic_solve(grid: &Grid, k: i64, rhs: &[C]) -> Result<Vec<C>> {
    let n = grid.n;
    let kk = k.unsigned_abs() as f64;
    let h = grid.h;
    let h2 = h * h;
    let mut t = Tridiag::<C>::new(n);
    for i in 0..n {
        t.diag[i] = C::new(kk * kk + 2.0 / h2, 0.0);
    }
    for i in 0..n - 1 {
        t.lower[i] = C::new(-1.0 / h2, 0.0);
        t.upper[i] = C::new(-1.0 / h2, 0.0);
    }
    // ghost-node closure, halved to keep the matrix symmetric
    t.diag[0] = C::new(0.5 * kk * kk + 1.0 / h2 + kk / h, 0.0);
    t.diag[n - 1] = t.diag[0];
    let mut b = rhs.to_vec();
    b[0] *= 0.5;
    b[n - 1] *= 0.5;
    t.solve(&b)
}

/// Result of the method-of-lines integrator at the requested times.
#[derive(Debug, Clone)]
pub struct TimestepRun {
    pub times: Vec<f64>,
    pub f: Vec<Vec<C>>,
    pub phi: Vec<Vec<C>>,
    pub steps: usize,
}

/// Integrates ∂_t f = −ikBf + ikDφ, (k² − ∂²)φ = −e^{2v}f with classical RK4
/// on g = f·e^{ikBt}. `coupled = false` drops the Dφ term (free transport).
pub fn timestep_oracle(
    profile: &VortexProfile,
    k: i64,
    f0: &[C],
    grid: Grid,
    times: &[f64],
    dt: f64,
    coupled: bool,
) -> Result<TimestepRun> {
    let kk = k as f64;
    let bmax = profile.b0();
    if !(dt > 0.0) || dt * kk.abs() * bmax > 0.1 {
        return Err(Error::Domain(format!(
            "time step {dt} violates dt·|k|·max B ≤ 0.1 (max dt = {:.4})",
            0.1 / (kk.abs() * bmax)
        )));
    }
    if f0.len() != grid.n {
        return Err(Error::Grid("initial data length must match the grid".into()));
    }
    let nodes = grid.nodes();
    let bv: Vec<f64> = nodes.iter().map(|&v| profile.big_b(v)).collect();
    let dv: Vec<f64> = nodes.iter().map(|&v| profile.big_d(v)).collect();
    let e2v: Vec<f64> = nodes.iter().map(|&v| (2.0 * v).exp()).collect();
    let stream = |f: &[C]| -> Result<Vec<C>> {
        let rhs: Vec<C> = f.iter().zip(&e2v).map(|(x, e)| -x * e).collect();
        elliptic_solve(&grid, k, &rhs)
    };
    let rate = |t: f64, g: &[C]| -> Result<Vec<C>> {
        if !coupled {
            return Ok(vec![C::new(0.0, 0.0); g.len()]);
        }
        let f: Vec<C> = g.iter().zip(&bv).map(|(x, b)| x * C::from_polar(1.0, -kk * b * t)).collect();
        let phi = stream(&f)?;
        Ok((0..g.len()).map(|i| C::new(0.0, kk * dv[i]) * phi[i] * C::from_polar(1.0, kk * bv[i] * t)).collect())
    };
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::Domain("times must be nonnegative".into()));
    }
    let mut g = f0.to_vec();
    let mut t = 0.0;
    let mut out = TimestepRun { times: Vec::new(), f: Vec::new(), phi: Vec::new(), steps: 0 };
    for &target in &sorted {
        let nsteps = ((target - t) / dt).ceil().max(0.0) as usize;
        let step = if nsteps > 0 { (target - t) / nsteps as f64 } else { 0.0 };
        for _ in 0..nsteps {
            let k1 = rate(t, &g)?;
            let y: Vec<C> = g.iter().zip(&k1).map(|(a, b)| a + b * (0.5 * step)).collect();
            let k2 = rate(t + 0.5 * step, &y)?;
            let y: Vec<C> = g.iter().zip(&k2).map(|(a, b)| a + b * (0.5 * step)).collect();
            let k3 = rate(t + 0.5 * step, &y)?;
            let y: Vec<C> = g.iter().zip(&k3).map(|(a, b)| a + b * step).collect();
            let k4 = rate(t + step, &y)?;
            for i in 0..g.len() {
                g[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (step / 6.0);
            }
            t += step;
            out.steps += 1;
        }
        t = target;
        let f: Vec<C> = g.iter().zip(&bv).map(|(x, b)| x * C::from_polar(1.0, -kk * b * t)).collect();
        out.phi.push(stream(&f)?);
        out.f.push(f);
        out.times.push(target);
    }
    Ok(out)
}
