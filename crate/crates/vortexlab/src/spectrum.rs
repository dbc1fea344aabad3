//! The linearized operator L_k in its self-adjoint metric, its spectrum, and
//! singular-value proxies for the limiting-absorption constants.

use crate::error::{Error, Result};
use crate::greens::{longrange_green, potential_vw};
use crate::grid::Grid;
use crate::norms::log_varpi;
use crate::profile::{BParts, VortexProfile};
use crate::quad::gl8;
use crate::sdf::{pole_integrals, SdfSolver};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// L_k f = b f + (Ω′/r)∫G_k(r,ρ)f(ρ)dρ, sampled at r_i = e^{v_i} and
/// conjugated by the square root of the discrete X_k weights r²c/|Ω′|
/// (c = trapezoid weight times r), which makes it a symmetric matrix.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub k: i64,
    pub grid: Grid,
    /// dense n×n, column-major
    pub matrix: DMatrix<f64>,
    /// X_k quadrature weights r²c/|Ω′|
    pub weights: Vec<f64>,
    /// b(r_i), the multiplication part
    pub b: Vec<f64>,
    /// √(c_i|Ω′_i|) factors of the integral part
    pub kernel_factor: Vec<f64>,
}

impl OperatorMatrix {
    pub fn symmetry_residual(&self) -> f64 {
        let m = &self.matrix;
        let n = m.nrows();
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                r = r.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        r
    }

    /// Ω′ in the symmetrized coordinates: y_i = √(weight_i)·Ω′(r_i).
    pub fn omega_prime_vector(&self, profile: &VortexProfile) -> Vec<f64> {
        (0..self.grid.n)
            .map(|i| self.weights[i].sqrt() * profile.omega_prime(self.grid.v(i).exp()))
            .collect()
    }

    /// ‖L_k y‖/‖y‖ for y = −Ω′ in the X_k norm.
    pub fn omega_prime_residual(&self, profile: &VortexProfile) -> f64 {
        let y = nalgebra::DVector::from_vec(self.omega_prime_vector(profile));
        (&self.matrix * &y).norm() / y.norm()
    }
}

/// Builds the symmetrized matrix of L_k. `with_kernel = false` keeps only
/// the multiplication part.
pub fn assemble_lk_with(profile: &VortexProfile, k: i64, grid: Grid, with_kernel: bool) -> Result<OperatorMatrix> {
    if k == 0 {
        return Err(Error::Domain("mode k must be nonzero".into()));
    }
    let kk = k.unsigned_abs() as f64;
    let n = grid.n;
    let tw = grid.trapezoid_weights();
    let mut weights = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut kernel_factor = Vec::with_capacity(n);
    for i in 0..n {
        let v = grid.v(i);
        let r = v.exp();
        let c = r * tw[i];
        let op = profile.omega_prime(r).abs();
        weights.push(r * r * c / op);
        b.push(profile.b(r));
        kernel_factor.push((c * op).sqrt());
    }
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            (0..n)
                .map(|i| {
                    let mut a = if with_kernel {
                        -(-kk * (grid.v(i) - grid.v(j)).abs()).exp() / (2.0 * kk) * kernel_factor[i] * kernel_factor[j]
                    } else {
                        0.0
                    };
                    if i == j {
                        a += b[i];
                    }
                    a
                })
                .collect()
        })
        .collect();
    let matrix = DMatrix::from_fn(n, n, |i, j| cols[j][i]);
    Ok(OperatorMatrix { k, grid, matrix, weights, b, kernel_factor })
}

pub fn assemble_lk(profile: &VortexProfile, k: i64, grid: Grid) -> Result<OperatorMatrix> {
    assemble_lk_with(profile, k, grid, true)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub k: i64,
    pub n: usize,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub band: (f64, f64),
    /// eigenvalues outside the band [−δ, b(0) + δ]
    pub outliers: Vec<f64>,
    pub symmetry_residual: f64,
    /// for |k| = 1: the eigenpair best aligned with Ω′
    pub zero_mode: Option<ZeroMode>,
    /// eigenvalues within 1e−4 of 0
    pub near_zero_count: usize,
    #[serde(skip)]
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ZeroMode {
    pub eigenvalue: f64,
    pub alignment: f64,
    /// ‖L_1 Ω′‖/‖Ω′‖
    pub residual: f64,
}

pub const BAND_SLACK: f64 = 5e-3;

pub fn spectrum_report(op: &OperatorMatrix, profile: &VortexProfile) -> Result<SpectrumReport> {
    let eig = SymmetricEigen::try_new(op.matrix.clone(), 1e-14, 10_000)
        .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if ev.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    let band = (-BAND_SLACK, profile.b0() + BAND_SLACK);
    let outliers: Vec<f64> = ev.iter().copied().filter(|&l| l < band.0 || l > band.1).collect();
    let zero_mode = if op.k.abs() == 1 {
        let y = nalgebra::DVector::from_vec(op.omega_prime_vector(profile));
        let yn = y.norm();
        let (idx, align) = (0..ev.len())
            .map(|m| (m, eig.eigenvectors.column(m).dot(&y).abs() / yn))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        Some(ZeroMode { eigenvalue: ev[idx], alignment: align, residual: op.omega_prime_residual(profile) })
    } else {
        None
    };
    let near_zero_count = ev.iter().filter(|l| l.abs() < 1e-4).count();
    ev.sort_by(f64::total_cmp);
    Ok(SpectrumReport {
        k: op.k,
        n: ev.len(),
        min_eigenvalue: ev[0],
        max_eigenvalue: ev[ev.len() - 1],
        band,
        outliers,
        symmetry_residual: op.symmetry_residual(),
        zero_mode,
        near_zero_count,
        eigenvalues: ev,
    })
}

/// Which perturbation of the identity is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LapOperator {
    /// T^w_{k,ε}: free kernel against the full quotient, for w ≥ −20
    T,
    /// S^w_{k,ε}: long-range kernel against the quotient minus V_w, for w ≤ −10
    S,
}

#[derive(Debug, Clone, Serialize)]
pub struct LapReport {
    pub k: i64,
    pub k_star: i64,
    pub w: f64,
    pub epsilon: f64,
    pub operator: LapOperator,
    /// smallest singular value of I + (T or S) on weighted samples
    pub sigma_min: f64,
    /// largest singular value of T or S alone
    pub operator_norm: f64,
}

/// Matrix of h ↦ ∫K(v_i, ρ)q_ε(ρ)h(ρ)dρ on piecewise-linear h, where
/// q_ε = e^{2ρ}D/(B(ρ) − B(w) + iε) − `subtract`(ρ).
fn pole_operator(
    profile: &VortexProfile,
    grid: Grid,
    jw: usize,
    eps: f64,
    kernel: &(dyn Fn(usize, f64) -> f64 + Sync),
    subtract: &(dyn Fn(f64) -> f64 + Sync),
) -> DMatrix<Complex64> {
    let n = grid.n;
    let h = grid.h;
    let w = grid.v(jw);
    let pw: BParts = profile.b_parts(w);
    let (x, wt) = gl8();
    // per element: Gauss points, weights, and q_ε
    let elems: Vec<Vec<(f64, f64, Complex64)>> = (0..n - 1)
        .into_par_iter()
        .map(|e| {
            let va = grid.v(e);
            (0..8)
                .map(|g| {
                    let v = va + 0.5 * h * (1.0 + x[g]);
                    let ww = 0.5 * h * wt[g];
                    let q = if e == jw || e + 1 == jw {
                        // handled by the pole quadrature; keep the smooth part
                        Complex64::new(-subtract(v), 0.0)
                    } else {
                        profile.xd(v) / Complex64::new(VortexProfile::delta_from_parts(profile.b_parts(v), pw), eps)
                            - subtract(v)
                    };
                    (v, ww, q)
                })
                .collect()
        })
        .collect();
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![Complex64::new(0.0, 0.0); n];
            for (e, pts) in elems.iter().enumerate() {
                let va = grid.v(e);
                for &(v, ww, q) in pts {
                    let t = (v - va) / h;
                    let kq = q * (kernel(i, v) * ww);
                    row[e] += kq * (1.0 - t);
                    row[e + 1] += kq * t;
                }
                if e == jw || e + 1 == jw {
                    let mut acc = [Complex64::new(0.0, 0.0); 2];
                    pole_integrals(profile, (va, va + h), w, eps, 2, &mut acc, |v, out| {
                        let t = (v - va) / h;
                        let f = kernel(i, v) * profile.xd(v);
                        out[0] = f * (1.0 - t);
                        out[1] = f * t;
                    });
                    row[e] += acc[0];
                    row[e + 1] += acc[1];
                }
            }
            row
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Smallest singular value of I + T^w_{k,ε} (w ≥ −20) or I + S^w_{k,ε}
/// (w ≤ −10; S is used whenever both apply and `prefer_s` is set).
///
/// The Y-norms are proxied by Euclidean norms of weighted samples: weight
/// e^{|k*||v|} for T and 1/ϖ_{k*,w}(v,0) for S. Derivative terms of the
/// Y-norms are not included.
pub fn lap_coercivity(
    profile: &VortexProfile,
    k: i64,
    k_star: i64,
    w: f64,
    epsilon: f64,
    grid: Grid,
    prefer_s: bool,
) -> Result<LapReport> {
    if k == 0 || k_star == 0 || k_star.abs() > k.abs() {
        return Err(Error::Domain(format!("need 1 ≤ |k*| ≤ |k|, got k = {k}, k* = {k_star}")));
    }
    let which = if w <= -10.0 && (prefer_s || w < -20.0) {
        LapOperator::S
    } else if w >= -20.0 {
        LapOperator::T
    } else {
        return Err(Error::Domain(format!("w = {w} is in neither regime")));
    };
    SdfSolver::check_epsilon(epsilon, w)?;
    let jw = grid.nearest(w);
    if jw < 2 || jw + 3 > grid.n {
        return Err(Error::Grid(format!("w = {w} must lie inside the grid")));
    }
    let kk = k.unsigned_abs() as f64;
    let ks = k_star.unsigned_abs() as f64;
    let n = grid.n;
    let nodes = grid.nodes();
    let (mat, weight): (DMatrix<Complex64>, Vec<f64>) = match which {
        LapOperator::T => {
            let kern = |i: usize, rho: f64| (-kk * (nodes[i] - rho).abs()).exp() / (2.0 * kk);
            let m = pole_operator(profile, grid, jw, epsilon, &kern, &|_| 0.0);
            (m, nodes.iter().map(|&v| (ks * v.abs()).exp()).collect())
        }
        LapOperator::S => {
            if !grid.contains(w - 5.0, 5.0) {
                return Err(Error::Grid(format!("grid must contain [w−5, 5] = [{}, 5]", w - 5.0)));
            }
            let wn = grid.v(jw);
            let g = longrange_green(profile, k, wn, grid)?;
            let h = grid.h;
            let v0 = grid.v_min;
            let kern = |i: usize, rho: f64| {
                let t = ((rho - v0) / h).clamp(0.0, (n - 1) as f64);
                let j = (t.floor() as usize).min(n - 2);
                let s = t - j as f64;
                (1.0 - s) * g.get(i, j) + s * g.get(i, j + 1)
            };
            let vw = |rho: f64| potential_vw(profile, wn, rho).unwrap_or(0.0);
            let m = pole_operator(profile, grid, jw, epsilon, &kern, &vw);
            (m, nodes.iter().map(|&v| (-log_varpi(ks, wn, v, 0.0)).exp()).collect())
        }
    };
    let (sigma_min, op_norm) = weighted_singular_values(&mat, &weight, grid, kk);
    Ok(LapReport { k, k_star, w: grid.v(jw), epsilon, operator: which, sigma_min, operator_norm: op_norm })
}

/// Extreme singular values of I + M and M in the discrete norm
/// ‖h‖² = Σ c_i ω_i²|h_i|² + |k|^{−2} Σ h·ω_{i+½}²|(h_{i+1} − h_i)/h|²,
/// the Hilbert-space analogue of the windowed Y-norms.
fn weighted_singular_values(mat: &DMatrix<Complex64>, weight: &[f64], grid: Grid, k: f64) -> (f64, f64) {
    let n = grid.n;
    let h = grid.h;
    let tw = grid.trapezoid_weights();
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        gram[(i, i)] += tw[i] * weight[i] * weight[i];
    }
    for i in 0..n - 1 {
        let wm = 0.5 * (weight[i] + weight[i + 1]);
        let c = wm * wm / (k * k * h);
        gram[(i, i)] += c;
        gram[(i + 1, i + 1)] += c;
        gram[(i, i + 1)] -= c;
        gram[(i + 1, i)] -= c;
    }
    // gram = LLᵀ; the operator in orthonormal coordinates is Lᵀ M L^{−T}
    let l = gram.cholesky().expect("Gram matrix is positive definite").l();
    let lt = l.transpose().map(|x| Complex64::new(x, 0.0));
    let lt_inv = l.transpose().try_inverse().expect("triangular factor is invertible").map(|x| Complex64::new(x, 0.0));
    let m = &lt * mat * &lt_inv;
    let op_norm = m.clone().singular_values().max();
    let full = m + DMatrix::<Complex64>::identity(n, n);
    (full.singular_values().min(), op_norm)
}
