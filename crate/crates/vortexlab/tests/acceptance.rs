//! Acceptance suite: one PASS/FAIL line per criterion with pinned tolerances.
//! Exits nonzero on any FAIL only when VORTEXLAB_STRICT=1 is set, so that a
//! failing criterion does not stop the rest of the workspace tests.

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use std::time::Instant;
use vortexlab::evolution::{decay_report, elliptic_solve, evolve, rel_l2_c, timestep_oracle, ThetaField};
use vortexlab::greens::{longrange_green, step_green, verify_green_bound};
use vortexlab::grid::rel_l2;
use vortexlab::oracle::K1Oracle;
use vortexlab::sdf::{
    depletion_fit, depletion_window, jump_check, pv_residual, DataSource, EpsSchedule, InitialData, SdfSolver,
};
use vortexlab::spectrum::{assemble_lk, lap_coercivity, spectrum_report};
use vortexlab::{Grid, VortexProfile};

// pinned tolerances
const IDENTITY_TOL: f64 = 1e-10;
const B0_TOL: f64 = 1e-12;
const ORACLE_REL_L2: f64 = 1e-3;
const GREEN_CONSTANT: f64 = 10.0;
const STEP_BVP_TOL: f64 = 1e-6;
const STEP_REDUCTION: f64 = 3.5;
const EXPONENT_BAND: (f64, f64) = (0.9, 1.1);
const BAND_SLACK: f64 = 5e-3;
const ZERO_EIGEN_TOL: f64 = 1e-4;
const ALIGNMENT_MIN: f64 = 0.999;
const SIGMA_MIN: f64 = 0.05;
const SIGMA_DECADE_VARIATION: f64 = 0.2;
const COMPLETENESS_TOL: f64 = 1e-2;
const REPR_VS_STEP_TOL: f64 = 1e-2;
const F2_GROWTH_MAX: f64 = 1.5;
const WEAK_DECAY_MAX: f64 = 0.2;
const JUMP_REL_TOL: f64 = 5e-2;
const PV_REL_TOL: f64 = 1e-3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sqrt12() -> f64 {
    12f64.sqrt()
}

fn identities() -> Outcome {
    let p = VortexProfile::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut log_id, mut vel_id) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let v: f64 = rng.gen_range(-10.0..10.0);
        let c = p.coefficients(v);
        log_id = log_id.max((2.0 * c.bp + c.bpp - (2.0 * v).exp() * c.d).abs());
        let r: f64 = rng.gen_range(1e-3..30.0);
        vel_id = vel_id.max((p.u_prime(r) + p.u(r) / r - p.omega(r)).abs());
    }
    let b0 = (p.eval_b(0.0).unwrap() - 0.0625).abs();
    outcome(
        log_id < IDENTITY_TOL && vel_id < IDENTITY_TOL && b0 < B0_TOL,
        format!("max|2B'+B''-e^2v D| = {log_id:.1e}, max|U'+U/r-Omega| = {vel_id:.1e}, |b(0)-1/16| = {b0:.1e}"),
    )
}

fn k1_oracle() -> Outcome {
    let p = VortexProfile::default();
    let grid = Grid::new(-16.0, 12.0, 1.0 / 64.0).unwrap();
    let oracle = K1Oracle::new(&p);
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for w in [-6.0, -2.0, 0.0, 2.0] {
        let data = Arc::new(InitialData::build(&p, 1, DataSource::gaussian(w, 0.5, 1.0), 0.0).unwrap());
        let slice = SdfSolver::new(&p, data.clone(), grid).unwrap().limit(w, &EpsSchedule::default()).unwrap();
        let exact = oracle.gamma_column(&grid.nodes(), slice.w, &data.source);
        let e = rel_l2(&slice.gamma_limit, &exact, |i| {
            let v = grid.v(i);
            (-8.0..=8.0).contains(&v) && (v - slice.w).abs() >= 0.1
        });
        worst = worst.max(e);
        parts.push(format!("w={w}: {e:.1e}"));
    }
    outcome(worst < ORACLE_REL_L2, format!("rel-L2 {} (tol {ORACLE_REL_L2:.0e})", parts.join(", ")))
}

/// Numerov solve of −u″ + (k² + 8·1_{[a,a′]})u = δ_ρ on [−30, 30] with zero ends.
/// The kink at ρ enters as h(1 + q h²/12) on the source row; q is averaged
/// at the potential jumps.
fn numerov_column(k: f64, a: f64, ap: f64, rho: f64, h: f64) -> (Grid, Vec<f64>) {
    let g = Grid::new(-30.0, 30.0, h).unwrap();
    let n = g.n;
    let tol = 1e-9;
    let q: Vec<f64> = g
        .nodes()
        .iter()
        .map(|&v| {
            let pot = if (v - a).abs() < tol || (v - ap).abs() < tol {
                4.0
            } else if v > a && v < ap {
                8.0
            } else {
                0.0
            };
            k * k + pot
        })
        .collect();
    let c = h * h / 12.0;
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        diag[i] = 2.0 + 10.0 * c * q[i];
        if i > 0 {
            lower[i] = -(1.0 - c * q[i - 1]);
        }
        if i + 1 < n {
            upper[i] = -(1.0 - c * q[i + 1]);
        }
    }
    let j = g.nearest(rho);
    rhs[j] = h * (1.0 + c * q[j]);
    // Thomas algorithm
    for i in 1..n {
        let m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    let mut u = vec![0.0; n];
    u[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        u[i] = (rhs[i] - upper[i] * u[i + 1]) / diag[i];
    }
    (g, u)
}

fn greens_bounds() -> Outcome {
    let p = VortexProfile::default();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for w in [-20.0, -12.0] {
        let grid = Grid::new(w - 12.0, 12.0, 1.0 / 64.0).unwrap();
        for k in 1..=4 {
            let rep = verify_green_bound(&longrange_green(&p, k, w, grid).unwrap());
            worst = worst.max(rep.max_ratio).max(rep.max_derivative_ratio);
            parts.push(format!("k={k},w={w}: {:.1}/{:.1}", rep.max_ratio, rep.max_derivative_ratio));
        }
    }
    let (a, ap, rho) = (-5.0, 0.0, -2.5);
    let errs: Vec<f64> = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0]
        .iter()
        .map(|&h| {
            let (g, u) = numerov_column(2.0, a, ap, rho, h);
            (0..g.n)
                .filter(|&i| (-15.0..=15.0).contains(&g.v(i)))
                .map(|i| (u[i] - step_green(2, a, ap, g.v(i), rho).unwrap()).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let reductions = [errs[0] / errs[1], errs[1] / errs[2]];
    let step_ok = errs[1] < STEP_BVP_TOL && reductions.iter().all(|&r| r > STEP_REDUCTION);
    outcome(
        worst <= GREEN_CONSTANT && step_ok,
        format!(
            "sup |k|G/varpi / |dG|/varpi: {} (limit {GREEN_CONSTANT}); step vs BVP at h=1/64 {:.1e} (tol {STEP_BVP_TOL:.0e}), reductions {:.2}, {:.2}",
            parts.join(", "),
            errs[1],
            reductions[0],
            reductions[1]
        ),
    )
}

fn depletion() -> Outcome {
    let p = VortexProfile::default();
    let mu = sqrt12();
    let in_band = |x: f64| x >= EXPONENT_BAND.0 * mu && x <= EXPONENT_BAND.1 * mu && x > 2.0;
    // Θ_2(·, −14) with data at the source
    let w = -14.0;
    let grid = Grid::new(-16.0, 12.0, 1.0 / 64.0).unwrap();
    let data = Arc::new(InitialData::build(&p, 2, DataSource::gaussian(w, 0.5, 1.0), 0.0).unwrap());
    let slice = SdfSolver::new(&p, data, grid).unwrap().limit(w, &EpsSchedule::default()).unwrap();
    let theta_rate = depletion_fit(&slice, depletion_window(w).unwrap()).unwrap();
    // F¹ windows v* ∈ [−10, −4] for data to the right of them
    let grid = Grid::new(-20.0, 12.0, 1.0 / 64.0).unwrap();
    let data = Arc::new(InitialData::build(&p, 2, DataSource::gaussian(2.0, 0.5, 1.0), 1.0).unwrap());
    let field = ThetaField::compute(&p, data, grid, (-18.0, 8.0), 1, &EpsSchedule::default()).unwrap();
    let times = [0.0, 4.0, 16.0, 32.0];
    let evo = evolve(&field, &times).unwrap();
    let windows: Vec<f64> = (-10..=-4).map(f64::from).collect();
    let rep = decay_report(&evo, &p, &windows, &DataSource::gaussian(2.0, 0.5, 1.0)).unwrap();
    let f1: Vec<f64> = rep.f1_left_exponent.iter().map(|x| x.unwrap_or(f64::NAN)).collect();
    let pass = in_band(theta_rate) && f1.iter().all(|&x| in_band(x));
    let f1_txt: Vec<String> = times.iter().zip(&f1).map(|(t, x)| format!("t={t}: {:.3}", x / mu)).collect();
    outcome(
        pass,
        format!(
            "Theta_2(.,-14) exponent {:.3} sqrt12; F1 left exponent/sqrt12 {} (band [{}, {}], above 2)",
            theta_rate / mu,
            f1_txt.join(", "),
            EXPONENT_BAND.0,
            EXPONENT_BAND.1
        ),
    )
}

fn spectrum() -> Outcome {
    let p = VortexProfile::default();
    let mut outliers = 0;
    let mut ranges = Vec::new();
    for k in [2, 3] {
        for g in [Grid::new(-12.0, 12.0, 1.0 / 32.0).unwrap(), Grid::new(-24.0, 24.0, 1.0 / 32.0).unwrap()] {
            let rep = spectrum_report(&assemble_lk(&p, k, g).unwrap(), &p).unwrap();
            outliers += rep.outliers.len();
            ranges.push(format!("k={k} L={}: [{:.1e}, {:.4}]", g.v_max(), rep.min_eigenvalue, rep.max_eigenvalue));
        }
    }
    let g = Grid::new(-12.0, 12.0, 1.0 / 32.0).unwrap();
    let zm = spectrum_report(&assemble_lk(&p, 1, g).unwrap(), &p).unwrap().zero_mode.unwrap();
    let pass = outliers == 0 && zm.eigenvalue.abs() < ZERO_EIGEN_TOL && zm.alignment > ALIGNMENT_MIN;
    outcome(
        pass,
        format!(
            "{outliers} eigenvalues outside [-{BAND_SLACK:.0e}, 0.0625+{BAND_SLACK:.0e}] ({}); k=1 mode eigenvalue {:.1e}, alignment {:.7}",
            ranges.join(", "),
            zm.eigenvalue,
            zm.alignment
        ),
    )
}

fn limiting_absorption() -> Outcome {
    let p = VortexProfile::default();
    let decades = [1e-3, 1e-4, 1e-5];
    let mut pass = true;
    let mut parts = Vec::new();
    let cases: [(i64, f64); 6] = [(2, 0.0), (2, 2.0), (4, 0.0), (4, 2.0), (2, -14.0), (4, -14.0)];
    for (k, w) in cases {
        let grid = Grid::new((w - 12.0).min(-12.0), 12.0, 1.0 / 16.0).unwrap();
        let s: Vec<f64> = decades
            .iter()
            .map(|e| lap_coercivity(&p, k, 1, w, e * (-2.0 * f64::abs(w)).exp(), grid, true).unwrap().sigma_min)
            .collect();
        let var = s.windows(2).map(|d| (d[1] / d[0] - 1.0).abs()).fold(0.0, f64::max);
        pass &= s.iter().all(|&x| x >= SIGMA_MIN) && var < SIGMA_DECADE_VARIATION;
        let op = if w <= -10.0 { "S" } else { "T" };
        parts.push(format!("{op} k={k} w={w}: min {:.3}, var {:.1}%", s.iter().copied().fold(f64::MAX, f64::min), 100.0 * var));
    }
    outcome(pass, format!("{} (sigma_min >= {SIGMA_MIN}, < 20% per decade)", parts.join("; ")))
}

fn evolution() -> Outcome {
    let p = VortexProfile::default();
    let grid = Grid::new(-18.0, 12.0, 1.0 / 64.0).unwrap();
    let data = Arc::new(InitialData::build(&p, 2, DataSource::gaussian(0.0, 1.0, 1.0), 1.0).unwrap());
    let field = ThetaField::compute(&p, data, grid, (-14.0, 8.0), 1, &EpsSchedule::default()).unwrap();
    let times = [0.0, 4.0, 10.0, 32.0];
    let evo = evolve(&field, &times).unwrap();
    let f0: Vec<C> = grid.nodes().iter().map(|v| C::new((-v * v).exp(), 0.0)).collect();
    let mask = |i: usize| (-10.0..=6.0).contains(&grid.v(i));
    let rhs: Vec<C> = grid.nodes().iter().zip(&f0).map(|(v, f)| -f * (2.0 * v).exp()).collect();
    let phi0 = elliptic_solve(&grid, 2, &rhs).unwrap();
    let complete = rel_l2_c(&evo.phi[0], &phi0, mask).max(rel_l2_c(&evo.f[0], &f0, mask));
    let run = timestep_oracle(&p, 2, &f0, grid, &[10.0], 0.1, true).unwrap();
    let at10 = rel_l2_c(&evo.f[2], &run.f[0], mask).max(rel_l2_c(&evo.phi[2], &run.phi[0], mask));
    let windows: Vec<f64> = (-10..=6).map(f64::from).collect();
    let rep = decay_report(&evo, &p, &windows, &DataSource::gaussian(0.0, 1.0, 1.0)).unwrap();
    let growth = rep.windows.iter().map(|w| w.f2_weighted[3] / w.f2_weighted[1]).fold(0.0, f64::max);
    let weak = rep.weak_proxy[3] / rep.weak_proxy[0];
    let pass = complete < COMPLETENESS_TOL && at10 < REPR_VS_STEP_TOL && growth <= F2_GROWTH_MAX && weak < WEAK_DECAY_MAX;
    outcome(
        pass,
        format!(
            "t=0 completeness {complete:.1e} (tol {COMPLETENESS_TOL:.0e}); repr vs timestep at t=10 {at10:.1e} (tol {REPR_VS_STEP_TOL:.0e}); \
             max <t>|F2| ratio t=32/t=4 {growth:.2} (limit {F2_GROWTH_MAX}); weak proxy t=32/t=0 {weak:.2} (limit {WEAK_DECAY_MAX})"
        ),
    )
}

fn jump_pv() -> Outcome {
    let p = VortexProfile::default();
    let schedule = EpsSchedule { eps0: 1e-7, ..EpsSchedule::default() };
    let measure = |h: f64| -> Vec<(f64, f64)> {
        let grid = Grid::new(-16.0, 12.0, h).unwrap();
        let data = Arc::new(InitialData::build(&p, 2, DataSource::gaussian(0.0, 1.0, 1.0), 1.0).unwrap());
        let solver = SdfSolver::new(&p, data.clone(), grid).unwrap();
        [-2.0, 0.0, 2.0]
            .iter()
            .map(|&w| {
                let slice = solver.limit(w, &schedule).unwrap();
                (jump_check(&slice, &data).residual, pv_residual(&slice, &p, 0.25))
            })
            .collect()
    };
    let (coarse, fine) = (measure(1.0 / 32.0), measure(1.0 / 64.0));
    let mut pass = true;
    let mut parts = Vec::new();
    for (w, (c, f)) in [-2.0, 0.0, 2.0].iter().zip(coarse.iter().zip(&fine)) {
        pass &= f.0 < JUMP_REL_TOL && f.1 < PV_REL_TOL && f.0 < c.0 && f.1 < c.1;
        parts.push(format!("w={w}: jump {:.1e}->{:.1e}, PV {:.1e}->{:.1e}", c.0, f.0, c.1, f.1));
    }
    outcome(pass, format!("{} (h=1/32 -> 1/64; tol {JUMP_REL_TOL}, {PV_REL_TOL:.0e})", parts.join("; ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("identities", identities),
        ("|k|=1 closed form", k1_oracle),
        ("Green's kernel bounds", greens_bounds),
        ("depletion exponent", depletion),
        ("spectrum", spectrum),
        ("limiting absorption", limiting_absorption),
        ("evolution", evolution),
        ("jump and PV", jump_pv),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {} ({name}): {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var("VORTEXLAB_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
