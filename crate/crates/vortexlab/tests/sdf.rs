use proptest::prelude::*;
use std::sync::Arc;
use vortexlab::grid::rel_l2;
use vortexlab::oracle::K1Oracle;
use vortexlab::sdf::{
    depletion_fit, depletion_window, jump_check, pv_residual, DataSource, EpsSchedule, InitialData, Iota, SdfSolver,
};
use vortexlab::{Grid, VortexProfile};

fn solver(k: i64, raw: DataSource, sigma: f64, grid: Grid) -> SdfSolver {
    let p = VortexProfile::default();
    let data = Arc::new(InitialData::build(&p, k, raw, sigma).unwrap());
    SdfSolver::new(&p, data, grid).unwrap()
}

fn grid(h: f64) -> Grid {
    Grid::new(-16.0, 12.0, h).unwrap()
}

#[test]
fn initial_data_correction() {
    let p = VortexProfile::default();
    let zero = InitialData::build(&p, 2, DataSource::zero(), 0.0).unwrap();
    assert!(zero.big_f0.iter().all(|&x| x == 0.0) && zero.m_dagger == 0.0);
    let raw = DataSource::gaussian(0.0, 1.0, 1.0);
    let plain = InitialData::build(&p, 2, raw.clone(), 0.0).unwrap();
    assert_eq!(plain.big_f0, plain.f0);
    // Φ_0 = 1 at v = −3: F_0 = f_0 − (σ/c*)D e^{|k|v} with D = −6/(x+2)⁴
    let sig = InitialData::build(&p, 2, raw.clone(), 0.7).unwrap();
    let v = -3.0f64;
    let d = -6.0 / ((2.0 * v).exp() + 2.0).powi(4);
    let expected = (-v * v).exp() - 0.7 / -6.0 * d * (2.0 * v).exp();
    assert!((sig.big_f0_at(v) - expected).abs() < 1e-15);
    assert_eq!(sig.big_f0_at(1.0), (-1.0f64).exp());
    assert!(InitialData::build(&p, 6, raw.clone(), 0.5).is_err());
    // a tail decaying like e^{v} is too slow on the left
    assert!(InitialData::build(&p, 2, DataSource::function(|v| 1.0 / (1.0 + (-v).exp() + v.exp().powi(12))), 0.0).is_err());
}

#[test]
fn k1_projection_is_orthogonal() {
    let p = VortexProfile::default();
    let data = InitialData::build(&p, 1, DataSource::gaussian(0.3, 0.8, 1.0), 0.0).unwrap();
    let m = vortexlab::sdf::cubic_moment(&data.source);
    assert!(m.abs() < 1e-10, "{m}");
}

#[test]
fn epsilon_band_is_enforced() {
    assert!(SdfSolver::check_epsilon(0.0, 1.0).is_err());
    assert!(SdfSolver::check_epsilon(0.2 * (-2f64).exp(), 1.0).is_err());
    assert!(SdfSolver::check_epsilon(1e-3 * (-2f64).exp(), -1.0).is_ok());
}

#[test]
fn zero_data_gives_zero() {
    let p = VortexProfile::default();
    let s = solver(2, DataSource::zero(), 0.0, grid(1.0 / 32.0));
    let slice = s.solve(Iota::Plus, 1e-4, 0.0).unwrap();
    assert!(slice.pi.iter().all(|z| z.norm() == 0.0));
    let lim = s.limit(0.0, &EpsSchedule::default()).unwrap();
    assert!(lim.gamma_limit.iter().all(|&x| x == 0.0));
    let j = jump_check(&lim, s.data());
    assert_eq!((j.measured, j.predicted), (0.0, 0.0));
    assert_eq!(pv_residual(&lim, &p, 0.25), 0.0);
}

#[test]
fn conjugation_and_residual() {
    let s = solver(3, DataSource::gaussian(0.5, 1.0, 1.0), 0.4, grid(1.0 / 32.0));
    let eps = 1e-3 * (-2.0f64).exp();
    let a = s.solve(Iota::Plus, eps, -1.0).unwrap();
    let b = s.solve(Iota::Minus, eps, -1.0).unwrap();
    let scale = a.gamma.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let diff = a.gamma.iter().zip(&b.gamma).fold(0.0f64, |m, (x, y)| m.max((x - y.conj()).norm()));
    assert!(diff <= 1e-12 * scale);
    assert!(a.residual < 1e-9);
    // Π − Γ = (σ/c*)e^{|k|v}Φ_0, which is e^{3v}·0.4/(−6) where Φ_0 = 1
    let i = a.grid.nearest(-4.0);
    let v = a.grid.v(i);
    let shift = a.pi[i] - a.gamma[i];
    assert!((shift.re - 0.4 / -6.0 * (3.0 * v).exp()).abs() < 1e-15 && shift.im == 0.0);
    let i = a.grid.nearest(0.0);
    assert_eq!(a.pi[i], a.gamma[i]);
}

#[test]
fn k1_against_closed_form() {
    let p = VortexProfile::default();
    let g = grid(1.0 / 64.0);
    let oracle = K1Oracle::new(&p);
    for w in [-2.0, 0.0] {
        let s = solver(1, DataSource::gaussian(w, 0.5, 1.0), 0.0, g);
        let exact = oracle.gamma_column(&g.nodes(), w, &s.data().source);
        let mask = |i: usize| {
            let v = g.v(i);
            (-8.0..=8.0).contains(&v) && (v - w).abs() >= 0.1
        };
        let eps = 1e-6 * (-2.0 * f64::abs(w)).exp();
        let single: Vec<f64> = s.solve(Iota::Plus, eps, w).unwrap().gamma.iter().map(|z| 2.0 * z.im).collect();
        assert!(rel_l2(&single, &exact, mask) < 1e-2);
        let lim = s.limit(w, &EpsSchedule::default()).unwrap();
        let e = rel_l2(&lim.gamma_limit, &exact, mask);
        assert!(e < 1e-3, "w={w} {e}");
        // the closed form vanishes to the right of the source
        let peak = lim.gamma_limit.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let right = (0..g.n).filter(|&i| g.v(i) > w + 0.1).fold(0.0f64, |m, i| m.max(lim.gamma_limit[i].abs()));
        assert!(right <= 1e-3 * peak, "w={w} {right} {peak}");
        // trace: e^{−w}M(w)/B′(w)
        let tr = oracle.trace(w, &s.data().source);
        assert!((lim.trace - tr).abs() < 1e-3 * tr.abs(), "{} {tr}", lim.trace);
    }
}

#[test]
fn successive_differences_shrink_geometrically() {
    let s = solver(2, DataSource::gaussian(0.0, 1.0, 1.0), 1.0, grid(1.0 / 32.0));
    let lim = s.limit(0.0, &EpsSchedule::default()).unwrap();
    assert!(lim.monotone);
    let o = &lim.orders;
    assert!(o.iter().all(|&x| x > 0.0));
    assert!((o[1] / o[0] - 1.0).abs() < 0.3, "{o:?}");
}

#[test]
fn jump_and_pv_refine() {
    let p = VortexProfile::default();
    let schedule = EpsSchedule { eps0: 1e-7, ..EpsSchedule::default() };
    let run = |h: f64| {
        let s = solver(2, DataSource::gaussian(0.0, 1.0, 1.0), 1.0, grid(h));
        let lim = s.limit(0.0, &schedule).unwrap();
        (jump_check(&lim, s.data()).residual, pv_residual(&lim, &p, 0.25))
    };
    let (j1, p1) = run(1.0 / 32.0);
    let (j2, p2) = run(1.0 / 64.0);
    assert!(j2 < 0.05, "{j2}");
    assert!(p2 < 1e-3, "{p2}");
    assert!(j2 < 0.75 * j1, "{j1} {j2}");
    assert!(p2 < 0.5 * p1, "{p1} {p2}");
}

#[test]
fn depletion_rate_on_plateau() {
    let w = -14.0;
    // data at the source keeps the fit window free of forcing
    let s = solver(2, DataSource::gaussian(w, 0.5, 1.0), 0.0, grid(1.0 / 64.0));
    let lim = s.limit(w, &EpsSchedule::default()).unwrap();
    let rate = depletion_fit(&lim, depletion_window(w).unwrap()).unwrap();
    let mu = 12f64.sqrt();
    assert!(rate > 0.9 * mu && rate < 1.1 * mu, "{rate}");
    assert!(rate > 2.0);
    assert!(depletion_window(-8.0).is_err());
    assert!(depletion_fit(&lim, (2.0, 5.0)).is_err());
}

#[test]
fn l2_bound_uniform_in_k() {
    // |k|·‖Γ_ε‖/(M† + |σ|) does not grow with k over k = 2..6
    let g = grid(1.0 / 32.0);
    let w = -1.0;
    let eps = 1e-3 * (-2.0f64).exp();
    let ratios: Vec<f64> = (2..=6)
        .map(|k| {
            let sigma = if k <= 5 { 1.0 } else { 0.0 };
            let s = solver(k, DataSource::gaussian(0.0, 1.0, 1.0), sigma, g);
            let sl = s.solve(Iota::Plus, eps, w).unwrap();
            let l2 = (sl.gamma.iter().map(|z| z.norm_sqr()).sum::<f64>() * g.h).sqrt();
            k as f64 * l2 / (s.data().m_dagger + sigma)
        })
        .collect();
    assert!(ratios.iter().all(|&r| r > 0.0 && r <= ratios[0]), "{ratios:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]
    #[test]
    fn linear_in_data(a in -2.0f64..2.0, b in -2.0f64..2.0) {
        // exact at fixed ε; the extrapolated limit uses a measured order, so
        // it is linear only up to the extrapolation error
        let p = VortexProfile::default();
        let g = Grid::new(-12.0, 10.0, 1.0 / 32.0).unwrap();
        let f = DataSource::gaussian(-0.5, 1.0, 1.0);
        let h = DataSource::gaussian(1.0, 0.6, 1.0);
        let eps = 1e-5;
        let run = |d: DataSource| {
            let data = Arc::new(InitialData::build(&p, 2, d, 0.0).unwrap());
            let s = SdfSolver::new(&p, data, g).unwrap();
            let fixed: Vec<f64> = s.solve(Iota::Plus, eps, 0.0).unwrap().gamma.iter().map(|z| 2.0 * z.im).collect();
            (fixed, s.limit(0.0, &EpsSchedule::default()).unwrap().gamma_limit)
        };
        let (s0, lim0) = run(DataSource::combine(a, &f, b, &h));
        let ((s1, lim1), (s2, lim2)) = (run(f), run(h));
        let scale = lim1.iter().chain(&lim2).fold(0.0f64, |m, x| m.max(x.abs())) * (a.abs() + b.abs());
        for i in 0..s0.len() {
            prop_assert!((s0[i] - a * s1[i] - b * s2[i]).abs() <= 1e-10 * scale);
            prop_assert!((lim0[i] - a * lim1[i] - b * lim2[i]).abs() <= 1e-3 * scale);
        }
    }
}
