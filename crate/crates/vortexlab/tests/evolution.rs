use num_complex::Complex64 as C;
use std::sync::{Arc, OnceLock};
use vortexlab::evolution::{
    elliptic_solve, evolve, rel_l2_c, stream_from_theta, timestep_oracle, vorticity_from_stream, ModeEvolution,
    ThetaField,
};
use vortexlab::sdf::{DataSource, EpsSchedule, InitialData};
use vortexlab::{Grid, VortexProfile};

const TIMES: [f64; 3] = [0.0, 4.0, 10.0];

struct Setup {
    grid: Grid,
    field: ThetaField,
    evo: ModeEvolution,
    f0: Vec<C>,
}

fn field_for(k: i64, grid: Grid, w_range: (f64, f64)) -> ThetaField {
    let p = VortexProfile::default();
    let data = Arc::new(InitialData::build(&p, k, DataSource::gaussian(0.0, 1.0, 1.0), 1.0).unwrap());
    ThetaField::compute(&p, data, grid, w_range, 1, &EpsSchedule::default()).unwrap()
}

/// k = 2, Gaussian data, evaluated once and shared.
fn setup() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| {
        let grid = Grid::new(-18.0, 12.0, 1.0 / 64.0).unwrap();
        let field = field_for(2, grid, (-14.0, 8.0));
        let evo = evolve(&field, &TIMES).unwrap();
        let f0 = grid.nodes().iter().map(|v| C::new((-v * v).exp(), 0.0)).collect();
        Setup { grid, field, evo, f0 }
    })
}

fn window(grid: Grid) -> impl Fn(usize) -> bool {
    move |i| (-10.0..=6.0).contains(&grid.v(i))
}

#[test]
fn zero_field_gives_zero_stream() {
    let p = VortexProfile::default();
    let g = Grid::new(-6.0, 6.0, 1.0 / 16.0).unwrap();
    let field = ThetaField::zero(2, g, (4..g.n - 4).collect(), &p);
    let phi = stream_from_theta(&field, 3.0).unwrap();
    assert!(phi.iter().all(|z| z.norm() == 0.0));
}

#[test]
fn vorticity_of_gaussian_stream() {
    // φ = e^{−v²}: f = −e^{−2v}(k² − 4v² + 2)e^{−v²}
    let k = 3;
    let err = |h: f64| {
        let g = Grid::new(-5.0, 5.0, h).unwrap();
        let phi: Vec<C> = g.nodes().iter().map(|v| C::new((-v * v).exp(), 0.0)).collect();
        let f = vorticity_from_stream(&g, k, &phi);
        (1..g.n - 1)
            .map(|i| {
                let v = g.v(i);
                let exact = -(-2.0 * v).exp() * (9.0 - 4.0 * v * v + 2.0) * (-v * v).exp();
                (f[i].re - exact).abs() / (1.0 + exact.abs())
            })
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(1.0 / 32.0), err(1.0 / 64.0));
    assert!(e2 < 1e-3 && e1 / e2 > 3.5, "{e1} {e2}");
}

#[test]
fn filon_weights_integrate_exponentials_exactly() {
    let p = VortexProfile::default();
    let g = Grid::new(-8.0, 8.0, 1.0 / 16.0).unwrap();
    let field = ThetaField::zero(2, g, (10..g.n - 10).collect(), &p);
    let (ua, ub) = (field.u[0], *field.u.last().unwrap());
    for t in [0.0, 1e-3, 5.0, 40.0] {
        let c = field.filon_weights(t).unwrap();
        let kappa = 2.0 * t;
        // Σc_j·1 = ∫ e^{−iκu}du over [ua, ub]; Σc_j·u_j = ∫ u e^{−iκu}du
        let anti0 = |u: f64| if kappa == 0.0 { C::new(u, 0.0) } else { C::new(0.0, 1.0 / kappa) * C::from_polar(1.0, -kappa * u) };
        let anti1 = |u: f64| {
            if kappa == 0.0 {
                C::new(0.5 * u * u, 0.0)
            } else {
                C::from_polar(1.0, -kappa * u) * (C::new(0.0, u / kappa) + 1.0 / (kappa * kappa))
            }
        };
        let s0: C = c.iter().sum();
        let s1: C = c.iter().zip(&field.u).map(|(cj, u)| cj * u).sum();
        assert!((s0 - (anti0(ub) - anti0(ua))).norm() < 1e-13, "t={t}");
        // the closed antiderivative cancels terms of size 1/κ²
        let tol = 1e-13 * if kappa > 0.0 { 1.0 + 1.0 / (kappa * kappa) } else { 1.0 };
        assert!((s1 - (anti1(ub) - anti1(ua))).norm() < tol, "t={t}");
    }
    assert!(field.filon_weights(-1.0).is_err());
    assert!(field.filon_weights(2.0 * field.t_max()).is_err());
}

#[test]
fn free_transport_is_exact_and_coupled_norm_is_conserved() {
    let p = VortexProfile::default();
    let g = Grid::new(-12.0, 10.0, 1.0 / 32.0).unwrap();
    let k = 2;
    let f0: Vec<C> = g.nodes().iter().map(|v| C::new((-(v - 0.5).powi(2)).exp(), 0.0)).collect();
    let times = [3.0, 7.5];
    let run = timestep_oracle(&p, k, &f0, g, &times, 0.1, false).unwrap();
    for (ti, &t) in times.iter().enumerate() {
        for i in 0..g.n {
            let exact = f0[i] * C::from_polar(1.0, -(k as f64) * p.big_b(g.v(i)) * t);
            assert!((run.f[ti][i] - exact).norm() < 1e-8);
        }
    }
    // ∫e^{2v}|f|²/(−D) is invariant under the coupled flow
    let tw = g.trapezoid_weights();
    let energy = |f: &[C]| (0..g.n).map(|i| tw[i] * (2.0 * g.v(i)).exp() * f[i].norm_sqr() / -p.big_d(g.v(i))).sum::<f64>();
    let run = timestep_oracle(&p, k, &f0, g, &[20.0], 0.1, true).unwrap();
    let (e0, e1) = (energy(&f0), energy(&run.f[0]));
    assert!((e1 / e0 - 1.0).abs() < 1e-4, "{e0} {e1}");
    assert!(timestep_oracle(&p, k, &f0, g, &times, 1.0, true).is_err());
}

#[test]
fn representation_is_complete_at_time_zero() {
    let s = setup();
    let rhs: Vec<C> = s.grid.nodes().iter().zip(&s.f0).map(|(v, f)| -f * (2.0 * v).exp()).collect();
    let phi0 = elliptic_solve(&s.grid, 2, &rhs).unwrap();
    let m = window(s.grid);
    let ep = rel_l2_c(&s.evo.phi[0], &phi0, &m);
    let ef = rel_l2_c(&s.evo.f[0], &s.f0, &m);
    assert!(ep < 1e-2 && ef < 2e-2, "{ep} {ef}");
}

#[test]
fn representation_matches_timestepper() {
    let s = setup();
    let p = VortexProfile::default();
    let run = timestep_oracle(&p, 2, &s.f0, s.grid, &TIMES, 0.1, true).unwrap();
    let m = window(s.grid);
    for ti in 0..TIMES.len() {
        let ef = rel_l2_c(&s.evo.f[ti], &run.f[ti], &m);
        let ep = rel_l2_c(&s.evo.phi[ti], &run.phi[ti], &m);
        assert!(ef < 1e-2 && ep < 1e-2, "t={} {ef} {ep}", TIMES[ti]);
    }
}

#[test]
fn local_and_nonlocal_parts_sum_to_vorticity() {
    let s = setup();
    let m = window(s.grid);
    for ti in 0..TIMES.len() {
        let sum: Vec<C> = s.evo.f1[ti].iter().zip(&s.evo.f2[ti]).map(|(a, b)| a + b).collect();
        assert!(rel_l2_c(&sum, &s.evo.f[ti], &m) < 1e-9);
    }
    assert_eq!(s.field.k, 2);
}

#[test]
fn opposite_mode_is_conjugate() {
    let g = Grid::new(-12.0, 10.0, 1.0 / 32.0).unwrap();
    let plus = field_for(2, g, (-8.0, 6.0));
    let minus = field_for(-2, g, (-8.0, 6.0));
    for t in [0.0, 3.0] {
        let a = stream_from_theta(&plus, t).unwrap();
        let b = stream_from_theta(&minus, t).unwrap();
        let scale = a.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y.conj()).norm() <= 1e-12 * scale));
    }
}
