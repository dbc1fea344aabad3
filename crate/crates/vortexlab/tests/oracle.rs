use proptest::prelude::*;
use std::f64::consts::PI;
use vortexlab::oracle::{k1_gamma, moment_integral, K1Oracle};
use vortexlab::sdf::{cubic_moment, DataSource, InitialData};
use vortexlab::VortexProfile;

/// B, B′ and D of the default profile in terms of x = e^{2v}.
fn big_b(v: f64) -> f64 {
    let x = (2.0 * v).exp();
    (x + 4.0) / (16.0 * (x + 2.0).powi(2))
}
fn big_bp(v: f64) -> f64 {
    let x = (2.0 * v).exp();
    -x * (x + 6.0) / (8.0 * (x + 2.0).powi(3))
}
fn big_d(v: f64) -> f64 {
    -6.0 / ((2.0 * v).exp() + 2.0).powi(4)
}

/// Composite Simpson on [a, b] with n (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn vanishes_at_and_right_of_source() {
    let p = VortexProfile::default();
    let f0 = DataSource::gaussian(0.0, 1.0, 1.0);
    let o = K1Oracle::new(&p);
    assert_eq!(o.gamma(-1.0, -1.0, &f0), 0.0);
    assert_eq!(o.gamma(0.5, -1.0, &f0), 0.0);
    let scale = o.gamma(-2.0, -1.0, &f0).abs();
    assert!(o.gamma(-1.0 - 1e-9, -1.0, &f0).abs() < 1e-6 * scale);
    assert!(o.gamma(-40.0, -1.0, &f0).abs() < 1e-12 * scale);
    assert!(k1_gamma(&p, 2, -2.0, -1.0, &f0).is_err());
    assert!(k1_gamma(&p, -1, -2.0, -1.0, &f0).is_ok());
}

#[test]
fn gaussian_fixture_against_independent_quadrature() {
    let p = VortexProfile::default();
    let f = |v: f64| (-v * v).exp();
    let (v, w) = (-2.0, -1.0);
    let m = simpson(|r| f(r) * (3.0 * r).exp(), -40.0, w, 20_000);
    let bp = big_bp(w);
    let expected =
        2.0 * PI * (big_b(v) - big_b(w)) / (bp * bp) * (v + w).exp() * (f(w) - (-w).exp() * big_d(w) * m / bp);
    let got = k1_gamma(&p, 1, v, w, &DataSource::gaussian(0.0, 1.0, 1.0)).unwrap();
    assert!((got - expected).abs() <= 1e-10 * expected.abs(), "{got} vs {expected}");
}

#[test]
fn moment_of_indicator() {
    let p = VortexProfile::default();
    let ind = DataSource::function(|v| if (-1.0..=1.0).contains(&v) { 1.0 } else { 0.0 });
    let exact = (3f64.exp() - (-3f64).exp()) / 3.0;
    assert!((moment_integral(&p, 2.0, &ind) - exact).abs() < 1e-12 * exact);
    assert_eq!(moment_integral(&p, 2.0, &DataSource::zero()), 0.0);
}

#[test]
fn moment_of_projected_data_vanishes_on_the_line() {
    let p = VortexProfile::default();
    let data = InitialData::build(&p, 1, DataSource::gaussian(0.5, 1.0, 1.0), 0.0).unwrap();
    let m = moment_integral(&p, 20.0, &data.source);
    let scale = cubic_moment(&DataSource::gaussian(0.5, 1.0, 1.0));
    assert!(m.abs() < 1e-10 * scale, "{m}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn linear_in_data(a in -3.0f64..3.0, b in -3.0f64..3.0, c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, v in -8.0f64..0.0) {
        let p = VortexProfile::default();
        let o = K1Oracle::new(&p);
        let f = DataSource::gaussian(c1, 1.0, 1.0);
        let g = DataSource::gaussian(c2, 0.7, 1.0);
        let w = 0.5;
        let lhs = o.gamma(v, w, &DataSource::combine(a, &f, b, &g));
        let rhs = a * o.gamma(v, w, &f) + b * o.gamma(v, w, &g);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (lhs.abs() + rhs.abs()).max(1e-300));
    }

    #[test]
    fn continuous_in_v(v in -10.0f64..-0.01) {
        let p = VortexProfile::default();
        let o = K1Oracle::new(&p);
        let f = DataSource::gaussian(0.0, 1.0, 1.0);
        let w = 0.0;
        let dv = 1e-7;
        let d = (o.gamma(v + dv, w, &f) - o.gamma(v, w, &f)).abs();
        prop_assert!(d < 1e-5 * o.gamma(-1.0, w, &f).abs());
    }
}
