//! Smooth cutoffs built from the standard bump exp(−1/(1−x²)).

use crate::quad::gl32;
#[cfg(test)]
use crate::quad::integrate;
use std::sync::OnceLock;

fn raw_bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

fn bump_mass() -> f64 {
    static M: OnceLock<f64> = OnceLock::new();
    *M.get_or_init(|| 2.0 * left_mass(0.0))
}

/// Unit-mass bump supported on (−1, 1).
pub fn bump(x: f64) -> f64 {
    raw_bump(x) / bump_mass()
}

pub fn bump_prime(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        return 0.0;
    }
    let s = 1.0 - x * x;
    bump(x) * (-2.0 * x / (s * s))
}

/// Mass of the raw bump on [−1, x] for x ≤ 0. With x = tanh t the integrand
/// becomes exp(−cosh²t)·sech²t, analytic in a strip, so unit panels of
/// Gauss–Legendre in t converge fast despite the flat endpoint.
fn left_mass(x: f64) -> f64 {
    let t_end = x.atanh();
    let t_start = -4.0;
    if t_end <= t_start {
        return 0.0;
    }
    let (xs, ws) = gl32();
    let panels = (t_end - t_start).ceil() as usize;
    let len = (t_end - t_start) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let c = t_start + (p as f64 + 0.5) * len;
        for (u, w) in xs.iter().zip(ws) {
            let t = c + 0.5 * len * u;
            let ch = t.cosh();
            s += w * (-ch * ch).exp() / (ch * ch);
        }
    }
    s * 0.5 * len
}

const TABLE_N: usize = 4000;

/// Values of the step on [−1, 0] at TABLE_N+1 equispaced nodes.
fn step_table() -> &'static Vec<f64> {
    static T: OnceLock<Vec<f64>> = OnceLock::new();
    T.get_or_init(|| {
        let m = left_mass(0.0);
        (0..=TABLE_N).map(|i| left_mass(-1.0 + i as f64 / TABLE_N as f64) / (2.0 * m)).collect()
    })
}

/// Cubic Hermite interpolation of the tabulated step, using the exact
/// derivative `bump` at the table nodes.
fn partial_left(x: f64) -> f64 {
    let tab = step_table();
    let hstep = 1.0 / TABLE_N as f64;
    let pos = (x + 1.0) / hstep;
    let i = (pos.floor() as usize).min(TABLE_N - 1);
    let t = pos - i as f64;
    let (x0, x1) = (-1.0 + i as f64 * hstep, -1.0 + (i + 1) as f64 * hstep);
    let (y0, y1) = (tab[i], tab[i + 1]);
    let (d0, d1) = (bump(x0) * hstep, bump(x1) * hstep);
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * d1
}

/// Mollified Heaviside: `∫_{−1}^{x} bump`, equal to 0 for x ≤ −1 and 1 for x ≥ 1.
pub fn smooth_step(x: f64) -> f64 {
    if x <= -1.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else if x <= 0.0 {
        partial_left(x)
    } else {
        1.0 - partial_left(-x)
    }
}

/// Φ₀: 1 on (−∞, −2], 0 on [−1, ∞).
pub fn phi0(v: f64) -> f64 {
    1.0 - smooth_step(2.0 * (v + 1.5))
}

pub fn phi0_d1(v: f64) -> f64 {
    -2.0 * bump(2.0 * (v + 1.5))
}

pub fn phi0_d2(v: f64) -> f64 {
    -4.0 * bump_prime(2.0 * (v + 1.5))
}

/// Φ*: 1 on [−2, 2], 0 outside (−4, 4).
pub fn phi_star(v: f64) -> f64 {
    if v.abs() >= 4.0 {
        return 0.0;
    }
    smooth_step(v + 3.0) * (1.0 - smooth_step(v - 3.0))
}

/// Φ**: 1 on [−4, 4], 0 outside (−5, 5).
pub fn phi_star2(v: f64) -> f64 {
    if v.abs() >= 5.0 {
        return 0.0;
    }
    smooth_step(2.0 * (v + 4.5)) * (1.0 - smooth_step(2.0 * (v - 4.5)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_limits_and_symmetry() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(1.0), 1.0);
        assert!((smooth_step(0.0) - 0.5).abs() < 1e-14);
        for x in [-0.9, -0.3, 0.2, 0.7] {
            assert!((smooth_step(x) + smooth_step(-x) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn step_matches_adaptive_quadrature() {
        for x in [-0.8, -0.1, 0.4, 0.95] {
            let exact = integrate(bump, -1.0, x, 1e-15, 1e-14);
            assert!((smooth_step(x) - exact).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn cutoff_supports() {
        assert_eq!(phi0(-2.0), 1.0);
        assert_eq!(phi0(-1.0), 0.0);
        assert_eq!(phi_star(2.0), 1.0);
        assert_eq!(phi_star(-2.0), 1.0);
        assert_eq!(phi_star(4.0), 0.0);
        assert_eq!(phi_star2(4.0), 1.0);
        assert_eq!(phi_star2(-5.0), 0.0);
        assert!(phi_star(3.0) > 0.0 && phi_star(3.0) < 1.0);
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let h = 1e-5;
        for v in [-1.8, -1.5, -1.2] {
            let fd = (phi0(v + h) - phi0(v - h)) / (2.0 * h);
            assert!((fd - phi0_d1(v)).abs() < 1e-7);
            let fd2 = (phi0_d1(v + h) - phi0_d1(v - h)) / (2.0 * h);
            assert!((fd2 - phi0_d2(v)).abs() < 1e-5);
        }
    }
}
