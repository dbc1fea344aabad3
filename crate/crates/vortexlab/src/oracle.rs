//! Closed-form spectral density for |k| = 1, used to validate the solver.
//!
//! For |k| = 1 the resolvent has the explicit solution
//! Γ_1(v,w) = 2π(B(v)−B(w))/B′(w)²·e^{v+w}·1_{v<w}·(f_0(w) − e^{−w}D(w)M(w)/B′(w)),
//! with the moment M(w) = ∫_{−∞}^w f_0(ρ)e^{3ρ}dρ.

use crate::error::{Error, Result};
use crate::profile::VortexProfile;
use crate::quad::integrate;
use crate::sdf::DataSource;
use std::f64::consts::PI;

/// Lower cutoff of the moment integral; the integrand is below e^{−120}‖f_0‖ there.
pub const MOMENT_FLOOR: f64 = -40.0;

#[derive(Debug, Clone, Copy)]
pub struct K1Oracle {
    pub profile: VortexProfile,
    pub tol: f64,
}

impl K1Oracle {
    pub fn new(profile: &VortexProfile) -> Self {
        K1Oracle { profile: *profile, tol: 1e-12 }
    }

    /// ∫_{−40}^{w} f_0(ρ)e^{3ρ}dρ on unit panels.
    pub fn moment(&self, w: f64, f0: &DataSource) -> f64 {
        if w <= MOMENT_FLOOR {
            return 0.0;
        }
        let mut a = MOMENT_FLOOR;
        let mut s = 0.0;
        while a < w {
            let b = (a + 1.0).min(w);
            let scale = (3.0 * b).exp();
            s += integrate(|r| f0.eval(r) * (3.0 * r).exp(), a, b, self.tol * scale * 1e-3, self.tol);
            a = b;
        }
        s
    }

    /// The bracket f_0(w) − e^{−w}D(w)M(w)/B′(w).
    pub fn bracket(&self, w: f64, f0: &DataSource) -> f64 {
        let p = &self.profile;
        f0.eval(w) - (-w).exp() * p.big_d(w) * self.moment(w, f0) / p.bp(w)
    }

    pub fn gamma(&self, v: f64, w: f64, f0: &DataSource) -> f64 {
        if v >= w {
            return 0.0;
        }
        let p = &self.profile;
        let bp = p.bp(w);
        2.0 * PI * p.delta_b(v, w) / (bp * bp) * (v + w).exp() * self.bracket(w, f0)
    }

    /// Γ_1(·, w) at many points, sharing one moment evaluation.
    pub fn gamma_column(&self, vs: &[f64], w: f64, f0: &DataSource) -> Vec<f64> {
        let p = &self.profile;
        let bp = p.bp(w);
        let c = 2.0 * PI / (bp * bp) * self.bracket(w, f0);
        vs.iter().map(|&v| if v >= w { 0.0 } else { c * p.delta_b(v, w) * (v + w).exp() }).collect()
    }

    /// Limit of Re Γ⁺_ε(w, w): e^{−w}M(w)/B′(w).
    pub fn trace(&self, w: f64, f0: &DataSource) -> f64 {
        (-w).exp() * self.moment(w, f0) / self.profile.bp(w)
    }
}

pub fn k1_gamma(profile: &VortexProfile, k: i64, v: f64, w: f64, f0: &DataSource) -> Result<f64> {
    if k.abs() != 1 {
        return Err(Error::Domain(format!("the closed form holds only for |k| = 1, got k = {k}")));
    }
    Ok(K1Oracle::new(profile).gamma(v, w, f0))
}

pub fn moment_integral(profile: &VortexProfile, w: f64, f0: &DataSource) -> f64 {
    K1Oracle::new(profile).moment(w, f0)
}
