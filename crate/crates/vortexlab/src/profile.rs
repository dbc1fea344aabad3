//! Background vortex Ω(r), its angular velocity b = U/r, and the coefficients
//! B(v) = b(e^v), D(v) = Ω′(e^v)/e^v in the log variable v = log r.

use crate::error::{Error, Result};
use crate::quad::integrate;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    /// Ω(r) = (r²+2)^{−3}.
    #[default]
    Algebraic,
    /// Ω(r) = e^{−r²}.
    Gaussian,
}

/// The four log-variable coefficients at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub b: f64,
    pub bp: f64,
    pub bpp: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub omega_positive: bool,
    pub omega_prime_negative: bool,
    pub b_prime_negative: bool,
    /// sup Ω(r)⟨r⟩⁶ over the scan.
    pub sup_weighted_omega: f64,
    pub c_star: f64,
    /// Smallest C with |(r∂_r)^j (d − c_*⟨r⟩^{−8})| ≤ C^{j+1}(j!)² r²⟨r⟩^{−10}, for j = 0..=8.
    pub derivative_constants: Vec<f64>,
    /// max relative residual of 2B′+B″ = e^{2v}D over the scan.
    pub identity_residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct VortexProfile {
    kind: ProfileKind,
    /// Limit constant: d(r)⟨r⟩⁸ → c_* as r → 0.
    pub c_star: f64,
    /// Bound constant: Ω(r)⟨r⟩⁶ ≤ C_*.
    pub c_bound: f64,
}

impl Default for VortexProfile {
    fn default() -> Self {
        Self::new(ProfileKind::Algebraic)
    }
}

/// ⟨x⟩ = √(x²+2).
#[derive(Debug, Clone, Copy)]
pub struct BParts {
    pub x: f64,
    pub shift: f64,
    pub direct: f64,
}

pub fn bracket(x: f64) -> f64 {
    (x * x + 2.0).sqrt()
}

impl VortexProfile {
    pub fn new(kind: ProfileKind) -> Self {
        match kind {
            ProfileKind::Algebraic => VortexProfile { kind, c_star: -6.0, c_bound: 1.0 },
            // sup e^{−x}(x+2)³ is attained at x = 1
            ProfileKind::Gaussian => VortexProfile { kind, c_star: -32.0, c_bound: 27.0 * (-1f64).exp() },
        }
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn eval_omega(&self, r: f64) -> Result<f64> {
        if r < 0.0 || r.is_nan() {
            return Err(Error::Domain(format!("radius must be nonnegative, got {r}")));
        }
        Ok(self.omega(r))
    }

    pub fn eval_b(&self, r: f64) -> Result<f64> {
        if r < 0.0 || r.is_nan() {
            return Err(Error::Domain(format!("radius must be nonnegative, got {r}")));
        }
        Ok(self.b(r))
    }

    pub fn omega(&self, r: f64) -> f64 {
        let x = r * r;
        match self.kind {
            ProfileKind::Algebraic => (x + 2.0).powi(-3),
            ProfileKind::Gaussian => (-x).exp(),
        }
    }

    pub fn omega_prime(&self, r: f64) -> f64 {
        r * self.d(r)
    }

    /// d(r) = Ω′(r)/r.
    pub fn d(&self, r: f64) -> f64 {
        self.d_of_x(r * r)
    }

    fn d_of_x(&self, x: f64) -> f64 {
        match self.kind {
            ProfileKind::Algebraic => -6.0 / (x + 2.0).powi(4),
            ProfileKind::Gaussian => -2.0 * (-x).exp(),
        }
    }

    /// b(0) = Ω(0)/2.
    pub fn b0(&self) -> f64 {
        0.5 * self.omega(0.0)
    }

    /// b(r) = U(r)/r.
    pub fn b(&self, r: f64) -> f64 {
        self.b_of_x(r * r)
    }

    fn b_of_x(&self, x: f64) -> f64 {
        if x < 1.0 {
            return self.b0() + self.b_shift_of_x(x);
        }
        match self.kind {
            ProfileKind::Algebraic => (x + 4.0) / (16.0 * (x + 2.0).powi(2)),
            ProfileKind::Gaussian => -(-x).exp_m1() / (2.0 * x),
        }
    }

    /// b(r) − b(0), evaluated without cancellation.
    pub fn b_shift(&self, r: f64) -> f64 {
        self.b_shift_of_x(r * r)
    }

    fn b_shift_of_x(&self, x: f64) -> f64 {
        match self.kind {
            ProfileKind::Algebraic => -x * (x + 3.0) / (16.0 * (x + 2.0).powi(2)),
            ProfileKind::Gaussian => {
                if x < 1e-3 {
                    -(x / 4.0 - x * x / 12.0 + x.powi(3) / 48.0 - x.powi(4) / 240.0)
                } else {
                    -(x + (-x).exp_m1()) / (2.0 * x)
                }
            }
        }
    }

    /// r·b′(r), which equals B′(log r).
    fn rb_prime_of_x(&self, x: f64) -> f64 {
        match self.kind {
            ProfileKind::Algebraic => -x * (x + 6.0) / (8.0 * (x + 2.0).powi(3)),
            ProfileKind::Gaussian if x < 1.0 => (-x).exp_m1() - 2.0 * self.b_shift_of_x(x),
            ProfileKind::Gaussian => (-x).exp() + (-x).exp_m1() / x,
        }
    }

    /// Azimuthal velocity U(r) = r b(r).
    pub fn u(&self, r: f64) -> f64 {
        r * self.b(r)
    }

    pub fn u_prime(&self, r: f64) -> f64 {
        self.b(r) + self.rb_prime_of_x(r * r)
    }

    /// b(r) = ∫₀¹ sΩ(rs) ds by adaptive quadrature; an independent route to [`Self::b`].
    pub fn b_by_quadrature(&self, r: f64) -> f64 {
        if r == 0.0 {
            return self.b0();
        }
        // split at s = 1/r so the bulk of Ω(rs) sits in one panel
        let knee = (1.0 / r).min(1.0);
        let f = |s: f64| s * self.omega(r * s);
        integrate(f, 0.0, knee, 0.0, 1e-15) + integrate(f, knee, 1.0, 0.0, 1e-15)
    }

    pub fn coefficients(&self, v: f64) -> Coefficients {
        let x = (2.0 * v).exp();
        let bp = self.rb_prime_of_x(x);
        let d = self.d_of_x(x);
        let bpp = match self.kind {
            ProfileKind::Algebraic => x * (x * x + 8.0 * x - 12.0) / (4.0 * (x + 2.0).powi(4)),
            ProfileKind::Gaussian => x * d - 2.0 * bp,
        };
        Coefficients { b: self.b_of_x(x), bp, bpp, d }
    }

    pub fn big_b(&self, v: f64) -> f64 {
        self.b_of_x((2.0 * v).exp())
    }

    pub fn bp(&self, v: f64) -> f64 {
        self.rb_prime_of_x((2.0 * v).exp())
    }

    pub fn bpp(&self, v: f64) -> f64 {
        self.coefficients(v).bpp
    }

    pub fn big_d(&self, v: f64) -> f64 {
        self.d_of_x((2.0 * v).exp())
    }

    /// e^{2v}D(v).
    pub fn xd(&self, v: f64) -> f64 {
        let x = (2.0 * v).exp();
        x * self.d_of_x(x)
    }

    /// B(v) − B(w) without cancellation near the core.
    pub fn delta_b(&self, v: f64, w: f64) -> f64 {
        Self::delta_from_parts(self.b_parts(v), self.b_parts(w))
    }

    /// B(v) in two representations for forming differences without
    /// cancellation; see [`Self::delta_from_parts`].
    pub fn b_parts(&self, v: f64) -> BParts {
        let x = (2.0 * v).exp();
        BParts { x, shift: self.b_shift_of_x(x), direct: self.b_of_x(x) }
    }

    /// B(v) − B(w) from precomputed parts.
    pub fn delta_from_parts(pv: BParts, pw: BParts) -> f64 {
        if pv.x.min(pw.x) >= 1.0 {
            pv.direct - pw.direct
        } else {
            pv.shift - pw.shift
        }
    }

    /// e^{2v}D(v)/(B(v)−B(w)); tends to 8 on [w, 0] as w → −∞.
    pub fn longrange_plateau(&self, v: f64, w: f64) -> Result<f64> {
        let db = self.delta_b(v, w);
        if v == w || db == 0.0 {
            return Err(Error::Domain(format!("quotient is singular at v = w = {w}")));
        }
        Ok(self.xd(v) / db)
    }

    pub fn verify_assumption(&self, v_min: f64, v_max: f64, n: usize) -> AssumptionReport {
        let vs: Vec<f64> = (0..n).map(|i| v_min + (v_max - v_min) * i as f64 / (n - 1) as f64).collect();
        let mut omega_positive = true;
        let mut omega_prime_negative = true;
        let mut b_prime_negative = true;
        let mut sup_w: f64 = self.omega(0.0) * 8.0;
        let mut ident: f64 = 0.0;
        for &v in &vs {
            let r = v.exp();
            let om = self.omega(r);
            omega_positive &= om > 0.0;
            omega_prime_negative &= self.omega_prime(r) < 0.0;
            sup_w = sup_w.max(om * bracket(r).powi(6));
            let c = self.coefficients(v);
            b_prime_negative &= c.bp < 0.0;
            let x = (2.0 * v).exp();
            let scale = (x * c.d).abs().max(c.bp.abs()).max(f64::MIN_POSITIVE);
            ident = ident.max((2.0 * c.bp + c.bpp - x * c.d).abs() / scale);
        }
        let residual = |v: f64| {
            let x = (2.0 * v).exp();
            self.d_of_x(x) - self.c_star / (x + 2.0).powi(4)
        };
        let step = 0.05;
        let mut consts = Vec::with_capacity(9);
        let mut fact = 1.0;
        for j in 0..=8usize {
            if j > 0 {
                fact *= j as f64;
            }
            let mut c: f64 = 0.0;
            for &v in vs.iter().step_by(4) {
                let dj = central_difference(&residual, v, j, step);
                let x = (2.0 * v).exp();
                let bound = x / (x + 2.0).powi(5);
                let ratio = dj.abs() / (fact * fact * bound);
                c = c.max(ratio.powf(1.0 / (j as f64 + 1.0)));
            }
            consts.push(c);
        }
        AssumptionReport {
            omega_positive,
            omega_prime_negative,
            b_prime_negative,
            sup_weighted_omega: sup_w,
            c_star: self.c_star,
            derivative_constants: consts,
            identity_residual: ident,
        }
    }
}

/// j-th derivative by the centered binomial difference with spacing `step`.
fn central_difference(f: &impl Fn(f64) -> f64, v: f64, j: usize, step: f64) -> f64 {
    let mut s = 0.0;
    let mut binom = 1.0;
    for i in 0..=j {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * binom * f(v + (j as f64 / 2.0 - i as f64) * step);
        binom = binom * (j - i) as f64 / (i + 1) as f64;
    }
    s / step.powi(j as i32)
}
