//! Heston model: CIR variance with `dV = kappa (theta - V) dt + gamma sqrt(V) dW`.

mod simple_return;

pub use simple_return::{heston_simple_return_strike, MgfAux};

use crate::error::{PricingError, Result};
use crate::framework::MomentKernels;
use crate::numerics::{dd_phi1, half_tanh_ratio, phi1, phi1_neg};
use crate::params::{HestonParams, SwapSpec};

/// Smallest admissible `kappa * T`; the closed forms carry `1/kappa^3`.
pub const KAPPA_T_FLOOR: f64 = 1e-8;

pub(crate) fn check_kappa_floor(kappa: f64, horizon: f64) -> Result<()> {
    if kappa * horizon < KAPPA_T_FLOOR {
        Err(PricingError::DegenerateParameter(format!(
            "kappa * T = {:e} is below the floor {KAPPA_T_FLOOR:e}",
            kappa * horizon
        )))
    } else {
        Ok(())
    }
}

/// Drift constants of the log price once the leverage term is rewritten
/// through the variance increment:
/// `ln S_{t+D}/S_t = a D + b I + (rho/gamma)(V_{t+D} - V_t) + sqrt(1-rho^2) int sqrt(V) dW`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HestonAux {
    pub a: f64,
    pub b: f64,
}

impl HestonAux {
    pub fn new(p: &HestonParams, rate: f64) -> Result<Self> {
        if p.gamma <= 0.0 {
            return Err(PricingError::DegenerateParameter("gamma = 0 leaves the leverage constants undefined".into()));
        }
        Ok(HestonAux { a: rate - p.rho * p.kappa * p.theta / p.gamma, b: p.rho * p.kappa / p.gamma - 0.5 })
    }
}

/// `E[V_t]`.
pub fn mean_variance(p: &HestonParams, t: f64) -> f64 {
    p.theta + (-p.kappa * t).exp() * (p.v0 - p.theta)
}

/// `E[V_t V_s]` for `s <= t`.
pub fn cross_moment(p: &HestonParams, t: f64, s: f64) -> f64 {
    let HestonParams { kappa: k, theta: th, gamma: g, v0, .. } = *p;
    let g2k = g * g / (2.0 * k);
    th * th
        + (-k * t).exp() * (v0 - th) * (th + g * g / k)
        + (-k * s).exp() * th * (v0 - th)
        + (-k * (t + s)).exp() * ((th - v0) * (th - v0) + g2k * (th - 2.0 * v0))
        + g2k * th * (-k * (t - s)).exp()
}

/// `Var(V_t)`.
pub fn terminal_variance(p: &HestonParams, t: f64) -> f64 {
    let e = (-p.kappa * t).exp();
    let one_minus = -(-p.kappa * t).exp_m1();
    p.gamma * p.gamma / p.kappa * (p.v0 * e * one_minus + 0.5 * p.theta * one_minus * one_minus)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HestonMoments {
    /// `E[V_t]`
    pub mean: f64,
    /// `E[V_t V_s]`
    pub cross: f64,
    /// `Var(V_t)`
    pub variance: f64,
}

/// Moments of the variance at times `s <= t`.
pub fn heston_variance_moments(p: &HestonParams, t: f64, s: f64) -> Result<HestonMoments> {
    if s > t || s < 0.0 {
        return Err(PricingError::OrderViolation { earlier: s, later: t });
    }
    Ok(HestonMoments { mean: mean_variance(p, t), cross: cross_moment(p, t, s), variance: terminal_variance(p, t) })
}

/// `(1/T) E[int_0^T V_s ds]`; free of `r`, `rho` and `gamma`.
pub fn heston_continuous_strike(p: &HestonParams, maturity: f64) -> Result<f64> {
    check_kappa_floor(p.kappa, maturity)?;
    Ok(p.theta + (p.v0 - p.theta) * phi1_neg(p.kappa * maturity))
}

/// Discrete strike on the grid of `spec`.
///
/// Evaluated as the continuous strike plus an explicit `1/n` gap term so the
/// gap keeps full relative precision for large `n`. Exactly affine in `rho`
/// and quadratic in `gamma`; `gamma = 0` is allowed.
pub fn heston_discrete_strike(p: &HestonParams, spec: &SwapSpec) -> Result<f64> {
    let kc = heston_continuous_strike(p, spec.maturity)?;
    check_kappa_floor(p.kappa, spec.delta())?;
    let HestonParams { kappa: k, theta: th, gamma: g, rho, v0 } = *p;
    let (t, r, n) = (spec.maturity, spec.rate, spec.n());
    let x = k * spec.delta();
    let decay = -(-k * t).exp_m1();
    let decay2 = -(-2.0 * k * t).exp_m1();
    let a1 = g * g * (th - 2.0 * v0) + 2.0 * k * (v0 - th) * (v0 - th);
    let bracket = 2.0 * k * k * t * (th - 2.0 * r) * (th - 2.0 * r)
        + 4.0 * (v0 - th) * k * (th - 2.0 * r) * decay
        + a1 * decay2 * half_tanh_ratio(x)
        + 2.0 * k * t * th * g * (g - 4.0 * rho * k) * dd_phi1(0.0, -x)
        + 4.0 * (v0 - th) * g * (g - 2.0 * rho * k) * decay * dd_phi1(x, 0.0) / phi1(x);
    let value = kc + bracket / (8.0 * n * k * k);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(PricingError::NonFinite("heston discrete strike"))
    }
}

/// Moment kernels of the Heston model for the generic engine, with
/// `f(v) = v / gamma` and `h(v) = kappa (theta - v) / gamma`.
#[derive(Debug, Clone, Copy)]
pub struct HestonKernels {
    pub params: HestonParams,
}

impl HestonKernels {
    pub fn new(params: HestonParams) -> Self {
        HestonKernels { params }
    }

    fn ev(&self, t: f64) -> f64 {
        mean_variance(&self.params, t)
    }

    fn c(&self, s: f64, u: f64) -> f64 {
        cross_moment(&self.params, s.max(u), s.min(u))
    }
}

impl MomentKernels for HestonKernels {
    fn rho(&self) -> f64 {
        self.params.rho
    }

    fn m1(&self, s: f64) -> f64 {
        self.ev(s)
    }

    fn m2(&self, s: f64, u: f64) -> f64 {
        self.c(s, u)
    }

    fn m3(&self, s: f64, u: f64) -> f64 {
        let p = &self.params;
        let kg = p.kappa / p.gamma;
        kg * kg * (p.theta * p.theta - p.theta * (self.ev(s) + self.ev(u)) + self.c(s, u))
    }

    fn m4(&self, s: f64, u: f64) -> f64 {
        let p = &self.params;
        p.kappa / p.gamma * (p.theta * self.ev(u) - self.c(s, u))
    }

    fn m5(&self, t: f64, delta: f64, s: f64) -> f64 {
        let p = &self.params;
        let kg = p.kappa / p.gamma;
        (2.0 * p.rho * kg * p.theta * (self.ev(t + delta) - self.ev(t))
            + (1.0 - 2.0 * p.rho * kg) * (self.c(s, t + delta) - self.c(t, s)))
            / p.gamma
    }

    fn f_increment_sq(&self, t: f64, delta: f64) -> f64 {
        let e = t + delta;
        (self.c(e, e) + self.c(t, t) - 2.0 * self.c(e, t)) / (self.params.gamma * self.params.gamma)
    }
}
