use num_complex::Complex64;

use super::{check_kappa_floor, mean_variance};
use crate::error::{PricingError, Result};
use crate::numerics::phi1_neg;
use crate::params::{heston_alpha, HestonParams, SwapSpec};

const IMAG_TOLERANCE: f64 = 1e-10;

fn c_expm1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-5 {
        z * (1.0 + z * (0.5 + z / 6.0))
    } else {
        z.exp() - 1.0
    }
}

fn c_ln_1p(z: Complex64) -> Complex64 {
    if z.norm() < 1e-5 {
        z * (1.0 - z * (0.5 - z / 3.0))
    } else {
        (1.0 + z).ln()
    }
}

/// Auxiliary functions of the moment generating function of a log-price
/// increment over one sampling interval, `E[(S_{t+D}/S_t)^u]`.
#[derive(Debug, Clone, Copy)]
pub struct MgfAux {
    pub d: Complex64,
    pub g: Complex64,
    pub q: Complex64,
    /// Exponent independent of the variance state.
    pub a: Complex64,
    kappa: f64,
    gamma: f64,
}

impl MgfAux {
    pub fn new(p: &HestonParams, u: f64, delta: f64) -> Self {
        let (k, gm) = (p.kappa, p.gamma);
        let g2 = gm * gm;
        let b = Complex64::new(k - gm * p.rho * u, 0.0);
        let d = (b * b + g2 * (u - u * u)).sqrt();
        let (bp, direct) = (b + d, b - d);
        // (b - d)(b + d) = -gamma^2 (u - u^2)
        let bm = if bp.norm() >= direct.norm() { -g2 * (u - u * u) / bp } else { direct };
        let g = if bp.norm() >= direct.norm() { bm / bp } else { bm / (-g2 * (u - u * u) / bm) };
        let decay = -c_expm1(-d * delta);
        let denom = 1.0 - g * (-d * delta).exp();
        let log_term = c_ln_1p(g * decay / (1.0 - g));
        let a = k * p.theta / g2 * (bm * delta - 2.0 * log_term);
        let q = bm / g2 * decay / denom;
        MgfAux { d, g, q, a, kappa: k, gamma: gm }
    }

    /// `2 kappa / (gamma^2 (1 - e^{-kappa t}))`.
    pub fn eta(&self, t: f64) -> f64 {
        2.0 * self.kappa / (self.gamma * self.gamma * -(-self.kappa * t).exp_m1())
    }
}

/// Fair strike of `(1/T) sum ((S_{i+1} - S_i)/S_i)^2`, annualized and
/// dimensionless. Independent of the spot level.
///
/// Needs `2 kappa theta / gamma^2 >= 1`, `gamma^2 T < 1` and `eta(T) > 2`.
pub fn heston_simple_return_strike(p: &HestonParams, spec: &SwapSpec) -> Result<f64> {
    check_kappa_floor(p.kappa, spec.maturity)?;
    let (t, n, delta, r) = (spec.maturity, spec.periods, spec.delta(), spec.rate);
    let drift_term = 2.0 * (r * delta).exp_m1();

    if p.gamma == 0.0 {
        let total: f64 = (0..n)
            .map(|i| {
                let start = spec.time(i);
                let integrated =
                    p.theta * delta + (mean_variance(p, start) - p.theta) * delta * phi1_neg(p.kappa * delta);
                (2.0 * r * delta + integrated).exp_m1() - drift_term
            })
            .sum();
        return Ok(total / t);
    }

    let alpha = heston_alpha(p);
    if alpha < 0.0 {
        return Err(PricingError::ValidityDomain(format!("alpha = {alpha:.6} < 0")));
    }
    if p.gamma * p.gamma * t >= 1.0 {
        return Err(PricingError::ValidityDomain(format!("gamma^2 T = {} >= 1", p.gamma * p.gamma * t)));
    }
    let u = 2.0;
    let aux = MgfAux::new(p, u, delta);
    if aux.eta(t) <= u {
        return Err(PricingError::ValidityDomain(format!("eta(T) = {} <= 2", aux.eta(t))));
    }

    let base = 2.0 * r * delta + aux.a;
    let mut total = c_expm1(base + aux.q * p.v0) - drift_term;
    for i in 1..n {
        let start = spec.time(i);
        let eta = aux.eta(start);
        let ratio = aux.q / eta;
        let exponent = aux.q * p.v0 * (-p.kappa * start).exp() / (1.0 - ratio) - (alpha + 1.0) * c_ln_1p(-ratio);
        total += c_expm1(base + exponent) - drift_term;
    }
    let value = total / t;
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(PricingError::NonFinite("simple-return strike"));
    }
    let residual = value.im.abs() / value.re.abs();
    if residual > IMAG_TOLERANCE {
        return Err(PricingError::NonRealMgf(residual));
    }
    Ok(value.re)
}
