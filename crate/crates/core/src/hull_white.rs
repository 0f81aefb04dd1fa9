//! Hull-White model: lognormal variance `dV = mu V dt + sigma V dW`.

use crate::error::{PricingError, Result};
use crate::framework::MomentKernels;
use crate::heston;
use crate::numerics::{brent, dd_phi1, phi1};
use crate::params::{HestonParams, HullWhiteParams, SwapSpec};

/// Bracket for the drift in [`hw_match_params`], in 1/time.
pub const MATCH_BRACKET: (f64, f64) = (-50.0, 50.0);

/// Power and cross moments of the lognormal variance.
#[derive(Debug, Clone, Copy)]
pub struct HwMoments {
    pub params: HullWhiteParams,
}

impl HwMoments {
    pub fn new(params: HullWhiteParams) -> Self {
        HwMoments { params }
    }

    /// `E[V_s^a]`.
    pub fn power(&self, a: f64, s: f64) -> f64 {
        let p = &self.params;
        p.v0.powf(a) * (a * p.mu * s + 0.5 * (a * a - a) * p.sigma * p.sigma * s).exp()
    }

    /// `E[V_s^i V_u^j]` for `s <= u`.
    pub fn ordered(&self, i: f64, j: f64, s: f64, u: f64) -> f64 {
        let p = &self.params;
        let tau = u - s;
        let s2 = p.sigma * p.sigma;
        self.power(i + j, s) * (j * p.mu * tau + 0.5 * (j * j - j) * s2 * tau).exp()
    }

    /// `E[V_s^i V_u^j]` for any order of `s` and `u`.
    pub fn cross(&self, i: f64, j: f64, s: f64, u: f64) -> f64 {
        if s <= u {
            self.ordered(i, j, s, u)
        } else {
            self.ordered(j, i, u, s)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HwCrossMoments {
    /// `E[V_s V_u]`
    pub v_v: f64,
    /// `E[sqrt(V_s) sqrt(V_u)]`
    pub sqrt_sqrt: f64,
    /// `E[sqrt(V_s) V_u]`
    pub sqrt_v: f64,
    /// `E[V_s sqrt(V_u)]`
    pub v_sqrt: f64,
    /// `E[V_s]`, `E[sqrt(V_s)]`, `E[V_s^{3/2}]`, `E[V_s^2]`
    pub powers: [f64; 4],
}

/// Cross moments at `s <= u` plus power moments at `s`.
pub fn hw_moments(p: &HullWhiteParams, s: f64, u: f64) -> Result<HwCrossMoments> {
    if s > u || s < 0.0 {
        return Err(PricingError::OrderViolation { earlier: s, later: u });
    }
    let m = HwMoments::new(*p);
    Ok(HwCrossMoments {
        v_v: m.ordered(1.0, 1.0, s, u),
        sqrt_sqrt: m.ordered(0.5, 0.5, s, u),
        sqrt_v: m.ordered(0.5, 1.0, s, u),
        v_sqrt: m.ordered(1.0, 0.5, s, u),
        powers: [m.power(1.0, s), m.power(0.5, s), m.power(1.5, s), m.power(2.0, s)],
    })
}

/// `V0 (e^{mu T} - 1) / (mu T)`, equal to `V0` at `mu = 0`.
pub fn hw_continuous_strike(p: &HullWhiteParams, maturity: f64) -> f64 {
    p.v0 * phi1(p.mu * maturity)
}

/// `Var(V_T) = V0^2 e^{2 mu T} (e^{sigma^2 T} - 1)`.
pub fn hw_terminal_variance(p: &HullWhiteParams, maturity: f64) -> f64 {
    p.v0 * p.v0 * (2.0 * p.mu * maturity).exp() * (p.sigma * p.sigma * maturity).exp_m1()
}

/// Discrete strike on the grid of `spec`.
///
/// Each ratio with a vanishing denominator (`mu + sigma^2`, `4 mu + 3 sigma^2`,
/// `mu`) is a divided difference of `phi1` and is evaluated as such, so the
/// formula stays finite and accurate through those points.
pub fn hw_discrete_strike(p: &HullWhiteParams, spec: &SwapSpec) -> Result<f64> {
    let (t, r, d) = (spec.maturity, spec.rate, spec.delta());
    let s2 = p.sigma * p.sigma;
    let a = 2.0 * p.mu + s2;
    let b = p.mu;
    let c = 3.0 * (4.0 * p.mu + s2) / 8.0;
    let kc = hw_continuous_strike(p, t);
    let variance_term = 0.5 * p.v0 * p.v0 * phi1(a * t) * d * dd_phi1(a * d, b * d) / phi1(a * d);
    let leverage_term = if p.sigma == 0.0 || p.rho == 0.0 {
        0.0
    } else {
        p.rho * p.sigma * p.v0.powf(1.5) * phi1(c * t) * d * dd_phi1(b * d, c * d) / phi1(c * d)
    };
    let value = r * r * d + (1.0 - r * d) * kc + variance_term - leverage_term;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(PricingError::NonFinite("hull-white discrete strike"))
    }
}

/// Hull-White parameters whose continuous strike and `Var(V_T)` equal the
/// Heston ones. `rho` and `v0` are copied.
pub fn hw_match_params(h: &HestonParams, maturity: f64) -> Result<HullWhiteParams> {
    if !(h.v0 > 0.0) {
        return Err(PricingError::InvalidParameters(vec!["matching needs v0 > 0".to_string()]));
    }
    let target = heston::heston_continuous_strike(h, maturity)?;
    let (lo, hi) = MATCH_BRACKET;
    let mu = brent(|mu| h.v0 * phi1(mu * maturity) - target, lo, hi, 1e-16)?;
    let var_h = heston::terminal_variance(h, maturity);
    let scale = h.v0 * h.v0 * (2.0 * mu * maturity).exp();
    let sigma = ((var_h / scale).ln_1p() / maturity).sqrt();
    Ok(HullWhiteParams { mu, sigma, rho: h.rho, v0: h.v0 })
}

/// Moment kernels with `f(v) = 2 sqrt(v) / sigma` and
/// `h(v) = q sqrt(v)`, `q = mu / sigma - sigma / 4`.
#[derive(Debug, Clone, Copy)]
pub struct HullWhiteKernels {
    moments: HwMoments,
    q: f64,
}

impl HullWhiteKernels {
    pub fn new(params: HullWhiteParams) -> Self {
        HullWhiteKernels { moments: HwMoments::new(params), q: params.mu / params.sigma - params.sigma / 4.0 }
    }
}

impl MomentKernels for HullWhiteKernels {
    fn rho(&self) -> f64 {
        self.moments.params.rho
    }

    fn m1(&self, s: f64) -> f64 {
        self.moments.power(1.0, s)
    }

    fn m2(&self, s: f64, u: f64) -> f64 {
        self.moments.cross(1.0, 1.0, s, u)
    }

    fn m3(&self, s: f64, u: f64) -> f64 {
        self.q * self.q * self.moments.cross(0.5, 0.5, s, u)
    }

    fn m4(&self, s: f64, u: f64) -> f64 {
        self.q * self.moments.cross(0.5, 1.0, s, u)
    }

    fn m5(&self, t: f64, delta: f64, s: f64) -> f64 {
        let m = &self.moments;
        let p = &m.params;
        let e = t + delta;
        2.0 / p.sigma
            * (2.0 * p.rho * self.q * (m.ordered(0.5, 0.5, s, e) - m.ordered(0.5, 0.5, t, s))
                + m.ordered(1.0, 0.5, s, e)
                - m.ordered(0.5, 1.0, t, s))
    }

    fn f_increment_sq(&self, t: f64, delta: f64) -> f64 {
        let m = &self.moments;
        let s = m.params.sigma;
        4.0 / (s * s) * (m.power(1.0, t + delta) + m.power(1.0, t) - 2.0 * m.ordered(0.5, 0.5, t, t + delta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn matched1() -> HullWhiteParams {
        HullWhiteParams { mu: 1.003, sigma: 0.42, rho: -0.7, v0: 0.010201 }
    }

    fn set1() -> HestonParams {
        HestonParams { kappa: 6.21, theta: 0.019, gamma: 0.31, rho: -0.7, v0: 0.010201 }
    }

    #[test]
    fn reference_values() {
        let s1 = SwapSpec::new(1.0, 1, 0.0319).unwrap();
        let s12 = SwapSpec::new(1.0, 12, 0.0319).unwrap();
        assert_relative_eq!(hw_discrete_strike(&matched1(), &s1).unwrap(), 0.01847525122324091, max_relative = 1e-13);
        assert_relative_eq!(hw_discrete_strike(&matched1(), &s12).unwrap(), 0.017635532376263335, max_relative = 1e-13);
    }

    #[test]
    fn constant_variance() {
        let p = HullWhiteParams { mu: 0.0, sigma: 0.0, rho: 0.4, v0: 0.04 };
        for n in [1, 4, 30] {
            let spec = SwapSpec::new(1.5, n, 0.03).unwrap();
            let expected = 0.04 + (0.03f64 - 0.02).powi(2) * 1.5 / n as f64;
            assert_relative_eq!(hw_discrete_strike(&p, &spec).unwrap(), expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn deterministic_growth() {
        let p = HullWhiteParams { mu: 0.8, sigma: 0.0, rho: 0.0, v0: 0.03 };
        let spec = SwapSpec::new(2.0, 7, 0.02).unwrap();
        let d = spec.delta();
        let direct: f64 = (0..7)
            .map(|i| {
                let a = spec.time(i);
                let integral = p.v0 * ((p.mu * (a + d)).exp() - (p.mu * a).exp()) / p.mu;
                (0.02 * d - 0.5 * integral).powi(2) + integral
            })
            .sum::<f64>()
            / 2.0;
        assert_relative_eq!(hw_discrete_strike(&p, &spec).unwrap(), direct, max_relative = 1e-13);
    }

    #[test]
    fn continuity_through_removable_points() {
        // mu + sigma^2 = 0 and 4 mu + 3 sigma^2 = 0
        for (mu, sigma) in [(-0.16, 0.4), (-0.12, 0.4)] {
            let spec = SwapSpec::new(1.0, 6, 0.01).unwrap();
            let at = hw_discrete_strike(&HullWhiteParams { mu, sigma, rho: -0.5, v0: 0.04 }, &spec).unwrap();
            let near =
                hw_discrete_strike(&HullWhiteParams { mu: mu + 1e-7, sigma, rho: -0.5, v0: 0.04 }, &spec).unwrap();
            assert_relative_eq!(at, near, max_relative = 1e-6);
        }
    }

    #[test]
    fn continuous_strike_small_drift() {
        let p = HullWhiteParams { mu: 2.9e-9, sigma: 0.52, rho: -0.3, v0: 0.09 };
        assert_relative_eq!(hw_continuous_strike(&p, 5.0), 0.09, max_relative = 1e-8);
        assert_eq!(hw_continuous_strike(&HullWhiteParams { mu: 0.0, ..p }, 5.0), 0.09);
    }

    #[test]
    fn matching_is_a_fixed_point() {
        let h = set1();
        let hw = hw_match_params(&h, 1.0).unwrap();
        let kh = heston::heston_continuous_strike(&h, 1.0).unwrap();
        assert!((hw_continuous_strike(&hw, 1.0) - kh).abs() <= 1e-10);
        assert!((hw_terminal_variance(&hw, 1.0) - heston::terminal_variance(&h, 1.0)).abs() <= 1e-12);
        assert_eq!(hw.rho, h.rho);
        assert_eq!(hw.v0, h.v0);
    }

    #[test]
    fn matching_values() {
        let hw = hw_match_params(&set1(), 1.0).unwrap();
        assert_relative_eq!(hw.mu, 1.0056493, max_relative = 1e-6);
        assert_relative_eq!(hw.sigma, 0.4157616, max_relative = 1e-6);
        let set2 = HestonParams { kappa: 2.0, theta: 0.09, gamma: 1.0, rho: -0.3, v0: 0.09 };
        let hw2 = hw_match_params(&set2, 5.0).unwrap();
        assert!(hw2.mu.abs() <= 1e-6);
        assert_relative_eq!(hw2.sigma, 0.5155843, max_relative = 1e-6);
    }

    #[test]
    fn moments_initial_and_deterministic() {
        let m = hw_moments(&matched1(), 0.0, 0.0).unwrap();
        assert_relative_eq!(m.v_v, 0.010201f64.powi(2), max_relative = 1e-15);
        assert_relative_eq!(m.sqrt_v, 0.010201f64.powf(1.5), max_relative = 1e-15);
        let p = HullWhiteParams { sigma: 0.0, ..matched1() };
        let m = hw_moments(&p, 0.3, 0.7).unwrap();
        assert_relative_eq!(m.v_v, p.v0 * p.v0 * (p.mu * 1.0).exp(), max_relative = 1e-15);
        assert!(hw_moments(&p, 0.7, 0.3).is_err());
    }

    #[test]
    fn power_moments_positive() {
        let m = HwMoments::new(matched1());
        for a in [0.5, 1.0, 1.5, 2.0] {
            assert!(m.power(a, 0.8) > 0.0);
        }
    }
}
