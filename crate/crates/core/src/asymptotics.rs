//! Expansions of the discrete strikes in `1/n`, in small maturity and in the
//! volatility of variance, with the critical correlations where the leading
//! `1/n` coefficient changes sign.

use serde::Serialize;

use crate::error::{PricingError, Result};
use crate::heston::{check_kappa_floor, heston_continuous_strike};
use crate::hull_white::{hw_continuous_strike, hw_discrete_strike};
use crate::numerics::{dd_phi1, half_tanh_ratio, phi1};
use crate::params::{HestonParams, HullWhiteParams, ModelParams, ModelTag, SchobelZhuParams, SwapSpec};
use crate::schobel_zhu::sz_continuous_strike;

/// Zero of a coefficient that is affine in `rho`: `rest + slope * rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalRho {
    pub value: f64,
    pub slope: f64,
}

impl CriticalRho {
    fn solve(rest: f64, slope: f64, what: &'static str) -> Result<Self> {
        if slope == 0.0 || !slope.is_finite() {
            return Err(PricingError::IndeterminateRho0(what));
        }
        Ok(CriticalRho { value: -rest / slope, slope })
    }

    /// Set when the leading coefficient increases with `rho`.
    pub fn increasing(&self) -> bool {
        self.slope > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HestonExpansionN {
    pub a1: f64,
    pub c1: f64,
    /// `a1 = rest + slope * rho`
    pub rest: f64,
    pub slope: f64,
}

impl HestonExpansionN {
    pub fn rho0(&self) -> Result<CriticalRho> {
        CriticalRho::solve(self.rest, self.slope, "heston: gamma = 0")
    }
}

/// `K_d = K_c + a1 / n + O(1/n^2)`.
pub fn heston_expansion_n(p: &HestonParams, maturity: f64, rate: f64) -> Result<HestonExpansionN> {
    let kc = heston_continuous_strike(p, maturity)?;
    let HestonParams { kappa: k, theta: th, gamma: g, v0, .. } = *p;
    let (t, r) = (maturity, rate);
    let em = (-k * t).exp_m1();
    let em2 = (-2.0 * k * t).exp_m1();
    let c1 = ((g * g * th - 2.0 * k * (v0 - th) * (v0 - th)) * em2
        + 2.0 * (v0 - th) * em * (g * g * em - 4.0 * k * th))
        / (16.0 * k * k);
    let slope = g * (th - v0) * -em / (2.0 * k) - th * g * t / 2.0;
    let rest = r * r * t - r * t * kc + (th * th / 4.0 + th * g * g / (8.0 * k)) * t + c1;
    Ok(HestonExpansionN { a1: rest + slope * p.rho, c1, rest, slope })
}

/// `K_d(T) = V0 + b1 T + b2 T^2 + O(T^3)` at fixed `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallMaturity {
    pub b1: f64,
    pub b2: Option<f64>,
    /// Leading `1/n` part of `b1`, the small-maturity gap slope.
    pub gap_coefficient: f64,
}

pub fn heston_small_t(p: &HestonParams, rate: f64, periods: u32) -> SmallMaturity {
    let HestonParams { kappa: k, theta: th, gamma: g, rho, v0 } = *p;
    let (r, n) = (rate, periods as f64);
    let gap = ((v0 - 2.0 * r).powi(2) - 2.0 * rho * v0 * g) / (4.0 * n);
    let b2 = k * k * (v0 - th) / 6.0
        + ((v0 - th) * k * (g * rho + 2.0 * r - v0) + g * g * v0 / 2.0) / (4.0 * n)
        + (g * rho * k * (v0 + th) - g * g * v0 / 2.0) / (12.0 * n * n);
    SmallMaturity { b1: k * (th - v0) / 2.0 + gap, b2: Some(b2), gap_coefficient: gap }
}

/// `K_d = (h0 + h1 gamma + h2 gamma^2) / (8 n kappa^3 T)`; `gamma` in `p` is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaPolynomial {
    pub h0: f64,
    pub h1: f64,
    pub h2: f64,
    pub scale: f64,
}

impl GammaPolynomial {
    pub fn eval(&self, gamma: f64) -> f64 {
        (self.h0 + gamma * (self.h1 + gamma * self.h2)) / self.scale
    }
}

pub fn heston_gamma_poly(p: &HestonParams, spec: &SwapSpec) -> Result<GammaPolynomial> {
    check_kappa_floor(p.kappa, spec.maturity)?;
    check_kappa_floor(p.kappa, spec.delta())?;
    let HestonParams { kappa: k, theta: th, rho, v0, .. } = *p;
    let (t, r, n) = (spec.maturity, spec.rate, spec.n());
    let x = k * spec.delta();
    let decay = -(-k * t).exp_m1();
    let decay2 = -(-2.0 * k * t).exp_m1();
    // n (1 - e^{-kT}) + kT (1 - e^{-kT}) / (1 - e^x)
    let edge = n * decay * x * dd_phi1(x, 0.0) / phi1(x);
    // n (1 - e^{-x}) - kT
    let inner = -n * x * x * dd_phi1(-x, 0.0);
    let tanh_term = n * decay2 * x * half_tanh_ratio(x);
    let h0 = 2.0 * k * (v0 - th).powi(2) * tanh_term
        + 2.0 * k * t * (k * k * t * (th - 2.0 * r).powi(2) + 4.0 * k * k * n * th)
        + 4.0 * (v0 - th) * (2.0 * k * k * n + k * k * t * (th - 2.0 * r)) * decay;
    let h1 = 8.0 * rho * k * (n * th * inner - (v0 - th) * edge);
    let h2 = (th - 2.0 * v0) * tanh_term + 2.0 * n * n * th * x * x * dd_phi1(-x, 0.0) + 4.0 * (v0 - th) * edge;
    Ok(GammaPolynomial { h0, h1, h2, scale: 8.0 * n * k * k * k * t })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullWhiteExpansionN {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub rest: f64,
    pub slope: f64,
}

impl HullWhiteExpansionN {
    pub fn rho0(&self) -> Result<CriticalRho> {
        CriticalRho::solve(self.rest, self.slope, "hull-white: sigma = 0 or v0 = 0")
    }
}

/// `K_d = K_c + a1/n + a2/n^2 + a3/n^3 + O(1/n^4)`.
pub fn hw_expansion_n(p: &HullWhiteParams, maturity: f64, rate: f64) -> HullWhiteExpansionN {
    let HullWhiteParams { mu, sigma, rho, v0 } = *p;
    let (t, r) = (maturity, rate);
    let s2 = sigma * sigma;
    let kc = hw_continuous_strike(p, t);
    // (e^{(2mu+s2)T} - 1)/(2mu+s2) and (e^{3(4mu+s2)T/8} - 1)/(4mu+s2)
    let a = t * phi1((2.0 * mu + s2) * t);
    let b = 3.0 * t / 8.0 * phi1(3.0 * (4.0 * mu + s2) * t / 8.0);
    let v32 = v0.powf(1.5);
    let rest = r * r * t - r * t * kc + v0 * v0 / 4.0 * a;
    let slope = -4.0 / 3.0 * sigma * v32 * b;
    let a2 = -v0 * v0 * s2 * t / 24.0 * a - rho * v32 * sigma * t * (4.0 * mu - 3.0 * s2) / 36.0 * b;
    let a3 = -mu * t * t * v0 * v0 * (mu + s2) / 48.0 * a
        + mu * t * t * rho * sigma * v32 * (4.0 * mu + 3.0 * s2) / 72.0 * b;
    HullWhiteExpansionN { a1: rest + slope * rho, a2, a3, rest, slope }
}

pub fn hw_small_t(p: &HullWhiteParams, rate: f64, periods: u32) -> SmallMaturity {
    let HullWhiteParams { mu, sigma, rho, v0 } = *p;
    let (r, n) = (rate, periods as f64);
    let sv = v0.sqrt();
    let gap = ((v0 - 2.0 * r).powi(2) - 2.0 * rho * v0 * sv * sigma) / (4.0 * n);
    let b2 = v0 * mu * mu / 6.0
        + v0 / (4.0 * n)
            * (sigma * sigma * v0 / 2.0 - 3.0 * rho * sv * sigma * (sigma * sigma + 4.0 * mu) / 8.0
                + mu * (v0 - 2.0 * r))
        + v0 * sv * sigma * (rho * (3.0 * sigma * sigma - 4.0 * mu) - 4.0 * sigma * sv) / (96.0 * n * n);
    SmallMaturity { b1: v0 * mu / 2.0 + gap, b2: Some(b2), gap_coefficient: gap }
}

/// `K_d = h0 + h1 sigma + O(sigma^2)`; `sigma` in `p` is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaExpansion {
    pub h0: f64,
    pub h1: f64,
}

pub fn hw_sigma_expansion(p: &HullWhiteParams, spec: &SwapSpec) -> Result<SigmaExpansion> {
    let flat = HullWhiteParams { sigma: 0.0, ..*p };
    let h0 = hw_discrete_strike(&flat, spec)?;
    let d = spec.delta();
    let (mu, c) = (p.mu, 1.5 * p.mu);
    let h1 = -p.rho * p.v0.powf(1.5) * phi1(c * spec.maturity) * d * dd_phi1(mu * d, c * d) / phi1(c * d);
    Ok(SigmaExpansion { h0, h1 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchobelZhuExpansionN {
    pub a1: f64,
    pub d1: f64,
    pub d2: f64,
    /// `(e^{-kappa T} - 1) / kappa`
    pub d: f64,
    pub e: f64,
    pub rest: f64,
    pub slope: f64,
}

impl SchobelZhuExpansionN {
    /// The sign of the slope is not fixed in this model; see
    /// [`CriticalRho::increasing`].
    pub fn rho0(&self) -> Result<CriticalRho> {
        CriticalRho::solve(self.rest, self.slope, "schobel-zhu: d2 gamma = 0")
    }
}

pub fn sz_expansion_n(p: &SchobelZhuParams, maturity: f64, rate: f64) -> Result<SchobelZhuExpansionN> {
    let kc = sz_continuous_strike(p, maturity)?;
    let SchobelZhuParams { kappa: k, theta: th, gamma: g, rho, v0 } = *p;
    let (t, r) = (maturity, rate);
    let (g2, g4) = (g * g, g.powi(4));
    let (v2, v3, v4) = (v0 * v0, v0.powi(3), v0.powi(4));
    let (k2, th2) = (k * k, th * th);
    let e = 4.0 * v4 * k2 - 4.0 * th.powi(4) * k2 - 3.0 * g4 - 12.0 * g2 * th2 * k;
    let d = (-k * t).exp_m1() / k;
    let d1 = t * v4 / 4.0 - e * (t + d) / (16.0 * k2)
        + (3.0 * v2 * g2 / 4.0 + e / (32.0 * k) + k * v3 * (th - v0) / 2.0) * d * d
        + (2.0 * th * k2 * v3 / 3.0 - v4 * k2 / 6.0 - e / 48.0 - v2 * th2 * k2 / 2.0 - g2 * k * v0 * th
            + 3.0 * v2 * k * g2 / 4.0
            - g4 / 4.0)
            * d.powi(3)
        + (e / (8.0 * k)
            + 3.0 * g2 * (th - v0) * th
            + 3.0 * v2 * g2 / 2.0
            + v0 * k * (th - v0) * (2.0 * th2 - th * v0 + v2))
            * k2
            * d.powi(4)
            / 8.0;
    let d2 = t * (g2 + 2.0 * k * th2)
        + (2.0 * k * (th2 - v2) + g2) * d
        + k / 2.0 * (g2 - 2.0 * k * (th - v0).powi(2)) * d * d;
    let rest = r * r * t - r * t * kc + d1;
    let slope = -d2 * g / (2.0 * k);
    Ok(SchobelZhuExpansionN { a1: rest + slope * rho, d1, d2, d, e, rest, slope })
}

pub fn sz_small_t(p: &SchobelZhuParams, rate: f64, periods: u32) -> SmallMaturity {
    let SchobelZhuParams { kappa: k, theta: th, gamma: g, rho, v0 } = *p;
    let (r, n) = (rate, periods as f64);
    let v2 = v0 * v0;
    let gap = ((v2 - 2.0 * r).powi(2) - 4.0 * rho * v2 * g) / (4.0 * n);
    SmallMaturity { b1: k * v0 * (th - v0) + g * g / 2.0 + gap, b2: None, gap_coefficient: gap }
}

/// Every expansion coefficient available for one model and swap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub model: ModelTag,
    pub continuous: f64,
    /// `K_c / 2`, the rate minimizing the discrete strike.
    pub critical_rate: f64,
    pub a1: f64,
    pub a2: Option<f64>,
    pub a3: Option<f64>,
    pub c1: Option<f64>,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub d: Option<f64>,
    pub e: Option<f64>,
    pub small_maturity: SmallMaturity,
    pub gamma_poly: Option<GammaPolynomial>,
    pub sigma_expansion: Option<SigmaExpansion>,
    /// `None` when the critical correlation is undefined.
    pub rho0: Option<CriticalRho>,
}

pub fn expansion_report(params: &ModelParams, spec: &SwapSpec) -> Result<ExpansionReport> {
    let (t, r, n) = (spec.maturity, spec.rate, spec.periods);
    let blank = |continuous: f64, a1: f64, small: SmallMaturity| ExpansionReport {
        model: params.tag(),
        continuous,
        critical_rate: continuous / 2.0,
        a1,
        a2: None,
        a3: None,
        c1: None,
        d1: None,
        d2: None,
        d: None,
        e: None,
        small_maturity: small,
        gamma_poly: None,
        sigma_expansion: None,
        rho0: None,
    };
    Ok(match params {
        ModelParams::Heston(p) => {
            let x = heston_expansion_n(p, t, r)?;
            ExpansionReport {
                c1: Some(x.c1),
                gamma_poly: Some(heston_gamma_poly(p, spec)?),
                rho0: x.rho0().ok(),
                ..blank(heston_continuous_strike(p, t)?, x.a1, heston_small_t(p, r, n))
            }
        }
        ModelParams::HullWhite(p) => {
            let x = hw_expansion_n(p, t, r);
            ExpansionReport {
                a2: Some(x.a2),
                a3: Some(x.a3),
                sigma_expansion: Some(hw_sigma_expansion(p, spec)?),
                rho0: x.rho0().ok(),
                ..blank(hw_continuous_strike(p, t), x.a1, hw_small_t(p, r, n))
            }
        }
        ModelParams::SchobelZhu(p) => {
            let x = sz_expansion_n(p, t, r)?;
            ExpansionReport {
                d1: Some(x.d1),
                d2: Some(x.d2),
                d: Some(x.d),
                e: Some(x.e),
                rho0: x.rho0().ok(),
                ..blank(sz_continuous_strike(p, t)?, x.a1, sz_small_t(p, r, n))
            }
        }
    })
}
