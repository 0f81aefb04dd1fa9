//! Model dispatch: one entry point per payoff and method.

use crate::error::{PricingError, Result};
use crate::framework::{
    generic_discrete_strike, rate_structure, GapReport, MomentKernels, QuadratureStrike, RateStructure,
};
use crate::heston::{heston_continuous_strike, heston_discrete_strike, heston_simple_return_strike, HestonKernels};
use crate::hull_white::{hw_continuous_strike, hw_discrete_strike, HullWhiteKernels};
use crate::mc::{mc_continuous_strike, mc_discrete_strike, McConfig};
use crate::params::{validate, Method, ModelParams, Payoff, StrikeQuote, SwapSpec};
use crate::schobel_zhu::{sz_continuous_strike, sz_discrete_strike, SzKernels};

/// Default relative tolerance of the quadrature engine.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// Closed-form continuous strike.
pub fn continuous_strike(params: &ModelParams, maturity: f64) -> Result<f64> {
    match params {
        ModelParams::Heston(p) => heston_continuous_strike(p, maturity),
        ModelParams::HullWhite(p) => Ok(hw_continuous_strike(p, maturity)),
        ModelParams::SchobelZhu(p) => sz_continuous_strike(p, maturity),
    }
}

/// Closed-form discrete strike on log returns.
pub fn discrete_strike(params: &ModelParams, spec: &SwapSpec) -> Result<f64> {
    match params {
        ModelParams::Heston(p) => heston_discrete_strike(p, spec),
        ModelParams::HullWhite(p) => hw_discrete_strike(p, spec),
        ModelParams::SchobelZhu(p) => sz_discrete_strike(p, spec),
    }
}

pub fn kernels(params: &ModelParams) -> Box<dyn MomentKernels> {
    match *params {
        ModelParams::Heston(p) => Box::new(HestonKernels::new(p)),
        ModelParams::HullWhite(p) => Box::new(HullWhiteKernels::new(p)),
        ModelParams::SchobelZhu(p) => Box::new(SzKernels::new(p)),
    }
}

/// Discrete strike from the model's kernels and the generic engine.
pub fn quadrature_strike(params: &ModelParams, spec: &SwapSpec, tol: f64) -> Result<QuadratureStrike> {
    generic_discrete_strike(kernels(params).as_ref(), spec, tol)
}

/// Validates, then prices `payoff` with `method`. Monte Carlo uses `mc` or
/// the default configuration.
pub fn price(
    params: &ModelParams,
    spec: &SwapSpec,
    payoff: Payoff,
    method: Method,
    mc: Option<&McConfig>,
) -> Result<StrikeQuote> {
    validate(params, spec).into_result()?;
    let quote = |value: f64, std_error: Option<f64>| StrikeQuote {
        value,
        payoff,
        method,
        model: params.tag(),
        spec: *spec,
        std_error,
    };
    let default_cfg = McConfig::default();
    let cfg = mc.unwrap_or(&default_cfg);
    let out = match (payoff, method) {
        (Payoff::DiscreteLog, Method::ClosedForm) => quote(discrete_strike(params, spec)?, None),
        (Payoff::DiscreteLog, Method::Quadrature) => {
            let q = quadrature_strike(params, spec, QUADRATURE_TOL)?;
            quote(q.value, None)
        }
        (Payoff::DiscreteLog, Method::MonteCarlo) => {
            let e = mc_discrete_strike(params, spec, cfg)?;
            quote(e.mean, Some(e.std_error))
        }
        (Payoff::Continuous, Method::ClosedForm | Method::Quadrature) => {
            quote(continuous_strike(params, spec.maturity)?, None)
        }
        (Payoff::Continuous, Method::MonteCarlo) => {
            let e = mc_continuous_strike(params, spec.maturity, cfg)?;
            quote(e.mean, Some(e.std_error))
        }
        (Payoff::DiscreteSimple, Method::ClosedForm) => match params {
            ModelParams::Heston(p) => quote(heston_simple_return_strike(p, spec)?, None),
            _ => {
                return Err(PricingError::ValidityDomain(format!(
                    "simple-return strike is only available for Heston, not {}",
                    params.tag()
                )))
            }
        },
        (Payoff::DiscreteSimple, _) => {
            return Err(PricingError::ValidityDomain("simple-return strike has a closed form only".into()))
        }
    };
    if !out.value.is_finite() {
        return Err(PricingError::NonFinite("strike"));
    }
    Ok(out)
}

/// Signed gap `K_d - K_c` from the closed forms.
pub fn convex_order_gap(params: &ModelParams, spec: &SwapSpec) -> Result<GapReport> {
    Ok(GapReport::new(discrete_strike(params, spec)?, continuous_strike(params, spec.maturity)?))
}

/// Rate structure of the closed-form discrete strike.
pub fn model_rate_structure(params: &ModelParams, spec: &SwapSpec) -> Result<RateStructure> {
    let continuous = continuous_strike(params, spec.maturity)?;
    rate_structure(|r| discrete_strike(params, &spec.with_rate(r)), spec, continuous)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{HestonParams, HullWhiteParams, SchobelZhuParams};
    use approx::assert_relative_eq;

    fn models() -> [ModelParams; 3] {
        [
            HestonParams { kappa: 6.21, theta: 0.019, gamma: 0.31, rho: -0.7, v0: 0.010201 }.into(),
            HullWhiteParams { mu: 1.0, sigma: 0.42, rho: -0.7, v0: 0.010201 }.into(),
            SchobelZhuParams { kappa: 6.21, theta: 0.019f64.sqrt(), gamma: 0.31, rho: -0.7, v0: 0.101 }.into(),
        ]
    }

    #[test]
    fn quadrature_agrees_with_closed_form() {
        let spec = SwapSpec::new(1.0, 12, 0.0319).unwrap();
        for m in models() {
            let a = price(&m, &spec, Payoff::DiscreteLog, Method::ClosedForm, None).unwrap();
            let b = price(&m, &spec, Payoff::DiscreteLog, Method::Quadrature, None).unwrap();
            assert_relative_eq!(a.value, b.value, max_relative = 1e-9);
        }
    }

    #[test]
    fn invalid_params_are_rejected_before_pricing() {
        let bad: ModelParams = HestonParams { kappa: 1.0, theta: 0.04, gamma: 0.3, rho: 1.5, v0: 0.04 }.into();
        let spec = SwapSpec::new(1.0, 4, 0.0).unwrap();
        let err = price(&bad, &spec, Payoff::DiscreteLog, Method::ClosedForm, None).unwrap_err();
        assert!(err.is_validation());
    }

    #[test]
    fn simple_returns_need_heston() {
        let spec = SwapSpec::new(1.0, 4, 0.0).unwrap();
        let err = price(&models()[1], &spec, Payoff::DiscreteSimple, Method::ClosedForm, None).unwrap_err();
        assert!(matches!(err, PricingError::ValidityDomain(_)));
    }

    #[test]
    fn rate_structure_holds_for_each_model() {
        let spec = SwapSpec::new(1.0, 52, 0.0).unwrap();
        for m in models() {
            let rs = model_rate_structure(&m, &spec).unwrap();
            for r in [0.0, 0.05, 0.1] {
                let direct = discrete_strike(&m, &spec.with_rate(r)).unwrap();
                assert_relative_eq!(rs.strike_at(r), direct, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn gap_is_nonnegative_without_rate_or_correlation() {
        let spec = SwapSpec::new(1.0, 3, 0.0).unwrap();
        for m in models() {
            let g = convex_order_gap(&m.with_rho(0.0), &spec).unwrap();
            assert!(!g.negative, "{m:?}: {g:?}");
        }
    }
}
