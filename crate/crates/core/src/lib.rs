//! Fair strikes of variance swaps under the Heston, Hull-White and
//! Schobel-Zhu stochastic volatility models.
//!
//! Closed forms live in the model modules, [`framework`] evaluates the same
//! strikes from moment kernels by quadrature, [`asymptotics`] holds the
//! expansions in `1/n`, `T` and the vol-of-vol, and [`mc`] is a simulation
//! oracle. [`pricing`] dispatches over models and methods.

pub mod asymptotics;
pub mod error;
pub mod framework;
pub mod heston;
pub mod hull_white;
pub mod mc;
pub mod numerics;
pub mod params;
pub mod pricing;
pub mod quadrature;
pub mod schobel_zhu;

pub use asymptotics::{
    expansion_report, heston_expansion_n, heston_gamma_poly, heston_small_t, hw_expansion_n, hw_sigma_expansion,
    hw_small_t, sz_expansion_n, sz_small_t, ExpansionReport,
};
pub use error::{PricingError, Result};
pub use framework::{
    generic_discrete_strike, rate_structure, GapReport, MomentKernels, QuadratureStrike, RateStructure,
};
pub use heston::{heston_continuous_strike, heston_discrete_strike, heston_simple_return_strike};
pub use hull_white::{hw_continuous_strike, hw_discrete_strike, hw_match_params};
pub use mc::{mc_continuous_strike, mc_discrete_strike, mc_state_moment, McConfig, McEstimate};
pub use params::{
    validate, HestonParams, HullWhiteParams, Method, ModelParams, ModelTag, ParamFile, Payoff, SchobelZhuParams,
    StrikeQuote, SwapSpec, ValidationReport,
};
pub use pricing::{
    continuous_strike, convex_order_gap, discrete_strike, model_rate_structure, price, quadrature_strike,
    QUADRATURE_TOL,
};
pub use schobel_zhu::{sz_continuous_strike, sz_discrete_strike};
