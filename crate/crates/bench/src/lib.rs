//! Parameter sets shared by the benchmarks.

use varswap::{HestonParams, ModelParams, SchobelZhuParams, SwapSpec};

pub fn heston_set1() -> HestonParams {
    HestonParams { kappa: 6.21, theta: 0.019, gamma: 0.31, rho: -0.7, v0: 0.010201 }
}

pub fn heston_set2() -> HestonParams {
    HestonParams { kappa: 2.0, theta: 0.09, gamma: 1.0, rho: -0.3, v0: 0.09 }
}

pub fn schobel_zhu() -> SchobelZhuParams {
    SchobelZhuParams { kappa: 6.21, theta: 0.019f64.sqrt(), gamma: 0.31, rho: -0.7, v0: 0.010201f64.sqrt() }
}

/// Heston Set 1, its matched Hull-White model and the Schobel-Zhu set.
pub fn models() -> Vec<(&'static str, ModelParams)> {
    let hw = varswap::hw_match_params(&heston_set1(), 1.0).expect("set 1 matches");
    vec![("heston", heston_set1().into()), ("hull_white", hw.into()), ("schobel_zhu", schobel_zhu().into())]
}

pub fn daily() -> SwapSpec {
    SwapSpec::new(1.0, 252, 0.0319).expect("valid grid")
}
