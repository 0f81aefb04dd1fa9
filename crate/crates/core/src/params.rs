//! Model parameters, the sampling grid of a swap, and validation.
//!
//! Heston and Hull-White parameters are in variance units. Schöbel-Zhu
//! parameters are in volatility units: `theta` and `v0` are volatilities and
//! are never squared on the way in.

use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    pub kappa: f64,
    pub theta: f64,
    pub gamma: f64,
    pub rho: f64,
    pub v0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullWhiteParams {
    pub mu: f64,
    pub sigma: f64,
    pub rho: f64,
    pub v0: f64,
}

/// Ornstein-Uhlenbeck volatility model. `theta` and `v0` are volatilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchobelZhuParams {
    pub kappa: f64,
    pub theta: f64,
    pub gamma: f64,
    pub rho: f64,
    pub v0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    #[serde(alias = "h")]
    Heston,
    #[serde(alias = "hw", alias = "hull-white")]
    HullWhite,
    #[serde(alias = "sz", alias = "schobel-zhu")]
    SchobelZhu,
}

impl std::fmt::Display for ModelTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelTag::Heston => "heston",
            ModelTag::HullWhite => "hull_white",
            ModelTag::SchobelZhu => "schobel_zhu",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelParams {
    Heston(HestonParams),
    HullWhite(HullWhiteParams),
    SchobelZhu(SchobelZhuParams),
}

impl ModelParams {
    pub fn tag(&self) -> ModelTag {
        match self {
            ModelParams::Heston(_) => ModelTag::Heston,
            ModelParams::HullWhite(_) => ModelTag::HullWhite,
            ModelParams::SchobelZhu(_) => ModelTag::SchobelZhu,
        }
    }

    pub fn rho(&self) -> f64 {
        match self {
            ModelParams::Heston(p) => p.rho,
            ModelParams::HullWhite(p) => p.rho,
            ModelParams::SchobelZhu(p) => p.rho,
        }
    }

    /// Copy with the correlation replaced.
    pub fn with_rho(&self, rho: f64) -> Self {
        let mut out = *self;
        match &mut out {
            ModelParams::Heston(p) => p.rho = rho,
            ModelParams::HullWhite(p) => p.rho = rho,
            ModelParams::SchobelZhu(p) => p.rho = rho,
        }
        out
    }

    /// Volatility of the variance (or volatility) driver: `gamma` or `sigma`.
    pub fn vol_of_vol(&self) -> f64 {
        match self {
            ModelParams::Heston(p) => p.gamma,
            ModelParams::HullWhite(p) => p.sigma,
            ModelParams::SchobelZhu(p) => p.gamma,
        }
    }

    pub fn with_vol_of_vol(&self, value: f64) -> Self {
        let mut out = *self;
        match &mut out {
            ModelParams::Heston(p) => p.gamma = value,
            ModelParams::HullWhite(p) => p.sigma = value,
            ModelParams::SchobelZhu(p) => p.gamma = value,
        }
        out
    }
}

impl From<HestonParams> for ModelParams {
    fn from(p: HestonParams) -> Self {
        ModelParams::Heston(p)
    }
}

impl From<HullWhiteParams> for ModelParams {
    fn from(p: HullWhiteParams) -> Self {
        ModelParams::HullWhite(p)
    }
}

impl From<SchobelZhuParams> for ModelParams {
    fn from(p: SchobelZhuParams) -> Self {
        ModelParams::SchobelZhu(p)
    }
}

/// Equidistant sampling grid `t_i = i T / n` with a constant short rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapSpec {
    pub maturity: f64,
    pub periods: u32,
    pub rate: f64,
}

impl SwapSpec {
    pub fn new(maturity: f64, periods: u32, rate: f64) -> Result<Self> {
        let spec = SwapSpec { maturity, periods, rate };
        let problems = spec.violations();
        if problems.is_empty() {
            Ok(spec)
        } else {
            Err(PricingError::InvalidParameters(problems))
        }
    }

    pub fn delta(&self) -> f64 {
        self.maturity / self.periods as f64
    }

    pub fn n(&self) -> f64 {
        self.periods as f64
    }

    pub fn time(&self, i: u32) -> f64 {
        self.maturity * i as f64 / self.periods as f64
    }

    pub fn with_rate(&self, rate: f64) -> Self {
        SwapSpec { rate, ..*self }
    }

    pub fn with_periods(&self, periods: u32) -> Self {
        SwapSpec { periods, ..*self }
    }

    pub fn with_maturity(&self, maturity: f64) -> Self {
        SwapSpec { maturity, ..*self }
    }

    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.maturity.is_finite() && self.maturity > 0.0) {
            out.push(format!("maturity T = {} must be finite and > 0", self.maturity));
        }
        if self.periods == 0 {
            out.push("periods n must be >= 1".to_string());
        }
        if !self.rate.is_finite() {
            out.push(format!("rate r = {} must be finite", self.rate));
        } else if self.rate < 0.0 {
            out.push(format!("rate r = {} must be >= 0", self.rate));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payoff {
    /// Sum of squared log returns over the grid.
    DiscreteLog,
    /// Quadratic variation of the log price.
    Continuous,
    /// Sum of squared simple returns over the grid.
    DiscreteSimple,
}

/// An annualized fair strike in variance units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrikeQuote {
    pub value: f64,
    pub payoff: Payoff,
    pub method: Method,
    pub model: ModelTag,
    pub spec: SwapSpec,
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<ValidationReport> {
        if self.is_ok() {
            Ok(self)
        } else {
            Err(PricingError::InvalidParameters(self.violations))
        }
    }
}

fn check_finite(out: &mut Vec<String>, name: &str, x: f64) -> bool {
    if x.is_finite() {
        true
    } else {
        out.push(format!("{name} = {x} is not finite"));
        false
    }
}

fn check_rho(out: &mut Vec<String>, rho: f64) {
    if check_finite(out, "rho", rho) && !(-1.0..=1.0).contains(&rho) {
        out.push("rho out of [-1,1]".to_string());
    }
}

fn check_nonneg(out: &mut Vec<String>, name: &str, x: f64) {
    if check_finite(out, name, x) && x < 0.0 {
        out.push(format!("{name} = {x} must be >= 0"));
    }
}

fn check_positive(out: &mut Vec<String>, name: &str, x: f64) {
    if check_finite(out, name, x) && x <= 0.0 {
        out.push(format!("{name} = {x} must be > 0"));
    }
}

/// Checks parameter bounds and the sampling grid. Never fails: problems are
/// listed in the report.
pub fn validate(params: &ModelParams, spec: &SwapSpec) -> ValidationReport {
    let mut report = ValidationReport { violations: spec.violations(), warnings: Vec::new() };
    let v = &mut report.violations;
    match params {
        ModelParams::Heston(p) => {
            check_positive(v, "kappa", p.kappa);
            check_nonneg(v, "theta", p.theta);
            check_nonneg(v, "gamma", p.gamma);
            check_rho(v, p.rho);
            check_nonneg(v, "v0", p.v0);
            if p.v0 == 0.0 {
                report.warnings.push("v0 = 0: variance starts at zero".to_string());
            }
            if p.gamma > 0.0 && p.kappa.is_finite() && p.theta.is_finite() {
                let alpha = heston_alpha(p);
                if alpha < 0.0 {
                    report.warnings.push(format!(
                        "alpha = 2 kappa theta / gamma^2 - 1 = {alpha:.6} < 0: simple-return pricer unavailable"
                    ));
                }
            }
        }
        ModelParams::HullWhite(p) => {
            check_finite(v, "mu", p.mu);
            check_nonneg(v, "sigma", p.sigma);
            check_rho(v, p.rho);
            check_positive(v, "v0", p.v0);
            if p.mu.is_finite() && p.sigma.is_finite() && p.mu <= -0.5 * p.sigma * p.sigma {
                report.warnings.push(format!("mu = {} <= -sigma^2/2: outside the tested region", p.mu));
            }
        }
        ModelParams::SchobelZhu(p) => {
            check_positive(v, "kappa", p.kappa);
            check_nonneg(v, "theta", p.theta);
            check_nonneg(v, "gamma", p.gamma);
            check_rho(v, p.rho);
            check_nonneg(v, "v0", p.v0);
        }
    }
    report
}

/// `2 kappa theta / gamma^2 - 1`; infinite when `gamma = 0`.
pub fn heston_alpha(p: &HestonParams) -> f64 {
    2.0 * p.kappa * p.theta / (p.gamma * p.gamma) - 1.0
}

/// Flat JSON parameter file. Swap fields are optional so that a file can
/// describe only the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFile {
    pub model: ModelTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub maturity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
}

impl ParamFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| PricingError::InvalidParameters(vec![e.to_string()]))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }

    pub fn from_parts(params: &ModelParams, spec: Option<&SwapSpec>) -> Self {
        let mut file = ParamFile {
            model: params.tag(),
            kappa: None,
            theta: None,
            gamma: None,
            rho: Some(params.rho()),
            v0: None,
            mu: None,
            sigma: None,
            maturity: spec.map(|s| s.maturity),
            n: spec.map(|s| s.periods),
            r: spec.map(|s| s.rate),
        };
        match params {
            ModelParams::Heston(p) => {
                file.kappa = Some(p.kappa);
                file.theta = Some(p.theta);
                file.gamma = Some(p.gamma);
                file.v0 = Some(p.v0);
            }
            ModelParams::HullWhite(p) => {
                file.mu = Some(p.mu);
                file.sigma = Some(p.sigma);
                file.v0 = Some(p.v0);
            }
            ModelParams::SchobelZhu(p) => {
                file.kappa = Some(p.kappa);
                file.theta = Some(p.theta);
                file.gamma = Some(p.gamma);
                file.v0 = Some(p.v0);
            }
        }
        file
    }

    /// Builds the model, rejecting missing keys and keys the model does not use.
    pub fn model_params(&self) -> Result<ModelParams> {
        let mut missing = Vec::new();
        let mut need = |name: &str, x: Option<f64>| -> f64 {
            x.unwrap_or_else(|| {
                missing.push(format!("missing key `{name}` for model {}", self.model));
                f64::NAN
            })
        };
        let params = match self.model {
            ModelTag::Heston => ModelParams::Heston(HestonParams {
                kappa: need("kappa", self.kappa),
                theta: need("theta", self.theta),
                gamma: need("gamma", self.gamma),
                rho: need("rho", self.rho),
                v0: need("v0", self.v0),
            }),
            ModelTag::HullWhite => ModelParams::HullWhite(HullWhiteParams {
                mu: need("mu", self.mu),
                sigma: need("sigma", self.sigma),
                rho: need("rho", self.rho),
                v0: need("v0", self.v0),
            }),
            ModelTag::SchobelZhu => ModelParams::SchobelZhu(SchobelZhuParams {
                kappa: need("kappa", self.kappa),
                theta: need("theta", self.theta),
                gamma: need("gamma", self.gamma),
                rho: need("rho", self.rho),
                v0: need("v0", self.v0),
            }),
        };
        let unused: &[(&str, Option<f64>)] = match self.model {
            ModelTag::Heston | ModelTag::SchobelZhu => &[("mu", self.mu), ("sigma", self.sigma)],
            ModelTag::HullWhite => &[("kappa", self.kappa), ("theta", self.theta), ("gamma", self.gamma)],
        };
        for (name, value) in unused {
            if value.is_some() {
                missing.push(format!("key `{name}` is not used by model {}", self.model));
            }
        }
        if missing.is_empty() {
            Ok(params)
        } else {
            Err(PricingError::InvalidParameters(missing))
        }
    }

    /// Swap grid from the file, with command-line style overrides applied.
    pub fn swap_spec(&self, maturity: Option<f64>, periods: Option<u32>, rate: Option<f64>) -> Result<SwapSpec> {
        let maturity = maturity
            .or(self.maturity)
            .ok_or_else(|| PricingError::InvalidParameters(vec!["maturity `T` not given".to_string()]))?;
        let periods = periods
            .or(self.n)
            .ok_or_else(|| PricingError::InvalidParameters(vec!["periods `n` not given".to_string()]))?;
        let rate = rate.or(self.r).unwrap_or(0.0);
        SwapSpec::new(maturity, periods, rate)
    }
}
