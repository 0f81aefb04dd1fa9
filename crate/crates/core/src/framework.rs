//! Model-agnostic discrete strike from moment kernels.
//!
//! For a model `dS/S = r dt + m(V) dW`, `dV = mu(V) dt + sigma(V) dB` with
//! `d<W, B> = rho dt`, pick `f` with `f' = m / sigma` and set
//! `h = mu f' + sigma^2 f'' / 2`. With `D = t_{i+1} - t_i` each interval
//! contributes
//!
//! ```text
//! E[(ln S_{i+1}/S_i)^2] = r^2 D^2 + (1 - rho^2 - r D) int m1
//!     - rho int m5(t_i, s) ds + 1/4 iint m2 + rho^2 E[(f(V_{i+1}) - f(V_i))^2]
//!     + rho^2 iint m3 + rho iint m4
//! ```
//!
//! where `m1(s) = E[m^2(V_s)]`, `m2(s,u) = E[m^2(V_s) m^2(V_u)]`,
//! `m3(s,u) = E[h(V_s) h(V_u)]`, `m4(s,u) = E[h(V_s) m^2(V_u)]` and
//! `m5(t,s) = E[(f(V_{t+D}) - f(V_t)) (2 rho h(V_s) + m^2(V_s))]`.
//! Double integrals run over the square `[t_i, t_{i+1}]^2`.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{PricingError, Result};
use crate::params::SwapSpec;
use crate::quadrature::GaussLegendre;

/// Gauss-Legendre orders tried per interval, in sequence.
pub const ORDERS: [usize; 4] = [8, 16, 32, 64];

/// Moment functionals supplied by a model. Implementations must be safe to
/// call from several threads and must return raw (uncentred) moments.
pub trait MomentKernels: Sync {
    fn rho(&self) -> f64;
    fn m1(&self, s: f64) -> f64;
    fn m2(&self, s: f64, u: f64) -> f64;
    fn m3(&self, s: f64, u: f64) -> f64;
    /// No symmetry is assumed.
    fn m4(&self, s: f64, u: f64) -> f64;
    /// `s` ranges over `[t, t + delta]`.
    fn m5(&self, t: f64, delta: f64, s: f64) -> f64;
    /// `E[(f(V_{t+delta}) - f(V_t))^2]`.
    fn f_increment_sq(&self, t: f64, delta: f64) -> f64;
}

/// Constant variance `theta`. Correlation has no effect, so `rho()` is 0.
#[derive(Debug, Clone, Copy)]
pub struct ConstantVarianceKernels {
    pub theta: f64,
}

impl MomentKernels for ConstantVarianceKernels {
    fn rho(&self) -> f64 {
        0.0
    }
    fn m1(&self, _: f64) -> f64 {
        self.theta
    }
    fn m2(&self, _: f64, _: f64) -> f64 {
        self.theta * self.theta
    }
    fn m3(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn m4(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn m5(&self, _: f64, _: f64, _: f64) -> f64 {
        0.0
    }
    fn f_increment_sq(&self, _: f64, _: f64) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureStrike {
    pub value: f64,
    /// Sum over intervals of the change between the last two orders, annualized.
    pub error_estimate: f64,
    /// Highest order used on any interval.
    pub order: usize,
}

fn rules() -> &'static [GaussLegendre; 4] {
    static RULES: OnceLock<[GaussLegendre; 4]> = OnceLock::new();
    RULES.get_or_init(|| ORDERS.map(GaussLegendre::new))
}

fn finite(x: f64, what: &'static str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(PricingError::KernelFailure(what))
    }
}

/// `E[(ln S_{t+delta}/S_t)^2]` with one fixed rule.
fn interval_moment<K: MomentKernels + ?Sized>(
    k: &K,
    rule: &GaussLegendre,
    t: f64,
    delta: f64,
    rate: f64,
) -> Result<f64> {
    let rho = k.rho();
    let end = t + delta;
    let single = finite(rule.integrate(t, end, |s| k.m1(s)), "m1")?;
    let mut value = rate * rate * delta * delta + (1.0 - rho * rho - rate * delta) * single;
    if rho == 0.0 {
        value += 0.25 * finite(rule.integrate_square(t, end, |s, u| k.m2(s, u)), "m2")?;
        return Ok(value);
    }
    let lever = finite(rule.integrate(t, end, |s| k.m5(t, delta, s)), "m5")?;
    let double = finite(
        rule.integrate_square(t, end, |s, u| 0.25 * k.m2(s, u) + rho * rho * k.m3(s, u) + rho * k.m4(s, u)),
        "m2/m3/m4",
    )?;
    let increment = finite(k.f_increment_sq(t, delta), "f increment")?;
    value += -rho * lever + double + rho * rho * increment;
    Ok(value)
}

/// Strike with a single fixed Gauss-Legendre order on every interval.
pub fn discrete_strike_at_order<K: MomentKernels + ?Sized>(k: &K, spec: &SwapSpec, order: usize) -> Result<f64> {
    let rule = GaussLegendre::new(order);
    let delta = spec.delta();
    let parts = (0..spec.periods)
        .into_par_iter()
        .map(|i| interval_moment(k, &rule, spec.time(i), delta, spec.rate))
        .collect::<Result<Vec<f64>>>()?;
    Ok(parts.iter().sum::<f64>() / spec.maturity)
}

/// Discrete strike by nested Gauss-Legendre refinement on each interval.
/// An interval is accepted once two consecutive orders agree to `tol`
/// relative.
pub fn generic_discrete_strike<K: MomentKernels + ?Sized>(
    k: &K,
    spec: &SwapSpec,
    tol: f64,
) -> Result<QuadratureStrike> {
    let delta = spec.delta();
    let rules = rules();
    let parts = (0..spec.periods)
        .into_par_iter()
        .map(|i| {
            let t = spec.time(i);
            let mut prev = interval_moment(k, &rules[0], t, delta, spec.rate)?;
            for (idx, rule) in rules.iter().enumerate().skip(1) {
                let cur = interval_moment(k, rule, t, delta, spec.rate)?;
                let err = (cur - prev).abs();
                if err <= tol * cur.abs() {
                    return Ok((cur, err, ORDERS[idx]));
                }
                prev = cur;
            }
            Err(PricingError::NoConvergence { order: ORDERS[ORDERS.len() - 1], estimate: prev })
        })
        .collect::<Result<Vec<(f64, f64, usize)>>>()?;
    let t = spec.maturity;
    Ok(QuadratureStrike {
        value: parts.iter().map(|p| p.0).sum::<f64>() / t,
        error_estimate: parts.iter().map(|p| p.1).sum::<f64>() / t,
        order: parts.iter().map(|p| p.2).max().unwrap_or(ORDERS[0]),
    })
}

/// Dependence of the discrete strike on the short rate:
/// `K_d(r) = b(n) - (T/n) K_c r + (T/n) r^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateStructure {
    /// Rate-free part `K_d(0)`.
    pub b_of_n: f64,
    pub continuous: f64,
    /// Minimizing rate `K_c / 2`.
    pub critical_rate: f64,
    pub maturity: f64,
    pub periods: u32,
}

impl RateStructure {
    fn step(&self) -> f64 {
        self.maturity / self.periods as f64
    }

    pub fn strike_at(&self, rate: f64) -> f64 {
        self.b_of_n + self.step() * rate * (rate - self.continuous)
    }

    /// `dK_d/dr`.
    pub fn sensitivity(&self, rate: f64) -> f64 {
        self.step() * (2.0 * rate - self.continuous)
    }
}

/// Rate probes used to confirm the quadratic structure.
pub const RATE_PROBES: [f64; 2] = [0.02, 0.07];

/// Extracts the rate structure of a pricer and checks it at two probe rates.
pub fn rate_structure<F>(price_at: F, spec: &SwapSpec, continuous: f64) -> Result<RateStructure>
where
    F: Fn(f64) -> Result<f64>,
{
    let out = RateStructure {
        b_of_n: price_at(0.0)?,
        continuous,
        critical_rate: 0.5 * continuous,
        maturity: spec.maturity,
        periods: spec.periods,
    };
    for r in RATE_PROBES {
        let priced = price_at(r)?;
        let mismatch = (priced - out.strike_at(r)).abs() / priced.abs();
        if !(mismatch <= 1e-10) {
            return Err(PricingError::StructureViolation(mismatch));
        }
    }
    Ok(out)
}

/// Signed discretization gap `K_d - K_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    pub discrete: f64,
    pub continuous: f64,
    pub gap: f64,
    /// Set when the discrete strike sits below the continuous one.
    pub negative: bool,
}

impl GapReport {
    pub fn new(discrete: f64, continuous: f64) -> Self {
        let gap = discrete - continuous;
        GapReport { discrete, continuous, gap, negative: gap < 0.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_variance_is_exact() {
        let k = ConstantVarianceKernels { theta: 0.04 };
        for n in [1, 3, 12] {
            let spec = SwapSpec::new(2.0, n, 0.05).unwrap();
            let q = generic_discrete_strike(&k, &spec, 1e-12).unwrap();
            let expected = 0.04 + 2.0 * (0.1f64 - 0.04).powi(2) / (4.0 * n as f64);
            assert_relative_eq!(q.value, expected, max_relative = 1e-13);
            assert_eq!(q.order, 16);
        }
    }

    struct Broken;

    impl MomentKernels for Broken {
        fn rho(&self) -> f64 {
            0.3
        }
        fn m1(&self, _: f64) -> f64 {
            0.1
        }
        fn m2(&self, _: f64, _: f64) -> f64 {
            0.01
        }
        fn m3(&self, _: f64, _: f64) -> f64 {
            f64::NAN
        }
        fn m4(&self, _: f64, _: f64) -> f64 {
            0.0
        }
        fn m5(&self, _: f64, _: f64, _: f64) -> f64 {
            0.0
        }
        fn f_increment_sq(&self, _: f64, _: f64) -> f64 {
            0.0
        }
    }

    #[test]
    fn kernel_failure_propagates() {
        let spec = SwapSpec::new(1.0, 2, 0.0).unwrap();
        assert!(matches!(generic_discrete_strike(&Broken, &spec, 1e-10), Err(PricingError::KernelFailure(_))));
    }

    struct Wiggly;

    impl MomentKernels for Wiggly {
        fn rho(&self) -> f64 {
            0.0
        }
        fn m1(&self, s: f64) -> f64 {
            1.0 + (400.0 * s).sin()
        }
        fn m2(&self, _: f64, _: f64) -> f64 {
            0.0
        }
        fn m3(&self, _: f64, _: f64) -> f64 {
            0.0
        }
        fn m4(&self, _: f64, _: f64) -> f64 {
            0.0
        }
        fn m5(&self, _: f64, _: f64, _: f64) -> f64 {
            0.0
        }
        fn f_increment_sq(&self, _: f64, _: f64) -> f64 {
            0.0
        }
    }

    #[test]
    fn unresolved_kernel_reports_no_convergence() {
        let spec = SwapSpec::new(1.0, 1, 0.0).unwrap();
        assert!(matches!(
            generic_discrete_strike(&Wiggly, &spec, 1e-12),
            Err(PricingError::NoConvergence { order: 64, .. })
        ));
    }

    #[test]
    fn rate_structure_degenerate() {
        let spec = SwapSpec::new(1.0, 4, 0.0).unwrap();
        let rs = rate_structure(|r| Ok(0.25 * r * r), &spec, 0.0).unwrap();
        assert_eq!(rs.critical_rate, 0.0);
        assert_relative_eq!(rs.sensitivity(0.1), 2.0 * 0.1 / 4.0, max_relative = 1e-15);
    }

    #[test]
    fn rate_structure_detects_violation() {
        let spec = SwapSpec::new(1.0, 4, 0.0).unwrap();
        let err = rate_structure(|r| Ok(0.04 + r), &spec, 0.04).unwrap_err();
        assert!(matches!(err, PricingError::StructureViolation(_)));
    }

    #[test]
    fn gap_flag() {
        assert!(GapReport::new(0.01, 0.02).negative);
        assert!(!GapReport::new(0.02, 0.02).negative);
    }
}
