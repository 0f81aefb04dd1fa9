//! Monte Carlo estimates of the discrete and continuous strikes.
//!
//! Variance states are advanced with exact transitions: noncentral
//! chi-square for CIR, lognormal for Hull-White and Gaussian for the OU
//! volatility. Integrals over each substep are replaced by their conditional
//! mean given both endpoints plus a Gaussian fluctuation. The conditional
//! mean and covariance are exact for CIR and OU, so the sampled squared
//! returns are unbiased there; the lognormal fluctuation uses a
//! local-volatility approximation.
//! The log increment over a sampling interval is
//! `r D - I/2 + rho (f(V_end) - f(V_start) - int h) + sqrt(1 - rho^2) sqrt(I) Z`.
//!
//! Paths are grouped in blocks; block `b` draws from two ChaCha8 streams
//! (`2b` for Gaussians, `2b + 1` for everything else) seeded by the
//! configured seed. Block results are merged in index order, so estimates do
//! not depend on the number of threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::numerics::{bessel_ratio, half_tanh_ratio, phi1};
use crate::params::{HestonParams, HullWhiteParams, ModelParams, SchobelZhuParams, SwapSpec};
use crate::quadrature::GaussLegendre;

pub const MIN_PATHS: u64 = 10_000;
pub const DEFAULT_BUDGET: u128 = 10_000_000_000;
const BLOCK: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub paths: u64,
    /// Substeps per sampling interval for [`mc_discrete_strike`], total
    /// steps over `[0, T]` for [`mc_continuous_strike`].
    pub substeps: u32,
    pub seed: u64,
    pub antithetic: bool,
    /// Upper bound on `paths * substeps * n`.
    pub budget: u128,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { paths: 1_000_000, substeps: 8, seed: 20_240_601, antithetic: false, budget: DEFAULT_BUDGET }
    }
}

impl McConfig {
    pub fn new(paths: u64, substeps: u32, seed: u64) -> Self {
        McConfig { paths, substeps, seed, ..McConfig::default() }
    }

    pub fn with_antithetic(self, antithetic: bool) -> Self {
        McConfig { antithetic, ..self }
    }

    fn check(&self, steps_per_path: u64) -> Result<()> {
        let mut problems = Vec::new();
        if self.paths < MIN_PATHS {
            problems.push(format!("paths = {} < {MIN_PATHS}", self.paths));
        }
        if self.substeps == 0 {
            problems.push("substeps = 0".to_string());
        }
        if !problems.is_empty() {
            return Err(PricingError::InvalidParameters(problems));
        }
        let requested = self.paths as u128 * steps_per_path as u128;
        if requested > self.budget {
            return Err(PricingError::BudgetExceeded { requested, budget: self.budget });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub config: McConfig,
}

impl McEstimate {
    /// `|x - mean| / std_error`.
    pub fn z_score(&self, x: f64) -> f64 {
        (x - self.mean).abs() / self.std_error
    }
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if o.count == 0.0 {
            return self;
        }
        let count = self.count + o.count;
        let d = o.mean - self.mean;
        Moments {
            count,
            mean: self.mean + d * o.count / count,
            m2: self.m2 + o.m2 + d * d * self.count * o.count / count,
        }
    }

    fn std_error(&self) -> f64 {
        (self.m2 / (self.count - 1.0) / self.count).sqrt()
    }
}

/// Gaussian draws, optionally negated for the antithetic partner.
struct Normals<'a> {
    rng: &'a mut ChaCha8Rng,
    sign: f64,
}

impl Normals<'_> {
    #[inline]
    fn next(&mut self) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        self.sign * z
    }
}

/// One substep of the variance process.
#[derive(Debug, Clone, Copy)]
struct Substep {
    v: f64,
    /// `int m^2(V) ds`
    var_int: f64,
    /// `f(V_end) - f(V_start) - int h(V) ds`; zero without vol-of-vol.
    lever: f64,
}

trait Process: Sync {
    type Table: Sync;
    fn table(&self, h: f64) -> Self::Table;
    fn start(&self) -> f64;
    fn stochastic_vol(&self) -> bool;
    fn rho(&self) -> f64;
    fn advance(&self, t: &Self::Table, v: f64, z: &mut Normals, aux: &mut ChaCha8Rng) -> Substep;
    /// Exact transition only, for moment sampling.
    fn transition(&self, t: &Self::Table, v: f64, z: &mut Normals, aux: &mut ChaCha8Rng) -> f64;
}

/// `(1 - 2 tanh(y/2) / y) / y^2`; the conditional variance of an integrated
/// OU bridge over `[0, h]` is `s^2 h^3` times this at `y = kappa h`.
fn bridge_factor(y: f64) -> f64 {
    if y.abs() < 1e-2 {
        let y2 = y * y;
        1.0 / 12.0 - y2 / 120.0 + 17.0 * y2 * y2 / 20160.0
    } else {
        (1.0 - 2.0 * half_tanh_ratio(y)) / (y * y)
    }
}

struct HestonProcess(HestonParams);

// Taylor coefficients in y^2 of the scaled bridge moments below.
const MEAN_ENDS: [f64; 7] =
    [1.0 / 3.0, -1.0 / 90.0, 1.0 / 2520.0, -1.0 / 75600.0, 1.0 / 2395008.0, -691.0 / 54486432000.0, 1.0 / 2668723200.0];
const VAR_ENDS: [f64; 7] = [
    1.0 / 45.0,
    -1.0 / 630.0,
    1.0 / 12600.0,
    -1.0 / 299376.0,
    691.0 / 5448643200.0,
    -1.0 / 222393600.0,
    3617.0 / 23818354560000.0,
];
const MEAN_UNIT: [f64; 7] = [
    1.0 / 24.0,
    -1.0 / 1440.0,
    1.0 / 60480.0,
    -1.0 / 2419200.0,
    1.0 / 95800320.0,
    -691.0 / 2615348736000.0,
    1.0 / 149448499200.0,
];
const VAR_UNIT: [f64; 7] = [
    1.0 / 720.0,
    -1.0 / 15120.0,
    1.0 / 403200.0,
    -1.0 / 11975040.0,
    691.0 / 261534873600.0,
    -1.0 / 12454041600.0,
    3617.0 / 1524374691840000.0,
];

/// Conditional moments of `int_0^h V` given both endpoints of a CIR path,
/// from the decomposition of the bridge into a part linear in `a + b`, a
/// part scaling with the dimension `d`, and a Bessel-mixed sum.
#[derive(Debug, Clone, Copy)]
struct CirBridge {
    nu: f64,
    dim: f64,
    z_scale: f64,
    mean_ends: f64,
    var_ends: f64,
    mean_unit: f64,
    var_unit: f64,
}

impl CirBridge {
    fn new(p: &HestonParams, h: f64) -> Self {
        let y = p.kappa * h;
        let g2 = p.gamma * p.gamma;
        let (f1, g1, f2, g2y) = if y < 0.5 {
            let y2 = y * y;
            let poly = |c: &[f64]| c.iter().rev().fold(0.0, |acc, &k| acc * y2 + k);
            (poly(&MEAN_ENDS), poly(&VAR_ENDS), poly(&MEAN_UNIT), poly(&VAR_UNIT))
        } else {
            let coth = 1.0 / (0.5 * y).tanh();
            let csch2 = 1.0 / (0.5 * y).sinh().powi(2);
            (
                coth / y - 0.5 * csch2,
                coth / y.powi(3) + csch2 / (2.0 * y * y) - coth * csch2 / (2.0 * y),
                (y * coth - 2.0) / (4.0 * y * y),
                (2.0 * y * coth + y * y * csch2 - 8.0) / (8.0 * y.powi(4)),
            )
        };
        let dim = 4.0 * p.kappa * p.theta / g2;
        CirBridge {
            nu: 0.5 * dim - 1.0,
            dim,
            z_scale: 2.0 * p.kappa / (g2 * (0.5 * y).sinh()),
            mean_ends: h * f1,
            var_ends: g2 * h.powi(3) * g1,
            mean_unit: g2 * h * h * f2,
            var_unit: g2 * g2 * h.powi(4) * g2y,
        }
    }

    /// Mean and variance of the integral given `V_0 = a`, `V_h = b`.
    fn moments(&self, a: f64, b: f64) -> (f64, f64) {
        let z = self.z_scale * (a * b).sqrt();
        let (count, count_var) = if z > 0.0 {
            let m = 0.5 * z * bessel_ratio(self.nu, z);
            (m, (0.25 * z * z - self.nu * m - m * m).max(0.0))
        } else {
            (0.0, 0.0)
        };
        let sum_mean = 4.0 * self.mean_unit;
        let mean = (a + b) * self.mean_ends + (self.dim + 4.0 * count) * self.mean_unit;
        let var = (a + b) * self.var_ends + (self.dim + 4.0 * count) * self.var_unit + count_var * sum_mean * sum_mean;
        (mean, var)
    }
}

struct HestonTable {
    h: f64,
    decay: f64,
    c: f64,
    df: f64,
    chi: Option<Gamma<f64>>,
    mean_slope: f64,
    bridge: Option<CirBridge>,
}

impl Process for HestonProcess {
    type Table = HestonTable;

    fn table(&self, h: f64) -> HestonTable {
        let p = &self.0;
        let y = p.kappa * h;
        let g2 = p.gamma * p.gamma;
        let (c, df) = if p.gamma > 0.0 {
            (2.0 * p.kappa / (g2 * -(-y).exp_m1()), 4.0 * p.kappa * p.theta / g2)
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        let chi = (p.gamma > 0.0 && df > 1.0).then(|| Gamma::new(0.5 * (df - 1.0), 2.0).expect("positive shape"));
        HestonTable {
            h,
            decay: (-y).exp(),
            c,
            df,
            chi,
            mean_slope: h * half_tanh_ratio(y),
            bridge: (p.gamma > 0.0).then(|| CirBridge::new(p, h)),
        }
    }

    fn start(&self) -> f64 {
        self.0.v0
    }

    fn stochastic_vol(&self) -> bool {
        self.0.gamma > 0.0
    }

    fn rho(&self) -> f64 {
        self.0.rho
    }

    fn transition(&self, t: &HestonTable, v: f64, z: &mut Normals, aux: &mut ChaCha8Rng) -> f64 {
        let p = &self.0;
        if p.gamma == 0.0 {
            return p.theta + (v - p.theta) * t.decay;
        }
        let lambda = 2.0 * t.c * v * t.decay;
        let x = match &t.chi {
            Some(chi) => {
                let shifted = z.next() + lambda.sqrt();
                shifted * shifted + chi.sample(aux)
            }
            None => {
                let k =
                    if lambda > 0.0 { Poisson::new(0.5 * lambda).expect("finite intensity").sample(aux) } else { 0.0 };
                let shape = 0.5 * t.df + k;
                if shape > 0.0 {
                    Gamma::new(shape, 2.0).expect("positive shape").sample(aux)
                } else {
                    0.0
                }
            }
        };
        x / (2.0 * t.c)
    }

    fn advance(&self, t: &HestonTable, v: f64, z: &mut Normals, aux: &mut ChaCha8Rng) -> Substep {
        let p = &self.0;
        let end = self.transition(t, v, z, aux);
        let Some(bridge) = &t.bridge else {
            return Substep { v: end, var_int: p.theta * t.h + (v + end - 2.0 * p.theta) * t.mean_slope, lever: 0.0 };
        };
        let (mean, var) = bridge.moments(v, end);
        let var_int = mean + var.sqrt() * z.next();
        Substep { v: end, var_int, lever: (end - v - p.kappa * p.theta * t.h + p.kappa * var_int) / p.gamma }
    }
}

struct HullWhiteProcess {
    p: HullWhiteParams,
    q: f64,
    /// Lower half of the 4-point Gauss-Legendre rule on `[0, 1]`; the rule
    /// is symmetric, so `1 - x` carries the same weight.
    half_rule: [(f64, f64); 2],
}

impl HullWhiteProcess {
    fn new(p: HullWhiteParams) -> Self {
        let rule: Vec<(f64, f64)> = GaussLegendre::new(4).mapped(0.0, 1.0).collect();
        HullWhiteProcess {
            p,
            q: if p.sigma > 0.0 { p.mu / p.sigma - p.sigma / 4.0 } else { 0.0 },
            half_rule: [rule[0], rule[1]],
        }
    }
}

struct HullWhiteTable {
    h: f64,
    drift: f64,
    vol: f64,
    growth: f64,
    /// `(node, weight * h, e^{bump} for V, e^{bump} for sqrt V)`; the bridge
    /// bump is symmetric in `x <-> 1 - x`.
    nodes: [(f64, f64, f64, f64); 2],
    bridge_sd: f64,
}

impl Process for HullWhiteProcess {
    type Table = HullWhiteTable;

    fn table(&self, h: f64) -> HullWhiteTable {
        let s2 = self.p.sigma * self.p.sigma;
        HullWhiteTable {
            h,
            drift: (self.p.mu - 0.5 * s2) * h,
            vol: self.p.sigma * h.sqrt(),
            growth: h * phi1(self.p.mu * h),
            nodes: self.half_rule.map(|(x, w)| {
                let b = s2 * h * x * (1.0 - x);
                (x, w * h, (0.5 * b).exp(), (0.125 * b).exp())
            }),
            bridge_sd: self.p.sigma * (h.powi(3) / 12.0).sqrt(),
        }
    }

    fn start(&self) -> f64 {
        self.p.v0
    }

    fn stochastic_vol(&self) -> bool {
        self.p.sigma > 0.0
    }

    fn rho(&self) -> f64 {
        self.p.rho
    }

    fn transition(&self, t: &HullWhiteTable, v: f64, z: &mut Normals, _: &mut ChaCha8Rng) -> f64 {
        if self.p.sigma == 0.0 {
            return v * (self.p.mu * t.h).exp();
        }
        v * (t.drift + t.vol * z.next()).exp()
    }

    fn advance(&self, t: &HullWhiteTable, v: f64, z: &mut Normals, _: &mut ChaCha8Rng) -> Substep {
        if self.p.sigma == 0.0 {
            return Substep { v: v * (self.p.mu * t.h).exp(), var_int: v * t.growth, lever: 0.0 };
        }
        let log_ratio = t.drift + t.vol * z.next();
        let ratio = log_ratio.exp();
        let root_ratio = ratio.sqrt();
        let end = v * ratio;
        let (mut mean_v, mut mean_s) = (0.0, 0.0);
        for &(x, w, bump, bump_s) in &t.nodes {
            let e = (x * log_ratio).exp();
            let r = e.sqrt();
            mean_v += w * bump * (e + ratio / e);
            mean_s += w * bump_s * (r + root_ratio / r);
        }
        let root_v = v.sqrt();
        let mid = v * root_ratio;
        let g = t.bridge_sd * z.next();
        let var_int = v * mean_v + mid * g;
        let sqrt_int = root_v * mean_s + 0.5 * mid.sqrt() * g;
        Substep { v: end, var_int, lever: 2.0 * root_v * (root_ratio - 1.0) / self.p.sigma - self.q * sqrt_int }
    }
}

struct SchobelZhuProcess(SchobelZhuParams);

struct SchobelZhuTable {
    h: f64,
    decay: f64,
    sd: f64,
    /// `int alpha`, `int alpha^2`, `int alpha beta` and `int c` of the OU
    /// bridge `m(u) = theta + (a - theta) alpha(u) + (b - theta) beta(u)`
    /// with conditional covariance `C(s, u)` and variance `c(u)`.
    lin: f64,
    sq: f64,
    mixed: f64,
    cond_var: f64,
    /// `iint C`, `iint alpha(s) C`, `iint alpha(s) alpha(u) C`,
    /// `iint alpha(s) beta(u) C` and `iint C^2`.
    cov: f64,
    cov_a: f64,
    cov_aa: f64,
    cov_ab: f64,
    cov_sq: f64,
}

impl Process for SchobelZhuProcess {
    type Table = SchobelZhuTable;

    fn table(&self, h: f64) -> SchobelZhuTable {
        let p = &self.0;
        let k = p.kappa;
        let y = k * h;
        let sh = y.sinh();
        let alpha = |u: f64| (k * (h - u)).sinh() / sh;
        let beta = |u: f64| (k * u).sinh() / sh;
        let g2 = p.gamma * p.gamma;
        let c = |s: f64, u: f64| {
            let (lo, hi) = if s <= u { (s, u) } else { (u, s) };
            g2 / k * (k * lo).sinh() * (k * (h - hi)).sinh() / sh
        };
        let rule = GaussLegendre::new(16);
        SchobelZhuTable {
            h,
            decay: (-y).exp(),
            sd: (g2 * h * phi1(-2.0 * y)).sqrt(),
            lin: h * half_tanh_ratio(y),
            sq: rule.integrate(0.0, h, |u| alpha(u) * alpha(u)),
            mixed: rule.integrate(0.0, h, |u| alpha(u) * beta(u)),
            cond_var: rule.integrate(0.0, h, |u| c(u, u)),
            cov: g2 * h.powi(3) * bridge_factor(y),
            cov_a: rule.integrate_square(0.0, h, |s, u| alpha(s) * c(s, u)),
            cov_aa: rule.integrate_square(0.0, h, |s, u| alpha(s) * alpha(u) * c(s, u)),
            cov_ab: rule.integrate_square(0.0, h, |s, u| alpha(s) * beta(u) * c(s, u)),
            cov_sq: rule.integrate_square(0.0, h, |s, u| c(s, u).powi(2)),
        }
    }

    fn start(&self) -> f64 {
        self.0.v0
    }

    fn stochastic_vol(&self) -> bool {
        self.0.gamma > 0.0
    }

    fn rho(&self) -> f64 {
        self.0.rho
    }

    fn transition(&self, t: &SchobelZhuTable, v: f64, z: &mut Normals, _: &mut ChaCha8Rng) -> f64 {
        let p = &self.0;
        let mean = p.theta + (v - p.theta) * t.decay;
        if p.gamma == 0.0 {
            mean
        } else {
            mean + t.sd * z.next()
        }
    }

    fn advance(&self, t: &SchobelZhuTable, v: f64, z: &mut Normals, aux: &mut ChaCha8Rng) -> Substep {
        let p = &self.0;
        let end = self.transition(t, v, z, aux);
        let (da, db) = (v - p.theta, end - p.theta);
        let mut int_v = p.theta * t.h + t.lin * (da + db);
        let mut int_v2 = p.theta * p.theta * t.h
            + 2.0 * p.theta * t.lin * (da + db)
            + t.sq * (da * da + db * db)
            + 2.0 * t.mixed * da * db
            + t.cond_var;
        if p.gamma == 0.0 {
            return Substep { v: end, var_int: int_v2, lever: 0.0 };
        }
        // (int B, 2 int m B + int B^2 - int c) has these exact second moments
        let cross = 2.0 * (p.theta * t.cov + (da + db) * t.cov_a);
        let mm = p.theta * p.theta * t.cov
            + 2.0 * p.theta * (da + db) * t.cov_a
            + (da * da + db * db) * t.cov_aa
            + 2.0 * da * db * t.cov_ab;
        let var2 = 4.0 * mm + 2.0 * t.cov_sq;
        let sd1 = t.cov.sqrt();
        let slope = cross / sd1;
        let (n1, n2) = (z.next(), z.next());
        int_v += sd1 * n1;
        int_v2 += slope * n1 + (var2 - slope * slope).max(0.0).sqrt() * n2;
        let k = p.kappa;
        let int_h = (k * p.theta * int_v - k * int_v2) / p.gamma + 0.5 * p.gamma * t.h;
        Substep { v: end, var_int: int_v2, lever: (end * end - v * v) / (2.0 * p.gamma) - int_h }
    }
}

fn streams(seed: u64, block: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut normal = ChaCha8Rng::seed_from_u64(seed);
    normal.set_stream(2 * block);
    let mut aux = ChaCha8Rng::seed_from_u64(seed);
    aux.set_stream(2 * block + 1);
    (normal, aux)
}

/// Runs `path` over all blocks. `path` receives the Gaussian source and the
/// auxiliary generator and returns one sample.
fn run<F>(cfg: &McConfig, path: F) -> McEstimate
where
    F: Fn(&mut Normals, &mut ChaCha8Rng) -> f64 + Sync,
{
    let units = if cfg.antithetic { cfg.paths.div_ceil(2) } else { cfg.paths };
    let blocks = units.div_ceil(BLOCK);
    let merged = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let (mut normal, mut aux) = streams(cfg.seed, b);
            let mut acc = Moments::default();
            let count = BLOCK.min(units - b * BLOCK);
            for _ in 0..count {
                if cfg.antithetic {
                    let mut mirror = normal.clone();
                    let first = path(&mut Normals { rng: &mut normal, sign: 1.0 }, &mut aux);
                    let second = path(&mut Normals { rng: &mut mirror, sign: -1.0 }, &mut aux);
                    acc.push(0.5 * (first + second));
                } else {
                    acc.push(path(&mut Normals { rng: &mut normal, sign: 1.0 }, &mut aux));
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Moments::default(), Moments::merge);
    McEstimate { mean: merged.mean, std_error: merged.std_error(), config: *cfg }
}

fn discrete<P: Process>(proc_: &P, spec: &SwapSpec, cfg: &McConfig) -> McEstimate {
    let delta = spec.delta();
    let table = proc_.table(delta / cfg.substeps as f64);
    let rho = proc_.rho();
    let leverage = proc_.stochastic_vol() && rho != 0.0;
    let ortho = (1.0 - rho * rho).sqrt();
    let drift = spec.rate * delta;
    run(cfg, |z, aux| {
        let mut v = proc_.start();
        let mut total = 0.0;
        for _ in 0..spec.periods {
            let (mut var_int, mut lever) = (0.0, 0.0);
            for _ in 0..cfg.substeps {
                let s = proc_.advance(&table, v, z, aux);
                v = s.v;
                var_int += s.var_int;
                lever += s.lever;
            }
            let w = var_int.max(0.0).sqrt() * z.next();
            let x = if leverage { drift - 0.5 * var_int + rho * lever + ortho * w } else { drift - 0.5 * var_int + w };
            total += x * x;
        }
        total / spec.maturity
    })
}

fn continuous<P: Process>(proc_: &P, maturity: f64, cfg: &McConfig) -> McEstimate {
    let table = proc_.table(maturity / cfg.substeps as f64);
    run(cfg, |z, aux| {
        let mut v = proc_.start();
        let mut var_int = 0.0;
        for _ in 0..cfg.substeps {
            let s = proc_.advance(&table, v, z, aux);
            v = s.v;
            var_int += s.var_int;
        }
        var_int / maturity
    })
}

/// `(1/T) sum E[(ln S_{i+1}/S_i)^2]` by simulation.
pub fn mc_discrete_strike(params: &ModelParams, spec: &SwapSpec, cfg: &McConfig) -> Result<McEstimate> {
    cfg.check(cfg.substeps as u64 * spec.periods as u64)?;
    Ok(match params {
        ModelParams::Heston(p) => discrete(&HestonProcess(*p), spec, cfg),
        ModelParams::HullWhite(p) => discrete(&HullWhiteProcess::new(*p), spec, cfg),
        ModelParams::SchobelZhu(p) => discrete(&SchobelZhuProcess(*p), spec, cfg),
    })
}

/// `(1/T) E[int_0^T m^2(V_s) ds]` with `cfg.substeps` steps over `[0, T]`.
pub fn mc_continuous_strike(params: &ModelParams, maturity: f64, cfg: &McConfig) -> Result<McEstimate> {
    cfg.check(cfg.substeps as u64)?;
    Ok(match params {
        ModelParams::Heston(p) => continuous(&HestonProcess(*p), maturity, cfg),
        ModelParams::HullWhite(p) => continuous(&HullWhiteProcess::new(*p), maturity, cfg),
        ModelParams::SchobelZhu(p) => continuous(&SchobelZhuProcess(*p), maturity, cfg),
    })
}

fn states<P: Process>(proc_: &P, times: &[f64], cfg: &McConfig, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> McEstimate {
    let mut tables = Vec::with_capacity(times.len());
    let mut prev = 0.0;
    for &t in times {
        tables.push((t > prev).then(|| proc_.table(t - prev)));
        prev = t;
    }
    run(cfg, |z, aux| {
        let mut v = proc_.start();
        let mut out = Vec::with_capacity(times.len());
        for table in &tables {
            if let Some(table) = table {
                v = proc_.transition(table, v, z, aux);
            }
            out.push(v);
        }
        f(&out)
    })
}

/// `E[f(V_{t_1}, ..., V_{t_k})]` for nondecreasing times, sampled with exact
/// transitions. `V` is the variance for Heston and Hull-White and the
/// volatility for Schobel-Zhu.
pub fn mc_state_moment(
    params: &ModelParams,
    times: &[f64],
    cfg: &McConfig,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> Result<McEstimate> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(PricingError::InvalidParameters(vec!["times must be nonnegative and nondecreasing".into()]));
    }
    cfg.check(times.len() as u64)?;
    Ok(match params {
        ModelParams::Heston(p) => states(&HestonProcess(*p), times, cfg, f),
        ModelParams::HullWhite(p) => states(&HullWhiteProcess::new(*p), times, cfg, f),
        ModelParams::SchobelZhu(p) => states(&SchobelZhuProcess(*p), times, cfg, f),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(paths: u64, substeps: u32) -> McConfig {
        McConfig::new(paths, substeps, 7)
    }

    #[test]
    fn rejects_small_runs_and_budget() {
        let p = ModelParams::Heston(HestonParams { kappa: 1.0, theta: 0.04, gamma: 0.3, rho: 0.0, v0: 0.04 });
        let spec = SwapSpec::new(1.0, 4, 0.0).unwrap();
        assert!(matches!(mc_discrete_strike(&p, &spec, &cfg(10, 1)), Err(PricingError::InvalidParameters(_))));
        let tight = McConfig { budget: 1000, ..cfg(MIN_PATHS, 1) };
        assert!(matches!(mc_discrete_strike(&p, &spec, &tight), Err(PricingError::BudgetExceeded { .. })));
    }

    #[test]
    fn moments_merge_matches_direct() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.01).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        xs[..333].iter().for_each(|&x| a.push(x));
        xs[333..].iter().for_each(|&x| b.push(x));
        let m = a.merge(b);
        assert_relative_eq!(m.mean, all.mean, max_relative = 1e-13);
        assert_relative_eq!(m.m2, all.m2, max_relative = 1e-12);
    }

    #[test]
    fn bridge_factor_is_smooth() {
        for y in [1e-3f64, 9.99e-3, 1.001e-2, 0.5] {
            let direct = (1.0 - 2.0 * (0.5 * y).tanh() / y) / (y * y);
            assert_relative_eq!(bridge_factor(y), direct, max_relative = if y < 0.1 { 1e-5 } else { 1e-12 });
        }
        assert_relative_eq!(bridge_factor(0.0), 1.0 / 12.0);
    }

    #[test]
    fn deterministic_variance_has_only_sampling_noise() {
        let theta: f64 = 0.04;
        let spec = SwapSpec::new(1.0, 4, 0.03).unwrap();
        let exact = theta + (2.0 * 0.03 - theta).powi(2) / 16.0;
        let models = [
            ModelParams::Heston(HestonParams { kappa: 2.0, theta, gamma: 0.0, rho: 0.5, v0: theta }),
            ModelParams::HullWhite(HullWhiteParams { mu: 0.0, sigma: 0.0, rho: 0.5, v0: theta }),
            ModelParams::SchobelZhu(SchobelZhuParams { kappa: 2.0, theta: 0.2, gamma: 0.0, rho: 0.5, v0: 0.2 }),
        ];
        for m in models {
            let est = mc_discrete_strike(&m, &spec, &cfg(20_000, 2)).unwrap();
            assert!(est.z_score(exact) < 3.0, "{m:?}: {est:?} vs {exact}");
            let c = mc_continuous_strike(&m, 1.0, &cfg(MIN_PATHS, 3)).unwrap();
            assert_relative_eq!(c.mean, theta, max_relative = 1e-12);
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let m = ModelParams::Heston(HestonParams { kappa: 6.21, theta: 0.019, gamma: 0.31, rho: -0.7, v0: 0.010201 });
        let spec = SwapSpec::new(1.0, 2, 0.0319).unwrap();
        let a = mc_discrete_strike(&m, &spec, &cfg(MIN_PATHS, 2)).unwrap();
        let b = mc_discrete_strike(&m, &spec, &cfg(MIN_PATHS, 2)).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        let c = mc_discrete_strike(&m, &spec, &McConfig::new(MIN_PATHS, 2, 8)).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn cir_bridge_series_meets_closed_form() {
        let p = HestonParams { kappa: 2.0, theta: 0.04, gamma: 0.5, rho: 0.0, v0: 0.04 };
        let scaled = |y: f64| {
            let h = y / p.kappa;
            let b = CirBridge::new(&p, h);
            let g2 = p.gamma * p.gamma;
            [
                b.mean_ends / h,
                b.var_ends / (g2 * h.powi(3)),
                b.mean_unit / (g2 * h * h),
                b.var_unit / (g2 * g2 * h.powi(4)),
            ]
        };
        for (x, y) in scaled(0.5 - 1e-12).into_iter().zip(scaled(0.5 + 1e-12)) {
            assert_relative_eq!(x, y, max_relative = 1e-11);
        }
    }

    #[test]
    fn cir_bridge_mean_averages_to_unconditional_mean() {
        let p = HestonParams { kappa: 2.0, theta: 0.09, gamma: 1.0, rho: 0.0, v0: 0.05 };
        let h = 0.25;
        let proc_ = HestonProcess(p);
        let table = proc_.table(h);
        let bridge = table.bridge.unwrap();
        let (mut normal, mut aux) = streams(3, 0);
        let mut acc = Moments::default();
        for _ in 0..200_000 {
            let end = proc_.transition(&table, p.v0, &mut Normals { rng: &mut normal, sign: 1.0 }, &mut aux);
            acc.push(bridge.moments(p.v0, end).0);
        }
        let exact = p.theta * h + (p.v0 - p.theta) * h * phi1(-p.kappa * h);
        assert!((acc.mean - exact).abs() < 3.0 * acc.std_error(), "{} vs {exact}", acc.mean);
    }

    #[test]
    fn small_dof_cir_branch_keeps_mean() {
        // 4 kappa theta / gamma^2 = 0.72 uses the Poisson mixture
        let p = HestonParams { kappa: 2.0, theta: 0.09, gamma: 1.0, rho: -0.3, v0: 0.09 };
        let est = mc_state_moment(&ModelParams::Heston(p), &[0.5], &cfg(40_000, 1), &|v| v[0]).unwrap();
        assert!(est.z_score(0.09) < 3.0, "{est:?}");
    }
}
