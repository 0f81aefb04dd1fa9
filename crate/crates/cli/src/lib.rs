//! Command-line driver for the `varswap` pricers.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 a `check`
//! comparison failed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use varswap::asymptotics::{heston_expansion_n, hw_expansion_n, sz_expansion_n};
use varswap::{
    continuous_strike, discrete_strike, expansion_report, hw_match_params, mc_discrete_strike, price,
    quadrature_strike, validate, McConfig, Method, ModelParams, ParamFile, Payoff, PricingError, SwapSpec,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{failed} of {total} checks failed")]
    CheckFailed { failed: usize, total: usize },
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) | CliError::Output(_) => 3,
            CliError::CheckFailed { .. } => 4,
        }
    }
}

impl From<PricingError> for CliError {
    fn from(e: PricingError) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "varswap", version, about = "Variance swap fair strikes under stochastic volatility")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Discrete and continuous strikes, gap and critical rate.
    Price(PriceArgs),
    /// CSV of strikes over a grid of one input.
    Sweep(SweepArgs),
    /// Hull-White parameters matching a Heston model at maturity T.
    Match(MatchArgs),
    /// Closed form against quadrature and Monte Carlo.
    Check(CheckArgs),
    /// Expansion coefficients as JSON.
    Expand(ModelArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// JSON parameter file.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long = "T")]
    pub maturity: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct McArgs {
    #[arg(long = "mc-paths")]
    pub paths: Option<u64>,
    #[arg(long = "mc-substeps")]
    pub substeps: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub antithetic: bool,
}

impl McArgs {
    pub fn config(&self) -> McConfig {
        let d = McConfig::default();
        McConfig {
            paths: self.paths.unwrap_or(d.paths),
            substeps: self.substeps.unwrap_or(d.substeps),
            seed: self.seed.unwrap_or(d.seed),
            antithetic: self.antithetic,
            budget: d.budget,
        }
    }

    fn requested(&self) -> bool {
        self.paths.is_some() || self.substeps.is_some() || self.seed.is_some() || self.antithetic
    }
}

#[derive(Debug, Clone, Args)]
pub struct PriceArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Also price the simple-return swap (Heston only), reported x 1e4.
    #[arg(long = "simple-returns")]
    pub simple_returns: bool,
    #[command(flatten)]
    pub mc: McArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVariable {
    N,
    Rho,
    #[value(name = "T")]
    Maturity,
    Gamma,
    Sigma,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Grid of one swept input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl SweepSpec {
    pub fn grid(&self) -> CliResult<Vec<f64>> {
        let mut problems = Vec::new();
        if self.count < 2 {
            problems.push(format!("count = {} must be >= 2", self.count));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            problems.push("range bounds must be finite".to_string());
        }
        if self.spacing == Spacing::Log && !(self.start > 0.0 && self.stop > 0.0) {
            problems.push("log spacing needs positive bounds".to_string());
        }
        if !problems.is_empty() {
            return Err(CliError::Validation(problems.join("; ")));
        }
        let last = (self.count - 1) as f64;
        let mut xs: Vec<f64> = (0..self.count)
            .map(|i| {
                let w = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.start + w * (self.stop - self.start),
                    Spacing::Log => (self.start.ln() + w * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect();
        if self.variable == SweepVariable::N {
            xs.iter_mut().for_each(|x| *x = x.round());
            xs.dedup();
            if xs.iter().any(|&x| x < 1.0) {
                return Err(CliError::Validation("n must be >= 1".into()));
            }
        }
        Ok(xs)
    }

    /// Model and swap at grid point `x`.
    pub fn apply(&self, params: &ModelParams, spec: &SwapSpec, x: f64) -> CliResult<(ModelParams, SwapSpec)> {
        let out = match self.variable {
            SweepVariable::N => (*params, spec.with_periods(x as u32)),
            SweepVariable::Rho => (params.with_rho(x), *spec),
            SweepVariable::Maturity => (*params, spec.with_maturity(x)),
            SweepVariable::R => (*params, spec.with_rate(x)),
            SweepVariable::Gamma | SweepVariable::Sigma => {
                let fits = matches!(
                    (self.variable, params),
                    (SweepVariable::Sigma, ModelParams::HullWhite(_))
                        | (SweepVariable::Gamma, ModelParams::Heston(_) | ModelParams::SchobelZhu(_))
                );
                if !fits {
                    return Err(CliError::Validation(format!(
                        "model {} has no parameter {:?}",
                        params.tag(),
                        self.variable
                    )));
                }
                (params.with_vol_of_vol(x), *spec)
            }
        };
        validate(&out.0, &out.1).into_result()?;
        Ok(out)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long = "var", value_enum)]
    pub variable: SweepVariable,
    #[arg(long, allow_negative_numbers = true)]
    pub start: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub stop: f64,
    #[arg(long)]
    pub count: usize,
    #[arg(long, value_enum, default_value_t = Spacing::Linear)]
    pub spacing: Spacing,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MatchArgs {
    /// Heston parameter file.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "T")]
    pub maturity: Option<f64>,
    /// Where to write the Hull-White parameter file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub mc: McArgs,
    /// Relative tolerance between closed form and quadrature.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Allowed distance to the Monte Carlo mean, in standard errors.
    #[arg(long = "max-se", default_value_t = 3.0)]
    pub max_se: f64,
}

/// Twelve significant digits, plain notation for moderate magnitudes.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..=6).contains(&exp) {
        format!("{:.*}", (11 - exp) as usize, x)
    } else {
        format!("{x:.11e}")
    }
}

fn read_param_file(path: &Path) -> CliResult<ParamFile> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    Ok(ParamFile::from_json(&text)?)
}

fn log_resolved(params: &ModelParams, spec: Option<&SwapSpec>) {
    let file = ParamFile::from_parts(params, spec);
    info!("resolved parameters: {}", serde_json::to_string(&file).expect("plain struct serializes"));
}

/// Reads, overrides and validates a model and swap.
pub fn load(args: &ModelArgs) -> CliResult<(ModelParams, SwapSpec)> {
    let file = read_param_file(&args.model)?;
    let params = file.model_params()?;
    let spec = file.swap_spec(args.maturity, args.n, args.r)?;
    let report = validate(&params, &spec);
    for w in &report.warnings {
        warn!("{w}");
    }
    report.into_result()?;
    log_resolved(&params, Some(&spec));
    Ok((params, spec))
}

/// `a1 / n`, the leading-order gap, where the expansion exists.
pub fn leading_gap(params: &ModelParams, spec: &SwapSpec) -> Option<f64> {
    let (t, r) = (spec.maturity, spec.rate);
    let a1 = match params {
        ModelParams::Heston(p) => heston_expansion_n(p, t, r).ok()?.a1,
        ModelParams::HullWhite(p) => hw_expansion_n(p, t, r).a1,
        ModelParams::SchobelZhu(p) => sz_expansion_n(p, t, r).ok()?.a1,
    };
    a1.is_finite().then(|| a1 / spec.n())
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Price(a) => cmd_price(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Match(a) => cmd_match(a, out),
        Command::Check(a) => cmd_check(a, out),
        Command::Expand(a) => cmd_expand(a, out),
    }
}

pub fn cmd_price(args: &PriceArgs, out: &mut dyn Write) -> CliResult<()> {
    let (params, spec) = load(&args.model)?;
    let kd = price(&params, &spec, Payoff::DiscreteLog, Method::ClosedForm, None)?.value;
    let kc = price(&params, &spec, Payoff::Continuous, Method::ClosedForm, None)?.value;
    writeln!(out, "model: {}", params.tag())?;
    writeln!(out, "T: {}  n: {}  r: {}", spec.maturity, spec.periods, spec.rate)?;
    writeln!(out, "K_d: {}", sig12(kd))?;
    writeln!(out, "K_c: {}", sig12(kc))?;
    writeln!(out, "gap: {}", sig12(kd - kc))?;
    writeln!(out, "critical_rate: {}", sig12(0.5 * kc))?;
    if args.simple_returns {
        let ks = price(&params, &spec, Payoff::DiscreteSimple, Method::ClosedForm, None)?.value;
        writeln!(out, "K_simple: {}", sig12(ks))?;
        writeln!(out, "K_simple_x1e4: {:.1}", ks * 1e4)?;
    }
    if args.mc.requested() {
        let q = price(&params, &spec, Payoff::DiscreteLog, Method::MonteCarlo, Some(&args.mc.config()))?;
        let se = q.std_error.unwrap_or(f64::NAN);
        writeln!(out, "K_d_mc: {}", sig12(q.value))?;
        writeln!(out, "K_d_mc_se: {}", sig12(se))?;
        writeln!(out, "K_d_mc_z: {:.2}", (q.value - kd) / se)?;
    }
    Ok(())
}

pub fn write_sweep(params: &ModelParams, spec: &SwapSpec, sweep: &SweepSpec, out: &mut dyn Write) -> CliResult<()> {
    let grid = sweep.grid()?;
    let mut text = String::from("x,K_d,K_c,gap,a1_prediction\n");
    for x in grid {
        let (p, s) = sweep.apply(params, spec, x)?;
        let kd = discrete_strike(&p, &s)?;
        let kc = continuous_strike(&p, s.maturity)?;
        let a1 = leading_gap(&p, &s).map(sig12).unwrap_or_default();
        text.push_str(&format!("{},{},{},{},{a1}\n", sig12(x), sig12(kd), sig12(kc), sig12(kd - kc)));
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> CliResult<()> {
    let (params, spec) = load(&args.model)?;
    let sweep = SweepSpec {
        variable: args.variable,
        start: args.start,
        stop: args.stop,
        count: args.count,
        spacing: args.spacing,
    };
    info!("sweep: {sweep:?}");
    match &args.out {
        Some(path) => {
            let mut buf = Vec::new();
            write_sweep(&params, &spec, &sweep, &mut buf)?;
            fs::write(path, buf)?;
            writeln!(out, "wrote {}", path.display())?;
        }
        None => write_sweep(&params, &spec, &sweep, out)?,
    }
    Ok(())
}

pub fn cmd_match(args: &MatchArgs, out: &mut dyn Write) -> CliResult<()> {
    let file = read_param_file(&args.model)?;
    let ModelParams::Heston(h) = file.model_params()? else {
        return Err(CliError::Validation("match needs a Heston parameter file".into()));
    };
    let maturity =
        args.maturity.or(file.maturity).ok_or_else(|| CliError::Validation("maturity `T` not given".into()))?;
    let spec = SwapSpec::new(maturity, 1, 0.0)?;
    validate(&h.into(), &spec).into_result()?;
    let resolved = ParamFile { maturity: Some(maturity), ..ParamFile::from_parts(&h.into(), None) };
    info!("resolved parameters: {}", serde_json::to_string(&resolved).expect("plain struct serializes"));
    let hw = hw_match_params(&h, maturity)?;
    let hw_params = ModelParams::HullWhite(hw);
    let matched = ParamFile { maturity: Some(maturity), ..ParamFile::from_parts(&hw_params, None) };
    writeln!(out, "mu: {}", sig12(hw.mu))?;
    writeln!(out, "sigma: {}", sig12(hw.sigma))?;
    writeln!(out, "{}", matched.to_json())?;
    if let Some(path) = &args.out {
        fs::write(path, matched.to_json() + "\n")?;
    }
    Ok(())
}

pub fn cmd_check(args: &CheckArgs, out: &mut dyn Write) -> CliResult<()> {
    let (params, spec) = load(&args.model)?;
    let cfg = args.mc.config();
    let closed = discrete_strike(&params, &spec)?;
    let quad = quadrature_strike(&params, &spec, 1e-10)?.value;
    let rel = (quad - closed).abs() / closed.abs();
    let mc = mc_discrete_strike(&params, &spec, &cfg)?;
    let z = (mc.mean - closed).abs() / mc.std_error;
    let rows = [
        (
            rel <= args.tol,
            format!(
                "quadrature {} vs closed form {}: relative difference {rel:.2e} (tol {:.0e})",
                sig12(quad),
                sig12(closed),
                args.tol
            ),
        ),
        (
            z <= args.max_se,
            format!(
                "monte carlo {} (se {}, {} paths, {} substeps, seed {}) vs closed form: {z:.2} se",
                sig12(mc.mean),
                sig12(mc.std_error),
                cfg.paths,
                cfg.substeps,
                cfg.seed
            ),
        ),
    ];
    let failed = rows.iter().filter(|r| !r.0).count();
    for (ok, line) in &rows {
        writeln!(out, "{} {line}", if *ok { "PASS" } else { "FAIL" })?;
    }
    if failed > 0 {
        return Err(CliError::CheckFailed { failed, total: rows.len() });
    }
    Ok(())
}

pub fn cmd_expand(args: &ModelArgs, out: &mut dyn Write) -> CliResult<()> {
    let (params, spec) = load(args)?;
    let report = expansion_report(&params, &spec)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Numeric(e.to_string()))?;
    writeln!(out, "{json}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_keeps_twelve_digits() {
        assert_eq!(sig12(0.0175956912345678), "0.0175956912346");
        assert_eq!(sig12(263.2123), "263.212300000");
        assert_eq!(sig12(-1.5e-9), "-1.50000000000e-9");
        assert_eq!(sig12(9.75e-6), "9.75000000000e-6");
        assert_eq!(sig12(4e-4), "0.000400000000000");
        assert_eq!(sig12(0.0), "0");
    }

    #[test]
    fn grid_rounds_and_dedups_periods() {
        let s = SweepSpec { variable: SweepVariable::N, start: 1.0, stop: 4.0, count: 7, spacing: Spacing::Linear };
        assert_eq!(s.grid().unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn grid_rejects_bad_ranges() {
        let s = SweepSpec { variable: SweepVariable::Rho, start: -1.0, stop: 1.0, count: 1, spacing: Spacing::Linear };
        assert!(matches!(s.grid(), Err(CliError::Validation(_))));
        let log = SweepSpec { count: 5, spacing: Spacing::Log, ..s };
        assert!(matches!(log.grid(), Err(CliError::Validation(_))));
    }

    #[test]
    fn log_grid_hits_endpoints() {
        let s = SweepSpec {
            variable: SweepVariable::Maturity,
            start: 1.0 / 1024.0,
            stop: 0.0625,
            count: 7,
            spacing: Spacing::Log,
        };
        let g = s.grid().unwrap();
        assert!((g[0] - 1.0 / 1024.0).abs() < 1e-18);
        assert!((g[6] - 0.0625).abs() < 1e-15);
        assert!((g[1] / g[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Validation(String::new()).exit_code(), 2);
        assert_eq!(CliError::Numeric(String::new()).exit_code(), 3);
        assert_eq!(CliError::CheckFailed { failed: 1, total: 2 }.exit_code(), 4);
    }
}
