//! One function per subcommand. Each returns the CSV text it produced;
//! diagnostics go through `log` to standard error.

use std::io::Write;

use tailwedge::analytic::{gamma_model, heston_log_mgf, vg_model, GammaParams, HestonParams, VarianceGammaParams};
use tailwedge::critical::{
    band_from, cir_mgf_model, critical_moment, omega_closed, omega_fit, Side, SuperpositionSpec,
};
use tailwedge::montecarlo::{estimate_mgf, estimate_tail, McConfig, Workers};
use tailwedge::riccati::{self, CirParams};
use tailwedge::tauberian::{legendre, tail_band};
use tailwedge::{Error, MgfModel};

use crate::args::{Command, CriticalArgs, MgfArgs, ModelArgs, ModelKind, SideArg, SimulateArgs, TailArgs, ValidateArgs};
use crate::csv::{num, opt, Table};
use crate::validate::{self, Mode};
use crate::{CliError, CliResult};

pub const WORKERS_ENV: &str = "TAILWEDGE_WORKERS";

fn need(name: &str, value: Option<f64>) -> CliResult<f64> {
    value.ok_or_else(|| CliError::Usage(format!("--{name} is required for this model")))
}

fn model_kind(m: &ModelArgs) -> CliResult<ModelKind> {
    m.model.ok_or_else(|| CliError::Usage("--model is required".into()))
}

fn cir_params(m: &ModelArgs) -> CliResult<CirParams> {
    Ok(CirParams::new(need("a", m.a)?, need("b", m.b)?, need("sigma", m.sigma)?, need("v0", m.v0)?)?)
}

fn spec(m: &ModelArgs) -> CliResult<SuperpositionSpec> {
    Ok(SuperpositionSpec::new(m.l1.unwrap_or(0.0), m.l2.unwrap_or(0.0), need("t", m.t)?)?)
}

fn require_cir(m: &ModelArgs, command: &str) -> CliResult<(CirParams, SuperpositionSpec)> {
    if model_kind(m)? != ModelKind::Cir {
        return Err(CliError::Usage(format!("`{command}` supports --model cir only")));
    }
    let s = spec(m)?;
    if s.l1() == 0.0 && s.l2() == 0.0 {
        return Err(CliError::Usage("at least one of --l1, --l2 must be nonzero".into()));
    }
    Ok((cir_params(m)?, s))
}

/// The model as a generic transform, for `tail`.
fn mgf_model(m: &ModelArgs) -> CliResult<Box<dyn MgfModel>> {
    Ok(match model_kind(m)? {
        ModelKind::Gamma => Box::new(gamma_model(GammaParams::new(need("k", m.k)?, need("theta", m.theta)?)?)),
        ModelKind::Vg => Box::new(vg_model(VarianceGammaParams::new(
            need("c", m.c)?,
            need("g", m.g)?,
            need("m", m.m)?,
        )?)),
        ModelKind::Cir => {
            let (p, s) = require_cir(m, "tail")?;
            Box::new(cir_mgf_model(p, s)?)
        }
        ModelKind::Heston => return Err(CliError::Usage("`tail` does not support --model heston".into())),
    })
}

pub fn cmd_mgf(args: &MgfArgs) -> CliResult<String> {
    let m = &args.model;
    let log_mgf: Box<dyn Fn(f64) -> Result<f64, Error>> = match model_kind(m)? {
        ModelKind::Gamma => {
            let model = gamma_model(GammaParams::new(need("k", m.k)?, need("theta", m.theta)?)?);
            Box::new(move |p| model.log_mgf(p))
        }
        ModelKind::Vg => {
            let model = vg_model(VarianceGammaParams::new(need("c", m.c)?, need("g", m.g)?, need("m", m.m)?)?);
            Box::new(move |p| model.log_mgf(p))
        }
        ModelKind::Cir => {
            let (params, s) = (cir_params(m)?, spec(m)?);
            Box::new(move |p| riccati::log_mgf(&params, p * s.l1(), p * s.l2(), s.t()))
        }
        ModelKind::Heston => {
            let h = HestonParams::new(cir_params(m)?, need("rho", m.rho)?)?;
            let t = need("t", m.t)?;
            Box::new(move |p| heston_log_mgf(&h, p, t))
        }
    };
    let mut table = Table::new(&["p", "logmgf", "mgf"]);
    for &p in &args.p.0 {
        let l = log_mgf(p)?;
        table.row([num(p), num(l), num(l.exp())]);
    }
    Ok(table.finish())
}

pub fn cmd_critical(args: &CriticalArgs) -> CliResult<String> {
    let (params, s) = require_cir(&args.model, "critical")?;
    let sides: &[Side] = match args.side {
        SideArg::Plus => &[Side::Plus],
        SideArg::Minus => &[Side::Minus],
        SideArg::Both => &[Side::Plus, Side::Minus],
    };
    let mut table = Table::new(&[
        "side",
        "mu_star",
        "omega",
        "log_coeff",
        "intercept",
        "fit_max_residual",
        "fit_condition",
        "omega_closed",
    ]);
    for &side in sides {
        let name = if side == Side::Plus { "plus" } else { "minus" };
        let mu = critical_moment(&params, &s, side)?;
        if !mu.is_finite() {
            table.row([name.to_string(), num(mu), String::new(), String::new(), String::new(), String::new(), String::new(), String::new()]);
            continue;
        }
        let fit = omega_fit(&params, &s, side)?;
        let closed = omega_closed(&params, &s, side).ok().map(|c| c.omega);
        table.row([
            name.to_string(),
            num(mu),
            num(fit.omega),
            num(fit.log_coeff),
            num(fit.intercept),
            num(fit.max_residual),
            num(fit.condition),
            opt(closed),
        ]);
    }
    Ok(table.finish())
}

pub fn cmd_tail(args: &TailArgs) -> CliResult<String> {
    let model = mgf_model(&args.model)?;
    let corollary = if model_kind(&args.model)? == ModelKind::Cir {
        let (params, s) = require_cir(&args.model, "tail")?;
        let omega = omega_fit(&params, &s, Side::Plus)?.omega;
        Some((params, model.critical_moment(), omega))
    } else {
        None
    };
    let mut table = Table::new(&[
        "R",
        "p_star",
        "lambda_star",
        "log_chernoff",
        "chernoff",
        "band_exponent_low",
        "band_exponent_high",
        "log_lower_limsup",
        "corollary_center",
        "corollary_c_low",
        "corollary_c_high",
        "asymptotic",
    ]);
    for &r in &args.r.0 {
        let pt = legendre(model.as_ref(), r)?;
        let band = tail_band(model.as_ref(), r)?;
        let cb = corollary.map(|(params, mu, omega)| band_from(&params, mu, omega, r));
        table.row([
            num(r),
            num(pt.p_star),
            num(pt.lambda_star),
            num(-pt.lambda_star),
            num((-pt.lambda_star).exp()),
            num(band.exponent_interval.0),
            num(band.exponent_interval.1),
            num(band.log_lower_limsup),
            opt(cb.map(|b| b.center)),
            opt(cb.map(|b| b.c_interval.0)),
            opt(cb.map(|b| b.c_interval.1)),
            "true".into(),
        ]);
    }
    Ok(table.finish())
}

/// `--workers`, else the environment, else every core.
pub fn resolve_workers(flag: Option<&str>) -> CliResult<Workers> {
    let env = std::env::var(WORKERS_ENV).ok();
    let Some(raw) = flag.map(str::to_string).or(env) else { return Ok(Workers::Auto) };
    let raw = raw.trim();
    if raw == "auto" {
        return Ok(Workers::Auto);
    }
    match raw.parse::<usize>() {
        Ok(n) if n > 0 => Ok(Workers::Fixed(n)),
        _ => Err(CliError::Usage(format!("workers must be a positive integer or `auto`, got `{raw}`"))),
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<String> {
    let (params, s) = require_cir(&args.model, "simulate")?;
    if args.r.is_none() && args.p.is_none() {
        return Err(CliError::Usage("simulate needs --R, --p, or both".into()));
    }
    let workers = resolve_workers(args.workers.as_deref())?;
    let config = McConfig::new(args.paths, args.steps, args.seed, workers)?;
    let mut table = Table::new(&[
        "kind",
        "arg",
        "estimate",
        "ci_low",
        "ci_high",
        "std_error",
        "n_exceed",
        "closed_form",
    ]);
    if let Some(rs) = &args.r {
        let model = cir_mgf_model(params, s)?;
        for e in estimate_tail(&params, &s, &rs.0, &config)? {
            if e.zero_exceedance {
                log::warn!("zero-exceedance at R = {}: interval is the rule of three", e.r);
            }
            let chernoff = match legendre(&model, e.r) {
                Ok(pt) => (-pt.lambda_star).exp(),
                Err(Error::BelowMean { .. }) => 1.0,
                Err(err) => return Err(err.into()),
            };
            let se = (e.p_hat * (1.0 - e.p_hat) / args.paths as f64).sqrt();
            table.row([
                "tail".into(),
                num(e.r),
                num(e.p_hat),
                num(e.ci_low),
                num(e.ci_high),
                num(se),
                e.n_exceed.to_string(),
                num(chernoff),
            ]);
        }
    }
    if let Some(ps) = &args.p {
        for e in estimate_mgf(&params, &s, &ps.0, &config)? {
            let closed = riccati::log_mgf(&params, e.p * s.l1(), e.p * s.l2(), s.t())?.exp();
            let half = 1.959_963_984_540_054 * e.std_error;
            table.row([
                "mgf".into(),
                num(e.p),
                num(e.estimate),
                num(e.estimate - half),
                num(e.estimate + half),
                num(e.std_error),
                String::new(),
                num(closed),
            ]);
        }
    }
    Ok(table.finish())
}

/// Streams one line per criterion; fails with exit code 1 if any failed.
pub fn cmd_validate(args: &ValidateArgs, out: &mut dyn Write) -> CliResult<()> {
    let mode = if args.quick { Mode::Quick } else { Mode::Full };
    let selected = validate::select(args.only.as_deref()).map_err(CliError::Usage)?;
    let mut all = true;
    for c in selected {
        let outcome = validate::run_criterion(c, mode);
        all &= outcome.passed;
        writeln!(out, "{}", outcome.line()).map_err(|e| CliError::Numeric(format!("write failed: {e}")))?;
    }
    if all {
        Ok(())
    } else {
        Err(CliError::Validation)
    }
}

/// Runs any command other than `validate` and returns its CSV.
pub fn run_to_string(command: &Command) -> CliResult<String> {
    match command {
        Command::Mgf(a) => cmd_mgf(a),
        Command::Critical(a) => cmd_critical(a),
        Command::Tail(a) => cmd_tail(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Validate(a) => {
            let mut buf = Vec::new();
            let result = cmd_validate(a, &mut buf);
            let text = String::from_utf8(buf).expect("validation lines are UTF-8");
            result.map(|()| text)
        }
    }
}
