//! One function per subcommand. Each writes fixed file names into an output
//! directory and returns the paths it wrote, in a fixed order.

use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate};
use cojump::baselines::{self, Estimate};
use cojump::highfreq::{
    cross_moments, nimm_calibrate, spot_variance_tbv, CrossMomentEstimate, IntradayPanel, NimmConfig, NimmFit,
    NIMM_ORDERS,
};
use cojump::mcmc::{self, fit_svcj};
use cojump::pricing::{self, OptionKind, OptionSpec, PricingConfig, PricingModel, V0Policy};
use cojump::simulate::{simulate_br, simulate_svcj, JumpRestriction, SIMULATION_START};
use cojump::{BrParams, McmcConfig, ModelFlavor, PosteriorSummary, PriorSpec, ReturnSeries, RngStream, SvcjParams, Units};
use serde::{Deserialize, Serialize};

use crate::io::{num, opt, write_csv, write_json};
use crate::{CliError, CliResult};

/// Parameter sets shipped with the library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum NamedModel {
    Sv,
    Svj,
    Svcj,
    BrFull,
    BrNoCojumps,
    BrNoIndependentJumps,
    BrNoJumps,
}

impl NamedModel {
    pub fn pricing_model(self) -> PricingModel {
        let br = |r: JumpRestriction| PricingModel::Br { params: r.apply(&BrParams::btc_full()) };
        match self {
            NamedModel::Sv => PricingModel::svcj(SvcjParams::btc_sv(), ModelFlavor::Sv),
            NamedModel::Svj => PricingModel::svcj(SvcjParams::btc_svj(), ModelFlavor::Svj),
            NamedModel::Svcj => PricingModel::svcj(SvcjParams::btc_svcj(), ModelFlavor::Svcj),
            NamedModel::BrFull => PricingModel::Br { params: BrParams::btc_full() },
            NamedModel::BrNoCojumps => PricingModel::Br { params: BrParams::btc_no_cojumps() },
            NamedModel::BrNoIndependentJumps => PricingModel::Br { params: BrParams::btc_no_independent_jumps() },
            NamedModel::BrNoJumps => br(JumpRestriction::NoJumps),
        }
    }
}

/// Everything a later stage needs from a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub flavor: ModelFlavor,
    pub priors: PriorSpec,
    pub mcmc: McmcConfig,
    pub dates: Vec<NaiveDate>,
    /// Fitted returns (percent).
    pub returns: Vec<f64>,
    pub summary: PosteriorSummary,
    pub warnings: Vec<String>,
}

impl FitReport {
    pub fn pricing_model(&self) -> PricingModel {
        PricingModel::svcj(self.summary.posterior_mean, self.flavor)
    }
}

/// Daily SVCJ-family returns (`date,return,V,J,Zy,Zv`) or, for the BR family,
/// one-minute prices (`timestamp,price`) starting one minute before midnight
/// so that every simulated day is complete.
pub fn simulate(model: NamedModel, days: usize, v0: Option<f64>, seed: RngStream, out: &Path) -> CliResult<Vec<PathBuf>> {
    let path = out.join("simulated.csv");
    match model.pricing_model() {
        PricingModel::Svcj { params, flavor } => {
            let v0 = v0.unwrap_or_else(|| params.restricted(flavor).long_run_variance());
            let (series, latent) = simulate_svcj(&params, flavor, v0, days, seed)?;
            let rows = (0..series.len()).map(|t| {
                vec![
                    series.dates()[t].to_string(),
                    num(series.values()[t]),
                    num(latent.v[t + 1]),
                    latent.j[t].to_string(),
                    num(latent.zy[t]),
                    num(latent.zv[t]),
                ]
            });
            write_csv(&path, &["date", "return", "V", "J", "Zy", "Zv"], rows)?;
        }
        PricingModel::Br { params } => {
            let minutes_per_day = cojump::highfreq::MINUTES_PER_DAY;
            let sigma0 = match v0 {
                Some(v) => v.sqrt(),
                None => (-0.5 * params.m0 / params.m1).exp(),
            };
            let path_br = simulate_br(&params, sigma0, days * minutes_per_day, 1.0 / minutes_per_day as f64, seed)?;
            let start = SIMULATION_START.and_hms_opt(0, 0, 0).expect("midnight") - Duration::minutes(1);
            let mut log_p = 100f64.ln();
            let mut rows = vec![vec![start.format("%Y-%m-%dT%H:%M:%S").to_string(), num(100.0)]];
            for (k, r) in path_br.returns.iter().enumerate() {
                log_p += r / 100.0;
                let ts = start + Duration::minutes(k as i64 + 1);
                rows.push(vec![ts.format("%Y-%m-%dT%H:%M:%S").to_string(), num(log_p.exp())]);
            }
            write_csv(&path, &["timestamp", "price"], rows)?;
        }
    }
    Ok(vec![path])
}

/// Runs the sampler and writes `chain.csv` (one row per iteration, burn-in
/// flagged), `fit.json` and `daily.csv`.
pub fn fit(
    returns: &ReturnSeries,
    flavor: ModelFlavor,
    priors: &PriorSpec,
    cfg: &McmcConfig,
    out: &Path,
) -> CliResult<(FitReport, Vec<PathBuf>)> {
    let returns = returns.rescale(Units::Percent);
    let chain = fit_svcj(&returns, flavor, priors, cfg)?;
    let summary = chain.summary();
    let mut files = Vec::new();

    let mut header = vec!["iteration", "burn_in"];
    header.extend(SvcjParams::NAMES);
    let rows = chain.draws.iter().enumerate().map(|(i, d)| {
        let mut row = vec![i.to_string(), u8::from(i < cfg.burn_in).to_string()];
        row.extend(d.to_array().iter().map(|x| num(*x)));
        row
    });
    files.push(write_csv(&out.join("chain.csv"), &header, rows)?);

    let report = FitReport {
        flavor,
        priors: *priors,
        mcmc: cfg.clone(),
        dates: returns.dates().to_vec(),
        returns: returns.values().to_vec(),
        summary,
        warnings: chain.warnings.clone(),
    };
    files.push(write_json(&out.join("fit.json"), &report)?);

    let s = &report.summary;
    let rows = (0..report.returns.len()).map(|t| {
        vec![
            report.dates[t].to_string(),
            num(report.returns[t]),
            num(s.jump_probs[t]),
            s.jumps[t].to_string(),
            num(s.v_mean[t + 1]),
        ]
    });
    files.push(write_csv(&out.join("daily.csv"), &["date", "return", "jump_prob", "jump", "v_mean"], rows)?);
    Ok((report, files))
}

/// `jumps.csv`: detected jump days at the posterior mean of lambda, or at `lambda`.
pub fn detect_jumps(report: &FitReport, lambda: Option<f64>, out: &Path) -> CliResult<Vec<PathBuf>> {
    let lambda = lambda.unwrap_or(report.summary.posterior_mean.lambda);
    let s = &report.summary;
    let flags = mcmc::detect_jumps(&s.jump_probs, lambda);
    let rows = (0..flags.len()).map(|t| vec![report.dates[t].to_string(), num(s.jump_probs[t]), flags[t].to_string()]);
    Ok(vec![write_csv(&out.join("jumps.csv"), &["date", "jump_prob", "jump"], rows)?])
}

/// `residuals.csv` and normal `qq.csv` at posterior means and detected jumps.
pub fn residuals(report: &FitReport, out: &Path) -> CliResult<Vec<PathBuf>> {
    let r = mcmc::standardized_residuals(&report.returns, &report.summary)?;
    let rows = r.iter().enumerate().map(|(t, e)| vec![report.dates[t].to_string(), num(*e)]);
    let a = write_csv(&out.join("residuals.csv"), &["date", "residual"], rows)?;
    let qq = mcmc::qq_points(&r).into_iter().map(|(x, y)| vec![num(x), num(y)]);
    let b = write_csv(&out.join("qq.csv"), &["theoretical", "empirical"], qq)?;
    Ok(vec![a, b])
}

/// `spotvar.csv`: one row per (day, knot).
pub fn spotvar(panel: &IntradayPanel, threshold_mult: f64, out: &Path) -> CliResult<Vec<PathBuf>> {
    let spot = spot_variance_tbv(panel, threshold_mult)?;
    let mut rows = Vec::new();
    for (t, date) in panel.dates().iter().enumerate() {
        for i in 0..panel.knots_per_day() {
            rows.push(vec![
                date.to_string(),
                i.to_string(),
                num(spot.sigma2_hat[t][i]),
                num(spot.daily_vol(t, i)),
                spot.n_j[t][i].to_string(),
            ]);
        }
    }
    Ok(vec![write_csv(&out.join("spotvar.csv"), &["date", "knot", "sigma2_hat", "daily_vol", "n_jumps"], rows)?])
}

/// Kernel estimates of the nine calibration orders (decimal units), as
/// `crossmom.json` and the long-format `crossmom.csv`.
pub fn crossmom(
    panel: &IntradayPanel,
    threshold_mult: f64,
    grid_points: usize,
    bandwidth: Option<f64>,
    out: &Path,
) -> CliResult<(Vec<CrossMomentEstimate>, Vec<PathBuf>)> {
    let spot = spot_variance_tbv(panel, threshold_mult)?;
    let est = cross_moments(&panel.log_closes(), &spot, &NIMM_ORDERS, None, grid_points, bandwidth)?;
    let json = write_json(&out.join("crossmom.json"), &est)?;
    let mut rows = Vec::new();
    for e in &est {
        for (k, s) in e.sigma_grid.iter().enumerate() {
            rows.push(vec![
                e.order.p1.to_string(),
                e.order.p2.to_string(),
                num(*s),
                opt(e.theta_hat[k]),
                opt(e.variance[k]),
            ]);
        }
    }
    let csv = write_csv(&out.join("crossmom.csv"), &["p1", "p2", "sigma", "theta_hat", "variance"], rows)?;
    Ok((est, vec![json, csv]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NimmReport {
    pub fit: NimmFit,
    pub config: NimmConfig,
    /// Model parameter names and values, in the order of the parameter vector.
    pub params: Vec<(String, f64)>,
}

/// Calibrates to decimal-unit kernel moments after converting them to
/// percent per day; writes `nimm.json`.
pub fn nimm(
    moments: &[CrossMomentEstimate],
    init: &BrParams,
    restriction: JumpRestriction,
    cfg: &NimmConfig,
    out: &Path,
) -> CliResult<Vec<PathBuf>> {
    let pct: Vec<CrossMomentEstimate> = moments.iter().map(|m| m.rescaled(100.0)).collect();
    let fit = nimm_calibrate(&pct, init, restriction, cfg)?;
    let params = BrParams::NAMES
        .iter()
        .zip(fit.params.to_array())
        .map(|(n, v)| (n.to_string(), v))
        .collect();
    let report = NimmReport { fit, config: cfg.clone(), params };
    Ok(vec![write_json(&out.join("nimm.json"), &report)?])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceReport {
    pub model: PricingModel,
    pub option: OptionSpec,
    pub config: PricingConfig,
    pub price: f64,
    pub std_error: f64,
}

/// `price.json` for a single European option.
pub fn price(model: &PricingModel, option: &OptionSpec, cfg: &PricingConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let p = pricing::mc_price(model, option, cfg)?;
    let report = PriceReport {
        model: *model,
        option: *option,
        config: cfg.clone(),
        price: p.price,
        std_error: p.std_error,
    };
    Ok(vec![write_json(&out.join("price.json"), &report)?])
}

fn tau_header(prefix: &str, taus: &[u32]) -> Vec<String> {
    std::iter::once(prefix.to_string()).chain(taus.iter().map(|t| format!("tau_{t}"))).collect()
}

/// Strike x maturity matrices `price_grid.csv` and `price_grid_se.csv`.
pub fn price_grid(
    model: &PricingModel,
    strikes: &[f64],
    taus: &[u32],
    spot: f64,
    rate: f64,
    kind: OptionKind,
    cfg: &PricingConfig,
    out: &Path,
) -> CliResult<(Vec<String>, Vec<PathBuf>)> {
    let grid = pricing::price_grid(model, strikes, taus, spot, rate, kind, cfg)?;
    let header = tau_header("strike", taus);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let matrix = |f: fn(&pricing::McPrice) -> f64| {
        grid.strikes
            .iter()
            .zip(&grid.prices)
            .map(move |(k, row)| std::iter::once(num(*k)).chain(row.iter().map(|p| num(f(p)))).collect::<Vec<_>>())
    };
    let a = write_csv(&out.join("price_grid.csv"), &header, matrix(|p| p.price))?;
    let b = write_csv(&out.join("price_grid_se.csv"), &header, matrix(|p| p.std_error))?;
    Ok((grid.warnings, vec![a, b]))
}

/// Moneyness x maturity implied-vol matrix `iv_surface.csv` (blank where no
/// implied vol exists) and per-node detail `iv_points.csv`.
pub fn iv_surface(
    model: &PricingModel,
    moneyness: &[f64],
    taus: &[u32],
    spot: f64,
    rate: f64,
    cfg: &PricingConfig,
    out: &Path,
) -> CliResult<(Vec<String>, Vec<PathBuf>)> {
    let surface = pricing::iv_surface(model, moneyness, taus, spot, rate, cfg)?;
    let header = tau_header("moneyness", taus);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = moneyness.iter().map(|m| {
        let mut row = vec![num(*m)];
        for t in taus {
            let p = surface.points.iter().find(|p| p.tau_days == *t && p.moneyness == *m);
            row.push(opt(p.and_then(|p| p.implied_vol)));
        }
        row
    });
    let a = write_csv(&out.join("iv_surface.csv"), &header, rows)?;
    let detail = surface.points.iter().map(|p| {
        vec![
            num(p.moneyness),
            p.tau_days.to_string(),
            num(p.price),
            num(p.std_error),
            opt(p.implied_vol),
            opt(p.iv_std_error),
            u8::from(p.clamped).to_string(),
            p.failure.clone().unwrap_or_default().replace(',', ";"),
        ]
    });
    let b = write_csv(
        &out.join("iv_points.csv"),
        &["moneyness", "tau", "price", "std_error", "implied_vol", "iv_std_error", "clamped", "failure"],
        detail,
    )?;
    Ok((surface.warnings, vec![a, b]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GarchKind {
    Tgarch,
    Tegarch,
}

impl GarchKind {
    fn name(self) -> &'static str {
        match self {
            GarchKind::Tgarch => "tgarch",
            GarchKind::Tegarch => "tegarch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LjungBox {
    pub lags: usize,
    pub statistic: f64,
    pub p_value: f64,
}

fn ljung_box(x: &[f64], lags: usize) -> CliResult<LjungBox> {
    let lags = lags.min(x.len().saturating_sub(1) / 4).max(1);
    let (statistic, p_value) = baselines::ljung_box(x, lags)?;
    Ok(LjungBox { lags, statistic, p_value })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchReport {
    pub model: GarchKind,
    pub estimates: Vec<Estimate>,
    pub log_likelihood: f64,
    pub boundary: Vec<String>,
    pub converged: bool,
    pub ljung_box: LjungBox,
    pub ljung_box_squared: LjungBox,
    pub warnings: Vec<String>,
}

/// `{model}.json`, `{model}_residuals.csv` and a QQ file against the fitted
/// unit-variance t, on decimal returns.
pub fn fit_garch(returns: &ReturnSeries, kind: GarchKind, lags: usize, out: &Path) -> CliResult<Vec<PathBuf>> {
    let r = returns.rescale(Units::Decimal);
    let (estimates, ll, boundary, converged, std_res, variance, nu, warnings) = match kind {
        GarchKind::Tgarch => {
            let f = baselines::fit_tgarch(r.values())?;
            (f.estimates, f.log_likelihood, f.boundary, f.converged, f.std_residuals, f.variance, f.params.nu, f.warnings)
        }
        GarchKind::Tegarch => {
            let f = baselines::fit_tegarch(r.values())?;
            (f.estimates, f.log_likelihood, f.boundary, f.converged, f.std_residuals, f.variance, f.params.nu, f.warnings)
        }
    };
    let squared: Vec<f64> = std_res.iter().map(|z| z * z).collect();
    let report = GarchReport {
        model: kind,
        estimates,
        log_likelihood: ll,
        boundary,
        converged,
        ljung_box: ljung_box(&std_res, lags)?,
        ljung_box_squared: ljung_box(&squared, lags)?,
        warnings,
    };
    let name = kind.name();
    let a = write_json(&out.join(format!("{name}.json")), &report)?;
    let rows = (0..std_res.len()).map(|t| vec![r.dates()[t].to_string(), num(std_res[t]), num(variance[t])]);
    let b = write_csv(&out.join(format!("{name}_residuals.csv")), &["date", "std_residual", "variance"], rows)?;
    let qq = baselines::qq_points_t(&std_res, nu)?.into_iter().map(|(x, y)| vec![num(x), num(y)]);
    let c = write_csv(&out.join(format!("{name}_qq.csv")), &["theoretical", "empirical"], qq)?;
    Ok(vec![a, b, c])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaReport {
    pub p: usize,
    pub q: usize,
    pub estimates: Vec<Estimate>,
    pub log_likelihood: f64,
    pub ljung_box: LjungBox,
    pub warnings: Vec<String>,
}

/// `arima.json`, `arima_residuals.csv` and normal `arima_qq.csv`, on decimal returns.
pub fn fit_arima(returns: &ReturnSeries, p: usize, q: usize, lags: usize, out: &Path) -> CliResult<Vec<PathBuf>> {
    let r = returns.rescale(Units::Decimal);
    let fit = baselines::fit_arima(r.values(), p, q)?;
    let report = ArimaReport {
        p,
        q,
        estimates: fit.estimates.clone(),
        log_likelihood: fit.log_likelihood,
        ljung_box: ljung_box(&fit.residuals, lags)?,
        warnings: fit.warnings.clone(),
    };
    let a = write_json(&out.join("arima.json"), &report)?;
    let rows = fit.residuals.iter().enumerate().map(|(k, e)| vec![r.dates()[p + k].to_string(), num(*e)]);
    let b = write_csv(&out.join("arima_residuals.csv"), &["date", "residual"], rows)?;
    let qq = mcmc::qq_points(&fit.residuals).into_iter().map(|(x, y)| vec![num(x), num(y)]);
    let c = write_csv(&out.join("arima_qq.csv"), &["theoretical", "empirical"], qq)?;
    Ok(vec![a, b, c])
}

/// Resolves a v0 setting against a model and an optional fit.
pub fn v0_policy(setting: &V0Setting, report: Option<&FitReport>) -> CliResult<V0Policy> {
    Ok(match setting {
        V0Setting::Named(V0Name::LongRun) => V0Policy::LongRunMean,
        V0Setting::Named(V0Name::PosteriorLastDay) => {
            let r = report.ok_or_else(|| CliError::Input("v0 'posterior_last_day' needs a fit".into()))?;
            V0Policy::posterior_last_day(&r.summary)?
        }
        V0Setting::Value(v) => V0Policy::Fixed { value: *v },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum V0Name {
    LongRun,
    PosteriorLastDay,
}

/// Initial variance for pricing: a policy name or a value in percent².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum V0Setting {
    Named(V0Name),
    Value(f64),
}

impl std::str::FromStr for V0Setting {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s.replace('-', "_").as_str() {
            "long_run" => Ok(V0Setting::Named(V0Name::LongRun)),
            "posterior_last_day" | "posterior" => Ok(V0Setting::Named(V0Name::PosteriorLastDay)),
            other => other
                .parse()
                .map(V0Setting::Value)
                .map_err(|_| CliError::Input(format!("v0 must be long_run, posterior_last_day or a number, got '{s}'"))),
        }
    }
}
