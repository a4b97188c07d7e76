//! Sequential stage execution with manifest bookkeeping.

use std::path::{Path, PathBuf};

use cojump::highfreq::{CrossMomentEstimate, IntradayPanel, NimmConfig};
use cojump::pricing::{OptionSpec, PricingConfig, PricingModel};
use cojump::{McmcConfig, ReturnSeries, RngStream};

use crate::config::{PricingSource, RunConfig, Stage};
use crate::io::{ensure_dir, open_input, read_daily};
use crate::manifest::{FileRecord, RunManifest, StageRecord};
use crate::stages::{self, FitReport};
use crate::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum PipelineOutcome {
    /// A complete manifest for this config and these inputs already exists; nothing ran.
    UpToDate(RunManifest),
    Ran(RunManifest),
}

impl PipelineOutcome {
    pub fn manifest(&self) -> &RunManifest {
        match self {
            PipelineOutcome::UpToDate(m) | PipelineOutcome::Ran(m) => m,
        }
    }
}

/// Requested stages plus the stages they read from, in pipeline order.
pub fn planned_stages(cfg: &RunConfig) -> Vec<Stage> {
    let mut wanted = cfg.run.stages.clone();
    let prices = [Stage::Price, Stage::PriceGrid, Stage::IvSurface];
    if matches!(cfg.pricing.model, PricingSource::Fitted(_)) && wanted.iter().any(|s| prices.contains(s)) {
        wanted.push(Stage::Fit);
    }
    if wanted.contains(&Stage::Nimm) {
        wanted.push(Stage::Crossmom);
    }
    Stage::ALL.into_iter().filter(|s| wanted.contains(s)).collect()
}

#[derive(Default)]
struct State {
    daily: Option<ReturnSeries>,
    panel: Option<IntradayPanel>,
    fit: Option<FitReport>,
    moments: Option<Vec<CrossMomentEstimate>>,
}

struct Outputs {
    files: Vec<PathBuf>,
    warnings: Vec<String>,
}

impl Outputs {
    fn files(files: Vec<PathBuf>) -> Self {
        Self { files, warnings: Vec::new() }
    }
}

/// Runs the configured stages into `cfg.run.output_dir`. Unless `force` is
/// set, a run whose manifest already matches the config, the inputs and the
/// files on disk is skipped. On a stage failure the manifest is written with
/// `complete = false` before the error is returned.
pub fn run_pipeline(cfg: &RunConfig, force: bool) -> CliResult<PipelineOutcome> {
    cfg.validate()?;
    let out = cfg.run.output_dir.clone();
    ensure_dir(&out)?;

    let mut inputs = Vec::new();
    for p in [&cfg.run.input, &cfg.run.intraday_input].into_iter().flatten() {
        let name = p.file_name().map(PathBuf::from).unwrap_or_else(|| p.clone());
        inputs.push(FileRecord::of(p, name)?);
    }
    let mut manifest = RunManifest::new(cfg, inputs)?;
    if !force {
        if let Some(previous) = RunManifest::read(&out)? {
            if previous.is_current(&manifest, &out)? {
                return Ok(PipelineOutcome::UpToDate(previous));
            }
        }
    }

    let mut state = State::default();
    for stage in planned_stages(cfg) {
        let seed = stage.stream_id().map(|k| RngStream::new(cfg.run.seed, k));
        match run_stage(stage, cfg, seed, &mut state, &out) {
            Ok(o) => {
                let outputs = o
                    .files
                    .iter()
                    .map(|f| FileRecord::of(f, f.strip_prefix(&out).unwrap_or(f).to_path_buf()))
                    .collect::<CliResult<Vec<_>>>()?;
                manifest.stages.push(StageRecord { stage: stage.name().to_string(), seed, outputs, warnings: o.warnings });
                manifest.write(&out)?;
            }
            Err(e) => {
                manifest.error = Some(format!("{stage}: {e}"));
                manifest.write(&out)?;
                return Err(CliError::Stage { stage: stage.name().to_string(), source: Box::new(e) });
            }
        }
    }
    manifest.complete = true;
    manifest.write(&out)?;
    Ok(PipelineOutcome::Ran(manifest))
}

fn daily<'a>(cfg: &RunConfig, state: &'a mut State) -> CliResult<&'a ReturnSeries> {
    if state.daily.is_none() {
        let path = cfg.run.input.as_ref().ok_or_else(|| {
            CliError::Config("daily returns needed: set run.input or simulate an sv/svj/svcj model".into())
        })?;
        state.daily = Some(read_daily(path)?);
    }
    Ok(state.daily.as_ref().expect("loaded above"))
}

fn panel<'a>(cfg: &RunConfig, state: &'a mut State) -> CliResult<&'a IntradayPanel> {
    if state.panel.is_none() {
        let path = cfg.run.intraday_input.as_ref().ok_or_else(|| {
            CliError::Config("intraday prices needed: set run.intraday_input or simulate a br_* model".into())
        })?;
        state.panel = Some(IntradayPanel::from_minute_csv(open_input(path)?, cfg.highfreq.minutes_per_knot)?);
    }
    Ok(state.panel.as_ref().expect("loaded above"))
}

fn pricing_setup(cfg: &RunConfig, seed: RngStream, state: &State) -> CliResult<(PricingModel, PricingConfig)> {
    let model = match cfg.pricing.model {
        PricingSource::Fitted(_) => state.fit.as_ref().expect("fit is planned before pricing").pricing_model(),
        PricingSource::Named(m) => m.pricing_model(),
    };
    let pc = PricingConfig {
        paths: cfg.pricing.paths,
        seed,
        v0: stages::v0_policy(&cfg.pricing.v0, state.fit.as_ref())?,
        br_dt: cfg.pricing.br_dt,
    };
    Ok((model, pc))
}

fn run_stage(stage: Stage, cfg: &RunConfig, seed: Option<RngStream>, state: &mut State, out: &Path) -> CliResult<Outputs> {
    let seed = || seed.expect("stage has a stream");
    let hf = &cfg.highfreq;
    let pr = &cfg.pricing;
    Ok(match stage {
        Stage::Simulate => {
            let s = &cfg.simulate;
            let files = stages::simulate(s.model, s.days, s.v0, seed(), out)?;
            // read back exactly what a later, separate run would see
            match s.model.pricing_model() {
                PricingModel::Svcj { .. } => state.daily = Some(read_daily(&files[0])?),
                PricingModel::Br { .. } => {
                    state.panel = Some(IntradayPanel::from_minute_csv(open_input(&files[0])?, hf.minutes_per_knot)?)
                }
            }
            Outputs::files(files)
        }
        Stage::Fit => {
            let m = &cfg.mcmc;
            let mc = McmcConfig {
                iterations: m.iterations,
                burn_in: m.burn_in,
                mh_target_accept: m.mh_target_accept,
                seed: seed(),
                latent_thin: m.latent_thin,
            };
            let returns = daily(cfg, state)?.clone();
            let (report, mut files) = stages::fit(&returns, m.flavor, &cfg.priors, &mc, out)?;
            files.extend(stages::detect_jumps(&report, None, out)?);
            files.extend(stages::residuals(&report, out)?);
            let warnings = report.warnings.clone();
            state.fit = Some(report);
            Outputs { files, warnings }
        }
        Stage::Spotvar => Outputs::files(stages::spotvar(panel(cfg, state)?, hf.threshold_mult, out)?),
        Stage::Crossmom => {
            let (est, files) = stages::crossmom(panel(cfg, state)?, hf.threshold_mult, hf.grid_points, hf.bandwidth, out)?;
            state.moments = Some(est);
            Outputs::files(files)
        }
        Stage::Nimm => {
            let n = &cfg.nimm;
            let PricingModel::Br { params: init } = n.init.pricing_model() else {
                return Err(CliError::Config(format!("nimm.init must be a br_* model, got {:?}", n.init)));
            };
            let nc = NimmConfig {
                substeps: n.substeps,
                replications: n.replications,
                seed: seed(),
                restarts: n.restarts,
                max_evals: n.max_evals,
                variance_floor: n.variance_floor,
            };
            let moments = state.moments.as_ref().expect("crossmom is planned before nimm");
            Outputs::files(stages::nimm(moments, &init, n.restriction, &nc, out)?)
        }
        Stage::Price => {
            let (model, pc) = pricing_setup(cfg, seed(), state)?;
            let option = OptionSpec { spot: pr.spot, strike: pr.strike, tau_days: pr.tau, rate: pr.rate, kind: pr.kind };
            Outputs { files: stages::price(&model, &option, &pc, out)?, warnings: pc.warnings() }
        }
        Stage::PriceGrid => {
            let (model, pc) = pricing_setup(cfg, seed(), state)?;
            let (warnings, files) =
                stages::price_grid(&model, &pr.strikes, &pr.taus, pr.spot, pr.rate, pr.kind, &pc, out)?;
            Outputs { files, warnings }
        }
        Stage::IvSurface => {
            let (model, pc) = pricing_setup(cfg, seed(), state)?;
            let (warnings, files) = stages::iv_surface(&model, &pr.moneyness, &pr.iv_taus, pr.spot, pr.rate, &pc, out)?;
            Outputs { files, warnings }
        }
        Stage::FitGarch => {
            let b = &cfg.baselines;
            let returns = daily(cfg, state)?;
            let mut files = Vec::new();
            for kind in dedup(&b.garch) {
                files.extend(stages::fit_garch(returns, kind, b.lags, out)?);
            }
            Outputs::files(files)
        }
        Stage::FitArima => {
            let b = &cfg.baselines;
            Outputs::files(stages::fit_arima(daily(cfg, state)?, b.arima_p, b.arima_q, b.lags, out)?)
        }
    })
}

fn dedup<T: Copy + PartialEq>(xs: &[T]) -> Vec<T> {
    let mut v: Vec<T> = Vec::new();
    for x in xs {
        if !v.contains(x) {
            v.push(*x);
        }
    }
    v
}
