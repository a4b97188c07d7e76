use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cojump::highfreq::{CrossMomentEstimate, IntradayPanel, JumpRestriction, NimmConfig, DEFAULT_THRESHOLD_MULT};
use cojump::pricing::{grid_strikes, OptionKind, OptionSpec, PricingConfig, PricingModel, DEFAULT_PATHS, IV_TAUS, GRID_TAUS};
use cojump::{McmcConfig, ModelFlavor, PriorSpec, RngStream};
use cojump_cli::config::{apply_prior_overrides, default_moneyness, RunConfig, Stage, KEY_REFERENCE};
use cojump_cli::io::{ensure_dir, open_input, read_daily};
use cojump_cli::stages::{self, FitReport, GarchKind, NamedModel, V0Setting};
use cojump_cli::{run_pipeline, CliError, CliResult, PipelineOutcome};

#[derive(Parser)]
#[command(name = "cojump", version, about = "Estimate stochastic-volatility jump models and price options under them")]
struct Cli {
    /// Worker threads for parallel stages; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate daily SV/SVJ/SVCJ returns or one-minute BR prices.
    Simulate {
        #[arg(long, value_enum, default_value = "svcj")]
        model: NamedModel,
        #[arg(long, default_value_t = 2000)]
        days: usize,
        /// Initial variance in percent^2; defaults to the long-run mean.
        #[arg(long)]
        v0: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutDir,
    },
    /// Fit SV/SVJ/SVCJ by MCMC: chain.csv, fit.json, daily.csv.
    Fit {
        /// Daily CSV with a 'date,price' or 'date,return' (percent) header.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "svcj")]
        flavor: ModelFlavor,
        #[arg(long, default_value_t = 5000)]
        iterations: usize,
        #[arg(long, default_value_t = 1000)]
        burn_in: usize,
        #[arg(long, default_value_t = 0.35)]
        mh_target_accept: f64,
        #[arg(long, default_value_t = 5)]
        latent_thin: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Prior override such as 'lambda.a=2'; repeatable.
        #[arg(long = "prior", value_name = "PRIOR.FIELD=VALUE")]
        priors: Vec<String>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Flag jump days from a fit: jumps.csv.
    DetectJumps {
        #[arg(long)]
        fit: PathBuf,
        /// Expected jump fraction; defaults to the posterior mean of lambda.
        #[arg(long)]
        lambda: Option<f64>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Standardized residuals and a normal QQ table from a fit.
    Residuals {
        #[arg(long)]
        fit: PathBuf,
        #[command(flatten)]
        out: OutDir,
    },
    /// Threshold bipower spot variance from one-minute prices: spotvar.csv.
    Spotvar {
        #[command(flatten)]
        hf: Intraday,
        #[command(flatten)]
        out: OutDir,
    },
    /// Kernel cross-moments from one-minute prices: crossmom.json, crossmom.csv.
    Crossmom {
        #[command(flatten)]
        hf: Intraday,
        #[arg(long, default_value_t = 9)]
        grid_points: usize,
        /// Kernel bandwidth in daily vol units; defaults to a rule of thumb.
        #[arg(long)]
        bandwidth: Option<f64>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Calibrate the BR model to crossmom.json: nimm.json.
    Nimm {
        #[arg(long)]
        moments: PathBuf,
        #[arg(long, value_enum, default_value = "br_full")]
        init: NamedModel,
        #[arg(long, default_value = "full")]
        restriction: JumpRestriction,
        #[arg(long, default_value_t = 20)]
        substeps: usize,
        #[arg(long, default_value_t = 2000)]
        replications: usize,
        #[arg(long, default_value_t = 2)]
        restarts: usize,
        #[arg(long, default_value_t = 4000)]
        max_evals: usize,
        #[arg(long, default_value_t = 0.01)]
        variance_floor: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutDir,
    },
    /// Monte Carlo price of one European option: price.json.
    Price {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2250.0)]
        spot: f64,
        #[arg(long, default_value_t = 2250.0)]
        strike: f64,
        #[arg(long, default_value_t = 30)]
        tau: u32,
        /// Risk-free rate per day.
        #[arg(long, default_value_t = 0.0)]
        rate: f64,
        #[arg(long, value_enum, default_value = "call")]
        kind: Kind,
        #[command(flatten)]
        out: OutDir,
    },
    /// Strike x maturity price matrix: price_grid.csv, price_grid_se.csv.
    PriceGrid {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2250.0)]
        spot: f64,
        /// Comma list or LO:HI:STEP; defaults to 1250:3250:100.
        #[arg(long, value_parser = parse_grid)]
        strikes: Option<Grid>,
        /// Maturities in days.
        #[arg(long, value_delimiter = ',')]
        taus: Vec<u32>,
        #[arg(long, default_value_t = 0.0)]
        rate: f64,
        #[arg(long, value_enum, default_value = "call")]
        kind: Kind,
        #[command(flatten)]
        out: OutDir,
    },
    /// Black-Scholes implied vols on a moneyness x maturity grid: iv_surface.csv, iv_points.csv.
    IvSurface {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2250.0)]
        spot: f64,
        /// Comma list or LO:HI:STEP; defaults to 0.8:1.2:0.05.
        #[arg(long, value_parser = parse_grid)]
        moneyness: Option<Grid>,
        #[arg(long, value_delimiter = ',')]
        taus: Vec<u32>,
        #[arg(long, default_value_t = 0.0)]
        rate: f64,
        #[command(flatten)]
        out: OutDir,
    },
    /// Student-t GARCH(1,1) or EGARCH(1,1) on decimal log returns.
    FitGarch {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "tgarch")]
        model: GarchKind,
        #[arg(long, default_value_t = 10)]
        lags: usize,
        #[command(flatten)]
        out: OutDir,
    },
    /// ARMA(p, q) on decimal log returns: arima.json and residual tables.
    FitArima {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        p: usize,
        #[arg(long, default_value_t = 2)]
        q: usize,
        #[arg(long, default_value_t = 10)]
        lags: usize,
        #[command(flatten)]
        out: OutDir,
    },
    /// Run the stages listed in a TOML config and record them in manifest.json.
    #[command(after_help = KEY_REFERENCE)]
    Run {
        #[arg(long, required_unless_present = "print_default_config")]
        config: Option<PathBuf>,
        /// Re-run even if the manifest says the outputs are current.
        #[arg(long)]
        force: bool,
        /// Print the default configuration and exit.
        #[arg(long)]
        print_default_config: bool,
    },
}

#[derive(Args)]
struct OutDir {
    /// Output directory; created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct Intraday {
    /// One-minute CSV with a 'timestamp,price' header.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 60)]
    minutes_per_knot: usize,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_MULT)]
    threshold: f64,
}

#[derive(Args)]
struct ModelArgs {
    /// Shipped parameter set to price under.
    #[arg(long, value_enum, conflicts_with = "fit", required_unless_present = "fit")]
    model: Option<NamedModel>,
    /// Price under the posterior means of a fit.json.
    #[arg(long)]
    fit: Option<PathBuf>,
    /// 'long_run', 'posterior_last_day' (needs --fit) or a variance in percent^2.
    #[arg(long, default_value = "long_run")]
    v0: V0Setting,
    #[arg(long, default_value_t = DEFAULT_PATHS)]
    paths: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// BR simulation step in days.
    #[arg(long, default_value_t = 1.0)]
    br_dt: f64,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Kind {
    Call,
    Put,
}

impl From<Kind> for OptionKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Call => OptionKind::Call,
            Kind::Put => OptionKind::Put,
        }
    }
}

#[derive(Clone)]
struct Grid(Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("bad number '{x}'"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [lo, hi, step] => {
            let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
            if !(step > 0.0 && hi >= lo) {
                return Err("range needs LO <= HI and STEP > 0".into());
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            Ok(Grid((0..=n).map(|i| lo + step * i as f64).collect()))
        }
        [_] => s.split(',').map(num).collect::<Result<_, _>>().map(Grid),
        _ => Err("expected a comma list or LO:HI:STEP".into()),
    }
}

fn stream(seed: u64, stage: Stage) -> RngStream {
    RngStream::new(seed, stage.stream_id().expect("stage draws random numbers"))
}

fn read_fit(path: &Path) -> CliResult<FitReport> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

impl ModelArgs {
    fn resolve(&self, stage: Stage) -> CliResult<(PricingModel, PricingConfig)> {
        let fit = self.fit.as_deref().map(read_fit).transpose()?;
        let model = match (&fit, self.model) {
            (Some(f), _) => f.pricing_model(),
            (None, Some(m)) => m.pricing_model(),
            (None, None) => return Err(CliError::Input("give --model or --fit".into())),
        };
        let cfg = PricingConfig {
            paths: self.paths,
            seed: stream(self.seed, stage),
            v0: stages::v0_policy(&self.v0, fit.as_ref())?,
            br_dt: self.br_dt,
        };
        Ok((model, cfg))
    }
}

fn panel(hf: &Intraday) -> CliResult<IntradayPanel> {
    Ok(IntradayPanel::from_minute_csv(open_input(&hf.input)?, hf.minutes_per_knot)?)
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn execute(command: Command) -> CliResult<Vec<PathBuf>> {
    let out_dir = |o: &OutDir| -> CliResult<PathBuf> {
        ensure_dir(&o.out)?;
        Ok(o.out.clone())
    };
    match command {
        Command::Simulate { model, days, v0, seed, out } => {
            stages::simulate(model, days, v0, stream(seed, Stage::Simulate), &out_dir(&out)?)
        }
        Command::Fit { input, flavor, iterations, burn_in, mh_target_accept, latent_thin, seed, priors, out } => {
            let priors = apply_prior_overrides(&PriorSpec::default(), &priors)?;
            let cfg = McmcConfig { iterations, burn_in, mh_target_accept, seed: stream(seed, Stage::Fit), latent_thin };
            let returns = read_daily(&input)?;
            let (report, files) = stages::fit(&returns, flavor, &priors, &cfg, &out_dir(&out)?)?;
            warn_all(&report.warnings);
            Ok(files)
        }
        Command::DetectJumps { fit, lambda, out } => stages::detect_jumps(&read_fit(&fit)?, lambda, &out_dir(&out)?),
        Command::Residuals { fit, out } => stages::residuals(&read_fit(&fit)?, &out_dir(&out)?),
        Command::Spotvar { hf, out } => stages::spotvar(&panel(&hf)?, hf.threshold, &out_dir(&out)?),
        Command::Crossmom { hf, grid_points, bandwidth, out } => {
            Ok(stages::crossmom(&panel(&hf)?, hf.threshold, grid_points, bandwidth, &out_dir(&out)?)?.1)
        }
        Command::Nimm { moments, init, restriction, substeps, replications, restarts, max_evals, variance_floor, seed, out } => {
            let text = std::fs::read_to_string(&moments).map_err(|e| CliError::io(&moments, e))?;
            let est: Vec<CrossMomentEstimate> =
                serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", moments.display())))?;
            let PricingModel::Br { params } = init.pricing_model() else {
                return Err(CliError::Input("--init must be a br_* model".into()));
            };
            let cfg = NimmConfig { substeps, replications, seed: stream(seed, Stage::Nimm), restarts, max_evals, variance_floor };
            stages::nimm(&est, &params, restriction, &cfg, &out_dir(&out)?)
        }
        Command::Price { model, spot, strike, tau, rate, kind, out } => {
            let (m, cfg) = model.resolve(Stage::Price)?;
            warn_all(&cfg.warnings());
            let option = OptionSpec { spot, strike, tau_days: tau, rate, kind: kind.into() };
            stages::price(&m, &option, &cfg, &out_dir(&out)?)
        }
        Command::PriceGrid { model, spot, strikes, taus, rate, kind, out } => {
            let (m, cfg) = model.resolve(Stage::PriceGrid)?;
            let strikes = strikes.map_or_else(grid_strikes, |g| g.0);
            let taus = if taus.is_empty() { GRID_TAUS.to_vec() } else { taus };
            let (warnings, files) = stages::price_grid(&m, &strikes, &taus, spot, rate, kind.into(), &cfg, &out_dir(&out)?)?;
            warn_all(&warnings);
            Ok(files)
        }
        Command::IvSurface { model, spot, moneyness, taus, rate, out } => {
            let (m, cfg) = model.resolve(Stage::IvSurface)?;
            let moneyness = moneyness.map_or_else(default_moneyness, |g| g.0);
            let taus = if taus.is_empty() { IV_TAUS.to_vec() } else { taus };
            let (warnings, files) = stages::iv_surface(&m, &moneyness, &taus, spot, rate, &cfg, &out_dir(&out)?)?;
            warn_all(&warnings);
            Ok(files)
        }
        Command::FitGarch { input, model, lags, out } => stages::fit_garch(&read_daily(&input)?, model, lags, &out_dir(&out)?),
        Command::FitArima { input, p, q, lags, out } => stages::fit_arima(&read_daily(&input)?, p, q, lags, &out_dir(&out)?),
        Command::Run { config, force, print_default_config } => {
            if print_default_config {
                print!("{}", RunConfig::default().to_toml()?);
                return Ok(vec![]);
            }
            let path = config.expect("clap requires --config");
            let cfg = RunConfig::load(&path, std::env::vars())?;
            match run_pipeline(&cfg, force)? {
                PipelineOutcome::UpToDate(_) => {
                    eprintln!("up-to-date: {} (use --force to re-run)", cfg.run.output_dir.display());
                    Ok(vec![])
                }
                PipelineOutcome::Ran(m) => {
                    for s in &m.stages {
                        for w in &s.warnings {
                            eprintln!("warning: {}: {w}", s.stage);
                        }
                    }
                    let dir = &cfg.run.output_dir;
                    let mut files: Vec<PathBuf> = m.outputs().map(|o| dir.join(&o.path)).collect();
                    files.push(dir.join(cojump_cli::manifest::MANIFEST_FILE));
                    Ok(files)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up {n} threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    match execute(cli.command) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
