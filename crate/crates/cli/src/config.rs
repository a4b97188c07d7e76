//! TOML run configuration with `COJUMP_<SECTION>__<KEY>` environment overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cojump::highfreq::{JumpRestriction, DEFAULT_THRESHOLD_MULT};
use cojump::pricing::{grid_strikes, OptionKind, DEFAULT_PATHS, IV_TAUS, GRID_TAUS};
use cojump::{ModelFlavor, PriorSpec};
use serde::{Deserialize, Serialize};

use crate::stages::{GarchKind, NamedModel, V0Name, V0Setting};
use crate::{CliError, CliResult};

pub const ENV_PREFIX: &str = "COJUMP_";

/// Every key the configuration file accepts, shown by `cojump run --help`.
pub const KEY_REFERENCE: &str = "\
Configuration keys (TOML; every key is optional):

[run]
  stages           stages to run, executed in pipeline order:
                   simulate fit spotvar crossmom nimm price price-grid
                   iv-surface fit-garch fit-arima   (default [\"simulate\"])
  input            daily CSV, 'date,price' or 'date,return' (percent)
  intraday_input   one-minute CSV 'timestamp,price'
  output_dir       directory for outputs and manifest.json (default \"out\")
  seed             master seed; each stage draws from its own stream (default 0)

[simulate]
  model            sv svj svcj br_full br_no_cojumps br_no_independent_jumps
                   br_no_jumps (default \"svcj\")
  days             simulated days (default 2000)
  v0               initial variance, percent^2; default long-run mean

[mcmc]
  flavor           sv svj svcj (default \"svcj\")
  iterations       total sweeps including burn-in (default 5000)
  burn_in          discarded sweeps (default 1000)
  mh_target_accept random-walk acceptance target during burn-in (default 0.35)
  latent_thin      keep every n-th latent path, 0 keeps none (default 5)

[priors]
  mu, alpha, beta, mu_y, rho_j   normal priors {mean, var}
  sigma_v2, sigma_y2, mu_v       inverse-gamma priors {shape, scale}
  lambda                         beta prior {a, b}
  rho                            uniform prior {lower, upper}
  (each listed prior must be given in full; unlisted ones keep their defaults)

[pricing]
  model            \"fitted\" or a simulate model name (default \"fitted\")
  paths            Monte Carlo paths (default 20000)
  v0               \"long_run\", \"posterior_last_day\" or percent^2 (default \"long_run\")
  spot             spot price (default 2250)
  rate             risk-free rate per day (default 0)
  kind             \"call\" or \"put\" for price and price-grid (default \"call\")
  strike, tau      single option for the price stage (defaults 2250, 30)
  strikes          price-grid strikes (default 1250..3250 step 100)
  taus             price-grid maturities in days (default 1 7 30 60 90 180 360 720)
  moneyness        iv-surface moneyness grid (default 0.8..1.2 step 0.05)
  iv_taus          iv-surface maturities in days (default 7 30 90 365)
  br_dt            BR simulation step in days (default 1)

[highfreq]
  minutes_per_knot knot spacing in minutes (default 60)
  threshold_mult   jump threshold in local standard deviations (default 4)
  grid_points      spot-vol grid points for cross-moments (default 9)
  bandwidth        kernel bandwidth; default rule of thumb

[nimm]
  init             starting BR model name (default \"br_full\")
  restriction      full no_cojumps no_independent_jumps no_jumps (default \"full\")
  substeps, replications, restarts, max_evals, variance_floor
                   (defaults 20, 2000, 2, 4000, 0.01)

[baselines]
  garch            models to fit: tgarch tegarch (default both)
  arima_p, arima_q ARMA orders (default 2, 2)
  lags             Ljung-Box lags (default 10)

Any key can be overridden by an environment variable named
COJUMP_<SECTION>__<KEY>, e.g. COJUMP_MCMC__ITERATIONS=2000 or
COJUMP_RUN__STAGES='[\"fit\", \"price\"]'. Values are read as TOML and fall
back to a plain string.
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Simulate,
    Fit,
    Spotvar,
    Crossmom,
    Nimm,
    Price,
    PriceGrid,
    IvSurface,
    FitGarch,
    FitArima,
}

impl Stage {
    /// Pipeline order.
    pub const ALL: [Stage; 10] = [
        Stage::Simulate,
        Stage::Fit,
        Stage::Spotvar,
        Stage::Crossmom,
        Stage::Nimm,
        Stage::Price,
        Stage::PriceGrid,
        Stage::IvSurface,
        Stage::FitGarch,
        Stage::FitArima,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Simulate => "simulate",
            Stage::Fit => "fit",
            Stage::Spotvar => "spotvar",
            Stage::Crossmom => "crossmom",
            Stage::Nimm => "nimm",
            Stage::Price => "price",
            Stage::PriceGrid => "price-grid",
            Stage::IvSurface => "iv-surface",
            Stage::FitGarch => "fit-garch",
            Stage::FitArima => "fit-arima",
        }
    }

    /// Stream id of the stage's random numbers under the master seed. The
    /// pricing stages share one so that their numbers come from the same paths.
    pub fn stream_id(self) -> Option<u64> {
        match self {
            Stage::Simulate => Some(0),
            Stage::Fit => Some(1),
            Stage::Nimm => Some(2),
            Stage::Price | Stage::PriceGrid | Stage::IvSurface => Some(3),
            _ => None,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown stage '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub stages: Vec<Stage>,
    pub input: Option<PathBuf>,
    pub intraday_input: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            stages: vec![Stage::Simulate],
            input: None,
            intraday_input: None,
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub model: NamedModel,
    pub days: usize,
    pub v0: Option<f64>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self { model: NamedModel::Svcj, days: 2000, v0: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcSection {
    pub flavor: ModelFlavor,
    pub iterations: usize,
    pub burn_in: usize,
    pub mh_target_accept: f64,
    pub latent_thin: usize,
}

impl Default for McmcSection {
    fn default() -> Self {
        let d = cojump::McmcConfig::default();
        Self {
            flavor: ModelFlavor::Svcj,
            iterations: d.iterations,
            burn_in: d.burn_in,
            mh_target_accept: d.mh_target_accept,
            latent_thin: d.latent_thin,
        }
    }
}

/// Model to price under: the pipeline's fit or a shipped parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PricingSource {
    Fitted(Fitted),
    Named(NamedModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fitted {
    Fitted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PricingSection {
    pub model: PricingSource,
    pub paths: usize,
    pub v0: V0Setting,
    pub spot: f64,
    pub rate: f64,
    pub kind: OptionKind,
    pub strike: f64,
    pub tau: u32,
    pub strikes: Vec<f64>,
    pub taus: Vec<u32>,
    pub moneyness: Vec<f64>,
    pub iv_taus: Vec<u32>,
    pub br_dt: f64,
}

/// 0.80, 0.85, ..., 1.20.
pub fn default_moneyness() -> Vec<f64> {
    (0..9).map(|i| (80.0 + 5.0 * f64::from(i)) / 100.0).collect()
}

impl Default for PricingSection {
    fn default() -> Self {
        Self {
            model: PricingSource::Fitted(Fitted::Fitted),
            paths: DEFAULT_PATHS,
            v0: V0Setting::Named(V0Name::LongRun),
            spot: 2250.0,
            rate: 0.0,
            kind: OptionKind::Call,
            strike: 2250.0,
            tau: 30,
            strikes: grid_strikes(),
            taus: GRID_TAUS.to_vec(),
            moneyness: default_moneyness(),
            iv_taus: IV_TAUS.to_vec(),
            br_dt: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HighfreqSection {
    pub minutes_per_knot: usize,
    pub threshold_mult: f64,
    pub grid_points: usize,
    pub bandwidth: Option<f64>,
}

impl Default for HighfreqSection {
    fn default() -> Self {
        Self { minutes_per_knot: 60, threshold_mult: DEFAULT_THRESHOLD_MULT, grid_points: 9, bandwidth: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NimmSection {
    pub init: NamedModel,
    pub restriction: JumpRestriction,
    pub substeps: usize,
    pub replications: usize,
    pub restarts: usize,
    pub max_evals: usize,
    pub variance_floor: f64,
}

impl Default for NimmSection {
    fn default() -> Self {
        let d = cojump::highfreq::NimmConfig::default();
        Self {
            init: NamedModel::BrFull,
            restriction: JumpRestriction::Full,
            substeps: d.substeps,
            replications: d.replications,
            restarts: d.restarts,
            max_evals: d.max_evals,
            variance_floor: d.variance_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselinesSection {
    pub garch: Vec<GarchKind>,
    pub arima_p: usize,
    pub arima_q: usize,
    pub lags: usize,
}

impl Default for BaselinesSection {
    fn default() -> Self {
        Self { garch: vec![GarchKind::Tgarch, GarchKind::Tegarch], arima_p: 2, arima_q: 2, lags: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub simulate: SimulateSection,
    pub mcmc: McmcSection,
    pub priors: PriorSpec,
    pub pricing: PricingSection,
    pub highfreq: HighfreqSection,
    pub nimm: NimmSection,
    pub baselines: BaselinesSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        Self::from_toml_with_env(text, [])
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads `path`, applies environment overrides from `env` and validates.
    /// Relative input and output paths are resolved against the config file's directory.
    pub fn load(path: &Path, env: impl IntoIterator<Item = (String, String)>) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml_with_env(&text, env)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.run.input.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.run.intraday_input.as_mut() {
            resolve(p);
        }
        resolve(&mut cfg.run.output_dir);
        Ok(cfg)
    }

    pub fn from_toml_with_env(text: &str, env: impl IntoIterator<Item = (String, String)>) -> CliResult<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        apply_env(&mut table, env)?;
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.mcmc.burn_in >= self.mcmc.iterations {
            return bad(format!("mcmc.burn_in {} must be below mcmc.iterations {}", self.mcmc.burn_in, self.mcmc.iterations));
        }
        if self.simulate.days == 0 {
            return bad("simulate.days must be positive".into());
        }
        if self.pricing.paths < 2 {
            return bad("pricing.paths must be at least 2".into());
        }
        if !(self.pricing.spot > 0.0) {
            return bad("pricing.spot must be positive".into());
        }
        if self.highfreq.minutes_per_knot == 0 || cojump::highfreq::MINUTES_PER_DAY % self.highfreq.minutes_per_knot != 0 {
            return bad("highfreq.minutes_per_knot must divide 1440".into());
        }
        Ok(())
    }

    /// Requested stages, deduplicated, in pipeline order.
    pub fn ordered_stages(&self) -> Vec<Stage> {
        Stage::ALL.into_iter().filter(|s| self.run.stages.contains(s)).collect()
    }
}

/// Applies `COJUMP_<SECTION>__<KEY>=<value>` pairs to a parsed table.
pub fn apply_env(table: &mut toml::Table, env: impl IntoIterator<Item = (String, String)>) -> CliResult<()> {
    let mut vars: Vec<(String, String)> = env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    vars.sort();
    for (key, raw) in vars {
        let rest = &key[ENV_PREFIX.len()..];
        let Some((section, field)) = rest.split_once("__") else {
            return Err(CliError::Config(format!("{key}: expected {ENV_PREFIX}<SECTION>__<KEY>")));
        };
        let value = match format!("v = {raw}").parse::<toml::Table>() {
            Ok(mut t) => t.remove("v").expect("parsed key"),
            Err(_) => toml::Value::String(raw),
        };
        let entry = table
            .entry(section.to_ascii_lowercase())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let toml::Value::Table(section_table) = entry else {
            return Err(CliError::Config(format!("{key}: '{section}' is not a section")));
        };
        section_table.insert(field.to_ascii_lowercase(), value);
    }
    Ok(())
}

/// Applies `name.field=value` overrides, e.g. `lambda.a=2`, to a prior set.
pub fn apply_prior_overrides(priors: &PriorSpec, overrides: &[String]) -> CliResult<PriorSpec> {
    let text = toml::to_string(priors).map_err(|e| CliError::Config(e.to_string()))?;
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    for o in overrides {
        let bad = || CliError::Config(format!("prior override '{o}': expected <prior>.<field>=<number>"));
        let (key, value) = o.split_once('=').ok_or_else(bad)?;
        let (name, field) = key.trim().split_once('.').ok_or_else(bad)?;
        let value: f64 = value.trim().parse().map_err(|_| bad())?;
        let slot = table
            .get_mut(name)
            .and_then(toml::Value::as_table_mut)
            .and_then(|t| t.get_mut(field))
            .ok_or_else(|| CliError::Config(format!("unknown prior field '{key}'")))?;
        *slot = toml::Value::Float(value);
    }
    let spec: PriorSpec = table.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn empty_file_is_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn defaults_match_published_settings() {
        let cfg = RunConfig::default();
        assert_eq!((cfg.mcmc.iterations, cfg.mcmc.burn_in), (5000, 1000));
        assert_eq!(cfg.pricing.paths, 20_000);
        assert_eq!(cfg.pricing.strikes.len(), 21);
        assert_eq!(cfg.pricing.moneyness.len(), 9);
        assert!((cfg.pricing.moneyness[8] - 1.2).abs() < 1e-15);
    }

    #[test]
    fn env_overrides_take_precedence() {
        let env = [
            ("COJUMP_MCMC__ITERATIONS".to_string(), "1200".to_string()),
            ("COJUMP_RUN__STAGES".to_string(), r#"["fit", "simulate"]"#.to_string()),
            ("COJUMP_PRICING__MODEL".to_string(), "svj".to_string()),
            ("COJUMP_PRICING__V0".to_string(), "2.5".to_string()),
            ("OTHER_VAR".to_string(), "x".to_string()),
        ];
        let cfg = RunConfig::from_toml_with_env("[mcmc]\niterations = 3000\n", env).unwrap();
        assert_eq!(cfg.mcmc.iterations, 1200);
        assert_eq!(cfg.ordered_stages(), vec![Stage::Simulate, Stage::Fit]);
        assert_eq!(cfg.pricing.model, PricingSource::Named(NamedModel::Svj));
        assert_eq!(cfg.pricing.v0, V0Setting::Value(2.5));
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(RunConfig::from_toml("[mcmc]\niteration = 3\n").is_err());
        assert!(RunConfig::from_toml("[mcmc]\niterations = 10\nburn_in = 10\n").is_err());
        assert!(RunConfig::from_toml("[run]\nstages = [\"plot\"]\n").is_err());
        let env = [("COJUMP_MCMC".to_string(), "1".to_string())];
        assert!(RunConfig::from_toml_with_env("", env).is_err());
    }

    #[test]
    fn prior_overrides() {
        let p = apply_prior_overrides(&PriorSpec::default(), &["lambda.a=3".into(), "rho.lower = -0.5".into()]).unwrap();
        assert_eq!((p.lambda.a, p.lambda.b), (3.0, PriorSpec::default().lambda.b));
        assert_eq!(p.rho.lower, -0.5);
        for bad in ["lambda.c=1", "lambda=1", "lambda.a=x", "mu.var=-1"] {
            assert!(apply_prior_overrides(&PriorSpec::default(), &[bad.into()]).is_err(), "{bad}");
        }
    }

    #[test]
    fn every_key_is_documented() {
        let text = RunConfig::default().to_toml().unwrap();
        let table: toml::Table = text.parse().unwrap();
        for (section, body) in &table {
            assert!(KEY_REFERENCE.contains(&format!("[{section}]")), "{section}");
            for key in body.as_table().unwrap().keys() {
                assert!(KEY_REFERENCE.contains(key.as_str()), "{section}.{key}");
            }
        }
        for key in ["v0", "bandwidth", "input", "intraday_input"] {
            assert!(KEY_REFERENCE.contains(key));
        }
    }
}
