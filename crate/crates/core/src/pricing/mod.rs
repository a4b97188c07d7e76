//! Crude Monte Carlo pricing of European options under the fitted dynamics
//! with zero risk premia, price grids and Black-Scholes implied vol surfaces.
//!
//! Path `i` of a run reads `RngStream::path(seed, i)`. All strikes and
//! maturities of one call share the same paths, so a grid is monotone and
//! convex in the strike path by path.

mod bs;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcmc::PosteriorSummary;
use crate::rng::RngStream;
use crate::simulate::{br_step, svcj_step, BrParams, BrShocks, ModelFlavor, SvcjParams, SvcjShocks};
use crate::stats::pairwise_sum;

pub use bs::{bs_implied_vol, bs_price, bs_vega, iv_price_band, DAYS_PER_YEAR};

pub const DEFAULT_PATHS: usize = 20_000;
pub const GRID_TAUS: [u32; 8] = [1, 7, 30, 60, 90, 180, 360, 720];
pub const IV_TAUS: [u32; 4] = [7, 30, 90, 365];

/// Strikes 1250, 1350, ..., 3250.
pub fn grid_strikes() -> Vec<f64> {
    (0..21).map(|i| 1250.0 + 100.0 * f64::from(i)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionKind {
    Call,
    Put,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub spot: f64,
    pub strike: f64,
    pub tau_days: u32,
    /// Continuously compounded, per day.
    pub rate: f64,
    pub kind: OptionKind,
}

impl OptionSpec {
    pub fn call(spot: f64, strike: f64, tau_days: u32) -> Self {
        Self {
            spot,
            strike,
            tau_days,
            rate: 0.0,
            kind: OptionKind::Call,
        }
    }

    pub fn moneyness(&self) -> f64 {
        self.strike / self.spot
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0 && self.spot.is_finite()) {
            return Err(Error::invalid(format!("spot {} must be positive", self.spot)));
        }
        if !(self.strike >= 0.0 && self.strike.is_finite()) {
            return Err(Error::invalid(format!("strike {} must be non-negative", self.strike)));
        }
        if self.tau_days == 0 {
            return Err(Error::invalid("maturity must be at least one day"));
        }
        if !self.rate.is_finite() {
            return Err(Error::invalid("rate must be finite"));
        }
        Ok(())
    }
}

/// Starting variance of every path, in the model's percent² units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum V0Policy {
    /// `(alpha + lambda mu_v) / (1 - beta)`; for the BR model, `exp(-m0/m1)`.
    LongRunMean,
    Fixed { value: f64 },
    /// Smoothed variance at the end of the fitted sample.
    PosteriorLastDay { value: f64 },
}

impl V0Policy {
    pub fn posterior_last_day(summary: &PosteriorSummary) -> Result<Self> {
        let value = *summary
            .v_mean
            .last()
            .ok_or_else(|| Error::invalid("posterior summary has no variance path"))?;
        Ok(V0Policy::PosteriorLastDay { value })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PricingConfig {
    pub paths: usize,
    pub seed: RngStream,
    pub v0: V0Policy,
    /// Step of the BR simulation, in days; maturities must be multiples of it.
    pub br_dt: f64,
}

impl Default for PricingConfig {
    fn default() -> Self {
        Self {
            paths: DEFAULT_PATHS,
            seed: RngStream::from_seed(0),
            v0: V0Policy::LongRunMean,
            br_dt: 1.0,
        }
    }
}

impl PricingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths < 2 {
            return Err(Error::invalid("need at least two paths"));
        }
        if !(self.br_dt > 0.0 && self.br_dt.is_finite()) {
            return Err(Error::invalid(format!("BR step {} must be positive", self.br_dt)));
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = vec![];
        if self.paths < 1000 {
            w.push(format!("only {} paths; standard errors will be large", self.paths));
        }
        w
    }
}

/// Dynamics to price under. SVCJ-family parameters are in percent units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum PricingModel {
    Svcj { params: SvcjParams, flavor: ModelFlavor },
    Br { params: BrParams },
}

impl PricingModel {
    pub fn svcj(params: SvcjParams, flavor: ModelFlavor) -> Self {
        PricingModel::Svcj { params, flavor }
    }

    /// Initial state: variance (percent²) for SVCJ, spot vol (percent) for BR.
    fn initial_state(&self, policy: V0Policy) -> Result<f64> {
        let v0 = match (self, policy) {
            (PricingModel::Svcj { params, flavor }, V0Policy::LongRunMean) => {
                let p = params.restricted(*flavor);
                if p.beta >= 1.0 {
                    return Err(Error::invalid("long-run variance undefined for beta >= 1"));
                }
                p.long_run_variance()
            }
            (PricingModel::Br { params }, V0Policy::LongRunMean) => {
                if params.m1 >= 0.0 {
                    return Err(Error::invalid("long-run log variance undefined for m1 >= 0"));
                }
                (-params.m0 / params.m1).exp()
            }
            (_, V0Policy::Fixed { value } | V0Policy::PosteriorLastDay { value }) => value,
        };
        if !(v0 >= 0.0 && v0.is_finite()) {
            return Err(Error::invalid(format!("initial variance {v0} must be non-negative")));
        }
        match self {
            PricingModel::Svcj { .. } => Ok(v0),
            PricingModel::Br { .. } if v0 > 0.0 => Ok(v0.sqrt()),
            PricingModel::Br { .. } => Err(Error::invalid("BR model needs a positive initial variance")),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            PricingModel::Svcj { params, .. } => params.validate(),
            PricingModel::Br { params } => params.validate(),
        }
    }
}

/// `S_T / S_0` on every path at each requested maturity (`growth[tau][path]`).
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalPaths {
    pub taus: Vec<u32>,
    pub growth: Vec<Vec<f64>>,
}

impl TerminalPaths {
    pub fn paths(&self) -> usize {
        self.growth.first().map_or(0, Vec::len)
    }

    fn column(&self, tau: u32) -> Result<&[f64]> {
        let k = self
            .taus
            .iter()
            .position(|&t| t == tau)
            .ok_or_else(|| Error::invalid(format!("maturity {tau} was not simulated")))?;
        Ok(&self.growth[k])
    }

    /// Discounted mean payoff and its standard error.
    pub fn price(&self, opt: &OptionSpec) -> Result<McPrice> {
        opt.validate()?;
        let g = self.column(opt.tau_days)?;
        let payoff: Vec<f64> = g
            .iter()
            .map(|&x| {
                let st = opt.spot * x;
                match opt.kind {
                    OptionKind::Call => (st - opt.strike).max(0.0),
                    OptionKind::Put => (opt.strike - st).max(0.0),
                }
            })
            .collect();
        let disc = (-opt.rate * f64::from(opt.tau_days)).exp();
        Ok(discounted_mean(&payoff, disc))
    }

    /// Discounted mean of `S_T` over the same paths.
    pub fn forward(&self, spot: f64, tau: u32, rate: f64) -> Result<McPrice> {
        let g = self.column(tau)?;
        let st: Vec<f64> = g.iter().map(|x| spot * x).collect();
        Ok(discounted_mean(&st, (-rate * f64::from(tau)).exp()))
    }
}

fn discounted_mean(xs: &[f64], disc: f64) -> McPrice {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    McPrice {
        price: disc * mean,
        std_error: disc * (var / n).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McPrice {
    pub price: f64,
    pub std_error: f64,
}

fn svcj_growth(p: &SvcjParams, v0: f64, taus: &[u32], rng: RngStream) -> Vec<f64> {
    let mut r = rng.rng();
    let horizon = *taus.iter().max().unwrap_or(&0);
    let mut out = Vec::with_capacity(taus.len());
    let (mut v, mut cum) = (v0, 0.0);
    for day in 1..=horizon {
        let step = svcj_step(p, v, &SvcjShocks::draw(&mut r));
        v = step.v;
        cum += step.y;
        for &t in taus {
            if t == day {
                out.push(cum.exp());
            }
        }
    }
    out
}

fn br_growth(p: &BrParams, sigma0: f64, dt: f64, steps: &[usize], rng: RngStream) -> Vec<f64> {
    let mut r = rng.rng();
    let horizon = *steps.iter().max().unwrap_or(&0);
    let mut out = Vec::with_capacity(steps.len());
    let (mut h, mut cum) = (2.0 * sigma0.ln(), 0.0);
    for n in 1..=horizon {
        let inc = br_step(p, h, dt, &BrShocks::draw(&mut r));
        h = inc.log_var;
        cum += inc.dlog_s / 100.0;
        for &s in steps {
            if s == n {
                out.push(cum.exp());
            }
        }
    }
    out
}

/// Simulates `cfg.paths` paths once and records `S_T / S_0` at each maturity.
pub fn simulate_terminal(model: &PricingModel, taus: &[u32], cfg: &PricingConfig) -> Result<TerminalPaths> {
    model.validate()?;
    cfg.validate()?;
    if taus.is_empty() || taus.contains(&0) {
        return Err(Error::invalid("maturities must be non-empty and positive"));
    }
    let mut taus = taus.to_vec();
    taus.sort_unstable();
    taus.dedup();
    let state = model.initial_state(cfg.v0)?;
    let seed = cfg.seed.seed;
    let per_path: Vec<Vec<f64>> = match model {
        PricingModel::Svcj { params, flavor } => {
            // percent-unit fits are converted once; the paths are then in decimal log returns
            let p = params.restricted(*flavor).to_decimal_units();
            let v0 = state / 1e4;
            (0..cfg.paths as u64)
                .into_par_iter()
                .map(|i| svcj_growth(&p, v0, &taus, RngStream::path(seed, i)))
                .collect()
        }
        PricingModel::Br { params } => {
            let steps = taus
                .iter()
                .map(|&t| {
                    let n = f64::from(t) / cfg.br_dt;
                    if (n - n.round()).abs() > 1e-9 {
                        Err(Error::invalid(format!("maturity {t} is not a multiple of the BR step {}", cfg.br_dt)))
                    } else {
                        Ok(n.round() as usize)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            (0..cfg.paths as u64)
                .into_par_iter()
                .map(|i| br_growth(params, state, cfg.br_dt, &steps, RngStream::path(seed, i)))
                .collect()
        }
    };
    let growth = (0..taus.len()).map(|k| per_path.iter().map(|p| p[k]).collect()).collect();
    Ok(TerminalPaths { taus, growth })
}

/// Price of one option by crude Monte Carlo.
pub fn mc_price(model: &PricingModel, opt: &OptionSpec, cfg: &PricingConfig) -> Result<McPrice> {
    opt.validate()?;
    simulate_terminal(model, &[opt.tau_days], cfg)?.price(opt)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceGrid {
    pub spot: f64,
    pub rate: f64,
    pub kind: OptionKind,
    pub strikes: Vec<f64>,
    pub taus: Vec<u32>,
    /// `prices[strike][tau]`.
    pub prices: Vec<Vec<McPrice>>,
    pub warnings: Vec<String>,
}

/// Prices every (strike, maturity) pair on one shared set of paths.
pub fn price_grid(
    model: &PricingModel,
    strikes: &[f64],
    taus: &[u32],
    spot: f64,
    rate: f64,
    kind: OptionKind,
    cfg: &PricingConfig,
) -> Result<PriceGrid> {
    if strikes.is_empty() {
        return Err(Error::invalid("no strikes"));
    }
    let paths = simulate_terminal(model, taus, cfg)?;
    let prices = strikes
        .iter()
        .map(|&k| {
            taus.iter()
                .map(|&tau| {
                    paths.price(&OptionSpec {
                        spot,
                        strike: k,
                        tau_days: tau,
                        rate,
                        kind,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PriceGrid {
        spot,
        rate,
        kind,
        strikes: strikes.to_vec(),
        taus: taus.to_vec(),
        prices,
        warnings: cfg.warnings(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvPoint {
    pub moneyness: f64,
    pub tau_days: u32,
    pub price: f64,
    pub std_error: f64,
    /// Annualized, decimal; `None` where inversion failed.
    pub implied_vol: Option<f64>,
    /// Price standard error mapped through the vega.
    pub iv_std_error: Option<f64>,
    /// Price was within one standard error below the lower bound and was lifted onto it.
    pub clamped: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvSurface {
    pub spot: f64,
    pub points: Vec<IvPoint>,
    pub warnings: Vec<String>,
}

impl IvSurface {
    /// Implied vols at one maturity, in moneyness order; missing nodes skipped.
    pub fn slice(&self, tau: u32) -> Vec<&IvPoint> {
        self.points.iter().filter(|p| p.tau_days == tau).collect()
    }

    pub fn missing(&self) -> usize {
        self.points.iter().filter(|p| p.implied_vol.is_none()).count()
    }
}

/// Relative size of the lift applied to clamped prices.
const CLAMP_EPS: f64 = 1e-10;

fn invert(price: McPrice, spot: f64, strike: f64, rate: f64, tau: u32) -> (Option<f64>, bool, Option<String>) {
    let t = f64::from(tau);
    let (lower, _) = iv_price_band(spot, strike, rate, t);
    let mut target = price.price;
    let mut clamped = false;
    // a zero standard error means no path paid off differently: nothing to clamp toward
    if target <= lower && price.std_error > 0.0 && lower - target <= price.std_error {
        target = lower + CLAMP_EPS * spot;
        clamped = true;
    }
    match bs_implied_vol(target, spot, strike, rate, t) {
        Ok(v) => (Some(v), clamped, None),
        Err(e) => (None, clamped, Some(e.to_string())),
    }
}

/// Call prices on a moneyness x maturity grid and their Black-Scholes implied vols.
pub fn iv_surface(
    model: &PricingModel,
    moneyness: &[f64],
    taus: &[u32],
    spot: f64,
    rate: f64,
    cfg: &PricingConfig,
) -> Result<IvSurface> {
    if moneyness.is_empty() || moneyness.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::invalid("moneyness grid must be non-empty and positive"));
    }
    let mut warnings = cfg.warnings();
    if moneyness.iter().any(|m| !(0.5..=2.0).contains(m)) {
        warnings.push("moneyness grid extends outside [0.5, 2.0]".into());
    }
    let paths = simulate_terminal(model, taus, cfg)?;
    let mut points = vec![];
    for &tau in taus {
        for &m in moneyness {
            let strike = m * spot;
            let price = paths.price(&OptionSpec {
                spot,
                strike,
                tau_days: tau,
                rate,
                kind: OptionKind::Call,
            })?;
            let (iv, clamped, failure) = invert(price, spot, strike, rate, tau);
            let iv_std_error = iv.map(|v| {
                let vega = bs_vega(spot, strike, rate, v, f64::from(tau));
                if vega > 0.0 {
                    price.std_error / vega
                } else {
                    f64::INFINITY
                }
            });
            points.push(IvPoint {
                moneyness: m,
                tau_days: tau,
                price: price.price,
                std_error: price.std_error,
                implied_vol: iv,
                iv_std_error,
                clamped,
                failure,
            });
        }
    }
    let missing = points.iter().filter(|p| p.implied_vol.is_none()).count();
    if missing > 0 {
        warnings.push(format!("{missing} nodes have no implied volatility"));
    }
    Ok(IvSurface { spot, points, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Constant variance (percent²) with log drift -v/2, so `S` is a martingale
    /// and Black-Scholes applies.
    fn flat_sv(daily_var: f64) -> PricingModel {
        let p = SvcjParams {
            mu: -daily_var / 200.0,
            alpha: daily_var * (1.0 - 0.5),
            beta: 0.5,
            sigma_v: 1e-8,
            ..SvcjParams::btc_sv()
        };
        PricingModel::svcj(p, ModelFlavor::Sv)
    }

    fn cfg(paths: usize) -> PricingConfig {
        PricingConfig {
            paths,
            seed: RngStream::from_seed(42),
            ..PricingConfig::default()
        }
    }

    #[test]
    fn zero_strike_call_is_the_discounted_forward() {
        let m = PricingModel::svcj(SvcjParams::btc_svcj(), ModelFlavor::Svcj);
        let c = cfg(3000);
        let paths = simulate_terminal(&m, &[30], &c).unwrap();
        let opt = OptionSpec {
            rate: 0.0002,
            ..OptionSpec::call(100.0, 0.0, 30)
        };
        let call = paths.price(&opt).unwrap();
        let fwd = paths.forward(100.0, 30, 0.0002).unwrap();
        assert_eq!(call, fwd);
        assert_eq!(mc_price(&m, &opt, &c).unwrap(), call);
    }

    #[test]
    fn flat_sv_matches_black_scholes() {
        // daily variance 4 (percent^2), so daily vol 2%
        let m = flat_sv(4.0);
        let c = PricingConfig {
            v0: V0Policy::Fixed { value: 4.0 },
            ..cfg(DEFAULT_PATHS)
        };
        let sigma_annual = 0.02 * DAYS_PER_YEAR.sqrt();
        for tau in [7, 30, 90] {
            let mc = mc_price(&m, &OptionSpec::call(100.0, 100.0, tau), &c).unwrap();
            let bs = bs_price(100.0, 100.0, 0.0, sigma_annual, f64::from(tau));
            assert!((mc.price - bs).abs() < 3.0 * mc.std_error, "tau {tau}: {} vs {bs} (se {})", mc.price, mc.std_error);
        }
    }

    #[test]
    fn grid_rows_are_monotone_and_convex_in_strike() {
        let m = PricingModel::svcj(SvcjParams::btc_svcj(), ModelFlavor::Svcj);
        let strikes = grid_strikes();
        let g = price_grid(&m, &strikes, &GRID_TAUS, 2250.0, 0.0, OptionKind::Call, &cfg(2000)).unwrap();
        assert_eq!((g.prices.len(), g.prices[0].len()), (21, 8));
        for t in 0..GRID_TAUS.len() {
            for k in 1..strikes.len() {
                assert!(g.prices[k][t].price <= g.prices[k - 1][t].price);
            }
            for k in 1..strikes.len() - 1 {
                let second = g.prices[k + 1][t].price - 2.0 * g.prices[k][t].price + g.prices[k - 1][t].price;
                assert!(second >= -1e-9 * g.prices[k][t].price.max(1.0));
            }
        }
    }

    #[test]
    fn identical_strikes_give_identical_rows() {
        let m = PricingModel::svcj(SvcjParams::btc_svj(), ModelFlavor::Svj);
        let g = price_grid(&m, &[2000.0, 2000.0], &[7, 30], 2250.0, 0.0, OptionKind::Call, &cfg(500)).unwrap();
        assert_eq!(g.prices[0], g.prices[1]);
    }

    #[test]
    fn put_call_parity_holds_path_by_path() {
        let m = PricingModel::svcj(SvcjParams::btc_svcj(), ModelFlavor::Svcj);
        let c = cfg(2000);
        let paths = simulate_terminal(&m, &[7, 90], &c).unwrap();
        for (k, tau, r) in [(1500.0, 7, 0.0), (2250.0, 90, 0.0001), (3000.0, 90, 0.0)] {
            let call = paths
                .price(&OptionSpec {
                    rate: r,
                    ..OptionSpec::call(2250.0, k, tau)
                })
                .unwrap();
            let put = paths
                .price(&OptionSpec {
                    rate: r,
                    kind: OptionKind::Put,
                    ..OptionSpec::call(2250.0, k, tau)
                })
                .unwrap();
            let fwd = paths.forward(2250.0, tau, r).unwrap();
            let disc = (-r * f64::from(tau)).exp();
            let want = fwd.price - disc * k;
            assert!((call.price - put.price - want).abs() < 1e-9 * 2250.0, "{k} {tau}");
        }
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let m = PricingModel::Br { params: BrParams::btc_full() };
        let c = cfg(800);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| simulate_terminal(&m, &[7, 30], &c).unwrap());
        let b = three.install(|| simulate_terminal(&m, &[7, 30], &c).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn standard_error_halves_with_four_times_the_paths() {
        let m = PricingModel::svcj(SvcjParams::btc_svcj(), ModelFlavor::Svcj);
        let opt = OptionSpec::call(2250.0, 2250.0, 30);
        let ratios: Vec<f64> = (0..10)
            .map(|s| {
                let small = mc_price(&m, &opt, &PricingConfig { seed: RngStream::from_seed(s), ..cfg(1000) }).unwrap();
                let big = mc_price(&m, &opt, &PricingConfig { seed: RngStream::from_seed(100 + s), ..cfg(2000) }).unwrap();
                small.std_error / big.std_error
            })
            .collect();
        let mean = crate::stats::mean(&ratios);
        assert!((mean / 2f64.sqrt() - 1.0).abs() < 0.2, "{mean}");
    }

    #[test]
    fn flat_sv_surface_is_flat() {
        let m = flat_sv(4.0);
        let c = PricingConfig {
            v0: V0Policy::Fixed { value: 4.0 },
            ..cfg(DEFAULT_PATHS)
        };
        let grid: Vec<f64> = (0..9).map(|i| 0.8 + 0.05 * f64::from(i)).collect();
        let s = iv_surface(&m, &grid, &IV_TAUS, 100.0, 0.0, &c).unwrap();
        for tau in IV_TAUS {
            let slice = s.slice(tau);
            let ivs: Vec<f64> = slice.iter().filter_map(|p| p.implied_vol).collect();
            let (lo, hi) = ivs.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
            let err = slice.iter().filter_map(|p| p.iv_std_error).fold(0.0, f64::max);
            assert!(hi - lo < 2.0 * err, "tau {tau}: range {} vs err {err}", hi - lo);
        }
    }

    #[test]
    fn failed_inversions_are_reported() {
        let m = flat_sv(4.0);
        let c = PricingConfig {
            v0: V0Policy::Fixed { value: 4.0 },
            ..cfg(1000)
        };
        // deep in the money at one day: MC noise puts prices on either side of intrinsic
        let s = iv_surface(&m, &[0.5, 1.0], &[1], 100.0, 0.0, &c).unwrap();
        assert_eq!(s.points.len(), 2);
        let deep = &s.points[0];
        assert!(deep.implied_vol.is_none() || deep.clamped || deep.implied_vol.unwrap() > 0.0);
        if deep.implied_vol.is_none() {
            assert!(deep.failure.is_some());
            assert!(s.warnings.iter().any(|w| w.contains("no implied")));
        }
        assert!(s.points[1].implied_vol.is_some());
    }

    #[test]
    fn clamp_needs_a_positive_standard_error() {
        let zero = McPrice { price: 0.0, std_error: 0.0 };
        let (iv, clamped, failure) = invert(zero, 100.0, 150.0, 0.0, 7);
        assert_eq!((iv, clamped), (None, false));
        assert!(failure.is_some());
        let lower = iv_price_band(100.0, 90.0, 0.0, 7.0).0;
        let below = McPrice { price: lower - 0.01, std_error: 0.02 };
        let (iv, clamped, _) = invert(below, 100.0, 90.0, 0.0, 7);
        assert!(clamped && iv.is_some());
        let far = McPrice { price: lower - 0.05, std_error: 0.02 };
        assert_eq!(invert(far, 100.0, 90.0, 0.0, 7).0, None);
    }

    #[test]
    fn br_long_run_state_and_step_checks() {
        let m = PricingModel::Br { params: BrParams::btc_full() };
        let s0 = m.initial_state(V0Policy::LongRunMean).unwrap();
        assert!((s0 - (0.5 * 0.0495 / -0.06f64).exp()).abs() < 1e-12);
        let c = PricingConfig {
            br_dt: 0.4,
            ..cfg(10)
        };
        assert!(simulate_terminal(&m, &[1], &c).is_err());
        assert!(simulate_terminal(&m, &[2], &c).is_ok());
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let m = flat_sv(4.0);
        assert!(mc_price(&m, &OptionSpec::call(0.0, 100.0, 7), &cfg(100)).is_err());
        assert!(mc_price(&m, &OptionSpec::call(100.0, 100.0, 0), &cfg(100)).is_err());
        assert!(mc_price(&m, &OptionSpec::call(100.0, 100.0, 7), &cfg(1)).is_err());
        let bad = PricingModel::svcj(SvcjParams { lambda: 2.0, ..SvcjParams::btc_svcj() }, ModelFlavor::Svcj);
        assert!(mc_price(&bad, &OptionSpec::call(100.0, 100.0, 7), &cfg(100)).is_err());
        assert!(!cfg(500).warnings().is_empty());
    }
}
