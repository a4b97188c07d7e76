use rand_distr::{Distribution, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{estimates, robust_std_errors, Estimate};
use crate::error::{Error, Result};
use crate::optim::{self, NelderMeadConfig};
use crate::rng::RngStream;
use crate::stats;

/// Fits below this length still run but carry a warning.
const MIN_LEN: usize = 500;
/// `nu` above this is reported as a boundary (Gaussian-limit) optimum.
const NU_BOUNDARY: f64 = 500.0;
/// `nu` below this is reported as a boundary (infinite-variance limit) optimum.
const NU_LOWER_BOUNDARY: f64 = 2.0 + 1e-3;

/// `σ²_t = ω + α1 ε²_{t-1} + β1 σ²_{t-1}` with unit-variance t(`nu`) shocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TGarchParams {
    pub omega: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub nu: f64,
}

impl TGarchParams {
    pub const NAMES: [&'static str; 5] = ["mu", "omega", "alpha1", "beta1", "nu"];

    pub fn validate(&self) -> Result<()> {
        let ok = self.omega > 0.0
            && self.alpha1 >= 0.0
            && self.beta1 >= 0.0
            && self.alpha1 + self.beta1 < 1.0
            && self.nu > 2.0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "t-GARCH needs omega > 0, alpha1, beta1 >= 0, alpha1 + beta1 < 1 and nu > 2; got {self:?}"
            )))
        }
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.alpha1 - self.beta1)
    }
}

/// `log σ²_t = ω + β1 log σ²_{t-1} + α1 Z_{t-1} + φ1 (|Z_{t-1}| - E|Z|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TEgarchParams {
    pub omega: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub phi1: f64,
    pub nu: f64,
}

impl TEgarchParams {
    pub const NAMES: [&'static str; 6] = ["mu", "omega", "alpha1", "beta1", "phi1", "nu"];

    pub fn validate(&self) -> Result<()> {
        let ok = [self.omega, self.alpha1, self.phi1].iter().all(|x| x.is_finite())
            && self.beta1.abs() < 1.0
            && self.nu > 2.0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("t-EGARCH needs |beta1| < 1 and nu > 2; got {self:?}")))
        }
    }

    pub fn unconditional_log_variance(&self) -> f64 {
        self.omega / (1.0 - self.beta1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchFit<P> {
    pub params: P,
    /// Constant mean of the returns.
    pub mu: f64,
    /// Every parameter including `mu`, with robust standard errors.
    pub estimates: Vec<Estimate>,
    pub log_likelihood: f64,
    /// Conditional variance of each observation.
    pub variance: Vec<f64>,
    /// `(r_t - mu) / σ_t`.
    pub std_residuals: Vec<f64>,
    /// Parameters whose optimum sits on the boundary of the admissible region.
    pub boundary: Vec<String>,
    pub evals: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl<P> GarchFit<P> {
    pub fn estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }
}

/// Log density of the Student-t(`nu`) rescaled to unit variance.
pub fn std_t_log_density(z: f64, nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (std::f64::consts::PI * (nu - 2.0)).ln()
        - 0.5 * (nu + 1.0) * (z * z / (nu - 2.0)).ln_1p()
}

/// `E|Z|` for the unit-variance Student-t(`nu`).
pub fn std_t_abs_mean(nu: f64) -> f64 {
    2.0 * (nu - 2.0).sqrt() * (ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu)).exp()
        / (std::f64::consts::PI.sqrt() * (nu - 1.0))
}

/// Conditional variances `σ²_0 .. σ²_{n-1}` driven by `innovations` (ε_t).
/// `σ²_0` is the unconditional variance, or the mean of `ε²` when
/// `alpha1 + beta1 >= 1`.
pub fn garch_filter(params: &TGarchParams, innovations: &[f64]) -> Vec<f64> {
    let TGarchParams { omega, alpha1, beta1, .. } = *params;
    let mut s2 = if alpha1 + beta1 < 1.0 {
        params.unconditional_variance()
    } else {
        innovations.iter().map(|e| e * e).sum::<f64>() / innovations.len().max(1) as f64
    };
    innovations
        .iter()
        .map(|e| {
            let cur = s2;
            s2 = omega + alpha1 * e * e + beta1 * cur;
            cur
        })
        .collect()
}

/// Log conditional variances driven by `innovations` (ε_t), starting from
/// `log_var0`.
pub fn egarch_log_filter(params: &TEgarchParams, innovations: &[f64], log_var0: f64) -> Vec<f64> {
    let abs_mean = std_t_abs_mean(params.nu);
    let mut h = log_var0;
    innovations
        .iter()
        .map(|e| {
            let cur = h;
            let z = e * (-0.5 * cur).exp();
            h = params.omega + params.beta1 * cur + params.alpha1 * z + params.phi1 * (z.abs() - abs_mean);
            cur
        })
        .collect()
}

/// Conditional variances, started at the unconditional log variance.
pub fn egarch_filter(params: &TEgarchParams, innovations: &[f64]) -> Vec<f64> {
    egarch_log_filter(params, innovations, params.unconditional_log_variance())
        .into_iter()
        .map(f64::exp)
        .collect()
}

fn tgarch_contribs(params: &TGarchParams, mu: f64, returns: &[f64]) -> Vec<f64> {
    let eps: Vec<f64> = returns.iter().map(|r| r - mu).collect();
    garch_filter(params, &eps)
        .iter()
        .zip(&eps)
        .map(|(s2, e)| std_t_log_density(e / s2.sqrt(), params.nu) - 0.5 * s2.ln())
        .collect()
}

fn tegarch_contribs(params: &TEgarchParams, mu: f64, returns: &[f64]) -> Vec<f64> {
    let eps: Vec<f64> = returns.iter().map(|r| r - mu).collect();
    egarch_log_filter(params, &eps, params.unconditional_log_variance())
        .iter()
        .zip(&eps)
        .map(|(h, e)| std_t_log_density(e * (-0.5 * h).exp(), params.nu) - 0.5 * h)
        .collect()
}

pub fn tgarch_log_likelihood(params: &TGarchParams, mu: f64, returns: &[f64]) -> f64 {
    tgarch_contribs(params, mu, returns).iter().sum()
}

pub fn tegarch_log_likelihood(params: &TEgarchParams, mu: f64, returns: &[f64]) -> f64 {
    tegarch_contribs(params, mu, returns).iter().sum()
}

/// Steps for a geometric memory with factor `rate` to fall below 1e-10.
fn warm_up(rate: f64) -> usize {
    (23.0 / (1.0 - rate)).ceil() as usize
}

fn std_t_draws(nu: f64, n: usize, seed: RngStream) -> Vec<f64> {
    let t = StudentT::new(nu).expect("nu > 2");
    let scale = ((nu - 2.0) / nu).sqrt();
    let mut rng = seed.rng();
    (0..n).map(|_| scale * t.sample(&mut rng)).collect()
}

/// `n` returns `mu + σ_t Z_t` after a warm-up of `⌈23/(1 - α1 - β1)⌉` steps.
pub fn simulate_tgarch(params: &TGarchParams, mu: f64, n: usize, seed: RngStream) -> Result<Vec<f64>> {
    params.validate()?;
    let burn = warm_up(params.alpha1 + params.beta1);
    let z = std_t_draws(params.nu, burn + n, seed);
    let mut s2 = params.unconditional_variance();
    let mut out = Vec::with_capacity(n);
    for (t, zt) in z.iter().enumerate() {
        let e = s2.sqrt() * zt;
        if t >= burn {
            out.push(mu + e);
        }
        s2 = params.omega + params.alpha1 * e * e + params.beta1 * s2;
    }
    Ok(out)
}

/// `n` returns `mu + σ_t Z_t` after a warm-up of `⌈23/(1 - |β1|)⌉` steps.
pub fn simulate_tegarch(params: &TEgarchParams, mu: f64, n: usize, seed: RngStream) -> Result<Vec<f64>> {
    params.validate()?;
    let burn = warm_up(params.beta1.abs());
    let abs_mean = std_t_abs_mean(params.nu);
    let z = std_t_draws(params.nu, burn + n, seed);
    let mut h = params.unconditional_log_variance();
    let mut out = Vec::with_capacity(n);
    for (t, zt) in z.iter().enumerate() {
        if t >= burn {
            out.push(mu + (0.5 * h).exp() * zt);
        }
        h = params.omega + params.beta1 * h + params.alpha1 * zt + params.phi1 * (zt.abs() - abs_mean);
    }
    Ok(out)
}

fn check_returns(returns: &[f64]) -> Result<Vec<String>> {
    if returns.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("returns must be finite"));
    }
    if returns.len() < 3 {
        return Err(Error::invalid(format!("need at least 3 returns, got {}", returns.len())));
    }
    let var = stats::variance(returns);
    if !(var > 0.0) {
        return Err(Error::DegenerateInput("returns have zero variance".into()));
    }
    let mut warnings = Vec::new();
    if returns.len() < MIN_LEN {
        warnings.push(format!("only {} returns; GARCH estimates are unreliable below {MIN_LEN}", returns.len()));
    }
    Ok(warnings)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Minimizes `f` from each start with Nelder-Mead, restarting from the
/// incumbent with a halved simplex until the value stops improving.
fn minimize(f: &dyn Fn(&[f64]) -> f64, starts: &[Vec<f64>]) -> (optim::Minimum, usize) {
    let mut best: Option<optim::Minimum> = None;
    let mut evals = 0;
    for x0 in starts {
        let mut cur = x0.clone();
        let mut step = 0.2;
        let mut prev = f64::INFINITY;
        for _ in 0..6 {
            let cfg = NelderMeadConfig {
                max_evals: 6000,
                f_tol: 1e-9,
                x_tol: 1e-9,
                initial_step: step,
            };
            let mut g = |x: &[f64]| f(x);
            let res = optim::nelder_mead(&mut g, &cur, &cfg);
            evals += res.evals;
            cur = res.x.clone();
            let done = prev - res.value < 1e-7;
            prev = res.value;
            if best.as_ref().is_none_or(|b| res.value < b.value) {
                best = Some(res);
            }
            if done {
                break;
            }
            step *= 0.5;
        }
    }
    (best.expect("at least one start"), evals)
}

/// Student-t GARCH(1,1) with a constant mean, by maximum likelihood.
pub fn fit_tgarch(returns: &[f64]) -> Result<GarchFit<TGarchParams>> {
    let mut warnings = check_returns(returns)?;
    let mean = stats::mean(returns);
    let var = stats::variance(returns);
    let decode = |u: &[f64]| {
        let s = logistic(u[2]);
        let alpha1 = s * logistic(u[3]);
        (
            u[0],
            TGarchParams {
                omega: u[1].exp(),
                alpha1,
                beta1: s - alpha1,
                nu: 2.0 + u[4].exp(),
            },
        )
    };
    let objective = |u: &[f64]| {
        let (mu, p) = decode(u);
        -tgarch_log_likelihood(&p, mu, returns)
    };
    let mut starts = Vec::new();
    for s in [0.9, 0.99] {
        for share in [0.1, 0.3] {
            starts.push(vec![mean, (var * (1.0 - s)).ln(), logit(s), logit(share), 3.0f64.ln()]);
        }
    }
    let (best, evals) = minimize(&objective, &starts);
    let (mu, params) = decode(&best.x);

    let theta = [mu, params.omega, params.alpha1, params.beta1, params.nu];
    let contribs = |th: &[f64]| {
        let p = TGarchParams { omega: th[1], alpha1: th[2], beta1: th[3], nu: th[4] };
        tgarch_contribs(&p, th[0], returns)
    };
    let se = robust_std_errors(&contribs, &theta);

    let mut boundary = Vec::new();
    if params.alpha1 < 1e-6 {
        boundary.push("alpha1".to_string());
    }
    if params.beta1 < 1e-6 {
        boundary.push("beta1".to_string());
    }
    if params.alpha1 + params.beta1 > 1.0 - 1e-6 {
        boundary.push("alpha1 + beta1".to_string());
    }
    if params.nu > NU_BOUNDARY || params.nu < NU_LOWER_BOUNDARY {
        boundary.push("nu".to_string());
    }
    if !best.converged {
        warnings.push(format!("optimizer stopped after {} evaluations without converging", best.evals));
    }
    let variance = garch_filter(&params, &returns.iter().map(|r| r - mu).collect::<Vec<_>>());
    Ok(GarchFit {
        std_residuals: returns.iter().zip(&variance).map(|(r, s2)| (r - mu) / s2.sqrt()).collect(),
        variance,
        estimates: estimates(&TGarchParams::NAMES, &theta, &se),
        log_likelihood: -best.value,
        params,
        mu,
        boundary,
        evals,
        converged: best.converged,
        warnings,
    })
}

/// Student-t EGARCH(1,1) with a constant mean, by maximum likelihood.
pub fn fit_tegarch(returns: &[f64]) -> Result<GarchFit<TEgarchParams>> {
    let mut warnings = check_returns(returns)?;
    let mean = stats::mean(returns);
    let log_var = stats::variance(returns).ln();
    let decode = |u: &[f64]| {
        (
            u[0],
            TEgarchParams {
                omega: u[1],
                alpha1: u[2],
                beta1: u[3].tanh(),
                phi1: u[4],
                nu: 2.0 + u[5].exp(),
            },
        )
    };
    let objective = |u: &[f64]| {
        let (mu, p) = decode(u);
        -tegarch_log_likelihood(&p, mu, returns)
    };
    let mut starts = Vec::new();
    for beta in [0.9, 0.98] {
        for phi in [0.1, 0.3] {
            starts.push(vec![mean, log_var * (1.0 - beta), 0.0, beta.atanh(), phi, 3.0f64.ln()]);
        }
    }
    let (best, evals) = minimize(&objective, &starts);
    let (mu, params) = decode(&best.x);

    let theta = [mu, params.omega, params.alpha1, params.beta1, params.phi1, params.nu];
    let contribs = |th: &[f64]| {
        let p = TEgarchParams { omega: th[1], alpha1: th[2], beta1: th[3], phi1: th[4], nu: th[5] };
        tegarch_contribs(&p, th[0], returns)
    };
    let se = robust_std_errors(&contribs, &theta);

    let mut boundary = Vec::new();
    if params.beta1.abs() > 1.0 - 1e-6 {
        boundary.push("beta1".to_string());
    }
    if params.nu > NU_BOUNDARY || params.nu < NU_LOWER_BOUNDARY {
        boundary.push("nu".to_string());
    }
    if !best.converged {
        warnings.push(format!("optimizer stopped after {} evaluations without converging", best.evals));
    }
    let variance = egarch_filter(&params, &returns.iter().map(|r| r - mu).collect::<Vec<_>>());
    Ok(GarchFit {
        std_residuals: returns.iter().zip(&variance).map(|(r, s2)| (r - mu) / s2.sqrt()).collect(),
        variance,
        estimates: estimates(&TEgarchParams::NAMES, &theta, &se),
        log_likelihood: -best.value,
        params,
        mu,
        boundary,
        evals,
        converged: best.converged,
        warnings,
    })
}
