use serde::{Deserialize, Serialize};

use super::{estimates, robust_std_errors, Estimate};
use crate::error::{Error, Result};
use crate::optim::{self, NelderMeadConfig};
use crate::rng::RngStream;
use crate::stats;

/// ARMA(p, q) in mean form:
/// `y_t - c = Σ a_i (y_{t-i} - c) + ε_t + Σ b_j ε_{t-j}`, `ε_t ~ N(0, sigma2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaParams {
    pub c: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub sigma2: f64,
}

impl ArimaParams {
    pub fn names(&self) -> Vec<String> {
        let mut names = vec!["c".to_string()];
        names.extend((1..=self.a.len()).map(|i| format!("a{i}")));
        names.extend((1..=self.b.len()).map(|j| format!("b{j}")));
        names.push("sigma2".into());
        names
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaFit {
    pub params: ArimaParams,
    /// `c, a1.., b1.., sigma2` with robust standard errors.
    pub estimates: Vec<Estimate>,
    /// Conditional residuals; `residuals[k]` belongs to `returns[p + k]`.
    pub residuals: Vec<f64>,
    /// Conditional Gaussian log-likelihood at the optimum.
    pub log_likelihood: f64,
    pub evals: usize,
    pub warnings: Vec<String>,
}

impl ArimaFit {
    pub fn estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }
}

/// True when `1 - Σ phi_i z^i` has every root outside the unit circle,
/// checked through the reflection coefficients of the step-down recursion.
pub fn is_stationary(phi: &[f64]) -> bool {
    let mut cur = phi.to_vec();
    while let Some(&k) = cur.last() {
        if !(k.abs() < 1.0) {
            return false;
        }
        let p = cur.len();
        let denom = 1.0 - k * k;
        cur = (0..p - 1).map(|i| (cur[i] + k * cur[p - 2 - i]) / denom).collect();
    }
    true
}

/// True when `1 + Σ b_j z^j` has every root outside the unit circle.
pub fn is_invertible(b: &[f64]) -> bool {
    let neg: Vec<f64> = b.iter().map(|x| -x).collect();
    is_stationary(&neg)
}

/// Conditional residuals for `t = p..n`, with pre-sample errors set to 0.
pub fn arima_residuals(params: &ArimaParams, y: &[f64]) -> Vec<f64> {
    let (p, q) = (params.a.len(), params.b.len());
    let mut e = Vec::with_capacity(y.len().saturating_sub(p));
    for t in p..y.len() {
        let mut v = y[t] - params.c;
        for (i, a) in params.a.iter().enumerate() {
            v -= a * (y[t - 1 - i] - params.c);
        }
        for j in 0..q.min(e.len()) {
            v -= params.b[j] * e[e.len() - 1 - j];
        }
        e.push(v);
    }
    e
}

/// Forecast of the observation following `y`.
pub fn one_step_forecast(params: &ArimaParams, y: &[f64]) -> f64 {
    let e = arima_residuals(params, y);
    let n = y.len();
    let ar: f64 = params.a.iter().enumerate().map(|(i, a)| a * (y[n - 1 - i] - params.c)).sum();
    let ma: f64 = params
        .b
        .iter()
        .enumerate()
        .filter(|(j, _)| *j < e.len())
        .map(|(j, b)| b * e[e.len() - 1 - j])
        .sum();
    params.c + ar + ma
}

/// `n` observations from a stationary ARMA after a 1000-step warm-up.
pub fn simulate_arma(params: &ArimaParams, n: usize, seed: RngStream) -> Vec<f64> {
    const WARM_UP: usize = 1000;
    let mut rng = seed.rng();
    let sd = params.sigma2.sqrt();
    let (p, q) = (params.a.len(), params.b.len());
    let mut d = vec![0.0; p];
    let mut e = vec![0.0; q];
    let mut out = Vec::with_capacity(n);
    for t in 0..WARM_UP + n {
        let eps = sd * stats::standard_normal(&mut rng);
        let ar: f64 = params.a.iter().enumerate().map(|(i, a)| a * d[d.len() - 1 - i]).sum();
        let ma: f64 = params.b.iter().enumerate().map(|(j, b)| b * e[e.len() - 1 - j]).sum();
        let x = ar + eps + ma;
        if p > 0 {
            d.remove(0);
            d.push(x);
        }
        if q > 0 {
            e.remove(0);
            e.push(eps);
        }
        if t >= WARM_UP {
            out.push(params.c + x);
        }
    }
    out
}

fn unpack(theta: &[f64], p: usize, q: usize, sigma2: f64) -> ArimaParams {
    ArimaParams {
        c: theta[0],
        a: theta[1..1 + p].to_vec(),
        b: theta[1 + p..1 + p + q].to_vec(),
        sigma2,
    }
}

fn ols(rows: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let k = rows.first()?.len();
    let xtx: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| rows.iter().map(|r| r[i] * r[j]).sum()).collect())
        .collect();
    let xty: Vec<f64> = (0..k).map(|i| rows.iter().zip(y).map(|(r, v)| r[i] * v).sum()).collect();
    let inv = optim::invert(&xtx)?;
    Some((0..k).map(|i| (0..k).map(|j| inv[i][j] * xty[j]).sum()).collect())
}

/// Hannan-Rissanen start: a long autoregression supplies residuals, then one
/// least-squares regression on lagged values and lagged residuals.
fn hannan_rissanen(y: &[f64], p: usize, q: usize) -> Vec<f64> {
    let n = y.len();
    let mean = stats::mean(y);
    let d: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let mut theta = vec![mean];
    if p + q == 0 {
        return theta;
    }
    let mut resid = vec![0.0; n];
    let mut start = p;
    if q > 0 {
        let m = (p + q).max((10.0 * (n as f64).log10()).ceil() as usize).min(n / 4);
        let rows: Vec<Vec<f64>> = (m..n).map(|t| (1..=m).map(|i| d[t - i]).collect()).collect();
        if let Some(phi) = ols(&rows, &d[m..]) {
            for t in m..n {
                resid[t] = d[t] - (1..=m).map(|i| phi[i - 1] * d[t - i]).sum::<f64>();
            }
        }
        start = m + q;
    }
    let rows: Vec<Vec<f64>> = (start..n)
        .map(|t| (1..=p).map(|i| d[t - i]).chain((1..=q).map(|j| resid[t - j])).collect())
        .collect();
    let mut coef = ols(&rows, &d[start..]).unwrap_or_else(|| vec![0.0; p + q]);
    // shrink into the admissible region
    for _ in 0..200 {
        if is_stationary(&coef[..p]) && is_invertible(&coef[p..]) {
            break;
        }
        coef.iter_mut().for_each(|c| *c *= 0.9);
    }
    theta.extend(coef);
    theta
}

/// Conditional-sum-of-squares ARMA(p, q) fit with Gaussian innovations.
pub fn fit_arima(returns: &[f64], p: usize, q: usize) -> Result<ArimaFit> {
    let n = returns.len();
    if n <= 10 * (p + q) || n < 3 {
        return Err(Error::invalid(format!("ARMA({p},{q}) needs more than {} observations, got {n}", 10 * (p + q))));
    }
    if returns.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("returns must be finite"));
    }
    if stats::variance(returns) == 0.0 {
        return Err(Error::DegenerateInput("returns are constant".into()));
    }
    let m = (n - p) as f64;
    let neg_ll = |theta: &[f64]| {
        let ss: f64 = arima_residuals(&unpack(theta, p, q, 1.0), returns).iter().map(|e| e * e).sum();
        0.5 * m * (ss / m).ln()
    };

    let mut starts = vec![hannan_rissanen(returns, p, q)];
    if p + q > 0 {
        let mut zero = vec![0.0; 1 + p + q];
        zero[0] = stats::mean(returns);
        starts.push(zero);
    }
    let mut best: Option<optim::Minimum> = None;
    let mut evals = 0;
    for x0 in starts {
        let mut step = 0.1;
        let mut cur = x0;
        let mut prev = f64::INFINITY;
        for _ in 0..6 {
            let cfg = NelderMeadConfig {
                max_evals: 20_000,
                f_tol: 1e-11,
                x_tol: 1e-10,
                initial_step: step,
            };
            let mut f = |x: &[f64]| neg_ll(x);
            let res = optim::nelder_mead(&mut f, &cur, &cfg);
            evals += res.evals;
            cur = res.x.clone();
            let done = prev - res.value < 1e-9;
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
    let best = best.expect("at least one start");
    let residuals = arima_residuals(&unpack(&best.x, p, q, 1.0), returns);
    let sigma2 = residuals.iter().map(|e| e * e).sum::<f64>() / m;
    let params = unpack(&best.x, p, q, sigma2);
    let log_likelihood = -0.5 * m * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0);

    let mut theta = best.x.clone();
    theta.push(sigma2);
    let contribs = |th: &[f64]| -> Vec<f64> {
        let s2 = th[1 + p + q];
        arima_residuals(&unpack(th, p, q, s2), returns)
            .iter()
            .map(|e| -0.5 * ((2.0 * std::f64::consts::PI * s2).ln() + e * e / s2))
            .collect()
    };
    let se = robust_std_errors(&contribs, &theta);
    let names = params.names();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();

    let mut warnings = Vec::new();
    if !is_stationary(&params.a) {
        warnings.push("AR polynomial has a root on or inside the unit circle".to_string());
    }
    if !is_invertible(&params.b) {
        warnings.push("MA polynomial is not invertible".to_string());
    }
    if !best.converged {
        warnings.push(format!("optimizer stopped after {} evaluations without converging", best.evals));
    }
    Ok(ArimaFit {
        estimates: estimates(&names, &theta, &se),
        params,
        residuals,
        log_likelihood,
        evals,
        warnings,
    })
}
