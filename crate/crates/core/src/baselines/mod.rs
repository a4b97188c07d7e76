//! Classical time-series baselines: ARMA by conditional sum of squares,
//! t-GARCH(1,1) and t-EGARCH(1,1) by maximum likelihood, and residual
//! diagnostics.
//!
//! Both GARCH likelihoods use Student-t innovations standardized to unit
//! variance, and a constant mean. Standard errors are the sandwich
//! `H⁻¹ B H⁻¹` with `B` the outer product of per-observation scores.

mod arima;
mod garch;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::optim;

pub use arima::{
    arima_residuals, fit_arima, is_invertible, is_stationary, one_step_forecast, simulate_arma, ArimaFit,
    ArimaParams,
};
pub use garch::{
    egarch_filter, egarch_log_filter, fit_tegarch, fit_tgarch, garch_filter, simulate_tegarch, simulate_tgarch,
    std_t_abs_mean, std_t_log_density, tegarch_log_likelihood, tgarch_log_likelihood, GarchFit, TEgarchParams,
    TGarchParams,
};

/// Ljung-Box `Q = n(n+2) Σ_{k=1..lags} r_k²/(n-k)` and its upper-tail p-value
/// under chi-square(`lags`). No degrees of freedom are removed for fitted
/// ARMA coefficients.
pub fn ljung_box(residuals: &[f64], lags: usize) -> Result<(f64, f64)> {
    let n = residuals.len();
    if lags == 0 || 4 * lags >= n {
        return Err(Error::invalid(format!("need 0 < lags < n/4, got lags {lags} with n {n}")));
    }
    let m = crate::stats::mean(residuals);
    let d: Vec<f64> = residuals.iter().map(|x| x - m).collect();
    let c0: f64 = d.iter().map(|x| x * x).sum();
    if !(c0 > 0.0) || !c0.is_finite() {
        return Err(Error::DegenerateInput("residuals have zero or non-finite variance".into()));
    }
    let nf = n as f64;
    let q = (1..=lags)
        .map(|k| {
            let r = d[k..].iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / c0;
            r * r / (nf - k as f64)
        })
        .sum::<f64>()
        * nf
        * (nf + 2.0);
    let chi = ChiSquared::new(lags as f64).expect("positive degrees of freedom");
    Ok((q, chi.sf(q)))
}

/// QQ points against the unit-variance Student-t(`nu`):
/// `(quantile at (i - 0.5)/n, i-th smallest residual)`.
pub fn qq_points_t(residuals: &[f64], nu: f64) -> Result<Vec<(f64, f64)>> {
    if !(nu > 2.0) {
        return Err(Error::invalid(format!("degrees of freedom must exceed 2, got {nu}")));
    }
    let t = StudentsT::new(0.0, ((nu - 2.0) / nu).sqrt(), nu).map_err(|e| Error::invalid(e.to_string()))?;
    let mut sorted = residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, r)| (t.inverse_cdf((i as f64 + 0.5) / n), r))
        .collect())
}

/// A parameter estimate with its robust standard error (`None` when the
/// sandwich is singular or not finite).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub std_error: Option<f64>,
}

impl Estimate {
    pub fn t_value(&self) -> Option<f64> {
        self.std_error.map(|s| self.value / s)
    }
}

pub(crate) fn estimates(names: &[&str], theta: &[f64], se: &[Option<f64>]) -> Vec<Estimate> {
    names
        .iter()
        .zip(theta)
        .zip(se)
        .map(|((n, &v), &s)| Estimate {
            name: n.to_string(),
            value: v,
            std_error: s,
        })
        .collect()
}

/// Sandwich standard errors from per-observation log-likelihood contributions.
pub(crate) fn robust_std_errors(contribs: &dyn Fn(&[f64]) -> Vec<f64>, theta: &[f64]) -> Vec<Option<f64>> {
    const REL: f64 = 1e-4;
    let k = theta.len();
    let total = |x: &[f64]| contribs(x).iter().sum::<f64>();
    let h = optim::hessian(&total, theta, REL);
    let Some(h_inv) = optim::invert(&h) else {
        return vec![None; k];
    };
    // per-observation scores by central differences of the contribution vector
    let mut scores: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut x = theta.to_vec();
    for i in 0..k {
        let step = REL * theta[i].abs().max(1e-4);
        x[i] = theta[i] + step;
        let up = contribs(&x);
        x[i] = theta[i] - step;
        let down = contribs(&x);
        x[i] = theta[i];
        scores.push(up.iter().zip(&down).map(|(u, d)| (u - d) / (2.0 * step)).collect());
    }
    let b: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| scores[i].iter().zip(&scores[j]).map(|(a, c)| a * c).sum()).collect())
        .collect();
    let cov = optim::mat_mul(&optim::mat_mul(&h_inv, &b), &h_inv);
    (0..k)
        .map(|i| {
            let v = cov[i][i];
            (v.is_finite() && v > 0.0).then(|| v.sqrt())
        })
        .collect()
}
