use crate::error::{Error, Result};
use crate::stats;

use super::PosteriorSummary;

/// Flags the `k = ceil(lambda_hat * T)` most likely jump days. Days tied with
/// the k-th largest probability are all flagged; days with probability 0 never are.
pub fn detect_jumps(jump_probs: &[f64], lambda_hat: f64) -> Vec<u8> {
    let n = jump_probs.len();
    let k = ((lambda_hat * n as f64) - 1e-9).ceil().clamp(0.0, n as f64) as usize;
    if k == 0 {
        return vec![0; n];
    }
    let mut sorted = jump_probs.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let cutoff = sorted[k - 1];
    jump_probs.iter().map(|&p| u8::from(p >= cutoff && p > 0.0)).collect()
}

fn fit_error(y: &[f64], s: &PosteriorSummary, t: usize) -> f64 {
    y[t] - s.posterior_mean.mu - s.zy_given_jump[t] * f64::from(s.jumps[t])
}

/// `(Y_t - mu - Zy_t J_t) / sqrt(V_{t-1})` at posterior means and detected jumps.
pub fn standardized_residuals(returns: &[f64], summary: &PosteriorSummary) -> Result<Vec<f64>> {
    check_lengths(returns, summary)?;
    (0..returns.len())
        .map(|t| {
            let v = summary.v_mean[t];
            if v > 0.0 {
                Ok(fit_error(returns, summary, t) / v.sqrt())
            } else {
                Err(Error::Numerical(format!("non-positive smoothed variance {v} at day {t}")))
            }
        })
        .collect()
}

/// Mean squared one-step fit error `(Y_t - mu - Zy_t J_t)^2`.
pub fn mse(returns: &[f64], summary: &PosteriorSummary) -> f64 {
    if check_lengths(returns, summary).is_err() || returns.is_empty() {
        return f64::NAN;
    }
    (0..returns.len()).map(|t| fit_error(returns, summary, t).powi(2)).sum::<f64>() / returns.len() as f64
}

fn check_lengths(returns: &[f64], s: &PosteriorSummary) -> Result<()> {
    let n = returns.len();
    if s.jumps.len() != n || s.zy_given_jump.len() != n || s.v_mean.len() != n + 1 {
        return Err(Error::invalid(format!(
            "summary covers {} days but {n} returns were given",
            s.jumps.len()
        )));
    }
    Ok(())
}

/// `(standard normal quantile at (i - 0.5)/n, i-th smallest residual)`.
pub fn qq_points(residuals: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, r)| (stats::norm_quantile((i as f64 + 0.5) / n), r))
        .collect()
}
