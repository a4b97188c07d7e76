use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::panel::{IntradayPanel, MINUTES_PER_DAY};

pub const DEFAULT_THRESHOLD_MULT: f64 = 4.0;

/// Exponent on the sampling interval in the truncation threshold.
const THRESHOLD_EXPONENT: f64 = 0.49;

/// Per-knot spot variance estimates (decimal, variance over one knot window).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpotVariancePanel {
    pub sigma2_hat: Vec<Vec<f64>>,
    /// Number of returns above the threshold in each window.
    pub n_j: Vec<Vec<usize>>,
    pub minutes_per_knot: usize,
}

impl SpotVariancePanel {
    /// Spot volatility of knot `(t, i)` as a daily rate.
    pub fn daily_vol(&self, t: usize, i: usize) -> f64 {
        (self.sigma2_hat[t][i] * self.knots_per_day_equiv()).sqrt()
    }

    /// Average over knots of the daily-rate spot volatility, one value per day.
    pub fn daily_average_vol(&self) -> Vec<f64> {
        (0..self.sigma2_hat.len())
            .map(|t| {
                let n = self.sigma2_hat[t].len();
                (0..n).map(|i| self.daily_vol(t, i)).sum::<f64>() / n as f64
            })
            .collect()
    }

    fn knots_per_day_equiv(&self) -> f64 {
        MINUTES_PER_DAY as f64 / self.minutes_per_knot as f64
    }
}

/// Bipower variation of one window, `M/(M-1) * (pi/2) * sum |r_k||r_{k-1}|`.
fn bipower(w: &[f64]) -> f64 {
    let m = w.len() as f64;
    let s: f64 = w.windows(2).map(|p| p[0].abs() * p[1].abs()).sum();
    m / (m - 1.0) * FRAC_PI_2 * s
}

/// Threshold bipower variation of one window. Returns `(sigma2_hat, n_j)`, or
/// `None` with the flagged count when fewer than two retained terms remain.
fn threshold_bipower(w: &[f64], threshold_mult: f64) -> std::result::Result<(f64, usize), usize> {
    let m = w.len();
    let theta = if threshold_mult.is_infinite() {
        f64::INFINITY
    } else {
        threshold_mult * bipower(w).sqrt() * (1.0 / m as f64).powf(THRESHOLD_EXPONENT)
    };
    let keep: Vec<bool> = w.iter().map(|r| r.abs() <= theta).collect();
    let n_j = keep.iter().filter(|k| !**k).count();
    if m <= 1 + n_j {
        return Err(n_j);
    }
    let s: f64 = (1..m)
        .filter(|&k| keep[k] && keep[k - 1])
        .map(|k| w[k].abs() * w[k - 1].abs())
        .sum();
    Ok((m as f64 / (m - 1 - n_j) as f64 * FRAC_PI_2 * s, n_j))
}

/// Jump-robust spot variance for every knot of the panel. The threshold for
/// each window is `threshold_mult * sqrt(BV) * (1/M)^0.49` with `BV` the plain
/// bipower variation of that window and `M` its number of returns; an infinite
/// `threshold_mult` gives plain bipower variation.
pub fn spot_variance_tbv(panel: &IntradayPanel, threshold_mult: f64) -> Result<SpotVariancePanel> {
    if !(threshold_mult > 0.0) {
        return Err(Error::invalid(format!("threshold multiplier {threshold_mult} must be positive")));
    }
    let mut sigma2_hat = Vec::with_capacity(panel.days());
    let mut n_j = Vec::with_capacity(panel.days());
    for t in 0..panel.days() {
        let mut s_row = Vec::with_capacity(panel.knots_per_day());
        let mut n_row = Vec::with_capacity(panel.knots_per_day());
        for i in 0..panel.knots_per_day() {
            let w = panel.window(t, i);
            let (s, n) = threshold_bipower(w, threshold_mult).map_err(|flagged| Error::DegenerateWindow {
                day: t,
                knot: i,
                flagged,
                len: w.len(),
            })?;
            s_row.push(s);
            n_row.push(n);
        }
        sigma2_hat.push(s_row);
        n_j.push(n_row);
    }
    Ok(SpotVariancePanel {
        sigma2_hat,
        n_j,
        minutes_per_knot: panel.minutes_per_knot(),
    })
}
