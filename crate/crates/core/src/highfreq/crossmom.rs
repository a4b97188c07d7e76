use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

use super::spot::SpotVariancePanel;

/// Kernel mass below which a grid point is reported as missing.
const MIN_KERNEL_MASS: f64 = 1e-10;

/// Length of one observation interval, in days.
const DELTA: f64 = 1.0;

/// Powers `(p1, p2)` of the price and log-variance increments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MomentOrder {
    pub p1: u32,
    pub p2: u32,
}

impl MomentOrder {
    pub const fn new(p1: u32, p2: u32) -> Self {
        Self { p1, p2 }
    }

    pub fn payoff(self, d1: f64, d2: f64) -> f64 {
        d1.powi(self.p1 as i32) * d2.powi(self.p2 as i32)
    }
}

impl std::fmt::Display for MomentOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.p1, self.p2)
    }
}

/// The orders matched by [`nimm_calibrate`](super::nimm_calibrate).
pub const NIMM_ORDERS: [MomentOrder; 9] = [
    MomentOrder::new(1, 0),
    MomentOrder::new(2, 0),
    MomentOrder::new(0, 1),
    MomentOrder::new(0, 2),
    MomentOrder::new(1, 1),
    MomentOrder::new(2, 1),
    MomentOrder::new(2, 2),
    MomentOrder::new(4, 0),
    MomentOrder::new(0, 4),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MomentSource {
    /// Gaussian-kernel regression on observed increments.
    Kernel { bandwidth: f64 },
    /// Monte Carlo average under a parametric model.
    Simulated { replications: usize, substeps: usize },
}

/// `theta_{p1,p2}(sigma)` on a grid of daily spot volatilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossMomentEstimate {
    pub order: MomentOrder,
    pub sigma_grid: Vec<f64>,
    /// `None` where the kernel puts no mass.
    pub theta_hat: Vec<Option<f64>>,
    /// Sampling variance of each `theta_hat` entry.
    pub variance: Vec<Option<f64>>,
    pub source: MomentSource,
    /// Observation pairs used.
    pub n_obs: usize,
}

impl CrossMomentEstimate {
    pub fn bandwidth(&self) -> Option<f64> {
        match self.source {
            MomentSource::Kernel { bandwidth } => Some(bandwidth),
            MomentSource::Simulated { .. } => None,
        }
    }

    /// The same estimate with prices and volatilities measured in units `c`
    /// times larger (e.g. `c = 100` turns decimal into percent).
    pub fn rescaled(&self, c: f64) -> Self {
        let k = c.powi(self.order.p1 as i32);
        let source = match self.source {
            MomentSource::Kernel { bandwidth } => MomentSource::Kernel { bandwidth: bandwidth * c },
            s => s,
        };
        Self {
            order: self.order,
            sigma_grid: self.sigma_grid.iter().map(|s| s * c).collect(),
            theta_hat: self.theta_hat.iter().map(|t| t.map(|t| t * k)).collect(),
            variance: self.variance.iter().map(|v| v.map(|v| v * k * k)).collect(),
            source,
            n_obs: self.n_obs,
        }
    }
}

/// Day-over-day increments at a fixed knot, paired with the spot vol at the start.
struct Pairs {
    sigma: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

fn pairs(log_closes: &[Vec<f64>], spot: &SpotVariancePanel) -> Result<Pairs> {
    let days = spot.sigma2_hat.len();
    if log_closes.len() != days {
        return Err(Error::invalid(format!("{} days of prices but {days} days of spot variance", log_closes.len())));
    }
    let mut out = Pairs {
        sigma: vec![],
        d1: vec![],
        d2: vec![],
    };
    for t in 0..days.saturating_sub(1) {
        let knots = spot.sigma2_hat[t].len();
        if log_closes[t].len() != knots || log_closes[t + 1].len() != knots || spot.sigma2_hat[t + 1].len() != knots {
            return Err(Error::invalid(format!("knot count changes at day {t}")));
        }
        for i in 0..knots {
            let (v0, v1) = (spot.sigma2_hat[t][i], spot.sigma2_hat[t + 1][i]);
            // log variance increments need both ends positive
            if v0 > 0.0 && v1 > 0.0 {
                out.sigma.push(spot.daily_vol(t, i));
                out.d1.push(log_closes[t + 1][i] - log_closes[t][i]);
                out.d2.push(v1.ln() - v0.ln());
            }
        }
    }
    Ok(out)
}

/// `1.06 * sd * n^(-1/5)`.
pub fn default_bandwidth(sigmas: &[f64]) -> f64 {
    1.06 * stats::std_dev(sigmas) * (sigmas.len() as f64).powf(-0.2)
}

/// `n` points spread evenly in probability over the central 80% of `sigmas`,
/// with ties removed.
pub fn default_grid(sigmas: &[f64], n: usize) -> Vec<f64> {
    let mut sorted = sigmas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut grid: Vec<f64> = (0..n)
        .map(|k| {
            let p = if n == 1 { 0.5 } else { 0.1 + 0.8 * k as f64 / (n - 1) as f64 };
            stats::quantile_sorted(&sorted, p)
        })
        .collect();
    grid.dedup();
    grid
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("empty evaluation grid"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::invalid("evaluation grid must be finite and strictly increasing"));
    }
    Ok(())
}

fn kernel_estimate(p: &Pairs, order: MomentOrder, grid: &[f64], h: f64) -> CrossMomentEstimate {
    let x: Vec<f64> = p.d1.iter().zip(&p.d2).map(|(&a, &b)| order.payoff(a, b) / DELTA).collect();
    let (theta_hat, variance): (Vec<_>, Vec<_>) = grid
        .par_iter()
        .map(|&g| {
            let w: Vec<f64> = p.sigma.iter().map(|&s| stats::norm_pdf((s - g) / h)).collect();
            let mass: f64 = w.iter().sum();
            if mass < MIN_KERNEL_MASS {
                return (None, None);
            }
            let theta = w.iter().zip(&x).map(|(w, x)| w * x).sum::<f64>() / mass;
            let var = w.iter().zip(&x).map(|(w, x)| (w * (x - theta)).powi(2)).sum::<f64>() / (mass * mass);
            (Some(theta), Some(var))
        })
        .unzip();
    CrossMomentEstimate {
        order,
        sigma_grid: grid.to_vec(),
        theta_hat,
        variance,
        source: MomentSource::Kernel { bandwidth: h },
        n_obs: p.sigma.len(),
    }
}

/// Nadaraya-Watson estimate of `theta_{p1,p2}(sigma) = E[dlogS^p1 dlog(sigma^2)^p2 | sigma] / Delta`
/// from day-over-day increments at each knot. `log_closes[t][i]` is the log
/// price at the close of knot `i` on day `t`; `sigma` is the daily-rate spot vol.
pub fn cross_moment_kernel(
    log_closes: &[Vec<f64>],
    spot: &SpotVariancePanel,
    order: MomentOrder,
    grid: &[f64],
    h: f64,
) -> Result<CrossMomentEstimate> {
    if order.p1 == 0 && order.p2 == 0 {
        return Err(Error::invalid("moment order (0,0) is trivial"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!("bandwidth {h} must be positive")));
    }
    check_grid(grid)?;
    let p = pairs(log_closes, spot)?;
    if p.sigma.is_empty() {
        return Err(Error::DegenerateInput("no day-over-day pairs with positive spot variance".into()));
    }
    Ok(kernel_estimate(&p, order, grid, h))
}

/// Estimates for several orders on a shared grid and bandwidth. Defaults are
/// [`default_grid`] with `grid_points` points and [`default_bandwidth`].
pub fn cross_moments(
    log_closes: &[Vec<f64>],
    spot: &SpotVariancePanel,
    orders: &[MomentOrder],
    grid: Option<&[f64]>,
    grid_points: usize,
    h: Option<f64>,
) -> Result<Vec<CrossMomentEstimate>> {
    let p = pairs(log_closes, spot)?;
    if p.sigma.len() < 2 {
        return Err(Error::DegenerateInput("fewer than two day-over-day pairs with positive spot variance".into()));
    }
    let grid = match grid {
        Some(g) => g.to_vec(),
        None => default_grid(&p.sigma, grid_points),
    };
    check_grid(&grid)?;
    let h = h.unwrap_or_else(|| default_bandwidth(&p.sigma));
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::DegenerateInput(format!("bandwidth {h} is not positive")));
    }
    orders
        .iter()
        .map(|&o| {
            if o.p1 == 0 && o.p2 == 0 {
                return Err(Error::invalid("moment order (0,0) is trivial"));
            }
            Ok(kernel_estimate(&p, o, &grid, h))
        })
        .collect()
}
