use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadConfig};
use crate::rng::RngStream;
use crate::simulate::{br_step, BrParams, BrShocks, JumpRestriction};

use super::crossmom::{CrossMomentEstimate, MomentOrder, MomentSource, NIMM_ORDERS};

/// Parameters kept non-negative by squaring.
const INTENSITIES: [usize; 3] = [18, 19, 20];
/// Standard deviations, kept non-negative by `|u|`.
const SCALES: [usize; 6] = [5, 9, 10, 11, 15, 16];
const RHO_J: usize = 17;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NimmConfig {
    /// Euler steps per one-day moment interval.
    pub substeps: usize,
    /// Simulated one-day paths per grid point.
    pub replications: usize,
    pub seed: RngStream,
    /// Simplex searches after the first, each restarted from the best point so far.
    pub restarts: usize,
    /// Objective evaluations per simplex search.
    pub max_evals: usize,
    /// Moment variances are floored at this fraction of their median over the grid.
    pub variance_floor: f64,
}

impl Default for NimmConfig {
    fn default() -> Self {
        Self {
            substeps: 20,
            replications: 2000,
            seed: RngStream::from_seed(0),
            restarts: 2,
            max_evals: 4000,
            variance_floor: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NimmFit {
    pub params: BrParams,
    pub restriction: JumpRestriction,
    pub objective: f64,
    /// Objective at the (restricted) starting point.
    pub init_objective: f64,
    pub evals: usize,
    /// Whether the last simplex search met its tolerance before the evaluation cap.
    pub converged: bool,
    pub free_params: Vec<String>,
}

/// Shocks for `replications` one-day paths, reused for every grid point and
/// every parameter value so that the simulated objective is smooth in the parameters.
#[derive(Debug, Clone)]
pub struct MomentShocks {
    substeps: usize,
    shocks: Vec<BrShocks>,
}

impl MomentShocks {
    /// Path `r` reads substream `r` of `seed`.
    pub fn draw(seed: RngStream, replications: usize, substeps: usize) -> Self {
        let shocks = (0..replications as u64)
            .into_par_iter()
            .flat_map_iter(|r| {
                let mut rng = seed.substream(r).rng();
                (0..substeps).map(move |_| BrShocks::draw(&mut rng)).collect::<Vec<_>>()
            })
            .collect();
        Self { substeps, shocks }
    }

    pub fn replications(&self) -> usize {
        self.shocks.len() / self.substeps.max(1)
    }
}

/// Mean and Monte Carlo variance of the mean of every payoff at one grid point.
fn moments_at(p: &BrParams, sigma: f64, orders: &[MomentOrder], sh: &MomentShocks) -> Vec<(f64, f64)> {
    let dt = 1.0 / sh.substeps as f64;
    let h0 = 2.0 * sigma.ln();
    let mut sum = vec![0.0; orders.len()];
    let mut sum_sq = vec![0.0; orders.len()];
    for path in sh.shocks.chunks_exact(sh.substeps) {
        let mut h = h0;
        let mut d1 = 0.0;
        for s in path {
            let inc = br_step(p, h, dt, s);
            d1 += inc.dlog_s;
            h = inc.log_var;
        }
        let d2 = h - h0;
        for (k, o) in orders.iter().enumerate() {
            let x = o.payoff(d1, d2);
            sum[k] += x;
            sum_sq[k] += x * x;
        }
    }
    let n = sh.replications() as f64;
    sum.iter()
        .zip(&sum_sq)
        .map(|(&s, &q)| {
            let m = s / n;
            (m, ((q / n - m * m) / (n - 1.0)).max(0.0))
        })
        .collect()
}

/// Simulated `theta_{p1,p2}(sigma)` over a one-day interval, starting each path
/// at spot vol `sigma` (percent per day) and taking `substeps` Euler steps.
pub fn model_moments(p: &BrParams, sigma_grid: &[f64], orders: &[MomentOrder], shocks: &MomentShocks) -> Vec<CrossMomentEstimate> {
    let per_grid: Vec<Vec<(f64, f64)>> = sigma_grid.par_iter().map(|&s| moments_at(p, s, orders, shocks)).collect();
    orders
        .iter()
        .enumerate()
        .map(|(k, &order)| CrossMomentEstimate {
            order,
            sigma_grid: sigma_grid.to_vec(),
            theta_hat: per_grid.iter().map(|g| Some(g[k].0)).collect(),
            variance: per_grid.iter().map(|g| Some(g[k].1)).collect(),
            source: MomentSource::Simulated {
                replications: shocks.replications(),
                substeps: shocks.substeps,
            },
            n_obs: shocks.replications(),
        })
        .collect()
}

/// Target moments with their weights, flattened over orders and grid points.
struct Targets {
    grid: Vec<f64>,
    orders: Vec<MomentOrder>,
    /// `(order index, grid index, target, weight)`.
    terms: Vec<(usize, usize, f64, f64)>,
}

impl Targets {
    fn new(moments: &[CrossMomentEstimate], floor: f64) -> Result<Self> {
        let first = moments.first().ok_or_else(|| Error::invalid("no moments to match"))?;
        let grid = first.sigma_grid.clone();
        if grid.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::invalid("moment grid must be positive spot volatilities"));
        }
        for need in NIMM_ORDERS {
            if !moments.iter().any(|m| m.order == need) {
                return Err(Error::invalid(format!("moment order {need} is missing")));
            }
        }
        let mut terms = vec![];
        let mut orders = vec![];
        for m in moments {
            if m.sigma_grid != grid {
                return Err(Error::invalid(format!("moment {} uses a different grid", m.order)));
            }
            let mut vars: Vec<f64> = m.variance.iter().flatten().copied().filter(|v| *v > 0.0).collect();
            vars.sort_by(f64::total_cmp);
            let min_var = if vars.is_empty() {
                1.0
            } else {
                floor * crate::stats::quantile_sorted(&vars, 0.5)
            };
            let k = orders.len();
            orders.push(m.order);
            for (g, (theta, var)) in m.theta_hat.iter().zip(&m.variance).enumerate() {
                if let (Some(theta), Some(var)) = (theta, var) {
                    terms.push((k, g, *theta, 1.0 / var.max(min_var)));
                }
            }
        }
        Ok(Self { grid, orders, terms })
    }

    fn objective(&self, p: &BrParams, shocks: &MomentShocks) -> f64 {
        if p.validate().is_err() {
            return f64::INFINITY;
        }
        let model: Vec<Vec<(f64, f64)>> = self.grid.par_iter().map(|&s| moments_at(p, s, &self.orders, shocks)).collect();
        self.terms
            .iter()
            .map(|&(k, g, target, w)| w * (target - model[g][k].0).powi(2))
            .sum()
    }
}

/// Weighted distance between target moments and the model's simulated moments.
pub fn nimm_objective(moments: &[CrossMomentEstimate], p: &BrParams, shocks: &MomentShocks, variance_floor: f64) -> Result<f64> {
    Ok(Targets::new(moments, variance_floor)?.objective(p, shocks))
}

fn to_free(a: &[f64; BrParams::DIM], i: usize) -> f64 {
    if INTENSITIES.contains(&i) {
        a[i].sqrt()
    } else if i == RHO_J {
        a[i].asin()
    } else {
        a[i]
    }
}

fn from_free(u: f64, i: usize) -> f64 {
    if INTENSITIES.contains(&i) {
        u * u
    } else if SCALES.contains(&i) {
        u.abs()
    } else if i == RHO_J {
        u.sin()
    } else {
        u
    }
}

/// Minimum-distance fit of `BrParams` to kernel cross-moments in percent/day
/// units (see [`CrossMomentEstimate::rescaled`]). Parameters pinned by
/// `restriction` are held at 0; the rest start from `init`.
pub fn nimm_calibrate(
    moments: &[CrossMomentEstimate],
    init: &BrParams,
    restriction: JumpRestriction,
    cfg: &NimmConfig,
) -> Result<NimmFit> {
    init.validate()?;
    if cfg.substeps == 0 || cfg.replications < 2 {
        return Err(Error::invalid("need at least one substep and two replications"));
    }
    let targets = Targets::new(moments, cfg.variance_floor)?;
    let shocks = MomentShocks::draw(cfg.seed, cfg.replications, cfg.substeps);

    let start = restriction.apply(init).to_array();
    let pinned = restriction.pinned();
    let free: Vec<usize> = (0..BrParams::DIM).filter(|i| !pinned.contains(i)).collect();
    let build = |u: &[f64]| {
        let mut a = start;
        for (&i, &x) in free.iter().zip(u) {
            a[i] = from_free(x, i);
        }
        BrParams::from_array(a)
    };
    let mut objective = |u: &[f64]| targets.objective(&build(u), &shocks);

    let mut x: Vec<f64> = free.iter().map(|&i| to_free(&start, i)).collect();
    let init_objective = objective(&x);
    let mut best = init_objective;
    let mut evals = 1;
    let mut converged = false;
    for k in 0..=cfg.restarts {
        let nm = NelderMeadConfig {
            max_evals: cfg.max_evals,
            f_tol: 1e-10 * best.abs().max(1e-300),
            x_tol: 1e-8,
            initial_step: 0.1 / f64::from(1u32 << k.min(16)),
        };
        let m = nelder_mead(&mut objective, &x, &nm);
        evals += m.evals;
        converged = m.converged;
        if m.value <= best {
            best = m.value;
            x = m.x;
        }
    }
    Ok(NimmFit {
        params: build(&x),
        restriction,
        objective: best,
        init_objective,
        evals,
        converged,
        free_params: free.iter().map(|&i| BrParams::NAMES[i].to_string()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        vec![0.5, 1.0, 1.5, 2.0, 3.0]
    }

    fn truth() -> BrParams {
        BrParams::diffusion(0.02, -0.2, -0.1, -0.1, 0.4)
    }

    #[test]
    fn transforms_round_trip() {
        let a = BrParams::btc_full().to_array();
        for i in 0..BrParams::DIM {
            assert!((from_free(to_free(&a, i), i) - a[i]).abs() < 1e-12, "{}", BrParams::NAMES[i]);
        }
        assert_eq!(from_free(-0.3, 18), 0.09);
        assert_eq!(from_free(-0.3, 5), 0.3);
    }

    #[test]
    fn shocks_do_not_depend_on_replication_count() {
        let a = MomentShocks::draw(RngStream::from_seed(3), 10, 4);
        let b = MomentShocks::draw(RngStream::from_seed(3), 20, 4);
        assert_eq!(a.replications(), 10);
        for (x, y) in a.shocks.iter().zip(&b.shocks) {
            assert_eq!(x.z1, y.z1);
        }
    }

    #[test]
    fn diffusion_moments_match_their_small_step_limits() {
        // constant vol, no drift in log variance: theta_20 = sigma^2, theta_10 = mu_r
        let p = BrParams::diffusion(0.05, 0.0, 0.0, 0.0, 0.0);
        let sh = MomentShocks::draw(RngStream::from_seed(1), 20000, 10);
        let m = model_moments(&p, &[1.0, 2.0], &[MomentOrder::new(1, 0), MomentOrder::new(2, 0)], &sh);
        for (g, s) in [1.0f64, 2.0].iter().enumerate() {
            let mean = m[0].theta_hat[g].unwrap();
            assert!((mean - 0.05).abs() < 4.0 * m[0].variance[g].unwrap().sqrt());
            let second = m[1].theta_hat[g].unwrap();
            let want = s * s + 0.05 * 0.05;
            assert!((second - want).abs() < 4.0 * m[1].variance[g].unwrap().sqrt(), "{second} vs {want}");
        }
    }

    #[test]
    fn missing_orders_are_rejected() {
        let sh = MomentShocks::draw(RngStream::from_seed(1), 50, 5);
        let m = model_moments(&truth(), &grid(), &NIMM_ORDERS[..8], &sh);
        let err = nimm_calibrate(&m, &truth(), JumpRestriction::NoJumps, &NimmConfig::default()).unwrap_err();
        assert!(err.to_string().contains("(0,4)"));
    }

    #[test]
    fn inadmissible_init_is_rejected() {
        let sh = MomentShocks::draw(RngStream::from_seed(1), 50, 5);
        let m = model_moments(&truth(), &grid(), &NIMM_ORDERS, &sh);
        let mut bad = truth();
        bad.lambda_r = -0.1;
        assert!(matches!(
            nimm_calibrate(&m, &bad, JumpRestriction::Full, &NimmConfig::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn restriction_pins_common_jump_parameters() {
        let sh = MomentShocks::draw(RngStream::from_seed(5), 200, 10);
        let m = model_moments(&BrParams::btc_no_cojumps(), &grid(), &NIMM_ORDERS, &sh);
        let cfg = NimmConfig {
            replications: 100,
            substeps: 10,
            restarts: 0,
            max_evals: 150,
            seed: RngStream::from_seed(6),
            ..NimmConfig::default()
        };
        let fit = nimm_calibrate(&m, &BrParams::btc_full(), JumpRestriction::NoCojumps, &cfg).unwrap();
        let a = fit.params.to_array();
        for i in JumpRestriction::NoCojumps.pinned() {
            assert_eq!(a[i], 0.0, "{}", BrParams::NAMES[i]);
        }
        assert_eq!(fit.free_params.len(), BrParams::DIM - 9);
        assert!(fit.objective <= fit.init_objective);
        fit.params.validate().unwrap();
    }

    #[test]
    fn common_random_numbers_make_the_truth_a_zero() {
        let cfg = NimmConfig {
            replications: 300,
            substeps: 10,
            seed: RngStream::from_seed(9),
            ..NimmConfig::default()
        };
        let sh = MomentShocks::draw(cfg.seed, cfg.replications, cfg.substeps);
        let m = model_moments(&truth(), &grid(), &NIMM_ORDERS, &sh);
        assert_eq!(nimm_objective(&m, &truth(), &sh, cfg.variance_floor).unwrap(), 0.0);
        let mut off = truth();
        off.m1 = -0.2;
        assert!(nimm_objective(&m, &off, &sh, cfg.variance_floor).unwrap() > 0.0);
    }
}
