use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::series::{ReturnSeries, Units};
use crate::simulate::{LatentPath, ModelFlavor, SvcjParams};
use crate::stats;

use super::conditionals::{self as cond, State};
use super::{AcceptanceRates, McmcConfig, PosteriorChain, PriorSpec};

const INIT_WINDOW: usize = 20;
const V_FLOOR: f64 = 1e-6;
/// A carried-forward variance jump is cut once `|beta|^k` falls below this.
const AFTERMATH_TOL: f64 = 1e-3;
const AFTERMATH_MAX: usize = 60;
/// Random-walk scale of the jump-size shift, relative to `mu_v`.
const JUMP_SHIFT_SCALE: f64 = 0.5;

fn normal_log_density(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (stats::LN_2PI + var.ln() + (x - mean) * (x - mean) / var)
}

fn zy_prior_log_density(p: &SvcjParams, zy: f64, zv: f64) -> f64 {
    normal_log_density(zy, p.mu_y + p.rho_j * zv, p.sigma_y * p.sigma_y)
}

/// Centered 20-day sample variance of returns, one value per `V_0 .. V_T`.
fn rolling_variance(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let w = INIT_WINDOW.min(n);
    (0..=n)
        .map(|t| {
            let lo = t.saturating_sub(w / 2).min(n - w);
            let var = if w >= 2 { stats::variance(&y[lo..lo + w]) } else { 0.0 };
            var.max(V_FLOOR)
        })
        .collect()
}

fn initial_state(y: &[f64], flavor: ModelFlavor, priors: &PriorSpec) -> State {
    let v = rolling_variance(y);
    let n = y.len();
    let mut p = SvcjParams {
        mu: stats::mean(y),
        mu_y: 0.0,
        sigma_y: (priors.sigma_y2.scale / (priors.sigma_y2.shape + 1.0)).sqrt(),
        lambda: 0.05,
        alpha: stats::mean(&v),
        beta: 0.0,
        rho: 0.0,
        sigma_v: (priors.sigma_v2.scale / (priors.sigma_v2.shape + 1.0)).sqrt(),
        rho_j: 0.0,
        mu_v: priors.mu_v.scale / (priors.mu_v.shape + 1.0),
    };
    p = p.restricted(flavor);
    State {
        p,
        v,
        j: vec![0; n],
        zy: vec![0.0; n],
        zv: vec![0.0; n],
    }
}

fn state_dump(s: &State) -> String {
    let vmin = s.v.iter().copied().fold(f64::INFINITY, f64::min);
    let vmax = s.v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    format!("params: {:?}\nV range: [{vmin:e}, {vmax:e}] over {} sites", s.p, s.v.len())
}

/// Robbins-Monro step on a log proposal scale.
#[inline]
fn adapt(log_scale: &mut f64, accepted: bool, target: f64, iter: usize) {
    let gain = (iter as f64 + 1.0).powf(-0.6);
    *log_scale += gain * (f64::from(u8::from(accepted)) - target);
}

struct Sampler<'a> {
    y: &'a [f64],
    flavor: ModelFlavor,
    priors: PriorSpec,
    s: State,
    rho_log_scale: f64,
    v_log_scales: Vec<f64>,
}

#[derive(Default)]
struct Counts {
    rho: usize,
    sigma_v2: usize,
    v: Vec<usize>,
}

impl Sampler<'_> {
    fn update_jumps<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for t in 0..self.y.len() {
            let (j, zy, zv) = cond::draw_jump(rng, self.y, &self.s, self.flavor, t);
            self.s.j[t] = j;
            self.s.zy[t] = zy;
            self.s.zv[t] = zv;
        }
    }

    /// Days `t + 1 ..= t + k` over which a variance jump on day `t` is carried forward.
    fn aftermath_len(&self, t: usize) -> usize {
        let b = self.s.p.beta.abs();
        let k = if b < 1e-3 { 1 } else { ((AFTERMATH_TOL.ln() / b.ln()).ceil() as usize).clamp(1, AFTERMATH_MAX) };
        k.min(self.y.len() - t)
    }

    /// Log likelihood of transitions `t ..= t + k` (clamped to the sample), with
    /// `V` shifted by `shift[i]` at site `t + 1 + i`; an empty `shift` means none.
    fn window_log_lik(&self, t: usize, k: usize, shift: &[f64], zy_t: f64, zv_t: f64) -> f64 {
        let s = &self.s;
        let v = |i: usize| if i > t && i - t - 1 < shift.len() { s.v[i] + shift[i - t - 1] } else { s.v[i] };
        let last = (t + k).min(self.y.len() - 1);
        (t..=last)
            .map(|u| {
                let (zy, zv) = if u == t { (zy_t, zv_t) } else { (s.zy[u], s.zv[u]) };
                cond::log_transition(&s.p, self.y[u], v(u), v(u + 1), zy, zv)
            })
            .sum()
    }

    fn apply_shift(&mut self, t: usize, shift: &[f64]) {
        for (k, d) in shift.iter().enumerate() {
            self.s.v[t + 1 + k] += d;
        }
    }

    /// Moves that carry a variance jump together with its decaying effect on the
    /// following days: a jump birth or death with sizes and the shifted path, and a
    /// shift of an existing jump size. Both keep every later variance residual
    /// unchanged, so they move between states the single-site updates separate.
    fn update_jump_paths<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        if !self.flavor.has_variance_jumps() {
            return;
        }
        let mut shift = Vec::with_capacity(AFTERMATH_MAX);
        for t in 0..self.y.len() {
            let p = self.s.p;
            let k = self.aftermath_len(t);
            let fill = |shift: &mut Vec<f64>, c: f64| {
                shift.clear();
                let mut d = c;
                for _ in 0..k {
                    shift.push(d);
                    d *= p.beta;
                }
            };
            let shifted_ok = |s: &State, shift: &[f64]| shift.iter().enumerate().all(|(i, d)| s.v[t + 1 + i] + d > 0.0);
            let before = self.window_log_lik(t, k, &[], self.s.zy[t], self.s.zv[t]);
            let prior_odds = p.lambda.ln() - (1.0 - p.lambda).ln();
            let a = self.y[t] - p.mu;

            if self.s.j[t] == 0 {
                // birth: Zv from its prior, Zy from its conditional on the shifted path
                let zv = p.mu_v * rng.sample::<f64, _>(rand_distr::Exp1);
                fill(&mut shift, zv);
                if !shifted_ok(&self.s, &shift) {
                    continue;
                }
                let v1 = self.s.v[t + 1] + zv;
                let (m, var) = cond::zy_conditional(&p, a, v1 - p.alpha - p.beta * self.s.v[t], self.s.v[t], zv);
                let zy = m + var.sqrt() * stats::standard_normal(rng);
                let after = self.window_log_lik(t, k, &shift, zy, zv);
                let log_ratio = prior_odds + after - before + zy_prior_log_density(&p, zy, zv) - normal_log_density(zy, m, var);
                if rng.random::<f64>().ln() < log_ratio {
                    self.apply_shift(t, &shift);
                    self.s.j[t] = 1;
                    self.s.zy[t] = zy;
                    self.s.zv[t] = zv;
                }
            } else {
                let (zy, zv) = (self.s.zy[t], self.s.zv[t]);
                let (m, var) = cond::zy_conditional(&p, a, self.s.v[t + 1] - p.alpha - p.beta * self.s.v[t], self.s.v[t], zv);
                fill(&mut shift, -zv);
                if shifted_ok(&self.s, &shift) {
                    // death: the reverse of the birth move above
                    let after = self.window_log_lik(t, k, &shift, 0.0, 0.0);
                    let log_ratio = -prior_odds + after - before - zy_prior_log_density(&p, zy, zv) + normal_log_density(zy, m, var);
                    if rng.random::<f64>().ln() < log_ratio {
                        self.apply_shift(t, &shift);
                        self.s.j[t] = 0;
                        self.s.zy[t] = 0.0;
                        self.s.zv[t] = 0.0;
                        continue;
                    }
                }
                // size shift with its aftermath; Zy moves with rho_j to stay on its regression line
                let c = JUMP_SHIFT_SCALE * p.mu_v * stats::standard_normal(rng);
                let zv_new = zv + c;
                if zv_new < 0.0 {
                    continue;
                }
                fill(&mut shift, c);
                if !shifted_ok(&self.s, &shift) {
                    continue;
                }
                let zy_new = zy + p.rho_j * c;
                let after = self.window_log_lik(t, k, &shift, zy_new, zv_new);
                let log_ratio = after - before - c / p.mu_v;
                if rng.random::<f64>().ln() < log_ratio {
                    self.apply_shift(t, &shift);
                    self.s.zy[t] = zy_new;
                    self.s.zv[t] = zv_new;
                }
            }
        }
    }

    /// Log conditional density of site `t` at value `v`, plus the log Jacobian of
    /// the log-scale proposal.
    fn v_site_log_target(&self, t: usize, v: f64) -> f64 {
        let (y, s) = (self.y, &self.s);
        let mut lp = v.ln();
        if t > 0 {
            lp += cond::log_transition(&s.p, y[t - 1], s.v[t - 1], v, s.zy[t - 1], s.zv[t - 1]);
        }
        if t < y.len() {
            lp += cond::log_transition(&s.p, y[t], v, s.v[t + 1], s.zy[t], s.zv[t]);
        }
        lp
    }

    fn update_variances<R: Rng + ?Sized>(&mut self, rng: &mut R, adapt_iter: Option<usize>, target: f64, counts: &mut Counts) {
        for t in 0..self.s.v.len() {
            let cur = self.s.v[t];
            let prop = cur * (self.v_log_scales[t].exp() * stats::standard_normal(rng)).exp();
            let log_ratio = self.v_site_log_target(t, prop) - self.v_site_log_target(t, cur);
            let u: f64 = rng.random();
            let accepted = prop > 0.0 && prop.is_finite() && u.ln() < log_ratio;
            if accepted {
                self.s.v[t] = prop;
                counts.v[t] += 1;
            }
            if let Some(k) = adapt_iter {
                adapt(&mut self.v_log_scales[t], accepted, target, k);
            }
        }
    }

    fn update_parameters<R: Rng + ?Sized>(&mut self, rng: &mut R, adapt_iter: Option<usize>, target: f64, counts: &mut Counts) {
        let y = self.y;
        let pr = self.priors;

        let (m, var) = cond::mu_posterior(y, &self.s, pr.mu);
        self.s.p.mu = m + var.sqrt() * stats::standard_normal(rng);

        let (mean, prec) = cond::alpha_beta_posterior(y, &self.s, pr.alpha, pr.beta);
        let [a, b] = cond::draw_alpha_beta(rng, mean, prec);
        self.s.p.alpha = a;
        self.s.p.beta = b;

        let (x, acc) = cond::draw_sigma_v2(rng, y, &self.s, pr.sigma_v2);
        self.s.p.sigma_v = x.sqrt();
        counts.sigma_v2 += usize::from(acc);

        let st = cond::rho_stats(y, &self.s);
        let n = y.len();
        let cur = self.s.p.rho;
        let prop = cur + self.rho_log_scale.exp() * stats::standard_normal(rng);
        let inside = prop > pr.rho.lower && prop < pr.rho.upper && prop.abs() < 1.0;
        let u: f64 = rng.random();
        let accepted = inside && u.ln() < cond::rho_log_lik(n, st, prop) - cond::rho_log_lik(n, st, cur);
        if accepted {
            self.s.p.rho = prop;
            counts.rho += 1;
        }
        if let Some(k) = adapt_iter {
            adapt(&mut self.rho_log_scale, accepted, target, k);
        }

        if self.flavor.has_jumps() {
            let (m, var) = cond::mu_y_posterior(&self.s, pr.mu_y);
            self.s.p.mu_y = m + var.sqrt() * stats::standard_normal(rng);
            if self.flavor.has_variance_jumps() {
                let (m, var) = cond::rho_j_posterior(&self.s, pr.rho_j);
                self.s.p.rho_j = m + var.sqrt() * stats::standard_normal(rng);
            }
            let post = cond::sigma_y2_posterior(&self.s, pr.sigma_y2);
            self.s.p.sigma_y = stats::inv_gamma(rng, post.shape, post.scale).sqrt();
            let js = cond::jump_stats(&self.s);
            if self.flavor.has_variance_jumps() {
                let post = cond::mu_v_posterior(js, pr.mu_v);
                self.s.p.mu_v = stats::inv_gamma(rng, post.shape, post.scale);
            }
            let (a, b) = cond::lambda_posterior(js, n, &pr);
            self.s.p.lambda = stats::beta(rng, a, b);
        }
    }
}

/// Fits one chain. Returns must be in percent units.
pub fn fit_svcj(returns: &ReturnSeries, flavor: ModelFlavor, priors: &PriorSpec, cfg: &McmcConfig) -> Result<PosteriorChain> {
    if returns.units() != Units::Percent {
        return Err(Error::invalid("fit_svcj expects percent returns; rescale the series first"));
    }
    fit_values(returns.values(), flavor, priors, cfg)
}

pub(crate) fn fit_values(y: &[f64], flavor: ModelFlavor, priors: &PriorSpec, cfg: &McmcConfig) -> Result<PosteriorChain> {
    priors.validate()?;
    cfg.validate()?;
    if y.len() < 2 {
        return Err(Error::invalid("need at least two returns"));
    }
    let mut warnings = Vec::new();
    if y.len() < 100 {
        warnings.push(format!("only {} returns; posterior will be dominated by the priors", y.len()));
    }

    let s = initial_state(y, flavor, priors);
    run_chain(y, flavor, priors, cfg, s, warnings)
}

fn run_chain(y: &[f64], flavor: ModelFlavor, priors: &PriorSpec, cfg: &McmcConfig, s: State, warnings: Vec<String>) -> Result<PosteriorChain> {
    let ll = cond::log_likelihood(y, &s);
    if !ll.is_finite() {
        return Err(Error::Initialization {
            reason: format!("log-likelihood at the initial state is {ll}"),
            state: state_dump(&s),
        });
    }

    let n = y.len();
    let mut sampler = Sampler {
        y,
        flavor,
        priors: *priors,
        s,
        rho_log_scale: (0.05f64).ln(),
        v_log_scales: vec![(0.3f64).ln(); n + 1],
    };
    let mut rng = cfg.seed.rng();
    let mut counts = Counts {
        v: vec![0; n + 1],
        ..Default::default()
    };
    let mut draws = Vec::with_capacity(cfg.iterations);
    let mut latent_draws = Vec::new();
    let mut jump_probs = vec![0.0; n];
    let mut v_sum = vec![0.0; n + 1];
    let mut zy_sum = vec![0.0; n];
    let mut zv_sum = vec![0.0; n];

    for it in 0..cfg.iterations {
        let burning = it < cfg.burn_in;
        if it == cfg.burn_in {
            counts = Counts {
                v: vec![0; n + 1],
                ..Default::default()
            };
        }
        let adapt_iter = burning.then_some(it);
        sampler.update_jumps(&mut rng);
        sampler.update_jump_paths(&mut rng);
        sampler.update_variances(&mut rng, adapt_iter, cfg.mh_target_accept, &mut counts);
        sampler.update_parameters(&mut rng, adapt_iter, cfg.mh_target_accept, &mut counts);

        let s = &sampler.s;
        if !s.p.to_array().iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite parameter draw at iteration {it}\n{}", state_dump(s))));
        }
        draws.push(s.p);
        if cfg.latent_thin > 0 && (it + 1) % cfg.latent_thin == 0 {
            latent_draws.push(LatentPath {
                v: s.v.clone(),
                j: s.j.clone(),
                zy: s.zy.clone(),
                zv: s.zv.clone(),
            });
        }
        if !burning {
            for t in 0..n {
                if s.j[t] == 1 {
                    jump_probs[t] += 1.0;
                    zy_sum[t] += s.zy[t];
                    zv_sum[t] += s.zv[t];
                }
            }
            for (acc, v) in v_sum.iter_mut().zip(&s.v) {
                *acc += v;
            }
        }
    }

    let kept = (cfg.iterations - cfg.burn_in) as f64;
    let zy_given_jump = zy_sum.iter().zip(&jump_probs).map(|(s, c)| if *c > 0.0 { s / c } else { 0.0 }).collect();
    let zv_given_jump = zv_sum.iter().zip(&jump_probs).map(|(s, c)| if *c > 0.0 { s / c } else { 0.0 }).collect();
    let jump_probs = jump_probs.iter().map(|c| c / kept).collect();
    let v_mean = v_sum.iter().map(|v| v / kept).collect();
    let site_rates: Vec<f64> = counts.v.iter().map(|&c| c as f64 / kept).collect();
    let acceptance = AcceptanceRates {
        rho: counts.rho as f64 / kept,
        sigma_v2: counts.sigma_v2 as f64 / kept,
        v: stats::mean(&site_rates),
        v_min: site_rates.iter().copied().fold(f64::INFINITY, f64::min),
        v_max: site_rates.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };

    Ok(PosteriorChain {
        flavor,
        priors: *priors,
        config: cfg.clone(),
        data: y.to_vec(),
        draws,
        latent_draws,
        latent_thin: cfg.latent_thin,
        acceptance,
        jump_probs,
        v_mean,
        zy_given_jump,
        zv_given_jump,
        warnings,
    })
}

/// Runs one chain per seed in parallel. Results are ordered as `seeds`.
pub fn fit_chains(
    returns: &ReturnSeries,
    flavor: ModelFlavor,
    priors: &PriorSpec,
    cfg: &McmcConfig,
    seeds: &[RngStream],
) -> Result<Vec<PosteriorChain>> {
    seeds
        .par_iter()
        .map(|seed| {
            let cfg = McmcConfig { seed: *seed, ..cfg.clone() };
            fit_svcj(returns, flavor, priors, &cfg)
        })
        .collect()
}
