//! Full conditionals of the Gibbs blocks.
//!
//! Indexing: `y[t]` is driven by `v[t]`, and the transition `t` maps
//! `(y[t], v[t+1])` given `v[t]`. Jump sizes are 0 on days without a jump.

use rand::Rng;

use crate::simulate::{ModelFlavor, SvcjParams};
use crate::stats::{self, LN_2PI};

use super::{InvGammaPrior, NormalPrior, PriorSpec};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct State {
    pub p: SvcjParams,
    pub v: Vec<f64>,
    pub j: Vec<u8>,
    pub zy: Vec<f64>,
    pub zv: Vec<f64>,
}

impl State {
    pub fn horizon(&self) -> usize {
        self.j.len()
    }

    /// Standardized return shock of day `t`.
    #[inline]
    pub fn ey(&self, y: &[f64], t: usize) -> f64 {
        (y[t] - self.p.mu - self.zy[t]) / self.v[t].sqrt()
    }

    /// Variance residual of transition `t`, before scaling by `sigma_v sqrt(V)`.
    #[inline]
    pub fn resid_v(&self, t: usize) -> f64 {
        self.v[t + 1] - self.p.alpha - self.p.beta * self.v[t] - self.zv[t]
    }
}

/// Log density of `(y_t, V_{t+1})` given `V_t`, the jump sizes and the parameters.
#[inline]
pub(crate) fn log_transition(p: &SvcjParams, y: f64, v_prev: f64, v_next: f64, zy: f64, zv: f64) -> f64 {
    let sd = v_prev.sqrt();
    let ey = (y - p.mu - zy) / sd;
    let ev = (v_next - p.alpha - p.beta * v_prev - zv) / (p.sigma_v * sd);
    let one_m = 1.0 - p.rho * p.rho;
    -LN_2PI - p.sigma_v.ln() - v_prev.ln() - 0.5 * one_m.ln() - (ey * ey - 2.0 * p.rho * ey * ev + ev * ev) / (2.0 * one_m)
}

pub(crate) fn log_likelihood(y: &[f64], s: &State) -> f64 {
    (0..s.horizon())
        .map(|t| log_transition(&s.p, y[t], s.v[t], s.v[t + 1], s.zy[t], s.zv[t]))
        .sum()
}

/// Posterior of a normal location from precision-weighted observations.
fn normal_posterior(prior: NormalPrior, sum_w: f64, sum_wx: f64) -> (f64, f64) {
    let prec = 1.0 / prior.var + sum_w;
    ((prior.mean / prior.var + sum_wx) / prec, 1.0 / prec)
}

/// `mu` given everything else: `y_t - Zy_t - rho sqrt(V_t) ev_t = mu + sqrt(V_t (1 - rho^2)) eta`.
pub(crate) fn mu_posterior(y: &[f64], s: &State, prior: NormalPrior) -> (f64, f64) {
    let p = &s.p;
    let one_m = 1.0 - p.rho * p.rho;
    let (mut sw, mut swx) = (0.0, 0.0);
    for t in 0..s.horizon() {
        let target = y[t] - s.zy[t] - p.rho * s.resid_v(t) / p.sigma_v;
        let w = 1.0 / (s.v[t] * one_m);
        sw += w;
        swx += w * target;
    }
    normal_posterior(prior, sw, swx)
}

/// Bivariate normal posterior of `(alpha, beta)`: mean and precision matrix.
pub(crate) fn alpha_beta_posterior(y: &[f64], s: &State, prior_a: NormalPrior, prior_b: NormalPrior) -> ([f64; 2], [[f64; 2]; 2]) {
    let p = &s.p;
    let one_m = 1.0 - p.rho * p.rho;
    let mut prec = [[1.0 / prior_a.var, 0.0], [0.0, 1.0 / prior_b.var]];
    let mut rhs = [prior_a.mean / prior_a.var, prior_b.mean / prior_b.var];
    for t in 0..s.horizon() {
        let vt = s.v[t];
        let z = s.v[t + 1] - s.zv[t] - p.sigma_v * p.rho * vt.sqrt() * s.ey(y, t);
        let w = 1.0 / (p.sigma_v * p.sigma_v * vt * one_m);
        prec[0][0] += w;
        prec[0][1] += w * vt;
        prec[1][1] += w * vt * vt;
        rhs[0] += w * z;
        rhs[1] += w * vt * z;
    }
    prec[1][0] = prec[0][1];
    let det = prec[0][0] * prec[1][1] - prec[0][1] * prec[0][1];
    let mean = [
        (prec[1][1] * rhs[0] - prec[0][1] * rhs[1]) / det,
        (prec[0][0] * rhs[1] - prec[0][1] * rhs[0]) / det,
    ];
    (mean, prec)
}

pub(crate) fn draw_alpha_beta<R: Rng + ?Sized>(rng: &mut R, mean: [f64; 2], prec: [[f64; 2]; 2]) -> [f64; 2] {
    // prec = L L'; x = mean + L'^{-1} n has covariance prec^{-1}
    let l11 = prec[0][0].sqrt();
    let l21 = prec[1][0] / l11;
    let l22 = (prec[1][1] - l21 * l21).max(0.0).sqrt();
    let (n1, n2) = (stats::standard_normal(rng), stats::standard_normal(rng));
    let x2 = n2 / l22;
    let x1 = (n1 - l21 * x2) / l11;
    [mean[0] + x1, mean[1] + x2]
}

/// Sufficient statistics for `sigma_v^2`: `S2 = sum r^2 / V`, `C = sum ey r / sqrt(V)`.
pub(crate) fn sigma_v2_stats(y: &[f64], s: &State) -> (f64, f64) {
    let (mut s2, mut c) = (0.0, 0.0);
    for t in 0..s.horizon() {
        let r = s.resid_v(t) / s.v[t].sqrt();
        s2 += r * r;
        c += s.ey(y, t) * r;
    }
    (s2, c)
}

/// Full conditional of `w = 1 / sigma_v` up to a constant:
/// `log p(w) = k ln w - B w^2 + D w`, with the inverse gamma prior folded in.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SigmaVTarget {
    pub k: f64,
    pub b: f64,
    pub d: f64,
}

impl SigmaVTarget {
    pub fn new(prior: InvGammaPrior, n: usize, rho: f64, s2: f64, c: f64) -> Self {
        let one_m = 1.0 - rho * rho;
        Self {
            k: 2.0 * prior.shape + n as f64 - 1.0,
            b: prior.scale + s2 / (2.0 * one_m),
            d: rho * c / one_m,
        }
    }

    pub fn log_density(&self, w: f64) -> f64 {
        if w > 0.0 {
            self.k * w.ln() - self.b * w * w + self.d * w
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Mode and curvature-matched scale.
    pub fn mode_and_scale(&self) -> (f64, f64) {
        let mode = (self.d + (self.d * self.d + 8.0 * self.b * self.k).sqrt()) / (4.0 * self.b);
        let curvature = self.k / (mode * mode) + 2.0 * self.b;
        (mode, 1.0 / curvature.sqrt())
    }
}

impl SigmaVTarget {
    /// Log density of `x = sigma_v^2`, up to a constant.
    pub fn log_density_x(&self, x: f64) -> f64 {
        if x > 0.0 {
            self.log_density(1.0 / x.sqrt()) - 1.5 * x.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Inverse gamma matching the mean and variance of `x` under a normal
    /// approximation of `w` at its mode.
    pub fn proposal(&self) -> InvGammaPrior {
        let (w, sd) = self.mode_and_scale();
        let r = sd * sd / (w * w);
        let mean = (1.0 + 3.0 * r) / (w * w);
        let var = 4.0 * r / w.powi(4);
        let shape = mean * mean / var + 2.0;
        InvGammaPrior { shape, scale: mean * (shape - 1.0) }
    }
}

fn inv_gamma_log_kernel(x: f64, ig: InvGammaPrior) -> f64 {
    -(ig.shape + 1.0) * x.ln() - ig.scale / x
}

/// Independence Metropolis step for `sigma_v^2` with an inverse gamma proposal
/// moment-matched to the full conditional, correlation term included.
pub(crate) fn draw_sigma_v2<R: Rng + ?Sized>(rng: &mut R, y: &[f64], s: &State, prior: InvGammaPrior) -> (f64, bool) {
    let (s2, c) = sigma_v2_stats(y, s);
    let target = SigmaVTarget::new(prior, s.horizon(), s.p.rho, s2, c);
    let q = target.proposal();
    let x = s.p.sigma_v * s.p.sigma_v;
    let x_new = stats::inv_gamma(rng, q.shape, q.scale);
    let log_ratio = target.log_density_x(x_new) - target.log_density_x(x) + inv_gamma_log_kernel(x, q) - inv_gamma_log_kernel(x_new, q);
    let u: f64 = rng.random();
    if u.ln() < log_ratio {
        (x_new, true)
    } else {
        (x, false)
    }
}

/// `(sum ey^2, sum ey ev, sum ev^2)` for the `rho` update.
pub(crate) fn rho_stats(y: &[f64], s: &State) -> (f64, f64, f64) {
    let (mut syy, mut syv, mut svv) = (0.0, 0.0, 0.0);
    for t in 0..s.horizon() {
        let ey = s.ey(y, t);
        let ev = s.resid_v(t) / (s.p.sigma_v * s.v[t].sqrt());
        syy += ey * ey;
        syv += ey * ev;
        svv += ev * ev;
    }
    (syy, syv, svv)
}

pub(crate) fn rho_log_lik(n: usize, (syy, syv, svv): (f64, f64, f64), rho: f64) -> f64 {
    let one_m = 1.0 - rho * rho;
    -0.5 * n as f64 * one_m.ln() - (syy - 2.0 * rho * syv + svv) / (2.0 * one_m)
}

/// Collapsed jump quantities for one day.
#[derive(Debug, Clone, Copy)]
pub(crate) struct JumpConditional {
    /// `log P(J = 1 | ...) - log P(J = 0 | ...)` with jump sizes integrated out.
    pub log_odds: f64,
    /// Mean and precision of the (untruncated) normal kernel of `Zv` given a jump.
    pub zv_mean: f64,
    pub zv_prec: f64,
}

/// `a = y_t - mu`, `b = V_{t+1} - alpha - beta V_t`; the diffusion part of `(a, b)`
/// is bivariate normal with covariance `V [[1, rho sv], [rho sv, sv^2]]`.
pub(crate) fn jump_conditional(p: &SvcjParams, flavor: ModelFlavor, a: f64, b: f64, v: f64) -> JumpConditional {
    let (s11, s12, s22) = (v, p.rho * p.sigma_v * v, p.sigma_v * p.sigma_v * v);
    let det0 = s11 * s22 - s12 * s12;
    let q_none = (s22 * a * a - 2.0 * s12 * a * b + s11 * b * b) / det0;
    let log_none = -LN_2PI - 0.5 * det0.ln() - 0.5 * q_none;

    let t11 = s11 + p.sigma_y * p.sigma_y;
    let det1 = t11 * s22 - s12 * s12;
    // P = Sigma1^{-1}
    let (p11, p12, p22) = (s22 / det1, -s12 / det1, t11 / det1);
    let (xa, xb) = (a - p.mu_y, b);
    let q0 = p11 * xa * xa + 2.0 * p12 * xa * xb + p22 * xb * xb;
    let base = -LN_2PI - 0.5 * det1.ln();

    let prior_odds = p.lambda.ln() - (1.0 - p.lambda).ln();
    match flavor {
        ModelFlavor::Sv => JumpConditional {
            log_odds: f64::NEG_INFINITY,
            zv_mean: 0.0,
            zv_prec: 1.0,
        },
        ModelFlavor::Svj => JumpConditional {
            log_odds: prior_odds + base - 0.5 * q0 - log_none,
            zv_mean: 0.0,
            zv_prec: 1.0,
        },
        ModelFlavor::Svcj => {
            // d = (rho_j, 1): A = d'Pd, B = d'P(x - m0)
            let (d1, d2) = (p.rho_j, 1.0);
            let pa = p11 * d1 + p12 * d2;
            let pb = p12 * d1 + p22 * d2;
            let big_a = d1 * pa + d2 * pb;
            let big_b = pa * xa + pb * xb;
            let m = (big_b - 1.0 / p.mu_v) / big_a;
            let log_jump = base - p.mu_v.ln() + 0.5 * (LN_2PI - big_a.ln()) + stats::ln_norm_cdf(m * big_a.sqrt())
                + 0.5 * big_a * m * m
                - 0.5 * q0;
            JumpConditional {
                log_odds: prior_odds + log_jump - log_none,
                zv_mean: m,
                zv_prec: big_a,
            }
        }
    }
}

/// Normal full conditional of `Zy` given a jump and `Zv`.
pub(crate) fn zy_conditional(p: &SvcjParams, a: f64, b: f64, v: f64, zv: f64) -> (f64, f64) {
    let one_m = 1.0 - p.rho * p.rho;
    let ev = (b - zv) / (p.sigma_v * v.sqrt());
    let lik_mean = a - p.rho * v.sqrt() * ev;
    let lik_var = v * one_m;
    let prior_var = p.sigma_y * p.sigma_y;
    let prec = 1.0 / prior_var + 1.0 / lik_var;
    (((p.mu_y + p.rho_j * zv) / prior_var + lik_mean / lik_var) / prec, 1.0 / prec)
}

/// Draws `(J_t, Zy_t, Zv_t)` jointly.
pub(crate) fn draw_jump<R: Rng + ?Sized>(rng: &mut R, y: &[f64], s: &State, flavor: ModelFlavor, t: usize) -> (u8, f64, f64) {
    if flavor == ModelFlavor::Sv {
        return (0, 0.0, 0.0);
    }
    let p = &s.p;
    let a = y[t] - p.mu;
    let b = s.v[t + 1] - p.alpha - p.beta * s.v[t];
    let jc = jump_conditional(p, flavor, a, b, s.v[t]);
    let prob = 1.0 / (1.0 + (-jc.log_odds).exp());
    let u: f64 = rng.random();
    if u >= prob {
        return (0, 0.0, 0.0);
    }
    let zv = if flavor == ModelFlavor::Svcj {
        stats::truncated_normal_lower(rng, jc.zv_mean, 1.0 / jc.zv_prec.sqrt(), 0.0)
    } else {
        0.0
    };
    let (m, var) = zy_conditional(p, a, b, s.v[t], zv);
    (1, m + var.sqrt() * stats::standard_normal(rng), zv)
}

/// Sufficient statistics over jump days.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct JumpStats {
    pub n: usize,
    pub sum_zv: f64,
    pub sum_zv2: f64,
}

pub(crate) fn jump_stats(s: &State) -> JumpStats {
    let mut st = JumpStats::default();
    for t in 0..s.horizon() {
        if s.j[t] == 1 {
            st.n += 1;
            st.sum_zv += s.zv[t];
            st.sum_zv2 += s.zv[t] * s.zv[t];
        }
    }
    st
}

/// `Zy - rho_j Zv = mu_y + sigma_y n` over jump days.
pub(crate) fn mu_y_posterior(s: &State, prior: NormalPrior) -> (f64, f64) {
    let w = 1.0 / (s.p.sigma_y * s.p.sigma_y);
    let (mut sw, mut swx) = (0.0, 0.0);
    for t in (0..s.horizon()).filter(|&t| s.j[t] == 1) {
        sw += w;
        swx += w * (s.zy[t] - s.p.rho_j * s.zv[t]);
    }
    normal_posterior(prior, sw, swx)
}

/// `Zy - mu_y = rho_j Zv + sigma_y n` over jump days.
pub(crate) fn rho_j_posterior(s: &State, prior: NormalPrior) -> (f64, f64) {
    let w = 1.0 / (s.p.sigma_y * s.p.sigma_y);
    let (mut sw, mut swx) = (0.0, 0.0);
    for t in (0..s.horizon()).filter(|&t| s.j[t] == 1) {
        sw += w * s.zv[t] * s.zv[t];
        swx += w * s.zv[t] * (s.zy[t] - s.p.mu_y);
    }
    normal_posterior(prior, sw, swx)
}

pub(crate) fn sigma_y2_posterior(s: &State, prior: InvGammaPrior) -> InvGammaPrior {
    let (mut n, mut ss) = (0usize, 0.0);
    for t in (0..s.horizon()).filter(|&t| s.j[t] == 1) {
        let e = s.zy[t] - s.p.mu_y - s.p.rho_j * s.zv[t];
        n += 1;
        ss += e * e;
    }
    InvGammaPrior {
        shape: prior.shape + 0.5 * n as f64,
        scale: prior.scale + 0.5 * ss,
    }
}

pub(crate) fn mu_v_posterior(st: JumpStats, prior: InvGammaPrior) -> InvGammaPrior {
    InvGammaPrior {
        shape: prior.shape + st.n as f64,
        scale: prior.scale + st.sum_zv,
    }
}

pub(crate) fn lambda_posterior(st: JumpStats, horizon: usize, priors: &PriorSpec) -> (f64, f64) {
    (priors.lambda.a + st.n as f64, priors.lambda.b + (horizon - st.n) as f64)
}
