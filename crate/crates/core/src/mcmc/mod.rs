//! Gibbs / Metropolis-Hastings estimation of the SV, SVJ and SVCJ models.
//!
//! Parameters with conjugate full conditionals are drawn exactly. Jump
//! indicators are drawn with the jump sizes integrated out, then the sizes are
//! drawn given the indicator. `rho` and each `V_t` move by adaptive random-walk
//! Metropolis, `sigma_v^2` by an independence sampler.

mod conditionals;
mod diagnostics;
mod sampler;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::simulate::{LatentPath, ModelFlavor, SvcjParams};

pub use diagnostics::{detect_jumps, mse, qq_points, standardized_residuals};
pub use sampler::{fit_chains, fit_svcj};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalPrior {
    pub mean: f64,
    pub var: f64,
}

/// Inverse gamma with density proportional to `x^(-shape-1) exp(-scale/x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvGammaPrior {
    pub shape: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPrior {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformPrior {
    pub lower: f64,
    pub upper: f64,
}

/// Priors for the ten model parameters. `alpha` and `beta` are independent
/// normals, i.e. a bivariate normal with diagonal covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorSpec {
    pub mu: NormalPrior,
    pub alpha: NormalPrior,
    pub beta: NormalPrior,
    pub sigma_v2: InvGammaPrior,
    pub mu_y: NormalPrior,
    pub sigma_y2: InvGammaPrior,
    pub rho: UniformPrior,
    pub rho_j: NormalPrior,
    pub mu_v: InvGammaPrior,
    pub lambda: BetaPrior,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            mu: NormalPrior { mean: 0.0, var: 25.0 },
            alpha: NormalPrior { mean: 0.0, var: 1.0 },
            beta: NormalPrior { mean: 0.0, var: 1.0 },
            sigma_v2: InvGammaPrior { shape: 2.5, scale: 0.1 },
            mu_y: NormalPrior { mean: 0.0, var: 100.0 },
            sigma_y2: InvGammaPrior { shape: 10.0, scale: 40.0 },
            rho: UniformPrior { lower: -1.0, upper: 1.0 },
            rho_j: NormalPrior { mean: 0.0, var: 0.5 },
            mu_v: InvGammaPrior { shape: 10.0, scale: 20.0 },
            lambda: BetaPrior { a: 2.0, b: 40.0 },
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |c: bool, what: &str| if c { Ok(()) } else { Err(Error::invalid(what.to_string())) };
        for (name, p) in [
            ("mu", self.mu),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("mu_y", self.mu_y),
            ("rho_j", self.rho_j),
        ] {
            ok(p.var > 0.0 && p.mean.is_finite() && p.var.is_finite(), &format!("{name} prior variance must be positive"))?;
        }
        for (name, p) in [("sigma_v2", self.sigma_v2), ("sigma_y2", self.sigma_y2), ("mu_v", self.mu_v)] {
            ok(p.shape > 0.0 && p.scale > 0.0, &format!("{name} prior shape and scale must be positive"))?;
        }
        ok(self.lambda.a > 0.0 && self.lambda.b > 0.0, "lambda prior parameters must be positive")?;
        ok(
            -1.0 <= self.rho.lower && self.rho.lower < self.rho.upper && self.rho.upper <= 1.0,
            "rho prior must be a sub-interval of [-1, 1]",
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    pub iterations: usize,
    pub burn_in: usize,
    /// Acceptance rate the random-walk steps are tuned toward during burn-in.
    pub mh_target_accept: f64,
    pub seed: RngStream,
    /// Store every `latent_thin`-th latent path; 0 disables latent storage.
    pub latent_thin: usize,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            iterations: 5000,
            burn_in: 1000,
            mh_target_accept: 0.35,
            seed: RngStream::from_seed(0),
            latent_thin: 5,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::invalid(format!(
                "burn-in {} must be smaller than iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if !(self.mh_target_accept > 0.0 && self.mh_target_accept < 1.0) {
            return Err(Error::invalid("target acceptance must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Post-burn-in acceptance rates of the Metropolis steps.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AcceptanceRates {
    pub rho: f64,
    pub sigma_v2: f64,
    /// Average over all `V_t` sites.
    pub v: f64,
    /// Lowest per-site rate.
    pub v_min: f64,
    /// Highest per-site rate.
    pub v_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorChain {
    pub flavor: ModelFlavor,
    pub priors: PriorSpec,
    pub config: McmcConfig,
    /// The fitted returns (percent).
    pub data: Vec<f64>,
    /// One entry per iteration, burn-in included.
    pub draws: Vec<SvcjParams>,
    /// `latent_draws[k]` is the state after iteration `(k + 1) * latent_thin - 1`.
    pub latent_draws: Vec<LatentPath>,
    pub latent_thin: usize,
    pub acceptance: AcceptanceRates,
    /// Posterior mean of `J_t` over post-burn-in iterations.
    pub jump_probs: Vec<f64>,
    /// Posterior mean of `V_0 .. V_T`.
    pub v_mean: Vec<f64>,
    /// Posterior mean of `Zy_t` given `J_t = 1`; 0 where no jump was ever drawn.
    pub zy_given_jump: Vec<f64>,
    /// Posterior mean of `Zv_t` given `J_t = 1`.
    pub zv_given_jump: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub flavor: ModelFlavor,
    pub params: Vec<ParamSummary>,
    pub posterior_mean: SvcjParams,
    pub jump_probs: Vec<f64>,
    /// Detected jump days.
    pub jumps: Vec<u8>,
    pub v_mean: Vec<f64>,
    pub zy_given_jump: Vec<f64>,
    pub mse: f64,
    pub acceptance: AcceptanceRates,
}

impl PosteriorSummary {
    pub fn param(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }
}

impl PosteriorChain {
    pub fn post_burn_in(&self) -> &[SvcjParams] {
        &self.draws[self.config.burn_in..]
    }

    /// Means and equal-tailed 95% intervals over post-burn-in draws, plus the
    /// smoothed latent quantities and the one-step fit MSE.
    pub fn summary(&self) -> PosteriorSummary {
        let kept = self.post_burn_in();
        let params: Vec<ParamSummary> = SvcjParams::NAMES
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let mut xs: Vec<f64> = kept.iter().map(|d| d.to_array()[i]).collect();
                let mean = crate::stats::mean(&xs);
                let sd = if xs.len() > 1 { crate::stats::std_dev(&xs) } else { 0.0 };
                xs.sort_by(f64::total_cmp);
                ParamSummary {
                    name: name.to_string(),
                    mean,
                    sd,
                    q025: crate::stats::quantile_sorted(&xs, 0.025),
                    q975: crate::stats::quantile_sorted(&xs, 0.975),
                }
            })
            .collect();
        let mut means = [0.0; 10];
        for (m, p) in means.iter_mut().zip(&params) {
            *m = p.mean;
        }
        let posterior_mean = SvcjParams::from_array(means);
        let jumps = detect_jumps(&self.jump_probs, posterior_mean.lambda);
        let mut summary = PosteriorSummary {
            flavor: self.flavor,
            params,
            posterior_mean,
            jump_probs: self.jump_probs.clone(),
            jumps,
            v_mean: self.v_mean.clone(),
            zy_given_jump: self.zy_given_jump.clone(),
            mse: f64::NAN,
            acceptance: self.acceptance,
        };
        summary.mse = mse(&self.data, &summary);
        summary
    }
}
