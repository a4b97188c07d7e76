use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::series::{ReturnSeries, Units};

/// Date assigned to the first simulated observation.
pub const SIMULATION_START: NaiveDate = match NaiveDate::from_ymd_opt(2014, 8, 1) {
    Some(d) => d,
    None => panic!(),
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFlavor {
    Sv,
    Svj,
    Svcj,
}

impl ModelFlavor {
    pub const ALL: [ModelFlavor; 3] = [ModelFlavor::Sv, ModelFlavor::Svj, ModelFlavor::Svcj];

    pub fn has_jumps(self) -> bool {
        self != ModelFlavor::Sv
    }

    pub fn has_variance_jumps(self) -> bool {
        self == ModelFlavor::Svcj
    }
}

impl fmt::Display for ModelFlavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelFlavor::Sv => "sv",
            ModelFlavor::Svj => "svj",
            ModelFlavor::Svcj => "svcj",
        })
    }
}

impl FromStr for ModelFlavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sv" => Ok(ModelFlavor::Sv),
            "svj" => Ok(ModelFlavor::Svj),
            "svcj" => Ok(ModelFlavor::Svcj),
            other => Err(Error::Parse(format!("unknown model flavor '{other}'"))),
        }
    }
}

/// Daily Euler-discretized SVCJ parameters.
///
/// Returns are `Y_t = mu + sqrt(V_{t-1}) e_y + J_t Zy_t` and variance follows
/// `V_t = alpha + beta V_{t-1} + sigma_v sqrt(V_{t-1}) e_v + J_t Zv_t`, with
/// `corr(e_y, e_v) = rho`, `J_t ~ Bernoulli(lambda)`, `Zv ~ Exp(mean mu_v)` and
/// `Zy | Zv ~ N(mu_y + rho_j Zv, sigma_y^2)`. By convention the parameters are
/// expressed in percent-return units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvcjParams {
    pub mu: f64,
    pub mu_y: f64,
    pub sigma_y: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub sigma_v: f64,
    pub rho_j: f64,
    pub mu_v: f64,
}

impl SvcjParams {
    pub const NAMES: [&'static str; 10] = [
        "mu", "mu_y", "sigma_y", "lambda", "alpha", "beta", "rho", "sigma_v", "rho_j", "mu_v",
    ];

    /// BTC daily estimates for the full model (percent units).
    pub fn btc_svcj() -> Self {
        Self {
            mu: 0.041,
            mu_y: -0.084,
            sigma_y: 2.155,
            lambda: 0.041,
            alpha: 0.010,
            beta: -0.132,
            rho: 0.407,
            sigma_v: 0.008,
            rho_j: -0.573,
            mu_v: 0.620,
        }
    }

    /// BTC daily estimates with return jumps only.
    pub fn btc_svj() -> Self {
        Self {
            mu: 0.029,
            mu_y: -0.562,
            sigma_y: 2.685,
            lambda: 0.029,
            alpha: 0.010,
            beta: -0.116,
            rho: 0.321,
            sigma_v: 0.011,
            rho_j: 0.0,
            mu_v: 0.0,
        }
    }

    /// BTC daily estimates without jumps.
    pub fn btc_sv() -> Self {
        Self {
            mu: 0.030,
            mu_y: 0.0,
            sigma_y: 0.0,
            lambda: 0.0,
            alpha: 0.009,
            beta: -0.033,
            rho: 0.169,
            sigma_v: 0.017,
            rho_j: 0.0,
            mu_v: 0.0,
        }
    }

    pub fn btc(flavor: ModelFlavor) -> Self {
        match flavor {
            ModelFlavor::Sv => Self::btc_sv(),
            ModelFlavor::Svj => Self::btc_svj(),
            ModelFlavor::Svcj => Self::btc_svcj(),
        }
    }

    pub fn to_array(&self) -> [f64; 10] {
        [
            self.mu,
            self.mu_y,
            self.sigma_y,
            self.lambda,
            self.alpha,
            self.beta,
            self.rho,
            self.sigma_v,
            self.rho_j,
            self.mu_v,
        ]
    }

    pub fn from_array(a: [f64; 10]) -> Self {
        Self {
            mu: a[0],
            mu_y: a[1],
            sigma_y: a[2],
            lambda: a[3],
            alpha: a[4],
            beta: a[5],
            rho: a[6],
            sigma_v: a[7],
            rho_j: a[8],
            mu_v: a[9],
        }
    }

    /// Checks the hard invariants. A non-stationary `beta` is not an error; see
    /// [`SvcjParams::warnings`].
    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.to_array().iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("{} is not finite", Self::NAMES[i])));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::invalid(format!("lambda = {} outside [0, 1]", self.lambda)));
        }
        for (name, v) in [("sigma_y", self.sigma_y), ("sigma_v", self.sigma_v), ("mu_v", self.mu_v)] {
            if v < 0.0 {
                return Err(Error::invalid(format!("{name} = {v} is negative")));
            }
        }
        if self.rho.abs() >= 1.0 {
            return Err(Error::invalid(format!("|rho| = {} must be < 1", self.rho.abs())));
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.beta.abs() >= 1.0 {
            w.push(format!("|beta| = {} >= 1: variance recursion is not stationary", self.beta.abs()));
        }
        w
    }

    /// Applies the flavor's degeneracies: SV has no jumps, SVJ has no variance jumps.
    pub fn restricted(&self, flavor: ModelFlavor) -> Self {
        let mut p = *self;
        match flavor {
            ModelFlavor::Sv => {
                p.lambda = 0.0;
                p.mu_y = 0.0;
                p.sigma_y = 0.0;
                p.rho_j = 0.0;
                p.mu_v = 0.0;
            }
            ModelFlavor::Svj => {
                p.rho_j = 0.0;
                p.mu_v = 0.0;
            }
            ModelFlavor::Svcj => {}
        }
        p
    }

    /// Unconditional mean of `V`: `(alpha + lambda mu_v) / (1 - beta)`.
    pub fn long_run_variance(&self) -> f64 {
        (self.alpha + self.lambda * self.mu_v) / (1.0 - self.beta)
    }

    /// Converts percent-unit parameters to decimal-return units. Returns and
    /// jump sizes scale by 1/100, variances by 1/10^4; `rho_j` maps a variance
    /// jump to a return jump so it scales by 100.
    pub fn to_decimal_units(&self) -> Self {
        Self {
            mu: self.mu / 100.0,
            mu_y: self.mu_y / 100.0,
            sigma_y: self.sigma_y / 100.0,
            lambda: self.lambda,
            alpha: self.alpha / 1e4,
            beta: self.beta,
            rho: self.rho,
            sigma_v: self.sigma_v / 100.0,
            rho_j: self.rho_j * 100.0,
            mu_v: self.mu_v / 1e4,
        }
    }
}

/// Latent states of a daily path.
///
/// Jump sizes are recorded only on days with `j[t] = 1` and are 0 elsewhere.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LatentPath {
    /// `V_0 .. V_T`.
    pub v: Vec<f64>,
    pub j: Vec<u8>,
    pub zy: Vec<f64>,
    pub zv: Vec<f64>,
}

impl LatentPath {
    pub fn horizon(&self) -> usize {
        self.j.len()
    }
}

/// The five variates consumed by one day of the SVCJ recursion. Every flavor
/// consumes all five so paths stay aligned across flavors.
#[derive(Debug, Clone, Copy)]
pub struct SvcjShocks {
    pub z1: f64,
    pub z2: f64,
    pub u: f64,
    pub e: f64,
    pub n: f64,
}

impl SvcjShocks {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            z1: rng.sample(StandardNormal),
            z2: rng.sample(StandardNormal),
            u: rng.random(),
            e: rng.sample(Exp1),
            n: rng.sample(StandardNormal),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SvcjStep {
    pub y: f64,
    pub v: f64,
    pub jump: bool,
    pub zy: f64,
    pub zv: f64,
}

/// One Euler day with full truncation of the variance. `p` must already be
/// restricted to the desired flavor.
#[inline]
pub fn svcj_step(p: &SvcjParams, v_prev: f64, s: &SvcjShocks) -> SvcjStep {
    let sv = v_prev.max(0.0).sqrt();
    let ey = s.z1;
    let ev = p.rho * s.z1 + (1.0 - p.rho * p.rho).sqrt() * s.z2;
    let jump = s.u < p.lambda;
    let (zy, zv) = if jump {
        let zv = p.mu_v * s.e;
        (p.mu_y + p.rho_j * zv + p.sigma_y * s.n, zv)
    } else {
        (0.0, 0.0)
    };
    let y = p.mu + sv * ey + zy;
    let v = (p.alpha + p.beta * v_prev + p.sigma_v * sv * ev + zv).max(0.0);
    SvcjStep { y, v, jump, zy, zv }
}

/// Simulates `horizon` days from `v0`. Returns are tagged as percent and dated
/// on consecutive days from [`SIMULATION_START`].
pub fn simulate_svcj(
    params: &SvcjParams,
    flavor: ModelFlavor,
    v0: f64,
    horizon: usize,
    rng: RngStream,
) -> Result<(ReturnSeries, LatentPath)> {
    if !(v0 >= 0.0 && v0.is_finite()) {
        return Err(Error::invalid(format!("initial variance {v0} must be finite and >= 0")));
    }
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least one day"));
    }
    params.validate()?;
    let p = params.restricted(flavor);
    let mut r = rng.rng();
    let mut path = LatentPath {
        v: Vec::with_capacity(horizon + 1),
        j: Vec::with_capacity(horizon),
        zy: Vec::with_capacity(horizon),
        zv: Vec::with_capacity(horizon),
    };
    let mut ys = Vec::with_capacity(horizon);
    path.v.push(v0);
    let mut v = v0;
    for _ in 0..horizon {
        let step = svcj_step(&p, v, &SvcjShocks::draw(&mut r));
        v = step.v;
        ys.push(step.y);
        path.v.push(v);
        path.j.push(u8::from(step.jump));
        path.zy.push(step.zy);
        path.zv.push(step.zv);
    }
    let series = ReturnSeries::daily_from(SIMULATION_START, ys, Units::Percent)?;
    Ok((series, path))
}
