use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Parameters of the non-affine price/variance co-jump model
///
/// ```text
/// d log S   = mu_r dt + sigma (rho_t dW1 + sqrt(1 - rho_t^2) dW2) + c_r dJ_r + c_r^JJ dJ_rs
/// d log s^2 = (m0 + m1 log s^2) dt + lambda_vol dW1 + c_s dJ_s + c_s^JJ dJ_rs
/// rho_t     = clamp(rho0 + rho1 sigma, -1, 1)
/// ```
///
/// Independent jump sizes are normal with means `mu_jr`, `mu_jsigma` and
/// standard deviations `sigma_jr`, `sigma_jsigma`. Common jumps are bivariate
/// normal with return mean `mu_jjr0 + mu_jjr1 sigma`, return std
/// `sigma_jjr0 + sigma_jjr1 sigma^sigma_jjr2`, variance mean/std `mu_jjsigma`,
/// `sigma_jjsigma` and correlation `rho_j`. Time is in days, returns in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrParams {
    pub mu_r: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub m0: f64,
    pub m1: f64,
    /// Volatility of log variance.
    pub lambda_vol: f64,
    pub mu_jr: f64,
    pub mu_jjr0: f64,
    pub mu_jjr1: f64,
    pub sigma_jr: f64,
    pub sigma_jjr0: f64,
    pub sigma_jjr1: f64,
    pub sigma_jjr2: f64,
    pub mu_jsigma: f64,
    pub mu_jjsigma: f64,
    pub sigma_jsigma: f64,
    pub sigma_jjsigma: f64,
    pub rho_j: f64,
    pub lambda_r: f64,
    pub lambda_sigma: f64,
    pub lambda_rsigma: f64,
}

impl BrParams {
    pub const DIM: usize = 21;
    pub const NAMES: [&'static str; Self::DIM] = [
        "mu_r",
        "rho0",
        "rho1",
        "m0",
        "m1",
        "lambda_vol",
        "mu_jr",
        "mu_jjr0",
        "mu_jjr1",
        "sigma_jr",
        "sigma_jjr0",
        "sigma_jjr1",
        "sigma_jjr2",
        "mu_jsigma",
        "mu_jjsigma",
        "sigma_jsigma",
        "sigma_jjsigma",
        "rho_j",
        "lambda_r",
        "lambda_sigma",
        "lambda_rsigma",
    ];

    /// BTC intraday estimates, full model.
    pub fn btc_full() -> Self {
        Self {
            mu_r: 0.0082,
            rho0: -0.1485,
            rho1: 0.9292,
            m0: -0.0495,
            m1: -0.0600,
            lambda_vol: 0.6766,
            mu_jr: 2.5486,
            mu_jjr0: -0.0187,
            mu_jjr1: 0.1265,
            sigma_jr: 0.6890,
            sigma_jjr0: 0.0043,
            sigma_jjr1: 1.2159,
            sigma_jjr2: 3.9590,
            mu_jsigma: -0.2783,
            mu_jjsigma: -0.4927,
            sigma_jsigma: 0.8619,
            sigma_jjsigma: 0.0717,
            rho_j: -0.5257,
            lambda_r: 0.0,
            lambda_sigma: 0.0519,
            lambda_rsigma: 0.0584,
        }
    }

    /// BTC intraday estimates without common jumps.
    pub fn btc_no_cojumps() -> Self {
        Self {
            mu_r: 0.0021,
            rho0: 0.0044,
            rho1: -0.3744,
            m0: -0.0500,
            m1: -0.0168,
            lambda_vol: 0.7634,
            mu_jr: 0.1577,
            mu_jjr0: 0.0,
            mu_jjr1: 0.0,
            sigma_jr: 0.6801,
            sigma_jjr0: 0.0,
            sigma_jjr1: 0.0,
            sigma_jjr2: 0.0,
            mu_jsigma: -0.5000,
            mu_jjsigma: 0.0,
            sigma_jsigma: 0.7945,
            sigma_jjsigma: 0.0,
            rho_j: 0.0,
            lambda_r: 0.0002,
            lambda_sigma: 0.0700,
            lambda_rsigma: 0.0,
        }
    }

    /// BTC intraday estimates without independent jumps.
    #[allow(clippy::approx_constant)] // 0.7853 is an estimate, not pi/4
    pub fn btc_no_independent_jumps() -> Self {
        Self {
            mu_r: 0.0027,
            rho0: -0.0148,
            rho1: -0.2237,
            m0: -0.0500,
            m1: -0.0125,
            lambda_vol: 0.7853,
            mu_jr: 0.0,
            mu_jjr0: -0.0804,
            mu_jjr1: 0.0192,
            sigma_jr: 0.0,
            sigma_jjr0: 0.0864,
            sigma_jjr1: 1.8713,
            sigma_jjr2: 2.6521,
            mu_jsigma: 0.0,
            mu_jjsigma: -1.9181,
            sigma_jsigma: 0.0,
            sigma_jjsigma: 1.0705,
            rho_j: -1.0,
            lambda_r: 0.0,
            lambda_sigma: 0.0,
            lambda_rsigma: 0.0060,
        }
    }

    /// Pure diffusion with the given log-variance dynamics and constant leverage.
    pub fn diffusion(mu_r: f64, rho0: f64, m0: f64, m1: f64, lambda_vol: f64) -> Self {
        Self::from_array([0.0; Self::DIM]).with(|p| {
            p.mu_r = mu_r;
            p.rho0 = rho0;
            p.m0 = m0;
            p.m1 = m1;
            p.lambda_vol = lambda_vol;
        })
    }

    fn with(mut self, f: impl FnOnce(&mut Self)) -> Self {
        f(&mut self);
        self
    }

    pub fn to_array(&self) -> [f64; Self::DIM] {
        [
            self.mu_r,
            self.rho0,
            self.rho1,
            self.m0,
            self.m1,
            self.lambda_vol,
            self.mu_jr,
            self.mu_jjr0,
            self.mu_jjr1,
            self.sigma_jr,
            self.sigma_jjr0,
            self.sigma_jjr1,
            self.sigma_jjr2,
            self.mu_jsigma,
            self.mu_jjsigma,
            self.sigma_jsigma,
            self.sigma_jjsigma,
            self.rho_j,
            self.lambda_r,
            self.lambda_sigma,
            self.lambda_rsigma,
        ]
    }

    pub fn from_array(a: [f64; Self::DIM]) -> Self {
        Self {
            mu_r: a[0],
            rho0: a[1],
            rho1: a[2],
            m0: a[3],
            m1: a[4],
            lambda_vol: a[5],
            mu_jr: a[6],
            mu_jjr0: a[7],
            mu_jjr1: a[8],
            sigma_jr: a[9],
            sigma_jjr0: a[10],
            sigma_jjr1: a[11],
            sigma_jjr2: a[12],
            mu_jsigma: a[13],
            mu_jjsigma: a[14],
            sigma_jsigma: a[15],
            sigma_jjsigma: a[16],
            rho_j: a[17],
            lambda_r: a[18],
            lambda_sigma: a[19],
            lambda_rsigma: a[20],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.to_array();
        if let Some(i) = a.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("{} is not finite", Self::NAMES[i])));
        }
        for (name, v) in [
            ("lambda_r", self.lambda_r),
            ("lambda_sigma", self.lambda_sigma),
            ("lambda_rsigma", self.lambda_rsigma),
            ("lambda_vol", self.lambda_vol),
            ("sigma_jr", self.sigma_jr),
            ("sigma_jjr0", self.sigma_jjr0),
            ("sigma_jjr1", self.sigma_jjr1),
            ("sigma_jsigma", self.sigma_jsigma),
            ("sigma_jjsigma", self.sigma_jjsigma),
        ] {
            if v < 0.0 {
                return Err(Error::invalid(format!("{name} = {v} is negative")));
            }
        }
        if self.rho_j.abs() > 1.0 {
            return Err(Error::invalid(format!("|rho_j| = {} exceeds 1", self.rho_j.abs())));
        }
        Ok(())
    }

    pub fn leverage(&self, sigma: f64) -> f64 {
        (self.rho0 + self.rho1 * sigma).clamp(-1.0, 1.0)
    }

    /// Standard deviation of the return component of a common jump at spot vol `sigma`.
    pub fn cojump_return_sd(&self, sigma: f64) -> f64 {
        self.sigma_jjr0 + self.sigma_jjr1 * sigma.powf(self.sigma_jjr2)
    }
}

/// Which jump channels a calibration may use. Pinned parameters are set to 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpRestriction {
    Full,
    NoCojumps,
    NoIndependentJumps,
    NoJumps,
}

impl JumpRestriction {
    const INDEPENDENT: [usize; 6] = [6, 9, 13, 15, 18, 19];
    const COMMON: [usize; 9] = [7, 8, 10, 11, 12, 14, 16, 17, 20];

    /// Indices into [`BrParams::to_array`] that this restriction pins.
    pub fn pinned(self) -> Vec<usize> {
        match self {
            JumpRestriction::Full => vec![],
            JumpRestriction::NoCojumps => Self::COMMON.to_vec(),
            JumpRestriction::NoIndependentJumps => Self::INDEPENDENT.to_vec(),
            JumpRestriction::NoJumps => {
                let mut v: Vec<usize> = Self::INDEPENDENT.iter().chain(&Self::COMMON).copied().collect();
                v.sort_unstable();
                v
            }
        }
    }

    pub fn apply(self, p: &BrParams) -> BrParams {
        let mut a = p.to_array();
        for i in self.pinned() {
            a[i] = 0.0;
        }
        BrParams::from_array(a)
    }
}

impl fmt::Display for JumpRestriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JumpRestriction::Full => "full",
            JumpRestriction::NoCojumps => "no_cojumps",
            JumpRestriction::NoIndependentJumps => "no_independent_jumps",
            JumpRestriction::NoJumps => "no_jumps",
        })
    }
}

impl FromStr for JumpRestriction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "full" => Ok(JumpRestriction::Full),
            "no_cojumps" => Ok(JumpRestriction::NoCojumps),
            "no_independent_jumps" => Ok(JumpRestriction::NoIndependentJumps),
            "no_jumps" => Ok(JumpRestriction::NoJumps),
            other => Err(Error::Parse(format!("unknown restriction '{other}'"))),
        }
    }
}

/// Variates for one step. Always drawn in full so that runs with different
/// parameters consume the stream identically.
#[derive(Debug, Clone, Copy, Default)]
pub struct BrShocks {
    pub z1: f64,
    pub z2: f64,
    pub u_r: f64,
    pub u_sigma: f64,
    pub u_rsigma: f64,
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub n4: f64,
}

impl BrShocks {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            z1: rng.sample(StandardNormal),
            z2: rng.sample(StandardNormal),
            u_r: rng.random(),
            u_sigma: rng.random(),
            u_rsigma: rng.random(),
            n1: rng.sample(StandardNormal),
            n2: rng.sample(StandardNormal),
            n3: rng.sample(StandardNormal),
            n4: rng.sample(StandardNormal),
        }
    }
}

pub const JUMP_R: u8 = 1;
pub const JUMP_SIGMA: u8 = 2;
pub const COJUMP: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrIncrement {
    pub dlog_s: f64,
    pub log_var: f64,
    /// Bit set of `JUMP_R`, `JUMP_SIGMA`, `COJUMP`.
    pub flags: u8,
}

/// One Euler step of length `dt` from log variance `log_var`.
#[inline]
pub fn br_step(p: &BrParams, log_var: f64, dt: f64, s: &BrShocks) -> BrIncrement {
    let sigma = (0.5 * log_var).exp();
    let rho = p.leverage(sigma);
    let sq = dt.sqrt();
    let mut dlog_s = p.mu_r * dt + sigma * sq * (rho * s.z1 + (1.0 - rho * rho).sqrt() * s.z2);
    let mut next = log_var + (p.m0 + p.m1 * log_var) * dt + p.lambda_vol * sq * s.z1;
    let mut flags = 0;
    if s.u_r < p.lambda_r * dt {
        dlog_s += p.mu_jr + p.sigma_jr * s.n1;
        flags |= JUMP_R;
    }
    if s.u_sigma < p.lambda_sigma * dt {
        next += p.mu_jsigma + p.sigma_jsigma * s.n2;
        flags |= JUMP_SIGMA;
    }
    if s.u_rsigma < p.lambda_rsigma * dt {
        let sd_r = p.cojump_return_sd(sigma);
        dlog_s += p.mu_jjr0 + p.mu_jjr1 * sigma + sd_r * s.n3;
        next += p.mu_jjsigma + p.sigma_jjsigma * (p.rho_j * s.n3 + (1.0 - p.rho_j * p.rho_j).sqrt() * s.n4);
        flags |= COJUMP;
    }
    BrIncrement {
        dlog_s,
        log_var: next,
        flags,
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BrPath {
    /// Log returns per step (percent).
    pub returns: Vec<f64>,
    /// Spot volatility `sigma_0 .. sigma_T`.
    pub sigma: Vec<f64>,
    /// Per-step jump flags.
    pub flags: Vec<u8>,
}

impl BrPath {
    pub fn count(&self, flag: u8) -> usize {
        self.flags.iter().filter(|f| *f & flag != 0).count()
    }
}

/// Simulates `horizon` steps of length `dt` days from spot volatility `sigma0`.
pub fn simulate_br(p: &BrParams, sigma0: f64, horizon: usize, dt: f64, rng: RngStream) -> Result<BrPath> {
    if !(sigma0 > 0.0 && sigma0.is_finite()) {
        return Err(Error::invalid(format!("initial spot volatility {sigma0} must be positive")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(format!("step size {dt} must be positive")));
    }
    p.validate()?;
    let mut r = rng.rng();
    let mut path = BrPath {
        returns: Vec::with_capacity(horizon),
        sigma: Vec::with_capacity(horizon + 1),
        flags: Vec::with_capacity(horizon),
    };
    let mut h = 2.0 * sigma0.ln();
    path.sigma.push(sigma0);
    for _ in 0..horizon {
        let inc = br_step(p, h, dt, &BrShocks::draw(&mut r));
        h = inc.log_var;
        path.returns.push(inc.dlog_s);
        path.sigma.push((0.5 * h).exp());
        path.flags.push(inc.flags);
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{correlation, mean};

    #[test]
    fn degenerate_diffusion_keeps_vol_constant() {
        let p = BrParams::diffusion(0.01, 0.0, 0.0, 0.0, 0.0);
        let path = simulate_br(&p, 1.5, 2000, 1.0 / 24.0, RngStream::from_seed(1)).unwrap();
        assert!(path.sigma.iter().all(|s| (s - 1.5).abs() < 1e-12));
        assert_eq!(path.count(JUMP_R | JUMP_SIGMA | COJUMP), 0);
    }

    #[test]
    fn leverage_clamps_to_one() {
        let p = BrParams::diffusion(0.0, 2.0, 0.0, 0.0, 0.5);
        assert_eq!(p.leverage(0.7), 1.0);
        let mut rng = RngStream::from_seed(2).rng();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for _ in 0..5000 {
            let s = BrShocks::draw(&mut rng);
            let inc = br_step(&p, 0.0, 1.0, &s);
            a.push(inc.dlog_s);
            b.push(inc.log_var);
        }
        assert!((correlation(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn drift_is_conserved_without_jumps() {
        let p = BrParams::diffusion(0.05, -0.3, -0.1, -0.1, 0.3);
        let (steps, dt) = (50, 0.1);
        let totals: Vec<f64> = (0..4000)
            .map(|i| {
                let path = simulate_br(&p, 1.0, steps, dt, RngStream::new(3, i)).unwrap();
                path.returns.iter().sum()
            })
            .collect();
        let se = crate::stats::std_dev(&totals) / (totals.len() as f64).sqrt();
        assert!((mean(&totals) - 0.05 * steps as f64 * dt).abs() < 4.0 * se);
    }

    #[test]
    fn cojump_count_matches_intensity() {
        let p = BrParams::btc_full();
        let steps = 252 * 24;
        let years = 40;
        let counts: Vec<usize> = (0..years)
            .map(|y| simulate_br(&p, 0.66, steps, 1.0 / 24.0, RngStream::new(4, y)).unwrap().count(COJUMP))
            .collect();
        let expected = 0.0584 * 252.0;
        let per_year = counts.iter().sum::<usize>() as f64 / years as f64;
        // Poisson 95% band on the pooled mean
        assert!((per_year - expected).abs() < 1.96 * (expected / years as f64).sqrt(), "{per_year}");
        let single = counts[0] as f64;
        assert!((single - expected).abs() < 1.96 * expected.sqrt() + 1.0, "{single}");
    }

    #[test]
    fn restrictions_pin_their_channels() {
        let p = JumpRestriction::NoCojumps.apply(&BrParams::btc_full());
        assert_eq!(p.lambda_rsigma, 0.0);
        assert_eq!(p.rho_j, 0.0);
        assert_eq!(p.lambda_sigma, 0.0519);
        let p = JumpRestriction::NoIndependentJumps.apply(&BrParams::btc_full());
        assert_eq!((p.lambda_r, p.lambda_sigma), (0.0, 0.0));
        assert_eq!(p.lambda_rsigma, 0.0584);
        assert_eq!(JumpRestriction::NoJumps.pinned().len(), 15);
    }
}
