//! Stochastic-volatility models with correlated jumps.
//!
//! The crate covers the whole estimation-to-pricing flow:
//!
//! - [`series`]: price/return series, unit handling and CSV ingestion.
//! - [`rng`]: reproducible counter-based random streams.
//! - [`simulate`]: Euler simulators for SV/SVJ/SVCJ and the non-affine co-jump (BR) model.
//! - [`mcmc`]: Gibbs/Metropolis-Hastings estimation of SV/SVJ/SVCJ plus jump detection
//!   and residual diagnostics.
//! - [`highfreq`]: threshold bipower spot variance, kernel cross-moments and
//!   simulated infinitesimal method-of-moments calibration of the co-jump model.
//! - [`pricing`]: crude Monte Carlo European option pricing, price grids and
//!   Black-Scholes implied volatility surfaces.
//! - [`baselines`]: ARIMA, t-GARCH(1,1) and t-EGARCH(1,1) with Ljung-Box diagnostics.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod highfreq;
pub mod mcmc;
pub mod optim;
pub mod pricing;
pub mod rng;
pub mod series;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use mcmc::{McmcConfig, PosteriorChain, PosteriorSummary, PriorSpec};
pub use rng::RngStream;
pub use series::{PriceSeries, ReturnSeries, Units};
pub use simulate::{BrParams, LatentPath, ModelFlavor, SvcjParams};
