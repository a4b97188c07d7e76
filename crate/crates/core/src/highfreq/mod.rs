//! High-frequency estimators: threshold bipower spot variance, kernel estimates
//! of infinitesimal cross-moments, and minimum-distance calibration of the
//! co-jump model against them.

mod crossmom;
mod nimm;
mod panel;
mod spot;

pub use crate::simulate::JumpRestriction;
pub use crossmom::{cross_moment_kernel, cross_moments, default_bandwidth, default_grid, CrossMomentEstimate, MomentOrder, NIMM_ORDERS};
pub use nimm::{model_moments, nimm_calibrate, nimm_objective, MomentShocks, NimmConfig, NimmFit};
pub use panel::{IntradayPanel, MINUTES_PER_DAY};
pub use spot::{spot_variance_tbv, SpotVariancePanel, DEFAULT_THRESHOLD_MULT};
