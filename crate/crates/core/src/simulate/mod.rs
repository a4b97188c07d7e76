//! Path simulators for the daily SV/SVJ/SVCJ family and the BR co-jump model.

mod br;
mod svcj;

pub use br::{br_step, simulate_br, BrIncrement, BrParams, BrPath, BrShocks, JumpRestriction, COJUMP, JUMP_R, JUMP_SIGMA};
pub use svcj::{
    simulate_svcj, svcj_step, LatentPath, ModelFlavor, SvcjParams, SvcjShocks, SvcjStep, SIMULATION_START,
};
