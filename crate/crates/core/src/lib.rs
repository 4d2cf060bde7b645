//! Finite-difference simulation of the coupled singular parabolic system
//!
//! ```text
//! kappa_t = eps kappa_xx + rho_x rho_xx / kappa_x - tau rho_x
//! rho_t   = (1 + eps) rho_xx - tau kappa_x
//! ```
//!
//! on `(0, 1)` with `rho = 0` at both ends, `kappa(0) = 0`, `kappa(1) = 1`,
//! together with the tooling used to check computed trajectories: a
//! gradient-margin monitor, the decay floor `gamma(t)`, and discrete
//! Hölder, Sobolev, W^{2,1}_2 and parabolic BMO norms.

// `!(x > 0.0)` also rejects NaN; Gaussian elimination reads best indexed.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod grid;
pub mod initial_data;
pub mod invariants;
pub mod io;
pub mod norms;
pub mod solver;
pub mod system;

pub use error::{Error, Result};
pub use grid::{diff1, diff2, diff3, linf_norm, lp_norm, make_uniform_grid, Grid, ScalarField};
pub use initial_data::{
    build_initial_data, verify_initial_data, InitialData, InitialDataReport, ModelParams,
};
pub use solver::{solve, step_picard, StatePair, StepperConfig, Trajectory};
pub use system::{RegParams, ThetaPair};
