//! Semi-implicit time stepping with a Picard closure per step.
//!
//! Each step freezes an iterate `(rho_hat, kappa_hat)`, solves the rho
//! equation implicitly in `rho_xx` with source `-tau kappa_hat_x`, then the
//! kappa equation implicitly in `kappa_xx` with the truncated coupling term
//! built from the fresh `rho_xx`. Sweeps repeat until successive iterates
//! agree to `picard_tol` in the max norm.

mod heat;
mod manufactured;
mod tridiag;

pub use heat::{heat_reference, FOURIER_TERMS};
pub use manufactured::{
    observed_orders, solve_manufactured, ClosedFormField, DecayingSine, ManufacturedPair, MmsRow,
    Rung, THETA_SKIP,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_same_grid, d1_slice, d2_slice, diff1, linf_norm, Grid, ScalarField};
use crate::initial_data::{InitialData, ModelParams};
use crate::system::{kappa_source_regularized, RegParams};
use tridiag::solve_implicit_diffusion;

/// Smallest admissible step as a fraction of the run length.
pub const MIN_DT_FRACTION: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub rho: ScalarField,
    pub kappa: ScalarField,
    pub time: f64,
}

impl StatePair {
    pub fn new(rho: ScalarField, kappa: ScalarField, time: f64) -> Result<Self> {
        check_same_grid(&rho, &kappa)?;
        Ok(Self { rho, kappa, time })
    }

    pub fn grid(&self) -> Grid {
        self.rho.grid()
    }

    /// `max(|rho(0)|, |rho(1)|, |kappa(0)|, |kappa(1) - 1|)`.
    pub fn boundary_defect(&self) -> f64 {
        let (r, k) = (self.rho.values(), self.kappa.values());
        let n = r.len();
        [r[0], r[n - 1], k[0], k[n - 1] - 1.0]
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub dt_backoff: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            picard_tol: 1e-10,
            picard_max_iters: 50,
            dt_backoff: 0.5,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "dt = {} must be positive",
                self.dt
            )));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "picard_tol must be positive".into(),
            ));
        }
        if self.picard_max_iters == 0 {
            return Err(Error::InvalidParameter(
                "picard_max_iters must be >= 1".into(),
            ));
        }
        if !(self.dt_backoff > 0.0 && self.dt_backoff < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "dt_backoff = {} not in (0,1)",
                self.dt_backoff
            )));
        }
        Ok(())
    }
}

/// Diagnostics of one accepted step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub dt: f64,
    pub iterations: usize,
    /// Last gap over the one before it; 0 when a single sweep sufficed.
    pub contraction_ratio: f64,
    /// Max-norm gaps between successive Picard iterates.
    pub gaps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<StatePair>,
    pub params: ModelParams,
    pub reg: RegParams,
    /// One entry per transition `states[k] -> states[k+1]`.
    pub steps: Vec<StepStats>,
}

impl Trajectory {
    pub fn grid(&self) -> Grid {
        self.states[0].grid()
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }

    pub fn last(&self) -> &StatePair {
        self.states.last().expect("trajectory is never empty")
    }

    /// Strictly increasing times, one grid, exact boundary values.
    pub fn check_invariants(&self) -> Result<()> {
        let grid = self.grid();
        for w in self.states.windows(2) {
            if !(w[1].time > w[0].time) {
                return Err(Error::InvalidParameter(format!(
                    "non-increasing time stamps {} -> {}",
                    w[0].time, w[1].time
                )));
            }
        }
        for s in &self.states {
            if s.grid() != grid {
                return Err(Error::GridMismatch {
                    left: grid.n_nodes(),
                    right: s.grid().n_nodes(),
                });
            }
            if s.boundary_defect() != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "boundary values violated at t = {}",
                    s.time
                )));
            }
        }
        Ok(())
    }
}

/// Source terms added to the two equations, evaluated at the new time level.
pub trait Forcing {
    fn rho_source(&self, x: f64, t: f64) -> f64;
    fn kappa_source(&self, x: f64, t: f64) -> f64;
}

/// M0 rule: twice the initial slope bound plus one.
pub fn default_reg(init: &InitialData) -> Result<RegParams> {
    let m0 = 2.0 * linf_norm(&diff1(&init.rho0)) + 1.0;
    RegParams::new(init.gamma0, m0)
}

/// One step of size `cfg.dt`. Returns the new state, the number of Picard
/// sweeps and the last contraction ratio.
pub fn step_picard(
    state: &StatePair,
    cfg: &StepperConfig,
    params: &ModelParams,
    reg: &RegParams,
) -> Result<(StatePair, usize, f64)> {
    let (next, stats) = step_picard_forced(state, cfg, params, reg, None)?;
    Ok((next, stats.iterations, stats.contraction_ratio))
}

pub(crate) fn step_picard_forced(
    state: &StatePair,
    cfg: &StepperConfig,
    params: &ModelParams,
    reg: &RegParams,
    forcing: Option<&dyn Forcing>,
) -> Result<(StatePair, StepStats)> {
    let grid = state.grid();
    let n = grid.n_nodes();
    let h = grid.h();
    let dt = cfg.dt;
    let t_new = state.time + dt;
    let (eps, tau) = (params.epsilon, params.tau);
    let r_rho = dt * (1.0 + eps) / (h * h);
    let r_kappa = dt * eps / (h * h);
    let rho_prev = state.rho.values();
    let kappa_prev = state.kappa.values();
    let (rho_left, rho_right) = (rho_prev[0], rho_prev[n - 1]);
    let (kappa_left, kappa_right) = (kappa_prev[0], kappa_prev[n - 1]);

    let (f_rho, f_kappa): (Vec<f64>, Vec<f64>) = match forcing {
        Some(f) => (0..n)
            .map(|i| {
                (
                    f.rho_source(grid.x(i), t_new),
                    f.kappa_source(grid.x(i), t_new),
                )
            })
            .unzip(),
        None => (vec![0.0; n], vec![0.0; n]),
    };

    let mut rho_hat = rho_prev.to_vec();
    let mut kappa_hat = kappa_prev.to_vec();
    let mut coupling = vec![0.0; n];
    let mut gaps = Vec::new();

    for sweep in 1..=cfg.picard_max_iters {
        let kappa_hat_x = d1_slice(&kappa_hat, h);
        let mut rho_new: Vec<f64> = (0..n)
            .map(|i| rho_prev[i] + dt * (-tau * kappa_hat_x[i] + f_rho[i]))
            .collect();
        solve_implicit_diffusion(r_rho, rho_left, rho_right, &mut rho_new);

        let rho_new_xx = d2_slice(&rho_new, h);
        let rho_hat_x = d1_slice(&rho_hat, h);
        kappa_source_regularized(
            &rho_new_xx,
            &rho_hat_x,
            &kappa_hat_x,
            tau,
            reg,
            &mut coupling,
        );
        let mut kappa_new: Vec<f64> = (0..n)
            .map(|i| kappa_prev[i] + dt * (coupling[i] + f_kappa[i]))
            .collect();
        solve_implicit_diffusion(r_kappa, kappa_left, kappa_right, &mut kappa_new);

        let gap = max_gap(&rho_new, &rho_hat).max(max_gap(&kappa_new, &kappa_hat));
        gaps.push(gap);
        rho_hat = rho_new;
        kappa_hat = kappa_new;
        if !gap.is_finite() {
            break;
        }
        if gap < cfg.picard_tol {
            let contraction_ratio = match gaps.len() {
                0 | 1 => 0.0,
                k => gaps[k - 1] / gaps[k - 2],
            };
            let next = StatePair {
                rho: ScalarField::from_raw(grid, rho_hat),
                kappa: ScalarField::from_raw(grid, kappa_hat),
                time: t_new,
            };
            return Ok((
                next,
                StepStats {
                    dt,
                    iterations: sweep,
                    contraction_ratio,
                    gaps,
                },
            ));
        }
    }
    Err(Error::PicardDiverged {
        iters: gaps.len(),
        gap: gaps.last().copied().unwrap_or(f64::NAN),
    })
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| {
        let d = (x - y).abs();
        if d.is_nan() {
            f64::NAN
        } else {
            m.max(d)
        }
    })
}

/// Integrates from the initial data to `t_end`.
///
/// On [`Error::PicardDiverged`] the step is retried with `dt * dt_backoff`;
/// the reduced step is kept for the rest of the run.
pub fn solve(
    init: &InitialData,
    t_end: f64,
    cfg: &StepperConfig,
    params: &ModelParams,
) -> Result<Trajectory> {
    let reg = default_reg(init)?;
    solve_with(init, t_end, cfg, params, reg, None)
}

pub(crate) fn solve_with(
    init: &InitialData,
    t_end: f64,
    cfg: &StepperConfig,
    params: &ModelParams,
    reg: RegParams,
    forcing: Option<&dyn Forcing>,
) -> Result<Trajectory> {
    params.validate()?;
    cfg.validate()?;
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "t_end = {t_end} must be positive"
        )));
    }
    let first = StatePair::new(init.rho0.clone(), init.kappa0.clone(), 0.0)?;
    if first.boundary_defect() != 0.0 {
        return Err(Error::InvalidParameter(
            "initial data must satisfy rho(0)=rho(1)=kappa(0)=0, kappa(1)=1".into(),
        ));
    }

    let mut states = vec![first];
    let mut steps = Vec::new();
    let mut dt = cfg.dt;
    let min_dt = MIN_DT_FRACTION * t_end;
    loop {
        let current = states.last().unwrap();
        let remaining = t_end - current.time;
        if remaining <= 1e-12 * t_end {
            break;
        }
        // finish exactly on t_end; a short final step does not change dt
        let step_dt = if remaining <= dt * (1.0 + 1e-9) {
            remaining
        } else {
            dt
        };
        let step_cfg = StepperConfig {
            dt: step_dt,
            ..*cfg
        };
        match step_picard_forced(current, &step_cfg, params, &reg, forcing) {
            Ok((mut next, stats)) => {
                if step_dt == remaining {
                    next.time = t_end;
                }
                states.push(next);
                steps.push(stats);
            }
            Err(Error::PicardDiverged { .. }) => {
                dt *= cfg.dt_backoff;
                if dt < min_dt {
                    return Err(Error::StepCollapse {
                        dt,
                        time: current.time,
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Trajectory {
        states,
        params: *params,
        reg,
        steps,
    })
}
