//! Right-hand sides of the coupled system, its truncated variant, and the
//! density variables theta+- = (kappa_x +- rho_x) / 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_same_grid, d1_slice, d2_slice, diff1, diff2, ScalarField};
use crate::initial_data::ModelParams;
use crate::solver::StatePair;

/// Constants of the truncated system: the denominator floor `gamma0 / 2`
/// and the slope cap `2 * m0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegParams {
    pub gamma0: f64,
    pub m0: f64,
}

impl RegParams {
    pub fn new(gamma0: f64, m0: f64) -> Result<Self> {
        if !(gamma0 > 0.0 && gamma0 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma0 = {gamma0} not in (0,1)"
            )));
        }
        if !(m0 > 0.0) || !m0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "m0 = {m0} must be positive"
            )));
        }
        Ok(Self { gamma0, m0 })
    }

    /// `(gamma0/2) + (kappa_x - gamma0/2)^+`, never below `gamma0 / 2`.
    #[inline]
    pub fn denominator(&self, kappa_x: f64) -> f64 {
        let half = 0.5 * self.gamma0;
        half + (kappa_x - half).max(0.0)
    }

    #[inline]
    pub fn slope_factor(&self, rho_x: f64) -> f64 {
        truncate(rho_x, 2.0 * self.m0)
    }
}

/// Clamp to `[-zeta, zeta]`.
#[inline]
pub fn truncate(y: f64, zeta: f64) -> f64 {
    debug_assert!(zeta > 0.0);
    if y >= zeta {
        zeta
    } else if y <= -zeta {
        -zeta
    } else {
        y
    }
}

/// `(1+eps) rho_xx - tau kappa_x`.
pub fn rhs_rho(state: &StatePair, params: &ModelParams) -> Result<ScalarField> {
    check_same_grid(&state.rho, &state.kappa)?;
    let rho_xx = diff2(&state.rho);
    let kappa_x = diff1(&state.kappa);
    rho_xx.zip_map(&kappa_x, |rxx, kx| {
        (1.0 + params.epsilon) * rxx - params.tau * kx
    })
}

/// Truncated kappa right-hand side, evaluated nodewise on raw slices.
pub(crate) fn kappa_source_regularized(
    rho_xx: &[f64],
    rho_x: &[f64],
    kappa_x: &[f64],
    tau: f64,
    reg: &RegParams,
    out: &mut [f64],
) {
    for i in 0..out.len() {
        out[i] =
            rho_xx[i] * reg.slope_factor(rho_x[i]) / reg.denominator(kappa_x[i]) - tau * rho_x[i];
    }
}

pub fn rhs_kappa_regularized(
    state: &StatePair,
    params: &ModelParams,
    reg: &RegParams,
) -> Result<ScalarField> {
    check_same_grid(&state.rho, &state.kappa)?;
    let h = state.grid().h();
    let rho_x = d1_slice(state.rho.values(), h);
    let rho_xx = d2_slice(state.rho.values(), h);
    let kappa_x = d1_slice(state.kappa.values(), h);
    let kappa_xx = d2_slice(state.kappa.values(), h);
    let mut out = vec![0.0; rho_x.len()];
    kappa_source_regularized(&rho_xx, &rho_x, &kappa_x, params.tau, reg, &mut out);
    for (o, kxx) in out.iter_mut().zip(&kappa_xx) {
        *o += params.epsilon * kxx;
    }
    ScalarField::new(state.grid(), out)
}

/// Untruncated kappa right-hand side `eps kappa_xx + rho_x rho_xx / kappa_x - tau rho_x`.
pub fn rhs_kappa_exact(state: &StatePair, params: &ModelParams) -> Result<ScalarField> {
    check_same_grid(&state.rho, &state.kappa)?;
    let h = state.grid().h();
    let kappa_x = d1_slice(state.kappa.values(), h);
    if let Some((node, &value)) = kappa_x.iter().enumerate().find(|(_, k)| !(**k > 0.0)) {
        return Err(Error::SingularDenominator { node, value });
    }
    let rho_x = d1_slice(state.rho.values(), h);
    let rho_xx = d2_slice(state.rho.values(), h);
    let kappa_xx = d2_slice(state.kappa.values(), h);
    let out = (0..rho_x.len())
        .map(|i| {
            params.epsilon * kappa_xx[i] + rho_x[i] * rho_xx[i] / kappa_x[i] - params.tau * rho_x[i]
        })
        .collect();
    ScalarField::new(state.grid(), out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaPair {
    pub theta_plus: ScalarField,
    pub theta_minus: ScalarField,
}

impl ThetaPair {
    pub fn min_density(&self) -> f64 {
        self.theta_plus.min().min(self.theta_minus.min())
    }
}

pub fn to_theta(state: &StatePair) -> Result<ThetaPair> {
    check_same_grid(&state.rho, &state.kappa)?;
    let rho_x = diff1(&state.rho);
    let kappa_x = diff1(&state.kappa);
    Ok(ThetaPair {
        theta_plus: kappa_x.zip_map(&rho_x, |k, r| 0.5 * (k + r))?,
        theta_minus: kappa_x.zip_map(&rho_x, |k, r| 0.5 * (k - r))?,
    })
}

/// Backward-difference residual of the theta system
/// `theta+-_t = eps theta+-_xx +- [((theta+_x - theta-_x)/(theta+ + theta-) - tau) theta+-]_x`.
pub fn residual_theta(
    theta: &ThetaPair,
    theta_prev: &ThetaPair,
    dt: f64,
    params: &ModelParams,
) -> Result<(ScalarField, ScalarField)> {
    residual_theta_with_source(theta, theta_prev, dt, params, None)
}

/// As [`residual_theta`], subtracting a known source `(s+, s-)` from each line.
pub fn residual_theta_with_source(
    theta: &ThetaPair,
    theta_prev: &ThetaPair,
    dt: f64,
    params: &ModelParams,
    source: Option<(&ScalarField, &ScalarField)>,
) -> Result<(ScalarField, ScalarField)> {
    let tp = &theta.theta_plus;
    let tm = &theta.theta_minus;
    check_same_grid(tp, tm)?;
    check_same_grid(tp, &theta_prev.theta_plus)?;
    check_same_grid(tp, &theta_prev.theta_minus)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dt = {dt} must be positive"
        )));
    }
    let grid = tp.grid();
    let h = grid.h();
    let (p, m) = (tp.values(), tm.values());
    let total: Vec<f64> = p.iter().zip(m).map(|(a, b)| a + b).collect();
    if let Some((node, &value)) = total.iter().enumerate().find(|(_, s)| !(**s > 0.0)) {
        return Err(Error::SingularDenominator { node, value });
    }
    let px = d1_slice(p, h);
    let mx = d1_slice(m, h);
    let drift: Vec<f64> = (0..p.len())
        .map(|i| (px[i] - mx[i]) / total[i] - params.tau)
        .collect();

    let line = |cur: &[f64], prev: &[f64], sign: f64, src: Option<&ScalarField>| {
        let flux: Vec<f64> = drift.iter().zip(cur).map(|(d, c)| d * c).collect();
        let flux_x = d1_slice(&flux, h);
        let cur_xx = d2_slice(cur, h);
        let out: Vec<f64> = (0..cur.len())
            .map(|i| {
                let s = src.map_or(0.0, |f| f.values()[i]);
                (cur[i] - prev[i]) / dt - params.epsilon * cur_xx[i] - sign * flux_x[i] - s
            })
            .collect();
        ScalarField::new(grid, out)
    };
    let (sp, sm) = match source {
        Some((a, b)) => (Some(a), Some(b)),
        None => (None, None),
    };
    Ok((
        line(p, theta_prev.theta_plus.values(), 1.0, sp)?,
        line(m, theta_prev.theta_minus.values(), -1.0, sm)?,
    ))
}
