//! Manufactured-solution harness: closed-form pairs, their forcing, and
//! error tables over refinement ladders.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{default_reg, solve_with, Forcing, StepperConfig};
use crate::error::{Error, Result};
use crate::grid::{diff1, Grid, ScalarField};
use crate::initial_data::{InitialData, ModelParams};
use crate::system::{residual_theta_with_source, to_theta};

/// Nodes dropped at each end when measuring theta residuals. The residual
/// nests three first-derivative stencils, and the one-sided end closures lose
/// consistency after two nestings.
pub const THETA_SKIP: usize = 3;

/// A smooth space-time field with the derivatives the forcing needs.
pub trait ClosedFormField: Sync {
    fn value(&self, x: f64, t: f64) -> f64;
    fn d_t(&self, x: f64, t: f64) -> f64;
    fn d_x(&self, x: f64, t: f64) -> f64;
    fn d_xx(&self, x: f64, t: f64) -> f64;
}

/// `slope * x + amplitude * exp(-rate t) * sin(pi x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayingSine {
    pub slope: f64,
    pub amplitude: f64,
    pub rate: f64,
}

impl ClosedFormField for DecayingSine {
    fn value(&self, x: f64, t: f64) -> f64 {
        self.slope * x + self.amplitude * (-self.rate * t).exp() * (PI * x).sin()
    }
    fn d_t(&self, x: f64, t: f64) -> f64 {
        -self.rate * self.amplitude * (-self.rate * t).exp() * (PI * x).sin()
    }
    fn d_x(&self, x: f64, t: f64) -> f64 {
        self.slope + PI * self.amplitude * (-self.rate * t).exp() * (PI * x).cos()
    }
    fn d_xx(&self, x: f64, t: f64) -> f64 {
        -PI * PI * self.amplitude * (-self.rate * t).exp() * (PI * x).sin()
    }
}

/// A pair `(rho*, kappa*)` together with the model it is manufactured for.
pub struct ManufacturedPair<'a> {
    pub rho: &'a dyn ClosedFormField,
    pub kappa: &'a dyn ClosedFormField,
    pub params: ModelParams,
}

impl Forcing for ManufacturedPair<'_> {
    fn rho_source(&self, x: f64, t: f64) -> f64 {
        let p = &self.params;
        self.rho.d_t(x, t) - (1.0 + p.epsilon) * self.rho.d_xx(x, t) + p.tau * self.kappa.d_x(x, t)
    }

    fn kappa_source(&self, x: f64, t: f64) -> f64 {
        let p = &self.params;
        let rx = self.rho.d_x(x, t);
        self.kappa.d_t(x, t)
            - p.epsilon * self.kappa.d_xx(x, t)
            - rx * self.rho.d_xx(x, t) / self.kappa.d_x(x, t)
            + p.tau * rx
    }
}

impl ManufacturedPair<'_> {
    pub fn sample(&self, grid: Grid, t: f64) -> (ScalarField, ScalarField) {
        (
            ScalarField::from_fn(grid, |x| self.rho.value(x, t)),
            ScalarField::from_fn(grid, |x| self.kappa.value(x, t)),
        )
    }

    /// Forcing of the theta system: `(d_x f_kappa +- d_x f_rho) / 2`.
    pub fn theta_source(&self, grid: Grid, t: f64) -> (ScalarField, ScalarField) {
        let fr = diff1(&ScalarField::from_fn(grid, |x| self.rho_source(x, t)));
        let fk = diff1(&ScalarField::from_fn(grid, |x| self.kappa_source(x, t)));
        let plus = fk.zip_map(&fr, |k, r| 0.5 * (k + r)).expect("same grid");
        let minus = fk.zip_map(&fr, |k, r| 0.5 * (k - r)).expect("same grid");
        (plus, minus)
    }

    fn min_kappa_x(&self, t_end: f64) -> f64 {
        let mut m = f64::INFINITY;
        for it in 0..=20 {
            let t = t_end * it as f64 / 20.0;
            for ix in 0..=200 {
                m = m.min(self.kappa.d_x(ix as f64 / 200.0, t));
            }
        }
        m
    }
}

/// One grid/step combination of a refinement ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub n_nodes: usize,
    pub dt: f64,
}

impl Rung {
    /// `dt = c h^2` for each node count.
    pub fn diffusive_ladder(nodes: &[usize], c: f64) -> Vec<Rung> {
        nodes
            .iter()
            .map(|&n| {
                let h = 1.0 / (n - 1) as f64;
                Rung {
                    n_nodes: n,
                    dt: c * h * h,
                }
            })
            .collect()
    }

    pub fn temporal_ladder(n_nodes: usize, dts: &[f64]) -> Vec<Rung> {
        dts.iter().map(|&dt| Rung { n_nodes, dt }).collect()
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.n_nodes - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmsRow {
    pub n_nodes: usize,
    pub dt: f64,
    pub err_rho: f64,
    pub err_kappa: f64,
    /// Max of the two errors.
    pub err: f64,
    /// Max-norm residual of the forced theta system over the last step,
    /// skipping [`THETA_SKIP`] nodes at each end.
    pub theta_residual: f64,
}

/// Solves the forced system on every rung and reports max-norm errors
/// against the closed form at `t_end`.
pub fn solve_manufactured(
    pair: &ManufacturedPair<'_>,
    t_end: f64,
    rungs: &[Rung],
    cfg: &StepperConfig,
) -> Result<Vec<MmsRow>> {
    let min_kx = pair.min_kappa_x(t_end);
    if !(min_kx > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "manufactured kappa_x must stay positive (sampled min {min_kx})"
        )));
    }
    rungs
        .iter()
        .map(|rung| {
            let grid = Grid::uniform(rung.n_nodes)?;
            let (mut rho0, mut kappa0) = pair.sample(grid, 0.0);
            pin_boundary(&mut rho0, [0.0, 0.0])?;
            pin_boundary(&mut kappa0, [0.0, 1.0])?;
            let init = InitialData::from_fields(rho0, kappa0)?;
            let reg = default_reg(&init)?;
            let step_cfg = StepperConfig {
                dt: rung.dt,
                ..*cfg
            };
            let traj = solve_with(&init, t_end, &step_cfg, &pair.params, reg, Some(pair))?;
            let last = traj.last();
            let (rho_ex, kappa_ex) = pair.sample(grid, last.time);
            let err_of = |a: &ScalarField, b: &ScalarField| {
                a.values()
                    .iter()
                    .zip(b.values())
                    .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()))
            };
            let err_rho = err_of(&last.rho, &rho_ex);
            let err_kappa = err_of(&last.kappa, &kappa_ex);

            let prev = &traj.states[traj.states.len() - 2];
            let dt_last = last.time - prev.time;
            let (sp, sm) = pair.theta_source(grid, last.time);
            let (rp, rm) = residual_theta_with_source(
                &to_theta(last)?,
                &to_theta(prev)?,
                dt_last,
                &pair.params,
                Some((&sp, &sm)),
            )?;
            let n = grid.n_nodes();
            let theta_residual = rp.values()[THETA_SKIP..n - THETA_SKIP]
                .iter()
                .chain(&rm.values()[THETA_SKIP..n - THETA_SKIP])
                .fold(0.0f64, |m, v| m.max(v.abs()));
            Ok(MmsRow {
                n_nodes: rung.n_nodes,
                dt: rung.dt,
                err_rho,
                err_kappa,
                err: err_rho.max(err_kappa),
                theta_residual,
            })
        })
        .collect()
}

// Snaps end values that are within rounding of the Dirichlet data
// (sin(pi) is not exactly zero in floating point).
fn pin_boundary(f: &mut ScalarField, ends: [f64; 2]) -> Result<()> {
    let n = f.len();
    let v = f.values_mut();
    for (idx, want) in [0, n - 1].into_iter().zip(ends) {
        if (v[idx] - want).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "manufactured solution has boundary value {} instead of {want}",
                v[idx]
            )));
        }
        v[idx] = want;
    }
    Ok(())
}

/// Observed orders between consecutive entries: `log(e_i/e_{i+1}) / log(s_i/s_{i+1})`.
pub fn observed_orders(errors: &[f64], scales: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .zip(scales.windows(2))
        .map(|(e, s)| (e[0] / e[1]).ln() / (s[0] / s[1]).ln())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::residual_theta_with_source;

    fn standard() -> (DecayingSine, DecayingSine) {
        (
            DecayingSine {
                slope: 0.0,
                amplitude: 0.1,
                rate: 1.0,
            },
            DecayingSine {
                slope: 1.0,
                amplitude: 0.05,
                rate: 1.0,
            },
        )
    }

    #[test]
    fn steady_linear_pair_has_zero_forcing_and_error() {
        let rho = DecayingSine {
            slope: 0.0,
            amplitude: 0.0,
            rate: 0.0,
        };
        let kappa = DecayingSine {
            slope: 1.0,
            amplitude: 0.0,
            rate: 0.0,
        };
        let pair = ManufacturedPair {
            rho: &rho,
            kappa: &kappa,
            params: ModelParams::new(1.0, 0.0).unwrap(),
        };
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(pair.rho_source(x, 0.2), 0.0);
            assert_eq!(pair.kappa_source(x, 0.2), 0.0);
        }
        let rows = solve_manufactured(
            &pair,
            0.05,
            &[Rung {
                n_nodes: 21,
                dt: 1e-2,
            }],
            &StepperConfig::default(),
        )
        .unwrap();
        assert!(rows[0].err < 1e-14, "{rows:?}");
    }

    #[test]
    fn forcing_matches_finite_difference_substitution() {
        let (r, k) = standard();
        let params = ModelParams::new(0.5, 1.0).unwrap();
        let pair = ManufacturedPair {
            rho: &r,
            kappa: &k,
            params,
        };
        // Independent evaluation: derivatives by central differences of value().
        let (x, t, d) = (0.37, 0.4, 1e-4);
        let dx = |f: &DecayingSine| (f.value(x + d, t) - f.value(x - d, t)) / (2.0 * d);
        let dxx = |f: &DecayingSine| {
            (f.value(x + d, t) - 2.0 * f.value(x, t) + f.value(x - d, t)) / (d * d)
        };
        let dtt = |f: &DecayingSine| (f.value(x, t + d) - f.value(x, t - d)) / (2.0 * d);
        let want_rho = dtt(&r) - 1.5 * dxx(&r) + dx(&k);
        let want_kappa = dtt(&k) - 0.5 * dxx(&k) - dx(&r) * dxx(&r) / dx(&k) + dx(&r);
        assert!((pair.rho_source(x, t) - want_rho).abs() < 1e-6);
        assert!((pair.kappa_source(x, t) - want_kappa).abs() < 1e-6);
    }

    #[test]
    fn exact_theta_residual_converges() {
        let (r, k) = standard();
        let params = ModelParams::new(0.5, 1.0).unwrap();
        let pair = ManufacturedPair {
            rho: &r,
            kappa: &k,
            params,
        };
        let t = 0.3;
        let residual = |n: usize, dt: f64| {
            let g = Grid::uniform(n).unwrap();
            let state = |time: f64| {
                let (a, b) = pair.sample(g, time);
                crate::solver::StatePair::new(a, b, time).unwrap()
            };
            let (sp, sm) = pair.theta_source(g, t);
            let (a, b) = residual_theta_with_source(
                &to_theta(&state(t)).unwrap(),
                &to_theta(&state(t - dt)).unwrap(),
                dt,
                &params,
                Some((&sp, &sm)),
            )
            .unwrap();
            let interior = |f: &ScalarField| {
                f.values()[THETA_SKIP..n - THETA_SKIP]
                    .iter()
                    .fold(0.0f64, |m, v| m.max(v.abs()))
            };
            interior(&a).max(interior(&b))
        };
        let errs: Vec<f64> = [(41, 4e-3), (81, 1e-3), (161, 2.5e-4)]
            .iter()
            .map(|&(n, dt)| residual(n, dt))
            .collect();
        let orders = observed_orders(&errs, &[4e-3, 1e-3, 2.5e-4]);
        for o in orders {
            assert!(o > 0.8, "{errs:?}");
        }
    }

    #[test]
    fn rejects_degenerate_pair() {
        let r = DecayingSine {
            slope: 0.0,
            amplitude: 0.0,
            rate: 0.0,
        };
        let k = DecayingSine {
            slope: -1.0,
            amplitude: 0.0,
            rate: 0.0,
        };
        let pair = ManufacturedPair {
            rho: &r,
            kappa: &k,
            params: ModelParams::new(1.0, 0.0).unwrap(),
        };
        let rungs = [Rung {
            n_nodes: 11,
            dt: 0.01,
        }];
        assert!(solve_manufactured(&pair, 0.1, &rungs, &StepperConfig::default()).is_err());
    }
}
