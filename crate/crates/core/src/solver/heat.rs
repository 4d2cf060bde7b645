//! Fourier-series solution of `u_t = eps u_xx` with fixed end values.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::ScalarField;

pub const FOURIER_TERMS: usize = 200;

/// Evaluates the heat flow of `phi` at time `t_end` from its sine series.
///
/// The end values of `phi` are held fixed; the remainder is expanded in
/// `sin(k pi x)` with coefficients from the trapezoid rule, which is the
/// exact discrete sine transform on the nodes. Modes beyond `n - 2` alias
/// on the grid and are dropped.
pub fn heat_reference(phi: &ScalarField, t_end: f64, eps: f64) -> Result<ScalarField> {
    if !(t_end >= 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "heat reference needs t >= 0 and eps > 0 (got t = {t_end}, eps = {eps})"
        )));
    }
    let grid = phi.grid();
    let n = grid.n_nodes();
    let h = grid.h();
    let v = phi.values();
    let (left, right) = (v[0], v[n - 1]);
    let lift = |x: f64| left * (1.0 - x) + right * x;
    let resid: Vec<f64> = (0..n).map(|i| v[i] - lift(grid.x(i))).collect();
    let terms = FOURIER_TERMS.min(n - 2);

    let decay_coeffs: Vec<f64> = (1..=terms)
        .map(|k| {
            let kpi = k as f64 * PI;
            let b: f64 = (1..n - 1)
                .map(|j| resid[j] * (kpi * grid.x(j)).sin())
                .sum::<f64>()
                * 2.0
                * h;
            b * (-eps * kpi * kpi * t_end).exp()
        })
        .collect();

    let out = (0..n)
        .map(|i| {
            let x = grid.x(i);
            if i == 0 || i == n - 1 {
                return v[i];
            }
            lift(x)
                + decay_coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, b)| b * ((k + 1) as f64 * PI * x).sin())
                    .sum::<f64>()
        })
        .collect();
    ScalarField::new(grid, out)
}
