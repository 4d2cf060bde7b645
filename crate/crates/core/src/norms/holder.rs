//! Hölder seminorms and the parabolic Hölder norm `|v|^(l)`.

use rayon::prelude::*;

use super::SpaceTimeField;
use crate::error::{Error, Result};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "Hölder exponent {alpha} outside (0, 1)"
        )))
    }
}

/// Largest `|v(x,t) - v(x',t)| / |x - x'|^alpha` over all same-time node pairs.
pub fn holder_seminorm_x(f: &SpaceTimeField, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let h = f.h();
    let best = (0..f.nt())
        .into_par_iter()
        .map(|j| pair_max(f.row(j), h, alpha))
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// Largest `|v(x,t) - v(x,t')| / |t - t'|^alpha` over all same-node time pairs.
pub fn holder_seminorm_t(f: &SpaceTimeField, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let dt = f.dt();
    let best = (0..f.nx())
        .into_par_iter()
        .map(|i| {
            let col: Vec<f64> = (0..f.nt()).map(|j| f.at(i, j)).collect();
            pair_max(&col, dt, alpha)
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

fn pair_max(v: &[f64], step: f64, alpha: f64) -> f64 {
    // the weights only depend on the index gap
    let weights: Vec<f64> = (0..v.len())
        .map(|d| (d as f64 * step).powf(-alpha))
        .collect();
    let mut best = 0.0f64;
    for a in 0..v.len() {
        for b in a + 1..v.len() {
            best = best.max((v[b] - v[a]).abs() * weights[b - a]);
        }
    }
    best
}

/// Source of the mixed derivatives `D_t^r D_x^s v` used by [`holder_norm`].
pub trait DerivativeProvider {
    fn derivative(&self, f: &SpaceTimeField, r: usize, s: usize) -> Result<SpaceTimeField>;
}

/// Grid stencils in both directions.
#[derive(Debug, Clone, Copy, Default)]
pub struct FiniteDifferences;

impl DerivativeProvider for FiniteDifferences {
    fn derivative(&self, f: &SpaceTimeField, r: usize, s: usize) -> Result<SpaceTimeField> {
        if r == 0 && s == 0 {
            return Ok(f.clone());
        }
        f.fd_derivative(r, s)
    }
}

/// Parabolic Hölder norm of non-integer order `l` in `(0, 4)`:
/// sup norms of every `D_t^r D_x^s v` with `2r + s <= [l]`, x-seminorms of
/// order `l - [l]` of the top derivatives, and t-seminorms of order
/// `(l - 2r - s)/2` whenever that lies in `(0, 1)`.
pub fn holder_norm(f: &SpaceTimeField, ell: f64, provider: &dyn DerivativeProvider) -> Result<f64> {
    if !ell.is_finite() || ell.fract() == 0.0 {
        return Err(Error::IntegerOrder(ell));
    }
    if !(ell > 0.0 && ell < 4.0) {
        return Err(Error::InvalidParameter(format!(
            "Hölder order {ell} outside (0, 4)"
        )));
    }
    let k = ell.floor() as usize;
    let mut total = 0.0;
    for r in 0..=k / 2 {
        for s in 0..=k - 2 * r {
            let d = provider.derivative(f, r, s)?;
            total += d.linf();
            let order = 2 * r + s;
            if order == k {
                total += holder_seminorm_x(&d, ell - k as f64)?;
            }
            let gap = ell - order as f64;
            if gap < 2.0 {
                total += holder_seminorm_t(&d, gap / 2.0)?;
            }
        }
    }
    Ok(total)
}
