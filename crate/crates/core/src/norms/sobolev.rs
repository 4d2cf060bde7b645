//! Fractional Sobolev norm on the unit interval and the parabolic
//! `W^{2,1}_2` norm.

use rayon::prelude::*;

use super::SpaceTimeField;
use crate::error::{Error, Result};
use crate::grid::{diff1, diff2, diff3, lp_norm, ScalarField};

/// `||f||_{W^s_p} = sum_{k <= [s]} ||f^(k)||_p + [f^([s])]_{sigma,p}` with
/// `sigma = s - [s]` and the Gagliardo seminorm
/// `(int int |g(x) - g(y)|^p / |x - y|^{1 + sigma p})^{1/p}`.
///
/// The double integral is a trapezoid double sum over distinct nodes. Each
/// diagonal cell is added back analytically from the local slope `g'`,
/// where the integrand behaves like `|g'|^p |x - y|^{p(1 - sigma) - 1}`.
pub fn frac_sobolev_norm(f: &ScalarField, s: f64, p: f64) -> Result<f64> {
    if !s.is_finite() || s.fract() == 0.0 {
        return Err(Error::IntegerOrder(s));
    }
    if !(s > 0.0 && s < 4.0) {
        return Err(Error::InvalidParameter(format!(
            "Sobolev order {s} outside (0, 4)"
        )));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Sobolev exponent {p} must exceed 1"
        )));
    }
    let k = s.floor() as usize;
    let mut derivs = vec![f.clone()];
    for order in 1..=k {
        derivs.push(match order {
            1 => diff1(f),
            2 => diff2(f),
            _ => diff3(f)?,
        });
    }
    let mut total = 0.0;
    for d in &derivs {
        total += lp_norm(d, p)?;
    }
    Ok(total + gagliardo(&derivs[k], s - k as f64, p))
}

fn gagliardo(g: &ScalarField, sigma: f64, p: f64) -> f64 {
    let grid = g.grid();
    let n = grid.n_nodes();
    let v = g.values();
    let w: Vec<f64> = (0..n).map(|i| grid.trapezoid_weight(i)).collect();
    let x = grid.nodes();
    let expo = 1.0 + sigma * p;
    let b = p * (1.0 - sigma) - 1.0;
    let slope = diff1(g);
    let off: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n {
                if j != i {
                    acc += w[j] * (v[i] - v[j]).abs().powf(p) / (x[i] - x[j]).abs().powf(expo);
                }
            }
            // square cell of side w_i around the diagonal
            let cell = 2.0 * w[i].powf(b + 2.0) / ((b + 1.0) * (b + 2.0));
            w[i] * acc + slope.values()[i].abs().powf(p) * cell
        })
        .sum();
    off.powf(1.0 / p)
}

/// `||u|| + ||u_x|| + ||u_xx|| + ||u_t||` in `L^2` of the sampled rectangle.
pub fn w212_norm(f: &SpaceTimeField) -> Result<f64> {
    let mut total = f.lp(2.0)?;
    for (r, s) in [(0, 1), (0, 2), (1, 0)] {
        total += f.fd_derivative(r, s)?.lp(2.0)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn constant_has_only_lebesgue_part() {
        let g = Grid::uniform(101).unwrap();
        let f = ScalarField::from_fn(g, |_| -3.0);
        let got = frac_sobolev_norm(&f, 0.4, 2.0).unwrap();
        assert!((got - 3.0).abs() < 1e-12);
    }

    #[test]
    fn identity_examples() {
        let g = Grid::uniform(201).unwrap();
        let f = ScalarField::from_fn(g, |x| x);
        let want = (1.0f64 / 3.0).sqrt() + 1.0;
        let half = frac_sobolev_norm(&f, 0.5, 2.0).unwrap();
        assert!((half - want).abs() < 1e-3, "{half}");
        // ||f'|| = 1 replaces the seminorm, which vanishes on f' = 1
        let three_halves = frac_sobolev_norm(&f, 1.5, 2.0).unwrap();
        assert!((three_halves - want).abs() < 1e-3, "{three_halves}");
    }

    #[test]
    fn seminorm_against_closed_form() {
        // f = x^2, p = 2, sigma = 1/2: int int (x + y)^2 dx dy = 7/6
        let g = Grid::uniform(201).unwrap();
        let f = ScalarField::from_fn(g, |x| x * x);
        let got = frac_sobolev_norm(&f, 0.5, 2.0).unwrap();
        let want = (0.2f64).sqrt() + (7.0f64 / 6.0).sqrt();
        assert!((got - want).abs() < 2e-3, "{got} vs {want}");
    }

    #[test]
    fn bad_orders() {
        let f = ScalarField::from_fn(Grid::uniform(11).unwrap(), |x| x);
        assert_eq!(
            frac_sobolev_norm(&f, 1.0, 2.0),
            Err(Error::IntegerOrder(1.0))
        );
        assert!(frac_sobolev_norm(&f, 0.5, 1.0).is_err());
        assert!(frac_sobolev_norm(&f, 4.5, 2.0).is_err());
    }

    #[test]
    fn w212_examples() {
        let zero = SpaceTimeField::on_unit(21, 11, 1.0, |_, _| 0.0).unwrap();
        assert_eq!(w212_norm(&zero).unwrap(), 0.0);
        let want = (1.0f64 / 3.0).sqrt() + 1.0;
        let x = SpaceTimeField::on_unit(201, 101, 1.0, |x, _| x).unwrap();
        assert!((w212_norm(&x).unwrap() - want).abs() < 1e-4);
        let t = SpaceTimeField::on_unit(201, 101, 1.0, |_, t| t).unwrap();
        assert!((w212_norm(&t).unwrap() - want).abs() < 1e-4);
    }
}
