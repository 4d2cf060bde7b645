//! Discrete function-space norms on space-time rectangles.
//!
//! Everything here works on a [`SpaceTimeField`], a time-major array of
//! samples on a uniform tensor grid. Spatial and temporal derivatives reuse
//! the stencils from [`crate::grid`], and integrals use the trapezoid rule in
//! both directions.

mod bmo;
mod extension;
mod holder;
mod inequalities;
mod sobolev;

pub use bmo::{bmo_norm, mean_oscillation, ParabolicCylinder};
pub use extension::{asym_extend, sym_extend};
pub use holder::{
    holder_norm, holder_seminorm_t, holder_seminorm_x, DerivativeProvider, FiniteDifferences,
};
pub use inequalities::{
    extension_corpus, kozono_taniuchi_ratio, kt_corpus, standard_corpus, sym_asym_relation,
    KtComponents, SymAsymRelation,
};
pub use sobolev::{frac_sobolev_norm, w212_norm};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{d1_slice, d2_slice, d3_slice, Grid, ScalarField};

/// Samples `v(x_i, t_j)` on `[x_lo, x_hi] x [t_lo, t_hi]`, stored row by row
/// in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeField {
    nx: usize,
    nt: usize,
    x_lo: f64,
    x_hi: f64,
    t_lo: f64,
    t_hi: f64,
    values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn new(
        nx: usize,
        nt: usize,
        x_range: (f64, f64),
        t_range: (f64, f64),
        values: Vec<f64>,
    ) -> Result<Self> {
        if nx < 2 {
            return Err(Error::GridTooSmall { min: 2, got: nx });
        }
        if nt < 2 {
            return Err(Error::GridTooSmall { min: 2, got: nt });
        }
        let ok = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && b > a;
        if !ok(x_range) || !ok(t_range) {
            return Err(Error::InvalidParameter(format!(
                "degenerate rectangle {x_range:?} x {t_range:?}"
            )));
        }
        if values.len() != nx * nt {
            return Err(Error::LengthMismatch {
                len: values.len(),
                n_nodes: nx * nt,
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            nx,
            nt,
            x_lo: x_range.0,
            x_hi: x_range.1,
            t_lo: t_range.0,
            t_hi: t_range.1,
            values,
        })
    }

    /// Samples `f(x, t)` on `[0, 1] x [0, t_end]`.
    pub fn on_unit(nx: usize, nt: usize, t_end: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        Self::from_fn(nx, nt, (0.0, 1.0), (0.0, t_end), f)
    }

    pub fn from_fn(
        nx: usize,
        nt: usize,
        x_range: (f64, f64),
        t_range: (f64, f64),
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        // validate the shape before sampling
        let mut out = Self::new(nx, nt, x_range, t_range, vec![0.0; nx * nt])?;
        for j in 0..nt {
            let t = out.t(j);
            for i in 0..nx {
                out.values[j * nx + i] = f(out.x(i), t);
            }
        }
        if let Some(index) = out.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(out)
    }

    /// Stacks equally spaced time slices of a field on the unit grid.
    pub fn from_slices(slices: &[&ScalarField], t_range: (f64, f64)) -> Result<Self> {
        let first = slices
            .first()
            .ok_or(Error::GridTooSmall { min: 2, got: 0 })?;
        let grid = first.grid();
        let mut values = Vec::with_capacity(grid.n_nodes() * slices.len());
        for s in slices {
            if s.grid() != grid {
                return Err(Error::GridMismatch {
                    left: grid.n_nodes(),
                    right: s.grid().n_nodes(),
                });
            }
            values.extend_from_slice(s.values());
        }
        Self::new(grid.n_nodes(), slices.len(), (0.0, 1.0), t_range, values)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.x_lo, self.x_hi)
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.t_lo, self.t_hi)
    }

    pub fn h(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.nx - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        (self.t_hi - self.t_lo) / (self.nt - 1) as f64
    }

    /// Node `i`; the last node is exactly `x_hi`.
    pub fn x(&self, i: usize) -> f64 {
        lerp(self.x_lo, self.x_hi, i, self.nx)
    }

    pub fn t(&self, j: usize) -> f64 {
        lerp(self.t_lo, self.t_hi, j, self.nt)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.nx..(j + 1) * self.nx]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Time slice `j` as a field on the unit grid.
    pub fn slice(&self, j: usize) -> Result<ScalarField> {
        ScalarField::new(Grid::uniform(self.nx)?, self.row(j).to_vec())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            values,
            ..self.clone()
        }
    }

    /// Sub-rectangle of nodes `ix` x `jt` (inclusive ranges).
    pub fn restrict(
        &self,
        ix: std::ops::RangeInclusive<usize>,
        jt: std::ops::RangeInclusive<usize>,
    ) -> Result<Self> {
        let (i0, i1, j0, j1) = (*ix.start(), *ix.end(), *jt.start(), *jt.end());
        if i1 >= self.nx || j1 >= self.nt || i1 <= i0 || j1 <= j0 {
            return Err(Error::InvalidParameter(format!(
                "bad restriction {i0}..={i1} x {j0}..={j1}"
            )));
        }
        let mut values = Vec::with_capacity((i1 - i0 + 1) * (j1 - j0 + 1));
        for j in j0..=j1 {
            values.extend_from_slice(&self.row(j)[i0..=i1]);
        }
        Self::new(
            i1 - i0 + 1,
            j1 - j0 + 1,
            (self.x(i0), self.x(i1)),
            (self.t(j0), self.t(j1)),
            values,
        )
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Trapezoid integral of `|v|^p` over the rectangle, raised to `1/p`.
    pub fn lp(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) || p.is_infinite() {
            return Err(Error::InvalidParameter(format!("L^p exponent {p}")));
        }
        Ok(self.integral(|v| v.abs().powf(p)).powf(1.0 / p))
    }

    /// Trapezoid integral of `g(v)`. Written as span times average so a
    /// constant integrates exactly on the unit square.
    pub fn integral(&self, g: impl Fn(f64) -> f64) -> f64 {
        let rows: Vec<f64> = (0..self.nt)
            .map(|j| trapezoid_mean(self.row(j).iter().map(|&v| g(v))))
            .collect();
        trapezoid_mean(rows.into_iter()) * (self.x_hi - self.x_lo) * (self.t_hi - self.t_lo)
    }

    /// Average of `|v|` over the rectangle.
    pub(crate) fn mean_abs(&self) -> f64 {
        let rows: Vec<f64> = (0..self.nt)
            .map(|j| trapezoid_mean(self.row(j).iter().map(|v| v.abs())))
            .collect();
        trapezoid_mean(rows.into_iter())
    }

    /// Applies `s` spatial derivatives then `r` time derivatives.
    pub(crate) fn fd_derivative(&self, r: usize, s: usize) -> Result<Self> {
        let need_x = [2, 3, 4, 7];
        if s > 3 || r > 3 {
            return Err(Error::InvalidParameter(format!(
                "derivative order D_t^{r} D_x^{s} not supported"
            )));
        }
        if self.nx < need_x[s] {
            return Err(Error::GridTooSmall {
                min: need_x[s],
                got: self.nx,
            });
        }
        if r > 0 && self.nt < need_x[r] {
            return Err(Error::GridTooSmall {
                min: need_x[r],
                got: self.nt,
            });
        }
        let h = self.h();
        let mut out = self.values.clone();
        if s > 0 {
            for row in out.chunks_mut(self.nx) {
                let d = stencil(s)(row, h);
                row.copy_from_slice(&d);
            }
        }
        if r > 0 {
            let dt = self.dt();
            let mut col = vec![0.0; self.nt];
            for i in 0..self.nx {
                for (j, c) in col.iter_mut().enumerate() {
                    *c = out[j * self.nx + i];
                }
                let d = stencil(r)(&col, dt);
                for (j, v) in d.into_iter().enumerate() {
                    out[j * self.nx + i] = v;
                }
            }
        }
        Ok(self.with_values(out))
    }
}

fn stencil(order: usize) -> fn(&[f64], f64) -> Vec<f64> {
    match order {
        1 => d1_slice,
        2 => d2_slice,
        _ => d3_slice,
    }
}

fn lerp(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    if i + 1 == n {
        hi
    } else {
        lo + (hi - lo) * (i as f64 / (n - 1) as f64)
    }
}

/// Trapezoid average over unit spacing: `(f_0/2 + f_1 + ... + f_{n-1}/2) / (n-1)`.
pub(crate) fn trapezoid_mean(it: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = it.len();
    let mut sum = 0.0;
    for (k, v) in it.enumerate() {
        sum += if k == 0 || k + 1 == n { 0.5 * v } else { v };
    }
    sum / (n - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks() {
        assert!(SpaceTimeField::new(1, 3, (0.0, 1.0), (0.0, 1.0), vec![0.0; 3]).is_err());
        assert!(SpaceTimeField::new(3, 3, (0.0, 1.0), (0.0, 1.0), vec![0.0; 8]).is_err());
        assert!(SpaceTimeField::new(2, 2, (1.0, 1.0), (0.0, 1.0), vec![0.0; 4]).is_err());
        let mut v = vec![0.0; 4];
        v[2] = f64::NAN;
        assert_eq!(
            SpaceTimeField::new(2, 2, (0.0, 1.0), (0.0, 1.0), v),
            Err(Error::NonFinite { index: 2 })
        );
    }

    #[test]
    fn nodes_and_layout() {
        let f = SpaceTimeField::on_unit(11, 5, 0.5, |x, t| x + 10.0 * t).unwrap();
        assert_eq!(f.x(10), 1.0);
        assert_eq!(f.t(4), 0.5);
        assert!((f.h() - 0.1).abs() < 1e-15);
        assert!((f.dt() - 0.125).abs() < 1e-15);
        assert!((f.at(3, 2) - (0.3 + 2.5)).abs() < 1e-14);
        assert_eq!(f.row(2)[3], f.at(3, 2));
    }

    #[test]
    fn constant_integrates_exactly() {
        for n in [17, 33, 49, 201] {
            let f = SpaceTimeField::on_unit(n, 33, 1.0, |_, _| 1.0).unwrap();
            assert_eq!(f.integral(|v| v), 1.0);
            assert_eq!(f.lp(2.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn trapezoid_accuracy() {
        let f = SpaceTimeField::on_unit(101, 51, 2.0, |x, t| x * x * t).unwrap();
        // int_0^1 x^2 dx * int_0^2 t dt = 2/3
        assert!((f.integral(|v| v) - 2.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn derivatives_of_polynomials() {
        let f = SpaceTimeField::on_unit(21, 11, 1.0, |x, t| x * x * x + x * t * t).unwrap();
        let fx = f.fd_derivative(0, 1).unwrap();
        let ft = f.fd_derivative(1, 0).unwrap();
        let fxt = f.fd_derivative(1, 1).unwrap();
        let fxxx = f.fd_derivative(0, 3).unwrap();
        for j in 0..f.nt() {
            for i in 0..f.nx() {
                let (x, t) = (f.x(i), f.t(j));
                // second-order stencils see an O(h^2) defect on the cubic
                assert!((fx.at(i, j) - (3.0 * x * x + t * t)).abs() < 1e-2);
                assert!((ft.at(i, j) - 2.0 * x * t).abs() < 1e-12);
                assert!((fxt.at(i, j) - 2.0 * t).abs() < 1e-11);
                assert!((fxxx.at(i, j) - 6.0).abs() < 1e-8);
            }
        }
        assert!(f.fd_derivative(0, 4).is_err());
        let small = SpaceTimeField::on_unit(6, 3, 1.0, |x, _| x).unwrap();
        assert!(matches!(
            small.fd_derivative(0, 3),
            Err(Error::GridTooSmall { min: 7, got: 6 })
        ));
    }

    #[test]
    fn restriction() {
        let f = SpaceTimeField::on_unit(11, 6, 1.0, |x, t| x - t).unwrap();
        let g = f.restrict(2..=5, 1..=3).unwrap();
        assert_eq!((g.nx(), g.nt()), (4, 3));
        assert_eq!(g.at(0, 0), f.at(2, 1));
        assert_eq!(g.x_range(), (f.x(2), f.x(5)));
        assert!(f.restrict(3..=3, 0..=2).is_err());
    }
}
