//! Uniform mesh on [0, 1], nodal fields and finite-difference stencils.
//!
//! Every stencil is second order, including the one-sided closures at the
//! two end nodes, so derivative values at x = 0 and x = 1 carry the same
//! order as the interior.

use crate::error::{Error, Result};

pub const MIN_NODES: usize = 5;
pub const MIN_NODES_DIFF3: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n_nodes: usize,
    h: f64,
}

impl Grid {
    pub fn uniform(n_nodes: usize) -> Result<Self> {
        if n_nodes < MIN_NODES {
            return Err(Error::GridTooSmall {
                min: MIN_NODES,
                got: n_nodes,
            });
        }
        Ok(Self {
            n_nodes,
            h: 1.0 / (n_nodes - 1) as f64,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Node coordinate. The last node is pinned to 1 exactly.
    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n_nodes {
            1.0
        } else {
            i as f64 * self.h
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|i| self.x(i)).collect()
    }

    /// Trapezoid weights, already multiplied by h.
    pub fn trapezoid_weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.n_nodes {
            0.5 * self.h
        } else {
            self.h
        }
    }
}

pub fn make_uniform_grid(n_nodes: usize) -> Result<Grid> {
    Grid::uniform(n_nodes)
}

/// Nodal samples of a scalar quantity on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::LengthMismatch {
                len: values.len(),
                n_nodes: grid.n_nodes(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n_nodes()).map(|i| f(grid.x(i))).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n_nodes()],
        }
    }

    /// Builds a field without the finiteness check; used by stencils whose
    /// inputs were already validated.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_nodes());
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_same_grid(self, other)?;
        Ok(Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn check_same_grid(a: &ScalarField, b: &ScalarField) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch {
            left: a.grid.n_nodes(),
            right: b.grid.n_nodes(),
        });
    }
    Ok(())
}

/// First derivative on a uniform slice with spacing `h`.
pub(crate) fn d1_slice(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    let inv = 1.0 / (2.0 * h);
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv;
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) * inv;
    }
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv;
    out
}

pub(crate) fn d2_slice(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    let inv = 1.0 / (h * h);
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) * inv;
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * inv;
    }
    out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) * inv;
    out
}

pub(crate) fn d3_slice(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    let h3 = h * h * h;
    // third-order six-point closure at the end nodes
    let end = |a: &dyn Fn(usize) -> f64| {
        (-17.0 * a(0) + 71.0 * a(1) - 118.0 * a(2) + 98.0 * a(3) - 41.0 * a(4) + 7.0 * a(5))
            / (4.0 * h3)
    };
    // second-order stencil on offsets -1..=3 next to the ends
    let near = |a: &dyn Fn(usize) -> f64| {
        (-3.0 * a(0) + 10.0 * a(1) - 12.0 * a(2) + 6.0 * a(3) - a(4)) / (2.0 * h3)
    };
    out[0] = end(&|k| f[k]);
    out[1] = near(&|k| f[k]);
    for i in 2..n - 2 {
        out[i] = (f[i + 2] - 2.0 * f[i + 1] + 2.0 * f[i - 1] - f[i - 2]) / (2.0 * h3);
    }
    // mirrored closures pick up a sign flip
    out[n - 1] = -end(&|k| f[n - 1 - k]);
    out[n - 2] = -near(&|k| f[n - 1 - k]);
    out
}

pub fn diff1(f: &ScalarField) -> ScalarField {
    ScalarField::from_raw(f.grid, d1_slice(&f.values, f.grid.h()))
}

pub fn diff2(f: &ScalarField) -> ScalarField {
    ScalarField::from_raw(f.grid, d2_slice(&f.values, f.grid.h()))
}

pub fn diff3(f: &ScalarField) -> Result<ScalarField> {
    let n = f.grid.n_nodes();
    if n < MIN_NODES_DIFF3 {
        return Err(Error::GridTooSmall {
            min: MIN_NODES_DIFF3,
            got: n,
        });
    }
    Ok(ScalarField::from_raw(
        f.grid,
        d3_slice(&f.values, f.grid.h()),
    ))
}

pub fn linf_norm(f: &ScalarField) -> f64 {
    f.values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Trapezoid-weighted discrete L^p norm.
pub fn lp_norm(f: &ScalarField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("L^p exponent {p} < 1")));
    }
    if p.is_infinite() {
        return Ok(linf_norm(f));
    }
    let sum: f64 = f
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| f.grid.trapezoid_weight(i) * v.abs().powf(p))
        .sum();
    Ok(sum.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn max_err(a: &ScalarField, exact: impl Fn(f64) -> f64) -> f64 {
        let g = a.grid();
        a.values()
            .iter()
            .enumerate()
            .map(|(i, v)| (v - exact(g.x(i))).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn grid_construction() {
        let g = make_uniform_grid(5).unwrap();
        assert_eq!(g.h(), 0.25);
        assert_eq!(g.nodes(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = make_uniform_grid(101).unwrap();
        assert!((g.h() - 0.01).abs() < 1e-16);
        assert_eq!(g.x(0), 0.0);
        assert_eq!(g.x(100), 1.0);
        assert!((g.h() * 100.0 - 1.0).abs() < 1e-15);
        assert!(matches!(
            make_uniform_grid(3),
            Err(Error::GridTooSmall { min: 5, got: 3 })
        ));
    }

    #[test]
    fn field_rejects_bad_input() {
        let g = Grid::uniform(5).unwrap();
        assert!(ScalarField::new(g, vec![0.0; 4]).is_err());
        assert!(matches!(
            ScalarField::new(g, vec![0.0, 1.0, f64::NAN, 0.0, 0.0]),
            Err(Error::NonFinite { index: 2 })
        ));
    }

    #[test]
    fn stencils_on_polynomials() {
        let g = Grid::uniform(101).unwrap();
        let c = ScalarField::from_fn(g, |_| 3.5);
        assert!(linf_norm(&diff1(&c)) < 1e-12);
        assert!(linf_norm(&diff2(&c)) < 1e-9);

        let x = ScalarField::from_fn(g, |x| x);
        assert!(max_err(&diff1(&x), |_| 1.0) < 1e-12);
        assert!(max_err(&diff2(&x), |_| 0.0) < 1e-9);

        let x2 = ScalarField::from_fn(g, |x| x * x);
        assert!(max_err(&diff1(&x2), |x| 2.0 * x) < 1e-12);
        assert!(max_err(&diff2(&x2), |_| 2.0) < 1e-8);
        assert!(max_err(&diff3(&x2).unwrap(), |_| 0.0) < 1e-5);

        let x3 = ScalarField::from_fn(g, |x| x * x * x);
        assert!(max_err(&diff3(&x3).unwrap(), |_| 6.0) < 1e-5);
    }

    #[test]
    fn diff3_on_sine() {
        let g = Grid::uniform(201).unwrap();
        let f = ScalarField::from_fn(g, |x| (PI * x).sin());
        let err = max_err(&diff3(&f).unwrap(), |x| -PI.powi(3) * (PI * x).cos());
        assert!(err < 5e-3, "err {err}");
    }

    #[test]
    fn diff3_needs_seven_nodes() {
        let g = Grid::uniform(6).unwrap();
        let f = ScalarField::zeros(g);
        assert!(matches!(diff3(&f), Err(Error::GridTooSmall { min: 7, .. })));
    }

    #[test]
    fn convergence_orders() {
        type Exact = fn(f64) -> f64;
        type Stencil = fn(&ScalarField) -> ScalarField;
        let d3 = |f: &ScalarField| diff3(f).unwrap();
        let cases: [(Stencil, Exact); 2] = [
            (diff1, |x| PI * (PI * x).cos()),
            (diff2, |x| -PI * PI * (PI * x).sin()),
        ];
        let mut all: Vec<Box<dyn Fn(usize) -> f64>> = cases
            .iter()
            .map(|&(s, e)| {
                Box::new(move |n| {
                    let g = Grid::uniform(n).unwrap();
                    max_err(&s(&ScalarField::from_fn(g, |x| (PI * x).sin())), e)
                }) as Box<dyn Fn(usize) -> f64>
            })
            .collect();
        all.push(Box::new(move |n| {
            let g = Grid::uniform(n).unwrap();
            max_err(&d3(&ScalarField::from_fn(g, |x| (PI * x).sin())), |x| {
                -PI.powi(3) * (PI * x).cos()
            })
        }));
        for err in all {
            let (e1, e2, e3) = (err(51), err(101), err(201));
            for order in [(e1 / e2).log2(), (e2 / e3).log2()] {
                assert!((order - 2.0).abs() <= 0.2, "order {order}");
            }
        }
    }

    #[test]
    fn norms() {
        let g = Grid::uniform(201).unwrap();
        let two = ScalarField::from_fn(g, |_| 2.0);
        assert_eq!(linf_norm(&two), 2.0);
        assert!((lp_norm(&two, 1.0).unwrap() - 2.0).abs() < 1e-12);
        let x = ScalarField::from_fn(g, |x| x);
        assert_eq!(linf_norm(&x), 1.0);
        let s = ScalarField::from_fn(g, |x| (PI * x).sin());
        assert!((lp_norm(&s, 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-4);
        assert!(lp_norm(&s, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn stencils_are_linear(
            a in -3.0f64..3.0, b in -3.0f64..3.0,
            fv in prop::collection::vec(-1.0f64..1.0, 9),
            gv in prop::collection::vec(-1.0f64..1.0, 9),
        ) {
            let grid = Grid::uniform(9).unwrap();
            let f = ScalarField::new(grid, fv).unwrap();
            let g = ScalarField::new(grid, gv).unwrap();
            let comb = f.zip_map(&g, |u, v| a * u + b * v).unwrap();
            let ops: [fn(&ScalarField) -> ScalarField; 3] =
                [diff1, diff2, |f| diff3(f).unwrap()];
            for op in ops {
                let lhs = op(&comb);
                let rhs = op(&f).zip_map(&op(&g), |u, v| a * u + b * v).unwrap();
                let scale = 1.0 + linf_norm(&rhs);
                for (l, r) in lhs.values().iter().zip(rhs.values()) {
                    prop_assert!((l - r).abs() <= 1e-12 * scale);
                }
            }
        }
    }
}
