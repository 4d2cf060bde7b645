//! Quantities entering the logarithmic sup-norm bound and the comparison
//! between even and odd extensions, plus the reference field collections.

use serde::{Deserialize, Serialize};

use super::{asym_extend, bmo_norm, sym_extend, w212_norm, SpaceTimeField};
use crate::error::{Error, Result};

/// Terms of `||v||_inf <= c (||v||_BMO + ||v||_L1) (1 + log+ ||v||_{W^{2,1}_2})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KtComponents {
    pub sup: f64,
    pub bmo: f64,
    pub l1: f64,
    pub w212: f64,
    pub ratio: f64,
}

impl KtComponents {
    pub fn log_plus(&self) -> f64 {
        self.w212.ln().max(0.0)
    }
}

pub fn kozono_taniuchi_ratio(f: &SpaceTimeField) -> Result<KtComponents> {
    let sup = f.linf();
    let bmo = bmo_norm(f)?;
    let l1 = f.integral(f64::abs);
    let w212 = w212_norm(f)?;
    let denom = (bmo + l1) * (1.0 + w212.ln().max(0.0));
    if !(denom > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    Ok(KtComponents {
        sup,
        bmo,
        l1,
        w212,
        ratio: sup / denom,
    })
}

/// `||f^sym||_BMO`, `||f^asym||_BMO` and the mean of `|f^sym|` over one
/// period `(-1, 1) x (0, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymAsymRelation {
    pub sym_bmo: f64,
    pub asym_bmo: f64,
    pub mean_abs: f64,
}

impl SymAsymRelation {
    /// Smallest `c` with `sym_bmo <= c (asym_bmo + mean_abs)`.
    pub fn c_emp(&self) -> Option<f64> {
        let d = self.asym_bmo + self.mean_abs;
        (d > 0.0).then(|| self.sym_bmo / d)
    }
}

pub fn sym_asym_relation(f: &SpaceTimeField) -> Result<SymAsymRelation> {
    let sym = sym_extend(f)?;
    let asym = asym_extend(f)?;
    // nodes of [-1, 1]
    let n = f.nx() - 1;
    let period = sym.restrict(0..=2 * n, 0..=f.nt() - 1)?;
    Ok(SymAsymRelation {
        sym_bmo: bmo_norm(&sym)?,
        asym_bmo: bmo_norm(&asym)?,
        mean_abs: period.mean_abs(),
    })
}

type Named = (&'static str, SpaceTimeField);

fn jump(x: f64) -> f64 {
    if x < 0.5 {
        1.0
    } else {
        -1.0
    }
}

/// Constant, `x`, `x^2`, `sin(pi x)` and a unit jump at `x = 1/2` on
/// `[0, 1] x [0, t_end]`.
pub fn standard_corpus(nx: usize, nt: usize, t_end: f64) -> Result<Vec<Named>> {
    let pi = std::f64::consts::PI;
    Ok(vec![
        (
            "constant",
            SpaceTimeField::on_unit(nx, nt, t_end, |_, _| 1.0)?,
        ),
        ("x", SpaceTimeField::on_unit(nx, nt, t_end, |x, _| x)?),
        ("x^2", SpaceTimeField::on_unit(nx, nt, t_end, |x, _| x * x)?),
        (
            "sin(pi x)",
            SpaceTimeField::on_unit(nx, nt, t_end, |x, _| (pi * x).sin())?,
        ),
        (
            "jump",
            SpaceTimeField::on_unit(nx, nt, t_end, |x, _| jump(x))?,
        ),
    ])
}

/// The standard corpus without the constant, which has no oscillation in
/// either extension.
pub fn extension_corpus(nx: usize, nt: usize, t_end: f64) -> Result<Vec<Named>> {
    let mut c = standard_corpus(nx, nt, t_end)?;
    c.retain(|(name, _)| *name != "constant");
    Ok(c)
}

/// Smooth fields for the sup-norm bound: the standard corpus without the
/// jump, a decaying mode, a travelling wave and Gaussian bumps of growing
/// height.
pub fn kt_corpus(nx: usize, nt: usize, t_end: f64) -> Result<Vec<Named>> {
    let pi = std::f64::consts::PI;
    let mut c = standard_corpus(nx, nt, t_end)?;
    c.retain(|(name, _)| *name != "jump");
    c.push((
        "exp(-t) sin(pi x)",
        SpaceTimeField::on_unit(nx, nt, t_end, |x, t| (-t).exp() * (pi * x).sin())?,
    ));
    c.push((
        "cos(2 pi (x - t))",
        SpaceTimeField::on_unit(nx, nt, t_end, |x, t| (2.0 * pi * (x - t)).cos())?,
    ));
    for (name, k) in [("bump 1", 1.0), ("bump 10", 10.0), ("bump 100", 100.0)] {
        c.push((
            name,
            SpaceTimeField::on_unit(nx, nt, t_end, move |x, _| {
                k * (-((x - 0.5) / 0.1).powi(2)).exp()
            })?,
        ));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_ratio_is_one() {
        for n in [17, 201] {
            let f = SpaceTimeField::on_unit(n, 33, 1.0, |_, _| 1.0).unwrap();
            let kt = kozono_taniuchi_ratio(&f).unwrap();
            assert_eq!((kt.sup, kt.bmo, kt.l1, kt.w212), (1.0, 0.0, 1.0, 1.0));
            assert_eq!(kt.log_plus(), 0.0);
            assert_eq!(kt.ratio, 1.0);
        }
    }

    #[test]
    fn zero_field() {
        let f = SpaceTimeField::on_unit(17, 17, 1.0, |_, _| 0.0).unwrap();
        assert_eq!(kozono_taniuchi_ratio(&f), Err(Error::ZeroDenominator));
    }

    #[test]
    fn identity_components() {
        let f = SpaceTimeField::on_unit(33, 33, 1.0, |x, _| x).unwrap();
        let kt = kozono_taniuchi_ratio(&f).unwrap();
        assert_eq!(kt.sup, 1.0);
        assert!((kt.l1 - 0.5).abs() < 1e-12);
        assert!((kt.w212 - ((1.0f64 / 3.0).sqrt() + 1.0)).abs() < 1e-3);
        let want = 1.0 / ((kt.bmo + kt.l1) * (1.0 + kt.w212.ln()));
        assert!((kt.ratio - want).abs() < 1e-15);
    }

    #[test]
    fn constant_relation() {
        let f = SpaceTimeField::on_unit(9, 9, 0.25, |_, _| 2.0).unwrap();
        let r = sym_asym_relation(&f).unwrap();
        assert_eq!(r.sym_bmo, 0.0);
        assert!(r.asym_bmo > 0.0);
        assert!((r.mean_abs - 2.0).abs() < 1e-15);
        assert_eq!(r.c_emp(), Some(0.0));
    }

    #[test]
    fn corpora_shapes() {
        assert_eq!(standard_corpus(17, 17, 1.0).unwrap().len(), 5);
        assert_eq!(extension_corpus(17, 17, 0.25).unwrap().len(), 4);
        let kt = kt_corpus(17, 9, 1.0).unwrap();
        assert!(kt.iter().all(|(_, f)| f.nx() == 17 && f.nt() == 9));
    }
}
