//! Parabolic BMO seminorm over lower cylinders.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SpaceTimeField;
use crate::error::{Error, Result};

/// Relative slack, in units of the time step, for deciding whether a time
/// row lies inside a cylinder.
const ROW_TOL: f64 = 1e-9;

/// Closed lower cylinder `|x - x0| <= r`, `t0 - r^2 <= t <= t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolicCylinder {
    pub x0: f64,
    pub t0: f64,
    pub r: f64,
}

impl ParabolicCylinder {
    pub fn new(x0: f64, t0: f64, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() || !x0.is_finite() || !t0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cylinder at ({x0}, {t0}) with radius {r}"
            )));
        }
        Ok(Self { x0, t0, r })
    }

    /// Index ranges of the enclosed nodes, or `None` when the cylinder
    /// leaves the sampled rectangle or encloses no node.
    pub fn node_ranges(
        &self,
        f: &SpaceTimeField,
    ) -> Option<(
        std::ops::RangeInclusive<usize>,
        std::ops::RangeInclusive<usize>,
    )> {
        let (h, dt) = (f.h(), f.dt());
        let (xa, xb) = f.x_range();
        let (ta, tb) = f.t_range();
        let xtol = ROW_TOL * h;
        let ttol = ROW_TOL * dt;
        let t_start = self.t0 - self.r * self.r;
        if self.x0 - self.r < xa - xtol || self.x0 + self.r > xb + xtol {
            return None;
        }
        if t_start < ta - ttol || self.t0 > tb + ttol {
            return None;
        }
        let i0 = ((self.x0 - self.r - xa) / h - ROW_TOL).ceil().max(0.0) as usize;
        let i1 = (((self.x0 + self.r - xa) / h + ROW_TOL).floor() as usize).min(f.nx() - 1);
        let j0 = ((t_start - ta) / dt - ROW_TOL).ceil().max(0.0) as usize;
        let j1 = (((self.t0 - ta) / dt + ROW_TOL).floor() as usize).min(f.nt() - 1);
        (i0 <= i1 && j0 <= j1).then_some((i0..=i1, j0..=j1))
    }
}

/// Average of `|f - mean|` over the nodes enclosed by `cyl`.
pub fn mean_oscillation(f: &SpaceTimeField, cyl: &ParabolicCylinder) -> Result<f64> {
    let (ix, jt) = cyl.node_ranges(f).ok_or(Error::EmptyDomain)?;
    Ok(block_oscillation(
        f,
        *ix.start(),
        *ix.end(),
        *jt.start(),
        *jt.end(),
    ))
}

// Two passes in row-major order over the block [i0, i1] x [j0, j1].
fn block_oscillation(f: &SpaceTimeField, i0: usize, i1: usize, j0: usize, j1: usize) -> f64 {
    let count = ((i1 - i0 + 1) * (j1 - j0 + 1)) as f64;
    let mut sum = 0.0;
    for j in j0..=j1 {
        for &v in &f.row(j)[i0..=i1] {
            sum += v;
        }
    }
    let mean = sum / count;
    let mut dev = 0.0;
    for j in j0..=j1 {
        for &v in &f.row(j)[i0..=i1] {
            dev += (v - mean).abs();
        }
    }
    dev / count
}

/// Supremum of the mean oscillation over node-centred cylinders with radii
/// `m h`, `m >= 1`, that fit inside the sampled rectangle.
///
/// The mean absolute deviation never exceeds half the range, so cylinders
/// whose range cannot beat the running maximum are skipped; the result is
/// the same as evaluating every candidate.
pub fn bmo_norm(f: &SpaceTimeField) -> Result<f64> {
    let nx = f.nx();
    let h = f.h();
    let (ta, _) = f.t_range();
    let dt = f.dt();
    // largest admissible m for each time level
    let reach: Vec<usize> = (0..f.nt())
        .map(|j| {
            let span = f.t(j) - ta + ROW_TOL * dt;
            let mut m = 0usize;
            while m < nx && ((m + 1) as f64 * h).powi(2) <= span {
                m += 1;
            }
            m
        })
        .collect();
    let centers: Vec<(usize, usize)> = (0..f.nt())
        .flat_map(|j| (1..nx.saturating_sub(1)).map(move |i| (i, j)))
        .filter(|&(i, j)| reach[j].min(i).min(nx - 1 - i) > 0)
        .collect();
    if centers.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let best = AtomicU64::new(0f64.to_bits());
    centers.par_iter().for_each(|&(i, j)| {
        let m_max = reach[j].min(i).min(nx - 1 - i);
        let mut lo = f.at(i, j);
        let mut hi = lo;
        let mut j0 = j;
        for m in 1..=m_max {
            let r = m as f64 * h;
            let t_start = f.t(j) - r * r;
            let mut new_j0 = j0;
            while new_j0 > 0 && f.t(new_j0 - 1) >= t_start - ROW_TOL * dt {
                new_j0 -= 1;
            }
            // extend the running range with the two new columns ...
            for row in j0..=j {
                for v in [f.at(i - m, row), f.at(i + m, row)] {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            // ... and any newly enclosed rows
            for row in new_j0..j0 {
                for &v in &f.row(row)[i - m..=i + m] {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            j0 = new_j0;
            let current = f64::from_bits(best.load(Ordering::Relaxed));
            if 0.5 * (hi - lo) < current * (1.0 - 1e-12) {
                continue;
            }
            let osc = block_oscillation(f, i - m, i + m, j0, j);
            best.fetch_max(osc.to_bits(), Ordering::Relaxed);
        }
    });
    // non-negative doubles order like their bit patterns
    Ok(f64::from_bits(best.into_inner()))
}
