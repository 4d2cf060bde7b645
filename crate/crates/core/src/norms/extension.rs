//! Even and odd 2-periodic extensions of fields on `[0, 1]` to `[-1, 3]`.

use super::SpaceTimeField;
use crate::error::{Error, Result};

/// Reflect evenly across `x = 0`, then repeat with period 2.
pub fn sym_extend(f: &SpaceTimeField) -> Result<SpaceTimeField> {
    extend(f, |_, v| v)
}

/// Reflect oddly across `x = 0`, then repeat with period 2. At the nodes
/// `x = 0 mod 2` the value from the right is kept, at `x = 1 mod 2` the
/// value from the left.
pub fn asym_extend(f: &SpaceTimeField) -> Result<SpaceTimeField> {
    extend(f, |sign, v| if sign < 0 { -v } else { v })
}

fn extend(f: &SpaceTimeField, combine: impl Fn(i64, f64) -> f64) -> Result<SpaceTimeField> {
    if f.x_range() != (0.0, 1.0) {
        return Err(Error::InvalidParameter(format!(
            "extension needs a field on [0, 1], got {:?}",
            f.x_range()
        )));
    }
    let n = (f.nx() - 1) as i64;
    let period = 2 * n;
    let nx = 4 * n as usize + 1;
    let mut values = Vec::with_capacity(nx * f.nt());
    for j in 0..f.nt() {
        let row = f.row(j);
        for k in 0..nx as i64 {
            // node index relative to x = 0, folded into (-n, n]
            let s = k - n;
            let y = (s + n - 1).rem_euclid(period) - n + 1;
            let v = row[y.unsigned_abs() as usize];
            values.push(combine(y.signum(), v));
        }
    }
    SpaceTimeField::new(nx, f.nt(), (-1.0, 3.0), f.t_range(), values)
}
