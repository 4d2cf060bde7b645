//! Plain-text persistence: trajectory and monitor CSV files and the JSON
//! run metadata.
//!
//! Numbers are written with `f64`'s `Display`, the shortest decimal that
//! parses back to the same bits, so a written trajectory reloads exactly.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::initial_data::ModelParams;
use crate::invariants::InvariantReport;
use crate::solver::{StatePair, StepperConfig, Trajectory};
use crate::system::RegParams;

pub const TRAJECTORY_HEADER: &str = "t,x,rho,kappa";
pub const INVARIANT_HEADER: &str = "t,m_bar,gamma,gamma_sq,ratio_sup,rho_xxx_sup";

/// Everything needed to re-create or re-check a stored run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub params: ModelParams,
    pub amplitude: f64,
    pub n_nodes: usize,
    pub t_end: f64,
    pub stepper: StepperConfig,
    pub reg: RegParams,
    /// Monitor weight override; `None` picks the smallest admissible power of two.
    #[serde(default)]
    pub beta: Option<f64>,
    /// Every `save_every`-th state was written, plus the last one.
    pub save_every: usize,
    pub accepted_steps: usize,
    pub final_dt: f64,
}

pub fn write_meta(w: impl Write, meta: &RunMeta) -> Result<()> {
    serde_json::to_writer_pretty(w, meta).map_err(|e| Error::Io(e.to_string()))
}

pub fn read_meta(r: impl std::io::Read) -> Result<RunMeta> {
    serde_json::from_reader(r).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

/// States at the given indices, always including the last.
pub fn thinned_states(traj: &Trajectory, every: usize) -> Vec<&StatePair> {
    let every = every.max(1);
    let last = traj.states.len() - 1;
    traj.states
        .iter()
        .enumerate()
        .filter(|(k, _)| k % every == 0 || *k == last)
        .map(|(_, s)| s)
        .collect()
}

pub fn write_trajectory<'a>(
    mut w: impl Write,
    states: impl IntoIterator<Item = &'a StatePair>,
) -> Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for s in states {
        let grid = s.grid();
        for (i, (r, k)) in s.rho.values().iter().zip(s.kappa.values()).enumerate() {
            writeln!(w, "{},{},{},{}", s.time, grid.x(i), r, k)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads back a file written by [`write_trajectory`]. Rows with equal `t`
/// form one state; their `x` column must be the uniform grid exactly.
pub fn read_trajectory(r: impl BufRead) -> Result<Vec<StatePair>> {
    let mut lines = r.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim() == TRAJECTORY_HEADER => {}
        Some((_, Err(e))) => return Err(e.into()),
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `{TRAJECTORY_HEADER}`"),
            })
        }
    }
    // (t, x, rho, kappa, first line)
    type Group = (f64, Vec<f64>, Vec<f64>, Vec<f64>, usize);
    let mut groups: Vec<Group> = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_row::<4>(&line, lineno)?;
        match groups.last_mut() {
            Some(g) if g.0 == row[0] => {
                g.1.push(row[1]);
                g.2.push(row[2]);
                g.3.push(row[3]);
            }
            _ => groups.push((row[0], vec![row[1]], vec![row[2]], vec![row[3]], lineno)),
        }
    }
    if groups.is_empty() {
        return Err(Error::Parse {
            line: 2,
            message: "no data rows".into(),
        });
    }
    let mut states = Vec::with_capacity(groups.len());
    for (t, xs, rho, kappa, lineno) in groups {
        let grid = Grid::uniform(xs.len()).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if let Some(i) = (0..xs.len()).find(|&i| xs[i] != grid.x(i)) {
            return Err(Error::Parse {
                line: lineno + i,
                message: format!("x = {} is not node {i} of a uniform grid", xs[i]),
            });
        }
        states.push(StatePair::new(
            ScalarField::new(grid, rho)?,
            ScalarField::new(grid, kappa)?,
            t,
        )?);
    }
    Ok(states)
}

fn parse_row<const N: usize>(line: &str, lineno: usize) -> Result<[f64; N]> {
    let mut out = [0.0; N];
    let mut fields = line.split(',');
    for (k, slot) in out.iter_mut().enumerate() {
        let raw = fields.next().ok_or_else(|| Error::Parse {
            line: lineno,
            message: format!("expected {N} columns, found {k}"),
        })?;
        *slot = raw.trim().parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("column {}: `{}` is not a number", k + 1, raw.trim()),
        })?;
    }
    if fields.next().is_some() {
        return Err(Error::Parse {
            line: lineno,
            message: format!("more than {N} columns"),
        });
    }
    Ok(out)
}

pub fn write_invariants(mut w: impl Write, rep: &InvariantReport) -> Result<()> {
    writeln!(w, "{INVARIANT_HEADER}")?;
    for k in 0..rep.times.len() {
        let g = rep.gamma[k];
        writeln!(
            w,
            "{},{},{},{},{},{}",
            rep.times[k],
            rep.m_bar[k],
            g,
            g * g,
            rep.ratio_sup[k],
            rep.rho_xxx_sup[k]
        )?;
    }
    w.flush()?;
    Ok(())
}
