//! Trajectory monitors for the gradient-margin comparison argument.
//!
//! With `M(x,t) = kappa_x - sqrt(gamma(t)^2 + rho_x^2)` and the weighted
//! `Mbar = cosh(beta (2x - 1)) M`, a compliant trajectory keeps
//! `min_x Mbar(., t) >= gamma(t)^2`, where `gamma` decays according to
//! `gamma' = -(c0 + ||rho_xxx||_inf) gamma`, `gamma(0) = gamma0 / 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{diff1, diff3, linf_norm};
use crate::initial_data::ModelParams;
use crate::solver::{StatePair, Trajectory};

/// Absolute slack for every certified inequality.
pub const TOL_CMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorParams {
    pub beta: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl MonitorParams {
    /// Derives `c1 = beta^2/4 + tau^2/(8 eps) + eps beta^2`,
    /// `c2 = tau^2 cosh(beta) / (4 eps)` and `c0 = min(c1, c2)`.
    pub fn new(beta: f64, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta = {beta} must be positive"
            )));
        }
        let (eps, tau) = (params.epsilon, params.tau);
        let c1 = beta * beta / 4.0 + tau * tau / (8.0 * eps) + eps * beta * beta;
        let c2 = tau * tau * beta.cosh() / (4.0 * eps);
        Ok(Self {
            beta,
            c0: c1.min(c2),
            c1,
            c2,
        })
    }

    pub fn for_params(params: &ModelParams) -> Result<Self> {
        Self::new(choose_beta(params), params)
    }

    /// True when the stored constants equal the formulas for `params`.
    pub fn is_consistent(&self, params: &ModelParams) -> bool {
        Self::new(self.beta, params).is_ok_and(|m| m == *self)
    }
}

/// Smallest power of two `beta >= 1` with `beta tanh(beta) > |tau|/(1+eps) + 1`.
pub fn choose_beta(params: &ModelParams) -> f64 {
    let target = params.tau.abs() / (1.0 + params.epsilon) + 1.0;
    let mut beta = 1.0f64;
    while beta * beta.tanh() <= target {
        beta *= 2.0;
    }
    beta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    /// `mbar(t) >= gamma(t)^2`
    MarginFloor,
    /// `kappa_x >= sqrt(gamma^2 + rho_x^2)` at a node
    GradientFloor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub time: f64,
    pub node: usize,
    pub quantity: Quantity,
    /// How far below the floor (positive).
    pub deficit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub times: Vec<f64>,
    pub m_bar: Vec<f64>,
    pub gamma: Vec<f64>,
    pub ratio_sup: Vec<f64>,
    pub rho_xxx_sup: Vec<f64>,
    pub violations: Vec<Violation>,
}

impl InvariantReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    /// Smallest `mbar(t) - gamma(t)^2` over the run.
    pub fn min_slack(&self) -> f64 {
        self.m_bar
            .iter()
            .zip(&self.gamma)
            .map(|(m, g)| m - g * g)
            .fold(f64::INFINITY, f64::min)
    }
}

fn rho_xxx_sup(state: &StatePair) -> Result<f64> {
    Ok(linf_norm(&diff3(&state.rho)?))
}

/// Evaluates the weighted margin and both floors at every stored time.
pub fn comparison_monitor(
    traj: &Trajectory,
    mon: &MonitorParams,
    gamma_series: &[f64],
) -> Result<InvariantReport> {
    if traj.states.is_empty() || gamma_series.len() != traj.states.len() {
        return Err(Error::InvalidParameter(format!(
            "gamma series has {} entries for {} states",
            gamma_series.len(),
            traj.states.len()
        )));
    }
    let grid = traj.grid();
    let weights: Vec<f64> = (0..grid.n_nodes())
        .map(|i| (mon.beta * (2.0 * grid.x(i) - 1.0)).cosh())
        .collect();
    let mut report = InvariantReport {
        times: Vec::with_capacity(traj.states.len()),
        m_bar: Vec::new(),
        gamma: gamma_series.to_vec(),
        ratio_sup: Vec::new(),
        rho_xxx_sup: Vec::new(),
        violations: Vec::new(),
    };
    for (state, &gamma) in traj.states.iter().zip(gamma_series) {
        let rx = diff1(&state.rho);
        let kx = diff1(&state.kappa);
        let g2 = gamma * gamma;
        let mut m_bar = f64::INFINITY;
        let mut arg = 0;
        let mut ratio = 0.0f64;
        for (i, (&r, &k)) in rx.values().iter().zip(kx.values()).enumerate() {
            let margin = k - (g2 + r * r).sqrt();
            let weighted = weights[i] * margin;
            if weighted < m_bar {
                m_bar = weighted;
                arg = i;
            }
            if margin < -TOL_CMP {
                report.violations.push(Violation {
                    time: state.time,
                    node: i,
                    quantity: Quantity::GradientFloor,
                    deficit: -margin,
                });
            }
            ratio = if k > 0.0 {
                ratio.max((r / k).abs())
            } else {
                f64::INFINITY
            };
        }
        if m_bar < g2 - TOL_CMP {
            report.violations.push(Violation {
                time: state.time,
                node: arg,
                quantity: Quantity::MarginFloor,
                deficit: g2 - m_bar,
            });
        }
        report.times.push(state.time);
        report.m_bar.push(m_bar);
        report.ratio_sup.push(ratio);
        report.rho_xxx_sup.push(rho_xxx_sup(state)?);
    }
    Ok(report)
}

/// Integrates the equality form of the gamma decay law exactly over each
/// stored interval, freezing `||rho_xxx||_inf` at the left end.
pub fn gamma_from_trajectory(
    traj: &Trajectory,
    mon: &MonitorParams,
    gamma_init: f64,
) -> Result<Vec<f64>> {
    let sups = traj
        .states
        .iter()
        .map(rho_xxx_sup)
        .collect::<Result<Vec<_>>>()?;
    let times = traj.times();
    Ok(gamma_series(&times, &sups, mon.c0, gamma_init))
}

/// `gamma_{k+1} = gamma_k exp(-(c0 + c_k) (t_{k+1} - t_k))`.
pub fn gamma_series(times: &[f64], rho_xxx_sup: &[f64], c0: f64, gamma_init: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut g = gamma_init;
    out.push(g);
    for k in 1..times.len() {
        g *= (-(c0 + rho_xxx_sup[k - 1]) * (times[k] - times[k - 1])).exp();
        out.push(g);
    }
    out
}

/// Sets up the monitor for a trajectory and runs it: beta from the model,
/// `gamma(0) = gamma0 / 2`.
pub fn certify(traj: &Trajectory) -> Result<InvariantReport> {
    let mon = MonitorParams::for_params(&traj.params)?;
    let gamma = gamma_from_trajectory(traj, &mon, 0.5 * traj.reg.gamma0)?;
    comparison_monitor(traj, &mon, &gamma)
}

/// Closed-form and RK4 solutions of `gamma' = -E (1 + |log gamma|) gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaLogSeries {
    pub times: Vec<f64>,
    pub closed_form: Vec<f64>,
    pub rk4: Vec<f64>,
}

impl GammaLogSeries {
    pub fn max_discrepancy(&self) -> f64 {
        self.closed_form
            .iter()
            .zip(&self.rk4)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// With `u = 1 - log gamma`, `u' = E u` while `gamma < 1`.
pub fn gamma_log_closed_form(e: f64, gamma_init: f64, t: f64) -> f64 {
    (1.0 - (1.0 - gamma_init.ln()) * (e * t).exp()).exp()
}

pub fn gamma_log_ode(e: f64, gamma_init: f64, t_end: f64, dt: f64) -> Result<GammaLogSeries> {
    if !(gamma_init > 0.0 && gamma_init < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma_init = {gamma_init} not in (0,1)"
        )));
    }
    if !(e >= 0.0) || !(t_end >= 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidParameter(
            "need E >= 0, t_end >= 0, dt > 0".into(),
        ));
    }
    let rate = |g: f64| -e * (1.0 + g.ln().abs()) * g;
    let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let mut times = vec![0.0];
    let mut rk4 = vec![gamma_init];
    let mut g = gamma_init;
    for k in 0..steps {
        let t0 = k as f64 * dt;
        let t1 = ((k + 1) as f64 * dt).min(t_end);
        let h = t1 - t0;
        let k1 = rate(g);
        let k2 = rate(g + 0.5 * h * k1);
        let k3 = rate(g + 0.5 * h * k2);
        let k4 = rate(g + h * k3);
        g += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        times.push(t1);
        rk4.push(g);
    }
    let closed_form = times
        .iter()
        .map(|&t| gamma_log_closed_form(e, gamma_init, t))
        .collect();
    Ok(GammaLogSeries {
        times,
        closed_form,
        rk4,
    })
}

fn min_kappa_x(state: &StatePair) -> f64 {
    diff1(&state.kappa).min()
}

/// Smallest `b >= 0` (to 1e-6) with `kappa_x(., t) >= exp(-exp(exp(b (t+1))))`
/// at every stored time.
pub fn fit_triple_exponential(traj: &Trajectory) -> Result<f64> {
    let samples: Vec<(f64, f64)> = traj
        .states
        .iter()
        .map(|s| (s.time, min_kappa_x(s)))
        .collect();
    if let Some(&(time, min_kappa_x)) = samples.iter().find(|(_, m)| !(*m > 0.0)) {
        return Err(Error::InfeasibleFit { min_kappa_x, time });
    }
    Ok(fit_triple_exponential_samples(&samples))
}

pub(crate) fn fit_triple_exponential_samples(samples: &[(f64, f64)]) -> f64 {
    let holds = |b: f64| {
        samples
            .iter()
            .all(|&(t, m)| (-(b * (t + 1.0)).exp().exp()).exp() <= m)
    };
    if holds(0.0) {
        return 0.0;
    }
    let mut hi = 1.0;
    while !holds(hi) {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Per-time `||rho_x / kappa_x||_inf` and whether it stays `<= 1 + TOL_CMP`.
pub fn ratio_bound_check(traj: &Trajectory) -> Result<(Vec<f64>, bool)> {
    let mut out = Vec::with_capacity(traj.states.len());
    for s in &traj.states {
        let rx = diff1(&s.rho);
        let kx = diff1(&s.kappa);
        let mut sup = 0.0f64;
        for (node, (&r, &k)) in rx.values().iter().zip(kx.values()).enumerate() {
            if !(k > 0.0) {
                return Err(Error::SingularDenominator { node, value: k });
            }
            sup = sup.max((r / k).abs());
        }
        out.push(sup);
    }
    let ok = out.iter().all(|&r| r <= 1.0 + TOL_CMP);
    Ok((out, ok))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, ScalarField};
    use crate::system::RegParams;

    fn traj_of(states: Vec<StatePair>, params: ModelParams) -> Trajectory {
        Trajectory {
            states,
            params,
            reg: RegParams::new(0.9, 1.0).unwrap(),
            steps: Vec::new(),
        }
    }

    fn linear(g: Grid, slope_rho: f64, t: f64) -> StatePair {
        StatePair::new(
            ScalarField::from_fn(g, |x| slope_rho * x),
            ScalarField::from_fn(g, |x| x),
            t,
        )
        .unwrap()
    }

    #[test]
    fn beta_doubling_search() {
        let b = |eps, tau| choose_beta(&ModelParams::new(eps, tau).unwrap());
        assert_eq!(b(1.0, 0.0), 2.0);
        assert_eq!(b(1.0, 1.0), 2.0);
        assert_eq!(b(1.0, 100.0), 64.0);
        for (eps, tau) in [(0.1, -1.0), (0.5, 3.0), (2.0, 0.0)] {
            let beta = b(eps, tau);
            assert!(beta * beta.tanh() > tau.abs() / (1.0 + eps) + 1.0);
        }
    }

    #[test]
    fn monitor_constants() {
        let p = ModelParams::new(0.5, 1.0).unwrap();
        let m = MonitorParams::new(2.0, &p).unwrap();
        assert!((m.c1 - (1.0 + 0.25 + 2.0)).abs() < 1e-15);
        assert!((m.c2 - 2.0f64.cosh() / 2.0).abs() < 1e-15);
        assert_eq!(m.c0, m.c1.min(m.c2));
        assert!(m.is_consistent(&p));
        let tampered = MonitorParams { c0: 0.0, ..m };
        assert!(!tampered.is_consistent(&p));
    }

    #[test]
    fn constant_bracket_margin() {
        let g = Grid::uniform(41).unwrap();
        let p = ModelParams::new(1.0, 0.0).unwrap();
        let traj = traj_of(vec![linear(g, 0.0, 0.0)], p);
        for beta in [1.0, 4.0] {
            let mon = MonitorParams::new(beta, &p).unwrap();
            let rep = comparison_monitor(&traj, &mon, &[0.5]).unwrap();
            assert!((rep.m_bar[0] - 0.5).abs() < 1e-14);
            assert!(rep.is_clean());
        }
    }

    #[test]
    fn equality_case_flags_iff_gamma_positive() {
        let g = Grid::uniform(41).unwrap();
        let p = ModelParams::new(1.0, 0.0).unwrap();
        let gamma = 0.6f64;
        // kappa_x = 1 = sqrt(gamma^2 + rho_x^2) with rho_x = 0.8
        let traj = traj_of(vec![linear(g, 0.8, 0.0)], p);
        let mon = MonitorParams::new(2.0, &p).unwrap();
        let rep = comparison_monitor(&traj, &mon, &[gamma]).unwrap();
        assert!(rep.m_bar[0].abs() < 1e-12);
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0].quantity, Quantity::MarginFloor);

        let traj = traj_of(vec![linear(g, 1.0, 0.0)], p);
        let rep = comparison_monitor(&traj, &mon, &[0.0]).unwrap();
        assert!(rep.is_clean());
    }

    #[test]
    fn gamma_closed_forms() {
        let times: Vec<f64> = (0..=1000).map(|k| k as f64 * 1e-3).collect();
        let zeros = vec![0.0; times.len()];
        let g = gamma_series(&times, &zeros, 1.0, 0.5);
        assert!((g[1000] - 0.5 * (-1.0f64).exp()).abs() < 1e-12);
        assert!((g[1000] - 0.18394).abs() < 1e-5);
        let g = gamma_series(&times, &zeros, 0.0, 0.5);
        assert!(g.iter().all(|&v| v == 0.5));

        // piecewise-constant c~ against an independent cumulative sum
        let sups: Vec<f64> = times
            .iter()
            .map(|t| if *t < 0.4 { 3.0 } else { 0.5 })
            .collect();
        let g = gamma_series(&times, &sups, 0.7, 0.3);
        let mut acc = 0.0;
        for k in 1..times.len() {
            acc += (0.7 + sups[k - 1]) * (times[k] - times[k - 1]);
            assert!((g[k] - 0.3 * (-acc).exp()).abs() < 1e-12);
        }
        assert!(g.windows(2).all(|w| w[1] <= w[0] && w[1] > 0.0));
    }

    #[test]
    fn log_ode() {
        let g0 = (-1.0f64).exp();
        let s = gamma_log_ode(1.0, g0, 1.0, 1e-3).unwrap();
        assert_eq!(s.times.len(), 1001);
        for (t, v) in s.times.iter().zip(&s.closed_form) {
            assert!((v - (1.0 - 2.0 * t.exp()).exp()).abs() < 1e-10);
        }
        let at_ln2 = gamma_log_closed_form(1.0, g0, 2f64.ln());
        assert!((at_ln2 - (-3.0f64).exp()).abs() < 1e-10);
        assert!(s.max_discrepancy() < 1e-8);

        let s = gamma_log_ode(0.0, 0.3, 2.0, 0.1).unwrap();
        assert!(s
            .rk4
            .iter()
            .chain(&s.closed_form)
            .all(|&v| (v - 0.3).abs() < 1e-15));
        assert!(gamma_log_ode(1.0, 1.5, 1.0, 0.1).is_err());
    }

    #[test]
    fn triple_exponential_fit() {
        assert_eq!(
            fit_triple_exponential_samples(&[(0.0, 1.0), (1.0, 1.0)]),
            0.0
        );
        let b = fit_triple_exponential_samples(&[(0.0, 0.01)]);
        let want = (100f64.ln().ln()).ln();
        assert!((want - 0.4234).abs() < 1e-4);
        assert!(b >= want && b - want <= 1.1e-6, "{b} vs {want}");

        let g = Grid::uniform(11).unwrap();
        let p = ModelParams::new(1.0, 0.0).unwrap();
        let bad =
            StatePair::new(ScalarField::zeros(g), ScalarField::from_fn(g, |x| -x), 0.0).unwrap();
        assert!(matches!(
            fit_triple_exponential(&traj_of(vec![bad], p)),
            Err(Error::InfeasibleFit { .. })
        ));
    }

    #[test]
    fn ratio_checks() {
        let g = Grid::uniform(11).unwrap();
        let p = ModelParams::new(1.0, 0.0).unwrap();
        let (r, ok) = ratio_bound_check(&traj_of(vec![linear(g, 0.0, 0.0)], p)).unwrap();
        assert_eq!(r, vec![0.0]);
        assert!(ok);
        let (r, ok) = ratio_bound_check(&traj_of(vec![linear(g, 0.5, 0.0)], p)).unwrap();
        assert!((r[0] - 0.5).abs() < 1e-14 && ok);
        let bad =
            StatePair::new(ScalarField::zeros(g), ScalarField::from_fn(g, |x| -x), 0.0).unwrap();
        assert!(ratio_bound_check(&traj_of(vec![bad], p)).is_err());
    }
}
