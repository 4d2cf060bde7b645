use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use disloc::initial_data::{build_initial_data, ModelParams};
use disloc::invariants::{
    comparison_monitor, gamma_from_trajectory, gamma_log_ode, MonitorParams, Violation,
};
use disloc::io::{
    read_meta, read_trajectory, thinned_states, write_invariants, write_meta, write_trajectory,
    RunMeta,
};
use disloc::norms::{
    bmo_norm, extension_corpus, frac_sobolev_norm, holder_norm, holder_seminorm_t,
    holder_seminorm_x, kozono_taniuchi_ratio, kt_corpus, standard_corpus, sym_asym_relation,
    w212_norm, FiniteDifferences, KtComponents, SymAsymRelation,
};
use disloc::solver::{
    default_reg, observed_orders, solve_manufactured, DecayingSine, ManufacturedPair, MmsRow, Rung,
    THETA_SKIP,
};
use disloc::system::{residual_theta, to_theta};
use disloc::{solve, Error, Grid, StepperConfig, Trajectory};
use serde::Serialize;

use crate::config::{parse_list, ConfigFile};
use crate::{CliError, GammaArgs, MmsArgs, NormsArgs, SimulateArgs, VerifyArgs};

fn bad_config(e: Error) -> CliError {
    CliError::Config(e.to_string())
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_err(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| io_err(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(path, e))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| io_err(path, e))
}

fn with_ext(path: &Path, ext: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{ext}"))
}

// ------------------------------------------------------------------ simulate

const SIMULATE_KEYS: &[&str] = &[
    "epsilon",
    "tau",
    "amplitude",
    "n",
    "t-end",
    "dt",
    "picard-tol",
    "picard-max-iters",
    "dt-backoff",
    "beta",
    "save-every",
    "out",
    "name",
];

pub fn simulate(a: SimulateArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    cfg.check_keys(SIMULATE_KEYS)?;
    let epsilon = cfg.require(a.epsilon, "epsilon")?;
    let tau = cfg.require(a.tau, "tau")?;
    let n = cfg.require(a.n, "n")?;
    let t_end: f64 = cfg.require(a.t_end, "t-end")?;
    let amplitude = cfg.or(a.amplitude, "amplitude", 0.0)?;
    let defaults = StepperConfig::default();
    let stepper = StepperConfig {
        dt: cfg.or(a.dt, "dt", defaults.dt)?,
        picard_tol: cfg.or(a.picard_tol, "picard-tol", defaults.picard_tol)?,
        picard_max_iters: cfg.or(
            a.picard_max_iters,
            "picard-max-iters",
            defaults.picard_max_iters,
        )?,
        dt_backoff: cfg.or(a.dt_backoff, "dt-backoff", defaults.dt_backoff)?,
    };
    let beta = cfg.pick(a.beta, "beta")?;
    let save_every = cfg.or(a.save_every, "save-every", 1usize)?;
    let out = cfg.or(a.out, "out", PathBuf::from("."))?;
    let name = cfg.or(a.name, "name", "run".to_string())?;

    stepper.validate().map_err(bad_config)?;
    if t_end <= 0.0 || !t_end.is_finite() {
        return Err(CliError::Config(format!(
            "t-end = {t_end} must be positive"
        )));
    }
    if save_every == 0 {
        return Err(CliError::Config("save-every must be at least 1".into()));
    }
    let params = ModelParams::new(epsilon, tau).map_err(bad_config)?;
    if let Some(b) = beta {
        MonitorParams::new(b, &params).map_err(bad_config)?;
    }
    let grid = Grid::uniform(n).map_err(bad_config)?;
    let init = build_initial_data(&params, amplitude, grid).map_err(bad_config)?;

    let traj = solve(&init, t_end, &stepper, &params)
        .map_err(|e| CliError::Failed(format!("solve failed: {e}")))?;

    let csv = out.join(format!("{name}.csv"));
    let mut w = create(&csv)?;
    write_trajectory(&mut w, thinned_states(&traj, save_every)).map_err(|e| io_err(&csv, e))?;
    let meta = RunMeta {
        params,
        amplitude,
        n_nodes: n,
        t_end,
        stepper,
        reg: default_reg(&init).map_err(bad_config)?,
        beta,
        save_every,
        accepted_steps: traj.steps.len(),
        final_dt: traj.steps.last().map_or(stepper.dt, |s| s.dt),
    };
    let meta_path = out.join(format!("{name}.meta.json"));
    let mut w = create(&meta_path)?;
    write_meta(&mut w, &meta).map_err(|e| io_err(&meta_path, e))?;
    w.flush().map_err(|e| io_err(&meta_path, e))?;
    println!(
        "{} steps to t = {}, trajectory in {}",
        traj.steps.len(),
        traj.last().time,
        csv.display()
    );
    Ok(())
}

// -------------------------------------------------------------------- verify

fn load_run(trajectory: &Path, meta: Option<PathBuf>) -> Result<(Trajectory, RunMeta), CliError> {
    let states = read_trajectory(open(trajectory)?).map_err(|e| match e {
        Error::Io(m) => io_err(trajectory, m),
        other => CliError::Config(format!("{}: {other}", trajectory.display())),
    })?;
    let meta_path = meta.unwrap_or_else(|| with_ext(trajectory, "meta.json"));
    let meta = read_meta(open(&meta_path)?).map_err(|e| match e {
        Error::Io(m) => io_err(&meta_path, m),
        other => CliError::Config(format!("{}: {other}", meta_path.display())),
    })?;
    let traj = Trajectory {
        states,
        params: meta.params,
        reg: meta.reg,
        steps: Vec::new(),
    };
    Ok((traj, meta))
}

fn monitor_for(beta: Option<f64>, params: &ModelParams) -> Result<MonitorParams, CliError> {
    match beta {
        Some(b) => MonitorParams::new(b, params),
        None => MonitorParams::for_params(params),
    }
    .map_err(bad_config)
}

#[derive(Serialize)]
struct VerifySummary {
    trajectory: String,
    states: usize,
    beta: f64,
    c0: f64,
    structure_error: Option<String>,
    violations: usize,
    first_violations: Vec<Violation>,
    min_slack: f64,
    min_density: f64,
    /// Max-norm backward-difference residual of the theta system between
    /// stored states, away from the ends.
    theta_residual: Option<f64>,
    theta_residual_error: Option<String>,
    passed: bool,
}

const VERIFY_KEYS: &[&str] = &["trajectory", "meta", "beta", "out"];

pub fn verify(a: VerifyArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    cfg.check_keys(VERIFY_KEYS)?;
    let path: PathBuf = cfg.require(a.trajectory, "trajectory")?;
    let meta_override = cfg.pick(a.meta, "meta")?;
    let beta_override = cfg.pick(a.beta, "beta")?;
    let out = cfg.pick(a.out, "out")?;
    let (traj, meta) = load_run(&path, meta_override)?;
    let mon = monitor_for(beta_override.or(meta.beta), &traj.params)?;

    let structure_error = traj.check_invariants().err().map(|e| e.to_string());
    let report = gamma_from_trajectory(&traj, &mon, 0.5 * traj.reg.gamma0)
        .and_then(|g| comparison_monitor(&traj, &mon, &g))
        .map_err(|e| CliError::Failed(format!("monitor failed: {e}")))?;

    let mut min_density = f64::INFINITY;
    let mut thetas = Vec::with_capacity(traj.states.len());
    for s in &traj.states {
        let th = to_theta(s).map_err(|e| CliError::Failed(e.to_string()))?;
        min_density = min_density.min(th.min_density());
        thetas.push(th);
    }
    let mut theta_residual = Some(0.0f64);
    let mut theta_residual_error = None;
    for k in 1..traj.states.len() {
        let dt = traj.states[k].time - traj.states[k - 1].time;
        match residual_theta(&thetas[k], &thetas[k - 1], dt, &traj.params) {
            Ok((p, m)) => {
                let n = p.len();
                let inner = THETA_SKIP..n.saturating_sub(THETA_SKIP);
                let worst = p.values()[inner.clone()]
                    .iter()
                    .chain(&m.values()[inner])
                    .fold(0.0f64, |acc, v| acc.max(v.abs()));
                theta_residual = theta_residual.map(|r| r.max(worst));
            }
            Err(e) => {
                theta_residual = None;
                theta_residual_error = Some(format!("t = {}: {e}", traj.states[k].time));
                break;
            }
        }
    }

    let passed = structure_error.is_none() && report.is_clean();
    let out_dir = out.unwrap_or_else(|| path.parent().map(Path::to_path_buf).unwrap_or_default());
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let inv_path = out_dir.join(format!("{stem}.invariants.csv"));
    let mut w = create(&inv_path)?;
    write_invariants(&mut w, &report).map_err(|e| io_err(&inv_path, e))?;
    let summary = VerifySummary {
        trajectory: path.display().to_string(),
        states: traj.states.len(),
        beta: mon.beta,
        c0: mon.c0,
        structure_error: structure_error.clone(),
        violations: report.violations.len(),
        first_violations: report.violations.iter().take(20).copied().collect(),
        min_slack: report.min_slack(),
        min_density,
        theta_residual,
        theta_residual_error,
        passed,
    };
    write_json(&out_dir.join(format!("{stem}.verify.json")), &summary)?;

    if passed {
        println!(
            "ok: {} states, no violations, min slack {:.3e}, min density {:.4}",
            summary.states, summary.min_slack, min_density
        );
        return Ok(());
    }
    let mut msg = String::from("verification failed");
    if let Some(e) = &structure_error {
        msg.push_str(&format!("\n  trajectory: {e}"));
    }
    for v in report.violations.iter().take(10) {
        msg.push_str(&format!(
            "\n  t = {} node {}: {:?} short by {:.3e}",
            v.time, v.node, v.quantity, v.deficit
        ));
    }
    if report.violations.len() > 10 {
        msg.push_str(&format!(
            "\n  ... {} violations in total",
            report.violations.len()
        ));
    }
    Err(CliError::Failed(msg))
}

// ----------------------------------------------------------------------- mms

#[derive(Serialize)]
struct MmsReport {
    epsilon: f64,
    tau: f64,
    t_end: f64,
    spatial: Vec<MmsRow>,
    spatial_orders: Vec<f64>,
    temporal: Vec<MmsRow>,
    temporal_orders: Vec<f64>,
    theta_orders: Vec<f64>,
}

const MMS_KEYS: &[&str] = &[
    "epsilon", "tau", "t-end", "nodes", "c", "dts", "out", "name",
];

pub fn mms(a: MmsArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    cfg.check_keys(MMS_KEYS)?;
    let epsilon = cfg.or(a.epsilon, "epsilon", 0.5)?;
    let tau = cfg.or(a.tau, "tau", 1.0)?;
    let t_end = cfg.or(a.t_end, "t-end", 0.5)?;
    let nodes: Vec<usize> = parse_list(
        &cfg.or(a.nodes, "nodes", "51,101,201".to_string())?,
        "nodes",
    )?;
    let c = cfg.or(a.c, "c", 1.0)?;
    let dts: Vec<f64> = parse_list(&cfg.or(a.dts, "dts", "4e-3,2e-3,1e-3".to_string())?, "dts")?;
    let out = cfg.or(a.out, "out", PathBuf::from("."))?;
    let name = cfg.or(a.name, "name", "mms".to_string())?;
    if nodes.len() < 2 || dts.len() < 2 {
        return Err(CliError::Config("ladders need at least two rungs".into()));
    }

    let params = ModelParams::new(epsilon, tau).map_err(bad_config)?;
    let rho = DecayingSine {
        slope: 0.0,
        amplitude: 0.1,
        rate: 1.0,
    };
    let kappa = DecayingSine {
        slope: 1.0,
        amplitude: 0.05,
        rate: 1.0,
    };
    let pair = ManufacturedPair {
        rho: &rho,
        kappa: &kappa,
        params,
    };
    let stepper = StepperConfig::default();
    let run = |rungs: &[Rung]| {
        solve_manufactured(&pair, t_end, rungs, &stepper).map_err(|e| match e {
            Error::StepCollapse { .. } | Error::PicardDiverged { .. } => {
                CliError::Failed(format!("manufactured run failed: {e}"))
            }
            other => bad_config(other),
        })
    };
    let rungs = Rung::diffusive_ladder(&nodes, c);
    let spatial = run(&rungs)?;
    let finest = *nodes.iter().max().expect("non-empty ladder");
    let temporal = run(&Rung::temporal_ladder(finest, &dts))?;

    let hs: Vec<f64> = rungs.iter().map(Rung::h).collect();
    let errs = |rows: &[MmsRow]| rows.iter().map(|r| r.err).collect::<Vec<_>>();
    let spatial_orders = observed_orders(&errs(&spatial), &hs);
    let temporal_orders = observed_orders(&errs(&temporal), &dts);
    let eta: Vec<f64> = rungs.iter().map(|r| r.dt + r.h() * r.h()).collect();
    let res: Vec<f64> = spatial.iter().map(|r| r.theta_residual).collect();
    let theta_orders = observed_orders(&res, &eta);

    println!(
        "{:>6} {:>10} {:>12} {:>12}",
        "n", "dt", "error", "theta res"
    );
    for r in spatial.iter().chain(&temporal) {
        println!(
            "{:>6} {:>10.3e} {:>12.4e} {:>12.4e}",
            r.n_nodes, r.dt, r.err, r.theta_residual
        );
    }
    println!("spatial orders {spatial_orders:.3?}");
    println!("temporal orders {temporal_orders:.3?}");
    println!("theta orders {theta_orders:.3?}");

    let worst = spatial_orders.iter().copied().fold(f64::INFINITY, f64::min);
    let report = MmsReport {
        epsilon,
        tau,
        t_end,
        spatial,
        spatial_orders,
        temporal,
        temporal_orders,
        theta_orders,
    };
    write_json(&out.join(format!("{name}.json")), &report)?;
    if worst < 1.8 {
        return Err(CliError::Failed(format!(
            "spatial order {worst:.3} below 1.8"
        )));
    }
    Ok(())
}

// --------------------------------------------------------------------- norms

#[derive(Serialize)]
struct FieldNorms {
    name: String,
    sup: f64,
    bmo: f64,
    holder_x: f64,
    holder_t: f64,
    holder: f64,
    w212: f64,
    frac_sobolev_t0: f64,
    kozono_taniuchi: Option<KtComponents>,
    sym_asym: SymAsymRelation,
    c_emp: Option<f64>,
}

#[derive(Serialize)]
struct NormsReport {
    corpus: String,
    n: usize,
    nt: usize,
    t_end: f64,
    alpha: f64,
    ell: f64,
    s: f64,
    p: f64,
    fields: Vec<FieldNorms>,
}

const NORMS_KEYS: &[&str] = &[
    "corpus", "n", "nt", "t-end", "alpha", "ell", "s", "p", "out", "name",
];

pub fn norms(a: NormsArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    cfg.check_keys(NORMS_KEYS)?;
    let corpus_name = cfg.or(a.corpus, "corpus", "standard".to_string())?;
    let n = cfg.or(a.n, "n", 33usize)?;
    let nt = cfg.or(a.nt, "nt", 33usize)?;
    let t_end = cfg.or(a.t_end, "t-end", 1.0)?;
    let alpha = cfg.or(a.alpha, "alpha", 0.5)?;
    let ell = cfg.or(a.ell, "ell", 1.5)?;
    let s = cfg.or(a.s, "s", 0.5)?;
    let p = cfg.or(a.p, "p", 2.0)?;
    let out = cfg.or(a.out, "out", PathBuf::from("."))?;
    let name = cfg.or(a.name, "name", "norms".to_string())?;

    let corpus = match corpus_name.as_str() {
        "standard" => standard_corpus(n, nt, t_end),
        "kt" => kt_corpus(n, nt, t_end),
        "extension" => extension_corpus(n, nt, t_end),
        other => {
            return Err(CliError::Config(format!(
                "unknown corpus `{other}` (standard, kt or extension)"
            )))
        }
    }
    .map_err(bad_config)?;

    let fd = FiniteDifferences;
    let mut fields = Vec::new();
    for (label, f) in &corpus {
        let t0 = f.slice(0).map_err(bad_config)?;
        let rel = sym_asym_relation(f).map_err(bad_config)?;
        let kt = match kozono_taniuchi_ratio(f) {
            Ok(k) => Some(k),
            Err(Error::ZeroDenominator) => None,
            Err(e) => return Err(bad_config(e)),
        };
        fields.push(FieldNorms {
            name: label.to_string(),
            sup: f.linf(),
            bmo: bmo_norm(f).map_err(bad_config)?,
            holder_x: holder_seminorm_x(f, alpha).map_err(bad_config)?,
            holder_t: holder_seminorm_t(f, alpha).map_err(bad_config)?,
            holder: holder_norm(f, ell, &fd).map_err(bad_config)?,
            w212: w212_norm(f).map_err(bad_config)?,
            frac_sobolev_t0: frac_sobolev_norm(&t0, s, p).map_err(bad_config)?,
            kozono_taniuchi: kt,
            c_emp: rel.c_emp(),
            sym_asym: rel,
        });
    }
    for fnorm in &fields {
        println!(
            "{:<20} bmo {:>9.5} w212 {:>9.4} kt {:>8}",
            fnorm.name,
            fnorm.bmo,
            fnorm.w212,
            fnorm
                .kozono_taniuchi
                .map_or("-".to_string(), |k| format!("{:.4}", k.ratio))
        );
    }
    let report = NormsReport {
        corpus: corpus_name,
        n,
        nt,
        t_end,
        alpha,
        ell,
        s,
        p,
        fields,
    };
    write_json(&out.join(format!("{name}.json")), &report)
}

// --------------------------------------------------------------------- gamma

const GAMMA_KEYS: &[&str] = &[
    "e",
    "gamma0",
    "t-end",
    "dt",
    "trajectory",
    "meta",
    "beta",
    "out",
    "name",
];

pub fn gamma(a: GammaArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    cfg.check_keys(GAMMA_KEYS)?;
    let out = cfg.pick(a.out, "out")?;
    if let Some(path) = cfg.pick::<PathBuf>(a.trajectory, "trajectory")? {
        let (traj, meta) = load_run(&path, cfg.pick(a.meta, "meta")?)?;
        let mon = monitor_for(cfg.pick(a.beta, "beta")?.or(meta.beta), &traj.params)?;
        let g = gamma_from_trajectory(&traj, &mon, 0.5 * traj.reg.gamma0)
            .map_err(|e| CliError::Failed(e.to_string()))?;
        let dir = out.unwrap_or_else(|| path.parent().map(Path::to_path_buf).unwrap_or_default());
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let target = dir.join(format!("{stem}.gamma.csv"));
        let mut w = create(&target)?;
        let rows: Result<(), std::io::Error> = (|| {
            writeln!(w, "t,gamma")?;
            for (s, g) in traj.states.iter().zip(&g) {
                writeln!(w, "{},{}", s.time, g)?;
            }
            w.flush()
        })();
        rows.map_err(|e| io_err(&target, e))?;
        println!(
            "gamma({}) = {:.6e}, written to {}",
            traj.last().time,
            g.last().unwrap(),
            target.display()
        );
        return Ok(());
    }

    let e = cfg.or(a.e, "e", 1.0)?;
    let gamma0 = cfg.require(a.gamma0, "gamma0")?;
    let t_end = cfg.or(a.t_end, "t-end", 1.0)?;
    let dt = cfg.or(a.dt, "dt", 1e-3)?;
    let name = cfg.or(a.name, "name", "gamma".to_string())?;
    let series = gamma_log_ode(e, gamma0, t_end, dt).map_err(bad_config)?;
    let target = out
        .unwrap_or_else(|| PathBuf::from("."))
        .join(format!("{name}.csv"));
    let mut w = create(&target)?;
    let rows: Result<(), std::io::Error> = (|| {
        writeln!(w, "t,closed_form,rk4")?;
        for k in 0..series.times.len() {
            writeln!(
                w,
                "{},{},{}",
                series.times[k], series.closed_form[k], series.rk4[k]
            )?;
        }
        w.flush()
    })();
    rows.map_err(|e| io_err(&target, e))?;
    println!(
        "gamma({t_end}) = {:.12e} (closed form), max RK4 discrepancy {:.3e}",
        series.closed_form.last().unwrap(),
        series.max_discrepancy()
    );
    Ok(())
}
