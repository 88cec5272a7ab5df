//! The four subcommands. Each returns a [`Failure`] carrying the process exit
//! code when something goes wrong.

use std::fmt;
use std::path::Path;

use anyhow::anyhow;
use dftr_core::{
    build_generator, dissipativity_form, duhamel_oracle, initial_profile, resolvent_analytic,
    resolvent_discrete, simulate, steady_state_analytic_n1, steady_state_numeric, sweep,
    weight_profile, DftrError, Profile, SimulationConfig, SpatialGrid, SteadyStateSolution,
    SweepOptions, Trajectory,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{ConfigDocument, Purpose, ResolvedConfig};
use crate::output::{float, ManifestKey, RunOutput};

/// Output could not be written.
pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_STEADY: u8 = 3;
pub const EXIT_INTEGRATION: u8 = 4;
pub const EXIT_SWEEP: u8 = 5;
pub const EXIT_VERIFY: u8 = 6;

/// Error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Self {
            code,
            error: error.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

type Outcome = Result<(), Failure>;

trait Code<T> {
    fn code(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Code<T> for Result<T, E> {
    fn code(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure::new(code, e))
    }
}

/// Exit code for errors raised while simulating.
fn simulation_code(e: &DftrError) -> u8 {
    match e {
        DftrError::ParameterDomain { .. } | DftrError::Contract(_) => EXIT_CONFIG,
        _ => EXIT_INTEGRATION,
    }
}

fn solve_steady(cfg: &ResolvedConfig, t_final: f64) -> Result<SteadyStateSolution<f64>, Failure> {
    let params = cfg.params(t_final).code(EXIT_CONFIG)?;
    let grid = cfg.grid().code(EXIT_CONFIG)?;
    steady_state_numeric(&params, cfg.u_bar, grid)
        .map_err(|e| Failure::new(EXIT_STEADY, anyhow!(e)))
}

fn simulation_config(
    cfg: &ResolvedConfig,
    t_final: f64,
    record_every: usize,
) -> anyhow::Result<SimulationConfig<f64>> {
    let grid = cfg.grid()?;
    Ok(SimulationConfig {
        params: cfg.params(t_final)?,
        law: cfg.law()?,
        grid,
        dt: cfg.dt,
        record_every,
        clamp_monitor: true,
        reaction: cfg.scheme.into(),
        weight: weight_profile(grid, cfg.rho0, cfg.gamma)?,
    })
}

pub struct Inputs<'a> {
    pub config_path: &'a Path,
    pub out: &'a Path,
}

fn load(inputs: &Inputs, purpose: Purpose, gains: &[f64]) -> Result<ResolvedConfig, Failure> {
    let doc: ConfigDocument = crate::config::load(inputs.config_path).code(EXIT_CONFIG)?;
    doc.resolve(purpose, gains).code(EXIT_CONFIG)
}

pub fn steady(inputs: &Inputs) -> Outcome {
    let cfg = load(inputs, Purpose::Single, &[])?;
    let key = ManifestKey {
        toolkit_version: env!("CARGO_PKG_VERSION"),
        command: "steady",
        config: &cfg,
        seed: None,
        n_list: None,
        alpha_list: None,
    };
    let mut out = RunOutput::create(inputs.out, inputs.config_path, key).code(EXIT_IO)?;
    let sol = solve_steady(&cfg, cfg.t_final)?;
    out.phase("steady_state");
    let grid = *sol.profile.grid();
    out.csv("steady.csv", "x,c_bar", rows_xy(&sol.profile))
        .code(EXIT_IO)?;
    println!(
        "steady state: {} Newton iterations, scaled residual {:.3e}, {} negative nodes",
        sol.iterations, sol.residual_norm, sol.negative_nodes
    );
    let mut details = json!({
        "newton_iterations": sol.iterations,
        "residual_norm": sol.residual_norm,
        "negative_nodes": sol.negative_nodes,
    });
    if (cfg.n - 1.0).abs() < 1e-12 {
        let params = cfg.params(cfg.t_final).code(EXIT_CONFIG)?;
        let exact = steady_state_analytic_n1(&params, cfg.u_bar)
            .code(EXIT_STEADY)?
            .sample(grid);
        out.csv("steady_analytic.csv", "x,c_bar", rows_xy(&exact))
            .code(EXIT_IO)?;
        let discrepancy = sol.profile.sub(&exact).code(EXIT_STEADY)?.max_abs() / exact.max_abs();
        println!("max relative discrepancy vs closed form: {discrepancy:.3e}");
        details["analytic_discrepancy"] = json!(discrepancy);
    }
    out.details = details;
    out.phase("write");
    out.finish().code(EXIT_IO)
}

fn rows_xy(p: &Profile<f64>) -> Vec<String> {
    p.grid()
        .nodes()
        .zip(p.values())
        .map(|(x, &c)| format!("{},{}", float(x), float(c)))
        .collect()
}

fn run_trajectory(
    cfg: &ResolvedConfig,
) -> Result<(Trajectory<f64>, SimulationConfig<f64>), Failure> {
    let steady = solve_steady(cfg, cfg.t_final)?;
    // every step is kept so snapshots need not align with the decimation
    let sim = simulation_config(cfg, cfg.t_final, 1).code(EXIT_CONFIG)?;
    let w0 = initial_profile(sim.grid, &sim.params, &sim.law).code(EXIT_CONFIG)?;
    let traj = simulate(&sim, &steady, &w0).map_err(|e| Failure::new(simulation_code(&e), e))?;
    Ok((traj, sim))
}

pub fn simulate_cmd(inputs: &Inputs) -> Outcome {
    let cfg = load(inputs, Purpose::Single, &[])?;
    let key = ManifestKey {
        toolkit_version: env!("CARGO_PKG_VERSION"),
        command: "simulate",
        config: &cfg,
        seed: None,
        n_list: None,
        alpha_list: None,
    };
    let mut out = RunOutput::create(inputs.out, inputs.config_path, key).code(EXIT_IO)?;
    let steps = simulation_config(&cfg, cfg.t_final, 1)
        .and_then(|s| Ok(s.num_steps()?))
        .code(EXIT_CONFIG)?;
    let mut snapshot_steps = Vec::new();
    for &t in &cfg.snapshots {
        let k = (t / cfg.dt).round();
        if t < 0.0 || (k * cfg.dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Failure::new(
                EXIT_CONFIG,
                anyhow!(
                    "snapshot time {t} is not a whole number of steps of {}",
                    cfg.dt
                ),
            ));
        }
        if (k as usize) <= steps {
            snapshot_steps.push(k as usize);
        }
    }

    let (traj, sim) = run_trajectory(&cfg)?;
    out.phase("simulate");

    let recorded: Vec<usize> = (0..traj.len())
        .filter(|&j| j % cfg.record_every == 0 || j + 1 == traj.len())
        .collect();
    let nodes: Vec<f64> = sim.grid.nodes().collect();
    let profile_rows = |indices: &[usize]| -> Vec<String> {
        let mut rows = Vec::with_capacity(indices.len() * nodes.len());
        for &j in indices {
            let t = float(traj.times[j]);
            for (x, &w) in nodes.iter().zip(traj.profiles[j].values()) {
                rows.push(format!("{t},{},{}", float(*x), float(w)));
            }
        }
        rows
    };
    out.csv("trajectory.csv", "t,x,w", profile_rows(&recorded))
        .code(EXIT_IO)?;
    out.csv(
        "control.csv",
        "t,u_w",
        recorded
            .iter()
            .map(|&j| format!("{},{}", float(traj.times[j]), float(traj.control[j]))),
    )
    .code(EXIT_IO)?;
    out.csv(
        "energy.csv",
        "t,energy,norm_rho",
        recorded.iter().map(|&j| {
            format!(
                "{},{},{}",
                float(traj.times[j]),
                float(traj.energy[j]),
                float(traj.norm_rho[j])
            )
        }),
    )
    .code(EXIT_IO)?;
    out.csv("profiles.csv", "t,x,w", profile_rows(&snapshot_steps))
        .code(EXIT_IO)?;
    out.phase("write");

    println!(
        "simulated {} steps to t = {}; final max|w| = {:.3e}; negativity events: {}",
        traj.len() - 1,
        traj.times.last().copied().unwrap_or(0.0),
        traj.final_profile().max_abs(),
        traj.negativity_events
    );
    out.details = json!({
        "steps": traj.len() - 1,
        "negativity_events": traj.negativity_events,
    });
    out.finish().code(EXIT_IO)
}

pub const DEFAULT_N_LIST: [f64; 4] = [0.5, 1.0, 2.0, 10.0];
pub const DEFAULT_ALPHA_LIST: [f64; 3] = [0.0, 0.25, 0.5];

fn optional_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

pub fn sweep_cmd(
    inputs: &Inputs,
    n_list: &[f64],
    alpha_list: &[f64],
    threads: Option<usize>,
) -> Outcome {
    if n_list.is_empty() || alpha_list.is_empty() {
        return Err(Failure::new(
            EXIT_CONFIG,
            anyhow!("n and alpha lists must be non-empty"),
        ));
    }
    let cfg = load(inputs, Purpose::Sweep, alpha_list)?;
    for &n in n_list {
        cfg.params(cfg.horizon)
            .and_then(|p| Ok(p.with_n(n)?))
            .code(EXIT_CONFIG)?;
    }
    let key = ManifestKey {
        toolkit_version: env!("CARGO_PKG_VERSION"),
        command: "sweep",
        config: &cfg,
        seed: None,
        n_list: Some(n_list),
        alpha_list: Some(alpha_list),
    };
    let mut out = RunOutput::create(inputs.out, inputs.config_path, key).code(EXIT_IO)?;
    let base = simulation_config(&cfg, cfg.horizon, cfg.record_every).code(EXIT_CONFIG)?;
    base.num_steps().code(EXIT_CONFIG)?;
    let options = SweepOptions {
        u_bar: cfg.u_bar,
        window_fraction: cfg.window_fraction,
        floor: cfg.floor,
        threads,
    };
    let result = sweep(&base, n_list, alpha_list, &options).code(EXIT_CONFIG)?;
    out.phase("sweep");

    let mut rows = Vec::with_capacity(result.cells.len());
    let mut cell_details = Vec::with_capacity(result.cells.len());
    for cell in &result.cells {
        let lambda_t = dftr_core::lambda_theoretical(&base.params);
        let row = match &cell.estimate {
            Ok(e) => format!(
                "{},{},{},{},{},{}",
                float(cell.n),
                float(cell.alpha),
                optional_float(e.lambda_n),
                float(e.lambda_t),
                float(e.fit_r2),
                e.floor_hit
            ),
            Err(_) => format!(
                "{},{},,{},,",
                float(cell.n),
                float(cell.alpha),
                float(lambda_t)
            ),
        };
        rows.push(row);
        let p = &cell.provenance;
        cell_details.push(json!({
            "n": cell.n,
            "alpha": cell.alpha,
            "config_hash": p.config_hash,
            "steady_iterations": p.steady_iterations,
            "steady_residual": p.steady_residual,
            "dt": p.dt,
            "num_nodes": p.num_nodes,
            "negativity_events": p.negativity_events,
            "max_energy_growth": p.max_energy_growth,
            "max_envelope_ratio": p.max_envelope_ratio,
            "fit_window": cell.estimate.as_ref().ok().map(|e| [e.fit_window.0, e.fit_window.1]),
            "records_used": cell.estimate.as_ref().ok().map(|e| e.records_used),
            "error": cell.estimate.as_ref().err().map(|e| e.to_string()),
        }));
    }
    out.csv(
        "sweep.csv",
        "n,alpha,lambda_n,lambda_t,fit_r2,floor_hit",
        rows,
    )
    .code(EXIT_IO)?;
    out.details = json!({ "cells": cell_details });
    out.phase("write");

    print_table(&result, n_list, alpha_list);
    let failed = result.cells.iter().filter(|c| c.estimate.is_err()).count();
    out.finish().code(EXIT_IO)?;
    if failed == result.cells.len() {
        let first = result.cells[0]
            .estimate
            .as_ref()
            .err()
            .map(|e| e.to_string())
            .unwrap_or_default();
        return Err(Failure::new(
            EXIT_SWEEP,
            anyhow!("every sweep cell failed; first error: {first}"),
        ));
    }
    if failed > 0 {
        eprintln!(
            "warning: {failed} of {} cells failed (see manifest.json)",
            result.cells.len()
        );
    }
    Ok(())
}

fn print_table(result: &dftr_core::SweepResult<f64>, n_list: &[f64], alpha_list: &[f64]) {
    let mut header = format!("{:>8}", "n \\ a");
    for a in alpha_list {
        header.push_str(&format!("{a:>12.4}"));
    }
    println!("estimated decay rate lambda_N");
    println!("{header}");
    for (i, n) in n_list.iter().enumerate() {
        let mut line = format!("{n:>8.3}");
        for j in 0..alpha_list.len() {
            match result
                .cell(i, j)
                .estimate
                .as_ref()
                .ok()
                .and_then(|e| e.lambda_n)
            {
                Some(v) => line.push_str(&format!("{v:>12.5}")),
                None => line.push_str(&format!("{:>12}", "-")),
            }
        }
        println!("{line}");
    }
    if let Some(e) = result.cells.iter().find_map(|c| c.estimate.as_ref().ok()) {
        println!("lambda_T = {:.5}", e.lambda_t);
    }
}

/// Grid size of the mild-solution comparison.
pub const ORACLE_NODES: usize = 51;
pub const ORACLE_HORIZON: f64 = 50.0;
/// Quadrature intervals over the whole oracle horizon.
pub const ORACLE_QUADRATURE_STEPS: usize = 512;
/// Below this many nodes the refinement study is not meaningful.
pub const MIN_RESOLVENT_NODES: usize = 51;

struct Check {
    name: String,
    metric: &'static str,
    value: f64,
    threshold: f64,
    status: Status,
}

#[derive(Clone, Copy, PartialEq)]
enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Check {
    fn at_most(name: impl Into<String>, metric: &'static str, value: f64, threshold: f64) -> Self {
        let status = if value <= threshold {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            name: name.into(),
            metric,
            value,
            threshold,
            status,
        }
    }

    fn row(&self) -> String {
        let status = match self.status {
            Status::Pass => "true",
            Status::Fail => "false",
            Status::Skipped => "insufficient-resolution",
        };
        format!(
            "{},{},{},{},{status}",
            self.name,
            self.metric,
            float(self.value),
            float(self.threshold)
        )
    }
}

/// Runs the mild-solution oracle, halving the Picard interval until it
/// contracts.
fn mild_solution(
    gen: &dftr_core::DiscreteGenerator<f64>,
    w0: &Profile<f64>,
    steady: &SteadyStateSolution<f64>,
) -> dftr_core::Result<Profile<f64>> {
    let mut segments = 1;
    loop {
        let steps = ORACLE_QUADRATURE_STEPS / segments;
        let span = ORACLE_HORIZON / segments as f64;
        let mut state = w0.clone();
        let mut result = Ok(());
        for _ in 0..segments {
            match duhamel_oracle(gen, &state, steady, span, steps) {
                Ok(next) => state = next,
                Err(e) => {
                    result = Err(e);
                    break;
                }
            }
        }
        match result {
            Ok(()) => return Ok(state),
            Err(DftrError::PicardNonConvergence { .. }) if segments < ORACLE_QUADRATURE_STEPS => {
                segments *= 2
            }
            Err(e) => return Err(e),
        }
    }
}

fn duhamel_gap(cfg: &ResolvedConfig, k: f64) -> anyhow::Result<f64> {
    let mut small = cfg.clone();
    small.num_nodes = ORACLE_NODES;
    small.k = k;
    let sim = simulation_config(&small, ORACLE_HORIZON, 1)?;
    let steady = steady_state_numeric(&sim.params, small.u_bar, sim.grid)?;
    let w0 = initial_profile(sim.grid, &sim.params, &sim.law)?;
    let traj = simulate(&sim, &steady, &w0)?;
    let gen = build_generator(sim.grid, &sim.params, small.alpha)?;
    let mild = mild_solution(&gen, &w0, &steady)?;
    Ok(traj.final_profile().sub(&mild)?.l2_norm() / mild.l2_norm())
}

pub fn verify(inputs: &Inputs, seed: u64) -> Outcome {
    let cfg = load(inputs, Purpose::Single, &[])?;
    let key = ManifestKey {
        toolkit_version: env!("CARGO_PKG_VERSION"),
        command: "verify",
        config: &cfg,
        seed: Some(seed),
        n_list: None,
        alpha_list: None,
    };
    let mut out = RunOutput::create(inputs.out, inputs.config_path, key).code(EXIT_IO)?;
    let params = cfg.params(cfg.t_final).code(EXIT_CONFIG)?;
    let grid = cfg.grid().code(EXIT_CONFIG)?;
    let mut checks = Vec::new();

    let gen = build_generator(grid, &params, cfg.alpha).code(EXIT_CONFIG)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_form, mut worst_boundary) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for _ in 0..100 {
        let xi = gen.random_domain_vector(&mut rng);
        let rep = dissipativity_form(&gen, &xi).code(EXIT_VERIFY)?;
        worst_form = worst_form.max(rep.quadratic_form / rep.norm_sq);
        worst_boundary = worst_boundary.max(rep.boundary_term);
    }
    checks.push(Check::at_most(
        "dissipativity",
        "max_form_over_norm_sq",
        worst_form,
        1e-8,
    ));
    checks.push(Check::at_most(
        "dissipativity_boundary_term",
        "max_inlet_term",
        worst_boundary,
        0.0,
    ));
    out.phase("dissipativity");

    let sizes = [cfg.num_nodes, 2 * cfg.num_nodes - 1, 4 * cfg.num_nodes - 3];
    for lambda in [0.1, 1.0, 10.0] {
        let errors = sizes
            .iter()
            .map(|&nodes| -> anyhow::Result<f64> {
                let g = SpatialGrid::new(cfg.l, nodes)?;
                let eta = Profile::constant(g, 1.0);
                let exact = resolvent_analytic(&eta, lambda, &params, cfg.alpha)?.xi;
                let gen = build_generator(g, &params, cfg.alpha)?;
                let approx = resolvent_discrete(&gen, &eta, lambda)?;
                Ok(approx.sub(&exact)?.l2_norm() / exact.l2_norm())
            })
            .collect::<anyhow::Result<Vec<f64>>>()
            .code(EXIT_VERIFY)?;
        let deviation = errors
            .windows(2)
            .map(|e| ((e[0] / e[1]).log2() - 2.0).abs())
            .fold(0.0, f64::max);
        let name = format!("resolvent_lambda_{lambda}");
        let mut finest = Check::at_most(name.clone(), "rel_l2_finest", errors[2], 1e-3);
        let mut order = Check::at_most(name, "order_deviation", deviation, 0.3);
        if cfg.num_nodes < MIN_RESOLVENT_NODES {
            finest.status = Status::Skipped;
            order.status = Status::Skipped;
        }
        checks.push(finest);
        checks.push(order);
    }
    out.phase("resolvent");

    let nonlinear = duhamel_gap(&cfg, cfg.k).code(EXIT_VERIFY)?;
    checks.push(Check::at_most(
        "duhamel_nonlinear",
        "rel_l2",
        nonlinear,
        1e-2,
    ));
    let linear = duhamel_gap(&cfg, 0.0).code(EXIT_VERIFY)?;
    checks.push(Check::at_most("duhamel_linear", "rel_l2", linear, 1e-4));
    out.phase("duhamel");

    let steady = solve_steady(&cfg, cfg.t_final)?;
    let sim = simulation_config(&cfg, cfg.t_final, 1).code(EXIT_CONFIG)?;
    let still = simulate(&sim, &steady, &Profile::zeros(grid))
        .map_err(|e| Failure::new(simulation_code(&e), e))?;
    let drift = still
        .profiles
        .iter()
        .map(|p| p.max_abs())
        .fold(0.0, f64::max);
    checks.push(Check::at_most("equilibrium", "max_abs_w", drift, 1e-9));

    let (traj, _) = run_trajectory(&cfg)?;
    let (growth, envelope) = dftr_core::decay_diagnostics(&traj);
    checks.push(Check::at_most(
        "envelope",
        "max_norm_over_bound",
        envelope,
        1.01,
    ));
    checks.push(Check::at_most(
        "energy_monotonicity",
        "max_relative_growth",
        growth,
        1e-10,
    ));
    out.phase("time_integration");

    out.csv(
        "verify.csv",
        "check,metric,value,threshold,pass",
        checks.iter().map(Check::row),
    )
    .code(EXIT_IO)?;
    for c in &checks {
        println!("{}", c.row());
    }
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| c.status == Status::Fail)
        .map(|c| format!("{}.{}", c.name, c.metric))
        .collect();
    out.details = json!({ "failed": failed });
    out.finish().code(EXIT_IO)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_VERIFY,
            anyhow!("failed checks: {}", failed.join(", ")),
        ))
    }
}
