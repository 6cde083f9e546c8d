use serde_json::{json, Value};
use wpsched::sim::{run_replications, run_with, SimOptions, SimReport};
use wpsched::system::watts_to_dbm;
use wpsched::{
    solve_coupled_with, AnalysisReport, BatteryMode, ChainModel, CoupledSolution, PolicyKind, SolverOptions,
    SystemConfig, ToleranceConfig,
};

use crate::args::{
    AnalyzeArgs, GridArgs, ModeArg, RunArgs, SimArgs, SimulateArgs, SolverArgs, SolverKind, Source, SweepPhArgs,
    SweepVar, TraceArgs, ValidateArgs,
};
use crate::config::BaseConfig;
use crate::error::CliError;
use crate::output::{header, num, par_map, point_fields, OutDir, POINT_COLUMNS, SWEEP_PH_HEADER, VALIDATION_HEADER};

const ANALYZABLE: [PolicyKind; 2] = [PolicyKind::ThroughputOriented, PolicyKind::FairnessOriented];

/// Default HAP power grid of `sweep-ph`: 1e-3 .. 1e2 W in half decades.
pub fn default_ph_grid() -> Vec<f64> {
    (0..=10).map(|i| 10f64.powf(-3.0 + 0.5 * i as f64)).collect()
}

fn workers(run: &RunArgs) -> usize {
    run.workers.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)).max(1)
}

fn check_grid(grid: &[f64]) -> Result<(), CliError> {
    if grid.is_empty() {
        return Err(CliError::Config("grid must not be empty".into()));
    }
    if grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config(format!("grid must be finite and strictly increasing, got {grid:?}")));
    }
    Ok(())
}

fn sweep_name(v: SweepVar) -> &'static str {
    match v {
        SweepVar::Rate => "rate",
        SweepVar::HapPower => "hap-power",
        SweepVar::NumIods => "num-iods",
    }
}

fn grid_points(base: &BaseConfig, grid: &GridArgs) -> Result<Vec<SystemConfig>, CliError> {
    match (grid.sweep, &grid.grid) {
        (Some(var), Some(values)) => {
            check_grid(values)?;
            values.iter().map(|&v| base.build(Some((var, v)))).collect()
        }
        (None, None) => Ok(vec![base.build(None)?]),
        _ => Err(CliError::Config("--sweep and --grid go together".into())),
    }
}

fn grid_json(grid: &GridArgs) -> Value {
    json!({ "sweep": grid.sweep.map(sweep_name), "grid": grid.grid })
}

fn policies(names: &[String], default: &[PolicyKind], analyzable_only: bool) -> Result<Vec<PolicyKind>, CliError> {
    if names.is_empty() {
        return Ok(default.to_vec());
    }
    let mut out: Vec<PolicyKind> = Vec::new();
    for n in names {
        let p: PolicyKind = n.parse()?;
        if analyzable_only && !p.is_analyzable() {
            return Err(CliError::Config(format!("policy {p} has no analytical model")));
        }
        if !out.contains(&p) {
            out.push(p);
        }
    }
    Ok(out)
}

fn names(ps: &[PolicyKind]) -> Vec<String> {
    ps.iter().map(|p| p.to_string()).collect()
}

fn solver_options(a: &SolverArgs) -> SolverOptions {
    SolverOptions {
        tol: ToleranceConfig {
            solver_residual_tol: a.tol,
            max_iterations: a.max_iterations,
            ..ToleranceConfig::default()
        },
        accelerated: a.solver.unwrap_or(SolverKind::Accelerated) == SolverKind::Accelerated,
        record_trace: a.convergence_trace,
        relaxation: a.relaxation,
    }
}

fn sim_options(a: &SimArgs) -> SimOptions {
    let mode = match a.mode {
        ModeArg::Continuous => BatteryMode::Continuous,
        ModeArg::Discretized => BatteryMode::Discretized,
    };
    SimOptions { mode, rr_skip_empty: a.rr_skip_empty, ..SimOptions::default() }
}

fn sim_json(a: &SimArgs) -> Value {
    json!({
        "blocks": a.blocks,
        "replications": a.replications,
        "seed": a.seed,
        "mode": sim_options(a).mode.to_string(),
        "rr_skip_empty": a.rr_skip_empty,
    })
}

/// Solves one point; the report is `None` when the iteration did not
/// converge, since metrics of an unconverged solution are refused.
fn analyze_one(
    cfg: &SystemConfig,
    policy: PolicyKind,
    opts: &SolverOptions,
) -> Result<(Option<AnalysisReport>, CoupledSolution), CliError> {
    let model = ChainModel::new(cfg, policy)?;
    let sol = solve_coupled_with(&model, opts, None)?;
    if !sol.converged {
        log::warn!(
            "{policy} did not converge: residual {:e} after {} iterations",
            sol.final_residual,
            sol.iterations_used
        );
        return Ok((None, sol));
    }
    Ok((Some(AnalysisReport::from_solution(cfg, &model, &sol)?), sol))
}

/// Analysis row with empty metric fields.
fn unconverged_fields(policy: PolicyKind, sol: &CoupledSolution) -> Vec<String> {
    let mut f = vec![policy.to_string()];
    f.resize(6, String::new());
    f.extend(["false".to_string(), sol.iterations_used.to_string(), format!("{:e}", sol.final_residual)]);
    f
}

fn simulate_one(cfg: &SystemConfig, policy: PolicyKind, a: &SimArgs, workers: usize) -> Result<SimReport, CliError> {
    Ok(run_replications(cfg, policy, a.blocks, a.replications, sim_options(a), a.seed, workers)?)
}

/// Every (point, policy) pair in grid order.
fn jobs(points: usize, policies: usize) -> Vec<(usize, usize)> {
    (0..points).flat_map(|p| (0..policies).map(move |k| (p, k))).collect()
}

fn max_iods(points: &[SystemConfig]) -> usize {
    points.iter().map(SystemConfig::num_iods).max().unwrap_or(0)
}

fn analysis_rows(
    points: &[SystemConfig],
    policies: &[PolicyKind],
    opts: &SolverOptions,
    workers: usize,
    out: &mut OutDir,
) -> Result<(Vec<Option<AnalysisReport>>, usize), CliError> {
    let jobs = jobs(points.len(), policies.len());
    let results = par_map(&jobs, workers, |&(p, k)| analyze_one(&points[p], policies[k], opts));
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut unconverged = 0;
    for (&(p, k), res) in jobs.iter().zip(results) {
        let (rep, sol) = res?;
        if opts.record_trace {
            out.write_text(&format!("convergence_{p}_{}.csv", policies[k]), &sol.trace_csv())?;
        }
        let mut row = point_fields(p, &points[p]);
        match &rep {
            Some(r) => row.extend(r.csv_fields()),
            None => {
                unconverged += 1;
                row.extend(unconverged_fields(policies[k], &sol));
            }
        }
        rows.push(row);
        reports.push(rep);
    }
    out.write_csv("analysis.csv", &header(&POINT_COLUMNS, AnalysisReport::csv_header(max_iods(points))), &rows)?;
    Ok((reports, unconverged))
}

fn simulation_rows(
    points: &[SystemConfig],
    policies: &[PolicyKind],
    a: &SimArgs,
    workers: usize,
    out: &mut OutDir,
    occupancy: bool,
) -> Result<Vec<SimReport>, CliError> {
    let jobs = jobs(points.len(), policies.len());
    let inner = (workers / jobs.len().max(1)).max(1);
    let results = par_map(&jobs, workers, |&(p, k)| simulate_one(&points[p], policies[k], a, inner));
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (&(p, k), res) in jobs.iter().zip(results) {
        let rep = res?;
        if occupancy {
            out.write_text(&format!("occupancy_{p}_{}.csv", policies[k]), &rep.occupancy_csv(points[p].max_wait))?;
        }
        let mut row = point_fields(p, &points[p]);
        row.push(a.seed.to_string());
        row.extend(rep.csv_fields());
        rows.push(row);
        reports.push(rep);
    }
    let mut fixed = POINT_COLUMNS.to_vec();
    fixed.push("seed");
    out.write_csv("simulation.csv", &header(&fixed, SimReport::csv_header(max_iods(points))), &rows)?;
    Ok(reports)
}

pub fn analyze(a: &AnalyzeArgs) -> Result<(), CliError> {
    let base = BaseConfig::load(&a.config)?;
    let points = grid_points(&base, &a.grid)?;
    let policies = policies(&a.run.policy, &ANALYZABLE, true)?;
    let opts = solver_options(&a.solver);
    let mut out = OutDir::create(&a.run.out)?;
    let (_, unconverged) = analysis_rows(&points, &policies, &opts, workers(&a.run), &mut out)?;
    let details = json!({ "grid": grid_json(&a.grid), "policies": names(&policies), "solver": opts });
    out.write_manifest("analyze", details, &base.build(None)?)?;
    if unconverged > 0 {
        return Err(CliError::NotConverged(unconverged));
    }
    Ok(())
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let base = BaseConfig::load(&a.config)?;
    let points = grid_points(&base, &a.grid)?;
    let policies = policies(&a.run.policy, &PolicyKind::ALL, false)?;
    let mut out = OutDir::create(&a.run.out)?;
    simulation_rows(&points, &policies, &a.sim, workers(&a.run), &mut out, a.occupancy)?;
    let details = json!({ "grid": grid_json(&a.grid), "policies": names(&policies), "simulation": sim_json(&a.sim) });
    out.write_manifest("simulate", details, &base.build(None)?)?;
    Ok(())
}

/// `(z, pass)` of one analysis/simulation comparison.
fn compare(analysis: f64, simulation: f64, sigma: f64, sigmas: f64) -> (f64, bool) {
    let gap = (analysis - simulation).abs();
    let z = if sigma > 0.0 {
        gap / sigma
    } else if gap == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    (z, z <= sigmas)
}

pub fn validate(a: &ValidateArgs) -> Result<(), CliError> {
    let base = BaseConfig::load(&a.config)?;
    let sim_base = base.with_overrides(&a.sim_overrides)?;
    let points = grid_points(&base, &a.grid)?;
    let sim_points = grid_points(&sim_base, &a.grid)?;
    let policies = policies(&a.run.policy, &ANALYZABLE, true)?;
    let opts = solver_options(&a.solver);
    let w = workers(&a.run);
    let mut out = OutDir::create(&a.run.out)?;
    let (analysis, unconverged) = analysis_rows(&points, &policies, &opts, w, &mut out)?;
    let sims = simulation_rows(&sim_points, &policies, &a.sim, w, &mut out, false)?;

    let mut rows = Vec::new();
    let mut failed = 0;
    println!(
        "{:>5} {:>10} {:>10} {:>10} {:>14} {:>14} {:>10} {:>8}  verdict",
        "point", "policy", "metric", "R", "analysis", "simulation", "sigma", "z"
    );
    for ((&(p, k), an), sim) in jobs(points.len(), policies.len()).iter().zip(&analysis).zip(&sims) {
        let cfg = &points[p];
        let outage_sigma = sim.outage_se().max(sim.outage_se_batch());
        let thr_sigma = sim.throughput_se().max(sim.throughput_se_batch());
        let (outage, thr) = an.as_ref().map_or((f64::NAN, f64::NAN), |r| (r.outage_total, r.throughput));
        for (metric, x, y, sigma) in
            [("outage", outage, sim.outage_rate(), outage_sigma), ("throughput", thr, sim.throughput(), thr_sigma)]
        {
            let (z, pass) = compare(x, y, sigma, a.sigmas);
            let verdict = match (an, pass) {
                (None, _) => "UNCONVERGED",
                (Some(_), true) => "PASS",
                (Some(_), false) => "FAIL",
            };
            if verdict != "PASS" {
                failed += 1;
            }
            println!(
                "{p:>5} {:>10} {metric:>10} {:>10.4} {x:>14.6e} {y:>14.6e} {sigma:>10.3e} {z:>8.2}  {verdict}",
                policies[k], cfg.rate_req
            );
            let mut row = point_fields(p, cfg);
            row.extend([
                policies[k].to_string(),
                metric.to_string(),
                num(x),
                num(y),
                num(sigma),
                num(z),
                verdict.to_string(),
            ]);
            rows.push(row);
        }
    }
    out.write_csv("validation.csv", &header(&VALIDATION_HEADER, Vec::new()), &rows)?;
    let details = json!({
        "grid": grid_json(&a.grid),
        "policies": names(&policies),
        "solver": opts,
        "simulation": sim_json(&a.sim),
        "simulation_overrides": a.sim_overrides,
        "sigmas": a.sigmas,
        "failed": failed,
    });
    out.write_manifest("validate", details, &base.build(None)?)?;
    if unconverged > 0 {
        Err(CliError::NotConverged(unconverged))
    } else if failed > 0 {
        Err(CliError::ValidationFailed(failed))
    } else {
        Ok(())
    }
}

pub fn sweep_ph(a: &SweepPhArgs) -> Result<(), CliError> {
    let base = BaseConfig::load(&a.config)?;
    let grid = a.grid.clone().unwrap_or_else(default_ph_grid);
    check_grid(&grid)?;
    if grid[0] <= 0.0 {
        return Err(CliError::Config("HAP powers must be positive".into()));
    }
    let points: Vec<SystemConfig> =
        grid.iter().map(|&v| base.build(Some((SweepVar::HapPower, v)))).collect::<Result<_, _>>()?;
    let policies = policies(&a.run.policy, &PolicyKind::ALL, false)?;
    let opts = solver_options(&a.solver);
    let w = workers(&a.run);

    let mut jobs = Vec::new();
    for p in 0..points.len() {
        for &policy in &policies {
            if policy.is_analyzable() && a.source != Source::Simulation {
                jobs.push((p, policy, true));
            }
            if a.source != Source::Analysis {
                jobs.push((p, policy, false));
            }
        }
    }
    let inner = (w / jobs.len().max(1)).max(1);
    let results = par_map(&jobs, w, |&(p, policy, analytic)| -> Result<Vec<String>, CliError> {
        let cfg = &points[p];
        let mut row = vec![num(cfg.hap_power), num(watts_to_dbm(cfg.hap_power)), policy.to_string()];
        if analytic {
            row.push("analysis".into());
            match analyze_one(cfg, policy, &opts)?.0 {
                Some(rep) => row.extend([
                    num(rep.fairness),
                    num(rep.fairness_raw),
                    num(rep.outage_total),
                    num(rep.throughput),
                    "true".into(),
                ]),
                None => row.extend(["", "", "", "", "false"].map(String::from)),
            }
        } else {
            let rep = simulate_one(cfg, policy, &a.sim, inner)?;
            row.extend([
                "simulation".into(),
                num(rep.fairness()),
                num(rep.fairness_raw()),
                num(rep.outage_rate()),
                num(rep.throughput()),
                String::new(),
            ]);
        }
        Ok(row)
    });
    let rows: Vec<Vec<String>> = results.into_iter().collect::<Result<_, _>>()?;
    let unconverged = rows.iter().filter(|r| r[8] == "false").count();
    let mut out = OutDir::create(&a.run.out)?;
    out.write_csv("fairness_vs_ph.csv", &header(&SWEEP_PH_HEADER, Vec::new()), &rows)?;
    let details = json!({
        "grid": grid,
        "policies": names(&policies),
        "source": format!("{:?}", a.source).to_lowercase(),
        "solver": opts,
        "simulation": sim_json(&a.sim),
    });
    out.write_manifest("sweep-ph", details, &base.build(None)?)?;
    if unconverged > 0 {
        return Err(CliError::NotConverged(unconverged));
    }
    Ok(())
}

pub fn trace(a: &TraceArgs) -> Result<(), CliError> {
    let base = BaseConfig::load(&a.config)?;
    let cfg = base.build(None)?;
    let policies = policies(&a.run.policy, &[PolicyKind::ThroughputOriented], false)?;
    let [policy] = policies[..] else {
        return Err(CliError::Config("trace takes exactly one policy".into()));
    };
    let blocks = usize::try_from(a.sim.blocks).map_err(|_| CliError::Config("too many blocks".into()))?;
    let opts = SimOptions { trace_blocks: blocks, ..sim_options(&a.sim) };
    let rep = run_with(&cfg, policy, a.sim.blocks, opts, a.sim.seed)?;
    let mut out = OutDir::create(&a.run.out)?;
    let rows: Vec<Vec<String>> = rep.trace.iter().map(|r| r.csv_fields()).collect();
    out.write_csv("trace.csv", &wpsched::sim::TraceRow::csv_header(cfg.num_iods()), &rows)?;
    let details = json!({ "policy": policy.to_string(), "simulation": sim_json(&a.sim) });
    out.write_manifest("trace", details, &cfg)?;
    Ok(())
}
