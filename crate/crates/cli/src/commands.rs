//! The subcommands. Files whose contents depend only on the inputs are
//! kept apart from files holding wall-clock measurements, so reruns with
//! the same manifest reproduce the former byte for byte.

use std::fmt::Write as _;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use crewseed_core::baseline::{run_enhanced_dfs, EdfsConfig};
use crewseed_core::ipdch::{
    annotate_lp_costs, run_ipdch, snapshot_ifs, IfsResult, IpdchConfig, IpdchError, Termination,
};
use crewseed_core::metrics::{evaluate_ifs, IfsReport};
use crewseed_core::schedule::{
    generate_network, load_schedule, meta_path, save_schedule_with_manifest, FlightSchedule,
    NetworkParams,
};

use crate::config::RunConfig;
use crate::manifest::RunManifest;
use crate::pairing_file::write_pairings;
use crate::{
    write_file, CliError, CompareArgs, GenerateArgs, IfsArgs, InputArgs, Method, SweepArgs,
    TerminateSpec, TradeoffArgs,
};

/// Result of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Feasible,
    /// The run ended with flights left uncovered.
    Infeasible,
}

impl Outcome {
    fn from_feasible(feasible: bool) -> Outcome {
        if feasible {
            Outcome::Feasible
        } else {
            Outcome::Infeasible
        }
    }
}

/// Region labels and their positions between the feasibility point and
/// the end of a trade-off run.
pub const REGIONS: [(&str, f64); 4] = [("A", 0.0), ("B", 1.0 / 3.0), ("C", 2.0 / 3.0), ("D", 1.0)];

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

fn load_inputs(
    command: &str,
    input: &InputArgs,
) -> Result<(FlightSchedule, RunConfig, RunManifest), CliError> {
    let schedule = load_schedule(&input.schedule)?;
    let cfg = RunConfig::load(input.rules.as_deref())?;
    let mut manifest = RunManifest::new(command)
        .input("schedule", &input.schedule)?
        .input("schedule_meta", &meta_path(&input.schedule))?;
    if let Some(rules) = &input.rules {
        manifest = manifest.input("rules", rules)?;
    }
    Ok((schedule, cfg, manifest))
}

fn resolve_k(k: Option<usize>, n_flights: usize) -> Result<usize, CliError> {
    match k {
        Some(0) => Err(CliError::Usage("K must be at least 1".into())),
        Some(k) => Ok(k),
        None => {
            let k = IpdchConfig::default_k(n_flights);
            log::info!(
                "using K={k}; for small networks K near {} is a reasonable start",
                (n_flights / 5).max(1)
            );
            Ok(k)
        }
    }
}

fn seconds(v: Option<f64>, what: &str) -> Result<Option<Duration>, CliError> {
    match v {
        None => Ok(None),
        Some(s) if s.is_finite() && s >= 0.0 => Ok(Some(Duration::from_secs_f64(s))),
        Some(s) => Err(CliError::Usage(format!("{what} must be a non-negative number, got {s}"))),
    }
}

fn ipdch_config(
    cfg: &RunConfig,
    k: usize,
    seed: u64,
    termination: Termination,
    ip_time_limit: Option<Duration>,
) -> IpdchConfig {
    let mut c = IpdchConfig::new(k, seed)
        .with_termination(termination)
        .with_ip_time_limit(ip_time_limit);
    c.caps = cfg.caps.into();
    c
}

/// Runs IPDCH, turning an abort on uncoverable flights into its partial
/// result.
fn ipdch_partial_ok(
    schedule: &FlightSchedule,
    cfg: &RunConfig,
    icfg: &IpdchConfig,
) -> Result<IfsResult, CliError> {
    match run_ipdch(schedule, &cfg.rules, &cfg.cost, icfg) {
        Ok(r) => Ok(r),
        Err(IpdchError::Uncoverable { flights, partial }) => {
            log::warn!("stopped with {} flight(s) no pairing could cover", flights.len());
            Ok(*partial)
        }
        Err(e) => Err(e.into()),
    }
}

fn run_edfs(
    schedule: &FlightSchedule,
    cfg: &RunConfig,
    seed: u64,
    limit: Option<Duration>,
) -> Result<IfsResult, CliError> {
    let mut ecfg = EdfsConfig::new(seed);
    if let Some(limit) = limit {
        ecfg = ecfg.with_time_limit(limit);
    }
    Ok(run_enhanced_dfs(schedule, &cfg.rules, &cfg.cost, &ecfg)?)
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<Outcome, CliError> {
    let params = NetworkParams::new(args.flights, args.airports, args.hubs, args.bases)
        .with_horizon_days(args.days)
        .with_seed(args.seed);
    let schedule = generate_network(&params)?;
    let manifest = RunManifest::new("generate")
        .param("flights", args.flights)
        .param("airports", args.airports)
        .param("hubs", args.hubs)
        .param("bases", args.bases)
        .param("days", args.days)
        .param("seed", args.seed);
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    save_schedule_with_manifest(&schedule, &args.out, &manifest.entries())?;
    log::info!("wrote {} flights to {}", schedule.len(), args.out.display());
    Ok(Outcome::Feasible)
}

/// Per-iteration counters, without timing.
fn trace_csv(result: &IfsResult, header: &str) -> String {
    let mut out = header.to_string();
    out.push_str(
        "iteration,drawn,covered_in_subset,generated,selected,added,remaining,uncovered,ifs_len,refreshed,ip_objective\n",
    );
    for r in &result.trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.iteration,
            r.drawn,
            r.covered_in_subset,
            r.generated,
            r.selected,
            r.added,
            r.remaining,
            r.uncovered,
            r.ifs_len,
            r.refreshed,
            r.ip_objective.map_or(String::new(), |v| format!("{v:.2}"))
        );
    }
    out
}

fn timing_text(result: &IfsResult, header: &str, started: f64) -> String {
    let mut out = header.to_string();
    let _ = writeln!(out, "# started_unix: {started:.3}");
    let _ = writeln!(out, "# finished_unix: {:.3}", unix_now());
    let _ = writeln!(out, "# runtime_secs: {:.6}", result.runtime.as_secs_f64());
    if let Some(r) = result.feasibility_record() {
        let _ = writeln!(out, "# feasibility_secs: {:.6}", r.elapsed);
    }
    out.push_str("iteration,elapsed_secs\n");
    for r in &result.trace {
        let _ = writeln!(out, "{},{:.6}", r.iteration, r.elapsed);
    }
    out
}

fn report_text(result: &IfsResult, report: &IfsReport, method: &str, header: &str) -> String {
    let mut out = header.to_string();
    let _ = writeln!(out, "method: {method}");
    let _ = writeln!(out, "terminated_by: {}", result.terminated_by.as_str());
    let _ = writeln!(out, "iterations: {}", result.trace.len());
    out.push_str(&report.to_text(false));
    out
}

pub fn cmd_ifs(args: &IfsArgs) -> Result<Outcome, CliError> {
    let (schedule, cfg, manifest) = load_inputs("ifs", &args.input)?;
    let ip_limit = seconds(args.ip_time_limit, "--ip-time-limit")?;
    let mut manifest = manifest
        .param("method", args.method.as_str())
        .param("seed", args.seed)
        .param("terminate", args.terminate);
    let started = unix_now();
    let result = match args.method {
        Method::Ipdch => {
            let k = resolve_k(args.k, schedule.len())?;
            manifest = manifest.param("k", k);
            if let Some(l) = args.ip_time_limit {
                manifest = manifest.param("ip_time_limit", l);
            }
            let icfg = ipdch_config(&cfg, k, args.seed, args.terminate.to_termination(), ip_limit);
            ipdch_partial_ok(&schedule, &cfg, &icfg)?
        }
        Method::Edfs => {
            let limit = match args.terminate {
                TerminateSpec::Feasibility => None,
                TerminateSpec::Secs(s) => Some(Duration::from_secs_f64(s)),
                TerminateSpec::Iters(_) => {
                    return Err(CliError::Usage(
                        "the edfs method takes `feasibility` or `secs:N`".into(),
                    ))
                }
            };
            run_edfs(&schedule, &cfg, args.seed, limit)?
        }
    };
    let report = evaluate_ifs(&result.ifs, &schedule, &cfg.rules, &cfg.cost)?
        .with_runtime(result.runtime);
    let header = manifest.header();
    let dir = &args.out;
    write_file(&dir.join("ifs.txt"), &write_pairings(&result.ifs, &header))?;
    write_file(
        &dir.join("report.txt"),
        &report_text(&result, &report, args.method.as_str(), &header),
    )?;
    write_file(&dir.join("trace.csv"), &trace_csv(&result, &header))?;
    write_file(&dir.join("timing.txt"), &timing_text(&result, &header, started))?;
    log::info!(
        "{}: {} pairings, {} uncovered, {:.3} s",
        args.method.as_str(),
        report.n_pairings,
        report.uncovered.len(),
        result.runtime.as_secs_f64()
    );
    Ok(Outcome::from_feasible(report.is_feasible()))
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

pub fn cmd_sweep_k(args: &SweepArgs) -> Result<Outcome, CliError> {
    if args.k.is_empty() || args.seed.is_empty() {
        return Err(CliError::Usage("--k and --seed need at least one value".into()));
    }
    if args.k.contains(&0) {
        return Err(CliError::Usage("K must be at least 1".into()));
    }
    let (schedule, cfg, manifest) = load_inputs("sweep-k", &args.input)?;
    let cap = seconds(args.cap_secs, "--cap-secs")?;
    let ip_limit = seconds(args.ip_time_limit, "--ip-time-limit")?;
    let list = |v: &[String]| v.join(",");
    let mut manifest = manifest
        .param("k", list(&args.k.iter().map(|k| k.to_string()).collect::<Vec<_>>()))
        .param("seed", list(&args.seed.iter().map(|s| s.to_string()).collect::<Vec<_>>()))
        .param("terminate", args.terminate);
    if let Some(c) = args.cap_secs {
        manifest = manifest.param("cap_secs", c);
    }
    let header = manifest.header();
    let started = unix_now();

    let mut rows = header.clone();
    rows.push_str("k,seed,status,terminated_by,uncovered,iterations,n_pairings\n");
    let mut timing = header.clone();
    let _ = writeln!(timing, "# started_unix: {started:.3}");
    timing.push_str("k,seed,runtime_secs,feasibility_secs\n");
    let mut summary = header.clone();
    let _ = writeln!(
        summary,
        "{:>6}  {:>4}  {:>8}  {:>14}  {:>22}",
        "K", "runs", "feasible", "mean uncovered", "runtime (s) mean ± sd"
    );

    for &k in &args.k {
        let mut runtimes = Vec::new();
        let mut uncovered = Vec::new();
        let mut feasible = 0;
        for &seed in &args.seed {
            let icfg = ipdch_config(&cfg, k, seed, args.terminate.to_termination(), ip_limit)
                .with_max_runtime(cap);
            let r = match run_ipdch(&schedule, &cfg.rules, &cfg.cost, &icfg) {
                Ok(r) => r,
                Err(IpdchError::Uncoverable { partial, .. }) => *partial,
                Err(e) => {
                    log::warn!("K={k} seed={seed}: {e}");
                    let message = e.to_string().replace([',', '\n'], " ");
                    let _ = writeln!(rows, "{k},{seed},error: {message},,,,");
                    let _ = writeln!(timing, "{k},{seed},,");
                    continue;
                }
            };
            let status = if r.is_feasible() { "feasible" } else { "infeasible" };
            feasible += usize::from(r.is_feasible());
            let _ = writeln!(
                rows,
                "{k},{seed},{status},{},{},{},{}",
                r.terminated_by.as_str(),
                r.uncovered.len(),
                r.trace.len(),
                r.ifs.len()
            );
            let feas = r
                .feasibility_record()
                .map_or(String::new(), |f| format!("{:.6}", f.elapsed));
            let _ = writeln!(timing, "{k},{seed},{:.6},{feas}", r.runtime.as_secs_f64());
            runtimes.push(r.runtime.as_secs_f64());
            uncovered.push(r.uncovered.len() as f64);
        }
        let (rt_mean, rt_sd) = mean_sd(&runtimes);
        let (unc_mean, _) = mean_sd(&uncovered);
        let _ = writeln!(
            summary,
            "{k:>6}  {:>4}  {feasible:>8}  {unc_mean:>14.2}  {:>22}",
            args.seed.len(),
            format!("{rt_mean:.3} ± {rt_sd:.3}")
        );
    }
    write_file(&args.out.join("sweep.csv"), &rows)?;
    write_file(&args.out.join("sweep_timing.csv"), &timing)?;
    write_file(&args.out.join("summary.txt"), &summary)?;
    Ok(Outcome::Feasible)
}

/// LP-cost as a CSV field.
fn money(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v:.6}"))
}

pub fn cmd_tradeoff(args: &TradeoffArgs) -> Result<Outcome, CliError> {
    if !(args.budget_multiple.is_finite() && args.budget_multiple > 0.0) {
        return Err(CliError::Usage("--budget-multiple must be positive".into()));
    }
    let (schedule, cfg, manifest) = load_inputs("tradeoff", &args.input)?;
    let k = resolve_k(args.k, schedule.len())?;
    let ip_limit = seconds(args.ip_time_limit, "--ip-time-limit")?;
    let started = unix_now();

    // Without an explicit budget, time a run to the feasibility point first.
    let budget = match args.terminate {
        Some(spec) => spec,
        None => {
            let probe = ipdch_config(&cfg, k, args.seed, Termination::FeasibilityPoint, ip_limit);
            let first = ipdch_partial_ok(&schedule, &cfg, &probe)?;
            match first.feasibility_record() {
                Some(r) => TerminateSpec::Secs((args.budget_multiple * r.elapsed).max(1e-3)),
                None => TerminateSpec::Iters(first.trace.len().max(1)),
            }
        }
    };
    let mut manifest = manifest
        .param("k", k)
        .param("seed", args.seed)
        .param("budget_multiple", args.budget_multiple);
    if let Some(spec) = args.terminate {
        manifest = manifest.param("terminate", spec);
    }
    let icfg = ipdch_config(&cfg, k, args.seed, budget.to_termination(), ip_limit);
    let mut result = ipdch_partial_ok(&schedule, &cfg, &icfg)?;
    annotate_lp_costs(&mut result, &schedule, &cfg.cost)?;

    let feasible_at = result.feasibility_record().map(|r| r.elapsed);
    let dir = &args.out;
    let header = manifest.header();
    let mut curve = header.clone();
    let _ = writeln!(curve, "# budget: {budget}");
    let _ = writeln!(curve, "# started_unix: {started:.3}");
    let _ = writeln!(curve, "# feasible: {}", feasible_at.is_some());
    curve.push_str("iteration,elapsed_secs,uncovered,ifs_len,lp_cost\n");
    for r in &result.trace {
        let _ = writeln!(
            curve,
            "{},{:.6},{},{},{}",
            r.iteration,
            r.elapsed,
            r.uncovered,
            r.ifs_len,
            money(r.lp_cost)
        );
    }
    write_file(&dir.join("curve.csv"), &curve)?;
    write_file(&dir.join("trace.csv"), &trace_csv(&result, &header))?;

    let Some(t_feasible) = feasible_at else {
        log::warn!("feasibility not reached within {budget}; curve holds uncovered counts only");
        return Ok(Outcome::Infeasible);
    };
    let t_end = result.trace.last().map_or(t_feasible, |r| r.elapsed);
    let mut regions = header.clone();
    regions.push_str("region,q,time_secs,iteration,n_pairings,lp_cost\n");
    for (label, q) in REGIONS {
        let t = if q >= 1.0 {
            t_end
        } else {
            t_feasible + q * (t_end - t_feasible)
        };
        let snapshot = snapshot_ifs(&result, t)?;
        let record = result
            .trace
            .iter()
            .take_while(|r| r.elapsed <= t)
            .last()
            .expect("snapshot exists");
        let _ = writeln!(
            regions,
            "{label},{q:.4},{t:.6},{},{},{}",
            record.iteration,
            snapshot.len(),
            money(record.lp_cost)
        );
        let mut snap_header = header.clone();
        let _ = writeln!(snap_header, "# region: {label}");
        let _ = writeln!(snap_header, "# iteration: {}", record.iteration);
        write_file(
            &dir.join(format!("snapshot_{label}.txt")),
            &write_pairings(&snapshot, &snap_header),
        )?;
    }
    write_file(&dir.join("regions.csv"), &regions)?;
    Ok(Outcome::Feasible)
}

pub fn cmd_compare(args: &CompareArgs) -> Result<Outcome, CliError> {
    let (schedule, cfg, manifest) = load_inputs("compare", &args.input)?;
    let k = resolve_k(args.k, schedule.len())?;
    let limit = seconds(Some(args.time_limit), "--time-limit")?;
    let ip_limit = seconds(args.ip_time_limit, "--ip-time-limit")?;
    let manifest = manifest
        .param("k", k)
        .param("seed", args.seed)
        .param("time_limit", args.time_limit);
    let header = manifest.header();
    let started = unix_now();

    let icfg = ipdch_config(&cfg, k, args.seed, Termination::FeasibilityPoint, ip_limit)
        .with_max_runtime(limit);
    let ipdch = ipdch_partial_ok(&schedule, &cfg, &icfg)?;
    let edfs = run_edfs(&schedule, &cfg, args.seed, limit)?;

    let runs = [
        (format!("IPDCH (K={k})"), "ipdch", &ipdch),
        ("Enhanced-DFS".to_string(), "edfs", &edfs),
    ];
    let mut table = header.clone();
    let _ = writeln!(table, "# started_unix: {started:.3}");
    table.push_str("# Enhanced-DFS is a reconstruction of the baseline; no ranking is implied.\n");
    let _ = writeln!(
        table,
        "{:<16}  {:>10}  {:>14}  {:>16}  {:>9}",
        "Method", "# Pairings", "Runtime (sec.)", "LP-cost", "Uncovered"
    );
    let mut csv = header.clone();
    csv.push_str("method,n_pairings,runtime_secs,lp_cost,uncovered\n");
    let mut all_feasible = true;
    for (label, key, result) in runs {
        let report = evaluate_ifs(&result.ifs, &schedule, &cfg.rules, &cfg.cost)?
            .with_runtime(result.runtime);
        all_feasible &= report.is_feasible();
        write_file(
            &args.out.join(format!("ifs_{key}.txt")),
            &write_pairings(&result.ifs, &header),
        )?;
        write_file(
            &args.out.join(format!("report_{key}.txt")),
            &report_text(result, &report, key, &header),
        )?;
        let runtime = result.runtime.as_secs_f64();
        let lp = report.lp_cost.map_or("none".to_string(), |v| format!("{v:.2}"));
        let _ = writeln!(
            table,
            "{label:<16}  {:>10}  {runtime:>14.3}  {lp:>16}  {:>9}",
            report.n_pairings,
            report.uncovered.len()
        );
        let _ = writeln!(
            csv,
            "{key},{},{runtime:.6},{},{}",
            report.n_pairings,
            money(report.lp_cost),
            report.uncovered.len()
        );
    }
    write_file(&args.out.join("comparison.txt"), &table)?;
    write_file(&args.out.join("comparison.csv"), &csv)?;
    Ok(Outcome::from_feasible(all_feasible))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_standard_deviation() {
        let (m, s) = mean_sd(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_sd(&[3.0]), (3.0, 0.0));
    }

    #[test]
    fn zero_k_is_a_usage_error() {
        assert!(matches!(resolve_k(Some(0), 10), Err(CliError::Usage(_))));
        assert_eq!(resolve_k(None, 10).unwrap(), 10);
        assert_eq!(resolve_k(None, 5000).unwrap(), 700);
    }
}
