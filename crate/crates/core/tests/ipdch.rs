mod common;

use std::time::Duration;

use common::*;
use crewseed_core::ipdch::{annotate_lp_costs, snapshot_at_iteration, IpdchError};
use crewseed_core::prelude::*;

fn network(n: usize, seed: u64) -> FlightSchedule {
    generate_network(&NetworkParams::new(n, 8, 2, 2).with_seed(seed)).unwrap()
}

fn strip_elapsed(result: &IfsResult) -> Vec<IterationRecord> {
    result
        .trace
        .iter()
        .cloned()
        .map(|mut r| {
            r.elapsed = 0.0;
            r
        })
        .collect()
}

#[test]
fn reaches_feasibility_on_fifty_flights() {
    let schedule = network(50, 42);
    let (rules, cm) = (RuleSet::default(), CostModel::default());
    let result = run_ipdch(&schedule, &rules, &cm, &IpdchConfig::new(10, 7)).unwrap();
    assert!(result.is_feasible());
    assert_eq!(result.terminated_by, TerminatedBy::FeasibilityPoint);
    assert!(coverage_check(&result.ifs, &schedule).is_empty());
    for p in &result.ifs {
        assert!(check_pairing(p, &schedule, &rules).unwrap().is_legal());
    }
    let last = result.trace.last().unwrap();
    assert_eq!(last.uncovered, 0);
    assert!(result.trace[..result.trace.len() - 1].iter().all(|r| r.uncovered > 0));
}

#[test]
fn whole_schedule_draw_is_one_iteration() {
    let schedule = network(40, 5);
    let (rules, cm) = (RuleSet::default(), CostModel::default());
    let result = run_ipdch(&schedule, &rules, &cm, &IpdchConfig::new(100, 1)).unwrap();
    assert_eq!(result.trace.len(), 1);
    assert!(result.trace[0].refreshed);
    assert_eq!(result.trace[0].drawn, 40);
    let set = pairing_gen(&schedule, &all_flights(&schedule), &rules, &cm, Caps::default());
    let inst = build_instance(&all_flights(&schedule), &set, &cm).unwrap();
    let ip = solve_ip(&inst, None).unwrap();
    assert_eq!(result.ifs.len(), ip.selected().count());
    assert_eq!(result.trace[0].ip_objective, ip.objective_value());
}

#[test]
fn runs_are_reproducible_apart_from_timing() {
    let schedule = network(60, 3);
    let (rules, cm) = (RuleSet::default(), CostModel::default());
    let cfg = IpdchConfig::new(12, 99);
    let a = run_ipdch(&schedule, &rules, &cm, &cfg).unwrap();
    let b = run_ipdch(&schedule, &rules, &cm, &cfg).unwrap();
    assert_eq!(a.ifs, b.ifs);
    assert_eq!(strip_elapsed(&a), strip_elapsed(&b));
    let c = run_ipdch(&schedule, &rules, &cm, &IpdchConfig::new(12, 100)).unwrap();
    assert_ne!(strip_elapsed(&a), strip_elapsed(&c));
}

#[test]
fn each_iteration_solves_its_sub_instance_optimally() {
    let schedule =
        generate_network(&NetworkParams::new(40, 4, 2, 2).with_horizon_days(2).with_seed(11))
            .unwrap();
    let (rules, cm) = (RuleSet::default(), CostModel::default());
    let cfg = IpdchConfig::new(6, 3).with_termination(Termination::Iterations(40));
    let result = run_ipdch(&schedule, &rules, &cm, &cfg).unwrap();
    let mut checked = 0;
    for record in &result.trace {
        let set = pairing_gen(&schedule, &record.drawn_flights, &rules, &cm, Caps::default());
        assert_eq!(set.len(), record.generated);
        if set.is_empty() || set.len() > 18 {
            continue;
        }
        let rows: Vec<FlightId> = set.covered_flights().iter().copied().collect();
        let inst = build_instance(&rows, &set, &cm).unwrap();
        let best = brute_force_ip(&inst).unwrap();
        assert_eq!(record.ip_objective, Some(best as f64 / 100.0));
        checked += 1;
    }
    assert!(checked >= 10, "only {checked} iterations checked");
}

#[test]
fn draws_follow_pool_rules() {
    let schedule = network(50, 42);
    let (rules, cm) = (RuleSet::default(), CostModel::default());
    let cfg = IpdchConfig::new(8, 5).with_termination(Termination::Iterations(30));
    let result = run_ipdch(&schedule, &rules, &cm, &cfg).unwrap();
    assert_eq!(result.trace.len(), 30);
    assert_eq!(result.terminated_by, TerminatedBy::Iterations);
    for r in &result.trace {
        assert!(r.drawn <= 8 || r.refreshed);
        assert_eq!(r.drawn, r.drawn_flights.len());
        assert!(r.drawn_flights.windows(2).all(|w| w[0] < w[1]));
        assert!(r.added <= r.selected);
        if r.refreshed {
            assert_eq!(r.remaining, 50);
        }
    }
    let lens: Vec<usize> = result.trace.iter().map(|r| r.ifs_len).collect();
    assert!(lens.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(*lens.last().unwrap(), result.ifs.len());
}

#[test]
fn snapshots_are_prefixes() {
    let schedule = network(50, 42);
    let (rules, cm) = (RuleSet::default(), CostModel::default());
    let cfg = IpdchConfig::new(10, 7).with_termination(Termination::Iterations(20));
    let result = run_ipdch(&schedule, &rules, &cm, &cfg).unwrap();
    for r in &result.trace {
        let snap = snapshot_at_iteration(&result, r.iteration).unwrap();
        assert_eq!(snap.len(), r.ifs_len);
        assert_eq!(
            schedule.len() - coverage_check(&snap, &schedule).len(),
            schedule.len() - r.uncovered
        );
        assert_eq!(snap.pairings(), &result.ifs.pairings()[..r.ifs_len]);
    }
    assert!(snapshot_at_iteration(&result, 0).is_none());
    assert!(snapshot_at_iteration(&result, 21).is_none());
    let end = result.trace.last().unwrap().elapsed;
    assert_eq!(snapshot_ifs(&result, end + 1.0).unwrap(), result.ifs);
    assert!(matches!(
        snapshot_ifs(&result, -1.0),
        Err(IpdchError::SnapshotTooEarly { .. })
    ));
}

#[test]
fn lp_cost_never_rises_after_feasibility() {
    let schedule = network(50, 42);
    let (rules, cm) = (RuleSet::default(), CostModel::default());
    let first = run_ipdch(&schedule, &rules, &cm, &IpdchConfig::new(10, 7)).unwrap();
    let n = 3 * first.trace.len();
    let cfg = IpdchConfig::new(10, 7).with_termination(Termination::Iterations(n));
    let mut result = run_ipdch(&schedule, &rules, &cm, &cfg).unwrap();
    annotate_lp_costs(&mut result, &schedule, &cm).unwrap();
    let costs: Vec<f64> = result.trace.iter().filter_map(|r| r.lp_cost).collect();
    assert_eq!(costs.len(), n - first.trace.len() + 1);
    for w in costs.windows(2) {
        assert!(w[1] <= w[0] + 1e-6 * w[0].abs().max(1.0));
    }
    let report = evaluate_ifs(&result.ifs, &schedule, &rules, &cm).unwrap();
    let last = *costs.last().unwrap();
    assert!((report.lp_cost.unwrap() - last).abs() < 1e-6 * last.max(1.0));
}

#[test]
fn wall_clock_run_stops_on_time() {
    let schedule = network(50, 42);
    let (rules, cm) = (RuleSet::default(), CostModel::default());
    let cfg = IpdchConfig::new(10, 7)
        .with_termination(Termination::WallClock(Duration::from_millis(200)));
    let result = run_ipdch(&schedule, &rules, &cm, &cfg).unwrap();
    assert_eq!(result.terminated_by, TerminatedBy::WallClock);
    assert!(result.trace.len() > 1);
    assert!(result.trace.iter().rev().skip(1).all(|r| r.elapsed < 0.2));
}

#[test]
fn uncoverable_flight_aborts_feasibility_run() {
    let flights = vec![
        Flight::new(0, "A", "B", 480, 560, "X"),
        Flight::new(1, "B", "A", 600, 680, "X"),
        Flight::new(2, "C", "B", 700, 780, "X"),
    ];
    let schedule = FlightSchedule::new(flights, [Airport::from("A")].into(), 1440).unwrap();
    let mut cfg = IpdchConfig::new(3, 1);
    cfg.stall_cycles = 2;
    match run_ipdch(&schedule, &RuleSet::default(), &CostModel::default(), &cfg) {
        Err(IpdchError::Uncoverable { flights, partial }) => {
            assert_eq!(flights, vec![FlightId(2)]);
            assert_eq!(partial.ifs.len(), 1);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn invalid_config_is_rejected() {
    let schedule = network(20, 1);
    let (rules, cm) = (RuleSet::default(), CostModel::default());
    assert!(matches!(
        run_ipdch(&schedule, &rules, &cm, &IpdchConfig::new(0, 1)),
        Err(IpdchError::InvalidConfig(_))
    ));
}
