mod common;

use std::collections::BTreeSet;
use std::time::Duration;

use common::*;
use crewseed_core::baseline::EdfsError;
use crewseed_core::prelude::*;

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
fn round_trip_schedule_gives_one_pairing() {
    let flights = vec![
        Flight::new(0, "A", "B", 480, 560, "X"),
        Flight::new(1, "B", "A", 600, 680, "X"),
    ];
    let schedule = FlightSchedule::new(flights, [Airport::from("A")].into(), 1440).unwrap();
    let result = run_enhanced_dfs(
        &schedule,
        &RuleSet::default(),
        &CostModel::default(),
        &EdfsConfig::new(0),
    )
    .unwrap();
    assert!(result.is_feasible());
    assert_eq!(result.ifs.len(), 1);
    assert_eq!(result.ifs.pairings()[0].to_string(), "A:0,1");
    assert_eq!(result.terminated_by, TerminatedBy::FeasibilityPoint);
}

#[test]
fn every_acceptance_covers_something_new() {
    let schedule = generate_network(&NetworkParams::new(50, 8, 2, 2).with_seed(42)).unwrap();
    let (rules, cm) = (RuleSet::default(), CostModel::default());
    let result = run_enhanced_dfs(&schedule, &rules, &cm, &EdfsConfig::new(3)).unwrap();
    assert!(result.is_feasible());
    assert!(coverage_check(&result.ifs, &schedule).is_empty());
    assert!(result.ifs.len() <= schedule.len());

    // Replay the acceptances in order.
    let mut covered = BTreeSet::new();
    for (k, (p, r)) in result.ifs.iter().zip(&result.trace).enumerate() {
        assert!(check_pairing(p, &schedule, &rules).unwrap().is_legal());
        let fresh = p.flights().filter(|f| !covered.contains(f)).count();
        assert!(fresh > 0, "pairing {k} adds nothing");
        assert_eq!(fresh, r.covered_in_subset);
        covered.extend(p.flights());
        assert_eq!(r.uncovered, schedule.len() - covered.len());
        assert_eq!(r.ifs_len, k + 1);
    }
    assert_eq!(result.trace.len(), result.ifs.len());
}

#[test]
fn runs_are_reproducible() {
    let schedule = generate_network(&NetworkParams::new(80, 8, 2, 2).with_seed(5)).unwrap();
    let (rules, cm) = (RuleSet::default(), CostModel::default());
    let a = run_enhanced_dfs(&schedule, &rules, &cm, &EdfsConfig::new(17)).unwrap();
    let b = run_enhanced_dfs(&schedule, &rules, &cm, &EdfsConfig::new(17)).unwrap();
    assert_eq!(a.ifs, b.ifs);
    assert_eq!(strip_elapsed(&a), strip_elapsed(&b));
}

#[test]
fn unreachable_flight_ends_the_search() {
    let flights = vec![
        Flight::new(0, "A", "B", 480, 560, "X"),
        Flight::new(1, "B", "A", 600, 680, "X"),
        Flight::new(2, "C", "B", 700, 780, "X"),
    ];
    let schedule = FlightSchedule::new(flights, [Airport::from("A")].into(), 1440).unwrap();
    let result = run_enhanced_dfs(
        &schedule,
        &RuleSet::default(),
        &CostModel::default(),
        &EdfsConfig::new(0),
    )
    .unwrap();
    assert_eq!(result.terminated_by, TerminatedBy::Exhausted);
    assert_eq!(result.uncovered, vec![FlightId(2)]);
    assert_eq!(naive_uncovered(&result.ifs, &schedule), result.uncovered);
}

#[test]
fn zero_time_limit_stops_immediately() {
    let schedule = generate_network(&NetworkParams::new(50, 8, 2, 2).with_seed(42)).unwrap();
    let cfg = EdfsConfig::new(1).with_time_limit(Duration::ZERO);
    let result =
        run_enhanced_dfs(&schedule, &RuleSet::default(), &CostModel::default(), &cfg).unwrap();
    assert_eq!(result.terminated_by, TerminatedBy::WallClock);
    assert!(!result.is_feasible());
}

#[test]
fn bad_backtrack_schedule_is_rejected() {
    let schedule = generate_network(&NetworkParams::new(20, 4, 2, 1).with_seed(1)).unwrap();
    let mut cfg = EdfsConfig::new(1);
    cfg.backtrack_schedule = vec![1, 0];
    assert!(matches!(
        run_enhanced_dfs(&schedule, &RuleSet::default(), &CostModel::default(), &cfg),
        Err(EdfsError::InvalidConfig(_))
    ));
}
