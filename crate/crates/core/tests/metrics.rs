mod common;

use common::*;
use crewseed_core::metrics::MetricsError;
use crewseed_core::prelude::*;
use proptest::prelude::*;

fn round_trip_schedule() -> FlightSchedule {
    let flights = vec![
        Flight::new(0, "A", "B", 480, 560, "X"),
        Flight::new(1, "B", "A", 600, 680, "X"),
        Flight::new(2, "A", "C", 720, 800, "X"),
        Flight::new(3, "C", "A", 840, 920, "X"),
    ];
    FlightSchedule::new(flights, [Airport::from("A")].into(), 1440).unwrap()
}

fn pairing(schedule: &FlightSchedule, ids: &[u32], cm: &CostModel) -> Pairing {
    let rules = RuleSet::default();
    let ids = ids.iter().map(|&i| FlightId(i)).collect();
    let duty = Duty::new(schedule, ids, &rules).unwrap();
    Pairing::assemble(vec![duty], Airport::from("A"), cm).unwrap()
}

#[test]
fn exact_partition_has_no_deadheads() {
    let schedule = round_trip_schedule();
    let (rules, cm) = (RuleSet::default(), CostModel::default());
    let mut ifs = PairingSet::new();
    let a = pairing(&schedule, &[0, 1], &cm);
    let b = pairing(&schedule, &[2, 3], &cm);
    let expected = a.cost() + b.cost();
    ifs.insert(a);
    ifs.insert(b);
    let report = evaluate_ifs(&ifs, &schedule, &rules, &cm).unwrap();
    assert!(report.is_feasible());
    assert_eq!(report.n_pairings, 2);
    assert!((report.lp_cost.unwrap() - expected).abs() < 0.01);
    assert!((report.lp_cost_without_deadheads.unwrap() - expected).abs() < 0.01);
    assert!(report.deadhead_count_at_lp.unwrap().abs() < 1e-9);
    assert!((report.mean_coverage_multiplicity - 1.0).abs() < 1e-12);
}

#[test]
fn missing_flight_is_reported() {
    let schedule = round_trip_schedule();
    let (rules, cm) = (RuleSet::default(), CostModel::default());
    let mut ifs = PairingSet::new();
    ifs.insert(pairing(&schedule, &[0, 1], &cm));
    let report = evaluate_ifs(&ifs, &schedule, &rules, &cm).unwrap();
    assert!(!report.is_feasible());
    assert_eq!(report.uncovered, vec![FlightId(2), FlightId(3)]);
    assert_eq!(report.lp_cost, None);
    let text = report.to_text(false);
    assert!(text.contains("feasible: false"));
    assert!(text.contains("uncovered: [2,3]"));
    assert!(text.contains("lp_cost: none"));
    assert!(!text.contains("generation_runtime_secs"));
}

#[test]
fn illegal_pairing_is_rejected() {
    let schedule = round_trip_schedule();
    let strict = RuleSet {
        max_flights_per_duty: 1,
        ..RuleSet::default()
    };
    let cm = CostModel::default();
    let mut ifs = PairingSet::new();
    ifs.insert(pairing(&schedule, &[0, 1], &cm));
    assert!(matches!(
        evaluate_ifs(&ifs, &schedule, &strict, &cm),
        Err(MetricsError::IllegalPairing { index: 0, .. })
    ));
}

#[test]
fn empty_set_covers_nothing() {
    let schedule = round_trip_schedule();
    let ifs = PairingSet::new();
    assert_eq!(coverage_check(&ifs, &schedule).len(), 4);
    let report =
        evaluate_ifs(&ifs, &schedule, &RuleSet::default(), &CostModel::default()).unwrap();
    assert_eq!(report.mean_coverage_multiplicity, 0.0);
}

#[test]
fn runtime_line_is_optional() {
    let schedule = round_trip_schedule();
    let report = evaluate_ifs(&PairingSet::new(), &schedule, &RuleSet::default(), &CostModel::default())
        .unwrap()
        .with_runtime(std::time::Duration::from_millis(1500));
    assert!(report.to_text(true).contains("generation_runtime_secs: 1.500"));
}

fn generated() -> (FlightSchedule, PairingSet) {
    let schedule = generate_network(&NetworkParams::new(40, 4, 2, 2).with_horizon_days(2).with_seed(8))
        .unwrap();
    let set = pairing_gen(
        &schedule,
        &all_flights(&schedule),
        &RuleSet::default(),
        &CostModel::default(),
        Caps::default(),
    );
    (schedule, set)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coverage_check_matches_naive_scan(picks in proptest::collection::vec(any::<prop::sample::Index>(), 0..30)) {
        let (schedule, set) = generated();
        let mut ifs = PairingSet::new();
        for i in &picks {
            ifs.insert(set.pairings()[i.index(set.len())].clone());
        }
        prop_assert_eq!(coverage_check(&ifs, &schedule), naive_uncovered(&ifs, &schedule));
    }

    #[test]
    fn lp_cost_falls_as_the_set_grows(seed in any::<u64>(), cut in 0.0f64..1.0) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let (schedule, set) = generated();
        let mut order: Vec<usize> = (0..set.len()).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let (rules, cm) = (RuleSet::default(), CostModel::default());
        let mut big = PairingSet::new();
        for &j in &order {
            big.insert(set.pairings()[j].clone());
        }
        let k = ((order.len() as f64) * cut) as usize;
        let small = big.prefix(k.max(1));
        let rs = evaluate_ifs(&small, &schedule, &rules, &cm).unwrap();
        let rb = evaluate_ifs(&big, &schedule, &rules, &cm).unwrap();
        prop_assert!(rb.uncovered.len() <= rs.uncovered.len());
        if let (Some(s), Some(b)) = (rs.lp_cost, rb.lp_cost) {
            prop_assert!(b <= s + 1e-6 * s.max(1.0));
        }
    }
}
