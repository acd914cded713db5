mod common;

use common::*;
use crewseed_core::pairgen::pairing_gen_sequential;
use crewseed_core::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn pairing_gen_matches_brute_force_on_small_subnetworks() {
    let rules = RuleSet::default();
    let cm = CostModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut nonempty = 0;
    for _ in 0..60 {
        let (schedule, flights) = random_subnetwork(&mut rng, 8);
        let got = pairing_gen(&schedule, &flights, &rules, &cm, Caps::default());
        let expected = brute_force_pairings(&schedule, &flights, &rules, &cm);
        assert_eq!(keys(&got), expected, "flights {flights:?}");
        assert_eq!(got.len(), expected.len(), "duplicates in output");
        nonempty += usize::from(!expected.is_empty());
    }
    assert!(nonempty >= 20, "too few instances with pairings: {nonempty}");
}

#[test]
fn enumerate_duties_matches_brute_force() {
    let rules = RuleSet::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        let (schedule, flights) = random_subnetwork(&mut rng, 7);
        let got: Vec<Vec<u32>> = enumerate_duties(&schedule, &flights, &rules)
            .iter()
            .map(|d| d.flights().iter().map(|f| f.0).collect())
            .collect();
        // Every ordering of every subset, kept when check_duty accepts it.
        let mut expected = Vec::new();
        let n = flights.len();
        let mut stack: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        while let Some(seq) = stack.pop() {
            let ids: Vec<FlightId> = seq.iter().map(|&i| flights[i]).collect();
            let duty = Duty::new(&schedule, ids.clone(), &rules).unwrap();
            if check_duty(&duty, &schedule, &rules).unwrap().is_legal() {
                expected.push(ids.iter().map(|f| f.0).collect::<Vec<u32>>());
            }
            if seq.len() < rules.max_flights_per_duty {
                for k in (0..n).filter(|k| !seq.contains(k)) {
                    let mut next = seq.clone();
                    next.push(k);
                    stack.push(next);
                }
            }
        }
        expected.sort();
        assert_eq!(got, expected);
    }
}

#[test]
fn two_flight_duty_example() {
    let flights = vec![
        Flight::new(0, "A", "B", 480, 560, "X"),
        Flight::new(1, "B", "A", 600, 680, "X"),
    ];
    let schedule = FlightSchedule::new(flights, [Airport::from("A")].into(), 1440).unwrap();
    let rules = RuleSet::default();
    let duties = enumerate_duties(&schedule, &[FlightId(0), FlightId(1)], &rules);
    let got: Vec<Vec<FlightId>> = duties.iter().map(|d| d.flights().to_vec()).collect();
    assert_eq!(
        got,
        vec![vec![FlightId(0)], vec![FlightId(0), FlightId(1)], vec![FlightId(1)]]
    );
    assert!(enumerate_duties(&schedule, &[], &rules).is_empty());

    let pairings = enumerate_pairings(
        &schedule,
        &[FlightId(0), FlightId(1)],
        &rules,
        &CostModel::default(),
        &Airport::from("A"),
        Caps::default(),
    );
    assert_eq!(pairings.len(), 1);
    assert_eq!(pairings.pairings()[0].to_string(), "A:0,1");
}

#[test]
fn mismatched_airports_give_singleton_duties_only() {
    let flights = vec![
        Flight::new(0, "A", "B", 480, 560, "X"),
        Flight::new(1, "C", "A", 600, 680, "X"),
    ];
    let schedule = FlightSchedule::new(flights, [Airport::from("A")].into(), 1440).unwrap();
    let duties = enumerate_duties(&schedule, &[FlightId(0), FlightId(1)], &RuleSet::default());
    assert_eq!(duties.len(), 2);
    assert!(duties.iter().all(|d| d.flights().len() == 1));
}

#[test]
fn parallel_and_sequential_agree() {
    let schedule = generate_network(&NetworkParams::new(120, 8, 2, 2).with_seed(3)).unwrap();
    let rules = RuleSet::default();
    let cm = CostModel::default();
    let flights: Vec<FlightId> = schedule.flight_ids().step_by(2).collect();
    let a = pairing_gen(&schedule, &flights, &rules, &cm, Caps::default());
    let b = pairing_gen_sequential(&schedule, &flights, &rules, &cm, Caps::default());
    assert_eq!(a, b);
    assert!(!a.is_empty());
    let again = pairing_gen(&schedule, &flights, &rules, &cm, Caps::default());
    assert_eq!(a, again);
}

#[test]
fn single_base_union_is_that_base() {
    let mut params = NetworkParams::new(30, 4, 2, 1);
    params.seed = 9;
    let schedule = generate_network(&params).unwrap();
    let rules = RuleSet::default();
    let cm = CostModel::default();
    let flights = all_flights(&schedule);
    let base = schedule.crew_bases().iter().next().unwrap().clone();
    let union = pairing_gen(&schedule, &flights, &rules, &cm, Caps::default());
    let one = enumerate_pairings(&schedule, &flights, &rules, &cm, &base, Caps::default());
    assert_eq!(union, one);
}

#[test]
fn output_is_sound_and_within_input() {
    let schedule = generate_network(&NetworkParams::new(80, 6, 2, 2).with_seed(17)).unwrap();
    let rules = RuleSet::default();
    let cm = CostModel::default();
    let flights: Vec<FlightId> = schedule.flight_ids().filter(|f| f.0 % 3 != 0).collect();
    let set = pairing_gen(&schedule, &flights, &rules, &cm, Caps::default());
    for p in &set {
        assert!(check_pairing(p, &schedule, &rules).unwrap().is_legal());
        assert!((p.cost() - pairing_cost(p, &schedule, &rules, &cm).unwrap()).abs() < 1e-9);
    }
    assert!(set.covered_flights().iter().all(|f| flights.contains(f)));
    assert!(set.covered_flights().len() <= flights.len());
    let union: std::collections::BTreeSet<FlightId> = set.iter().flat_map(|p| p.flights()).collect();
    assert_eq!(&union, set.covered_flights());
}

#[test]
fn unreachable_flight_is_never_covered() {
    let flights = vec![
        Flight::new(0, "A", "B", 480, 560, "X"),
        Flight::new(1, "B", "A", 600, 680, "X"),
        // Starts at C, which nothing reaches.
        Flight::new(2, "C", "B", 700, 780, "X"),
    ];
    let schedule = FlightSchedule::new(flights, [Airport::from("A")].into(), 1440).unwrap();
    let set = pairing_gen(
        &schedule,
        &all_flights(&schedule),
        &RuleSet::default(),
        &CostModel::default(),
        Caps::default(),
    );
    assert!(!set.covered_flights().contains(&FlightId(2)));
}

#[test]
fn generated_fifty_flight_network_is_fully_coverable() {
    let schedule = generate_network(&NetworkParams::new(50, 8, 2, 2).with_seed(42)).unwrap();
    let rules = RuleSet::default();
    let cm = CostModel::default();
    let flights = all_flights(&schedule);
    let mut covered = std::collections::BTreeSet::new();
    for base in schedule.crew_bases() {
        let set = enumerate_pairings(&schedule, &flights, &rules, &cm, base, Caps::default());
        assert!(!set.is_truncated());
        covered.extend(set.covered_flights().iter().copied());
    }
    assert_eq!(covered.len(), 50);
}

#[test]
fn caps_mark_truncation() {
    let schedule = generate_network(&NetworkParams::new(60, 6, 2, 2).with_seed(1)).unwrap();
    let caps = Caps {
        max_nodes: 5,
        max_pairings: 500_000,
    };
    let set = pairing_gen(
        &schedule,
        &all_flights(&schedule),
        &RuleSet::default(),
        &CostModel::default(),
        caps,
    );
    assert!(set.is_truncated());
    assert_eq!(set.truncated_bases().len(), 2);
}
