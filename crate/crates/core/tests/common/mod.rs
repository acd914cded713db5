#![allow(dead_code)]

use std::collections::BTreeSet;

use crewseed_core::cpop::{Cents, CpopInstance};
use crewseed_core::prelude::*;
use crewseed_core::rules::ConnectionClass;
use rand::seq::SliceRandom;
use rand::Rng;

/// `(base, flight ids)` of a pairing.
pub type PairingKey = (String, Vec<u32>);

pub fn key(p: &Pairing) -> PairingKey {
    (
        p.crew_base().to_string(),
        p.flights().map(|f| f.0).collect(),
    )
}

pub fn keys(set: &PairingSet) -> BTreeSet<PairingKey> {
    set.iter().map(key).collect()
}

/// Every legal pairing over `flights`, found by trying every ordering of
/// every subset. Orderings are only extended through same-airport,
/// forward-in-time connections, which every legal pairing has.
pub fn brute_force_pairings(
    schedule: &FlightSchedule,
    flights: &[FlightId],
    rules: &RuleSet,
    cm: &CostModel,
) -> BTreeSet<PairingKey> {
    let mut found = BTreeSet::new();
    let mut seq = Vec::new();
    let mut used = vec![false; flights.len()];
    extend(schedule, flights, rules, cm, &mut seq, &mut used, &mut found);
    found
}

fn extend(
    schedule: &FlightSchedule,
    flights: &[FlightId],
    rules: &RuleSet,
    cm: &CostModel,
    seq: &mut Vec<FlightId>,
    used: &mut [bool],
    found: &mut BTreeSet<PairingKey>,
) {
    if !seq.is_empty() {
        for base in schedule.crew_bases() {
            if let Some(p) = split_and_check(schedule, seq, base, rules, cm) {
                found.insert(key(&p));
            }
        }
    }
    for k in 0..flights.len() {
        if used[k] {
            continue;
        }
        let next = schedule.flight(flights[k]).unwrap();
        if let Some(&last) = seq.last() {
            let last = schedule.flight(last).unwrap();
            if last.arrival_airport != next.departure_airport
                || next.departure_time <= last.arrival_time
            {
                continue;
            }
        }
        used[k] = true;
        seq.push(flights[k]);
        extend(schedule, flights, rules, cm, seq, used, found);
        seq.pop();
        used[k] = false;
    }
}

/// Splits a flight sequence into duties wherever the gap exceeds the sit
/// window and keeps the result if `check_pairing` accepts it.
fn split_and_check(
    schedule: &FlightSchedule,
    seq: &[FlightId],
    base: &Airport,
    rules: &RuleSet,
    cm: &CostModel,
) -> Option<Pairing> {
    let mut duties = Vec::new();
    let mut current = vec![seq[0]];
    for pair in seq.windows(2) {
        let a = schedule.flight(pair[0]).unwrap();
        let b = schedule.flight(pair[1]).unwrap();
        if b.departure_time - a.arrival_time > rules.max_sit {
            duties.push(Duty::new(schedule, std::mem::take(&mut current), rules).ok()?);
        }
        current.push(pair[1]);
    }
    duties.push(Duty::new(schedule, current, rules).ok()?);
    let p = Pairing::assemble(duties, base.clone(), cm).ok()?;
    check_pairing(&p, schedule, rules)
        .ok()?
        .is_legal()
        .then_some(p)
}

/// A generated network and up to `max` of its flights taken from a random
/// time window, so that connections are likely.
pub fn random_subnetwork<R: Rng>(rng: &mut R, max: usize) -> (FlightSchedule, Vec<FlightId>) {
    let params = NetworkParams::new(40, 4, 2, rng.gen_range(1..=2))
        .with_horizon_days(2)
        .with_seed(rng.gen());
    let schedule = generate_network(&params).unwrap();
    let n = schedule.len();
    let size = rng.gen_range(1..=max);
    let start = rng.gen_range(0..n);
    let window: Vec<FlightId> = (start..(start + 3 * max).min(n))
        .map(|i| FlightId(i as u32))
        .collect();
    let mut picked: Vec<FlightId> = window
        .choose_multiple(rng, size.min(window.len()))
        .copied()
        .collect();
    picked.sort();
    (schedule, picked)
}

/// Exact optimum of the covering IP by enumerating all `2^P` selections,
/// with the objective evaluated term by term from the raw data.
pub fn brute_force_ip(inst: &CpopInstance) -> Option<Cents> {
    let p = inst.n_columns();
    let f = inst.n_rows();
    let mut best: Option<Cents> = None;
    for mask in 0u64..(1u64 << p) {
        let mut cover = vec![0i64; f];
        let mut cost = 0;
        for j in 0..p {
            if mask >> j & 1 == 1 {
                cost += inst.costs()[j];
                for &i in inst.column(j) {
                    cover[i as usize] += 1;
                }
            }
        }
        if cover.contains(&0) {
            continue;
        }
        let deadheads: i64 = cover.iter().map(|&c| c - 1).sum();
        let value = cost + deadheads * inst.deadhead_penalty();
        if best.is_none_or(|b| value < b) {
            best = Some(value);
        }
    }
    best
}

pub fn random_instance<R: Rng>(rng: &mut R, max_rows: usize, max_cols: usize) -> CpopInstance {
    let rows = rng.gen_range(1..=max_rows);
    let cols = rng.gen_range(1..=max_cols);
    let columns: Vec<Vec<usize>> = (0..cols)
        .map(|_| {
            let k = rng.gen_range(1..=rows);
            let mut all: Vec<usize> = (0..rows).collect();
            all.shuffle(rng);
            all.truncate(k);
            all
        })
        .collect();
    let costs = (0..cols).map(|_| rng.gen_range(0..50_000)).collect();
    let penalty = rng.gen_range(0..100_000);
    CpopInstance::new(rows, columns, costs, penalty).unwrap()
}

/// Minimum of `w·x` over the vertices of `{x in [0,1]^P : A x >= 1}`,
/// found by solving every square subsystem of active constraints.
pub fn vertex_lp_optimum(inst: &CpopInstance) -> Option<f64> {
    let p = inst.n_columns();
    let f = inst.n_rows();
    // Constraints g·x >= h.
    let mut cons: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..f {
        let g = (0..p)
            .map(|j| if inst.column(j).contains(&(i as u32)) { 1.0 } else { 0.0 })
            .collect();
        cons.push((g, 1.0));
    }
    for j in 0..p {
        let mut lo = vec![0.0; p];
        lo[j] = 1.0;
        cons.push((lo, 0.0));
        let mut hi = vec![0.0; p];
        hi[j] = -1.0;
        cons.push((hi, -1.0));
    }
    let mut best: Option<f64> = None;
    let mut chosen = Vec::new();
    subsets(cons.len(), p, 0, &mut chosen, &mut |active| {
        let a: Vec<Vec<f64>> = active.iter().map(|&k| cons[k].0.clone()).collect();
        let b: Vec<f64> = active.iter().map(|&k| cons[k].1).collect();
        let Some(x) = solve_square(a, b) else {
            return;
        };
        let feasible = cons
            .iter()
            .all(|(g, h)| g.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() >= h - 1e-9);
        if feasible {
            let value = inst.objective_cents(&x).unwrap() / 100.0;
            if best.is_none_or(|b| value < b) {
                best = Some(value);
            }
        }
    });
    best
}

fn subsets(n: usize, k: usize, from: usize, chosen: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if chosen.len() == k {
        f(chosen);
        return;
    }
    for i in from..n {
        chosen.push(i);
        subsets(n, k, i + 1, chosen, f);
        chosen.pop();
    }
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in 0..n {
            if row != col {
                let factor = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

pub fn all_flights(schedule: &FlightSchedule) -> Vec<FlightId> {
    schedule.flight_ids().collect()
}

/// Flights no pairing covers, by scanning every pairing for every flight.
pub fn naive_uncovered(ifs: &PairingSet, schedule: &FlightSchedule) -> Vec<FlightId> {
    schedule
        .flight_ids()
        .filter(|&f| !ifs.iter().any(|p| p.flight_ids().contains(&f)))
        .collect()
}

pub fn is_sit(a: &Flight, b: &Flight, rules: &RuleSet) -> bool {
    matches!(classify_connection(a, b, rules), ConnectionClass::Duty { .. })
}
