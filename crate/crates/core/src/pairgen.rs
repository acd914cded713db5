//! Legal duty and pairing enumeration over a flight subset.
//!
//! Duties are enumerated once per subset; pairings are then assembled by a
//! depth-first walk over the duty graph, independently for each crew base.

use std::collections::{BTreeSet, HashMap, HashSet};

use rayon::prelude::*;

use crate::rules::{
    check_pairing, classify_connection, ConnectionClass, CostModel, Duty, Pairing, RuleSet,
};
use crate::schedule::{Airport, Flight, FlightId, FlightSchedule, Minutes};

/// Safety limits for one crew base's depth-first walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    pub max_nodes: u64,
    pub max_pairings: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_nodes: 2_000_000,
            max_pairings: 500_000,
        }
    }
}

/// A set of distinct pairings and the flights they cover.
#[derive(Clone, Debug, Default)]
pub struct PairingSet {
    pairings: Vec<Pairing>,
    covered: BTreeSet<FlightId>,
    keys: HashSet<Vec<FlightId>>,
    truncated_bases: Vec<Airport>,
}

impl PartialEq for PairingSet {
    fn eq(&self, other: &Self) -> bool {
        self.pairings == other.pairings
            && self.covered == other.covered
            && self.truncated_bases == other.truncated_bases
    }
}

impl PairingSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `pairing` unless one with the same flight sequence is present.
    pub fn insert(&mut self, pairing: Pairing) -> bool {
        if !self.keys.insert(pairing.flight_ids()) {
            return false;
        }
        self.covered.extend(pairing.flights());
        self.pairings.push(pairing);
        true
    }

    pub fn contains(&self, flights: &[FlightId]) -> bool {
        self.keys.contains(flights)
    }

    pub fn pairings(&self) -> &[Pairing] {
        &self.pairings
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Pairing> {
        self.pairings.iter()
    }

    pub fn len(&self) -> usize {
        self.pairings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairings.is_empty()
    }

    pub fn covered_flights(&self) -> &BTreeSet<FlightId> {
        &self.covered
    }

    pub fn is_truncated(&self) -> bool {
        !self.truncated_bases.is_empty()
    }

    /// Crew bases whose enumeration hit a cap.
    pub fn truncated_bases(&self) -> &[Airport] {
        &self.truncated_bases
    }

    /// The first `n` pairings in insertion order.
    pub fn prefix(&self, n: usize) -> PairingSet {
        self.pairings[..n.min(self.len())].iter().cloned().collect()
    }

    /// Sorts pairings lexicographically by flight-id sequence.
    pub fn sort_canonical(&mut self) {
        self.pairings
            .sort_by(|a, b| a.flights().cmp(b.flights()).then(a.crew_base().cmp(b.crew_base())));
    }

    fn mark_truncated(&mut self, base: Airport) {
        if !self.truncated_bases.contains(&base) {
            self.truncated_bases.push(base);
            self.truncated_bases.sort();
        }
    }
}

impl FromIterator<Pairing> for PairingSet {
    fn from_iter<I: IntoIterator<Item = Pairing>>(iter: I) -> Self {
        let mut set = PairingSet::new();
        for p in iter {
            set.insert(p);
        }
        set
    }
}

impl<'a> IntoIterator for &'a PairingSet {
    type Item = &'a Pairing;
    type IntoIter = std::slice::Iter<'a, Pairing>;

    fn into_iter(self) -> Self::IntoIter {
        self.pairings.iter()
    }
}

fn resolve<'s>(schedule: &'s FlightSchedule, flights: &[FlightId]) -> Vec<&'s Flight> {
    let unique: BTreeSet<FlightId> = flights.iter().copied().collect();
    unique
        .into_iter()
        .map(|id| {
            schedule
                .flight(id)
                .unwrap_or_else(|| panic!("flight {id} is not in the schedule"))
        })
        .collect()
}

/// Departures grouped by airport and sorted by time, for window queries.
struct DepartureIndex<'s> {
    by_airport: HashMap<&'s Airport, Vec<&'s Flight>>,
}

impl<'s> DepartureIndex<'s> {
    fn new(flights: &[&'s Flight]) -> Self {
        let mut by_airport: HashMap<&Airport, Vec<&Flight>> = HashMap::new();
        for f in flights {
            by_airport.entry(&f.departure_airport).or_default().push(f);
        }
        for list in by_airport.values_mut() {
            list.sort_by_key(|f| (f.departure_time, f.id));
        }
        DepartureIndex { by_airport }
    }

    fn window(&self, airport: &Airport, from: Minutes, to: Minutes) -> &[&'s Flight] {
        let Some(list) = self.by_airport.get(airport) else {
            return &[];
        };
        let lo = list.partition_point(|f| f.departure_time < from);
        let hi = list.partition_point(|f| f.departure_time <= to);
        &list[lo..hi.max(lo)]
    }
}

/// All legal duties made of flights from `flights`, sorted lexicographically
/// by flight ids.
pub fn enumerate_duties(
    schedule: &FlightSchedule,
    flights: &[FlightId],
    rules: &RuleSet,
) -> Vec<Duty> {
    let resolved = resolve(schedule, flights);
    let index = DepartureIndex::new(&resolved);

    // Sit successors of each flight, ascending by id.
    let successors: HashMap<FlightId, Vec<&Flight>> = resolved
        .iter()
        .map(|f| {
            let mut next: Vec<&Flight> = index
                .window(
                    &f.arrival_airport,
                    f.arrival_time + rules.min_sit,
                    f.arrival_time + rules.max_sit,
                )
                .iter()
                .copied()
                .filter(|g| matches!(classify_connection(f, g, rules), ConnectionClass::Duty { .. }))
                .collect();
            next.sort_by_key(|g| g.id);
            (f.id, next)
        })
        .collect();

    let mut duties = Vec::new();
    let mut path: Vec<&Flight> = Vec::new();
    for start in &resolved {
        path.clear();
        path.push(start);
        extend_duty(schedule, rules, &successors, &mut path, &mut duties);
    }
    duties
}

fn extend_duty<'s>(
    schedule: &FlightSchedule,
    rules: &RuleSet,
    successors: &HashMap<FlightId, Vec<&'s Flight>>,
    path: &mut Vec<&'s Flight>,
    out: &mut Vec<Duty>,
) {
    let first = path[0];
    let last = path[path.len() - 1];
    let flying: Minutes = path.iter().map(|f| f.block_time).sum();
    let elapsed = rules.briefing + (last.arrival_time - first.departure_time) + rules.debriefing;
    // All three limits only grow as the duty is extended.
    if path.len() > rules.max_flights_per_duty
        || flying > rules.max_duty_flying
        || elapsed > rules.max_duty_elapsed
    {
        return;
    }
    let ids = path.iter().map(|f| f.id).collect();
    let duty = Duty::new(schedule, ids, rules).expect("flights resolved from the schedule");
    out.push(duty);
    for &next in &successors[&last.id] {
        path.push(next);
        extend_duty(schedule, rules, successors, path, out);
        path.pop();
    }
}

/// Duties as nodes; an edge joins two duties when the last flight of the
/// first and the first flight of the second form an overnight connection.
/// Edges are resolved on demand through a per-airport start-time index.
pub struct DutyGraph<'s> {
    schedule: &'s FlightSchedule,
    rules: &'s RuleSet,
    duties: Vec<Duty>,
    by_start: HashMap<Airport, Vec<usize>>,
}

impl<'s> DutyGraph<'s> {
    pub fn new(schedule: &'s FlightSchedule, rules: &'s RuleSet, duties: Vec<Duty>) -> Self {
        let mut by_start: HashMap<Airport, Vec<usize>> = HashMap::new();
        for (i, d) in duties.iter().enumerate() {
            by_start.entry(d.start_airport().clone()).or_default().push(i);
        }
        for list in by_start.values_mut() {
            list.sort_by_key(|&i| (duties[i].first_departure(), i));
        }
        DutyGraph {
            schedule,
            rules,
            duties,
            by_start,
        }
    }

    pub fn build(schedule: &'s FlightSchedule, rules: &'s RuleSet, flights: &[FlightId]) -> Self {
        DutyGraph::new(schedule, rules, enumerate_duties(schedule, flights, rules))
    }

    pub fn duties(&self) -> &[Duty] {
        &self.duties
    }

    pub fn duty(&self, i: usize) -> &Duty {
        &self.duties[i]
    }

    pub fn len(&self) -> usize {
        self.duties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.duties.is_empty()
    }

    /// Duties starting at `base`, in node order.
    pub fn base_out(&self, base: &Airport) -> Vec<usize> {
        let mut out = self.by_start.get(base).cloned().unwrap_or_default();
        out.sort_unstable();
        out
    }

    /// Duties ending at `base`, in node order.
    pub fn base_in(&self, base: &Airport) -> Vec<usize> {
        (0..self.duties.len())
            .filter(|&i| self.duties[i].end_airport() == base)
            .collect()
    }

    /// Overnight successors of duty `i`, in node order.
    pub fn successors(&self, i: usize) -> Vec<usize> {
        let duty = &self.duties[i];
        let Some(list) = self.by_start.get(duty.end_airport()) else {
            return Vec::new();
        };
        let from = duty.last_arrival() + self.rules.min_rest;
        let to = duty.last_arrival() + self.rules.max_rest;
        let lo = list.partition_point(|&j| self.duties[j].first_departure() < from);
        let hi = list.partition_point(|&j| self.duties[j].first_departure() <= to);
        let last = self.flight(duty.last_flight());
        let mut next: Vec<usize> = list[lo..hi.max(lo)]
            .iter()
            .copied()
            .filter(|&j| {
                let first = self.flight(self.duties[j].first_flight());
                matches!(
                    classify_connection(last, first, self.rules),
                    ConnectionClass::Overnight { .. }
                )
            })
            .collect();
        next.sort_unstable();
        next
    }

    fn flight(&self, id: FlightId) -> &'s Flight {
        self.schedule.flight(id).expect("duty flights come from the schedule")
    }
}

struct BaseOutcome {
    pairings: Vec<Pairing>,
    truncated: bool,
}

struct Walk<'g, 's> {
    graph: &'g DutyGraph<'s>,
    cm: &'g CostModel,
    base: &'g Airport,
    caps: Caps,
    nodes: u64,
    path: Vec<usize>,
    pairings: Vec<Pairing>,
}

impl Walk<'_, '_> {
    /// Visits `duty` as the next path element; false once a cap is hit.
    fn visit(&mut self, duty: usize) -> bool {
        self.nodes += 1;
        if self.nodes > self.caps.max_nodes {
            return false;
        }
        self.path.push(duty);
        let keep_going = self.expand(duty);
        self.path.pop();
        keep_going
    }

    fn expand(&mut self, duty: usize) -> bool {
        let graph = self.graph;
        let rules = graph.rules;
        let at_base = graph.duty(duty).end_airport() == self.base;
        if at_base {
            let duties = self.path.iter().map(|&d| graph.duty(d).clone()).collect();
            let pairing =
                Pairing::assemble(duties, self.base.clone(), self.cm).expect("non-empty path");
            let legal = check_pairing(&pairing, graph.schedule, rules)
                .map(|v| v.is_legal())
                .unwrap_or(false);
            if legal {
                self.pairings.push(pairing);
                if self.pairings.len() >= self.caps.max_pairings {
                    return false;
                }
            }
        }
        // Duty count and the base-overnight rule only get worse with length.
        if self.path.len() >= rules.max_duties_per_pairing
            || (at_base && rules.forbid_overnight_at_base_city)
        {
            return true;
        }
        graph.successors(duty).into_iter().all(|next| self.visit(next))
    }
}

fn walk_base(graph: &DutyGraph<'_>, cm: &CostModel, base: &Airport, caps: Caps) -> BaseOutcome {
    let mut walk = Walk {
        graph,
        cm,
        base,
        caps,
        nodes: 0,
        path: Vec::new(),
        pairings: Vec::new(),
    };
    let complete = graph.base_out(base).into_iter().all(|root| walk.visit(root));
    BaseOutcome {
        pairings: walk.pairings,
        truncated: !complete,
    }
}

/// Legal pairings for one crew base over a flight subset, sorted by flight
/// ids. Caps bound the depth-first walk; hitting one marks the base as
/// truncated.
pub fn enumerate_pairings(
    schedule: &FlightSchedule,
    flights: &[FlightId],
    rules: &RuleSet,
    cm: &CostModel,
    base: &Airport,
    caps: Caps,
) -> PairingSet {
    let graph = DutyGraph::build(schedule, rules, flights);
    let outcome = walk_base(&graph, cm, base, caps);
    let mut set: PairingSet = outcome.pairings.into_iter().collect();
    set.sort_canonical();
    if outcome.truncated {
        set.mark_truncated(base.clone());
    }
    set
}

/// Legal pairings over a flight subset for every crew base, one parallel
/// task per base. Output is identical to [`pairing_gen_sequential`].
pub fn pairing_gen(
    schedule: &FlightSchedule,
    flights: &[FlightId],
    rules: &RuleSet,
    cm: &CostModel,
    caps: Caps,
) -> PairingSet {
    let graph = DutyGraph::build(schedule, rules, flights);
    let bases: Vec<&Airport> = schedule.crew_bases().iter().collect();
    let outcomes: Vec<(Airport, BaseOutcome)> = bases
        .par_iter()
        .map(|&base| (base.clone(), walk_base(&graph, cm, base, caps)))
        .collect();
    merge(outcomes)
}

pub fn pairing_gen_sequential(
    schedule: &FlightSchedule,
    flights: &[FlightId],
    rules: &RuleSet,
    cm: &CostModel,
    caps: Caps,
) -> PairingSet {
    let graph = DutyGraph::build(schedule, rules, flights);
    let outcomes = schedule
        .crew_bases()
        .iter()
        .map(|base| (base.clone(), walk_base(&graph, cm, base, caps)))
        .collect();
    merge(outcomes)
}

fn merge(outcomes: Vec<(Airport, BaseOutcome)>) -> PairingSet {
    let mut set = PairingSet::new();
    let mut truncated = Vec::new();
    for (base, outcome) in outcomes {
        if outcome.truncated {
            truncated.push(base);
        }
        for p in outcome.pairings {
            set.insert(p);
        }
    }
    set.sort_canonical();
    for base in truncated {
        set.mark_truncated(base);
    }
    set
}
