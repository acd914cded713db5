//! Legality rules for connections, duties and pairings, and the pairing cost
//! model.
//!
//! A gap between two flights at the same airport is either a sit (inside a
//! duty) or an overnight rest (between duties); `max_sit < min_rest` keeps
//! the two windows disjoint.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schedule::{Airport, Flight, FlightId, FlightSchedule, Minutes};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleSet {
    pub min_sit: Minutes,
    pub max_sit: Minutes,
    pub min_rest: Minutes,
    pub max_rest: Minutes,
    pub briefing: Minutes,
    pub debriefing: Minutes,
    pub max_duties_per_pairing: usize,
    pub max_flights_per_duty: usize,
    pub max_duty_elapsed: Minutes,
    pub max_duty_flying: Minutes,
    pub forbid_overnight_at_base_city: bool,
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet {
            min_sit: 30,
            max_sit: 240,
            min_rest: 540,
            max_rest: 2880,
            briefing: 45,
            debriefing: 30,
            max_duties_per_pairing: 4,
            max_flights_per_duty: 6,
            max_duty_elapsed: 13 * 60,
            max_duty_flying: 8 * 60,
            forbid_overnight_at_base_city: true,
        }
    }
}

impl RuleSet {
    pub fn validate(&self) -> Result<(), RuleError> {
        let durations = [
            ("min_sit", self.min_sit),
            ("max_sit", self.max_sit),
            ("min_rest", self.min_rest),
            ("max_rest", self.max_rest),
            ("briefing", self.briefing),
            ("debriefing", self.debriefing),
            ("max_duty_elapsed", self.max_duty_elapsed),
            ("max_duty_flying", self.max_duty_flying),
        ];
        if let Some((name, _)) = durations.iter().find(|(_, v)| *v <= 0) {
            return Err(RuleError::InvalidRules(format!("{name} must be positive")));
        }
        if self.min_sit > self.max_sit {
            return Err(RuleError::InvalidRules("min_sit exceeds max_sit".into()));
        }
        if self.min_rest > self.max_rest {
            return Err(RuleError::InvalidRules("min_rest exceeds max_rest".into()));
        }
        if self.max_sit >= self.min_rest {
            return Err(RuleError::InvalidRules(
                "max_sit must be below min_rest".into(),
            ));
        }
        if self.max_duties_per_pairing == 0 || self.max_flights_per_duty == 0 {
            return Err(RuleError::InvalidRules(
                "duty and flight count limits must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Why two flights cannot be chained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IllegalConnection {
    CityMismatch,
    /// Gap shorter than the minimum sit (including overlaps).
    SitTooShort { gap: Minutes },
    /// Gap longer than a sit but shorter than a rest.
    BetweenSitAndRest { gap: Minutes },
    RestTooLong { gap: Minutes },
}

impl fmt::Display for IllegalConnection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IllegalConnection::CityMismatch => write!(f, "city_mismatch"),
            IllegalConnection::SitTooShort { gap } => write!(f, "sit_too_short({gap})"),
            IllegalConnection::BetweenSitAndRest { gap } => {
                write!(f, "between_sit_and_rest({gap})")
            }
            IllegalConnection::RestTooLong { gap } => write!(f, "rest_too_long({gap})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConnectionClass {
    Duty { sit: Minutes },
    Overnight { rest: Minutes },
    Illegal(IllegalConnection),
}

impl fmt::Display for ConnectionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConnectionClass::Duty { sit } => write!(f, "duty_connection({sit})"),
            ConnectionClass::Overnight { rest } => write!(f, "overnight_connection({rest})"),
            ConnectionClass::Illegal(reason) => write!(f, "illegal({reason})"),
        }
    }
}

pub fn classify_connection(first: &Flight, second: &Flight, rules: &RuleSet) -> ConnectionClass {
    if first.arrival_airport != second.departure_airport {
        return ConnectionClass::Illegal(IllegalConnection::CityMismatch);
    }
    let gap = second.departure_time - first.arrival_time;
    if gap < rules.min_sit {
        ConnectionClass::Illegal(IllegalConnection::SitTooShort { gap })
    } else if gap <= rules.max_sit {
        ConnectionClass::Duty { sit: gap }
    } else if gap < rules.min_rest {
        ConnectionClass::Illegal(IllegalConnection::BetweenSitAndRest { gap })
    } else if gap <= rules.max_rest {
        ConnectionClass::Overnight { rest: gap }
    } else {
        ConnectionClass::Illegal(IllegalConnection::RestTooLong { gap })
    }
}

/// Malformed input, as opposed to a legality violation.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StructuralError {
    #[error("duty has no flights")]
    EmptyDuty,
    #[error("pairing has no duties")]
    EmptyPairing,
    #[error("unknown flight {0}")]
    UnknownFlight(FlightId),
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum RuleError {
    #[error(transparent)]
    Structural(#[from] StructuralError),
    #[error("illegal pairing: {}", format_violations(.0))]
    Illegal(Vec<Violation>),
    #[error("invalid rules: {0}")]
    InvalidRules(String),
    #[error("invalid cost model: {0}")]
    InvalidCostModel(String),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    TooManyFlights { count: usize, limit: usize },
    ElapsedTime { elapsed: Minutes, limit: Minutes },
    FlyingTime { flying: Minutes, limit: Minutes },
    /// Consecutive flights inside a duty that are not a sit connection.
    DutyConnection {
        from: FlightId,
        to: FlightId,
        class: ConnectionClass,
    },
    StartCity { airport: Airport, base: Airport },
    EndCity { airport: Airport, base: Airport },
    TooManyDuties { count: usize, limit: usize },
    /// Consecutive duties that are not an overnight rest connection.
    RestConnection {
        from: FlightId,
        to: FlightId,
        class: ConnectionClass,
    },
    BaseOvernight { after: FlightId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooManyFlights { count, limit } => {
                write!(f, "flight_count({count} > {limit})")
            }
            Violation::ElapsedTime { elapsed, limit } => {
                write!(f, "elapsed_time({elapsed} > {limit})")
            }
            Violation::FlyingTime { flying, limit } => {
                write!(f, "flying_time({flying} > {limit})")
            }
            Violation::DutyConnection { from, to, class } => {
                write!(f, "connection({from}->{to}: {class})")
            }
            Violation::StartCity { airport, base } => write!(f, "start_city({airport} != {base})"),
            Violation::EndCity { airport, base } => write!(f, "end_city({airport} != {base})"),
            Violation::TooManyDuties { count, limit } => {
                write!(f, "duty_count({count} > {limit})")
            }
            Violation::RestConnection { from, to, class } => {
                write!(f, "rest({from}->{to}: {class})")
            }
            Violation::BaseOvernight { after } => {
                write!(f, "special_base_overnight(after {after})")
            }
        }
    }
}

/// Outcome of a legality check: legal iff there are no violations.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Verdict(Vec<Violation>);

impl Verdict {
    pub fn is_legal(&self) -> bool {
        self.0.is_empty()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.0
    }

    pub fn into_violations(self) -> Vec<Violation> {
        self.0
    }
}

/// The flights one crew flies between a briefing and a debriefing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Duty {
    flights: Vec<FlightId>,
    start: Airport,
    end: Airport,
    first_departure: Minutes,
    last_arrival: Minutes,
    elapsed: Minutes,
    flying: Minutes,
    briefing: Minutes,
    debriefing: Minutes,
    aircraft_changes: usize,
}

fn lookup(schedule: &FlightSchedule, id: FlightId) -> Result<&Flight, StructuralError> {
    schedule
        .flight(id)
        .ok_or(StructuralError::UnknownFlight(id))
}

impl Duty {
    /// Builds a duty from its flights in flying order. Only structure is
    /// checked here; see [`check_duty`] for legality.
    pub fn new(
        schedule: &FlightSchedule,
        flights: Vec<FlightId>,
        rules: &RuleSet,
    ) -> Result<Duty, StructuralError> {
        let resolved = flights
            .iter()
            .map(|&id| lookup(schedule, id))
            .collect::<Result<Vec<_>, _>>()?;
        let (first, last) = match (resolved.first(), resolved.last()) {
            (Some(first), Some(last)) => (*first, *last),
            _ => return Err(StructuralError::EmptyDuty),
        };
        let flying = resolved.iter().map(|f| f.block_time).sum();
        let aircraft_changes = resolved
            .windows(2)
            .filter(|w| w[0].fleet != w[1].fleet)
            .count();
        Ok(Duty {
            start: first.departure_airport.clone(),
            end: last.arrival_airport.clone(),
            first_departure: first.departure_time,
            last_arrival: last.arrival_time,
            elapsed: rules.briefing + (last.arrival_time - first.departure_time) + rules.debriefing,
            flying,
            briefing: rules.briefing,
            debriefing: rules.debriefing,
            aircraft_changes,
            flights,
        })
    }

    pub fn flights(&self) -> &[FlightId] {
        &self.flights
    }

    pub fn first_flight(&self) -> FlightId {
        self.flights[0]
    }

    pub fn last_flight(&self) -> FlightId {
        self.flights[self.flights.len() - 1]
    }

    pub fn start_airport(&self) -> &Airport {
        &self.start
    }

    pub fn end_airport(&self) -> &Airport {
        &self.end
    }

    pub fn first_departure(&self) -> Minutes {
        self.first_departure
    }

    pub fn last_arrival(&self) -> Minutes {
        self.last_arrival
    }

    /// Briefing + first departure to last arrival + debriefing.
    pub fn elapsed_time(&self) -> Minutes {
        self.elapsed
    }

    pub fn flying_time(&self) -> Minutes {
        self.flying
    }

    pub fn report_time(&self) -> Minutes {
        self.first_departure - self.briefing
    }

    pub fn release_time(&self) -> Minutes {
        self.last_arrival + self.debriefing
    }

    pub fn aircraft_changes(&self) -> usize {
        self.aircraft_changes
    }
}

pub fn check_duty(
    duty: &Duty,
    schedule: &FlightSchedule,
    rules: &RuleSet,
) -> Result<Verdict, StructuralError> {
    if duty.flights.is_empty() {
        return Err(StructuralError::EmptyDuty);
    }
    let flights = duty
        .flights
        .iter()
        .map(|&id| lookup(schedule, id))
        .collect::<Result<Vec<_>, _>>()?;

    let mut violations = Vec::new();
    if flights.len() > rules.max_flights_per_duty {
        violations.push(Violation::TooManyFlights {
            count: flights.len(),
            limit: rules.max_flights_per_duty,
        });
    }
    if duty.elapsed > rules.max_duty_elapsed {
        violations.push(Violation::ElapsedTime {
            elapsed: duty.elapsed,
            limit: rules.max_duty_elapsed,
        });
    }
    if duty.flying > rules.max_duty_flying {
        violations.push(Violation::FlyingTime {
            flying: duty.flying,
            limit: rules.max_duty_flying,
        });
    }
    for pair in flights.windows(2) {
        let class = classify_connection(pair[0], pair[1], rules);
        if !matches!(class, ConnectionClass::Duty { .. }) {
            violations.push(Violation::DutyConnection {
                from: pair[0].id,
                to: pair[1].id,
                class,
            });
        }
    }
    Ok(Verdict(violations))
}

/// A sequence of duties starting and ending at one crew base, with its cost
/// under the cost model it was assembled with.
#[derive(Clone, Debug, PartialEq)]
pub struct Pairing {
    duties: Vec<Duty>,
    crew_base: Airport,
    tafb: Minutes,
    n_aircraft_changes: usize,
    cost: f64,
}

impl Pairing {
    /// Assembles a pairing without checking legality; `cost` is the cost
    /// model's price for its attributes.
    pub fn assemble(
        duties: Vec<Duty>,
        crew_base: Airport,
        cm: &CostModel,
    ) -> Result<Pairing, StructuralError> {
        let (first, last) = match (duties.first(), duties.last()) {
            (Some(first), Some(last)) => (first, last),
            _ => return Err(StructuralError::EmptyPairing),
        };
        let tafb = last.release_time() - first.report_time();
        let n_aircraft_changes = duties.iter().map(|d| d.aircraft_changes).sum();
        let mut pairing = Pairing {
            duties,
            crew_base,
            tafb,
            n_aircraft_changes,
            cost: 0.0,
        };
        pairing.cost = cm.price(&pairing).total();
        Ok(pairing)
    }

    /// Assembles and checks legality.
    pub fn build(
        schedule: &FlightSchedule,
        duties: Vec<Duty>,
        crew_base: Airport,
        rules: &RuleSet,
        cm: &CostModel,
    ) -> Result<Pairing, RuleError> {
        let pairing = Pairing::assemble(duties, crew_base, cm)?;
        let verdict = check_pairing(&pairing, schedule, rules)?;
        if verdict.is_legal() {
            Ok(pairing)
        } else {
            Err(RuleError::Illegal(verdict.into_violations()))
        }
    }

    /// Builds a legal pairing from a flat flight sequence, opening a new duty
    /// at every gap that is not a sit connection.
    pub fn from_flights(
        schedule: &FlightSchedule,
        flights: &[FlightId],
        crew_base: Airport,
        rules: &RuleSet,
        cm: &CostModel,
    ) -> Result<Pairing, RuleError> {
        let mut duties = Vec::new();
        let mut current: Vec<FlightId> = Vec::new();
        for &id in flights {
            let flight = lookup(schedule, id)?;
            if let Some(&prev) = current.last() {
                let prev = lookup(schedule, prev)?;
                if !matches!(
                    classify_connection(prev, flight, rules),
                    ConnectionClass::Duty { .. }
                ) {
                    duties.push(Duty::new(schedule, std::mem::take(&mut current), rules)?);
                }
            }
            current.push(id);
        }
        if !current.is_empty() {
            duties.push(Duty::new(schedule, current, rules)?);
        }
        Pairing::build(schedule, duties, crew_base, rules, cm)
    }

    pub fn duties(&self) -> &[Duty] {
        &self.duties
    }

    pub fn crew_base(&self) -> &Airport {
        &self.crew_base
    }

    /// Time away from base: first report to last release.
    pub fn tafb(&self) -> Minutes {
        self.tafb
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn n_aircraft_changes(&self) -> usize {
        self.n_aircraft_changes
    }

    pub fn flights(&self) -> impl Iterator<Item = FlightId> + '_ {
        self.duties.iter().flat_map(|d| d.flights.iter().copied())
    }

    pub fn flight_ids(&self) -> Vec<FlightId> {
        self.flights().collect()
    }

    pub fn n_flights(&self) -> usize {
        self.duties.iter().map(|d| d.flights.len()).sum()
    }

    pub fn flying_time(&self) -> Minutes {
        self.duties.iter().map(|d| d.flying).sum()
    }

    pub fn total_elapsed(&self) -> Minutes {
        self.duties.iter().map(|d| d.elapsed).sum()
    }
}

impl fmt::Display for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.crew_base)?;
        for (i, id) in self.flights().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{id}")?;
        }
        Ok(())
    }
}

pub fn check_pairing(
    pairing: &Pairing,
    schedule: &FlightSchedule,
    rules: &RuleSet,
) -> Result<Verdict, StructuralError> {
    let (first, last) = match (pairing.duties.first(), pairing.duties.last()) {
        (Some(first), Some(last)) => (first, last),
        _ => return Err(StructuralError::EmptyPairing),
    };
    let base = &pairing.crew_base;
    let mut violations = Vec::new();
    if &first.start != base {
        violations.push(Violation::StartCity {
            airport: first.start.clone(),
            base: base.clone(),
        });
    }
    if &last.end != base {
        violations.push(Violation::EndCity {
            airport: last.end.clone(),
            base: base.clone(),
        });
    }
    if pairing.duties.len() > rules.max_duties_per_pairing {
        violations.push(Violation::TooManyDuties {
            count: pairing.duties.len(),
            limit: rules.max_duties_per_pairing,
        });
    }
    for duty in &pairing.duties {
        violations.extend(check_duty(duty, schedule, rules)?.into_violations());
    }
    for pair in pairing.duties.windows(2) {
        let from = lookup(schedule, pair[0].last_flight())?;
        let to = lookup(schedule, pair[1].first_flight())?;
        let class = classify_connection(from, to, rules);
        if !matches!(class, ConnectionClass::Overnight { .. }) {
            violations.push(Violation::RestConnection {
                from: from.id,
                to: to.id,
                class,
            });
        }
        if rules.forbid_overnight_at_base_city && &pair[0].end == base {
            violations.push(Violation::BaseOvernight { after: from.id });
        }
    }
    Ok(Verdict(violations))
}

/// Non-linear pairing cost coefficients. Rates are currency units per hour,
/// per night, or per event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostModel {
    pub flying_rate: f64,
    pub excess_rate: f64,
    /// Total duty elapsed hours are divided by this to get one minimum
    /// guarantee.
    pub mg_elapsed_factor: f64,
    /// TAFB hours are divided by this to get another minimum guarantee.
    pub mg_tafb_factor: f64,
    pub hotel_rate: f64,
    pub meal_rate: f64,
    pub aircraft_change_penalty: f64,
    /// Penalty per deadhead (over-covered flight) in a solution.
    pub deadhead_penalty: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            flying_rate: 150.0,
            excess_rate: 100.0,
            mg_elapsed_factor: 2.0,
            mg_tafb_factor: 3.5,
            hotel_rate: 120.0,
            meal_rate: 4.0,
            aircraft_change_penalty: 40.0,
            deadhead_penalty: 1000.0,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<(), RuleError> {
        let rates = [
            ("flying_rate", self.flying_rate),
            ("excess_rate", self.excess_rate),
            ("hotel_rate", self.hotel_rate),
            ("meal_rate", self.meal_rate),
            ("aircraft_change_penalty", self.aircraft_change_penalty),
            ("deadhead_penalty", self.deadhead_penalty),
        ];
        if let Some((name, _)) = rates.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return Err(RuleError::InvalidCostModel(format!(
                "{name} must be finite and non-negative"
            )));
        }
        for (name, v) in [
            ("mg_elapsed_factor", self.mg_elapsed_factor),
            ("mg_tafb_factor", self.mg_tafb_factor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(RuleError::InvalidCostModel(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// Cost components of a pairing, without any legality check.
    pub fn price(&self, pairing: &Pairing) -> CostBreakdown {
        let hours = |m: Minutes| m as f64 / 60.0;
        let flying_hours = hours(pairing.flying_time());
        let tafb_hours = hours(pairing.tafb);
        let guarantee = flying_hours
            .max(hours(pairing.total_elapsed()) / self.mg_elapsed_factor)
            .max(tafb_hours / self.mg_tafb_factor);
        CostBreakdown {
            flying: self.flying_rate * flying_hours,
            excess: self.excess_rate * (guarantee - flying_hours).max(0.0),
            hotel: self.hotel_rate * (pairing.duties.len() as f64 - 1.0),
            meal: self.meal_rate * tafb_hours,
            aircraft_changes: self.aircraft_change_penalty * pairing.n_aircraft_changes as f64,
        }
    }
}

/// Flying cost, hard cost (excess pay, hotel, meals) and soft cost
/// (aircraft changes).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CostBreakdown {
    pub flying: f64,
    pub excess: f64,
    pub hotel: f64,
    pub meal: f64,
    pub aircraft_changes: f64,
}

impl CostBreakdown {
    pub fn hard(&self) -> f64 {
        self.excess + self.hotel + self.meal
    }

    pub fn soft(&self) -> f64 {
        self.aircraft_changes
    }

    pub fn total(&self) -> f64 {
        self.flying + self.hard() + self.soft()
    }
}

/// Cost of a legal pairing; deadheads are charged per solution, not here.
pub fn pairing_cost(
    pairing: &Pairing,
    schedule: &FlightSchedule,
    rules: &RuleSet,
    cm: &CostModel,
) -> Result<f64, RuleError> {
    let verdict = check_pairing(pairing, schedule, rules)?;
    if !verdict.is_legal() {
        return Err(RuleError::Illegal(verdict.into_violations()));
    }
    Ok(cm.price(pairing).total())
}
