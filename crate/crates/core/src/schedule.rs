//! Flight schedule model, CSV persistence and a seeded hub-and-spoke network
//! generator.
//!
//! Times are integer minutes from the start of the planning horizon; day `d`
//! starts at `d * MINUTES_PER_DAY`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::derive_seed;

pub type Minutes = i64;

pub const MINUTES_PER_DAY: Minutes = 1440;

const CSV_HEADER: [&str; 6] = ["id", "dep_airport", "arr_airport", "dep_time", "arr_time", "fleet"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlightId(pub u32);

impl FlightId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for FlightId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Airport code.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Airport(String);

impl Airport {
    pub fn new(code: impl Into<String>) -> Self {
        Airport(code.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Airport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Airport {
    fn from(code: &str) -> Self {
        Airport::new(code)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Flight {
    pub id: FlightId,
    pub departure_airport: Airport,
    pub arrival_airport: Airport,
    pub departure_time: Minutes,
    pub arrival_time: Minutes,
    pub fleet: String,
    /// Gate-to-gate flying time, always `arrival_time - departure_time`.
    pub block_time: Minutes,
}

impl Flight {
    pub fn new(
        id: u32,
        departure_airport: impl Into<Airport>,
        arrival_airport: impl Into<Airport>,
        departure_time: Minutes,
        arrival_time: Minutes,
        fleet: impl Into<String>,
    ) -> Self {
        Flight {
            id: FlightId(id),
            departure_airport: departure_airport.into(),
            arrival_airport: arrival_airport.into(),
            departure_time,
            arrival_time,
            fleet: fleet.into(),
            block_time: arrival_time - departure_time,
        }
    }

    fn validate(&self) -> Result<(), ScheduleError> {
        let invalid = |reason: &str| ScheduleError::InvalidFlight {
            id: self.id,
            reason: reason.to_string(),
        };
        if self.arrival_time <= self.departure_time {
            return Err(invalid("arrival time must be after departure time"));
        }
        if self.block_time != self.arrival_time - self.departure_time {
            return Err(invalid("block time must equal arrival minus departure"));
        }
        if self.departure_airport == self.arrival_airport {
            return Err(invalid("departure and arrival airports are identical"));
        }
        if self.departure_time < 0 {
            return Err(invalid("departure before horizon start"));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{path}: invalid schedule metadata: {message}")]
    Meta { path: PathBuf, message: String },
    #[error("flight {id}: {reason}")]
    InvalidFlight { id: FlightId, reason: String },
    #[error("flight ids must be dense 0..{expected}; found {found}")]
    NonDenseIds { expected: usize, found: FlightId },
    #[error("schedule has no flights")]
    Empty,
    #[error("schedule has no crew bases")]
    NoCrewBases,
    #[error("crew base {0} is not served by any flight")]
    UnusedCrewBase(Airport),
    #[error("invalid network parameters: {0}")]
    InvalidParams(String),
}

/// An immutable, validated flight schedule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlightSchedule {
    flights: Vec<Flight>,
    crew_bases: BTreeSet<Airport>,
    horizon: Minutes,
}

impl FlightSchedule {
    pub fn new(
        mut flights: Vec<Flight>,
        crew_bases: BTreeSet<Airport>,
        horizon: Minutes,
    ) -> Result<Self, ScheduleError> {
        if flights.is_empty() {
            return Err(ScheduleError::Empty);
        }
        if crew_bases.is_empty() {
            return Err(ScheduleError::NoCrewBases);
        }
        for flight in &flights {
            flight.validate()?;
        }
        flights.sort_by_key(|f| f.id);
        for (expected, flight) in flights.iter().enumerate() {
            if flight.id.index() != expected {
                return Err(ScheduleError::NonDenseIds {
                    expected: flights.len(),
                    found: flight.id,
                });
            }
        }
        for base in &crew_bases {
            let served = flights
                .iter()
                .any(|f| &f.departure_airport == base || &f.arrival_airport == base);
            if !served {
                return Err(ScheduleError::UnusedCrewBase(base.clone()));
            }
        }
        Ok(FlightSchedule {
            flights,
            crew_bases,
            horizon,
        })
    }

    pub fn flights(&self) -> &[Flight] {
        &self.flights
    }

    pub fn flight(&self, id: FlightId) -> Option<&Flight> {
        self.flights.get(id.index())
    }

    pub fn len(&self) -> usize {
        self.flights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flights.is_empty()
    }

    pub fn flight_ids(&self) -> impl Iterator<Item = FlightId> + '_ {
        self.flights.iter().map(|f| f.id)
    }

    pub fn crew_bases(&self) -> &BTreeSet<Airport> {
        &self.crew_bases
    }

    pub fn is_crew_base(&self, airport: &Airport) -> bool {
        self.crew_bases.contains(airport)
    }

    pub fn horizon(&self) -> Minutes {
        self.horizon
    }

    pub fn airports(&self) -> BTreeSet<&Airport> {
        self.flights
            .iter()
            .flat_map(|f| [&f.departure_airport, &f.arrival_airport])
            .collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct MetaFile {
    schedule: ScheduleMeta,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    manifest: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScheduleMeta {
    crew_bases: Vec<String>,
    horizon: Minutes,
}

/// Path of the sidecar holding crew bases and horizon for a schedule CSV:
/// `net.csv` pairs with `net.meta.toml`.
pub fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.toml")
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    id: u32,
    dep_airport: String,
    arr_airport: String,
    dep_time: Minutes,
    arr_time: Minutes,
    fleet: String,
}

/// Loads a schedule CSV and its `.meta.toml` sidecar.
pub fn load_schedule(path: &Path) -> Result<FlightSchedule, ScheduleError> {
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |source| ScheduleError::Io { path: p, source }
    };
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let parse_err = |line: u64, message: String| ScheduleError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(parse_err(
            1,
            format!("expected header `{}`", CSV_HEADER.join(",")),
        ));
    }

    let mut flights = Vec::new();
    for row in reader.deserialize::<CsvRow>() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        flights.push(Flight::new(
            row.id,
            row.dep_airport.as_str(),
            row.arr_airport.as_str(),
            row.dep_time,
            row.arr_time,
            row.fleet,
        ));
    }

    let meta_file = meta_path(path);
    let meta_text = fs::read_to_string(&meta_file).map_err(io_err(&meta_file))?;
    let meta: MetaFile = toml::from_str(&meta_text).map_err(|e| ScheduleError::Meta {
        path: meta_file.clone(),
        message: e.to_string(),
    })?;
    let bases = meta.schedule.crew_bases.into_iter().map(Airport::new).collect();
    FlightSchedule::new(flights, bases, meta.schedule.horizon)
}

/// Writes `schedule` as CSV to `path` plus the `.meta.toml` sidecar.
pub fn save_schedule(schedule: &FlightSchedule, path: &Path) -> Result<(), ScheduleError> {
    save_schedule_with_manifest(schedule, path, &BTreeMap::new())
}

/// Like [`save_schedule`], embedding `manifest` entries in the sidecar.
pub fn save_schedule_with_manifest(
    schedule: &FlightSchedule,
    path: &Path,
    manifest: &BTreeMap<String, String>,
) -> Result<(), ScheduleError> {
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |source| ScheduleError::Io { path: p, source }
    };
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| ScheduleError::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    };
    writer.write_record(CSV_HEADER).map_err(csv_err)?;
    for f in schedule.flights() {
        writer
            .write_record([
                f.id.to_string(),
                f.departure_airport.to_string(),
                f.arrival_airport.to_string(),
                f.departure_time.to_string(),
                f.arrival_time.to_string(),
                f.fleet.clone(),
            ])
            .map_err(csv_err)?;
    }
    let bytes = writer.into_inner().map_err(|e| ScheduleError::Io {
        path: path.to_path_buf(),
        source: e.into_error(),
    })?;
    fs::write(path, bytes).map_err(io_err(path))?;

    let meta = MetaFile {
        schedule: ScheduleMeta {
            crew_bases: schedule.crew_bases.iter().map(|b| b.to_string()).collect(),
            horizon: schedule.horizon,
        },
        manifest: manifest.clone(),
    };
    let meta_file = meta_path(path);
    let text = toml::to_string(&meta).map_err(|e| ScheduleError::Meta {
        path: meta_file.clone(),
        message: e.to_string(),
    })?;
    fs::write(&meta_file, text).map_err(io_err(&meta_file))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub n_flights: usize,
    pub n_airports: usize,
    pub n_hubs: usize,
    pub n_crew_bases: usize,
    pub horizon_days: usize,
    pub seed: u64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            n_flights: 50,
            n_airports: 8,
            n_hubs: 2,
            n_crew_bases: 2,
            horizon_days: 3,
            seed: 42,
        }
    }
}

impl NetworkParams {
    pub fn new(n_flights: usize, n_airports: usize, n_hubs: usize, n_crew_bases: usize) -> Self {
        NetworkParams {
            n_flights,
            n_airports,
            n_hubs,
            n_crew_bases,
            ..Default::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_horizon_days(mut self, days: usize) -> Self {
        self.horizon_days = days;
        self
    }

    fn validate(&self) -> Result<(), ScheduleError> {
        let fail = |msg: &str| Err(ScheduleError::InvalidParams(msg.to_string()));
        if self.n_hubs > self.n_airports {
            return fail("n_hubs exceeds n_airports");
        }
        if self.n_crew_bases > self.n_airports {
            return fail("n_crew_bases exceeds n_airports");
        }
        if self.n_flights == 0 {
            return Err(ScheduleError::Empty);
        }
        if self.n_airports < 2 {
            return fail("at least two airports are needed to generate flights");
        }
        if self.n_hubs == 0 {
            return fail("at least one hub is needed");
        }
        if self.n_crew_bases == 0 {
            return Err(ScheduleError::NoCrewBases);
        }
        if self.n_crew_bases > self.n_hubs {
            return fail("crew bases are chosen among hubs; n_crew_bases exceeds n_hubs");
        }
        if self.horizon_days == 0 {
            return fail("horizon_days must be at least 1");
        }
        if self.n_flights == 1 {
            return fail("a single flight cannot form a base-to-base rotation");
        }
        if self.n_flights % 2 == 1 && (self.n_hubs < 2 || self.n_airports < 3) {
            return fail("an odd flight count needs a triangle rotation (two hubs, three airports)");
        }
        Ok(())
    }
}

/// Rotation shapes produced by the generator. Each is itself a legal pairing
/// under the default rules, so every generated flight is coverable.
#[derive(Clone, Copy, Debug)]
enum Rotation {
    /// base -> X -> base (-> Y -> base), one duty.
    DayTrip { legs: usize },
    /// base -> X in the evening, X -> base the next morning.
    Overnight,
    /// base -> spoke -> other hub -> base, one duty.
    Triangle,
}

impl Rotation {
    fn len(self) -> usize {
        match self {
            Rotation::DayTrip { legs } => legs,
            Rotation::Overnight => 2,
            Rotation::Triangle => 3,
        }
    }
}

struct Draft {
    dep: usize,
    arr: usize,
    dep_time: Minutes,
    arr_time: Minutes,
    fleet: &'static str,
}

const FLEETS: [&str; 3] = ["A320", "B737", "E190"];

/// Generates a seeded hub-and-spoke schedule.
///
/// Hubs are `H01..`, spokes `S01..`; crew bases are the first `n_crew_bases`
/// hubs. Spokes are only served from hubs. Flights are laid out as aircraft
/// rotations that leave a crew base and return to it, with block times of
/// 50-120 min, sits of 35-75 min and overnight rests of 10-15 h, so arrivals
/// and departures interleave at every airport.
pub fn generate_network(params: &NetworkParams) -> Result<FlightSchedule, ScheduleError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, "network"));

    let hubs: Vec<Airport> = (1..=params.n_hubs)
        .map(|i| Airport::new(format!("H{i:02}")))
        .collect();
    let spokes: Vec<Airport> = (1..=params.n_airports - params.n_hubs)
        .map(|i| Airport::new(format!("S{i:02}")))
        .collect();
    // Airport index space: hubs first, then spokes.
    let airports: Vec<Airport> = hubs.iter().chain(spokes.iter()).cloned().collect();
    let n_hubs = hubs.len();

    let mut block = vec![vec![0; airports.len()]; airports.len()];
    for a in 0..airports.len() {
        for b in (a + 1)..airports.len() {
            let minutes = rng.gen_range(50..=120);
            block[a][b] = minutes;
            block[b][a] = minutes;
        }
    }

    let mut plan = Vec::new();
    let mut remaining = params.n_flights;
    if remaining % 2 == 1 {
        plan.push(Rotation::Triangle);
        remaining -= 3;
    }
    while remaining > 0 {
        let roll: f64 = rng.gen();
        let rotation = if remaining >= 4 && roll < 0.3 {
            Rotation::DayTrip { legs: 4 }
        } else if params.horizon_days >= 2 && roll >= 0.7 {
            Rotation::Overnight
        } else {
            Rotation::DayTrip { legs: 2 }
        };
        remaining -= rotation.len();
        plan.push(rotation);
    }
    plan.shuffle(&mut rng);
    if plan.len() < params.n_crew_bases {
        return Err(ScheduleError::InvalidParams(format!(
            "{} flights form only {} rotations, fewer than {} crew bases",
            params.n_flights,
            plan.len(),
            params.n_crew_bases
        )));
    }

    // Destinations reachable from a base: spokes, or other hubs when there are none.
    let destinations = |base: usize| -> Vec<usize> {
        if spokes.is_empty() {
            (0..n_hubs).filter(|&h| h != base).collect()
        } else {
            (n_hubs..airports.len()).collect()
        }
    };

    let mut drafts: Vec<Draft> = Vec::with_capacity(params.n_flights);
    for (i, rotation) in plan.iter().enumerate() {
        let base = if i < params.n_crew_bases {
            i
        } else {
            rng.gen_range(0..params.n_crew_bases)
        };
        let fleet = FLEETS[rng.gen_range(0..FLEETS.len())];
        match *rotation {
            Rotation::DayTrip { legs } => {
                let day = rng.gen_range(0..params.horizon_days) as Minutes;
                let mut t = day * MINUTES_PER_DAY + rng.gen_range(300..=600);
                let dests = destinations(base);
                let mut at = base;
                for leg in 0..legs {
                    let to = if leg % 2 == 0 {
                        dests[rng.gen_range(0..dests.len())]
                    } else {
                        base
                    };
                    let arr = t + block[at][to];
                    drafts.push(Draft {
                        dep: at,
                        arr: to,
                        dep_time: t,
                        arr_time: arr,
                        fleet,
                    });
                    at = to;
                    t = arr + rng.gen_range(35..=75);
                }
            }
            Rotation::Overnight => {
                let day = rng.gen_range(0..params.horizon_days - 1) as Minutes;
                let dests = destinations(base);
                let to = dests[rng.gen_range(0..dests.len())];
                let out_dep = day * MINUTES_PER_DAY + rng.gen_range(960..=1140);
                let out_arr = out_dep + block[base][to];
                let back_dep = out_arr + rng.gen_range(600..=900);
                drafts.push(Draft {
                    dep: base,
                    arr: to,
                    dep_time: out_dep,
                    arr_time: out_arr,
                    fleet,
                });
                drafts.push(Draft {
                    dep: to,
                    arr: base,
                    dep_time: back_dep,
                    arr_time: back_dep + block[to][base],
                    fleet,
                });
            }
            Rotation::Triangle => {
                let other_hubs: Vec<usize> = (0..n_hubs).filter(|&h| h != base).collect();
                let via_hub = other_hubs[rng.gen_range(0..other_hubs.len())];
                let first: Vec<usize> = (0..airports.len())
                    .filter(|&a| a != base && a != via_hub)
                    .collect();
                let first = first[rng.gen_range(0..first.len())];
                let day = rng.gen_range(0..params.horizon_days) as Minutes;
                let mut t = day * MINUTES_PER_DAY + rng.gen_range(300..=600);
                let mut at = base;
                for to in [first, via_hub, base] {
                    let arr = t + block[at][to];
                    drafts.push(Draft {
                        dep: at,
                        arr: to,
                        dep_time: t,
                        arr_time: arr,
                        fleet,
                    });
                    at = to;
                    t = arr + rng.gen_range(35..=75);
                }
            }
        }
    }

    // Stable sort keeps generation order among identical keys.
    drafts.sort_by_key(|d| (d.dep_time, d.arr_time, d.dep, d.arr));
    let flights = drafts
        .into_iter()
        .enumerate()
        .map(|(id, d)| {
            Flight::new(
                id as u32,
                airports[d.dep].clone(),
                airports[d.arr].clone(),
                d.dep_time,
                d.arr_time,
                d.fleet,
            )
        })
        .collect();
    let bases = hubs[..params.n_crew_bases].iter().cloned().collect();
    FlightSchedule::new(
        flights,
        bases,
        params.horizon_days as Minutes * MINUTES_PER_DAY,
    )
}
