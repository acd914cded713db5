//! Divide-and-cover IFS generation: draw `K` random flights, enumerate all
//! their legal pairings, keep the IP-optimal subset, repeat until every
//! flight is covered.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cpop::{build_instance, solve_ip, to_cents, CpopError, IncrementalLp, IpStatus};
use crate::derive_seed;
use crate::pairgen::{pairing_gen, Caps, PairingSet};
use crate::rules::{CostModel, RuleError, RuleSet};
use crate::schedule::{FlightId, FlightSchedule};

/// When to stop the loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Termination {
    /// At the end of the first iteration after which every flight is
    /// covered.
    FeasibilityPoint,
    /// Before starting an iteration once this much time has passed.
    WallClock(Duration),
    /// After this many iterations.
    Iterations(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IpdchConfig {
    /// Flights drawn per iteration.
    pub k: usize,
    pub seed: u64,
    pub termination: Termination,
    /// Time limit for each sub-instance IP; `None` solves to optimality.
    pub ip_time_limit: Option<Duration>,
    pub caps: Caps,
    /// Full refresh cycles without new coverage tolerated before a
    /// feasibility-point run gives up.
    pub stall_cycles: usize,
    /// Hard runtime cap checked before each iteration, whatever the
    /// termination criterion.
    pub max_runtime: Option<Duration>,
}

impl IpdchConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        IpdchConfig {
            k,
            seed,
            termination: Termination::FeasibilityPoint,
            ip_time_limit: None,
            caps: Caps::default(),
            stall_cycles: 20,
            max_runtime: None,
        }
    }

    /// `min(700, n_flights)`.
    pub fn default_k(n_flights: usize) -> usize {
        n_flights.min(700)
    }

    pub fn with_termination(mut self, termination: Termination) -> Self {
        self.termination = termination;
        self
    }

    pub fn with_max_runtime(mut self, cap: Option<Duration>) -> Self {
        self.max_runtime = cap;
        self
    }

    pub fn with_ip_time_limit(mut self, limit: Option<Duration>) -> Self {
        self.ip_time_limit = limit;
        self
    }

    pub fn validate(&self) -> Result<(), IpdchError> {
        if self.k == 0 {
            return Err(IpdchError::InvalidConfig("K must be at least 1".into()));
        }
        if self.stall_cycles == 0 {
            return Err(IpdchError::InvalidConfig(
                "stall_cycles must be at least 1".into(),
            ));
        }
        if self.termination == Termination::Iterations(0) {
            return Err(IpdchError::InvalidConfig(
                "iteration limit must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One loop iteration. All counts refer to the state at iteration end.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    /// Seconds since the start of the run.
    pub elapsed: f64,
    /// Flights drawn (`K`, or fewer when the pool ran low).
    pub drawn: usize,
    /// The drawn flights, sorted.
    pub drawn_flights: Vec<FlightId>,
    /// Drawn flights covered by at least one enumerated pairing.
    pub covered_in_subset: usize,
    /// Pairings enumerated for the drawn flights.
    pub generated: usize,
    /// Pairings picked by the IP.
    pub selected: usize,
    /// Selected pairings that were new to the IFS.
    pub added: usize,
    /// Flights left in the draw pool.
    pub remaining: usize,
    /// Schedule flights not covered by the IFS.
    pub uncovered: usize,
    /// Length of the IFS, so `ifs.prefix(ifs_len)` is the snapshot.
    pub ifs_len: usize,
    /// The pool was refilled with every flight after this iteration.
    pub refreshed: bool,
    /// Sub-instance IP objective in currency units.
    pub ip_objective: Option<f64>,
    /// LP-cost of the IFS snapshot, when computed.
    pub lp_cost: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminatedBy {
    FeasibilityPoint,
    WallClock,
    Iterations,
    /// The search had nothing left to try.
    Exhausted,
}

impl TerminatedBy {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminatedBy::FeasibilityPoint => "feasibility",
            TerminatedBy::WallClock => "wall-clock",
            TerminatedBy::Iterations => "iterations",
            TerminatedBy::Exhausted => "exhausted",
        }
    }
}

/// An IFS with its per-iteration history.
#[derive(Clone, Debug)]
pub struct IfsResult {
    pub ifs: PairingSet,
    pub trace: Vec<IterationRecord>,
    pub terminated_by: TerminatedBy,
    pub uncovered: Vec<FlightId>,
    pub runtime: Duration,
}

impl IfsResult {
    pub fn is_feasible(&self) -> bool {
        self.uncovered.is_empty()
    }

    /// First iteration whose end state covers every flight.
    pub fn feasibility_record(&self) -> Option<&IterationRecord> {
        self.trace.iter().find(|r| r.uncovered == 0)
    }
}

#[derive(Debug, Error)]
pub enum IpdchError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error(transparent)]
    Solver(#[from] CpopError),
    #[error("{} flight(s) admit no legal pairing: {}", flights.len(), list(flights))]
    Uncoverable {
        flights: Vec<FlightId>,
        partial: Box<IfsResult>,
    },
    #[error("no iteration had finished {at:.3} s into the run")]
    SnapshotTooEarly { at: f64 },
}

fn list(flights: &[FlightId]) -> String {
    let shown: Vec<String> = flights.iter().take(20).map(|f| f.to_string()).collect();
    if flights.len() > 20 {
        format!("{} ...", shown.join(", "))
    } else {
        shown.join(", ")
    }
}

/// Runs the divide-and-cover loop over the whole schedule.
pub fn run_ipdch(
    schedule: &FlightSchedule,
    rules: &RuleSet,
    cm: &CostModel,
    cfg: &IpdchConfig,
) -> Result<IfsResult, IpdchError> {
    cfg.validate()?;
    rules.validate()?;
    cm.validate()?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "flight-draw"));

    let global: Vec<FlightId> = schedule.flight_ids().collect();
    let mut remaining: BTreeSet<FlightId> = global.iter().copied().collect();
    let mut ifs = PairingSet::new();
    let mut trace = Vec::new();
    let mut stalled_cycles = 0;
    let mut covered_at_cycle_start = 0;

    let terminated_by = loop {
        match cfg.termination {
            Termination::WallClock(limit) if start.elapsed() >= limit => {
                break TerminatedBy::WallClock;
            }
            Termination::Iterations(n) if trace.len() >= n => break TerminatedBy::Iterations,
            _ => {}
        }
        if cfg.max_runtime.is_some_and(|cap| start.elapsed() >= cap) {
            break TerminatedBy::WallClock;
        }
        let iteration = trace.len() + 1;

        // Draw K flights, or take the whole pool and refresh afterwards.
        let mut pool: Vec<FlightId> = remaining.iter().copied().collect();
        let flag = pool.len() <= cfg.k;
        let mut drawn = if flag {
            pool
        } else {
            pool.partial_shuffle(&mut rng, cfg.k).0.to_vec()
        };
        drawn.sort_unstable();
        for f in &drawn {
            remaining.remove(f);
        }

        let generated = pairing_gen(schedule, &drawn, rules, cm, cfg.caps);
        if generated.is_truncated() {
            log::warn!(
                "iteration {iteration}: pairing enumeration truncated at base(s) {:?}",
                generated.truncated_bases()
            );
        }
        let rows: Vec<FlightId> = generated.covered_flights().iter().copied().collect();

        let mut selected = 0;
        let mut added = 0;
        let mut ip_objective = None;
        if !generated.is_empty() {
            let inst = build_instance(&rows, &generated, cm)?;
            let solution = solve_ip(&inst, cfg.ip_time_limit)?;
            if let IpStatus::FeasibleTimeout { gap } = solution.status {
                log::warn!("iteration {iteration}: IP time limit hit, gap {gap:.2}");
            }
            ip_objective = solution.objective_value();
            for j in solution.selected() {
                selected += 1;
                if ifs.insert(generated.pairings()[j].clone()) {
                    added += 1;
                }
            }
        }

        // Drawn flights no enumerated pairing covers go back to the pool.
        for f in drawn.iter().filter(|f| !generated.covered_flights().contains(f)) {
            remaining.insert(*f);
        }
        // A draw in which nothing was coverable would repeat forever on a
        // pool of flights that only pair with flights outside it.
        let refreshed = flag || rows.is_empty();
        if refreshed {
            remaining = global.iter().copied().collect();
        }

        let covered = ifs.covered_flights().len();
        let record = IterationRecord {
            iteration,
            elapsed: start.elapsed().as_secs_f64(),
            drawn: drawn.len(),
            drawn_flights: drawn.clone(),
            covered_in_subset: rows.len(),
            generated: generated.len(),
            selected,
            added,
            remaining: remaining.len(),
            uncovered: global.len() - covered,
            ifs_len: ifs.len(),
            refreshed,
            ip_objective,
            lp_cost: None,
        };
        log::info!(
            "iteration={} elapsed={:.3} drawn={} generated={} selected={} added={} remaining={} uncovered={} ifs={}",
            record.iteration,
            record.elapsed,
            record.drawn,
            record.generated,
            record.selected,
            record.added,
            record.remaining,
            record.uncovered,
            record.ifs_len
        );
        let uncovered = record.uncovered;
        trace.push(record);

        if cfg.termination == Termination::FeasibilityPoint {
            if uncovered == 0 {
                break TerminatedBy::FeasibilityPoint;
            }
            if refreshed {
                if covered == covered_at_cycle_start {
                    stalled_cycles += 1;
                } else {
                    stalled_cycles = 0;
                }
                covered_at_cycle_start = covered;
                if stalled_cycles >= cfg.stall_cycles {
                    let flights = uncovered_flights(schedule, &ifs);
                    let partial = IfsResult {
                        ifs,
                        trace,
                        terminated_by: TerminatedBy::Exhausted,
                        uncovered: flights.clone(),
                        runtime: start.elapsed(),
                    };
                    return Err(IpdchError::Uncoverable {
                        flights,
                        partial: Box::new(partial),
                    });
                }
            }
        }
    };

    let uncovered = uncovered_flights(schedule, &ifs);
    Ok(IfsResult {
        ifs,
        trace,
        terminated_by,
        uncovered,
        runtime: start.elapsed(),
    })
}

fn uncovered_flights(schedule: &FlightSchedule, ifs: &PairingSet) -> Vec<FlightId> {
    schedule
        .flight_ids()
        .filter(|f| !ifs.covered_flights().contains(f))
        .collect()
}

/// The IFS as of the last iteration that finished no later than `at`
/// seconds into the run.
pub fn snapshot_ifs(result: &IfsResult, at: f64) -> Result<PairingSet, IpdchError> {
    result
        .trace
        .iter()
        .take_while(|r| r.elapsed <= at)
        .last()
        .map(|r| result.ifs.prefix(r.ifs_len))
        .ok_or(IpdchError::SnapshotTooEarly { at })
}

/// The IFS as it stood at the end of 1-based `iteration`.
pub fn snapshot_at_iteration(result: &IfsResult, iteration: usize) -> Option<PairingSet> {
    result
        .trace
        .get(iteration.checked_sub(1)?)
        .map(|r| result.ifs.prefix(r.ifs_len))
}

/// Fills `lp_cost` for every iteration whose snapshot covers the whole
/// schedule. Snapshots only grow, so each LP starts from the previous
/// optimal basis.
pub fn annotate_lp_costs(
    result: &mut IfsResult,
    schedule: &FlightSchedule,
    cm: &CostModel,
) -> Result<(), IpdchError> {
    let rows: Vec<FlightId> = schedule.flight_ids().collect();
    let Some(first) = result.trace.iter().position(|r| r.uncovered == 0) else {
        return Ok(());
    };
    let base = build_instance(&rows, &result.ifs.prefix(result.trace[first].ifs_len), cm)?;
    let mut lp = IncrementalLp::from_instance(&base);
    let mut loaded = result.trace[first].ifs_len;
    let mut cost = lp.solve(1e-6)?.objective;
    for record in &mut result.trace[first..] {
        if record.ifs_len > loaded {
            for p in &result.ifs.pairings()[loaded..record.ifs_len] {
                let col = p.flights().map(|f| f.index()).collect();
                lp.add_column(col, to_cents(cm.price(p).total()))?;
            }
            loaded = record.ifs_len;
            cost = lp.solve(1e-6)?.objective;
        }
        record.lp_cost = cost;
    }
    Ok(())
}
