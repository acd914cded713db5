//! Depth-first IFS heuristic with variable backtracking.
//!
//! The search walks the duty graph of the whole schedule from each crew
//! base. The first legal pairing found that covers a not-yet-covered flight
//! is accepted, and the search then backtracks by a step length taken in
//! turn from the configured schedule before continuing. Passes over all
//! bases repeat until everything is covered, a pass adds nothing, or time
//! runs out.
//!
//! A child is only entered when some continuation within the remaining
//! duty budget can still return to base with a new flight on the path.
//! The test follows graph edges only, so it never cuts off an acceptable
//! pairing.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::derive_seed;
use crate::ipdch::{IfsResult, IterationRecord, TerminatedBy};
use crate::pairgen::{DutyGraph, PairingSet};
use crate::rules::{check_pairing, CostModel, Pairing, RuleError, RuleSet};
use crate::schedule::{Airport, FlightId, FlightSchedule};

#[derive(Clone, Debug, PartialEq)]
pub struct EdfsConfig {
    pub seed: u64,
    /// Duty levels to pop after each acceptance, used cyclically.
    pub backtrack_schedule: Vec<usize>,
    pub time_limit: Duration,
}

impl Default for EdfsConfig {
    fn default() -> Self {
        EdfsConfig {
            seed: 0,
            backtrack_schedule: vec![1, 2, 4],
            time_limit: Duration::from_secs(600),
        }
    }
}

impl EdfsConfig {
    pub fn new(seed: u64) -> Self {
        EdfsConfig {
            seed,
            ..EdfsConfig::default()
        }
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = limit;
        self
    }

    pub fn validate(&self) -> Result<(), EdfsError> {
        if self.backtrack_schedule.is_empty() || self.backtrack_schedule.contains(&0) {
            return Err(EdfsError::InvalidConfig(
                "backtrack steps must be a non-empty list of values >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EdfsError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Rules(#[from] RuleError),
}

struct Frame {
    duty: usize,
    children: Vec<usize>,
    next: usize,
}

struct Search<'a, 's> {
    graph: &'a DutyGraph<'s>,
    schedule: &'s FlightSchedule,
    rules: &'s RuleSet,
    cm: &'a CostModel,
    cfg: &'a EdfsConfig,
    start: Instant,
    covered: Vec<bool>,
    n_covered: usize,
    ifs: PairingSet,
    trace: Vec<IterationRecord>,
    acceptances: usize,
    nodes: u64,
    out_of_time: bool,
    bases: Vec<Airport>,
    successors: Vec<Option<Vec<usize>>>,
    /// `(base, duty, budget)` -> can close a pairing at base within `budget` duties.
    closes: Vec<Option<bool>>,
    /// `(base, duty, budget)` -> can close with a new flight; `Some(false)` is final
    /// because coverage only grows, `Some(true)` holds for one acceptance
    /// count.
    novel: Vec<Option<(bool, usize)>>,
}

impl Search<'_, '_> {
    fn time_up(&mut self) -> bool {
        if !self.out_of_time && self.nodes % 256 == 1 {
            self.out_of_time = self.start.elapsed() >= self.cfg.time_limit;
        }
        self.out_of_time
    }

    fn successors(&mut self, duty: usize) -> Vec<usize> {
        if self.successors[duty].is_none() {
            self.successors[duty] = Some(self.graph.successors(duty));
        }
        self.successors[duty].clone().expect("filled above")
    }

    fn slot(&self, duty: usize, budget: usize, base: &Airport) -> usize {
        let base_index = self
            .bases
            .iter()
            .position(|b| b == base)
            .expect("base of the schedule");
        ((base_index * self.graph.len()) + duty) * (self.rules.max_duties_per_pairing + 1) + budget
    }

    fn at_base(&self, duty: usize, base: &Airport) -> bool {
        self.graph.duty(duty).end_airport() == base
    }

    fn may_extend(&self, duty: usize, base: &Airport) -> bool {
        !(self.at_base(duty, base) && self.rules.forbid_overnight_at_base_city)
    }

    fn has_uncovered(&self, duty: usize) -> bool {
        self.graph
            .duty(duty)
            .flights()
            .iter()
            .any(|id| !self.covered[id.index()])
    }

    /// Whether a path entering `duty` with `budget` duties left (this one
    /// included) can end at `base`.
    fn closes(&mut self, duty: usize, budget: usize, base: &Airport) -> bool {
        let slot = self.slot(duty, budget, base);
        if let Some(known) = self.closes[slot] {
            return known;
        }
        let result = self.at_base(duty, base)
            || (budget > 1
                && self.may_extend(duty, base)
                && self
                    .successors(duty)
                    .into_iter()
                    .any(|next| self.closes(next, budget - 1, base)));
        self.closes[slot] = Some(result);
        result
    }

    /// Whether a path entering `duty` with `budget` duties left can end at
    /// `base` having passed an uncovered flight from here on.
    fn novel(&mut self, duty: usize, budget: usize, base: &Airport) -> bool {
        let slot = self.slot(duty, budget, base);
        match self.novel[slot] {
            Some((false, _)) => return false,
            Some((true, stamp)) if stamp == self.acceptances => return true,
            _ => {}
        }
        let result = (self.has_uncovered(duty) && self.closes(duty, budget, base))
            || (budget > 1
                && self.may_extend(duty, base)
                && self
                    .successors(duty)
                    .into_iter()
                    .any(|next| self.novel(next, budget - 1, base)));
        self.novel[slot] = Some((result, self.acceptances));
        result
    }

    /// Children of the path's last duty that can still lead to an
    /// acceptable pairing, in node order.
    fn children(&mut self, path: &[Frame], base: &Airport) -> Vec<usize> {
        let last = path.last().expect("non-empty path").duty;
        let max = self.rules.max_duties_per_pairing;
        if path.len() >= max || !self.may_extend(last, base) {
            return Vec::new();
        }
        let budget = max - path.len();
        let path_novel = path.iter().any(|f| self.has_uncovered(f.duty));
        self.successors(last)
            .into_iter()
            .filter(|&next| {
                if path_novel {
                    self.closes(next, budget, base)
                } else {
                    self.novel(next, budget, base)
                }
            })
            .collect()
    }

    /// Accepts the path as a pairing if it is legal and covers a new flight.
    fn try_accept(&mut self, path: &[Frame], base: &Airport) -> bool {
        let graph = self.graph;
        let novel = path.iter().any(|f| {
            graph
                .duty(f.duty)
                .flights()
                .iter()
                .any(|id| !self.covered[id.index()])
        });
        if !novel || graph.duty(path.last().expect("non-empty").duty).end_airport() != base {
            return false;
        }
        let duties = path.iter().map(|f| graph.duty(f.duty).clone()).collect();
        let Ok(pairing) = Pairing::assemble(duties, base.clone(), self.cm) else {
            return false;
        };
        if !check_pairing(&pairing, self.schedule, self.rules).is_ok_and(|v| v.is_legal()) {
            return false;
        }
        let fresh: Vec<FlightId> = pairing
            .flights()
            .filter(|id| !self.covered[id.index()])
            .collect();
        for id in &fresh {
            self.covered[id.index()] = true;
        }
        self.n_covered += fresh.len();
        self.acceptances += 1;
        let added = usize::from(self.ifs.insert(pairing));
        self.trace.push(IterationRecord {
            iteration: self.acceptances,
            elapsed: self.start.elapsed().as_secs_f64(),
            drawn: 0,
            drawn_flights: Vec::new(),
            covered_in_subset: fresh.len(),
            generated: 0,
            selected: 1,
            added,
            remaining: self.covered.len() - self.n_covered,
            uncovered: self.covered.len() - self.n_covered,
            ifs_len: self.ifs.len(),
            refreshed: false,
            ip_objective: None,
            lp_cost: None,
        });
        true
    }

    /// One depth-first walk from `root`.
    fn walk(&mut self, root: usize, base: &Airport) {
        if !self.novel(root, self.rules.max_duties_per_pairing, base) {
            return;
        }
        let mut path: Vec<Frame> = Vec::new();
        let mut entering = Some(root);
        while self.n_covered < self.covered.len() {
            if let Some(duty) = entering.take() {
                self.nodes += 1;
                if self.time_up() {
                    return;
                }
                path.push(Frame {
                    duty,
                    children: Vec::new(),
                    next: 0,
                });
                if self.try_accept(&path, base) {
                    let step = self.cfg.backtrack_schedule
                        [(self.acceptances - 1) % self.cfg.backtrack_schedule.len()];
                    path.truncate(path.len().saturating_sub(step));
                    if path.is_empty() {
                        return;
                    }
                    continue;
                }
                let children = self.children(&path, base);
                path.last_mut().expect("just pushed").children = children;
            }
            let Some(top) = path.last_mut() else {
                return;
            };
            if top.next < top.children.len() {
                entering = Some(top.children[top.next]);
                top.next += 1;
            } else {
                path.pop();
                if path.is_empty() {
                    return;
                }
            }
        }
    }
}

/// Builds an IFS for the whole schedule by depth-first search.
pub fn run_enhanced_dfs(
    schedule: &FlightSchedule,
    rules: &RuleSet,
    cm: &CostModel,
    cfg: &EdfsConfig,
) -> Result<IfsResult, EdfsError> {
    cfg.validate()?;
    rules.validate()?;
    cm.validate()?;
    let start = Instant::now();
    let all: Vec<FlightId> = schedule.flight_ids().collect();
    let graph = DutyGraph::build(schedule, rules, &all);

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "root-order"));
    let mut roots: Vec<(Airport, usize)> = schedule
        .crew_bases()
        .iter()
        .flat_map(|b| graph.base_out(b).into_iter().map(move |d| (b.clone(), d)))
        .collect();
    roots.shuffle(&mut rng);
    let slots = schedule.crew_bases().len() * graph.len() * (rules.max_duties_per_pairing + 1);

    let mut search = Search {
        graph: &graph,
        schedule,
        rules,
        cm,
        cfg,
        start,
        covered: vec![false; schedule.len()],
        n_covered: 0,
        ifs: PairingSet::new(),
        trace: Vec::new(),
        acceptances: 0,
        nodes: 0,
        out_of_time: false,
        bases: schedule.crew_bases().iter().cloned().collect(),
        successors: vec![None; graph.len()],
        closes: vec![None; slots],
        novel: vec![None; slots],
    };

    let terminated_by = loop {
        let before = search.acceptances;
        for (base, root) in &roots {
            if search.n_covered == search.covered.len() || search.out_of_time {
                break;
            }
            search.walk(*root, base);
        }
        if search.n_covered == search.covered.len() {
            break TerminatedBy::FeasibilityPoint;
        }
        if search.out_of_time {
            break TerminatedBy::WallClock;
        }
        if search.acceptances == before {
            break TerminatedBy::Exhausted;
        }
    };
    log::info!(
        "enhanced dfs: {} pairings, {} nodes, {} uncovered, {:?}",
        search.ifs.len(),
        search.nodes,
        search.covered.len() - search.n_covered,
        terminated_by
    );

    let uncovered = all
        .iter()
        .copied()
        .filter(|id| !search.covered[id.index()])
        .collect();
    Ok(IfsResult {
        ifs: search.ifs,
        trace: search.trace,
        terminated_by,
        uncovered,
        runtime: start.elapsed(),
    })
}
