//! Quality measures of a pairing set: coverage, LP-cost and the
//! search-freedom proxies (pairing count and mean coverage multiplicity).

use std::fmt::Write as _;
use std::time::Duration;

use thiserror::Error;

use crate::cpop::{build_instance, solve_lp, CpopError, LpStatus};
use crate::pairgen::PairingSet;
use crate::rules::{check_pairing, CostModel, RuleError, RuleSet, Violation};
use crate::schedule::{FlightId, FlightSchedule};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("pairing {index} ({pairing}) is illegal: {}", list(violations))]
    IllegalPairing {
        index: usize,
        pairing: String,
        violations: Vec<Violation>,
    },
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error(transparent)]
    Solver(#[from] CpopError),
}

fn list(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Clone, Debug, PartialEq)]
pub struct IfsReport {
    pub n_pairings: usize,
    /// LP optimum over all schedule flights, deadhead term included;
    /// `None` unless every flight is covered.
    pub lp_cost: Option<f64>,
    /// The pairing-cost part of `lp_cost` alone.
    pub lp_cost_without_deadheads: Option<f64>,
    pub uncovered: Vec<FlightId>,
    /// `sum_i (sum_j a_ij x_j - 1)` at the LP optimum.
    pub deadhead_count_at_lp: Option<f64>,
    /// Mean over flights of the number of pairings covering the flight.
    pub mean_coverage_multiplicity: f64,
    pub generation_runtime: Option<Duration>,
}

impl IfsReport {
    pub fn is_feasible(&self) -> bool {
        self.uncovered.is_empty()
    }

    pub fn with_runtime(mut self, runtime: Duration) -> Self {
        self.generation_runtime = Some(runtime);
        self
    }

    /// `key: value` lines. The runtime line is left out when
    /// `include_runtime` is false so the text depends only on the inputs.
    pub fn to_text(&self, include_runtime: bool) -> String {
        let opt = |v: Option<f64>, digits: usize| match v {
            Some(v) => format!("{v:.digits$}"),
            None => "none".to_string(),
        };
        let mut out = String::new();
        let _ = writeln!(out, "feasible: {}", self.is_feasible());
        let _ = writeln!(out, "n_pairings: {}", self.n_pairings);
        let _ = writeln!(out, "lp_cost: {}", opt(self.lp_cost, 2));
        let _ = writeln!(
            out,
            "lp_cost_without_deadheads: {}",
            opt(self.lp_cost_without_deadheads, 2)
        );
        let _ = writeln!(
            out,
            "deadhead_count_at_lp: {}",
            opt(self.deadhead_count_at_lp, 4)
        );
        let _ = writeln!(
            out,
            "mean_coverage_multiplicity: {:.4}",
            self.mean_coverage_multiplicity
        );
        let uncovered: Vec<String> = self.uncovered.iter().map(|f| f.to_string()).collect();
        let _ = writeln!(out, "uncovered_count: {}", self.uncovered.len());
        let _ = writeln!(out, "uncovered: [{}]", uncovered.join(","));
        if include_runtime {
            let _ = writeln!(
                out,
                "generation_runtime_secs: {}",
                opt(self.generation_runtime.map(|d| d.as_secs_f64()), 3)
            );
        }
        out
    }
}

/// Schedule flights no pairing in `ifs` covers, in id order.
pub fn coverage_check(ifs: &PairingSet, schedule: &FlightSchedule) -> Vec<FlightId> {
    schedule
        .flight_ids()
        .filter(|f| !ifs.covered_flights().contains(f))
        .collect()
}

/// Rechecks every pairing and evaluates the set against the whole
/// schedule.
pub fn evaluate_ifs(
    ifs: &PairingSet,
    schedule: &FlightSchedule,
    rules: &RuleSet,
    cm: &CostModel,
) -> Result<IfsReport, MetricsError> {
    for (index, p) in ifs.iter().enumerate() {
        let verdict = check_pairing(p, schedule, rules).map_err(RuleError::from)?;
        if !verdict.is_legal() {
            return Err(MetricsError::IllegalPairing {
                index,
                pairing: p.to_string(),
                violations: verdict.into_violations(),
            });
        }
    }
    let uncovered = coverage_check(ifs, schedule);
    let n_flights = schedule.len();
    let total_coverage: usize = ifs.iter().map(|p| p.n_flights()).sum();
    let mean_coverage_multiplicity = if n_flights == 0 {
        0.0
    } else {
        total_coverage as f64 / n_flights as f64
    };

    let (mut lp_cost, mut lp_cost_without_deadheads, mut deadhead_count_at_lp) =
        (None, None, None);
    if uncovered.is_empty() {
        let rows: Vec<FlightId> = schedule.flight_ids().collect();
        let inst = build_instance(&rows, ifs, cm)?;
        let lp = solve_lp(&inst, 1e-6)?;
        if lp.status == LpStatus::Optimal {
            let pairing_cents: f64 = lp
                .x
                .iter()
                .zip(inst.costs())
                .map(|(&x, &c)| x * c as f64)
                .sum();
            let activity: f64 = lp
                .x
                .iter()
                .enumerate()
                .map(|(j, &x)| x * inst.column(j).len() as f64)
                .sum();
            lp_cost = lp.objective;
            lp_cost_without_deadheads = Some(pairing_cents / 100.0);
            deadhead_count_at_lp = Some(activity - n_flights as f64);
        }
    }

    Ok(IfsReport {
        n_pairings: ifs.len(),
        lp_cost,
        lp_cost_without_deadheads,
        uncovered,
        deadhead_count_at_lp,
        mean_coverage_multiplicity,
        generation_runtime: None,
    })
}
