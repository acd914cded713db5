//! Text format for pairing sets: one `base:fid,fid,...;cost` line per
//! pairing, with `#` comment lines for the manifest.

use std::fmt::Write as _;

use crewseed_core::pairgen::PairingSet;
use crewseed_core::rules::{CostModel, Pairing, RuleSet};
use crewseed_core::schedule::{Airport, FlightId, FlightSchedule};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PairingFileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Illegal {
        line: usize,
        source: crewseed_core::rules::RuleError,
    },
}

/// Renders `set` in file order after the `header` comment block.
pub fn write_pairings(set: &PairingSet, header: &str) -> String {
    let mut out = header.to_string();
    for p in set {
        let _ = writeln!(out, "{p};{:.2}", p.cost());
    }
    out
}

/// A parsed pairing line before it is checked against a schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingLine {
    /// 1-based line number in the file.
    pub line: usize,
    pub base: Airport,
    pub flights: Vec<FlightId>,
    pub cost: f64,
}

pub fn parse_lines(text: &str) -> Result<Vec<PairingLine>, PairingFileError> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let err = |message: &str| PairingFileError::Parse {
            line,
            message: format!("{message} in `{raw}`"),
        };
        let (body, cost) = raw.split_once(';').ok_or_else(|| err("missing `;cost`"))?;
        let (base, ids) = body.split_once(':').ok_or_else(|| err("missing `base:`"))?;
        if base.is_empty() {
            return Err(err("empty base"));
        }
        let flights = ids
            .split(',')
            .map(|s| s.trim().parse::<u32>().map(FlightId))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| err("bad flight id"))?;
        let cost = cost.trim().parse::<f64>().map_err(|_| err("bad cost"))?;
        lines.push(PairingLine {
            line,
            base: Airport::new(base),
            flights,
            cost,
        });
    }
    Ok(lines)
}

/// Parses a pairing file and rebuilds each pairing against `schedule`,
/// rejecting illegal ones. Costs are recomputed from `cm`.
pub fn read_pairings(
    text: &str,
    schedule: &FlightSchedule,
    rules: &RuleSet,
    cm: &CostModel,
) -> Result<PairingSet, PairingFileError> {
    let mut set = PairingSet::new();
    for parsed in parse_lines(text)? {
        let line = parsed.line;
        let pairing = Pairing::from_flights(schedule, &parsed.flights, parsed.base, rules, cm)
            .map_err(|source| PairingFileError::Illegal { line, source })?;
        set.insert(pairing);
    }
    Ok(set)
}
