//! The set-covering crew pairing model, its LP relaxation and exact IP.
//!
//! Costs are held in integer cents. For a selection `x` the objective is
//!
//! ```text
//! f(x) = sum_j c_j x_j + (sum_i (sum_j a_ij x_j - 1)) * P_Dhd
//! ```
//!
//! including the constant `-F * P_Dhd`, so an exact partition pays no
//! deadhead term and every extra coverage of a flight pays `P_Dhd` once.
//! Internally the solvers use the equivalent column weights
//! `w_j = c_j + P_Dhd * |column j|`.

mod branch;
pub mod dump;
mod simplex;

use std::collections::HashMap;
use std::time::Duration;

use thiserror::Error;

use crate::pairgen::PairingSet;
use crate::rules::CostModel;
use crate::schedule::FlightId;

use simplex::CoverSimplex;

/// Money in integer cents.
pub type Cents = i64;

/// Rounds a currency amount to the nearest cent.
pub fn to_cents(amount: f64) -> Cents {
    (amount * 100.0).round() as Cents
}

/// Converts cents back to currency units.
pub fn from_cents(cents: Cents) -> f64 {
    cents as f64 / 100.0
}

#[derive(Debug, Error)]
pub enum CpopError {
    #[error("column {0} covers no row")]
    EmptyColumn(usize),
    #[error("column {column} refers to row {row}, but the instance has {n_rows} rows")]
    RowOutOfRange {
        column: usize,
        row: usize,
        n_rows: usize,
    },
    #[error("column {column} has negative or non-finite cost {cost}")]
    NegativeCost { column: usize, cost: Cents },
    #[error("deadhead penalty must be non-negative, got {0}")]
    NegativePenalty(Cents),
    #[error("expected a vector of length {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("pairing {pairing} covers flight {flight}, which is not a row of the instance")]
    ForeignFlight { pairing: usize, flight: FlightId },
    #[error("simplex iteration limit reached after {0} pivots")]
    IterationLimit(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("malformed instance dump, line {line}: {message}")]
    Dump { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A set-covering instance: rows are flights, columns are pairings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CpopInstance {
    n_rows: usize,
    columns: Vec<Vec<u32>>,
    costs: Vec<Cents>,
    deadhead_penalty: Cents,
    row_flights: Vec<FlightId>,
}

impl CpopInstance {
    /// Builds an instance from row indices per column. Rows within a column
    /// are sorted and deduplicated.
    pub fn new(
        n_rows: usize,
        columns: Vec<Vec<usize>>,
        costs: Vec<Cents>,
        deadhead_penalty: Cents,
    ) -> Result<Self, CpopError> {
        let row_flights = (0..n_rows as u32).map(FlightId).collect();
        Self::with_rows(row_flights, columns, costs, deadhead_penalty)
    }

    fn with_rows(
        row_flights: Vec<FlightId>,
        columns: Vec<Vec<usize>>,
        costs: Vec<Cents>,
        deadhead_penalty: Cents,
    ) -> Result<Self, CpopError> {
        let n_rows = row_flights.len();
        if costs.len() != columns.len() {
            return Err(CpopError::Dimension {
                expected: columns.len(),
                actual: costs.len(),
            });
        }
        if deadhead_penalty < 0 {
            return Err(CpopError::NegativePenalty(deadhead_penalty));
        }
        let mut packed = Vec::with_capacity(columns.len());
        for (j, mut rows) in columns.into_iter().enumerate() {
            if rows.is_empty() {
                return Err(CpopError::EmptyColumn(j));
            }
            if costs[j] < 0 {
                return Err(CpopError::NegativeCost {
                    column: j,
                    cost: costs[j],
                });
            }
            rows.sort_unstable();
            rows.dedup();
            if let Some(&row) = rows.iter().find(|&&r| r >= n_rows) {
                return Err(CpopError::RowOutOfRange {
                    column: j,
                    row,
                    n_rows,
                });
            }
            packed.push(rows.into_iter().map(|r| r as u32).collect());
        }
        Ok(CpopInstance {
            n_rows,
            columns: packed,
            costs,
            deadhead_penalty,
            row_flights,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    /// Sorted row indices covered by column `j`.
    pub fn column(&self, j: usize) -> &[u32] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<u32>] {
        &self.columns
    }

    pub fn costs(&self) -> &[Cents] {
        &self.costs
    }

    pub fn deadhead_penalty(&self) -> Cents {
        self.deadhead_penalty
    }

    /// The flight behind each row.
    pub fn row_flights(&self) -> &[FlightId] {
        &self.row_flights
    }

    /// `c_j + P_Dhd * |column j|`, the cost of column `j` once the constant
    /// deadhead term is taken out.
    pub fn weight(&self, j: usize) -> Cents {
        self.costs[j] + self.deadhead_penalty * self.columns[j].len() as Cents
    }

    fn constant(&self) -> Cents {
        -(self.n_rows as Cents) * self.deadhead_penalty
    }

    /// Objective in cents of a fractional point.
    pub fn objective_cents(&self, x: &[f64]) -> Result<f64, CpopError> {
        self.check_len(x.len())?;
        let mut total = self.constant() as f64;
        for (j, &v) in x.iter().enumerate() {
            total += self.weight(j) as f64 * v;
        }
        Ok(total)
    }

    /// Exact objective in cents of a 0/1 selection.
    pub fn objective_selected(&self, selected: &[bool]) -> Result<Cents, CpopError> {
        self.check_len(selected.len())?;
        Ok(selected
            .iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(j, _)| self.weight(j))
            .sum::<Cents>()
            + self.constant())
    }

    /// The deadhead part of the objective for a 0/1 selection.
    pub fn deadhead_term(&self, selected: &[bool]) -> Result<Cents, CpopError> {
        let cost: Cents = self.check_len(selected.len()).map(|_| {
            selected
                .iter()
                .zip(&self.costs)
                .filter(|(&s, _)| s)
                .map(|(_, &c)| c)
                .sum()
        })?;
        Ok(self.objective_selected(selected)? - cost)
    }

    /// Number of selected columns covering each row.
    pub fn coverage(&self, selected: &[bool]) -> Vec<usize> {
        let mut cover = vec![0; self.n_rows];
        for (j, _) in selected.iter().enumerate().filter(|(_, &s)| s) {
            for &i in &self.columns[j] {
                cover[i as usize] += 1;
            }
        }
        cover
    }

    pub fn is_cover(&self, selected: &[bool]) -> bool {
        selected.len() == self.columns.len() && self.coverage(selected).iter().all(|&c| c >= 1)
    }

    /// The first row no column covers, if any.
    pub fn uncoverable_row(&self) -> Option<usize> {
        let mut seen = vec![false; self.n_rows];
        for col in &self.columns {
            for &i in col {
                seen[i as usize] = true;
            }
        }
        seen.iter().position(|&s| !s)
    }

    fn check_len(&self, len: usize) -> Result<(), CpopError> {
        if len != self.columns.len() {
            return Err(CpopError::Dimension {
                expected: self.columns.len(),
                actual: len,
            });
        }
        Ok(())
    }
}

/// Builds the covering instance with one row per flight in `rows` and one
/// column per pairing, priced by `cm`.
pub fn build_instance(
    rows: &[FlightId],
    pairings: &PairingSet,
    cm: &CostModel,
) -> Result<CpopInstance, CpopError> {
    let index: HashMap<FlightId, usize> = rows.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let mut columns = Vec::with_capacity(pairings.len());
    let mut costs = Vec::with_capacity(pairings.len());
    for (j, p) in pairings.iter().enumerate() {
        let col = p
            .flights()
            .map(|f| {
                index
                    .get(&f)
                    .copied()
                    .ok_or(CpopError::ForeignFlight { pairing: j, flight: f })
            })
            .collect::<Result<Vec<_>, _>>()?;
        columns.push(col);
        costs.push(to_cents(cm.price(p).total()));
    }
    CpopInstance::with_rows(
        rows.to_vec(),
        columns,
        costs,
        to_cents(cm.deadhead_penalty),
    )
}

/// Objective of a point in currency units.
pub fn objective(inst: &CpopInstance, x: &[f64]) -> Result<f64, CpopError> {
    Ok(inst.objective_cents(x)? / 100.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    /// No column covers this row.
    Infeasible { row: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// Currency units; `None` when infeasible.
    pub objective: Option<f64>,
    pub status: LpStatus,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IpStatus {
    ProvenOptimal,
    /// Time limit hit; `gap` is incumbent minus best bound, in currency.
    FeasibleTimeout { gap: f64 },
    Infeasible { row: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct IpSolution {
    pub x: Vec<bool>,
    /// Exact objective in cents; `None` when infeasible.
    pub objective: Option<Cents>,
    pub status: IpStatus,
    pub nodes: usize,
    /// Root LP bound in currency units.
    pub lp_bound: Option<f64>,
}

impl IpSolution {
    pub fn objective_value(&self) -> Option<f64> {
        self.objective.map(from_cents)
    }

    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.x.iter().enumerate().filter(|(_, &s)| s).map(|(j, _)| j)
    }
}

/// Solves the LP relaxation `min f(x)` s.t. `A x >= 1`, `0 <= x <= 1`.
pub fn solve_lp(inst: &CpopInstance, tol: f64) -> Result<LpSolution, CpopError> {
    let fixes = vec![None; inst.n_columns()];
    match solve_restricted(inst, &fixes)? {
        Restricted::Infeasible { row } => Ok(LpSolution {
            x: vec![0.0; inst.n_columns()],
            objective: None,
            status: LpStatus::Infeasible { row },
            iterations: 0,
        }),
        Restricted::Optimal { x, value, pivots } => {
            check_cover(inst, &x, tol)?;
            Ok(LpSolution {
                x,
                objective: Some(value / 100.0),
                status: LpStatus::Optimal,
                iterations: pivots,
            })
        }
    }
}

/// Solves the IP by best-bound branch and bound. Without a time limit the
/// result is proven optimal.
pub fn solve_ip(inst: &CpopInstance, time_limit: Option<Duration>) -> Result<IpSolution, CpopError> {
    branch::branch_and_bound(inst, time_limit)
}

/// Interface for interchangeable covering solvers.
pub trait CoverSolver: Send + Sync {
    fn solve_lp(&self, inst: &CpopInstance) -> Result<LpSolution, CpopError>;
    fn solve_ip(
        &self,
        inst: &CpopInstance,
        time_limit: Option<Duration>,
    ) -> Result<IpSolution, CpopError>;
}

/// The simplex and branch-and-bound solvers of this module.
#[derive(Clone, Copy, Debug)]
pub struct BuiltinSolver {
    pub tol: f64,
}

impl Default for BuiltinSolver {
    fn default() -> Self {
        BuiltinSolver { tol: 1e-6 }
    }
}

impl CoverSolver for BuiltinSolver {
    fn solve_lp(&self, inst: &CpopInstance) -> Result<LpSolution, CpopError> {
        solve_lp(inst, self.tol)
    }

    fn solve_ip(
        &self,
        inst: &CpopInstance,
        time_limit: Option<Duration>,
    ) -> Result<IpSolution, CpopError> {
        solve_ip(inst, time_limit)
    }
}

fn row_activity(inst: &CpopInstance, x: &[f64]) -> Vec<f64> {
    let mut act = vec![0.0; inst.n_rows()];
    for (j, &v) in x.iter().enumerate() {
        if v != 0.0 {
            for &i in inst.column(j) {
                act[i as usize] += v;
            }
        }
    }
    act
}

pub(crate) enum Restricted {
    Infeasible { row: usize },
    /// `value` is the objective in cents, constant term included.
    Optimal { x: Vec<f64>, value: f64, pivots: usize },
}

/// LP optimum with some columns fixed to 0 or 1. Rows covered by a column
/// fixed to 1 are dropped; a row left with a single free column forces
/// that column to 1.
pub(crate) fn solve_restricted(
    inst: &CpopInstance,
    fixes: &[Option<bool>],
) -> Result<Restricted, CpopError> {
    let n = inst.n_columns();
    let m = inst.n_rows();
    let mut rows_of: Vec<Vec<usize>> = vec![Vec::new(); m];
    for j in 0..n {
        if fixes[j] != Some(false) {
            for &i in inst.column(j) {
                rows_of[i as usize].push(j);
            }
        }
    }

    let mut one = vec![false; n];
    let mut covered = vec![false; m];
    let mut queue: Vec<usize> = (0..n).filter(|&j| fixes[j] == Some(true)).collect();
    loop {
        while let Some(j) = queue.pop() {
            if one[j] {
                continue;
            }
            one[j] = true;
            for &i in inst.column(j) {
                covered[i as usize] = true;
            }
        }
        let mut forced = false;
        for i in 0..m {
            if covered[i] {
                continue;
            }
            match rows_of[i].as_slice() {
                [] => return Ok(Restricted::Infeasible { row: i }),
                [j] => {
                    queue.push(*j);
                    forced = true;
                }
                _ => {}
            }
        }
        if !forced {
            break;
        }
    }

    let open_rows: Vec<usize> = (0..m).filter(|&i| !covered[i]).collect();
    let mut row_map = vec![u32::MAX; m];
    for (k, &i) in open_rows.iter().enumerate() {
        row_map[i] = k as u32;
    }
    let mut free = Vec::new();
    let mut columns = Vec::new();
    let mut weights = Vec::new();
    for j in 0..n {
        if fixes[j].is_some() || one[j] {
            continue;
        }
        let col: Vec<u32> = inst
            .column(j)
            .iter()
            .map(|&i| row_map[i as usize])
            .filter(|&k| k != u32::MAX)
            .collect();
        if col.is_empty() {
            continue;
        }
        free.push(j);
        columns.push(col);
        weights.push(inst.weight(j) as f64);
    }

    let mut lp = CoverSimplex::new(open_rows.len());
    for (col, w) in columns.into_iter().zip(weights) {
        lp.add_column(col, w);
    }
    lp.solve()?;
    let lp_x = lp.solution();
    let mut x = vec![0.0; n];
    for (j, _) in one.iter().enumerate().filter(|(_, &o)| o) {
        x[j] = 1.0;
    }
    for (k, &j) in free.iter().enumerate() {
        x[j] = lp_x[k];
    }
    let value = inst.objective_cents(&x)?;
    Ok(Restricted::Optimal {
        x,
        value,
        pivots: lp.pivots(),
    })
}

/// LP relaxation over a column set that only grows, re-optimised from the
/// previous optimal basis after each batch of new columns.
pub struct IncrementalLp {
    inst: CpopInstance,
    simplex: CoverSimplex,
}

impl IncrementalLp {
    pub fn new(n_rows: usize, deadhead_penalty: Cents) -> Result<Self, CpopError> {
        Ok(IncrementalLp {
            inst: CpopInstance::new(n_rows, Vec::new(), Vec::new(), deadhead_penalty)?,
            simplex: CoverSimplex::new(n_rows),
        })
    }

    /// Row set and penalty of `inst`, with its columns added.
    pub fn from_instance(inst: &CpopInstance) -> Self {
        let mut lp = IncrementalLp {
            inst: CpopInstance {
                columns: Vec::new(),
                costs: Vec::new(),
                ..inst.clone()
            },
            simplex: CoverSimplex::new(inst.n_rows()),
        };
        for j in 0..inst.n_columns() {
            lp.push_checked(inst.column(j).to_vec(), inst.costs()[j]);
        }
        lp
    }

    pub fn add_column(&mut self, rows: Vec<usize>, cost: Cents) -> Result<(), CpopError> {
        let single = CpopInstance::with_rows(
            self.inst.row_flights.clone(),
            vec![rows],
            vec![cost],
            self.inst.deadhead_penalty,
        )?;
        let col = single.columns.into_iter().next().expect("one column");
        self.push_checked(col, cost);
        Ok(())
    }

    fn push_checked(&mut self, col: Vec<u32>, cost: Cents) {
        self.inst.columns.push(col.clone());
        self.inst.costs.push(cost);
        let j = self.inst.n_columns() - 1;
        self.simplex.add_column(col, self.inst.weight(j) as f64);
    }

    pub fn instance(&self) -> &CpopInstance {
        &self.inst
    }

    /// Re-optimises over all columns added so far.
    pub fn solve(&mut self, tol: f64) -> Result<LpSolution, CpopError> {
        if let Some(row) = self.inst.uncoverable_row() {
            return Ok(LpSolution {
                x: vec![0.0; self.inst.n_columns()],
                objective: None,
                status: LpStatus::Infeasible { row },
                iterations: 0,
            });
        }
        let before = self.simplex.pivots();
        self.simplex.solve()?;
        let x = self.simplex.solution();
        check_cover(&self.inst, &x, tol)?;
        Ok(LpSolution {
            objective: Some(self.inst.objective_cents(&x)? / 100.0),
            x,
            status: LpStatus::Optimal,
            iterations: self.simplex.pivots() - before,
        })
    }
}

fn check_cover(inst: &CpopInstance, x: &[f64], tol: f64) -> Result<(), CpopError> {
    let cover = row_activity(inst, x);
    match cover.iter().position(|&a| a < 1.0 - tol) {
        Some(i) => Err(CpopError::Numerical(format!(
            "row {i} covered only {:.9} at the LP optimum",
            cover[i]
        ))),
        None => Ok(()),
    }
}
