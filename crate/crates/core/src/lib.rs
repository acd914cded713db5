//! Initial feasible solutions for set-covering crew pairing optimization.
//!
//! The crate is organised bottom-up:
//!
//! - [`schedule`]: flights, crew bases, CSV I/O and a seeded hub-and-spoke
//!   network generator.
//! - [`rules`]: connection, duty and pairing legality plus the pairing cost
//!   model.
//! - [`pairgen`]: exhaustive legal pairing enumeration over a flight subset,
//!   split per crew base.
//! - [`cpop`]: the set-covering model with a revised dual simplex LP solver
//!   and a best-first branch-and-bound IP solver.
//! - [`ipdch`]: the divide-and-cover loop that draws random flight subsets,
//!   enumerates their pairings and keeps the IP-optimal ones until every
//!   flight is covered.
//! - [`baseline`]: a depth-first IFS heuristic with variable backtracking,
//!   used as a comparison point.
//! - [`metrics`]: coverage and LP-cost evaluation of a pairing set.

pub mod baseline;
pub mod cpop;
pub mod ipdch;
pub mod metrics;
pub mod pairgen;
pub mod rules;
pub mod schedule;
mod seed;

pub use seed::derive_seed;

pub mod prelude {
    pub use crate::baseline::{run_enhanced_dfs, EdfsConfig};
    pub use crate::cpop::{
        build_instance, objective, solve_ip, solve_lp, BuiltinSolver, CoverSolver, CpopInstance,
        IpSolution, IpStatus, LpSolution, LpStatus,
    };
    pub use crate::ipdch::{
        run_ipdch, snapshot_ifs, IfsResult, IpdchConfig, IterationRecord, TerminatedBy,
        Termination,
    };
    pub use crate::metrics::{coverage_check, evaluate_ifs, IfsReport};
    pub use crate::pairgen::{enumerate_duties, enumerate_pairings, pairing_gen, Caps, PairingSet};
    pub use crate::rules::{
        check_duty, check_pairing, classify_connection, pairing_cost, ConnectionClass, CostModel,
        Duty, Pairing, RuleSet, Verdict, Violation,
    };
    pub use crate::schedule::{
        generate_network, load_schedule, save_schedule, Airport, Flight, FlightId, FlightSchedule,
        Minutes, NetworkParams,
    };
}
