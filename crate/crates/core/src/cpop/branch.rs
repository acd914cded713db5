//! Best-bound branch and bound over LP relaxations.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use super::{from_cents, solve_restricted, Cents, CpopError, CpopInstance, IpSolution, IpStatus, Restricted};

const INTEGRALITY_TOL: f64 = 1e-6;

struct Node {
    bound: f64,
    seq: u64,
    fixes: Vec<Option<bool>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Reversed so the max-heap pops the lowest bound, oldest first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(other.seq.cmp(&self.seq))
    }
}

/// Smallest integer objective a node with LP value `bound` can still reach.
fn integer_floor(bound: f64) -> Cents {
    let slack = (1e-6 * bound.abs().max(1.0)).min(0.5);
    (bound - slack).ceil() as Cents
}

/// Cheapest-ratio greedy cover, used as the first incumbent.
fn greedy(inst: &CpopInstance) -> Vec<bool> {
    let n = inst.n_columns();
    let mut covered = vec![false; inst.n_rows()];
    let mut left = inst.n_rows();
    let mut chosen = vec![false; n];
    while left > 0 {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..n).filter(|&j| !chosen[j]) {
            let fresh = inst.column(j).iter().filter(|&&i| !covered[i as usize]).count();
            if fresh == 0 {
                continue;
            }
            let ratio = inst.weight(j) as f64 / fresh as f64;
            if best.is_none_or(|(_, r)| ratio < r) {
                best = Some((j, ratio));
            }
        }
        let (j, _) = best.expect("instance checked coverable");
        chosen[j] = true;
        for &i in inst.column(j) {
            if !covered[i as usize] {
                covered[i as usize] = true;
                left -= 1;
            }
        }
    }
    // Drop columns made redundant by later picks, most expensive first.
    let mut count = inst.coverage(&chosen);
    let mut order: Vec<usize> = (0..n).filter(|&j| chosen[j]).collect();
    order.sort_by_key(|&j| (std::cmp::Reverse(inst.weight(j)), j));
    for j in order {
        if inst.column(j).iter().all(|&i| count[i as usize] >= 2) {
            chosen[j] = false;
            for &i in inst.column(j) {
                count[i as usize] -= 1;
            }
        }
    }
    chosen
}

fn most_fractional(x: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &v) in x.iter().enumerate() {
        let frac = v - v.floor();
        if frac <= INTEGRALITY_TOL || frac >= 1.0 - INTEGRALITY_TOL {
            continue;
        }
        let distance = (frac - 0.5).abs();
        if best.is_none_or(|(_, d)| distance < d) {
            best = Some((j, distance));
        }
    }
    best.map(|(j, _)| j)
}

pub(crate) fn branch_and_bound(
    inst: &CpopInstance,
    time_limit: Option<Duration>,
) -> Result<IpSolution, CpopError> {
    let start = Instant::now();
    let n = inst.n_columns();
    if let Some(row) = inst.uncoverable_row() {
        return Ok(IpSolution {
            x: vec![false; n],
            objective: None,
            status: IpStatus::Infeasible { row },
            nodes: 0,
            lp_bound: None,
        });
    }

    let mut best_x = greedy(inst);
    let mut best = inst.objective_selected(&best_x)?;
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        seq,
        fixes: vec![None; n],
    });
    let mut nodes = 0usize;
    let mut root_bound = None;
    let mut timed_out = false;

    while let Some(node) = heap.pop() {
        if integer_floor(node.bound) >= best {
            continue;
        }
        if time_limit.is_some_and(|limit| start.elapsed() >= limit) {
            heap.push(node);
            timed_out = true;
            break;
        }
        nodes += 1;
        let (x, value) = match solve_restricted(inst, &node.fixes)? {
            Restricted::Infeasible { .. } => continue,
            Restricted::Optimal { x, value, .. } => (x, value),
        };
        if root_bound.is_none() {
            root_bound = Some(value);
        }
        if integer_floor(value) >= best {
            continue;
        }
        match most_fractional(&x) {
            None => {
                let chosen: Vec<bool> = x.iter().map(|&v| v > 0.5).collect();
                let obj = inst.objective_selected(&chosen)?;
                if obj < best && inst.is_cover(&chosen) {
                    best = obj;
                    best_x = chosen;
                }
            }
            Some(j) => {
                for fix in [true, false] {
                    let mut fixes = node.fixes.clone();
                    fixes[j] = Some(fix);
                    seq += 1;
                    heap.push(Node {
                        bound: value,
                        seq,
                        fixes,
                    });
                }
            }
        }
    }

    let status = if timed_out {
        let open = heap
            .iter()
            .map(|node| node.bound)
            .fold(f64::INFINITY, f64::min)
            .max(root_bound.unwrap_or(f64::NEG_INFINITY));
        let gap = if open.is_finite() {
            (from_cents(best) - open / 100.0).max(0.0)
        } else {
            f64::INFINITY
        };
        IpStatus::FeasibleTimeout { gap }
    } else {
        IpStatus::ProvenOptimal
    };
    log::debug!("branch and bound: {nodes} nodes, objective {best}");
    Ok(IpSolution {
        x: best_x,
        objective: Some(best),
        status,
        nodes,
        lp_bound: root_bound.map(|b| b / 100.0),
    })
}
