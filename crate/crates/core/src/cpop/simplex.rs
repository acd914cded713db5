//! Revised simplex for covering LPs.
//!
//! Solves `min w·x  s.t.  A x >= 1, x >= 0` with `A` a sparse 0/1 matrix
//! given by columns and `w >= 0`. With surplus variables `A x - s = 1` the
//! all-surplus basis is dual feasible (reduced costs are `w`), so a cold
//! start runs the dual simplex with no phase one. Appending columns keeps
//! the optimal basis primal feasible, so a warm start runs the primal
//! simplex from there, on a slightly perturbed right-hand side to break the
//! heavy degeneracy of covering problems; the perturbation is then removed
//! and a few dual pivots restore feasibility. The basis inverse is kept explicitly, updated by row
//! operations after each pivot and rebuilt periodically.
//!
//! Variables `0..m` are the surplus variables and `m..m + n` the columns, so
//! appending columns leaves existing indices unchanged.

use super::CpopError;

const PIVOT_TOL: f64 = 1e-9;
const PRIMAL_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots before switching to Bland's rule (until a
/// pivot makes progress again).
const STALL_LIMIT: usize = 50;

const NOT_BASIC: usize = usize::MAX;

pub(crate) struct CoverSimplex {
    m: usize,
    columns: Vec<Vec<u32>>,
    weights: Vec<f64>,
    basis: Vec<usize>,
    position: Vec<usize>,
    binv: Vec<f64>,
    rhs: Vec<f64>,
    xb: Vec<f64>,
    reduced: Vec<f64>,
    bland: bool,
    solved: bool,
    pivots: usize,
    since_refactor: usize,
    refactor_every: usize,
}

impl CoverSimplex {
    pub fn new(n_rows: usize) -> Self {
        let m = n_rows;
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = -1.0;
        }
        CoverSimplex {
            m,
            columns: Vec::new(),
            weights: Vec::new(),
            basis: (0..m).collect(),
            position: (0..m).collect(),
            binv,
            rhs: vec![1.0; m],
            xb: vec![-1.0; m],
            reduced: vec![0.0; m],
            bland: false,
            solved: false,
            pivots: 0,
            since_refactor: 0,
            refactor_every: 100.max(m / 2),
        }
    }

    /// Appends a column with sorted, in-range row indices and weight `w >= 0`.
    pub fn add_column(&mut self, rows: Vec<u32>, weight: f64) {
        let var = self.m + self.columns.len();
        self.columns.push(rows);
        self.weights.push(weight);
        self.position.push(NOT_BASIC);
        let d = if self.solved {
            weight - self.row_entry_dual(var)
        } else {
            weight
        };
        self.reduced.push(d);
    }

    pub fn pivots(&self) -> usize {
        self.pivots
    }

    /// Optimises over the current columns. Every row must be covered by at
    /// least one column; callers check that beforehand.
    pub fn solve(&mut self) -> Result<(), CpopError> {
        if self.m == 0 {
            self.solved = true;
            return Ok(());
        }
        if self.solved {
            // Deterministic perturbations in [1e-7, 1e-6).
            for (i, r) in self.rhs.iter_mut().enumerate() {
                let spread = (i as f64 * 0.618_033_988_749_895).fract();
                *r = 1.0 + 1e-7 * (1.0 + 9.0 * spread);
            }
            self.refactor()?;
            self.run_primal()?;
            self.rhs.fill(1.0);
            self.refactor()?;
            self.run_dual()?;
        } else {
            self.run_dual()?;
        }
        self.solved = true;
        Ok(())
    }

    /// Values of the columns at the current basis, clipped to `[0, 1]`.
    pub fn solution(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.columns.len()];
        for (pos, &var) in self.basis.iter().enumerate() {
            if var >= self.m {
                x[var - self.m] = self.xb[pos].clamp(0.0, 1.0);
            }
        }
        x
    }

    fn n_vars(&self) -> usize {
        self.m + self.columns.len()
    }

    fn cost(&self, var: usize) -> f64 {
        if var >= self.m {
            self.weights[var - self.m]
        } else {
            0.0
        }
    }

    /// `rho · a_var` for a row vector `rho`.
    fn row_entry(&self, rho: &[f64], var: usize) -> f64 {
        if var >= self.m {
            self.columns[var - self.m].iter().map(|&i| rho[i as usize]).sum()
        } else {
            -rho[var]
        }
    }

    /// `y · a_var` with `y = c_B B^-1`.
    fn row_entry_dual(&self, var: usize) -> f64 {
        let m = self.m;
        let mut total = 0.0;
        for (pos, &b) in self.basis.iter().enumerate() {
            let c = self.cost(b);
            if c != 0.0 {
                total += c * self.row_entry(&self.binv[pos * m..(pos + 1) * m], var);
            }
        }
        total
    }

    /// `B^-1 a_var`.
    fn column(&self, var: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        if var >= m {
            let col = &self.columns[var - m];
            for (k, slot) in out.iter_mut().enumerate() {
                let row = &self.binv[k * m..(k + 1) * m];
                *slot = col.iter().map(|&i| row[i as usize]).sum();
            }
        } else {
            for (k, slot) in out.iter_mut().enumerate() {
                *slot = -self.binv[k * m + var];
            }
        }
        out
    }

    /// Row `r` of `B^-1 A` over all nonbasic variables (zero for basic ones).
    fn alpha_row(&self, r: usize) -> Vec<f64> {
        let rho = &self.binv[r * self.m..(r + 1) * self.m];
        (0..self.n_vars())
            .map(|j| {
                if self.position[j] == NOT_BASIC {
                    self.row_entry(rho, j)
                } else {
                    0.0
                }
            })
            .collect()
    }

    fn dual_tol(&self) -> f64 {
        1e-9 * (1.0 + self.weights.iter().fold(0.0f64, |a, &w| a.max(w)))
    }

    fn leaving_row(&self) -> Option<usize> {
        let infeasible = (0..self.m).filter(|&r| self.xb[r] < -PRIMAL_TOL);
        if self.bland {
            infeasible.min_by_key(|&r| self.basis[r])
        } else {
            infeasible.min_by(|&a, &b| self.xb[a].total_cmp(&self.xb[b]).then(a.cmp(&b)))
        }
    }

    /// Dual ratio test for leaving row with pivot row `alpha_row`.
    fn dual_entering(&self, alpha_row: &[f64]) -> Option<usize> {
        let candidates: Vec<(usize, f64)> = alpha_row
            .iter()
            .enumerate()
            .filter(|&(j, &alpha)| self.position[j] == NOT_BASIC && alpha < -PIVOT_TOL)
            .map(|(j, &alpha)| (j, alpha))
            .collect();
        let ratio = |&(j, alpha): &(usize, f64)| self.reduced[j].max(0.0) / -alpha;
        if self.bland {
            let best = candidates.iter().map(ratio).fold(f64::INFINITY, f64::min);
            let slack = 1e-12 * (1.0 + best.abs());
            return candidates
                .iter()
                .find(|c| ratio(c) <= best + slack)
                .map(|c| c.0);
        }
        // Two-pass (Harris) ratio test: among near-minimal ratios take the
        // largest pivot magnitude.
        let dual_tol = self.dual_tol();
        let bound = candidates
            .iter()
            .map(|&(j, alpha)| (self.reduced[j].max(0.0) + dual_tol) / -alpha)
            .fold(f64::INFINITY, f64::min);
        candidates
            .iter()
            .filter(|c| ratio(c) <= bound)
            .max_by(|a, b| (-a.1).total_cmp(&-b.1).then(b.0.cmp(&a.0)))
            .map(|c| c.0)
    }

    fn primal_entering(&self) -> Option<usize> {
        let tol = self.dual_tol();
        let candidates =
            (0..self.n_vars()).filter(|&j| self.position[j] == NOT_BASIC && self.reduced[j] < -tol);
        if self.bland {
            candidates.min()
        } else {
            candidates.min_by(|&a, &b| self.reduced[a].total_cmp(&self.reduced[b]).then(a.cmp(&b)))
        }
    }

    /// Primal ratio test for entering column `alpha_q`.
    fn primal_leaving(&self, alpha_q: &[f64]) -> Option<usize> {
        let candidates: Vec<usize> = (0..self.m).filter(|&k| alpha_q[k] > PIVOT_TOL).collect();
        let ratio = |k: usize| self.xb[k].max(0.0) / alpha_q[k];
        if self.bland {
            let best = candidates.iter().map(|&k| ratio(k)).fold(f64::INFINITY, f64::min);
            let slack = 1e-12 * (1.0 + best.abs());
            return candidates
                .into_iter()
                .filter(|&k| ratio(k) <= best + slack)
                .min_by_key(|&k| self.basis[k]);
        }
        let bound = candidates
            .iter()
            .map(|&k| (self.xb[k].max(0.0) + PRIMAL_TOL) / alpha_q[k])
            .fold(f64::INFINITY, f64::min);
        candidates
            .into_iter()
            .filter(|&k| ratio(k) <= bound)
            .max_by(|&a, &b| alpha_q[a].total_cmp(&alpha_q[b]).then(b.cmp(&a)))
    }

    fn pivot(&mut self, r: usize, q: usize, alpha_row: &[f64], alpha_q: &[f64]) {
        let m = self.m;
        let pivot = alpha_q[r];

        let theta = self.xb[r] / pivot;
        for k in 0..m {
            self.xb[k] -= theta * alpha_q[k];
        }
        self.xb[r] = theta;

        let leaving = self.basis[r];
        let delta = self.reduced[q] / pivot;
        for j in 0..self.n_vars() {
            if self.position[j] == NOT_BASIC && j != q && alpha_row[j] != 0.0 {
                self.reduced[j] -= delta * alpha_row[j];
            }
        }
        self.reduced[q] = 0.0;
        self.reduced[leaving] = -delta;

        let (before, rest) = self.binv.split_at_mut(r * m);
        let (pivot_row, after) = rest.split_at_mut(m);
        for v in pivot_row.iter_mut() {
            *v /= pivot;
        }
        for (k, row) in before.chunks_mut(m).chain(after.chunks_mut(m)).enumerate() {
            let k = if k < r { k } else { k + 1 };
            let factor = alpha_q[k];
            if factor != 0.0 {
                for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= factor * p;
                }
            }
        }

        self.position[leaving] = NOT_BASIC;
        self.position[q] = r;
        self.basis[r] = q;
        self.pivots += 1;
        self.since_refactor += 1;
    }

    /// Rebuilds `B^-1` by Gauss-Jordan elimination and recomputes the basic
    /// solution (with one refinement step) and all reduced costs.
    fn refactor(&mut self) -> Result<(), CpopError> {
        let m = self.m;
        let mut b = vec![0.0f64; m * m];
        for (pos, &var) in self.basis.iter().enumerate() {
            if var >= m {
                for &i in &self.columns[var - m] {
                    b[i as usize * m + pos] = 1.0;
                }
            } else {
                b[var * m + pos] = -1.0;
            }
        }
        let original = b.clone();
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let pivot_row = (col..m)
                .max_by(|&a, &c| b[a * m + col].abs().total_cmp(&b[c * m + col].abs()))
                .expect("non-empty range");
            if b[pivot_row * m + col].abs() < 1e-12 {
                return Err(CpopError::Numerical("singular basis".into()));
            }
            if pivot_row != col {
                for k in 0..m {
                    b.swap(col * m + k, pivot_row * m + k);
                    inv.swap(col * m + k, pivot_row * m + k);
                }
            }
            let p = b[col * m + col];
            for k in 0..m {
                b[col * m + k] /= p;
                inv[col * m + k] /= p;
            }
            for row in 0..m {
                if row == col {
                    continue;
                }
                let f = b[row * m + col];
                if f != 0.0 {
                    for k in 0..m {
                        b[row * m + k] -= f * b[col * m + k];
                        inv[row * m + k] -= f * inv[col * m + k];
                    }
                }
            }
        }
        self.binv = inv;

        let mut xb: Vec<f64> = (0..m)
            .map(|k| {
                self.binv[k * m..(k + 1) * m]
                    .iter()
                    .zip(&self.rhs)
                    .map(|(a, r)| a * r)
                    .sum()
            })
            .collect();
        // residual = rhs - B xb
        let residual: Vec<f64> = (0..m)
            .map(|i| self.rhs[i] - (0..m).map(|p| original[i * m + p] * xb[p]).sum::<f64>())
            .collect();
        for (k, x) in xb.iter_mut().enumerate() {
            let row = &self.binv[k * m..(k + 1) * m];
            *x += row.iter().zip(&residual).map(|(a, r)| a * r).sum::<f64>();
        }
        self.xb = xb;

        let mut y = vec![0.0; m];
        for (pos, &var) in self.basis.iter().enumerate() {
            let c = self.cost(var);
            if c != 0.0 {
                for (yi, v) in y.iter_mut().zip(&self.binv[pos * m..(pos + 1) * m]) {
                    *yi += c * v;
                }
            }
        }
        for j in 0..self.n_vars() {
            self.reduced[j] = if self.position[j] != NOT_BASIC {
                0.0
            } else {
                self.cost(j) - self.row_entry(&y, j)
            };
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn pivot_limit(&self) -> usize {
        self.pivots + 50 * self.n_vars() + 1000
    }

    /// Tracks degenerate pivots; returns an error past the pivot limit.
    fn after_pivot(&mut self, step: f64, stalled: &mut usize, limit: usize) -> Result<(), CpopError> {
        if self.pivots > limit {
            return Err(CpopError::IterationLimit(self.pivots));
        }
        if self.since_refactor >= self.refactor_every {
            self.refactor()?;
        }
        if step > 1e-12 {
            *stalled = 0;
            self.bland = false;
        } else {
            *stalled += 1;
            if *stalled >= STALL_LIMIT {
                self.bland = true;
            }
        }
        Ok(())
    }

    fn run_dual(&mut self) -> Result<(), CpopError> {
        let limit = self.pivot_limit();
        let mut stalled = 0;
        let mut retried = false;
        self.bland = false;
        loop {
            let Some(r) = self.leaving_row() else {
                if self.since_refactor == 0 {
                    return Ok(());
                }
                // Confirm optimality on a fresh factorization.
                self.refactor()?;
                if self.leaving_row().is_none() {
                    return Ok(());
                }
                continue;
            };
            let alpha_row = self.alpha_row(r);
            let Some(q) = self.dual_entering(&alpha_row) else {
                if !retried {
                    retried = true;
                    self.refactor()?;
                    continue;
                }
                return Err(CpopError::Numerical(format!(
                    "no entering variable for basis row {r}"
                )));
            };
            retried = false;
            let step = self.reduced[q].max(0.0) / -alpha_row[q];
            let alpha_q = self.column(q);
            self.pivot(r, q, &alpha_row, &alpha_q);
            self.after_pivot(step, &mut stalled, limit)?;
        }
    }

    fn run_primal(&mut self) -> Result<(), CpopError> {
        let limit = self.pivot_limit();
        let mut stalled = 0;
        let mut retried = false;
        self.bland = false;
        loop {
            let Some(q) = self.primal_entering() else {
                if self.since_refactor == 0 {
                    return Ok(());
                }
                self.refactor()?;
                if self.primal_entering().is_none() {
                    return Ok(());
                }
                continue;
            };
            let alpha_q = self.column(q);
            let Some(r) = self.primal_leaving(&alpha_q) else {
                if !retried {
                    retried = true;
                    self.refactor()?;
                    continue;
                }
                return Err(CpopError::Numerical(format!(
                    "unbounded direction for variable {q}"
                )));
            };
            retried = false;
            let step = self.xb[r].max(0.0) / alpha_q[r];
            let alpha_row = self.alpha_row(r);
            self.pivot(r, q, &alpha_row, &alpha_q);
            self.after_pivot(step, &mut stalled, limit)?;
        }
    }
}
