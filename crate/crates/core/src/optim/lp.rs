//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! Problems are stated over `x ∈ R^n` as
//!
//! ```text
//! optimize  cᵀx
//! s.t.      A_ub x ≤ b_ub,   A_eq x = b_eq,   lo ≤ x ≤ hi
//! ```
//!
//! and brought to standard form internally: finite lower bounds are shifted
//! to zero, variables with only an upper bound are mirrored, free variables
//! are split, and finite upper bounds become extra `≤` rows.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest constraint violation accepted on an optimal point.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Optimality tolerance on objective values reported by the solver.
pub const OPTIMALITY_TOL: f64 = 1e-8;
/// Pivot elements below this magnitude are never used.
pub const PIVOT_TOL: f64 = 1e-12;

/// Reduced costs above `-REDUCED_COST_TOL` count as nonnegative.
const REDUCED_COST_TOL: f64 = 1e-10;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed linear system: {0}")]
    Malformed(String),
    #[error("numerical breakdown: pivot magnitude {pivot:e} below threshold")]
    NumericalBreakdown { pivot: f64 },
    #[error("simplex exceeded {0} pivots")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Linear constraints over `n` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    n: usize,
    a_ub: Vec<Vec<f64>>,
    b_ub: Vec<f64>,
    a_eq: Vec<Vec<f64>>,
    b_eq: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl LinearSystem {
    /// `n` variables bounded below by zero and unbounded above.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            a_ub: Vec::new(),
            b_ub: Vec::new(),
            a_eq: Vec::new(),
            b_eq: Vec::new(),
            lo: vec![0.0; n],
            hi: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_ub(&self) -> usize {
        self.a_ub.len()
    }

    pub fn num_eq(&self) -> usize {
        self.a_eq.len()
    }

    pub fn ub_rows(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.a_ub.iter().map(Vec::as_slice).zip(self.b_ub.iter().copied())
    }

    pub fn eq_rows(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.a_eq.iter().map(Vec::as_slice).zip(self.b_eq.iter().copied())
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lo[j], self.hi[j])
    }

    /// Adds `row · x ≤ rhs`.
    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        self.a_ub.push(row);
        self.b_ub.push(rhs);
    }

    /// Adds `row · x ≥ rhs`, stored as `-row · x ≤ -rhs`.
    pub fn add_ge(&mut self, mut row: Vec<f64>, rhs: f64) {
        row.iter_mut().for_each(|v| *v = -*v);
        self.add_le(row, -rhs);
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
    }

    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lo[j] = lo;
        self.hi[j] = hi;
    }

    /// Pins variable `j` to `value`.
    pub fn fix(&mut self, j: usize, value: f64) {
        self.set_bounds(j, value, value);
    }

    /// Appends `k` new variables with bounds `[0, ∞)`; existing rows get zero
    /// coefficients.
    pub fn extend_vars(&mut self, k: usize) {
        self.n += k;
        for row in self.a_ub.iter_mut().chain(self.a_eq.iter_mut()) {
            row.resize(self.n, 0.0);
        }
        self.lo.resize(self.n, 0.0);
        self.hi.resize(self.n, f64::INFINITY);
    }

    pub fn check(&self) -> Result<(), LpError> {
        for (k, row) in self.a_ub.iter().chain(&self.a_eq).enumerate() {
            if row.len() != self.n {
                return Err(LpError::Malformed(format!(
                    "row {k} has width {} for {} variables",
                    row.len(),
                    self.n
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(LpError::Malformed(format!("row {k} has a non-finite entry")));
            }
        }
        if self.b_ub.iter().chain(&self.b_eq).any(|v| !v.is_finite()) {
            return Err(LpError::Malformed("non-finite right-hand side".into()));
        }
        for j in 0..self.n {
            if self.lo[j].is_nan() || self.hi[j].is_nan() || self.lo[j] > self.hi[j] {
                return Err(LpError::Malformed(format!(
                    "variable {j} has bounds [{}, {}]",
                    self.lo[j], self.hi[j]
                )));
            }
        }
        Ok(())
    }

    /// Per-row slack `b - A x` of the inequality block.
    pub fn ub_slacks(&self, x: &[f64]) -> Vec<f64> {
        self.ub_rows().map(|(row, b)| b - dot(row, x)).collect()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (row, b) in self.ub_rows() {
            worst = worst.max(dot(row, x) - b);
        }
        for (row, b) in self.eq_rows() {
            worst = worst.max((dot(row, x) - b).abs());
        }
        for j in 0..self.n {
            worst = worst.max(self.lo[j] - x[j]).max(x[j] - self.hi[j]);
        }
        worst
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal point; empty unless `status` is optimal.
    pub x: Vec<f64>,
    pub objective: f64,
    pub max_violation: f64,
    /// Row multipliers of the inequality block, in the requested sense, so
    /// that `c = A_ubᵀ y_ub + A_eqᵀ y_eq + d` with `d` the bound multipliers.
    pub duals_ub: Vec<f64>,
    pub duals_eq: Vec<f64>,
    pub pivots: usize,
}

impl LpSolution {
    fn without_point(status: LpStatus, pivots: usize) -> Self {
        Self {
            status,
            x: Vec::new(),
            objective: f64::NAN,
            max_violation: f64::INFINITY,
            duals_ub: Vec::new(),
            duals_eq: Vec::new(),
            pivots,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// How an original variable maps onto standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = lo + y`
    Shift { col: usize, lo: f64 },
    /// `x = hi - y`
    Mirror { col: usize, hi: f64 },
    /// `x = y⁺ - y⁻`
    Split { pos: usize, neg: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowOrigin {
    Ub(usize),
    UpperBound,
    Eq(usize),
}

struct Tableau {
    /// `m` rows of `cols + 1` entries, rhs last.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Reduced costs of the active objective, `cols` entries.
    reduced: Vec<f64>,
    cols: usize,
    first_artificial: usize,
    pivots: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) -> Result<(), LpError> {
        let piv = self.rows[r][c];
        if piv.abs() < PIVOT_TOL || !piv.is_finite() {
            return Err(LpError::NumericalBreakdown { pivot: piv.abs() });
        }
        self.pivots += 1;
        if self.pivots > MAX_PIVOTS {
            return Err(LpError::IterationLimit(MAX_PIVOTS));
        }
        let inv = 1.0 / piv;
        self.rows[r].iter_mut().for_each(|v| *v *= inv);
        self.rows[r][c] = 1.0;
        let pivot_row = self.rows[r].clone();
        for (k, row) in self.rows.iter_mut().enumerate() {
            if k == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[c] = 0.0;
                let last = row.len() - 1;
                if row[last] < 0.0 && row[last] > -FEASIBILITY_TOL {
                    row[last] = 0.0;
                }
            }
        }
        let f = self.reduced[c];
        if f != 0.0 {
            for (v, p) in self.reduced.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.reduced[c] = 0.0;
        }
        self.basis[r] = c;
        Ok(())
    }

    fn set_objective(&mut self, cost: &[f64]) {
        self.reduced = cost.to_vec();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (v, t) in self.reduced.iter_mut().zip(&self.rows[r][..self.cols]) {
                    *v -= cb * t;
                }
            }
        }
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(r, &b)| cost[b] * self.rhs(r))
            .sum()
    }

    /// Runs Bland-rule simplex on the current objective (minimization).
    /// Returns false when the problem is unbounded.
    fn optimize(&mut self, allow_artificial: bool) -> Result<bool, LpError> {
        loop {
            let limit = if allow_artificial {
                self.cols
            } else {
                self.first_artificial
            };
            let entering = (0..limit).find(|&j| self.reduced[j] < -REDUCED_COST_TOL);
            let Some(c) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][c];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r).max(0.0) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((br, best)) => {
                            let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                            if (!tie && ratio < best) || (tie && self.basis[r] < self.basis[br]) {
                                Some((r, ratio))
                            } else {
                                Some((br, best))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c)?,
                None => return Ok(false),
            }
        }
    }
}

/// Solves `optimize cᵀx` over `system`.
pub fn lp_solve(system: &LinearSystem, objective: &[f64], sense: Sense) -> Result<LpSolution, LpError> {
    system.check()?;
    if objective.len() != system.n {
        return Err(LpError::Malformed(format!(
            "objective has {} entries for {} variables",
            objective.len(),
            system.n
        )));
    }
    let sign = match sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let cost: Vec<f64> = objective.iter().map(|c| sign * c).collect();
    let mut sol = solve_min(system, &cost)?;
    if sol.status == LpStatus::Optimal {
        sol.objective *= sign;
        sol.duals_ub.iter_mut().for_each(|y| *y *= sign);
        sol.duals_eq.iter_mut().for_each(|y| *y *= sign);
    }
    Ok(sol)
}

/// Whether some point satisfies `system` with phase-one residual at most
/// `tol`.
pub fn lp_feasible(system: &LinearSystem, tol: f64) -> Result<bool, LpError> {
    system.check()?;
    Ok(phase_one(system, tol)?.is_some())
}

struct StandardForm {
    maps: Vec<VarMap>,
    structural: usize,
    tableau: Tableau,
    origins: Vec<RowOrigin>,
    /// `+1` or `-1`: how each standard-form row relates to its source row.
    signs: Vec<f64>,
    slack_of_row: Vec<Option<usize>>,
    artificial_of_row: Vec<Option<usize>>,
}

fn standard_form(system: &LinearSystem) -> StandardForm {
    let n = system.n;
    let mut maps = Vec::with_capacity(n);
    let mut structural = 0usize;
    let mut upper_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (lo, hi) = (system.lo[j], system.hi[j]);
        if lo.is_finite() {
            maps.push(VarMap::Shift { col: structural, lo });
            if hi.is_finite() {
                upper_rows.push((structural, hi - lo));
            }
            structural += 1;
        } else if hi.is_finite() {
            maps.push(VarMap::Mirror { col: structural, hi });
            structural += 1;
        } else {
            maps.push(VarMap::Split {
                pos: structural,
                neg: structural + 1,
            });
            structural += 2;
        }
    }

    // Rows as (coefficients over structural columns, rhs, origin, is_equality).
    let mut raw_rows: Vec<(Vec<f64>, f64, RowOrigin, bool)> = Vec::new();
    let transform = |row: &[f64], rhs: f64| -> (Vec<f64>, f64) {
        let mut out = vec![0.0; structural];
        let mut b = rhs;
        for (j, &a) in row.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            match maps[j] {
                VarMap::Shift { col, lo } => {
                    out[col] += a;
                    b -= a * lo;
                }
                VarMap::Mirror { col, hi } => {
                    out[col] -= a;
                    b -= a * hi;
                }
                VarMap::Split { pos, neg } => {
                    out[pos] += a;
                    out[neg] -= a;
                }
            }
        }
        (out, b)
    };
    for (k, (row, b)) in system.ub_rows().enumerate() {
        let (r, rhs) = transform(row, b);
        raw_rows.push((r, rhs, RowOrigin::Ub(k), false));
    }
    for &(col, width) in &upper_rows {
        let mut r = vec![0.0; structural];
        r[col] = 1.0;
        raw_rows.push((r, width, RowOrigin::UpperBound, false));
    }
    for (k, (row, b)) in system.eq_rows().enumerate() {
        let (r, rhs) = transform(row, b);
        raw_rows.push((r, rhs, RowOrigin::Eq(k), true));
    }

    let m = raw_rows.len();
    let num_slacks = raw_rows.iter().filter(|r| !r.3).count();
    let num_artificial = raw_rows
        .iter()
        .filter(|(_, rhs, _, eq)| *eq || *rhs < 0.0)
        .count();
    let cols = structural + num_slacks + num_artificial;
    let first_artificial = structural + num_slacks;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut origins = Vec::with_capacity(m);
    let mut signs = Vec::with_capacity(m);
    let mut slack_of_row = Vec::with_capacity(m);
    let mut artificial_of_row = Vec::with_capacity(m);
    let mut next_slack = structural;
    let mut next_art = first_artificial;
    for (coeffs, rhs, origin, eq) in raw_rows {
        let mut row = vec![0.0; cols + 1];
        let sigma = if rhs < 0.0 { -1.0 } else { 1.0 };
        for (c, v) in coeffs.iter().enumerate() {
            row[c] = sigma * v;
        }
        row[cols] = sigma * rhs;
        let slack = if eq {
            None
        } else {
            row[next_slack] = sigma;
            next_slack += 1;
            Some(next_slack - 1)
        };
        let artificial = if eq || sigma < 0.0 {
            row[next_art] = 1.0;
            next_art += 1;
            Some(next_art - 1)
        } else {
            None
        };
        basis.push(artificial.or(slack).expect("every row has a basic column"));
        rows.push(row);
        origins.push(origin);
        signs.push(sigma);
        slack_of_row.push(slack);
        artificial_of_row.push(artificial);
    }

    StandardForm {
        maps,
        structural,
        tableau: Tableau {
            rows,
            basis,
            reduced: vec![0.0; cols],
            cols,
            first_artificial,
            pivots: 0,
        },
        origins,
        signs,
        slack_of_row,
        artificial_of_row,
    }
}

/// Phase one: drives artificial variables to zero. Returns the standard form
/// with an artificial-free (or degenerate-artificial) basis, or `None` when
/// the residual exceeds `tol`.
fn phase_one(system: &LinearSystem, tol: f64) -> Result<Option<StandardForm>, LpError> {
    let mut sf = standard_form(system);
    let t = &mut sf.tableau;
    if t.first_artificial < t.cols {
        let mut cost = vec![0.0; t.cols];
        cost[t.first_artificial..].iter_mut().for_each(|c| *c = 1.0);
        t.set_objective(&cost);
        t.optimize(true)?;
        if t.objective(&cost) > tol {
            return Ok(None);
        }
        // Pivot degenerate artificials out of the basis where possible.
        for r in 0..t.rows.len() {
            if t.basis[r] < t.first_artificial {
                continue;
            }
            let best = (0..t.first_artificial)
                .map(|j| (j, t.rows[r][j].abs()))
                .filter(|&(_, a)| a > PIVOT_TOL)
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            if let Some((j, _)) = best {
                t.pivot(r, j)?;
            }
        }
    }
    Ok(Some(sf))
}

fn solve_min(system: &LinearSystem, cost: &[f64]) -> Result<LpSolution, LpError> {
    let Some(mut sf) = phase_one(system, FEASIBILITY_TOL)? else {
        return Ok(LpSolution::without_point(LpStatus::Infeasible, 0));
    };

    let cols = sf.tableau.cols;
    let mut std_cost = vec![0.0; cols];
    let mut constant = 0.0;
    for (j, map) in sf.maps.iter().enumerate() {
        match *map {
            VarMap::Shift { col, lo } => {
                std_cost[col] += cost[j];
                constant += cost[j] * lo;
            }
            VarMap::Mirror { col, hi } => {
                std_cost[col] -= cost[j];
                constant += cost[j] * hi;
            }
            VarMap::Split { pos, neg } => {
                std_cost[pos] += cost[j];
                std_cost[neg] -= cost[j];
            }
        }
    }
    let t = &mut sf.tableau;
    t.set_objective(&std_cost);
    if !t.optimize(false)? {
        return Ok(LpSolution::without_point(LpStatus::Unbounded, t.pivots));
    }

    let mut y = vec![0.0; sf.structural];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < sf.structural {
            y[b] = t.rhs(r);
        }
    }
    let x: Vec<f64> = sf
        .maps
        .iter()
        .map(|m| match *m {
            VarMap::Shift { col, lo } => lo + y[col],
            VarMap::Mirror { col, hi } => hi - y[col],
            VarMap::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();

    let mut duals_ub = vec![0.0; system.num_ub()];
    let mut duals_eq = vec![0.0; system.num_eq()];
    for (r, origin) in sf.origins.iter().enumerate() {
        match *origin {
            RowOrigin::Ub(k) => {
                let s = sf.slack_of_row[r].expect("inequality rows carry a slack");
                duals_ub[k] = -t.reduced[s];
            }
            RowOrigin::Eq(k) => {
                let a = sf.artificial_of_row[r].expect("equality rows carry an artificial");
                duals_eq[k] = -sf.signs[r] * t.reduced[a];
            }
            RowOrigin::UpperBound => {}
        }
    }

    let objective = dot(cost, &x);
    debug_assert!((objective - (t.objective(&std_cost) + constant)).abs() <= 1e-6 * (1.0 + objective.abs()));
    Ok(LpSolution {
        status: LpStatus::Optimal,
        max_violation: system.max_violation(&x),
        objective,
        x,
        duals_ub,
        duals_eq,
        pivots: t.pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_variable_box() {
        let mut s = LinearSystem::new(1);
        s.add_le(vec![1.0], 1.0);
        let sol = lp_solve(&s, &[1.0], Sense::Max).unwrap();
        assert!(sol.is_optimal());
        assert_eq!(sol.x, vec![1.0]);
        assert_eq!(sol.objective, 1.0);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut s = LinearSystem::new(2);
        s.add_ge(vec![1.0, 1.0], 3.0);
        s.add_le(vec![1.0, 1.0], 2.0);
        assert_eq!(lp_solve(&s, &[1.0, 0.0], Sense::Max).unwrap().status, LpStatus::Infeasible);
        assert!(!lp_feasible(&s, FEASIBILITY_TOL).unwrap());

        let mut s = LinearSystem::new(2);
        s.add_ge(vec![1.0, -1.0], 0.0);
        assert_eq!(lp_solve(&s, &[1.0, 1.0], Sense::Max).unwrap().status, LpStatus::Unbounded);
        assert_eq!(lp_solve(&s, &[1.0, 1.0], Sense::Min).unwrap().objective, 0.0);
    }

    #[test]
    fn free_and_mirrored_variables() {
        // min x + y with x free, y ≤ 4, x ≥ y - 10, y ≥ -3 + x/2
        let mut s = LinearSystem::new(2);
        s.set_bounds(0, f64::NEG_INFINITY, f64::INFINITY);
        s.set_bounds(1, f64::NEG_INFINITY, 4.0);
        s.add_ge(vec![1.0, -1.0], -10.0);
        s.add_ge(vec![-0.5, 1.0], -3.0);
        let sol = lp_solve(&s, &[1.0, 1.0], Sense::Min).unwrap();
        // Vertex of the two rows: x = y - 10, y = -3 + x/2 → y = -16, x = -26.
        assert!((sol.x[0] + 26.0).abs() < 1e-9 && (sol.x[1] + 16.0).abs() < 1e-9);
    }

    /// Solves a square system by Gaussian elimination with partial pivoting.
    fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())?;
            if a[p][k].abs() < 1e-10 {
                return None;
            }
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
            x[k] = (b[k] - s) / a[k][k];
        }
        Some(x)
    }

    fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        if n < k {
            return vec![];
        }
        let mut out = combinations(n - 1, k);
        for mut c in combinations(n - 1, k - 1) {
            c.push(n - 1);
            out.push(c);
        }
        out
    }

    /// Best objective over all vertices of `{x ≥ 0, Σx = 1, A x ≤ b}`.
    fn vertex_oracle(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
        let n = c.len();
        // Candidate tight constraints: the inequality rows, then x_j ≥ 0.
        let mut cand: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            cand.push((e, 0.0));
        }
        let mut best: Option<f64> = None;
        for choice in combinations(cand.len(), n - 1) {
            let mut m = vec![vec![1.0; n]];
            let mut rhs = vec![1.0];
            for &k in &choice {
                m.push(cand[k].0.clone());
                rhs.push(cand[k].1);
            }
            let Some(x) = solve_square(m, rhs) else { continue };
            let feasible = x.iter().all(|&v| v >= -1e-9)
                && a.iter().zip(b).all(|(row, &bk)| dot(row, &x) <= bk + 1e-9);
            if feasible {
                let v = dot(c, &x);
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
        best
    }

    fn random_simplex_lp(seed: u64) -> (LinearSystem, Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
        use rand::Rng;
        let mut rng = crate::game::seeded_rng(seed);
        let n = 6;
        let mut s = LinearSystem::new(n);
        s.add_eq(vec![1.0; n], 1.0);
        let mut a = Vec::new();
        let mut b = Vec::new();
        for _ in 0..4 {
            let row: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let rhs = rng.random_range(-0.2..0.5);
            s.add_le(row.clone(), rhs);
            a.push(row);
            b.push(rhs);
        }
        let c = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        (s, a, b, c)
    }

    #[test]
    fn random_simplex_lps_match_vertex_enumeration() {
        let mut feasible = 0;
        for seed in 0..200 {
            let (s, a, b, c) = random_simplex_lp(seed);
            let sol = lp_solve(&s, &c, Sense::Max).unwrap();
            match vertex_oracle(&a, &b, &c) {
                Some(v) => {
                    feasible += 1;
                    assert!(sol.is_optimal(), "seed {seed}");
                    assert!((sol.objective - v).abs() <= 1e-8, "seed {seed}: {} vs {v}", sol.objective);
                    assert!(sol.max_violation <= FEASIBILITY_TOL);
                }
                None => assert_eq!(sol.status, LpStatus::Infeasible, "seed {seed}"),
            }
        }
        assert!(feasible > 50);
    }

    proptest! {
        #[test]
        fn complementary_slackness(seed in 0u64..10_000) {
            let (s, _, _, c) = random_simplex_lp(seed);
            let sol = lp_solve(&s, &c, Sense::Max).unwrap();
            prop_assume!(sol.is_optimal());
            let slacks = s.ub_slacks(&sol.x);
            for (y, sl) in sol.duals_ub.iter().zip(&slacks) {
                prop_assert!(*y >= -1e-8);
                prop_assert!((y * sl).abs() <= 1e-8);
            }
            // Reduced costs: nonpositive, and zero wherever x_j > 0.
            for j in 0..s.num_vars() {
                let mut d = c[j];
                for ((row, _), y) in s.ub_rows().zip(&sol.duals_ub) {
                    d -= row[j] * y;
                }
                for ((row, _), y) in s.eq_rows().zip(&sol.duals_eq) {
                    d -= row[j] * y;
                }
                prop_assert!(d <= 1e-8);
                prop_assert!((d * sol.x[j]).abs() <= 1e-8);
            }
            // Strong duality.
            let dual_obj: f64 = sol.duals_ub.iter().zip(s.ub_rows()).map(|(y, (_, b))| y * b).sum::<f64>()
                + sol.duals_eq.iter().zip(s.eq_rows()).map(|(y, (_, b))| y * b).sum::<f64>();
            prop_assert!((dual_obj - sol.objective).abs() <= 1e-8);
        }

        #[test]
        fn max_is_negated_min(seed in 0u64..10_000) {
            let (s, _, _, c) = random_simplex_lp(seed);
            let neg: Vec<f64> = c.iter().map(|v| -v).collect();
            let max = lp_solve(&s, &c, Sense::Max).unwrap();
            let min = lp_solve(&s, &neg, Sense::Min).unwrap();
            prop_assert_eq!(max.status, min.status);
            if max.is_optimal() {
                prop_assert_eq!(max.objective, -min.objective);
                prop_assert_eq!(max.x, min.x);
            }
        }
    }
}
