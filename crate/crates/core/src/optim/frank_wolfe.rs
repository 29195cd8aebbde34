//! Maximizing a concave fairness function of an affine image of a polytope.
//!
//! Separable log objectives use Frank–Wolfe with the simplex solver as the
//! linear maximization oracle. Linear objectives reduce to one LP, and
//! min-with-cap to one LP over its epigraph.

use thiserror::Error;

use super::lp::{dot, lp_solve, LinearSystem, LpError, LpSolution, LpStatus, Sense};
use crate::fairness::{FairnessError, FairnessFunction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("constraint system is infeasible")]
    Infeasible,
    #[error("objective is unbounded over the constraint system")]
    Unbounded,
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Fairness(#[from] FairnessError),
    #[error("utility map has {found} columns for {expected} variables")]
    MapMismatch { expected: usize, found: usize },
}

/// `u = M x + offset`, one row of `M` per player.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub rows: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

impl AffineMap {
    pub fn linear(rows: Vec<Vec<f64>>) -> Self {
        let offset = vec![0.0; rows.len()];
        Self { rows, offset }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.offset)
            .map(|(r, o)| dot(r, x) + o)
            .collect()
    }

    /// `Mᵀ g`
    pub fn pull_back(&self, g: &[f64]) -> Vec<f64> {
        let n = self.rows.first().map_or(0, Vec::len);
        let mut c = vec![0.0; n];
        for (row, &gi) in self.rows.iter().zip(g) {
            if gi != 0.0 {
                for (cj, rj) in c.iter_mut().zip(row) {
                    *cj += gi * rj;
                }
            }
        }
        c
    }
}

/// Step-size rule for the Frank–Wolfe iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// `λ_k = 2 / (k + 2)`
    OpenLoop,
    /// Exact line search along the Frank–Wolfe direction.
    LineSearch,
    /// Away-step Frank–Wolfe with exact line search. Converges linearly on
    /// polytopes for strongly concave objectives.
    AwayStep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwOptions {
    pub max_iter: usize,
    pub gap_tol: f64,
    pub step: StepRule,
}

impl Default for FwOptions {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            gap_tol: 1e-6,
            step: StepRule::AwayStep,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcaveSolution {
    pub x: Vec<f64>,
    pub utilities: Vec<f64>,
    pub value: f64,
    /// Final Frank–Wolfe duality gap; an upper bound on `φ* - value`.
    pub gap: f64,
    pub iterations: usize,
    /// Objective value after each iteration (Frank–Wolfe only).
    pub history: Vec<f64>,
    /// Duality gap observed at each iteration (Frank–Wolfe only).
    pub gaps: Vec<f64>,
}

fn oracle(system: &LinearSystem, c: &[f64]) -> Result<LpSolution, OptimError> {
    let sol = lp_solve(system, c, Sense::Max)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        LpStatus::Infeasible => Err(OptimError::Infeasible),
        LpStatus::Unbounded => Err(OptimError::Unbounded),
    }
}

/// Maximizes `f(map(x))` over the feasible set of `system`.
pub fn maximize_concave(
    system: &LinearSystem,
    map: &AffineMap,
    f: &FairnessFunction,
    opts: FwOptions,
) -> Result<ConcaveSolution, OptimError> {
    f.validate(map.dim())?;
    for row in &map.rows {
        if row.len() != system.num_vars() {
            return Err(OptimError::MapMismatch {
                expected: system.num_vars(),
                found: row.len(),
            });
        }
    }
    match f {
        FairnessFunction::Linear { weights } => {
            let sol = oracle(system, &map.pull_back(weights))?;
            Ok(finish(map, f, sol.x, 0.0, 0, Vec::new(), Vec::new()))
        }
        FairnessFunction::MinWithCap { cap } => maximize_min(system, map, *cap),
        FairnessFunction::WeightedLog { .. } => frank_wolfe(system, map, f, opts),
    }
}

fn finish(
    map: &AffineMap,
    f: &FairnessFunction,
    x: Vec<f64>,
    gap: f64,
    iterations: usize,
    history: Vec<f64>,
    gaps: Vec<f64>,
) -> ConcaveSolution {
    let utilities = map.apply(&x);
    ConcaveSolution {
        value: f.value(&utilities),
        x,
        utilities,
        gap,
        iterations,
        history,
        gaps,
    }
}

/// `max t` subject to `t ≤ u_i(x)` for all `i` and `t ≤ cap`.
fn maximize_min(system: &LinearSystem, map: &AffineMap, cap: f64) -> Result<ConcaveSolution, OptimError> {
    let n = system.num_vars();
    let mut epi = system.clone();
    epi.extend_vars(1);
    epi.set_bounds(n, f64::NEG_INFINITY, cap);
    for (row, &o) in map.rows.iter().zip(&map.offset) {
        let mut r: Vec<f64> = row.iter().map(|v| -v).collect();
        r.push(1.0);
        epi.add_le(r, o);
    }
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut sol = oracle(&epi, &c)?;
    sol.x.truncate(n);
    let f = FairnessFunction::min_with_cap(cap);
    Ok(finish(map, &f, sol.x, 0.0, 0, Vec::new(), Vec::new()))
}

/// Maximizer of the concave function `λ ↦ f(u + λ d)` on `[0, hi]`.
fn line_search(f: &FairnessFunction, u: &[f64], d: &[f64], hi: f64) -> f64 {
    let mut grad = vec![0.0; u.len()];
    let mut slope = |lam: f64| {
        let p: Vec<f64> = u.iter().zip(d).map(|(a, b)| a + lam * b).collect();
        f.supergradient(&p, &mut grad);
        dot(&grad, d)
    };
    if slope(0.0) <= 0.0 {
        return 0.0;
    }
    if slope(hi) >= 0.0 {
        return hi;
    }
    let (mut a, mut b) = (0.0, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if slope(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

struct Vertex {
    x: Vec<f64>,
    u: Vec<f64>,
    weight: f64,
}

fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(p, q)| (p - q).abs() <= 1e-12)
}

fn frank_wolfe(
    system: &LinearSystem,
    map: &AffineMap,
    f: &FairnessFunction,
    opts: FwOptions,
) -> Result<ConcaveSolution, OptimError> {
    let dim = map.dim();
    let mut grad = vec![0.0; dim];

    // Start from the vertex that is best for the gradient at the map offset.
    f.supergradient(&map.offset, &mut grad);
    let start = oracle(system, &map.pull_back(&grad))?.x;
    let mut u = map.apply(&start);
    let mut x = start.clone();
    let mut active = vec![Vertex {
        u: u.clone(),
        x: start,
        weight: 1.0,
    }];

    let mut history = Vec::new();
    let mut gaps = Vec::new();
    let mut gap = f64::INFINITY;
    let mut k = 0;
    while k < opts.max_iter {
        f.supergradient(&u, &mut grad);
        let s = oracle(system, &map.pull_back(&grad))?.x;
        let us = map.apply(&s);
        let fw_dir: Vec<f64> = us.iter().zip(&u).map(|(a, b)| a - b).collect();
        gap = dot(&grad, &fw_dir);
        gaps.push(gap);
        if gap <= opts.gap_tol {
            break;
        }

        match opts.step {
            StepRule::OpenLoop | StepRule::LineSearch => {
                let lam = if opts.step == StepRule::OpenLoop {
                    2.0 / (k as f64 + 2.0)
                } else {
                    line_search(f, &u, &fw_dir, 1.0)
                };
                for (xi, si) in x.iter_mut().zip(&s) {
                    *xi += lam * (si - *xi);
                }
                for (ui, di) in u.iter_mut().zip(&fw_dir) {
                    *ui += lam * di;
                }
            }
            StepRule::AwayStep => {
                let (away, away_score) = active
                    .iter()
                    .enumerate()
                    .map(|(idx, v)| (idx, dot(&grad, &v.u)))
                    .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                    .expect("active set is never empty");
                let away_gap = dot(&grad, &u) - away_score;
                if gap >= away_gap || active.len() == 1 {
                    let lam = line_search(f, &u, &fw_dir, 1.0);
                    for v in active.iter_mut() {
                        v.weight *= 1.0 - lam;
                    }
                    match active.iter_mut().find(|v| same_point(&v.x, &s)) {
                        Some(v) => v.weight += lam,
                        None => active.push(Vertex {
                            x: s,
                            u: us,
                            weight: lam,
                        }),
                    }
                } else {
                    let wa = active[away].weight;
                    let max_step = wa / (1.0 - wa);
                    let dir: Vec<f64> = u
                        .iter()
                        .zip(&active[away].u)
                        .map(|(a, b)| a - b)
                        .collect();
                    let lam = line_search(f, &u, &dir, max_step);
                    for v in active.iter_mut() {
                        v.weight *= 1.0 + lam;
                    }
                    active[away].weight -= lam;
                    if lam >= max_step {
                        active.swap_remove(away);
                    }
                }
                active.retain(|v| v.weight > 1e-15);
                let total: f64 = active.iter().map(|v| v.weight).sum();
                x.iter_mut().for_each(|xi| *xi = 0.0);
                u.iter_mut().for_each(|ui| *ui = 0.0);
                for v in active.iter_mut() {
                    v.weight /= total;
                    for (xi, vi) in x.iter_mut().zip(&v.x) {
                        *xi += v.weight * vi;
                    }
                    for (ui, vi) in u.iter_mut().zip(&v.u) {
                        *ui += v.weight * vi;
                    }
                }
            }
        }
        history.push(f.value(&u));
        k += 1;
    }
    Ok(finish(map, f, x, gap, k, history, gaps))
}
