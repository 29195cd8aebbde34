//! Equilibrium constraint systems for static games, certification of given
//! distributions, and fairness optimization over the CE and CCE polytopes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fairness::FairnessFunction;
use crate::game::{GameError, GameSpec, JointPmf};
use crate::optim::{lp_solve, maximize_concave, AffineMap, FwOptions, LinearSystem, OptimError, Sense};

/// Tolerance for certifying exact inputs.
pub const CERT_TOL: f64 = 1e-9;
/// Tolerance for certifying solver outputs.
pub const SOLVER_CERT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquilibriumKind {
    Ne,
    Ce,
    Cce,
}

impl fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ne => "ne",
            Self::Ce => "ce",
            Self::Cce => "cce",
        })
    }
}

impl FromStr for EquilibriumKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ne" => Ok(Self::Ne),
            "ce" => Ok(Self::Ce),
            "cce" => Ok(Self::Cce),
            _ => Err(format!("unknown equilibrium kind `{s}` (expected ne, ce or cce)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StaticError {
    #[error("game has non-singleton event alphabets; use the stochastic formulation")]
    NotStaticGame,
    #[error("distribution has {found} entries, game has {expected} joint actions")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("Nash equilibria are check-only and cannot be an optimization target")]
    NashNotOptimizable,
    #[error("operation needs a two-player game, got {0} players")]
    NotTwoPlayers(usize),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Identity of one equilibrium constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ConstraintId {
    /// Player `player` deviates to `beta`; `suggested` is the conditioning
    /// suggestion for CE rows and absent for CCE rows.
    Deviation {
        player: usize,
        suggested: Option<usize>,
        beta: usize,
    },
    /// Aggregate deviation plan of a player in a stochastic game.
    Plan { player: usize },
    /// Product-form test of a Nash equilibrium, at a joint action and event.
    ProductForm { event: usize, action: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub kind: EquilibriumKind,
    pub satisfied: bool,
    /// Largest constraint violation; nonpositive values are slack.
    pub worst_violation: f64,
    pub violating: Option<ConstraintId>,
    pub utilities: Vec<f64>,
}

fn require_static(game: &GameSpec) -> Result<(), StaticError> {
    if game.is_static() {
        Ok(())
    } else {
        Err(StaticError::NotStaticGame)
    }
}

/// Rows `r` with the meaning `r · p ≤ 0` (deviation gain is nonpositive).
fn cce_rows(game: &GameSpec) -> Vec<(Vec<f64>, ConstraintId)> {
    let na = game.num_joint_actions();
    let mut rows = Vec::new();
    for i in 0..game.num_players() {
        for beta in 0..game.num_actions(i) {
            let row = (0..na)
                .map(|a| game.u(i, game.deviate(a, i, beta), 0) - game.u(i, a, 0))
                .collect();
            rows.push((
                row,
                ConstraintId::Deviation {
                    player: i,
                    suggested: None,
                    beta,
                },
            ));
        }
    }
    rows
}

fn ce_rows(game: &GameSpec) -> Vec<(Vec<f64>, ConstraintId)> {
    let na = game.num_joint_actions();
    let mut rows = Vec::new();
    for i in 0..game.num_players() {
        for suggested in 0..game.num_actions(i) {
            for beta in (0..game.num_actions(i)).filter(|&b| b != suggested) {
                let row = (0..na)
                    .map(|a| {
                        if game.player_action(a, i) == suggested {
                            game.u(i, game.deviate(a, i, beta), 0) - game.u(i, a, 0)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                rows.push((
                    row,
                    ConstraintId::Deviation {
                        player: i,
                        suggested: Some(suggested),
                        beta,
                    },
                ));
            }
        }
    }
    rows
}

fn simplex_system(game: &GameSpec, rows: Vec<(Vec<f64>, ConstraintId)>) -> LinearSystem {
    let mut system = LinearSystem::new(game.num_joint_actions());
    system.add_eq(vec![1.0; game.num_joint_actions()], 1.0);
    for (row, _) in rows {
        system.add_le(row, 0.0);
    }
    system
}

/// The CCE polytope over `Pr[α]`: one deviation row per `(i, β_i)`.
pub fn build_cce_constraints(game: &GameSpec) -> Result<LinearSystem, StaticError> {
    require_static(game)?;
    Ok(simplex_system(game, cce_rows(game)))
}

/// The CE polytope over `Pr[α]`: one row per `(i, α_i, β_i)` with `β_i ≠ α_i`.
pub fn build_ce_constraints(game: &GameSpec) -> Result<LinearSystem, StaticError> {
    require_static(game)?;
    Ok(simplex_system(game, ce_rows(game)))
}

/// Builds the constraint system for `kind`; NE has no linear description.
pub fn build_constraints(game: &GameSpec, kind: EquilibriumKind) -> Result<LinearSystem, StaticError> {
    match kind {
        EquilibriumKind::Ce => build_ce_constraints(game),
        EquilibriumKind::Cce => build_cce_constraints(game),
        EquilibriumKind::Ne => Err(StaticError::NashNotOptimizable),
    }
}

/// Rows per player of the utility map `p ↦ ū`.
pub fn utility_map(game: &GameSpec) -> AffineMap {
    AffineMap::linear(
        (0..game.num_players())
            .map(|i| (0..game.num_joint_actions()).map(|a| game.u(i, a, 0)).collect())
            .collect(),
    )
}

fn check_len(game: &GameSpec, pmf: &JointPmf) -> Result<(), StaticError> {
    if pmf.len() != game.num_joint_actions() {
        return Err(StaticError::DimensionMismatch {
            expected: game.num_joint_actions(),
            found: pmf.len(),
        });
    }
    Ok(())
}

/// `ū_i = Σ_α Pr[α] û_i(α)`
pub fn expected_utilities(game: &GameSpec, pmf: &JointPmf) -> Result<Vec<f64>, StaticError> {
    require_static(game)?;
    check_len(game, pmf)?;
    Ok(utility_map(game).apply(pmf.probs()))
}

/// Per-player marginals of a joint pmf.
pub fn marginals(game: &GameSpec, probs: &[f64]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..game.num_players())
        .map(|i| vec![0.0; game.num_actions(i)])
        .collect();
    for (a, &p) in probs.iter().enumerate() {
        for (i, m) in out.iter_mut().enumerate() {
            m[game.player_action(a, i)] += p;
        }
    }
    out
}

/// Largest `|Pr[α] - Π_i Pr_i[α_i]|` and its joint action.
pub(crate) fn product_form_gap(game: &GameSpec, probs: &[f64]) -> (f64, usize) {
    let m = marginals(game, probs);
    let mut worst = (0.0, 0);
    for (a, &p) in probs.iter().enumerate() {
        let prod: f64 = m.iter().enumerate().map(|(i, mi)| mi[game.player_action(a, i)]).product();
        let gap = (p - prod).abs();
        if gap > worst.0 {
            worst = (gap, a);
        }
    }
    worst
}

/// Certifies at the exact-input tolerance.
pub fn certify(game: &GameSpec, pmf: &JointPmf, kind: EquilibriumKind) -> Result<CertificationReport, StaticError> {
    certify_with_tol(game, pmf, kind, CERT_TOL)
}

pub fn certify_with_tol(
    game: &GameSpec,
    pmf: &JointPmf,
    kind: EquilibriumKind,
    tol: f64,
) -> Result<CertificationReport, StaticError> {
    let utilities = expected_utilities(game, pmf)?;
    let rows = match kind {
        EquilibriumKind::Ce => ce_rows(game),
        EquilibriumKind::Cce | EquilibriumKind::Ne => cce_rows(game),
    };
    let mut worst_violation = f64::NEG_INFINITY;
    let mut violating = None;
    for (row, id) in &rows {
        let v: f64 = row.iter().zip(pmf.probs()).map(|(r, p)| r * p).sum();
        if v > worst_violation {
            worst_violation = v;
            violating = Some(*id);
        }
    }
    if kind == EquilibriumKind::Ne {
        let (gap, action) = product_form_gap(game, pmf.probs());
        if gap > worst_violation {
            worst_violation = gap;
            violating = Some(ConstraintId::ProductForm { event: 0, action });
        }
    }
    let satisfied = worst_violation <= tol;
    Ok(CertificationReport {
        kind,
        satisfied,
        worst_violation,
        violating: violating.filter(|_| !satisfied),
        utilities,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticOptimum {
    pub pmf: JointPmf,
    pub utilities: Vec<f64>,
    pub value: f64,
    /// Frank–Wolfe duality gap; zero for objectives solved as a single LP.
    pub gap: f64,
}

/// Maximizes `φ(ū)` over the CE or CCE polytope.
pub fn optimize_static(
    game: &GameSpec,
    phi: &FairnessFunction,
    kind: EquilibriumKind,
) -> Result<StaticOptimum, StaticError> {
    optimize_static_with(game, phi, kind, FwOptions::default())
}

pub fn optimize_static_with(
    game: &GameSpec,
    phi: &FairnessFunction,
    kind: EquilibriumKind,
    opts: FwOptions,
) -> Result<StaticOptimum, StaticError> {
    let system = build_constraints(game, kind)?;
    let sol = maximize_concave(&system, &utility_map(game), phi, opts)?;
    let pmf = JointPmf::project(sol.x)?;
    let utilities = expected_utilities(game, &pmf)?;
    Ok(StaticOptimum {
        value: phi.value(&utilities),
        pmf,
        utilities,
        gap: sol.gap,
    })
}

/// `k` unit directions evenly spaced on the circle, starting at `(1, 0)`.
pub fn circle_directions(k: usize) -> Vec<[f64; 2]> {
    (0..k)
        .map(|j| {
            let t = std::f64::consts::TAU * j as f64 / k as f64;
            [t.cos(), t.sin()]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouettePoint {
    pub direction: [f64; 2],
    pub utilities: [f64; 2],
}

/// For each direction `d`, a utility pair maximizing `d · ū` over the
/// polytope of `kind`.
pub fn polytope_silhouette(
    game: &GameSpec,
    kind: EquilibriumKind,
    directions: &[[f64; 2]],
) -> Result<Vec<SilhouettePoint>, StaticError> {
    if game.num_players() != 2 {
        return Err(StaticError::NotTwoPlayers(game.num_players()));
    }
    let system = build_constraints(game, kind)?;
    let map = utility_map(game);
    directions
        .iter()
        .map(|&direction| {
            let c = map.pull_back(&direction);
            let sol = lp_solve(&system, &c, Sense::Max).map_err(OptimError::from)?;
            if !sol.is_optimal() {
                return Err(StaticError::Optim(OptimError::Infeasible));
            }
            let u = map.apply(&sol.x);
            Ok(SilhouettePoint {
                direction,
                utilities: [u[0], u[1]],
            })
        })
        .collect()
}

/// Convex hull in counter-clockwise order, starting from the lowest-left
/// point. Coordinates are rounded to multiples of `tol`; duplicate and
/// collinear points are dropped.
pub fn convex_hull(points: &[[f64; 2]], tol: f64) -> Vec<[f64; 2]> {
    // Snapping to the tolerance grid keeps solver noise from scrambling the
    // lexicographic order of nearly equal coordinates.
    let snap = |v: f64| if tol > 0.0 { (v / tol).round() * tol } else { v };
    let mut pts: Vec<[f64; 2]> = points.iter().map(|p| [snap(p[0]), snap(p[1])]).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= tol {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}
