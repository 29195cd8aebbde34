use serde::{Deserialize, Serialize};

use super::engine::Trace;
use super::DppError;
use crate::fairness::FairnessFunction;
use crate::game::GameSpec;
use crate::static_eq::EquilibriumKind;
use crate::stochastic::{build_stochastic_cce_constraints, optimize_stochastic};

/// `B = Σ (u_i^max)² + ½ Σ |A_i| (u_i^max)²`
pub fn drift_constant(game: &GameSpec) -> f64 {
    (0..game.num_players())
        .map(|i| {
            let c2 = game.cap(i) * game.cap(i);
            c2 + 0.5 * game.num_actions(i) as f64 * c2
        })
        .sum()
}

/// Closed-form performance guarantees for one `(game, φ, V)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub b: f64,
    pub v: f64,
    pub g_max: f64,
    pub phi_star: f64,
    /// True when `φ*` is a trace estimate rather than an offline optimum.
    pub estimated: bool,
    /// `φ* - B/V` (negative infinity at `V = 0`).
    pub utility_lower_bound: f64,
}

impl BoundReport {
    /// Queue-norm envelope `sqrt((2B + 2V(g_max - φ*)) / t)`.
    pub fn envelope(&self, t: f64) -> f64 {
        ((2.0 * self.b + 2.0 * self.v * (self.g_max - self.phi_star)).max(0.0) / t).sqrt()
    }
}

pub fn theorem_bounds(game: &GameSpec, phi: &FairnessFunction, v: f64, phi_star: f64, estimated: bool) -> BoundReport {
    let b = drift_constant(game);
    BoundReport {
        b,
        v,
        g_max: phi.g_max(game.caps()),
        phi_star,
        estimated,
        utility_lower_bound: if v > 0.0 { phi_star - b / v } else { f64::NEG_INFINITY },
    }
}

/// Largest stochastic CCE system (variables × rows) solved offline for `φ*`.
pub const OFFLINE_SIZE_CAP: usize = 4_000_000;

/// `φ*` over the stochastic CCE set, or `None` when the system exceeds
/// [`OFFLINE_SIZE_CAP`].
pub fn offline_phi_star(game: &GameSpec, phi: &FairnessFunction) -> Result<Option<f64>, DppError> {
    let stoch = build_stochastic_cce_constraints(game);
    let rows = stoch.system.num_ub() + stoch.system.num_eq();
    if stoch.system.num_vars().saturating_mul(rows) > OFFLINE_SIZE_CAP {
        return Ok(None);
    }
    Ok(Some(optimize_stochastic(game, phi, EquilibriumKind::Cce)?.value))
}

/// Bounds with the offline `φ*`, falling back to the best recorded `ḡ(t)`
/// across `traces` when the offline problem is too large.
pub fn bounds_for(game: &GameSpec, phi: &FairnessFunction, v: f64, traces: &[Trace]) -> Result<BoundReport, DppError> {
    Ok(match offline_phi_star(game, phi)? {
        Some(p) => theorem_bounds(game, phi, v, p, false),
        None => {
            let est = traces
                .iter()
                .flat_map(|t| t.records.iter().map(|r| r.avg_g).chain([t.totals.avg_g()]))
                .fold(f64::NEG_INFINITY, f64::max);
            theorem_bounds(game, phi, v, est, true)
        }
    })
}
