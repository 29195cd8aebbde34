use serde::{Deserialize, Serialize};

use crate::game::GameSpec;

/// Which virtual-queue structure an engine runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    /// Queues `Z_i`, `Q_i` and `J_{i,v}^(β)`, for arbitrary event structure.
    General,
    /// Queues `Z_i` and `Q_i^(β)`, for games where players observe nothing.
    Special,
}

/// Virtual queues.
///
/// For the general engine `q[i]` is `Q_i` and `j[i][v·|A_i| + β]` is
/// `J_{i,v}^(β)`. For the special-case engine `q` is empty and `j[i][β]` is
/// `Q_i^(β)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueState {
    pub kind: EngineKind,
    pub z: Vec<f64>,
    pub q: Vec<f64>,
    pub j: Vec<Vec<f64>>,
}

impl QueueState {
    /// All queues empty.
    pub fn new(game: &GameSpec, kind: EngineKind) -> Self {
        let n = game.num_players();
        let j = (0..n)
            .map(|i| {
                let cells = match kind {
                    EngineKind::General => game.num_player_events(i),
                    EngineKind::Special => 1,
                };
                vec![0.0; cells * game.num_actions(i)]
            })
            .collect();
        Self {
            kind,
            z: vec![0.0; n],
            q: match kind {
                EngineKind::General => vec![0.0; n],
                EngineKind::Special => Vec::new(),
            },
            j,
        }
    }

    /// Deviation queues of `player` in the cell it currently observes:
    /// `J_{i,v}^(·)` (general) or `Q_i^(·)` (special).
    pub fn deviation_queues(&self, player: usize, observed: usize, num_actions: usize) -> &[f64] {
        match self.kind {
            EngineKind::General => &self.j[player][observed * num_actions..(observed + 1) * num_actions],
            EngineKind::Special => &self.j[player],
        }
    }

    /// `L = ½ (Σ Z² + Σ Q² + Σ J²)`
    pub fn lyapunov(&self) -> f64 {
        let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        0.5 * (sq(&self.z) + sq(&self.q) + self.j.iter().map(|v| sq(v)).sum::<f64>())
    }

    /// `‖X‖ = sqrt(2 L)`
    pub fn norm(&self) -> f64 {
        (2.0 * self.lyapunov()).sqrt()
    }

    /// `Σ_v Σ_β J_{i,v}^(β)` (or `Σ_β Q_i^(β)`) per player.
    pub fn deviation_totals(&self) -> Vec<f64> {
        self.j.iter().map(|v| v.iter().sum()).collect()
    }
}

/// Everything the manager chose and realized on one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotDecision {
    /// Joint event `ω(t)`.
    pub event: usize,
    /// Observed cell `ω_i(t)` per player.
    pub observed: Vec<usize>,
    pub gamma: Vec<f64>,
    /// `θ_{i, ω_i(t)}(t)` per player; every other cell is zero. All zero for
    /// the special-case engine.
    pub theta: Vec<f64>,
    /// Suggested joint action `α(t)`.
    pub action: usize,
    /// `u_i(t)`
    pub utilities: Vec<f64>,
    /// `û_i((β, α_ī(t)), ω(t))`, indexed `[i][β]`.
    pub deviations: Vec<Vec<f64>>,
    /// `φ(γ(t))`
    pub g: f64,
}

/// Applies one slot of the queue recursions in place.
pub fn update_queues(state: &mut QueueState, outcome: &SlotDecision) {
    for i in 0..state.z.len() {
        let u = outcome.utilities[i];
        state.z[i] += outcome.gamma[i] - u;
        let dev = &outcome.deviations[i];
        let na = dev.len();
        match state.kind {
            EngineKind::General => {
                let theta = outcome.theta[i];
                state.q[i] = (state.q[i] + theta - u).max(0.0);
                // Cells other than the observed one see zero arrival and
                // zero service, so only the observed cell changes.
                let v = outcome.observed[i];
                for (jq, d) in state.j[i][v * na..(v + 1) * na].iter_mut().zip(dev) {
                    *jq = (*jq + d - theta).max(0.0);
                }
            }
            EngineKind::Special => {
                for (qb, d) in state.j[i].iter_mut().zip(dev) {
                    *qb = (*qb + d - u).max(0.0);
                }
            }
        }
    }
}
