//! Per-slot subproblems of the drift-plus-penalty manager.

use super::queues::{EngineKind, QueueState};
use super::DppError;
use crate::fairness::FairnessFunction;
use crate::game::GameSpec;

/// Largest joint action space searched exhaustively.
pub const ACTION_SPACE_CAP: usize = 1_000_000;

/// Maximizes `V φ(γ) - Σ Z_i γ_i` over `γ ∈ ×[0, u_i^max]`.
pub fn choose_gamma(phi: &FairnessFunction, v: f64, z: &[f64], caps: &[f64]) -> Vec<f64> {
    match phi {
        FairnessFunction::WeightedLog { weights } => z
            .iter()
            .zip(caps)
            .zip(weights)
            .map(|((&zi, &cap), &w)| {
                if zi <= 0.0 {
                    cap
                } else {
                    (w * v / zi - 1.0).clamp(0.0, cap)
                }
            })
            .collect(),
        FairnessFunction::Linear { weights } => z
            .iter()
            .zip(caps)
            .zip(weights)
            .map(|((&zi, &cap), &w)| if v * w >= zi { cap } else { 0.0 })
            .collect(),
        FairnessFunction::MinWithCap { cap } => {
            // Coordinates with Z_i ≤ 0 go to their caps. The rest share a
            // common level m (anything above the minimum only costs), so the
            // objective is V·min(m, K) - S·m with S = Σ_{Z_i > 0} Z_i: a
            // piecewise-linear function maximized at m = 0 or at its kink.
            let mut gamma = caps.to_vec();
            let knee = caps
                .iter()
                .zip(z)
                .filter(|(_, &zi)| zi <= 0.0)
                .map(|(&c, _)| c)
                .fold(*cap, f64::min);
            let positive: Vec<usize> = (0..z.len()).filter(|&i| z[i] > 0.0).collect();
            if !positive.is_empty() {
                let s: f64 = positive.iter().map(|&i| z[i]).sum();
                let top = positive.iter().map(|&i| caps[i]).fold(f64::INFINITY, f64::min);
                let level = if v > s { knee.min(top) } else { 0.0 };
                for &i in &positive {
                    gamma[i] = level;
                }
            }
            gamma
        }
    }
}

/// Threshold rule: `θ_{i,ω_i} = u_i^max` when `Q_i < Σ_β J_{i,ω_i}^(β)`,
/// else zero. Returns the value at the observed cell of each player.
pub fn choose_theta(state: &QueueState, observed: &[usize], game: &GameSpec) -> Vec<f64> {
    (0..game.num_players())
        .map(|i| {
            let backlog: f64 = state.deviation_queues(i, observed[i], game.num_actions(i)).iter().sum();
            if state.q[i] < backlog {
                game.cap(i)
            } else {
                0.0
            }
        })
        .collect()
}

/// Observed cell of every player in a joint event.
pub fn observed_cells(game: &GameSpec, event: usize) -> Vec<usize> {
    (0..game.num_players()).map(|i| game.player_event(event, i)).collect()
}

/// Per-player weights `(w_i, d_{i,·})` of the action subproblem
/// `-Σ w_i û_i(α) + Σ_i Σ_β d_{i,β} û_i((β, α_ī))`.
fn action_weights(game: &GameSpec, state: &QueueState, observed: &[usize]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = game.num_players();
    let mut w = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        let dev = state.deviation_queues(i, observed[i], game.num_actions(i)).to_vec();
        let own = match state.kind {
            EngineKind::General => state.q[i],
            EngineKind::Special => dev.iter().sum(),
        };
        w.push(state.z[i] + own);
        d.push(dev);
    }
    (w, d)
}

fn action_objective(game: &GameSpec, event: usize, action: usize, w: &[f64], d: &[Vec<f64>]) -> f64 {
    let mut obj = 0.0;
    for i in 0..game.num_players() {
        if w[i] != 0.0 {
            obj -= w[i] * game.u(i, action, event);
        }
        for (beta, &dib) in d[i].iter().enumerate() {
            if dib != 0.0 {
                obj += dib * game.u(i, game.deviate(action, i, beta), event);
            }
        }
    }
    obj
}

/// Exhaustive argmin of the action subproblem; ties go to the lowest joint
/// action index.
pub fn choose_actions(game: &GameSpec, state: &QueueState, event: usize) -> Result<usize, DppError> {
    let na = game.num_joint_actions();
    if na > ACTION_SPACE_CAP {
        return Err(DppError::ActionSpaceTooLarge {
            size: na,
            cap: ACTION_SPACE_CAP,
        });
    }
    let observed = observed_cells(game, event);
    let (w, d) = action_weights(game, state, &observed);
    let mut best = (0, f64::INFINITY);
    for a in 0..na {
        let obj = action_objective(game, event, a, &w, &d);
        if obj < best.1 {
            best = (a, obj);
        }
    }
    Ok(best.0)
}

/// A candidate decision for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub gamma: Vec<f64>,
    /// `θ_{i, ω_i}`; ignored by the special-case engine.
    pub theta: Vec<f64>,
    pub action: usize,
}

/// Right-hand side of the drift-plus-penalty bound for a candidate decision:
/// `B - Vφ(γ) + Σ Z_i(γ_i - u_i) + Σ Q_i(θ_i - u_i) + Σ J (u^(β) - θ)`, with
/// the special-case engine using `Σ Q_i^(β)(u_i^(β) - u_i)` for the last
/// two terms.
pub fn dpp_bound_rhs(
    game: &GameSpec,
    state: &QueueState,
    phi: &FairnessFunction,
    v: f64,
    b: f64,
    event: usize,
    cand: &Candidate,
) -> f64 {
    let observed = observed_cells(game, event);
    let mut rhs = b - v * phi.value(&cand.gamma);
    for i in 0..game.num_players() {
        let u = game.u(i, cand.action, event);
        rhs += state.z[i] * (cand.gamma[i] - u);
        let dev = state.deviation_queues(i, observed[i], game.num_actions(i));
        let service = match state.kind {
            EngineKind::General => {
                rhs += state.q[i] * (cand.theta[i] - u);
                cand.theta[i]
            }
            EngineKind::Special => u,
        };
        for (beta, &jb) in dev.iter().enumerate() {
            rhs += jb * (game.u(i, game.deviate(cand.action, i, beta), event) - service);
        }
    }
    rhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::fig1;
    use crate::dpp::queues::{update_queues, SlotDecision};

    #[test]
    fn gamma_closed_form() {
        let phi = FairnessFunction::weighted_log([1.0, 1.0]);
        assert_eq!(choose_gamma(&phi, 10.0, &[0.0, -3.0], &[5.0, 50.0]), vec![5.0, 50.0]);
        assert_eq!(choose_gamma(&phi, 0.0, &[1.0, 2.0], &[5.0, 50.0]), vec![0.0, 0.0]);
        assert_eq!(choose_gamma(&phi, 7.0, &[7.0, 2.0], &[5.0, 50.0]), vec![0.0, 2.5]);
        let lin = FairnessFunction::linear([1.0, 0.0]);
        assert_eq!(choose_gamma(&lin, 0.0, &[1.0, 1.0], &[5.0, 50.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn min_with_cap_gamma_matches_grid_search() {
        let phi = FairnessFunction::min_with_cap(4.0);
        let caps = [5.0, 6.0];
        for (v, z) in [(10.0, [1.0, 2.0]), (2.0, [1.0, 2.0]), (10.0, [-1.0, 3.0]), (1.0, [0.0, 0.5]), (3.0, [2.0, -1.0])] {
            let g = choose_gamma(&phi, v, &z, &caps);
            let score = |g: &[f64]| v * phi.value(g) - z[0] * g[0] - z[1] * g[1];
            let mut best = f64::NEG_INFINITY;
            for a in 0..=500 {
                for b in 0..=600 {
                    best = best.max(score(&[a as f64 / 100.0, b as f64 / 100.0]));
                }
            }
            assert!((score(&g) - best).abs() < 1e-9, "v={v} z={z:?}: {g:?}");
        }
    }

    #[test]
    fn theta_threshold_is_strict() {
        let g = fig1();
        let mut s = QueueState::new(&g, EngineKind::General);
        s.j[0][1] = 2.0;
        assert_eq!(choose_theta(&s, &[0, 0], &g), vec![5.0, 0.0]);
        s.q[0] = 2.0;
        assert_eq!(choose_theta(&s, &[0, 0], &g), vec![0.0, 0.0]);
        s.q[0] = 100.0;
        s.j[0].fill(0.0);
        assert_eq!(choose_theta(&s, &[0, 0], &g), vec![0.0, 0.0]);
    }

    #[test]
    fn action_choice_on_the_example() {
        let g = fig1();
        let mut s = QueueState::new(&g, EngineKind::General);
        assert_eq!(choose_actions(&g, &s, 0).unwrap(), 0);
        s.z[0] = 1.0;
        // (alpha, beta) and (gamma, beta) both give player 1 utility 5.
        assert_eq!(choose_actions(&g, &s, 0).unwrap(), 1);
    }

    #[test]
    fn special_objective_uses_q_beta() {
        let g = fig1();
        let mut s = QueueState::new(&g, EngineKind::Special);
        s.j[1] = vec![1.0, 0.0];
        // Objective: -(Q^α) û_2(α) + Q^α û_2((α, α_1)) = 0 for every α whose
        // column is already alpha; otherwise û_2(row, alpha) - û_2(row, beta).
        let mut best = (0, f64::INFINITY);
        for a in 0..6 {
            let obj = -g.u(1, a, 0) + g.u(1, g.deviate(a, 1, 0), 0);
            if obj < best.1 {
                best = (a, obj);
            }
        }
        assert_eq!(choose_actions(&g, &s, 0).unwrap(), best.0);
    }

    #[test]
    fn queue_updates() {
        let g = fig1();
        let mut s = QueueState::new(&g, EngineKind::General);
        s.q[0] = 1.0;
        let out = SlotDecision {
            event: 0,
            observed: vec![0, 0],
            gamma: vec![3.0, 0.0],
            theta: vec![0.0, 5.0],
            utilities: vec![5.0, 2.0],
            action: 1,
            deviations: vec![vec![0.0, 0.0, 0.0], vec![4.0, 0.0]],
            g: 0.0,
        };
        update_queues(&mut s, &out);
        assert_eq!(s.z, vec![-2.0, -2.0]);
        assert_eq!(s.q, vec![0.0, 3.0]);
        assert_eq!(s.j[1], vec![0.0, 0.0]);
    }
}
