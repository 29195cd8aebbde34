//! Stochastic games: pure strategies and the virtual static game, the
//! generation map from profile pmfs to conditional policies, polynomial-size
//! CE/CCE systems with θ variables, deviation oracles, and the offline
//! fairness program.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fairness::FairnessFunction;
use crate::game::{policy_utilities, validate_game, ConditionalPolicy, GameError, GameSpec, JointPmf, MixedRadix, RawGame};
use crate::optim::{maximize_concave, AffineMap, FwOptions, LinearSystem, OptimError};
use crate::static_eq::{CertificationReport, ConstraintId, EquilibriumKind, StaticError};

/// Largest `|A_i|^|Ω_i|` for which pure strategies are enumerated.
pub const ENUMERATION_CAP: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StochasticError {
    #[error("player {player} has {count} pure strategies, above the enumeration cap {cap}")]
    EnumerationTooLarge { player: usize, count: usize, cap: usize },
    #[error("policy has {found} entries, game has {expected} (event, action) pairs")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("Nash equilibria are check-only and cannot be an optimization target")]
    NashNotOptimizable,
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Static(#[from] StaticError),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// A map `b_i : Ω_i → A_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PureStrategy {
    pub player: usize,
    /// Position in the mixed-radix enumeration (first event value most significant).
    pub index: usize,
    /// `map[v]` is the action taken on observing `v`.
    pub map: Vec<usize>,
}

fn strategy_count(game: &GameSpec, player: usize) -> Option<usize> {
    let a = game.num_actions(player);
    (0..game.num_player_events(player)).try_fold(1usize, |acc, _| acc.checked_mul(a))
}

/// All `|A_i|^|Ω_i|` pure strategies of `player`, in mixed-radix order.
pub fn enumerate_pure_strategies(game: &GameSpec, player: usize) -> Result<Vec<PureStrategy>, StochasticError> {
    let count = strategy_count(game, player).unwrap_or(usize::MAX);
    if count > ENUMERATION_CAP {
        return Err(StochasticError::EnumerationTooLarge {
            player,
            count,
            cap: ENUMERATION_CAP,
        });
    }
    let radix = MixedRadix::new(vec![game.num_actions(player); game.num_player_events(player)]);
    Ok((0..count)
        .map(|index| PureStrategy {
            player,
            index,
            map: radix.decode(index),
        })
        .collect())
}

/// `b^(s)(ω)` for a profile of strategies.
pub fn profile_action(game: &GameSpec, profile: &[&PureStrategy], event: usize) -> usize {
    let digits: Vec<usize> = profile
        .iter()
        .enumerate()
        .map(|(i, s)| s.map[game.player_event(event, i)])
        .collect();
    game.action_radix().encode(&digits)
}

/// `h_i(s) = Σ_ω π[ω] û_i(b^(s)(ω), ω)` for every player.
pub fn virtual_utility(game: &GameSpec, profile: &[&PureStrategy]) -> Vec<f64> {
    let mut h = vec![0.0; game.num_players()];
    for (e, &p) in game.pmf().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let a = profile_action(game, profile, e);
        for (i, hi) in h.iter_mut().enumerate() {
            *hi += p * game.u(i, a, e);
        }
    }
    h
}

/// The static game whose actions are pure strategies and whose utilities
/// are the `h_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualGame {
    pub spec: GameSpec,
    pub strategies: Vec<Vec<PureStrategy>>,
}

impl VirtualGame {
    pub fn num_profiles(&self) -> usize {
        self.spec.num_joint_actions()
    }

    /// Strategies of a virtual joint action.
    pub fn profile(&self, s: usize) -> Vec<&PureStrategy> {
        (0..self.strategies.len())
            .map(|i| &self.strategies[i][self.spec.player_action(s, i)])
            .collect()
    }
}

pub fn virtual_static_game(game: &GameSpec) -> Result<VirtualGame, StochasticError> {
    let strategies = (0..game.num_players())
        .map(|i| enumerate_pure_strategies(game, i))
        .collect::<Result<Vec<_>, _>>()?;
    let radix = MixedRadix::new(strategies.iter().map(Vec::len).collect());
    let mut utilities = vec![Vec::with_capacity(radix.size()); game.num_players()];
    for s in 0..radix.size() {
        let digits = radix.decode(s);
        let profile: Vec<&PureStrategy> = digits.iter().enumerate().map(|(i, &d)| &strategies[i][d]).collect();
        for (i, h) in virtual_utility(game, &profile).into_iter().enumerate() {
            utilities[i].push(h);
        }
    }
    let names = strategies
        .iter()
        .enumerate()
        .map(|(i, list)| {
            list.iter()
                .map(|s| {
                    s.map
                        .iter()
                        .map(|&a| game.action_names(i)[a].as_str())
                        .collect::<Vec<_>>()
                        .join("|")
                })
                .collect()
        })
        .collect();
    let mut raw = RawGame::static_game(names, utilities);
    raw.player_names = game.player_names().to_vec();
    let spec = validate_game(raw)?;
    Ok(VirtualGame { spec, strategies })
}

/// `Pr[α|ω] = Σ_s Pr[s] 1{b^(s)(ω) = α}` on every `ω` with `π[ω] > 0`.
pub fn policy_from_profile_pmf(
    game: &GameSpec,
    virtual_game: &VirtualGame,
    pmf: &JointPmf,
) -> Result<ConditionalPolicy, StochasticError> {
    if pmf.len() != virtual_game.num_profiles() {
        return Err(StaticError::DimensionMismatch {
            expected: virtual_game.num_profiles(),
            found: pmf.len(),
        }
        .into());
    }
    let na = game.num_joint_actions();
    let mut probs = vec![0.0; game.num_joint_events() * na];
    for (s, &p) in pmf.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let profile = virtual_game.profile(s);
        for e in (0..game.num_joint_events()).filter(|&e| game.prob(e) > 0.0) {
            probs[e * na + profile_action(game, &profile, e)] += p;
        }
    }
    Ok(ConditionalPolicy::project(game, probs)?)
}

/// Meaning of a row of a stochastic constraint system. Every row reads
/// `r · x ≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum RowTag {
    /// Participation utility covers the expected θ.
    Aggregate { player: usize },
    /// θ covers the deviation to `beta` on observing `event`; `suggested` is
    /// the conditioning suggestion in CE systems.
    Deviation {
        player: usize,
        event: usize,
        suggested: Option<usize>,
        beta: usize,
    },
    /// Upper bound of a mass-weighted θ in CE systems.
    ThetaCap { player: usize, event: usize, suggested: usize },
}

/// Variable layout: `Pr[α|ω]` at `ω·|A| + α`, followed by θ entries.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticSystem {
    pub kind: EquilibriumKind,
    pub system: LinearSystem,
    pub tags: Vec<RowTag>,
    num_policy_vars: usize,
    theta_offsets: Vec<usize>,
}

impl StochasticSystem {
    pub fn num_policy_vars(&self) -> usize {
        self.num_policy_vars
    }

    /// Index of θ_i(v) (CCE) or of the mass-weighted θ_i(v, c) (CE, with
    /// `suggested = Some(c)`).
    pub fn theta_var(&self, game: &GameSpec, player: usize, event: usize, suggested: Option<usize>) -> usize {
        let base = self.theta_offsets[player];
        match suggested {
            None => base + event,
            Some(c) => base + event * game.num_actions(player) + c,
        }
    }

    pub fn count(&self, pred: impl Fn(&RowTag) -> bool) -> usize {
        self.tags.iter().filter(|t| pred(t)).count()
    }

    pub fn num_aggregate_rows(&self) -> usize {
        self.count(|t| matches!(t, RowTag::Aggregate { .. }))
    }

    pub fn num_deviation_rows(&self) -> usize {
        self.count(|t| matches!(t, RowTag::Deviation { .. }))
    }

    /// Utility map over the system's variables.
    pub fn utility_map(&self, game: &GameSpec) -> AffineMap {
        let n = self.system.num_vars();
        let na = game.num_joint_actions();
        AffineMap::linear(
            (0..game.num_players())
                .map(|i| {
                    let mut row = vec![0.0; n];
                    for e in 0..game.num_joint_events() {
                        let p = game.prob(e);
                        if p > 0.0 {
                            for a in 0..na {
                                row[e * na + a] = p * game.u(i, a, e);
                            }
                        }
                    }
                    row
                })
                .collect(),
        )
    }

    /// Pins the policy variables to `policy`, leaving only θ free.
    pub fn with_policy(&self, policy: &ConditionalPolicy) -> LinearSystem {
        let mut s = self.system.clone();
        for (j, &p) in policy.probs().iter().enumerate() {
            s.fix(j, p);
        }
        s
    }
}

fn policy_block(game: &GameSpec, extra: usize) -> LinearSystem {
    let na = game.num_joint_actions();
    let np = game.num_joint_events() * na;
    let mut system = LinearSystem::new(np + extra);
    for e in 0..game.num_joint_events() {
        if game.prob(e) > 0.0 {
            let mut row = vec![0.0; np + extra];
            row[e * na..(e + 1) * na].iter_mut().for_each(|v| *v = 1.0);
            system.add_eq(row, 1.0);
            for a in 0..na {
                system.set_bounds(e * na + a, 0.0, 1.0);
            }
        } else {
            for a in 0..na {
                system.fix(e * na + a, 0.0);
            }
        }
    }
    system
}

/// Coefficients of `Σ_{ω: ω_i = v} π Σ_{α (: α_i = c)} Pr[α|ω] û_i((β, α_ī), ω)`
/// into `row`, scaled by `sign`.
fn add_deviation_terms(game: &GameSpec, row: &mut [f64], i: usize, v: usize, c: Option<usize>, beta: usize) {
    let na = game.num_joint_actions();
    for e in (0..game.num_joint_events()).filter(|&e| game.player_event(e, i) == v) {
        let p = game.prob(e);
        if p == 0.0 {
            continue;
        }
        for a in 0..na {
            if c.is_some_and(|c| game.player_action(a, i) != c) {
                continue;
            }
            row[e * na + a] += p * game.u(i, game.deviate(a, i, beta), e);
        }
    }
}

fn subtract_participation(game: &GameSpec, row: &mut [f64], i: usize) {
    let na = game.num_joint_actions();
    for e in 0..game.num_joint_events() {
        let p = game.prob(e);
        if p > 0.0 {
            for a in 0..na {
                row[e * na + a] -= p * game.u(i, a, e);
            }
        }
    }
}

/// Stochastic CCE: variables `Pr[α|ω]` and `θ_i(v) ∈ [0, u_i^max]`.
///
/// Because rows of `Pr[·|ω]` sum to one, `Σ_{ω: ω_i = v} Σ_α π Pr[α|ω] θ_i(v)`
/// equals `π_i(v) θ_i(v)`, so the system is linear. Cells with
/// `π_i(v) = 0` have θ fixed at zero and no deviation rows.
pub fn build_stochastic_cce_constraints(game: &GameSpec) -> StochasticSystem {
    let np = game.num_joint_events() * game.num_joint_actions();
    let mut offsets = Vec::new();
    let mut extra = 0;
    for i in 0..game.num_players() {
        offsets.push(np + extra);
        extra += game.num_player_events(i);
    }
    let mut system = policy_block(game, extra);
    let n = np + extra;
    let mut tags = Vec::new();

    for i in 0..game.num_players() {
        let mut row = vec![0.0; n];
        subtract_participation(game, &mut row, i);
        for v in 0..game.num_player_events(i) {
            row[offsets[i] + v] = game.player_event_prob(i, v);
        }
        system.add_le(row, 0.0);
        tags.push(RowTag::Aggregate { player: i });
    }
    for i in 0..game.num_players() {
        for v in 0..game.num_player_events(i) {
            let mass = game.player_event_prob(i, v);
            let theta = offsets[i] + v;
            if mass == 0.0 {
                system.fix(theta, 0.0);
                continue;
            }
            system.set_bounds(theta, 0.0, game.cap(i));
            for beta in 0..game.num_actions(i) {
                let mut row = vec![0.0; n];
                add_deviation_terms(game, &mut row, i, v, None, beta);
                row[theta] = -mass;
                system.add_le(row, 0.0);
                tags.push(RowTag::Deviation {
                    player: i,
                    event: v,
                    suggested: None,
                    beta,
                });
            }
        }
    }
    StochasticSystem {
        kind: EquilibriumKind::Cce,
        system,
        tags,
        num_policy_vars: np,
        theta_offsets: offsets,
    }
}

/// Stochastic CE: variables `Pr[α|ω]` and `ψ_i(v, c) = θ_i(v, c) m_i(v, c)`,
/// where `m_i(v, c)` is the probability of observing `v` and being told `c`.
///
/// The products θ·m make the printed constraints bilinear; in terms of ψ
/// they are linear, and `θ ∈ [0, u_i^max]` becomes `0 ≤ ψ ≤ u_i^max m`.
/// θ is recovered as `ψ / m` (zero where `m = 0`).
pub fn build_stochastic_ce_constraints(game: &GameSpec) -> StochasticSystem {
    let na = game.num_joint_actions();
    let np = game.num_joint_events() * na;
    let mut offsets = Vec::new();
    let mut extra = 0;
    for i in 0..game.num_players() {
        offsets.push(np + extra);
        extra += game.num_player_events(i) * game.num_actions(i);
    }
    let mut system = policy_block(game, extra);
    let n = np + extra;
    let mut tags = Vec::new();

    for i in 0..game.num_players() {
        let mut row = vec![0.0; n];
        subtract_participation(game, &mut row, i);
        row[offsets[i]..offsets[i] + game.num_player_events(i) * game.num_actions(i)]
            .iter_mut()
            .for_each(|v| *v = 1.0);
        system.add_le(row, 0.0);
        tags.push(RowTag::Aggregate { player: i });
    }
    for i in 0..game.num_players() {
        let ai = game.num_actions(i);
        for v in 0..game.num_player_events(i) {
            let cell_mass = game.player_event_prob(i, v);
            for c in 0..ai {
                let psi = offsets[i] + v * ai + c;
                if cell_mass == 0.0 {
                    system.fix(psi, 0.0);
                    continue;
                }
                system.set_bounds(psi, 0.0, f64::INFINITY);
                for beta in 0..ai {
                    let mut row = vec![0.0; n];
                    add_deviation_terms(game, &mut row, i, v, Some(c), beta);
                    row[psi] = -1.0;
                    system.add_le(row, 0.0);
                    tags.push(RowTag::Deviation {
                        player: i,
                        event: v,
                        suggested: Some(c),
                        beta,
                    });
                }
            }
        }
        for v in 0..game.num_player_events(i) {
            if game.player_event_prob(i, v) == 0.0 {
                continue;
            }
            for c in 0..ai {
                let mut row = vec![0.0; n];
                for e in (0..game.num_joint_events()).filter(|&e| game.player_event(e, i) == v) {
                    let p = game.prob(e);
                    for a in (0..na).filter(|&a| game.player_action(a, i) == c) {
                        row[e * na + a] = -p * game.cap(i);
                    }
                }
                row[offsets[i] + v * ai + c] = 1.0;
                system.add_le(row, 0.0);
                tags.push(RowTag::ThetaCap {
                    player: i,
                    event: v,
                    suggested: c,
                });
            }
        }
    }
    StochasticSystem {
        kind: EquilibriumKind::Ce,
        system,
        tags,
        num_policy_vars: np,
        theta_offsets: offsets,
    }
}

/// The stricter per-observation variant without θ: for every `(i, v_i, β_i)`,
/// the conditional participation utility given `ω_i = v_i` is at least the
/// conditional utility of always playing `β_i` there.
pub fn build_stochastic_cce_per_event_constraints(game: &GameSpec) -> StochasticSystem {
    let np = game.num_joint_events() * game.num_joint_actions();
    let mut system = policy_block(game, 0);
    let mut tags = Vec::new();
    let na = game.num_joint_actions();
    for i in 0..game.num_players() {
        for v in 0..game.num_player_events(i) {
            if game.player_event_prob(i, v) == 0.0 {
                continue;
            }
            for beta in 0..game.num_actions(i) {
                let mut row = vec![0.0; np];
                add_deviation_terms(game, &mut row, i, v, None, beta);
                for e in (0..game.num_joint_events()).filter(|&e| game.player_event(e, i) == v) {
                    let p = game.prob(e);
                    for a in 0..na {
                        row[e * na + a] -= p * game.u(i, a, e);
                    }
                }
                system.add_le(row, 0.0);
                tags.push(RowTag::Deviation {
                    player: i,
                    event: v,
                    suggested: None,
                    beta,
                });
            }
        }
    }
    StochasticSystem {
        kind: EquilibriumKind::Cce,
        system,
        tags,
        num_policy_vars: np,
        theta_offsets: vec![np; game.num_players()],
    }
}

pub fn build_stochastic_constraints(game: &GameSpec, kind: EquilibriumKind) -> Result<StochasticSystem, StochasticError> {
    match kind {
        EquilibriumKind::Cce => Ok(build_stochastic_cce_constraints(game)),
        EquilibriumKind::Ce => Ok(build_stochastic_ce_constraints(game)),
        EquilibriumKind::Ne => Err(StochasticError::NashNotOptimizable),
    }
}

/// Substitutes the generation map into `stoch`: variables become
/// `Pr[s]` over profiles followed by the θ entries of `stoch`.
pub fn profile_form(game: &GameSpec, virtual_game: &VirtualGame, stoch: &StochasticSystem) -> LinearSystem {
    let na = game.num_joint_actions();
    let np = stoch.num_policy_vars;
    let ns = virtual_game.num_profiles();
    let nt = stoch.system.num_vars() - np;
    // actions[s][e] = b^(s)(ω_e)
    let actions: Vec<Vec<usize>> = (0..ns)
        .map(|s| {
            let profile = virtual_game.profile(s);
            (0..game.num_joint_events())
                .map(|e| profile_action(game, &profile, e))
                .collect()
        })
        .collect();
    let mut out = LinearSystem::new(ns + nt);
    out.add_eq((0..ns + nt).map(|j| if j < ns { 1.0 } else { 0.0 }).collect(), 1.0);
    for j in 0..nt {
        let (lo, hi) = stoch.system.bounds(np + j);
        out.set_bounds(ns + j, lo, hi);
    }
    for (row, b) in stoch.system.ub_rows() {
        let mut r = vec![0.0; ns + nt];
        for (s, acts) in actions.iter().enumerate() {
            r[s] = acts.iter().enumerate().map(|(e, &a)| row[e * na + a]).sum();
        }
        r[ns..].copy_from_slice(&row[np..]);
        out.add_le(r, b);
    }
    out
}

/// Utility map of [`profile_form`]: `ū = Σ_s Pr[s] h(s)`.
pub fn profile_utility_map(virtual_game: &VirtualGame, num_theta: usize) -> AffineMap {
    let ns = virtual_game.num_profiles();
    AffineMap::linear(
        (0..virtual_game.spec.num_players())
            .map(|i| {
                let mut row: Vec<f64> = (0..ns).map(|s| virtual_game.spec.u(i, s, 0)).collect();
                row.resize(ns + num_theta, 0.0);
                row
            })
            .collect(),
    )
}

/// Best deterministic deviation of a player against a policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationPlan {
    pub player: usize,
    pub mode: EquilibriumKind,
    /// CCE: `plan[v]`; CE: `plan[v·|A_i| + c]`.
    pub plan: Vec<usize>,
    /// Expected utility of the player under the plan.
    pub value: f64,
}

/// Cell-wise argmax over deviations, lowest index first on ties. For CE the
/// cells are `(v, c)`; for CCE (and NE) they are `v`.
pub fn best_deviation(
    game: &GameSpec,
    policy: &ConditionalPolicy,
    player: usize,
    mode: EquilibriumKind,
) -> Result<DeviationPlan, StochasticError> {
    check_policy(game, policy)?;
    let ai = game.num_actions(player);
    let conditioned = mode == EquilibriumKind::Ce;
    let cells = game.num_player_events(player) * if conditioned { ai } else { 1 };
    // gains[cell][β]
    let mut gains = vec![vec![0.0; ai]; cells];
    for e in 0..game.num_joint_events() {
        let p = game.prob(e);
        if p == 0.0 {
            continue;
        }
        let v = game.player_event(e, player);
        for (a, &q) in policy.row(e).iter().enumerate() {
            if q == 0.0 {
                continue;
            }
            let cell = if conditioned { v * ai + game.player_action(a, player) } else { v };
            for (beta, g) in gains[cell].iter_mut().enumerate() {
                *g += p * q * game.u(player, game.deviate(a, player, beta), e);
            }
        }
    }
    let mut plan = Vec::with_capacity(cells);
    let mut value = 0.0;
    for g in &gains {
        let mut best = 0;
        for beta in 1..ai {
            if g[beta] > g[best] {
                best = beta;
            }
        }
        plan.push(best);
        value += g[best];
    }
    Ok(DeviationPlan {
        player,
        mode,
        plan,
        value,
    })
}

fn check_policy(game: &GameSpec, policy: &ConditionalPolicy) -> Result<(), StochasticError> {
    if !policy.matches(game) {
        return Err(StochasticError::DimensionMismatch {
            expected: game.num_joint_events() * game.num_joint_actions(),
            found: policy.probs().len(),
        });
    }
    Ok(())
}

/// Largest deviation from `Pr[α|ω] = Π_i Pr[α_i|ω_i]` over events with
/// positive probability, where `Pr[α_i|ω_i]` must not depend on the other
/// components of `ω`.
fn conditional_product_gap(game: &GameSpec, policy: &ConditionalPolicy) -> (f64, usize, usize) {
    let mut worst = (0.0, 0, 0);
    // Per-player conditional marginals, first seen per observed value.
    let mut reference: Vec<Vec<Option<Vec<f64>>>> = (0..game.num_players())
        .map(|i| vec![None; game.num_player_events(i)])
        .collect();
    for e in (0..game.num_joint_events()).filter(|&e| game.prob(e) > 0.0) {
        let row = policy.row(e);
        let marg = crate::static_eq::marginals(game, row);
        for (a, &q) in row.iter().enumerate() {
            let prod: f64 = (0..game.num_players()).map(|i| marg[i][game.player_action(a, i)]).product();
            if (q - prod).abs() > worst.0 {
                worst = ((q - prod).abs(), e, a);
            }
        }
        for (i, m) in marg.into_iter().enumerate() {
            let slot = &mut reference[i][game.player_event(e, i)];
            match slot {
                None => *slot = Some(m),
                Some(r) => {
                    for (k, (x, y)) in r.iter().zip(&m).enumerate() {
                        if (x - y).abs() > worst.0 {
                            let a = game.deviate(0, i, k);
                            worst = ((x - y).abs(), e, a);
                        }
                    }
                }
            }
        }
    }
    worst
}

pub fn certify_stochastic(
    game: &GameSpec,
    policy: &ConditionalPolicy,
    kind: EquilibriumKind,
) -> Result<CertificationReport, StochasticError> {
    certify_stochastic_with_tol(game, policy, kind, crate::static_eq::CERT_TOL)
}

/// Certifies via the deviation oracle: the policy is an equilibrium of
/// `kind` iff no player's best deterministic plan beats participation.
pub fn certify_stochastic_with_tol(
    game: &GameSpec,
    policy: &ConditionalPolicy,
    kind: EquilibriumKind,
    tol: f64,
) -> Result<CertificationReport, StochasticError> {
    check_policy(game, policy)?;
    let utilities = policy_utilities(game, policy);
    let mut worst_violation = f64::NEG_INFINITY;
    let mut violating = None;
    for (i, u) in utilities.iter().enumerate() {
        let plan = best_deviation(game, policy, i, kind)?;
        let gain = plan.value - u;
        if gain > worst_violation {
            worst_violation = gain;
            violating = Some(ConstraintId::Plan { player: i });
        }
    }
    if kind == EquilibriumKind::Ne {
        let (gap, event, action) = conditional_product_gap(game, policy);
        if gap > worst_violation {
            worst_violation = gap;
            violating = Some(ConstraintId::ProductForm { event, action });
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

/// θ values of a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "lowercase")]
pub enum ThetaAssignment {
    /// `theta[i][v]`
    Cce(Vec<Vec<f64>>),
    /// `theta[i][v][c]`
    Ce(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticOptimum {
    pub policy: ConditionalPolicy,
    pub theta: ThetaAssignment,
    pub utilities: Vec<f64>,
    pub value: f64,
    pub gap: f64,
}

/// Maximizes `φ(ū)` over the stochastic CE or CCE set.
pub fn optimize_stochastic(
    game: &GameSpec,
    phi: &FairnessFunction,
    kind: EquilibriumKind,
) -> Result<StochasticOptimum, StochasticError> {
    optimize_stochastic_with(game, phi, kind, FwOptions::default())
}

pub fn optimize_stochastic_with(
    game: &GameSpec,
    phi: &FairnessFunction,
    kind: EquilibriumKind,
    opts: FwOptions,
) -> Result<StochasticOptimum, StochasticError> {
    let stoch = build_stochastic_constraints(game, kind)?;
    let sol = maximize_concave(&stoch.system, &stoch.utility_map(game), phi, opts)?;
    let np = stoch.num_policy_vars();
    let policy = ConditionalPolicy::project(game, sol.x[..np].to_vec())?;
    let theta = recover_theta(game, &stoch, &policy, &sol.x);
    let utilities = policy_utilities(game, &policy);
    Ok(StochasticOptimum {
        value: phi.value(&utilities),
        policy,
        theta,
        utilities,
        gap: sol.gap,
    })
}

fn recover_theta(game: &GameSpec, stoch: &StochasticSystem, policy: &ConditionalPolicy, x: &[f64]) -> ThetaAssignment {
    let clamp = |i: usize, t: f64| t.clamp(0.0, game.cap(i));
    match stoch.kind {
        EquilibriumKind::Ce => ThetaAssignment::Ce(
            (0..game.num_players())
                .map(|i| {
                    let ai = game.num_actions(i);
                    let mut mass = vec![vec![0.0; ai]; game.num_player_events(i)];
                    for e in 0..game.num_joint_events() {
                        for (a, &q) in policy.row(e).iter().enumerate() {
                            mass[game.player_event(e, i)][game.player_action(a, i)] += game.prob(e) * q;
                        }
                    }
                    (0..game.num_player_events(i))
                        .map(|v| {
                            (0..ai)
                                .map(|c| {
                                    let m = mass[v][c];
                                    let psi = x[stoch.theta_var(game, i, v, Some(c))];
                                    if m > 0.0 {
                                        clamp(i, psi / m)
                                    } else {
                                        0.0
                                    }
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect(),
        ),
        _ => ThetaAssignment::Cce(
            (0..game.num_players())
                .map(|i| {
                    (0..game.num_player_events(i))
                        .map(|v| clamp(i, x[stoch.theta_var(game, i, v, None)]))
                        .collect()
                })
                .collect(),
        ),
    }
}

/// Deviation-row counts of the two CCE formulations, for reporting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityReport {
    /// `Σ_i |A_i|^|Ω_i|`
    pub virtual_static_rows: u128,
    /// `N + Σ_i |Ω_i| |A_i|`
    pub stochastic_rows: usize,
}

pub fn complexity_report(game: &GameSpec) -> ComplexityReport {
    let virtual_static_rows = (0..game.num_players())
        .map(|i| (game.num_actions(i) as u128).saturating_pow(game.num_player_events(i) as u32))
        .fold(0u128, u128::saturating_add);
    let stochastic_rows =
        game.num_players() + (0..game.num_players()).map(|i| game.num_player_events(i) * game.num_actions(i)).sum::<usize>();
    ComplexityReport {
        virtual_static_rows,
        stochastic_rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{fig1, full_information_game, random_game};
    use crate::game::seeded_rng;
    use crate::optim::{lp_feasible, lp_solve, Sense};
    use crate::static_eq::{build_cce_constraints, optimize_static};
    use proptest::prelude::*;
    use rand::Rng;

    fn random_pmf(rng: &mut crate::game::GameRng, n: usize) -> JointPmf {
        let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powi(3)).collect();
        let t: f64 = w.iter().sum();
        JointPmf::project(w.iter().map(|x| x / t).collect()).unwrap()
    }

    #[test]
    fn strategy_counts() {
        let g = random_game(1, &[2, 3], &[1, 2, 2]);
        assert_eq!(enumerate_pure_strategies(&g, 0).unwrap().len(), 4);
        assert_eq!(enumerate_pure_strategies(&g, 1).unwrap().len(), 9);
        let f = fig1();
        let s = enumerate_pure_strategies(&f, 0).unwrap();
        assert_eq!(s.iter().map(|s| s.map.clone()).collect::<Vec<_>>(), vec![vec![0], vec![1], vec![2]]);
        let big = random_game(1, &[3, 2], &[1, 8, 1]);
        assert_eq!(
            enumerate_pure_strategies(&big, 0),
            Err(StochasticError::EnumerationTooLarge { player: 0, count: 6561, cap: ENUMERATION_CAP })
        );
    }

    #[test]
    fn virtual_utility_matches_direct_summation() {
        let g = random_game(5, &[2, 2], &[2, 2, 2]);
        let s0 = enumerate_pure_strategies(&g, 0).unwrap();
        let s1 = enumerate_pure_strategies(&g, 1).unwrap();
        for a in &s0 {
            for b in &s1 {
                let h = virtual_utility(&g, &[a, b]);
                for i in 0..2 {
                    let mut direct = 0.0;
                    for w0 in 0..2 {
                        for w1 in 0..2 {
                            for w2 in 0..2 {
                                let e = g.event_radix().encode(&[w0, w1, w2]);
                                let act = g.action_radix().encode(&[a.map[w1], b.map[w2]]);
                                direct += g.prob(e) * g.u(i, act, e);
                            }
                        }
                    }
                    assert!((h[i] - direct).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn virtual_utility_of_constant_and_degenerate_games() {
        let mut raw = random_game(2, &[2, 2], &[1, 2, 2]).to_raw();
        raw.caps = None;
        raw.utilities.iter_mut().for_each(|u| u.iter_mut().for_each(|x| *x = 3.0));
        let g = validate_game(raw.clone()).unwrap();
        let v = virtual_static_game(&g).unwrap();
        for s in 0..v.num_profiles() {
            assert_eq!(v.spec.u(0, s, 0), 3.0);
        }

        let mut raw = random_game(2, &[2, 2], &[1, 2, 2]).to_raw();
        raw.caps = None;
        raw.pmf = vec![0.0, 0.0, 1.0, 0.0];
        let g = validate_game(raw).unwrap();
        let s0 = enumerate_pure_strategies(&g, 0).unwrap();
        let s1 = enumerate_pure_strategies(&g, 1).unwrap();
        let h = virtual_utility(&g, &[&s0[2], &s1[1]]);
        let a = profile_action(&g, &[&s0[2], &s1[1]], 2);
        assert_eq!(h[1], g.u(1, a, 2));
    }

    #[test]
    fn generation_map_properties() {
        let g = random_game(9, &[2, 2], &[2, 2, 2]);
        let v = virtual_static_game(&g).unwrap();
        let mut rng = seeded_rng(1);
        let p = random_pmf(&mut rng, v.num_profiles());
        let pol = policy_from_profile_pmf(&g, &v, &p).unwrap();
        let radix = g.event_radix();
        for e in 0..g.num_joint_events() {
            let s: f64 = pol.row(e).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            let d = radix.decode(e);
            let flipped = radix.encode(&[1 - d[0], d[1], d[2]]);
            assert_eq!(pol.row(e), pol.row(flipped));
        }

        // Point mass collapses to a deterministic policy.
        let pm = JointPmf::point_mass(v.num_profiles(), 7);
        let pol = policy_from_profile_pmf(&g, &v, &pm).unwrap();
        let prof = v.profile(7);
        for e in 0..g.num_joint_events() {
            assert_eq!(pol.prob(e, profile_action(&g, &prof, e)), 1.0);
        }

        // Product-form profile pmfs generate product-form policies.
        let g0 = random_pmf(&mut rng, 4);
        let g1 = random_pmf(&mut rng, 4);
        let prod: Vec<f64> = (0..16).map(|s| g0.probs()[s / 4] * g1.probs()[s % 4]).collect();
        let pol = policy_from_profile_pmf(&g, &v, &JointPmf::project(prod).unwrap()).unwrap();
        assert!(conditional_product_gap(&g, &pol).0 < 1e-12);
    }

    #[test]
    fn appendix_identities() {
        let mut rng = seeded_rng(77);
        for seed in 0..10 {
            let g = random_game(seed, &[2, 3], &[2, 2, 2]);
            let v = virtual_static_game(&g).unwrap();
            let p = random_pmf(&mut rng, v.num_profiles());
            let pol = policy_from_profile_pmf(&g, &v, &p).unwrap();
            let lhs = policy_utilities(&g, &pol);
            for i in 0..2 {
                let rhs: f64 = (0..v.num_profiles()).map(|s| p.probs()[s] * v.spec.u(i, s, 0)).sum();
                assert!((lhs[i] - rhs).abs() < 1e-12);
                // Deviation identity: Σ_s Pr[s] h_i(r_i, s_ī) equals the
                // policy-side deviation utility of the fixed strategy r_i.
                for r in &v.strategies[i] {
                    let virt: f64 = (0..v.num_profiles())
                        .map(|s| p.probs()[s] * v.spec.u(i, v.spec.deviate(s, i, r.index), 0))
                        .sum();
                    let mut direct = 0.0;
                    for e in 0..g.num_joint_events() {
                        for (a, &q) in pol.row(e).iter().enumerate() {
                            let dev = g.deviate(a, i, r.map[g.player_event(e, i)]);
                            direct += g.prob(e) * q * g.u(i, dev, e);
                        }
                    }
                    assert!((virt - direct).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn row_counts() {
        let g = random_game(3, &[2, 2], &[1, 2, 2]);
        let cce = build_stochastic_cce_constraints(&g);
        assert_eq!(cce.num_aggregate_rows() + cce.num_deviation_rows(), 10);
        let ce = build_stochastic_ce_constraints(&g);
        assert_eq!(ce.num_deviation_rows(), 2 * 2 * 4);
        assert_eq!(ce.num_aggregate_rows(), 2);
        let r = complexity_report(&random_game(3, &[3, 2], &[1, 3, 2]));
        assert_eq!(r.virtual_static_rows, 27 + 4);
        assert_eq!(r.stochastic_rows, 2 + 9 + 4);
    }

    #[test]
    fn singleton_events_reduce_to_the_static_polytope() {
        let g = fig1();
        let phi = FairnessFunction::weighted_log([10.0, 1.0]);
        let s = optimize_stochastic(&g, &phi, EquilibriumKind::Cce).unwrap();
        let t = optimize_static(&g, &phi, EquilibriumKind::Cce).unwrap();
        assert!((s.utilities[0] - 3.7323).abs() < 1e-3 && (s.utilities[1] - 5.9091).abs() < 1e-3);
        assert!((s.value - t.value).abs() < 1e-6);
        for w in [[0.0, 1.0], [1.0, 0.0], [-1.0, -0.2]] {
            let a = optimize_stochastic(&g, &FairnessFunction::linear(w.map(f64::abs)), EquilibriumKind::Cce);
            let b = optimize_static(&g, &FairnessFunction::linear(w.map(f64::abs)), EquilibriumKind::Cce);
            assert!((a.unwrap().value - b.unwrap().value).abs() < 1e-9);
        }
        let ce = optimize_stochastic(&g, &phi, EquilibriumKind::Ce).unwrap();
        assert!((ce.utilities[0] - 3.5).abs() < 1e-6 && (ce.utilities[1] - 2.4).abs() < 1e-6);
    }

    #[test]
    fn optimum_certifies_and_theta_is_in_range() {
        let g = random_game(11, &[2, 2], &[2, 2, 2]);
        let phi = FairnessFunction::weighted_log([1.0, 1.0]);
        for kind in [EquilibriumKind::Cce, EquilibriumKind::Ce] {
            let opt = optimize_stochastic(&g, &phi, kind).unwrap();
            let r = certify_stochastic_with_tol(&g, &opt.policy, kind, 1e-6).unwrap();
            assert!(r.satisfied, "{kind}: {r:?}");
            let all: Vec<f64> = match &opt.theta {
                ThetaAssignment::Cce(t) => t.iter().flatten().copied().collect(),
                ThetaAssignment::Ce(t) => t.iter().flatten().flatten().copied().collect(),
            };
            assert!(all.iter().all(|&t| (0.0..=10.0).contains(&t)));
        }
    }

    #[test]
    fn linear_objective_matches_a_single_lp() {
        let g = random_game(4, &[2, 2], &[2, 2, 2]);
        let stoch = build_stochastic_cce_constraints(&g);
        let map = stoch.utility_map(&g);
        let c = map.pull_back(&[1.0, 2.0]);
        let lp = lp_solve(&stoch.system, &c, Sense::Max).unwrap();
        let opt = optimize_stochastic(&g, &FairnessFunction::linear([1.0, 2.0]), EquilibriumKind::Cce).unwrap();
        assert!((lp.objective - opt.value).abs() < 1e-9);
    }

    #[test]
    fn generated_policies_form_a_subset_with_equality_under_full_information() {
        let phi = FairnessFunction::linear([1.0, 3.0]);
        for seed in 0..5 {
            let g = random_game(seed, &[2, 2], &[2, 2, 2]);
            let v = virtual_static_game(&g).unwrap();
            let virt = optimize_static(&v.spec, &phi, EquilibriumKind::Cce).unwrap();
            let stoch = optimize_stochastic(&g, &phi, EquilibriumKind::Cce).unwrap();
            assert!(stoch.value >= virt.value - 1e-9);

            let g = full_information_game(seed, &[2, 2], 2);
            let v = virtual_static_game(&g).unwrap();
            let virt = optimize_static(&v.spec, &phi, EquilibriumKind::Cce).unwrap();
            let stoch = optimize_stochastic(&g, &phi, EquilibriumKind::Cce).unwrap();
            assert!((stoch.value - virt.value).abs() < 1e-6, "seed {seed}: {} vs {}", stoch.value, virt.value);
        }
    }

    #[test]
    fn ce_feasible_points_are_cce_feasible() {
        let g = random_game(6, &[2, 3], &[2, 2, 1]);
        let opt = optimize_stochastic(&g, &FairnessFunction::weighted_log([2.0, 1.0]), EquilibriumKind::Ce).unwrap();
        let cce = build_stochastic_cce_constraints(&g);
        assert!(lp_feasible(&cce.with_policy(&opt.policy), 1e-7).unwrap());
        let lin = FairnessFunction::linear([1.0, 1.0]);
        let a = optimize_stochastic(&g, &lin, EquilibriumKind::Ce).unwrap().value;
        let b = optimize_stochastic(&g, &lin, EquilibriumKind::Cce).unwrap().value;
        assert!(a <= b + 1e-9);
    }

    #[test]
    fn per_event_variant_is_more_restrictive() {
        let lin = FairnessFunction::linear([1.0, 1.0]);
        for seed in 0..5 {
            let g = random_game(seed, &[2, 2], &[1, 2, 2]);
            let strict = build_stochastic_cce_per_event_constraints(&g);
            let sol = lp_solve(&strict.system, &strict.utility_map(&g).pull_back(&[1.0, 1.0]), Sense::Max).unwrap();
            let loose = optimize_stochastic(&g, &lin, EquilibriumKind::Cce).unwrap();
            assert!(sol.objective <= loose.value + 1e-9);
        }
    }

    #[test]
    fn deviation_values_on_the_example() {
        let g = fig1();
        let d1 = JointPmf::project(vec![0.0, 0.0, 0.45, 0.15, 0.3, 0.1]).unwrap();
        let pol = ConditionalPolicy::constant(&g, &d1).unwrap();
        let p1 = best_deviation(&g, &pol, 0, EquilibriumKind::Cce).unwrap();
        let p2 = best_deviation(&g, &pol, 1, EquilibriumKind::Cce).unwrap();
        // Against player-2 marginals (0.75, 0.25): alpha → 2.75, beta → 3.5, gamma → 3.5.
        assert!((p1.value - 3.5).abs() < 1e-12);
        assert_eq!(p1.plan, vec![1]);
        // Against player-1 marginals (0, 0.6, 0.4): alpha → 2.4, beta → 2.4.
        assert!((p2.value - 2.4).abs() < 1e-12);
        assert!(certify_stochastic(&g, &pol, EquilibriumKind::Ne).unwrap().satisfied);
    }

    #[test]
    fn best_response_point_mass_has_no_gain() {
        let g = random_game(8, &[2, 2], &[2, 2, 2]);
        let na = g.num_joint_actions();
        let mut probs = vec![0.0; g.num_joint_events() * na];
        for e in 0..g.num_joint_events() {
            let best = (0..na).fold(0, |b, a| if g.u(0, a, e) > g.u(0, b, e) { a } else { b });
            probs[e * na + best] = 1.0;
        }
        let pol = ConditionalPolicy::new(&g, probs).unwrap();
        let plan = best_deviation(&g, &pol, 0, EquilibriumKind::Ce).unwrap();
        assert!((plan.value - policy_utilities(&g, &pol)[0]).abs() < 1e-12);
    }

    #[test]
    fn virtual_ne_generates_stochastic_ne() {
        // Pure NE of the virtual game, when one exists, generates a stochastic NE.
        let mut found = 0;
        for seed in 0..20 {
            let g = random_game(seed, &[2, 2], &[1, 2, 2]);
            let v = virtual_static_game(&g).unwrap();
            for s in 0..v.num_profiles() {
                let pm = JointPmf::point_mass(v.num_profiles(), s);
                if crate::static_eq::certify(&v.spec, &pm, EquilibriumKind::Ne).unwrap().satisfied {
                    let pol = policy_from_profile_pmf(&g, &v, &pm).unwrap();
                    let r = certify_stochastic(&g, &pol, EquilibriumKind::Ne).unwrap();
                    assert!(r.satisfied, "{r:?}");
                    assert!(certify_stochastic(&g, &pol, EquilibriumKind::Ce).unwrap().satisfied);
                    found += 1;
                }
            }
        }
        assert!(found > 0);
    }

    #[test]
    fn virtual_cce_feasibility_matches_stochastic_feasibility() {
        let mut rng = seeded_rng(3);
        let (mut yes, mut no) = (0, 0);
        for seed in 0..10 {
            let g = random_game(seed, &[2, 2], &[1, 2, 2]);
            let v = virtual_static_game(&g).unwrap();
            let virt = build_cce_constraints(&v.spec).unwrap();
            let stoch = build_stochastic_cce_constraints(&g);
            for _ in 0..10 {
                let p = random_pmf(&mut rng, v.num_profiles());
                let in_virtual = virt.max_violation(p.probs()) <= 1e-8;
                let pol = policy_from_profile_pmf(&g, &v, &p).unwrap();
                let in_stoch = lp_feasible(&stoch.with_policy(&pol), 1e-8).unwrap();
                assert_eq!(in_virtual, in_stoch);
                if in_virtual {
                    yes += 1;
                } else {
                    no += 1;
                }
            }
        }
        assert!(no > 0);
        let _ = yes;
    }

    fn relabel_manager_event(g: &GameSpec, perm: &[usize]) -> (GameSpec, Vec<usize>) {
        let radix = g.event_radix();
        let table: Vec<usize> = (0..g.num_joint_events())
            .map(|e| {
                let mut d = radix.decode(e);
                d[0] = perm[d[0]];
                radix.encode(&d)
            })
            .collect();
        let map = |e: usize| table[e];
        let mut raw = g.to_raw();
        let na = g.num_joint_actions();
        let mut pmf = vec![0.0; raw.pmf.len()];
        let mut utilities = raw.utilities.clone();
        for e in 0..g.num_joint_events() {
            pmf[map(e)] = g.prob(e);
            for i in 0..g.num_players() {
                for a in 0..na {
                    utilities[i][map(e) * na + a] = g.u(i, a, e);
                }
            }
        }
        raw.pmf = pmf;
        raw.utilities = utilities;
        (validate_game(raw).unwrap(), table)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn relabeling_manager_events_preserves_deviation_values(seed in 0u64..100_000) {
            let g = random_game(seed, &[2, 2], &[3, 2, 2]);
            let mut rng = seeded_rng(seed);
            let na = g.num_joint_actions();
            let probs: Vec<f64> = (0..g.num_joint_events())
                .flat_map(|_| random_pmf(&mut rng, na).into_inner())
                .collect();
            let pol = ConditionalPolicy::project(&g, probs.clone()).unwrap();
            let (h, table) = relabel_manager_event(&g, &[2, 0, 1]);
            let map = |e: usize| table[e];
            let mut moved = vec![0.0; probs.len()];
            for e in 0..g.num_joint_events() {
                moved[map(e) * na..(map(e) + 1) * na].copy_from_slice(&probs[e * na..(e + 1) * na]);
            }
            let pol2 = ConditionalPolicy::project(&h, moved).unwrap();
            for i in 0..2 {
                for mode in [EquilibriumKind::Cce, EquilibriumKind::Ce] {
                    let a = best_deviation(&g, &pol, i, mode).unwrap();
                    let b = best_deviation(&h, &pol2, i, mode).unwrap();
                    prop_assert!((a.value - b.value).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn deviation_plan_dominates_constant_actions(seed in 0u64..100_000) {
            let g = random_game(seed, &[3, 2], &[2, 2, 3]);
            let mut rng = seeded_rng(seed ^ 1);
            let na = g.num_joint_actions();
            let probs: Vec<f64> = (0..g.num_joint_events())
                .flat_map(|_| random_pmf(&mut rng, na).into_inner())
                .collect();
            let pol = ConditionalPolicy::project(&g, probs).unwrap();
            for i in 0..2 {
                let cce = best_deviation(&g, &pol, i, EquilibriumKind::Cce).unwrap();
                let ce = best_deviation(&g, &pol, i, EquilibriumKind::Ce).unwrap();
                prop_assert!(ce.value >= cce.value - 1e-12);
                for beta in 0..g.num_actions(i) {
                    let mut constant = 0.0;
                    for e in 0..g.num_joint_events() {
                        for (a, &q) in pol.row(e).iter().enumerate() {
                            constant += g.prob(e) * q * g.u(i, g.deviate(a, i, beta), e);
                        }
                    }
                    prop_assert!(cce.value >= constant - 1e-12);
                }
            }
        }
    }
}
