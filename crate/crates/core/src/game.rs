//! Finite stochastic games: alphabets, the joint event distribution and dense
//! utility tables.
//!
//! Joint actions and joint events are addressed by mixed-radix indices with
//! the first component most significant, so for two players with three and two
//! actions the joint actions enumerate as `(0,0), (0,1), (1,0), (1,1), (2,0),
//! (2,1)`. Event index 0 is the manager-only component; player `i` (0-based)
//! observes event component `i + 1`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the total mass of any probability vector.
pub const PMF_TOLERANCE: f64 = 1e-12;

/// Deterministic generator used for every random draw in the crate.
///
/// PCG-XSH-RR with 64 bits of state and 32-bit output. The same seed
/// reproduces the same stream on every platform.
pub type GameRng = rand_pcg::Pcg32;

pub fn seeded_rng(seed: u64) -> GameRng {
    GameRng::seed_from_u64(seed)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("a game needs at least one player")]
    NoPlayers,
    #[error("{what} alphabet is empty")]
    EmptyAlphabet { what: String },
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("event pmf sums to {sum}, not 1")]
    PmfNotNormalized { sum: f64 },
    #[error("event pmf entry {event} is {value}")]
    InvalidProbability { event: usize, value: f64 },
    #[error("player {player}: utility {value} at joint action {action}, joint event {event} is negative")]
    NegativeUtility {
        player: usize,
        action: usize,
        event: usize,
        value: f64,
    },
    #[error("player {player}: utility at joint action {action}, joint event {event} is not finite")]
    NonFiniteUtility {
        player: usize,
        action: usize,
        event: usize,
    },
    #[error("player {player}: utility {value} exceeds the declared cap {cap}")]
    UtilityAboveCap { player: usize, value: f64, cap: f64 },
    #[error("{what} index {index} out of range (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },
}

/// Mixed-radix codec, first digit most significant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedRadix {
    radices: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl MixedRadix {
    pub fn new(radices: Vec<usize>) -> Self {
        let mut strides = vec![1; radices.len()];
        let mut size = 1usize;
        for k in (0..radices.len()).rev() {
            strides[k] = size;
            size = size.saturating_mul(radices[k]);
        }
        Self {
            radices,
            strides,
            size,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn stride(&self, digit: usize) -> usize {
        self.strides[digit]
    }

    pub fn encode(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.radices.len());
        digits
            .iter()
            .zip(&self.strides)
            .map(|(d, s)| d * s)
            .sum()
    }

    pub fn digit(&self, index: usize, digit: usize) -> usize {
        (index / self.strides[digit]) % self.radices[digit]
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        (0..self.radices.len())
            .map(|k| self.digit(index, k))
            .collect()
    }

    /// Index obtained by overwriting one digit.
    pub fn replace(&self, index: usize, digit: usize, value: usize) -> usize {
        let old = self.digit(index, digit);
        index - old * self.strides[digit] + value * self.strides[digit]
    }
}

/// Unvalidated, dense game description.
///
/// `events` has one alphabet per event component, manager-only component
/// first. `pmf` is indexed by joint event; `utilities[i]` is indexed by
/// `event * |A| + action`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawGame {
    pub player_names: Vec<String>,
    pub actions: Vec<Vec<String>>,
    pub events: Vec<Vec<String>>,
    pub pmf: Vec<f64>,
    pub utilities: Vec<Vec<f64>>,
    #[serde(default)]
    pub caps: Option<Vec<f64>>,
}

impl RawGame {
    /// A game without random events: every event alphabet is the singleton
    /// `["-"]` and `utilities[i]` is indexed by joint action alone.
    pub fn static_game(actions: Vec<Vec<String>>, utilities: Vec<Vec<f64>>) -> Self {
        let n = actions.len();
        Self {
            player_names: (1..=n).map(|i| format!("p{i}")).collect(),
            actions,
            events: vec![vec!["-".to_string()]; n + 1],
            pmf: vec![1.0],
            utilities,
            caps: None,
        }
    }
}

/// A validated finite stochastic game. Immutable once built.
#[derive(Debug, Clone)]
pub struct GameSpec {
    player_names: Vec<String>,
    actions: Vec<Vec<String>>,
    events: Vec<Vec<String>>,
    pmf: Vec<f64>,
    utilities: Vec<Vec<f64>>,
    caps: Vec<f64>,
    action_radix: MixedRadix,
    event_radix: MixedRadix,
    sampler: WeightedIndex<f64>,
}

impl PartialEq for GameSpec {
    fn eq(&self, other: &Self) -> bool {
        self.player_names == other.player_names
            && self.actions == other.actions
            && self.events == other.events
            && self.pmf == other.pmf
            && self.utilities == other.utilities
            && self.caps == other.caps
    }
}

/// Checks every invariant of a raw description and builds the game.
///
/// Declared caps above the observed table maxima are tightened to those
/// maxima; missing caps default to them.
pub fn validate_game(raw: RawGame) -> Result<GameSpec, GameError> {
    let n = raw.actions.len();
    if n == 0 {
        return Err(GameError::NoPlayers);
    }
    check_len("player names", n, raw.player_names.len())?;
    for (i, alphabet) in raw.actions.iter().enumerate() {
        if alphabet.is_empty() {
            return Err(GameError::EmptyAlphabet {
                what: format!("action set of player {i}"),
            });
        }
    }
    check_len("event alphabets", n + 1, raw.events.len())?;
    for (k, alphabet) in raw.events.iter().enumerate() {
        if alphabet.is_empty() {
            return Err(GameError::EmptyAlphabet {
                what: format!("event component {k}"),
            });
        }
    }

    let action_radix = MixedRadix::new(raw.actions.iter().map(Vec::len).collect());
    let event_radix = MixedRadix::new(raw.events.iter().map(Vec::len).collect());
    let num_actions = action_radix.size();
    let num_events = event_radix.size();

    check_len("event pmf", num_events, raw.pmf.len())?;
    for (event, &value) in raw.pmf.iter().enumerate() {
        if !(value.is_finite() && value >= 0.0) {
            return Err(GameError::InvalidProbability { event, value });
        }
    }
    let sum: f64 = raw.pmf.iter().sum();
    if (sum - 1.0).abs() > PMF_TOLERANCE {
        return Err(GameError::PmfNotNormalized { sum });
    }

    check_len("utility tables", n, raw.utilities.len())?;
    let mut observed = vec![0.0f64; n];
    for (player, table) in raw.utilities.iter().enumerate() {
        check_len(
            &format!("utility table of player {player}"),
            num_actions * num_events,
            table.len(),
        )?;
        for (flat, &value) in table.iter().enumerate() {
            let (event, action) = (flat / num_actions, flat % num_actions);
            if !value.is_finite() {
                return Err(GameError::NonFiniteUtility {
                    player,
                    action,
                    event,
                });
            }
            if value < 0.0 {
                return Err(GameError::NegativeUtility {
                    player,
                    action,
                    event,
                    value,
                });
            }
            observed[player] = observed[player].max(value);
        }
    }

    let caps = match raw.caps {
        None => observed,
        Some(declared) => {
            check_len("utility caps", n, declared.len())?;
            declared
                .iter()
                .zip(&observed)
                .enumerate()
                .map(|(player, (&cap, &max))| {
                    if max > cap {
                        Err(GameError::UtilityAboveCap {
                            player,
                            value: max,
                            cap,
                        })
                    } else {
                        Ok(max)
                    }
                })
                .collect::<Result<_, _>>()?
        }
    };

    let sampler = WeightedIndex::new(&raw.pmf).map_err(|_| GameError::PmfNotNormalized { sum })?;

    Ok(GameSpec {
        player_names: raw.player_names,
        actions: raw.actions,
        events: raw.events,
        pmf: raw.pmf,
        utilities: raw.utilities,
        caps,
        action_radix,
        event_radix,
        sampler,
    })
}

fn check_len(what: &str, expected: usize, found: usize) -> Result<(), GameError> {
    if expected == found {
        Ok(())
    } else {
        Err(GameError::DimensionMismatch {
            what: what.to_string(),
            expected,
            found,
        })
    }
}

impl GameSpec {
    pub fn num_players(&self) -> usize {
        self.actions.len()
    }

    pub fn player_names(&self) -> &[String] {
        &self.player_names
    }

    pub fn action_names(&self, player: usize) -> &[String] {
        &self.actions[player]
    }

    /// Event alphabet of component `k`; `k = 0` is the manager-only component.
    pub fn event_names(&self, k: usize) -> &[String] {
        &self.events[k]
    }

    pub fn num_actions(&self, player: usize) -> usize {
        self.actions[player].len()
    }

    /// Size of the event alphabet observed by `player`.
    pub fn num_player_events(&self, player: usize) -> usize {
        self.events[player + 1].len()
    }

    pub fn num_joint_actions(&self) -> usize {
        self.action_radix.size()
    }

    pub fn num_joint_events(&self) -> usize {
        self.event_radix.size()
    }

    pub fn action_radix(&self) -> &MixedRadix {
        &self.action_radix
    }

    pub fn event_radix(&self) -> &MixedRadix {
        &self.event_radix
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn prob(&self, event: usize) -> f64 {
        self.pmf[event]
    }

    pub fn caps(&self) -> &[f64] {
        &self.caps
    }

    pub fn cap(&self, player: usize) -> f64 {
        self.caps[player]
    }

    /// True when every event alphabet is a singleton.
    pub fn is_static(&self) -> bool {
        self.events.iter().all(|a| a.len() == 1)
    }

    /// True when no player observes a random event (only the manager may).
    pub fn players_uninformed(&self) -> bool {
        self.events[1..].iter().all(|a| a.len() == 1)
    }

    /// Value `player` observes in joint event `event`.
    #[inline]
    pub fn player_event(&self, event: usize, player: usize) -> usize {
        self.event_radix.digit(event, player + 1)
    }

    #[inline]
    pub fn player_action(&self, action: usize, player: usize) -> usize {
        self.action_radix.digit(action, player)
    }

    /// Joint action with `player`'s component replaced by `beta`.
    #[inline]
    pub fn deviate(&self, action: usize, player: usize, beta: usize) -> usize {
        self.action_radix.replace(action, player, beta)
    }

    /// Unchecked table lookup.
    #[inline]
    pub fn u(&self, player: usize, action: usize, event: usize) -> f64 {
        self.utilities[player][event * self.action_radix.size() + action]
    }

    /// Checked table lookup.
    pub fn utility(&self, player: usize, action: usize, event: usize) -> Result<f64, GameError> {
        if player >= self.num_players() {
            return Err(GameError::IndexOutOfRange {
                what: "player",
                index: player,
                size: self.num_players(),
            });
        }
        if action >= self.num_joint_actions() {
            return Err(GameError::IndexOutOfRange {
                what: "joint action",
                index: action,
                size: self.num_joint_actions(),
            });
        }
        if event >= self.num_joint_events() {
            return Err(GameError::IndexOutOfRange {
                what: "joint event",
                index: event,
                size: self.num_joint_events(),
            });
        }
        Ok(self.u(player, action, event))
    }

    /// Marginal probability that `player` observes `value`.
    pub fn player_event_prob(&self, player: usize, value: usize) -> f64 {
        (0..self.num_joint_events())
            .filter(|&e| self.player_event(e, player) == value)
            .map(|e| self.pmf[e])
            .sum()
    }

    /// Draws one joint event according to the event pmf.
    pub fn sample_event(&self, rng: &mut GameRng) -> usize {
        self.sampler.sample(rng)
    }

    pub fn to_raw(&self) -> RawGame {
        RawGame {
            player_names: self.player_names.clone(),
            actions: self.actions.clone(),
            events: self.events.clone(),
            pmf: self.pmf.clone(),
            utilities: self.utilities.clone(),
            caps: Some(self.caps.clone()),
        }
    }

    /// Joint action label such as `(alpha, beta)`.
    pub fn action_label(&self, action: usize) -> String {
        let parts: Vec<&str> = (0..self.num_players())
            .map(|i| self.actions[i][self.player_action(action, i)].as_str())
            .collect();
        format!("({})", parts.join(", "))
    }

    pub fn event_label(&self, event: usize) -> String {
        let parts: Vec<&str> = (0..self.events.len())
            .map(|k| self.events[k][self.event_radix.digit(event, k)].as_str())
            .collect();
        format!("({})", parts.join(", "))
    }
}

/// Free-function form of [`GameSpec::utility`].
pub fn utility(game: &GameSpec, player: usize, action: usize, event: usize) -> Result<f64, GameError> {
    game.utility(player, action, event)
}

/// Free-function form of [`GameSpec::sample_event`].
pub fn sample_event(game: &GameSpec, rng: &mut GameRng) -> usize {
    game.sample_event(rng)
}

/// Probability mass function over joint actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf(Vec<f64>);

impl JointPmf {
    pub fn new(probs: Vec<f64>) -> Result<Self, GameError> {
        check_simplex(&probs)?;
        Ok(Self(probs))
    }

    /// Clamps round-off negatives and renormalizes; intended for solver output.
    pub fn project(mut probs: Vec<f64>) -> Result<Self, GameError> {
        for p in probs.iter_mut() {
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(GameError::PmfNotNormalized { sum });
        }
        for p in probs.iter_mut() {
            *p /= sum;
        }
        Ok(Self(probs))
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0 / len as f64; len])
    }

    pub fn point_mass(len: usize, at: usize) -> Self {
        let mut v = vec![0.0; len];
        v[at] = 1.0;
        Self(v)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

fn check_simplex(probs: &[f64]) -> Result<(), GameError> {
    for (event, &value) in probs.iter().enumerate() {
        if !(value.is_finite() && value >= 0.0) {
            return Err(GameError::InvalidProbability { event, value });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PMF_TOLERANCE {
        return Err(GameError::PmfNotNormalized { sum });
    }
    Ok(())
}

/// Conditional pmf `Pr[action | event]`, stored row-major by joint event.
///
/// Rows of events with zero probability are identically zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalPolicy {
    num_events: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

impl ConditionalPolicy {
    pub fn new(game: &GameSpec, probs: Vec<f64>) -> Result<Self, GameError> {
        let (ne, na) = (game.num_joint_events(), game.num_joint_actions());
        check_len("conditional policy", ne * na, probs.len())?;
        for event in 0..ne {
            let row = &probs[event * na..(event + 1) * na];
            if game.prob(event) > 0.0 {
                check_simplex(row)?;
            } else if row.iter().any(|&p| p != 0.0) {
                return Err(GameError::InvalidProbability {
                    event,
                    value: row.iter().sum(),
                });
            }
        }
        Ok(Self {
            num_events: ne,
            num_actions: na,
            probs,
        })
    }

    /// Projects each positive-probability row onto the simplex and zeroes the
    /// rest; intended for solver output.
    pub fn project(game: &GameSpec, mut probs: Vec<f64>) -> Result<Self, GameError> {
        let (ne, na) = (game.num_joint_events(), game.num_joint_actions());
        check_len("conditional policy", ne * na, probs.len())?;
        for event in 0..ne {
            let row = &mut probs[event * na..(event + 1) * na];
            if game.prob(event) > 0.0 {
                let projected = JointPmf::project(row.to_vec())?;
                row.copy_from_slice(projected.probs());
            } else {
                row.fill(0.0);
            }
        }
        Ok(Self {
            num_events: ne,
            num_actions: na,
            probs,
        })
    }

    /// The same joint-action pmf on every reachable event.
    pub fn constant(game: &GameSpec, pmf: &JointPmf) -> Result<Self, GameError> {
        check_len("joint pmf", game.num_joint_actions(), pmf.len())?;
        let mut probs = Vec::with_capacity(game.num_joint_events() * pmf.len());
        for event in 0..game.num_joint_events() {
            if game.prob(event) > 0.0 {
                probs.extend_from_slice(pmf.probs());
            } else {
                probs.extend(std::iter::repeat_n(0.0, pmf.len()));
            }
        }
        Ok(Self {
            num_events: game.num_joint_events(),
            num_actions: pmf.len(),
            probs,
        })
    }

    /// Empirical policy from joint `(event, action)` counts laid out like
    /// `probs`. Rows of events never observed stay zero, so the policy is a
    /// valid conditional pmf only on visited rows.
    pub fn from_counts(game: &GameSpec, counts: &[u64]) -> Result<Self, GameError> {
        let (ne, na) = (game.num_joint_events(), game.num_joint_actions());
        check_len("event-action counts", ne * na, counts.len())?;
        let mut probs = vec![0.0; ne * na];
        for event in 0..ne {
            let row = &counts[event * na..(event + 1) * na];
            let total: u64 = row.iter().sum();
            if total > 0 {
                for (p, &c) in probs[event * na..].iter_mut().zip(row) {
                    *p = c as f64 / total as f64;
                }
            }
        }
        Ok(Self {
            num_events: ne,
            num_actions: na,
            probs,
        })
    }

    pub fn num_events(&self) -> usize {
        self.num_events
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn prob(&self, event: usize, action: usize) -> f64 {
        self.probs[event * self.num_actions + action]
    }

    pub fn row(&self, event: usize) -> &[f64] {
        &self.probs[event * self.num_actions..(event + 1) * self.num_actions]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn matches(&self, game: &GameSpec) -> bool {
        self.num_events == game.num_joint_events() && self.num_actions == game.num_joint_actions()
    }
}

/// Expected per-player utility `Σ_ω π[ω] Σ_α Pr[α|ω] û_i(α, ω)`.
pub fn policy_utilities(game: &GameSpec, policy: &ConditionalPolicy) -> Vec<f64> {
    let mut out = vec![0.0; game.num_players()];
    for event in 0..game.num_joint_events() {
        let pe = game.prob(event);
        if pe == 0.0 {
            continue;
        }
        for action in 0..game.num_joint_actions() {
            let w = pe * policy.prob(event, action);
            if w == 0.0 {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += w * game.u(i, action, event);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn mixed_radix_first_digit_most_significant() {
        let r = MixedRadix::new(vec![3, 2]);
        assert_eq!(r.size(), 6);
        assert_eq!(r.encode(&[0, 1]), 1);
        assert_eq!(r.encode(&[2, 0]), 4);
        assert_eq!(r.decode(5), vec![2, 1]);
        assert_eq!(r.replace(5, 0, 0), 1);
    }

    #[test]
    fn fig1_caps_and_lookups() {
        let g = catalog::fig1();
        assert_eq!(g.caps(), &[5.0, 50.0]);
        // (alpha, alpha)
        assert_eq!(utility(&g, 0, 0, 0).unwrap(), 2.0);
        assert_eq!(utility(&g, 1, 0, 0).unwrap(), 50.0);
        assert_eq!(g.action_label(3), "(beta, beta)");
        assert!(matches!(
            utility(&g, 2, 0, 0),
            Err(GameError::IndexOutOfRange { what: "player", .. })
        ));
        assert!(matches!(
            utility(&g, 0, 6, 0),
            Err(GameError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn zero_entry_looks_up_zero() {
        let mut raw = catalog::fig1().to_raw();
        raw.utilities[1][5] = 0.0;
        raw.caps = None;
        let g = validate_game(raw).unwrap();
        assert_eq!(g.utility(1, 5, 0).unwrap(), 0.0);
    }

    #[test]
    fn unnormalized_pmf_is_rejected() {
        let mut raw = catalog::fig1().to_raw();
        raw.pmf = vec![0.9];
        assert!(matches!(
            validate_game(raw),
            Err(GameError::PmfNotNormalized { .. })
        ));
    }

    #[test]
    fn negative_utility_names_the_cell() {
        let mut raw = catalog::fig1().to_raw();
        raw.utilities[0][3] = -1.0;
        assert_eq!(
            validate_game(raw),
            Err(GameError::NegativeUtility {
                player: 0,
                action: 3,
                event: 0,
                value: -1.0
            })
        );
    }

    #[test]
    fn dimension_and_alphabet_errors() {
        let mut raw = catalog::fig1().to_raw();
        raw.utilities[1].pop();
        assert!(matches!(
            validate_game(raw),
            Err(GameError::DimensionMismatch { .. })
        ));

        let mut raw = catalog::fig1().to_raw();
        raw.actions[1].clear();
        assert!(matches!(
            validate_game(raw),
            Err(GameError::EmptyAlphabet { .. })
        ));

        let mut raw = catalog::fig1().to_raw();
        raw.caps = Some(vec![4.0, 50.0]);
        assert!(matches!(
            validate_game(raw),
            Err(GameError::UtilityAboveCap { player: 0, .. })
        ));
    }

    #[test]
    fn loose_caps_are_tightened() {
        let mut raw = catalog::fig1().to_raw();
        raw.caps = Some(vec![100.0, 60.0]);
        let g = validate_game(raw).unwrap();
        assert_eq!(g.caps(), &[5.0, 50.0]);
    }

    #[test]
    fn validation_is_idempotent() {
        let g = catalog::random_game(3, &[2, 3], &[2, 2, 3]);
        let again = validate_game(g.to_raw()).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn degenerate_pmf_always_returns_its_atom() {
        let mut raw = catalog::random_game(1, &[2, 2], &[2, 2, 1]).to_raw();
        raw.pmf = vec![0.0, 0.0, 1.0, 0.0];
        let g = validate_game(raw).unwrap();
        let mut rng = seeded_rng(9);
        assert!((0..1000).all(|_| g.sample_event(&mut rng) == 2));
    }

    #[test]
    fn same_seed_same_events() {
        let g = catalog::random_game(5, &[2, 2], &[2, 2, 2]);
        let draw = |seed| {
            let mut rng = seeded_rng(seed);
            (0..500).map(|_| sample_event(&g, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(42), draw(42));
        assert_ne!(draw(42), draw(43));
    }

    #[test]
    fn uniform_events_have_uniform_frequencies() {
        let mut raw = catalog::random_game(2, &[2, 2], &[1, 2, 2]).to_raw();
        raw.pmf = vec![0.25; 4];
        let g = validate_game(raw).unwrap();
        let mut rng = seeded_rng(42);
        let mut counts = [0usize; 4];
        let n = 1_000_000;
        for _ in 0..n {
            counts[g.sample_event(&mut rng)] += 1;
        }
        // Pearson statistic with 3 degrees of freedom; 16.27 is the 0.999 quantile.
        let expected = n as f64 / 4.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 16.27, "chi2 = {chi2}");
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn conditional_policy_rejects_mass_on_unreachable_rows() {
        let mut raw = catalog::random_game(1, &[2, 2], &[2, 1, 1]).to_raw();
        raw.pmf = vec![1.0, 0.0];
        let g = validate_game(raw).unwrap();
        let ok = ConditionalPolicy::new(&g, vec![0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(ok.is_ok());
        let bad = ConditionalPolicy::new(&g, vec![0.5, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert!(bad.is_err());
    }
}
