use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decisions::{choose_actions, choose_gamma, choose_theta, dpp_bound_rhs, observed_cells, Candidate};
use super::queues::{update_queues, EngineKind, QueueState, SlotDecision};
use super::DppError;
use crate::fairness::FairnessFunction;
use crate::game::{seeded_rng, ConditionalPolicy, GameRng, GameSpec};

/// Which slots a run keeps full records for. Slot `T` is always recorded.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordPlan {
    /// Every slot up to `T = 10⁵`, every 100th beyond.
    #[default]
    Auto,
    Stride(u64),
    /// Explicit list of `t` values (1-based).
    At(Vec<u64>),
}

impl RecordPlan {
    fn stride(&self, horizon: u64) -> Option<u64> {
        match self {
            Self::Auto if horizon <= 100_000 => Some(1),
            Self::Auto => Some(100),
            Self::Stride(s) => Some((*s).max(1)),
            Self::At(_) => None,
        }
    }

    pub fn records(&self, t: u64, horizon: u64) -> bool {
        if t == horizon {
            return true;
        }
        match (self.stride(horizon), self) {
            (Some(s), _) => t % s == 0,
            (None, Self::At(list)) => list.contains(&t),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub v: f64,
    pub horizon: u64,
    pub seed: u64,
    pub kind: EngineKind,
    pub fairness: FairnessFunction,
    #[serde(default)]
    pub record: RecordPlan,
}

impl EngineConfig {
    pub fn new(fairness: FairnessFunction, v: f64, horizon: u64, seed: u64) -> Self {
        Self {
            v,
            horizon,
            seed,
            kind: EngineKind::General,
            fairness,
            record: RecordPlan::Auto,
        }
    }

    pub fn with_kind(mut self, kind: EngineKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_record(mut self, record: RecordPlan) -> Self {
        self.record = record;
        self
    }

    pub fn validate(&self, game: &GameSpec) -> Result<(), DppError> {
        if !(self.v >= 0.0 && self.v.is_finite()) {
            return Err(DppError::BadV(self.v));
        }
        self.fairness.validate(game.num_players())?;
        if self.kind == EngineKind::Special && !game.players_uninformed() {
            return Err(DppError::SpecialNeedsUninformedPlayers);
        }
        Ok(())
    }
}

/// Running sums over all slots played so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub slots: u64,
    /// Visits of each `(ω, α)`, laid out like a `ConditionalPolicy`.
    pub counts: Vec<u64>,
    pub sum_u: Vec<f64>,
    pub sum_gamma: Vec<f64>,
    pub sum_g: f64,
    /// `Σ_t θ_{i,v}(t)`, indexed `[i][v]`.
    pub sum_theta: Vec<Vec<f64>>,
    /// `Σ_t û_i((β, α_ī(t)), ω(t)) 1{ω_i(t) = v}`, indexed `[i][v·|A_i| + β]`.
    pub sum_dev: Vec<Vec<f64>>,
}

impl Totals {
    fn new(game: &GameSpec) -> Self {
        let n = game.num_players();
        Self {
            slots: 0,
            counts: vec![0; game.num_joint_events() * game.num_joint_actions()],
            sum_u: vec![0.0; n],
            sum_gamma: vec![0.0; n],
            sum_g: 0.0,
            sum_theta: (0..n).map(|i| vec![0.0; game.num_player_events(i)]).collect(),
            sum_dev: (0..n)
                .map(|i| vec![0.0; game.num_player_events(i) * game.num_actions(i)])
                .collect(),
        }
    }

    fn add(&mut self, d: &SlotDecision, num_actions: usize) {
        self.slots += 1;
        self.counts[d.event * num_actions + d.action] += 1;
        self.sum_g += d.g;
        for i in 0..self.sum_u.len() {
            self.sum_u[i] += d.utilities[i];
            self.sum_gamma[i] += d.gamma[i];
            let v = d.observed[i];
            self.sum_theta[i][v] += d.theta[i];
            let na = d.deviations[i].len();
            for (s, x) in self.sum_dev[i][v * na..(v + 1) * na].iter_mut().zip(&d.deviations[i]) {
                *s += x;
            }
        }
    }

    fn mean(&self, v: &[f64]) -> Vec<f64> {
        let t = self.slots.max(1) as f64;
        v.iter().map(|x| x / t).collect()
    }

    pub fn avg_utilities(&self) -> Vec<f64> {
        self.mean(&self.sum_u)
    }

    pub fn avg_gamma(&self) -> Vec<f64> {
        self.mean(&self.sum_gamma)
    }

    pub fn avg_g(&self) -> f64 {
        self.sum_g / self.slots.max(1) as f64
    }

    /// Largest time-average violation of the constraints the queues enforce:
    /// `ū_i ≥ Σ_v θ̄_{i,v}` and `θ̄_{i,v} ≥ ū_{i,v}^(β)` (general engine).
    pub fn max_violation(&self) -> f64 {
        let t = self.slots.max(1) as f64;
        let mut worst: f64 = 0.0;
        for i in 0..self.sum_u.len() {
            let theta_total: f64 = self.sum_theta[i].iter().sum();
            worst = worst.max((theta_total - self.sum_u[i]) / t);
            let nv = self.sum_theta[i].len();
            let na = self.sum_dev[i].len() / nv;
            for v in 0..nv {
                for beta in 0..na {
                    worst = worst.max((self.sum_dev[i][v * na + beta] - self.sum_theta[i][v]) / t);
                }
            }
        }
        worst
    }

    /// Largest time-average violation of `ū_i ≥ Σ_v ū_{i,v}^(β)`, the
    /// constraint the special-case queues enforce.
    pub fn max_unconditional_violation(&self) -> f64 {
        let t = self.slots.max(1) as f64;
        let mut worst: f64 = 0.0;
        for i in 0..self.sum_u.len() {
            let nv = self.sum_theta[i].len();
            let na = self.sum_dev[i].len() / nv;
            for beta in 0..na {
                let dev: f64 = (0..nv).map(|v| self.sum_dev[i][v * na + beta]).sum();
                worst = worst.max((dev - self.sum_u[i]) / t);
            }
        }
        worst
    }
}

/// State after slot `t - 1`: that slot's decision, queues `X(t)` and
/// averages over slots `0..t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: u64,
    pub decision: SlotDecision,
    pub queues: QueueState,
    pub queue_norm: f64,
    pub avg_u: Vec<f64>,
    pub avg_gamma: Vec<f64>,
    pub avg_g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub config: EngineConfig,
    pub records: Vec<TraceRecord>,
    pub totals: Totals,
    pub final_queues: QueueState,
}

impl Trace {
    pub fn is_empty(&self) -> bool {
        self.totals.slots == 0
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// `φ(γ̄(T))`
    pub fn final_phi(&self) -> f64 {
        self.config.fairness.value(&self.totals.avg_gamma())
    }

    /// `‖X(T)‖ / T`
    pub fn final_norm_rate(&self) -> f64 {
        self.final_queues.norm() / self.totals.slots.max(1) as f64
    }
}

/// One drift-plus-penalty manager stepping through slots.
pub struct Engine<'g> {
    game: &'g GameSpec,
    config: EngineConfig,
    state: QueueState,
    totals: Totals,
    rng: GameRng,
}

impl<'g> Engine<'g> {
    pub fn new(game: &'g GameSpec, config: EngineConfig) -> Result<Self, DppError> {
        config.validate(game)?;
        Ok(Self {
            game,
            state: QueueState::new(game, config.kind),
            totals: Totals::new(game),
            rng: seeded_rng(config.seed),
            config,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn state(&self) -> &QueueState {
        &self.state
    }

    pub fn totals(&self) -> &Totals {
        &self.totals
    }

    /// Slots played so far.
    pub fn t(&self) -> u64 {
        self.totals.slots
    }

    pub fn rng(&mut self) -> &mut GameRng {
        &mut self.rng
    }

    /// Chooses `γ`, `θ` and `α` for event `ω` without changing any state.
    pub fn decide(&self, event: usize) -> Result<SlotDecision, DppError> {
        let game = self.game;
        let observed = observed_cells(game, event);
        let gamma = choose_gamma(&self.config.fairness, self.config.v, &self.state.z, game.caps());
        let theta = match self.config.kind {
            EngineKind::General => choose_theta(&self.state, &observed, game),
            EngineKind::Special => vec![0.0; game.num_players()],
        };
        let action = choose_actions(game, &self.state, event)?;
        Ok(realize(game, &self.config.fairness, event, observed, gamma, theta, action))
    }

    /// Updates queues and running sums with a decision.
    pub fn apply(&mut self, decision: &SlotDecision) {
        update_queues(&mut self.state, decision);
        self.totals.add(decision, self.game.num_joint_actions());
    }

    /// Samples `ω(t)`, decides and applies.
    pub fn step(&mut self) -> Result<SlotDecision, DppError> {
        let event = self.game.sample_event(&mut self.rng);
        let d = self.decide(event)?;
        self.apply(&d);
        Ok(d)
    }

    fn record(&self, decision: SlotDecision) -> TraceRecord {
        TraceRecord {
            t: self.totals.slots,
            decision,
            queue_norm: self.state.norm(),
            queues: self.state.clone(),
            avg_u: self.totals.avg_utilities(),
            avg_gamma: self.totals.avg_gamma(),
            avg_g: self.totals.avg_g(),
        }
    }

    /// Plays the remaining slots up to the horizon.
    pub fn run_to_end(mut self) -> Result<Trace, DppError> {
        let horizon = self.config.horizon;
        let mut records = Vec::new();
        while self.t() < horizon {
            let d = self.step()?;
            if self.config.record.records(self.t(), horizon) {
                records.push(self.record(d));
            }
        }
        Ok(Trace {
            config: self.config,
            records,
            totals: self.totals,
            final_queues: self.state,
        })
    }

    /// Drift-plus-penalty right-hand side of a candidate decision at the
    /// current queue state.
    pub fn bound_rhs(&self, b: f64, event: usize, cand: &Candidate) -> f64 {
        dpp_bound_rhs(self.game, &self.state, &self.config.fairness, self.config.v, b, event, cand)
    }

    /// Draws a uniformly random feasible decision.
    pub fn random_candidate(&self, rng: &mut GameRng) -> Candidate {
        let game = self.game;
        let gamma = game.caps().iter().map(|&c| rng.random::<f64>() * c).collect();
        let theta = match self.config.kind {
            EngineKind::General => game.caps().iter().map(|&c| rng.random::<f64>() * c).collect(),
            EngineKind::Special => vec![0.0; game.num_players()],
        };
        Candidate {
            gamma,
            theta,
            action: rng.random_range(0..game.num_joint_actions()),
        }
    }
}

fn realize(
    game: &GameSpec,
    phi: &FairnessFunction,
    event: usize,
    observed: Vec<usize>,
    gamma: Vec<f64>,
    theta: Vec<f64>,
    action: usize,
) -> SlotDecision {
    let n = game.num_players();
    let utilities = (0..n).map(|i| game.u(i, action, event)).collect();
    let deviations = (0..n)
        .map(|i| {
            (0..game.num_actions(i))
                .map(|beta| game.u(i, game.deviate(action, i, beta), event))
                .collect()
        })
        .collect();
    SlotDecision {
        event,
        observed,
        g: phi.value(&gamma),
        gamma,
        theta,
        action,
        utilities,
        deviations,
    }
}

/// Runs one engine for `config.horizon` slots.
pub fn run(game: &GameSpec, config: EngineConfig) -> Result<Trace, DppError> {
    Engine::new(game, config)?.run_to_end()
}

/// Independent runs that differ only in the seed, in parallel.
pub fn run_seeds(game: &GameSpec, config: &EngineConfig, seeds: &[u64]) -> Result<Vec<Trace>, DppError> {
    seeds
        .par_iter()
        .map(|&seed| {
            let mut c = config.clone();
            c.seed = seed;
            run(game, c)
        })
        .collect()
}

/// Empirical `Pr[α | ω]` from the visit counts of a trace.
pub fn extract_empirical_policy(trace: &Trace, game: &GameSpec) -> Result<ConditionalPolicy, DppError> {
    if trace.is_empty() {
        return Err(DppError::EmptyTrace);
    }
    Ok(ConditionalPolicy::from_counts(game, &trace.totals.counts)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{fig1, random_game};
    use crate::game::RawGame;
    use crate::game::validate_game;

    fn log_phi() -> FairnessFunction {
        FairnessFunction::weighted_log([10.0, 1.0])
    }

    #[test]
    fn empty_horizon() {
        let g = fig1();
        let tr = run(&g, EngineConfig::new(log_phi(), 10.0, 0, 1)).unwrap();
        assert!(tr.records.is_empty());
        assert!(matches!(extract_empirical_policy(&tr, &g), Err(DppError::EmptyTrace)));
    }

    #[test]
    fn forced_play() {
        let raw = RawGame::static_game(
            vec![vec!["a".into()], vec!["b".into()]],
            vec![vec![3.0], vec![7.0]],
        );
        let g = validate_game(raw).unwrap();
        for kind in [EngineKind::General, EngineKind::Special] {
            let tr = run(&g, EngineConfig::new(log_phi(), 5.0, 50, 2).with_kind(kind)).unwrap();
            assert_eq!(tr.records.len(), 50);
            for r in &tr.records {
                assert_eq!(r.avg_u, vec![3.0, 7.0]);
            }
            let p = extract_empirical_policy(&tr, &g).unwrap();
            assert_eq!(p.probs(), &[1.0]);
        }
    }

    #[test]
    fn averages_are_prefix_means() {
        let g = random_game(3, &[2, 3], &[2, 2, 1]);
        let tr = run(&g, EngineConfig::new(log_phi(), 20.0, 300, 9)).unwrap();
        let mut su = [0.0; 2];
        let mut sg = 0.0;
        for (k, r) in tr.records.iter().enumerate() {
            assert_eq!(r.t, k as u64 + 1);
            for i in 0..2 {
                su[i] += r.decision.utilities[i];
                assert!((su[i] / r.t as f64 - r.avg_u[i]).abs() < 1e-12);
            }
            sg += r.decision.g;
            assert!((sg / r.t as f64 - r.avg_g).abs() < 1e-12);
            assert!(r.queues.q.iter().chain(r.queues.j.iter().flatten()).all(|&x| x >= 0.0));
            for i in 0..2 {
                assert!(r.decision.gamma[i] >= 0.0 && r.decision.gamma[i] <= g.cap(i));
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let g = random_game(5, &[2, 2], &[1, 2, 2]);
        let c = EngineConfig::new(log_phi(), 50.0, 2000, 4);
        let a = run(&g, c.clone()).unwrap();
        let b = run(&g, c).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            extract_empirical_policy(&a, &g).unwrap(),
            extract_empirical_policy(&b, &g).unwrap()
        );
    }

    #[test]
    fn record_plans() {
        let g = fig1();
        let c = EngineConfig::new(log_phi(), 10.0, 1000, 1);
        let tr = run(&g, c.clone().with_record(RecordPlan::Stride(300))).unwrap();
        let ts: Vec<u64> = tr.records.iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![300, 600, 900, 1000]);
        let tr = run(&g, c.with_record(RecordPlan::At(vec![10, 100]))).unwrap();
        let ts: Vec<u64> = tr.records.iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![10, 100, 1000]);
        assert!(RecordPlan::Auto.records(200, 200_000) && !RecordPlan::Auto.records(250, 200_000));
    }

    #[test]
    fn special_engine_needs_uninformed_players() {
        let g = random_game(1, &[2, 2], &[1, 2, 1]);
        let c = EngineConfig::new(log_phi(), 1.0, 10, 0).with_kind(EngineKind::Special);
        assert!(matches!(Engine::new(&g, c), Err(DppError::SpecialNeedsUninformedPlayers)));
        let c = EngineConfig::new(log_phi(), -1.0, 10, 0);
        assert!(matches!(Engine::new(&g, c), Err(DppError::BadV(_))));
    }

    #[test]
    fn violation_bounded_by_queue_norm() {
        for seed in 0..4 {
            let g = random_game(seed, &[2, 2], &[2, 2, 2]);
            let tr = run(&g, EngineConfig::new(log_phi(), 30.0, 5000, seed)).unwrap();
            let eps = tr.final_norm_rate();
            assert!(tr.totals.max_violation() <= eps + 1e-9);
        }
        let g = fig1();
        let tr = run(&g, EngineConfig::new(log_phi(), 30.0, 5000, 0).with_kind(EngineKind::Special)).unwrap();
        assert!(tr.totals.max_unconditional_violation() <= tr.final_norm_rate() + 1e-9);
    }

    #[test]
    fn chosen_decision_minimizes_the_bound() {
        for kind in [EngineKind::General, EngineKind::Special] {
            let g = fig1();
            let mut e = Engine::new(&g, EngineConfig::new(log_phi(), 40.0, 0, 3).with_kind(kind)).unwrap();
            let mut alt_rng = seeded_rng(99);
            for _ in 0..200 {
                let event = g.sample_event(e.rng());
                let d = e.decide(event).unwrap();
                let chosen = Candidate {
                    gamma: d.gamma.clone(),
                    theta: d.theta.clone(),
                    action: d.action,
                };
                let best = e.bound_rhs(0.0, event, &chosen);
                for _ in 0..20 {
                    let alt = e.random_candidate(&mut alt_rng);
                    let rhs = e.bound_rhs(0.0, event, &alt);
                    assert!(best <= rhs + 1e-9 * (1.0 + rhs.abs()));
                }
                e.apply(&d);
            }
        }
    }
}
