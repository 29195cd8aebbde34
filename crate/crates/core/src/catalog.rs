//! Ready-made games: the three-by-two example and seeded random games used by
//! tests, examples and the acceptance suite.

use rand::Rng;

use crate::game::{seeded_rng, validate_game, GameSpec, RawGame};

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|k| format!("{prefix}{k}")).collect()
}

/// Two-player static game: player 1 chooses a row in `{alpha, beta, gamma}`,
/// player 2 a column in `{alpha, beta}`.
///
/// ```text
///            utility 1      utility 2
///           alpha  beta    alpha  beta
///   alpha     2     5        50     1
///   beta      4     2         2     4
///   gamma     3     5         3     0
/// ```
pub fn fig1() -> GameSpec {
    let greek = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let raw = RawGame::static_game(
        vec![
            greek(&["alpha", "beta", "gamma"]),
            greek(&["alpha", "beta"]),
        ],
        vec![
            vec![2.0, 5.0, 4.0, 2.0, 3.0, 5.0],
            vec![50.0, 1.0, 2.0, 4.0, 3.0, 0.0],
        ],
    );
    validate_game(raw).expect("built-in example is valid")
}

/// Random game with integer-valued utilities in `0..=10` and a random
/// full-support joint event pmf.
///
/// `event_sizes` lists one alphabet size per event component, manager-only
/// component first, so its length is `action_sizes.len() + 1`.
pub fn random_game(seed: u64, action_sizes: &[usize], event_sizes: &[usize]) -> GameSpec {
    assert_eq!(event_sizes.len(), action_sizes.len() + 1);
    let mut rng = seeded_rng(seed);
    let n = action_sizes.len();
    let num_actions: usize = action_sizes.iter().product();
    let num_events: usize = event_sizes.iter().product();

    let mut pmf: Vec<f64> = (0..num_events).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = pmf.iter().sum();
    pmf.iter_mut().for_each(|p| *p /= total);
    renormalize(&mut pmf);

    let utilities = (0..n)
        .map(|_| {
            (0..num_actions * num_events)
                .map(|_| rng.random_range(0..=10) as f64)
                .collect()
        })
        .collect();

    let raw = RawGame {
        player_names: names("p", n),
        actions: action_sizes.iter().map(|&k| names("a", k)).collect(),
        events: event_sizes.iter().map(|&k| names("w", k)).collect(),
        pmf,
        utilities,
        caps: None,
    };
    validate_game(raw).expect("random game is valid")
}

/// Random game in which every player observes the full event: all event
/// components carry the same value, drawn from `num_events` outcomes.
pub fn full_information_game(seed: u64, action_sizes: &[usize], num_events: usize) -> GameSpec {
    let n = action_sizes.len();
    let sizes = vec![num_events; n + 1];
    let base = random_game(seed, action_sizes, &sizes);
    let mut raw = base.to_raw();
    raw.caps = None;
    let mut rng = seeded_rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let weights: Vec<f64> = (0..num_events).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let radix = base.event_radix();
    raw.pmf = (0..radix.size())
        .map(|e| {
            let digits = radix.decode(e);
            if digits.iter().all(|&d| d == digits[0]) {
                weights[digits[0]] / total
            } else {
                0.0
            }
        })
        .collect();
    renormalize(&mut raw.pmf);
    validate_game(raw).expect("full-information game is valid")
}

/// Pushes the rounding residue of a normalized vector into its largest entry.
fn renormalize(pmf: &mut [f64]) {
    let sum: f64 = pmf.iter().sum();
    if let Some(max) = pmf
        .iter_mut()
        .max_by(|a, b| a.partial_cmp(b).unwrap())
    {
        *max += 1.0 - sum;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_games_are_reproducible() {
        assert_eq!(random_game(4, &[2, 3], &[1, 2, 2]), random_game(4, &[2, 3], &[1, 2, 2]));
    }

    #[test]
    fn full_information_pmf_lives_on_the_diagonal() {
        let g = full_information_game(1, &[2, 2], 2);
        let radix = g.event_radix();
        for e in 0..g.num_joint_events() {
            let d = radix.decode(e);
            if g.prob(e) > 0.0 {
                assert!(d.iter().all(|&x| x == d[0]));
            }
        }
    }
}
