//! Turns the manager's action frequencies into a stationary policy and
//! measures how far it is from a CCE.

use std::path::Path;

use repgame::dpp::{extract_empirical_policy, run, EngineConfig};
use repgame::fairness::FairnessFunction;
use repgame::game::policy_utilities;
use repgame::harness::parse_game_file;
use repgame::static_eq::EquilibriumKind;
use repgame::stochastic::best_deviation;

fn main() -> anyhow::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/signals.game");
    let (game, file_phi) = parse_game_file(&path)?;
    let phi = file_phi.unwrap_or_else(|| FairnessFunction::weighted_log([1.0, 1.0]));
    let trace = run(&game, EngineConfig::new(phi, 200.0, 200_000, 3))?;
    let policy = extract_empirical_policy(&trace, &game)?;
    let u = policy_utilities(&game, &policy);
    for e in 0..policy.num_events() {
        let row: Vec<String> = policy.row(e).iter().map(|p| format!("{p:.3}")).collect();
        println!("{:<8} {}", game.event_label(e), row.join(" "));
    }
    for i in 0..game.num_players() {
        let dev = best_deviation(&game, &policy, i, EquilibriumKind::Cce)?;
        println!("player {i}: u = {:.4}, best deviation {:?} earns {:.4}", u[i], dev.plan, dev.value);
    }
    Ok(())
}
