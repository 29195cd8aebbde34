//! A game with private signals: the compact stochastic CCE system versus
//! the exponentially larger virtual static game over pure strategies.

use repgame::catalog::random_game;
use repgame::fairness::FairnessFunction;
use repgame::game::policy_utilities;
use repgame::static_eq::{build_cce_constraints, optimize_static, EquilibriumKind};
use repgame::stochastic::{
    build_stochastic_cce_constraints, certify_stochastic, complexity_report, optimize_stochastic,
    policy_from_profile_pmf, virtual_static_game,
};

fn main() -> anyhow::Result<()> {
    let game = random_game(3, &[2, 3], &[2, 2, 3]);
    let report = complexity_report(&game);
    println!(
        "stochastic rows = {}, virtual static rows = {}",
        report.stochastic_rows, report.virtual_static_rows
    );
    let stoch = build_stochastic_cce_constraints(&game);
    println!("stochastic system: {} variables", stoch.system.num_vars());

    let phi = FairnessFunction::weighted_log([1.0, 1.0]);
    let direct = optimize_stochastic(&game, &phi, EquilibriumKind::Cce)?;
    println!("direct optimum:  u = {:.4?}, phi = {:.6}", direct.utilities, direct.value);

    let virt = virtual_static_game(&game)?;
    println!(
        "virtual game: {} profiles, {} CCE rows",
        virt.num_profiles(),
        build_cce_constraints(&virt.spec)?.num_ub()
    );
    // Profile distributions only generate a subset of the stochastic CCE set,
    // so this optimum can fall short of the direct one.
    let via = optimize_static(&virt.spec, &phi, EquilibriumKind::Cce)?;
    let policy = policy_from_profile_pmf(&game, &virt, &via.pmf)?;
    println!("virtual optimum: u = {:.4?}, phi = {:.6}", policy_utilities(&game, &policy), via.value);
    let cert = certify_stochastic(&game, &policy, EquilibriumKind::Cce)?;
    println!("generated policy is a stochastic CCE: {}", cert.satisfied);
    Ok(())
}
