//! CE and CCE of the two-player example game: the LP systems, the unique CE
//! and a certification check.

use repgame::catalog::fig1;
use repgame::game::JointPmf;
use repgame::optim::{lp_solve, Sense};
use repgame::static_eq::{build_constraints, certify, expected_utilities, EquilibriumKind};

fn main() -> anyhow::Result<()> {
    let game = fig1();
    for kind in [EquilibriumKind::Ce, EquilibriumKind::Cce] {
        let system = build_constraints(&game, kind)?;
        println!("{kind:?}: {} variables, {} inequality rows", system.num_vars(), system.num_ub());
    }

    let ce = build_constraints(&game, EquilibriumKind::Ce)?;
    let sol = lp_solve(&ce, &vec![0.0; ce.num_vars()], Sense::Max)?;
    let pmf = JointPmf::project(sol.x)?;
    println!("a correlated equilibrium:");
    for (a, p) in pmf.probs().iter().enumerate() {
        println!("  {:<8} {p:.4}", game.action_label(a));
    }
    println!("utilities {:.4?}", expected_utilities(&game, &pmf)?);

    let report = certify(&game, &pmf, EquilibriumKind::Ce)?;
    println!("certified: {} (worst violation {:.2e})", report.satisfied, report.worst_violation);
    Ok(())
}
