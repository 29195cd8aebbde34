//! Fairness-optimal equilibria under the three supported objectives.

use repgame::catalog::fig1;
use repgame::fairness::FairnessFunction;
use repgame::static_eq::{optimize_static, EquilibriumKind};

fn main() -> anyhow::Result<()> {
    let game = fig1();
    let objectives = [
        ("10 log(1+u1) + log(1+u2)", FairnessFunction::weighted_log([10.0, 1.0])),
        ("u1 + u2", FairnessFunction::linear([1.0, 1.0])),
        ("min(u1, u2, 5)", FairnessFunction::min_with_cap(5.0)),
    ];
    for (label, phi) in &objectives {
        for kind in [EquilibriumKind::Ce, EquilibriumKind::Cce] {
            let opt = optimize_static(&game, phi, kind)?;
            println!(
                "{label:<26} {kind:?}: u = ({:.4}, {:.4}), phi = {:.6}, gap = {:.1e}",
                opt.utilities[0], opt.utilities[1], opt.value, opt.gap
            );
        }
    }
    Ok(())
}
