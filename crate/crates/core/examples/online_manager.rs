//! Runs the drift-plus-penalty manager with both engines and compares the
//! time averages with the offline optimum and the guaranteed bounds.

use repgame::catalog::fig1;
use repgame::dpp::{run, theorem_bounds, EngineConfig, EngineKind, RecordPlan};
use repgame::fairness::FairnessFunction;
use repgame::static_eq::{optimize_static, EquilibriumKind};

fn main() -> anyhow::Result<()> {
    let game = fig1();
    let phi = FairnessFunction::weighted_log([10.0, 1.0]);
    let phi_star = optimize_static(&game, &phi, EquilibriumKind::Cce)?.value;
    let horizon = 50_000;
    for v in [50.0, 200.0] {
        let bounds = theorem_bounds(&game, &phi, v, phi_star, false);
        for kind in [EngineKind::General, EngineKind::Special] {
            let config = EngineConfig::new(phi.clone(), v, horizon, 1)
                .with_kind(kind)
                .with_record(RecordPlan::Stride(10_000));
            let trace = run(&game, config)?;
            let violation = match kind {
                EngineKind::General => trace.totals.max_violation(),
                EngineKind::Special => trace.totals.max_unconditional_violation(),
            };
            println!(
                "V={v:<4} {kind:?}: phi(gamma bar) = {:.4} (>= {:.4}), u bar = {:.3?}, |X|/T = {:.4} (<= {:.4}), max violation = {:.4}",
                trace.final_phi(),
                bounds.utility_lower_bound,
                trace.totals.avg_utilities(),
                trace.final_norm_rate(),
                bounds.envelope(horizon as f64),
                violation,
            );
        }
    }
    println!("offline optimum phi* = {phi_star:.4}");
    Ok(())
}
