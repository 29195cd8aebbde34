//! The dense LP solver on its own: a small production-planning problem.

use repgame::optim::{lp_solve, LinearSystem, Sense};

fn main() -> anyhow::Result<()> {
    // max 3x + 5y  s.t.  x <= 4, 2y <= 12, 3x + 2y <= 18, x, y >= 0
    let mut system = LinearSystem::new(2);
    system.add_le(vec![1.0, 0.0], 4.0);
    system.add_le(vec![0.0, 2.0], 12.0);
    system.add_le(vec![3.0, 2.0], 18.0);
    let sol = lp_solve(&system, &[3.0, 5.0], Sense::Max)?;
    println!("status {:?}, x = {:?}, objective = {}", sol.status, sol.x, sol.objective);
    Ok(())
}
