//! Traces the boundary of the CCE utility region along evenly spaced
//! directions and prints its convex hull.

use repgame::catalog::fig1;
use repgame::static_eq::{circle_directions, convex_hull, polytope_silhouette, EquilibriumKind};

fn main() -> anyhow::Result<()> {
    let game = fig1();
    let points = polytope_silhouette(&game, EquilibriumKind::Cce, &circle_directions(64))?;
    for p in points.iter().step_by(8) {
        println!("d = ({:+.3}, {:+.3}) -> u = ({:.4}, {:.4})", p.direction[0], p.direction[1], p.utilities[0], p.utilities[1]);
    }
    let hull = convex_hull(&points.iter().map(|p| p.utilities).collect::<Vec<_>>(), 1e-9);
    println!("hull vertices:");
    for v in hull {
        println!("  ({:.4}, {:.4})", v[0], v[1]);
    }
    Ok(())
}
