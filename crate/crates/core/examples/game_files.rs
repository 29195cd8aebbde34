//! Parses a game file, prints its structure and writes it back as TOML.

use std::path::PathBuf;

use anyhow::Context;
use repgame::harness::{parse_game_file, GameFile};

fn main() -> anyhow::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/signals.game"));
    let (game, phi) = parse_game_file(&path).with_context(|| format!("loading {}", path.display()))?;
    for i in 0..game.num_players() {
        println!(
            "{}: actions {:?}, {} observed values, cap {}",
            game.player_names()[i],
            game.action_names(i),
            game.num_player_events(i),
            game.cap(i)
        );
    }
    println!("{} joint events, static = {}", game.num_joint_events(), game.is_static());
    println!("fairness: {phi:?}");
    println!("---\n{}", GameFile::from_game(&game, phi).to_toml());
    Ok(())
}
