//! Seed two players on a small graph and watch opinions spread.

use nig::dynamics::trajectory;
use nig::{initialize, random_graph, Game, GameConfig, StrategyProfile};

fn main() -> nig::Result<()> {
    let g = random_graph(8, 2, 7)?;
    let profile = StrategyProfile::parse("player 0 seeds 0 3\nplayer 1 seeds 3 5\n")?;
    let game = Game::new(GameConfig::new(g.clone(), vec![2, 2], 6))?;

    let x0 = initialize(&g, &profile, game.config().epsilon)?;
    for state in trajectory(&x0, game.gamma(), 6)? {
        let col0: Vec<String> = state.column(0).iter().map(|x| format!("{x:.3}")).collect();
        println!("t={} player 0: {}", state.time(), col0.join(" "));
    }

    let sim = game.utility(&profile)?;
    let closed = game.utility_closed_form(&profile)?;
    println!("payoffs (simulated):   {:?}", sim.payoffs);
    println!("payoffs (closed form): {:?}", closed.payoffs);
    Ok(())
}
