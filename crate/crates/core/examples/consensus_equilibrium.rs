//! Build a consensus-regime equilibrium and confirm it by enumeration.

use nig::{
    consensus_equilibrium, exhaustive_nash_check, random_graph, Game, GameConfig, SolverOptions,
};

fn main() -> nig::Result<()> {
    let g = random_graph(10, 3, 5)?;
    let game = Game::new(GameConfig::new(g, vec![2, 2], 1))?;
    let opts = SolverOptions::consensus();

    let built = consensus_equilibrium(&game, &opts)?;
    print!("{}", built.profile);
    println!("payoffs {:.6?}, verified {}", built.payoffs, built.verified);

    let all = exhaustive_nash_check(&game, &opts)?;
    println!(
        "{} equilibria by enumeration, constructed one among them: {}",
        all.len(),
        all.contains(&built.profile)
    );

    // Unequal budgets can leave the consensus game without any pure equilibrium.
    let uneven = Game::new(GameConfig::new(nig::Graph::cycle(3)?, vec![2, 1], 1))?;
    match consensus_equilibrium(&uneven, &opts) {
        Ok(e) => println!("3-cycle, budgets (2,1): {:?}", e.profile),
        Err(e) => println!("3-cycle, budgets (2,1): {e}"),
    }
    Ok(())
}
